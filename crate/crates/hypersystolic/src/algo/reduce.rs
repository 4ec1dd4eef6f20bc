//! The generic two-array reduction F_i = combine over j of f(x_i, z_j),
//! computed with the same replica/back-shift choreography as the matrix
//! product. The x side walks its basis strides backwards so that the
//! replica at stage t holds x[c - s_t] in cell c; the z side walks
//! forwards; cell c then sees the pairing (x_i, z_{i + s_t + u_t'}) for
//! i = c - s_t, which is why a complete basis pair covers every j once.

use crate::bases::BasisPair;
use crate::error::{Error, Result};
use crate::ring::RingMachine;

/// The reduction result plus its movement bill.
#[derive(Debug, Clone, PartialEq)]
pub struct ReduceReport<T> {
    pub values: Vec<T>,
    /// Replica-building events: k for the x side plus k' for the z side.
    pub forward_shifts: usize,
    /// Collector walk-home events: k.
    pub back_shifts: usize,
    pub total_cost: f64,
}

impl<T> ReduceReport<T> {
    pub fn shift_count(&self) -> usize {
        self.forward_shifts + self.back_shifts
    }
}

/// Cells hold `Option<T>` because the accumulators start out empty:
/// `combine` needs no identity element this way. An offset that several
/// prefix-sum pairings would cover is computed only once, by the first
/// pairing in (t, t') order, so redundant bases still reduce exactly.
pub fn pairwise_reduce<T, F, G>(
    machine: &mut RingMachine<Option<T>>,
    x: &[T],
    z: &[T],
    f: F,
    combine: G,
    pair: &BasisPair,
) -> Result<ReduceReport<T>>
where
    T: Clone + PartialEq + std::fmt::Debug,
    F: Fn(&T, &T) -> T,
    G: Fn(&T, &T) -> T,
{
    let n = machine.p();
    if pair.n != n || x.len() != n || z.len() != n {
        return Err(Error::Infeasible(format!(
            "reduction over {} values needs a machine with as many cells \
             and a basis pair for the same range (pair has n={}, x has {}, z has {})",
            n,
            pair.n,
            x.len(),
            z.len()
        )));
    }
    pair.require_complete()?;

    let sa = pair.a.prefix_sums(n);
    let ub = pair.b.prefix_sums(n);
    let k = pair.a.shift_count();
    let kp = pair.b.shift_count();

    // claim each offset for its first covering pairing
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; n];
    for (t, s) in sa.iter().enumerate() {
        for (tp, u) in ub.iter().enumerate() {
            let m = (s + u) % n;
            if owner[m].is_none() {
                owner[m] = Some((t, tp));
            }
        }
    }
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for o in &owner {
        let (t, tp) = o.expect("complete pair covers every offset");
        partners[t].push(tp);
    }

    let log_start = machine.log().len();
    machine.register("x", x.iter().map(|v| vec![Some(v.clone())]).collect())?;
    machine.register("z0", z.iter().map(|v| vec![Some(v.clone())]).collect())?;
    for tp in 1..=kp {
        let prev = machine.array_snapshot(&zname(tp - 1))?;
        machine.register(&zname(tp), prev)?;
        machine.cshift_row(&zname(tp), pair.b.moves()[tp - 1])?;
    }
    for t in 0..=k {
        machine.register_uniform(&yname(t), 1, None)?;
    }

    for t in 0..=k {
        if t > 0 {
            machine.cshift_row("x", -pair.a.moves()[t - 1])?;
        }
        for &tp in &partners[t] {
            machine.map_cells(&[&yname(t), "x", &zname(tp)], |_cell, locals| {
                let contrib = match (&locals[1][0], &locals[2][0]) {
                    (Some(xv), Some(zv)) => f(xv, zv),
                    _ => return Err("operand cell is empty".to_string()),
                };
                locals[0][0] = Some(match locals[0][0].take() {
                    None => contrib,
                    Some(cur) => combine(&cur, &contrib),
                });
                Ok(())
            })?;
        }
    }
    let forward_shifts = machine.log().len() - log_start;

    // walk the collector home: after the shift for stage t it is aligned
    // with bucket t, which merges in
    let collector = yname(k);
    for t in (0..k).rev() {
        machine.cshift_row(&collector, pair.a.moves()[t])?;
        machine.map_cells(&[&collector, &yname(t)], |_cell, locals| {
            let (dst, src) = locals.split_at_mut(1);
            match (dst[0][0].take(), &src[0][0]) {
                (None, None) => {}
                (Some(cur), None) => dst[0][0] = Some(cur),
                (None, Some(add)) => dst[0][0] = Some(add.clone()),
                (Some(cur), Some(add)) => dst[0][0] = Some(combine(&cur, add)),
            }
            Ok(())
        })?;
    }
    let back_shifts = machine.log().len() - log_start - forward_shifts;
    let total_cost: f64 = machine.log().entries[log_start..]
        .iter()
        .map(|e| e.cost)
        .sum();

    let collected = machine.unregister(&collector)?;
    machine.unregister("x")?;
    for tp in 0..=kp {
        machine.unregister(&zname(tp))?;
    }
    for t in 0..k {
        machine.unregister(&yname(t))?;
    }

    let values = collected
        .into_iter()
        .map(|mut cell| {
            cell.swap_remove(0)
                .expect("a complete pair leaves no accumulator empty")
        })
        .collect();

    Ok(ReduceReport {
        values,
        forward_shifts,
        back_shifts,
        total_cost,
    })
}

fn zname(tp: usize) -> String {
    format!("z{tp}")
}

fn yname(t: usize) -> String {
    format!("y{t}")
}
