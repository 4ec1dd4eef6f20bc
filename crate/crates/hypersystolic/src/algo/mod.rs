//! The multiplication algorithms: the p-step systolic product and its
//! hyper-systolic refinement on the ring machine, a 2D torus version of
//! Cannon's method, the two broadcast-based 2D walkthroughs they descend
//! from, and the generic two-array reduction.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::layout::{
    collect_columns, distribute_columns, preshift_b, skew_columns, unskew_columns,
    DistributedMatrix, LayoutTag,
};
use crate::matrix::{Matrix, RingScalar};
use crate::ring::{RingMachine, ShiftEntry};

mod cannon;
mod grid2d;
mod reduce;

pub use cannon::cannon_matmul;
pub use grid2d::{
    semi_hyper_systolic_2d, semi_hyper_systolic_2d_with_stats, semi_systolic_2d,
    semi_systolic_2d_with_stats, Grid2dStats,
};
pub use reduce::{pairwise_reduce, ReduceReport};

/// Factorization p = K * Ktilde driving the hyper-systolic schedule: A
/// moves in strides of K, each stride is reused for K accumulation
/// passes, and the whole sweep repeats Ktilde times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsParams {
    p: usize,
    k: usize,
    ktilde: usize,
}

impl HsParams {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if k == 0 || p == 0 || p % k != 0 {
            return Err(Error::BadFactor { k, p });
        }
        Ok(HsParams {
            p,
            k,
            ktilde: p / k,
        })
    }

    /// The divisor of p closest to sqrt(p), which minimizes K + Ktilde.
    pub fn balanced(p: usize) -> Result<Self> {
        Self::new(p, crate::bases::balanced_factor(p))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ktilde(&self) -> usize {
        self.ktilde
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoKind {
    Systolic,
    Hyper,
    Cannon,
    Semi2d,
    SemiHyper2d,
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AlgoKind::Systolic => "systolic",
            AlgoKind::Hyper => "hyper",
            AlgoKind::Cannon => "cannon",
            AlgoKind::Semi2d => "semi2d",
            AlgoKind::SemiHyper2d => "semihyper2d",
        };
        f.write_str(name)
    }
}

/// Shift events per phase of a run. Registration, local compute and the
/// final unskew read are not shifts and never show up here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseCounts {
    pub preshift: usize,
    pub main: usize,
    pub back: usize,
}

impl PhaseCounts {
    pub fn total(&self) -> usize {
        self.preshift + self.main + self.back
    }
}

/// Two ways of counting the same run. `PaperWholeMatrix` is the headline
/// convention: the grouped pre-shift of B counts as one whole-matrix
/// movement no matter how many row-group events it took (even zero, for
/// K = 1 the phase is present but empty). `RawEvents` is the literal
/// number of logged shift events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountConvention {
    PaperWholeMatrix,
    RawEvents,
}

/// Everything a run hands back besides machine state: the product, the
/// shift accounting under both conventions, and the work done.
#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub algo: AlgoKind,
    pub p: usize,
    pub k: usize,
    pub ktilde: usize,
    pub result: Matrix<T>,
    pub phases: PhaseCounts,
    /// Literal shift events (ShiftLog length delta over the run).
    pub shift_count: usize,
    /// Whole-matrix convention count; equals K + Ktilde - 1 for the
    /// hyper-systolic run and p - 1 for the plain systolic one.
    pub shift_count_paper: usize,
    /// Summed cost of the run's shift events under the machine's model.
    pub total_cost: f64,
    /// Shift events per array name.
    pub per_array_counts: BTreeMap<String, usize>,
    /// Multiply-accumulate operations performed (p^3 for a full run).
    pub matmul_flops: usize,
}

impl<T> RunReport<T> {
    pub fn csv_header() -> &'static str {
        "algo,p,K,Ktilde,shift_count_paper,shift_count_raw,total_cost,correct"
    }

    pub fn csv_row(&self, correct: bool) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.algo,
            self.p,
            self.k,
            self.ktilde,
            self.shift_count_paper,
            self.shift_count,
            self.total_cost,
            correct
        )
    }
}

pub fn complexity_counts<T>(report: &RunReport<T>, convention: CountConvention) -> usize {
    match convention {
        CountConvention::PaperWholeMatrix => report.shift_count_paper,
        CountConvention::RawEvents => report.shift_count,
    }
}

fn expect_square<T>(m: &Matrix<T>, p: usize) -> Result<()> {
    if m.rows() != p || m.cols() != p {
        return Err(Error::WrongSize {
            expected_rows: p,
            expected_cols: p,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

/// Tally a freshly appended slice of the shift log into report fields.
fn log_tally(entries: &[ShiftEntry]) -> (usize, f64, BTreeMap<String, usize>) {
    let mut per_array = BTreeMap::new();
    for e in entries {
        *per_array.entry(e.array.clone()).or_insert(0) += 1;
    }
    let cost = entries.iter().map(|e| e.cost).sum();
    (entries.len(), cost, per_array)
}

/// The baseline p-step product. Both operands are column-skewed; step t
/// (zero-based) multiplies B's slot t into every C slot, reading A at a
/// local slot offset of -t, then moves A one cell down-ring. The shift
/// after the last step would be a no-op for the result and is skipped, so
/// A moves exactly p - 1 times.
pub fn systolic_matmul<T: RingScalar>(
    machine: &mut RingMachine<T>,
    a: &Matrix<T>,
    b: &Matrix<T>,
) -> Result<RunReport<T>> {
    let p = machine.p();
    expect_square(a, p)?;
    expect_square(b, p)?;
    let log_start = machine.log().len();

    let mut da = distribute_columns(machine, a, "a")?;
    let mut db = distribute_columns(machine, b, "b")?;
    skew_columns(machine, &mut da)?;
    skew_columns(machine, &mut db)?;
    machine.register_uniform("c", p, T::zero())?;

    let mut flops = 0usize;
    for t in 0..p {
        machine.map_cells(&["c", "a", "b"], |_cell, locals| {
            let (c_loc, ab) = locals.split_at_mut(1);
            let c_loc = &mut c_loc[0];
            for l in 0..p {
                let src = (l + p - t) % p;
                c_loc[l] = c_loc[l].clone() + ab[0][src].clone() * ab[1][t].clone();
            }
            Ok(())
        })?;
        flops += p * p;
        if t + 1 < p {
            machine.cshift_row("a", 1)?;
        }
    }

    let mut dc = DistributedMatrix {
        name: "c".to_string(),
        rows: p,
        cols: p,
        layout: LayoutTag::ColumnSkew,
    };
    unskew_columns(machine, &mut dc)?;
    let result = collect_columns(machine, &dc)?;
    machine.unregister("a")?;
    machine.unregister("b")?;
    machine.unregister("c")?;

    let (shift_count, total_cost, per_array_counts) =
        log_tally(&machine.log().entries[log_start..]);
    Ok(RunReport {
        algo: AlgoKind::Systolic,
        p,
        k: 1,
        ktilde: p,
        result,
        phases: PhaseCounts {
            preshift: 0,
            main: shift_count,
            back: 0,
        },
        shift_count,
        shift_count_paper: shift_count,
        total_cost,
        per_array_counts,
        matmul_flops: flops,
    })
}

fn c_name(l: usize) -> String {
    format!("c{l}")
}

/// The hyper-systolic product. B is pre-shifted so that slot-row l sits
/// l mod K cells up-ring; A then only needs strides of K, each reused for
/// K accumulation passes into separate intermediate arrays c1..cK; the
/// back phase walks the intermediates home one neighbour hop at a time
/// and sums them into c1. Raw event count is (K-1) + (Ktilde-1) + (K-1);
/// the whole-matrix convention books the pre-shift as 1 for K + Ktilde - 1.
pub fn hyper_systolic_matmul<T: RingScalar>(
    machine: &mut RingMachine<T>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: HsParams,
) -> Result<RunReport<T>> {
    let p = machine.p();
    if params.p() != p {
        return Err(Error::Infeasible(format!(
            "params are for p={} but the machine has {} cells",
            params.p(),
            p
        )));
    }
    expect_square(a, p)?;
    expect_square(b, p)?;
    let k = params.k();
    let ktilde = params.ktilde();
    let log_start = machine.log().len();

    let mut da = distribute_columns(machine, a, "a")?;
    let mut db = distribute_columns(machine, b, "b")?;
    skew_columns(machine, &mut da)?;
    skew_columns(machine, &mut db)?;
    for l in 1..=k {
        machine.register_uniform(&c_name(l), p, T::zero())?;
    }

    preshift_b(machine, &mut db, k)?;
    let after_preshift = machine.log().len();

    let mut flops = 0usize;
    for j in 1..=ktilde {
        for l in 1..=k {
            // the B slot consumed by this pass; the A read offset must
            // match it exactly even though A has only moved (j-1)*K cells
            let m0 = (j - 1) * k + (l - 1);
            let name = c_name(l);
            machine.map_cells(&[&name, "a", "b"], |_cell, locals| {
                let (c_loc, ab) = locals.split_at_mut(1);
                let c_loc = &mut c_loc[0];
                for n0 in 0..p {
                    let src = (n0 + p - m0) % p;
                    c_loc[n0] = c_loc[n0].clone() + ab[0][src].clone() * ab[1][m0].clone();
                }
                Ok(())
            })?;
            flops += p * p;
        }
        if j < ktilde {
            machine.cshift_row("a", k as i64)?;
        }
    }
    let after_main = machine.log().len();

    // fold cK, cK-1, ... into c1, one +1 hop between merges; the bucket
    // for pass l needs exactly l-1 hops to reach its owner cell
    for step in 1..k {
        let src = c_name(k - step + 1);
        let dst = c_name(k - step);
        machine.cshift_row(&src, 1)?;
        machine.map_cells(&[&dst, &src], |_cell, locals| {
            let (d, s) = locals.split_at_mut(1);
            for n0 in 0..p {
                d[0][n0] = d[0][n0].clone() + s[0][n0].clone();
            }
            Ok(())
        })?;
    }
    let log_end = machine.log().len();

    let mut dc = DistributedMatrix {
        name: c_name(1),
        rows: p,
        cols: p,
        layout: LayoutTag::ColumnSkew,
    };
    unskew_columns(machine, &mut dc)?;
    let result = collect_columns(machine, &dc)?;
    machine.unregister("a")?;
    machine.unregister("b")?;
    for l in 1..=k {
        machine.unregister(&c_name(l))?;
    }

    let (shift_count, total_cost, per_array_counts) =
        log_tally(&machine.log().entries[log_start..]);
    let phases = PhaseCounts {
        preshift: after_preshift - log_start,
        main: after_main - after_preshift,
        back: log_end - after_main,
    };
    Ok(RunReport {
        algo: AlgoKind::Hyper,
        p,
        k,
        ktilde,
        result,
        phases,
        shift_count,
        // the pre-shift phase is one whole-matrix movement by convention,
        // present even when K = 1 leaves it without physical events
        shift_count_paper: 1 + phases.main + phases.back,
        total_cost,
        per_array_counts,
        matmul_flops: flops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{hyper_shift_count, hyper_shift_count_raw, systolic_shift_count};
    use crate::matrix::{approx_equal, naive_multiply};
    use crate::ring::CostModel;
    use proptest::prelude::*;

    fn machine_of(p: usize) -> RingMachine<i64> {
        RingMachine::new(p, CostModel::Constant).unwrap()
    }

    fn seeded(p: usize, salt: i64) -> Matrix<i64> {
        // cheap deterministic fill, values in -9..=9
        Matrix::from_vec(
            p,
            p,
            (0..p * p)
                .map(|i| ((i as i64 * 7 + salt * 13 + 5) % 19) - 9)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn systolic_matches_oracle_p4() {
        let mut m = machine_of(4);
        let a = seeded(4, 1);
        let b = seeded(4, 2);
        let report = systolic_matmul(&mut m, &a, &b).unwrap();
        assert_eq!(report.result, naive_multiply(&a, &b).unwrap());
        assert_eq!(report.shift_count, 3);
        assert_eq!(report.shift_count_paper, 3);
        assert_eq!(report.phases, PhaseCounts { preshift: 0, main: 3, back: 0 });
        assert_eq!(report.per_array_counts.get("a"), Some(&3));
        assert_eq!(report.per_array_counts.len(), 1);
        assert_eq!(report.matmul_flops, 64);
        assert!(m.names().is_empty(), "run must clean up after itself");
    }

    #[test]
    fn systolic_single_cell_is_scalar_product() {
        let mut m = machine_of(1);
        let a = Matrix::from_vec(1, 1, vec![7]).unwrap();
        let b = Matrix::from_vec(1, 1, vec![-3]).unwrap();
        let report = systolic_matmul(&mut m, &a, &b).unwrap();
        assert_eq!(report.result.at(1, 1), &-21);
        assert_eq!(report.shift_count, 0);
        assert_eq!(report.total_cost, 0.0);
    }

    #[test]
    fn systolic_rejects_wrong_shape() {
        let mut m = machine_of(4);
        let a = Matrix::<i64>::zeros(3, 4);
        let b = Matrix::<i64>::zeros(4, 4);
        assert!(matches!(
            systolic_matmul(&mut m, &a, &b),
            Err(Error::WrongSize { .. })
        ));
    }

    #[test]
    fn hyper_matches_oracle_p4_k2() {
        let mut m = machine_of(4);
        let a = seeded(4, 3);
        let b = seeded(4, 4);
        let params = HsParams::new(4, 2).unwrap();
        let report = hyper_systolic_matmul(&mut m, &a, &b, params).unwrap();
        assert_eq!(report.result, naive_multiply(&a, &b).unwrap());
        assert_eq!(report.shift_count, 3);
        assert_eq!(report.shift_count_paper, 3);
        assert_eq!(report.phases, PhaseCounts { preshift: 1, main: 1, back: 1 });
        assert_eq!(report.per_array_counts.get("b"), Some(&1));
        assert_eq!(report.per_array_counts.get("a"), Some(&1));
        assert_eq!(report.per_array_counts.get("c2"), Some(&1));
        assert_eq!(report.matmul_flops, 64);
        assert!(m.names().is_empty());
    }

    #[test]
    fn hyper_matches_oracle_for_every_divisor_of_12() {
        let p = 12;
        let a = seeded(p, 5);
        let b = seeded(p, 6);
        let want = naive_multiply(&a, &b).unwrap();
        for k in [1, 2, 3, 4, 6, 12] {
            let mut m = machine_of(p);
            let params = HsParams::new(p, k).unwrap();
            let report = hyper_systolic_matmul(&mut m, &a, &b, params).unwrap();
            assert_eq!(report.result, want, "K={k}");
            assert_eq!(
                report.shift_count,
                hyper_shift_count_raw(p, k).unwrap(),
                "raw count, K={k}"
            );
            assert_eq!(
                report.shift_count_paper,
                hyper_shift_count(p, k).unwrap(),
                "whole-matrix count, K={k}"
            );
        }
    }

    #[test]
    fn hyper_k1_degenerates_to_systolic_flow() {
        let p = 5;
        let a = seeded(p, 7);
        let b = seeded(p, 8);
        let mut m = machine_of(p);
        let report =
            hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(p, 1).unwrap()).unwrap();
        assert_eq!(report.result, naive_multiply(&a, &b).unwrap());
        // all movement is A strides of 1, like the plain algorithm
        assert_eq!(report.shift_count, systolic_shift_count(p));
        assert_eq!(report.per_array_counts.get("a"), Some(&(p - 1)));
        // ... but the empty pre-shift phase still books as 1
        assert_eq!(report.shift_count_paper, p);
    }

    #[test]
    fn hyper_phase_log_is_strictly_partitioned() {
        // every logged event belongs to exactly one phase and touches the
        // array that phase is allowed to move
        let p = 12;
        let k = 4;
        let mut m = machine_of(p);
        let a = seeded(p, 9);
        let b = seeded(p, 10);
        let start = m.log().len();
        let report =
            hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(p, k).unwrap()).unwrap();
        let entries = &m.log().entries[start..];
        assert_eq!(entries.len(), report.phases.total());
        let (pre, rest) = entries.split_at(report.phases.preshift);
        let (main, back) = rest.split_at(report.phases.main);
        assert!(pre.iter().all(|e| e.array == "b" && e.stride < 0));
        assert!(main.iter().all(|e| e.array == "a" && e.stride == k as i64));
        assert!(back.iter().all(|e| e.array.starts_with('c') && e.stride == 1));
    }

    #[test]
    fn hyper_rejects_bad_factor_and_foreign_params() {
        assert!(matches!(HsParams::new(4, 3), Err(Error::BadFactor { .. })));
        let mut m = machine_of(4);
        let a = seeded(4, 1);
        let b = seeded(4, 2);
        let params = HsParams::new(6, 2).unwrap();
        assert!(matches!(
            hyper_systolic_matmul(&mut m, &a, &b, params),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn balanced_params_pick_divisor_near_root() {
        assert_eq!(HsParams::balanced(16).unwrap().k(), 4);
        assert_eq!(HsParams::balanced(12).unwrap().k(), 3);
        assert_eq!(HsParams::balanced(1).unwrap().k(), 1);
    }

    #[test]
    fn convention_fixtures() {
        let mut m = machine_of(4);
        let a = seeded(4, 11);
        let b = seeded(4, 12);
        let hyper =
            hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(4, 2).unwrap()).unwrap();
        assert_eq!(complexity_counts(&hyper, CountConvention::PaperWholeMatrix), 3);
        let mut m16 = machine_of(16);
        let a16 = seeded(16, 13);
        let b16 = seeded(16, 14);
        let hyper16 =
            hyper_systolic_matmul(&mut m16, &a16, &b16, HsParams::new(16, 4).unwrap()).unwrap();
        assert_eq!(
            complexity_counts(&hyper16, CountConvention::PaperWholeMatrix),
            7
        );
        let mut ms = machine_of(4);
        let sys = systolic_matmul(&mut ms, &a, &b).unwrap();
        assert_eq!(complexity_counts(&sys, CountConvention::PaperWholeMatrix), 3);
        assert_eq!(complexity_counts(&sys, CountConvention::RawEvents), 3);
    }

    #[test]
    fn float_runs_stay_close_to_oracle() {
        let p = 6;
        let a = Matrix::from_vec(p, p, (0..36).map(|i| (i as f64) * 0.25 - 4.0).collect())
            .unwrap();
        let b = Matrix::from_vec(p, p, (0..36).map(|i| 2.5 - (i as f64) * 0.125).collect())
            .unwrap();
        let want = naive_multiply(&a, &b).unwrap();
        let mut m = RingMachine::new(p, CostModel::Constant).unwrap();
        let sys = systolic_matmul(&mut m, &a, &b).unwrap();
        assert!(approx_equal(&sys.result, &want, 1e-12));
        let hyp =
            hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(p, 2).unwrap()).unwrap();
        assert!(approx_equal(&hyp.result, &want, 1e-12));
    }

    #[test]
    fn csv_row_shape() {
        let mut m = machine_of(4);
        let a = seeded(4, 15);
        let b = seeded(4, 16);
        let report =
            hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(4, 2).unwrap()).unwrap();
        assert_eq!(
            RunReport::<i64>::csv_header(),
            "algo,p,K,Ktilde,shift_count_paper,shift_count_raw,total_cost,correct"
        );
        assert_eq!(report.csv_row(true), "hyper,4,2,2,3,3,3,true");
    }

    proptest! {
        #[test]
        fn prop_hyper_equals_naive(p in 1usize..=9, salt in 0i64..1000) {
            let a = seeded(p, salt);
            let b = seeded(p, salt + 1);
            let want = naive_multiply(&a, &b).unwrap();
            for k in 1..=p {
                if p % k != 0 { continue; }
                let mut m = machine_of(p);
                let report =
                    hyper_systolic_matmul(&mut m, &a, &b, HsParams::new(p, k).unwrap()).unwrap();
                prop_assert_eq!(&report.result, &want);
            }
            let mut m = machine_of(p);
            let sys = systolic_matmul(&mut m, &a, &b).unwrap();
            prop_assert_eq!(&sys.result, &want);
        }
    }
}
