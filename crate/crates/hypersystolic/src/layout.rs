//! Moving matrices on and off the ring, and the two storage layouts the
//! multiplication algorithms use.
//!
//! A `p x p` matrix lives on `p` cells one column per cell: cell `i`
//! (0-based) holds column `i` as its local array, slot `l` = row `l`. That
//! is `PlainColumns`. `ColumnSkew` rotates each cell's column locally by
//! the cell index, so slot `l` of cell `i` holds entry
//! `m[(l + i) mod p][i]` and the matrix diagonal sits in slot 0 of every
//! cell. The skew is pure re-addressing (no inter-cell traffic), which is
//! why `skew_columns` adds nothing to the shift log.
//!
//! `Preshifted { k }` marks a column-skewed array whose local slot-rows
//! have additionally been rotated along the ring: slot-row `l` by stride
//! `-(l mod k)`, i.e. moved `l mod k` cells toward higher indices. Grouping
//! the slot-rows by `l mod k` makes this `k - 1` shift events.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, RingScalar};
use crate::ring::RingMachine;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutTag {
    PlainColumns,
    ColumnSkew,
    Preshifted { k: usize },
}

impl fmt::Display for LayoutTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutTag::PlainColumns => write!(f, "plain-columns"),
            LayoutTag::ColumnSkew => write!(f, "column-skew"),
            LayoutTag::Preshifted { k } => write!(f, "preshifted(k={k})"),
        }
    }
}

/// Bookkeeping for a matrix that currently lives on a machine. The data
/// itself is in the machine's array; this remembers what shape it came
/// from and which layout its slots are in right now.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributedMatrix {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub layout: LayoutTag,
}

fn require_layout(dm: &DistributedMatrix, expected: LayoutTag) -> Result<()> {
    if dm.layout != expected {
        return Err(Error::WrongLayout {
            name: dm.name.clone(),
            expected: expected.to_string(),
            found: dm.layout.to_string(),
        });
    }
    Ok(())
}

/// Put a `p x p` matrix onto the machine, one column per cell.
pub fn distribute_columns<T: RingScalar>(
    machine: &mut RingMachine<T>,
    m: &Matrix<T>,
    name: &str,
) -> Result<DistributedMatrix> {
    let p = machine.p();
    if m.rows() != p || m.cols() != p {
        return Err(Error::WrongSize {
            expected_rows: p,
            expected_cols: p,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let per_cell: Vec<Vec<T>> = (1..=p)
        .map(|col| (1..=p).map(|row| m.at(row, col).clone()).collect())
        .collect();
    machine.register(name, per_cell)?;
    Ok(DistributedMatrix {
        name: name.to_string(),
        rows: p,
        cols: p,
        layout: LayoutTag::PlainColumns,
    })
}

/// Read a plain-columns matrix back off the machine.
pub fn collect_columns<T: RingScalar>(
    machine: &RingMachine<T>,
    dm: &DistributedMatrix,
) -> Result<Matrix<T>> {
    require_layout(dm, LayoutTag::PlainColumns)?;
    let p = machine.p();
    let mut out = Matrix::zeros(dm.rows, dm.cols);
    for col in 1..=p {
        let local = machine.local(col, &dm.name)?;
        if local.len() != dm.rows {
            return Err(Error::WrongSize {
                expected_rows: dm.rows,
                expected_cols: dm.cols,
                rows: local.len(),
                cols: p,
            });
        }
        for (l, v) in local.iter().enumerate() {
            out.set_at(l + 1, col, v.clone());
        }
    }
    Ok(out)
}

/// Plain columns -> column skew: each cell rotates its column up by its
/// own index, putting the diagonal entry in slot 0 everywhere.
pub fn skew_columns<T: RingScalar>(
    machine: &mut RingMachine<T>,
    dm: &mut DistributedMatrix,
) -> Result<()> {
    require_layout(dm, LayoutTag::PlainColumns)?;
    machine.map_cells(&[&dm.name], |cell, locals| {
        locals[0].rotate_left(cell - 1);
        Ok(())
    })?;
    dm.layout = LayoutTag::ColumnSkew;
    Ok(())
}

/// Column skew -> plain columns.
pub fn unskew_columns<T: RingScalar>(
    machine: &mut RingMachine<T>,
    dm: &mut DistributedMatrix,
) -> Result<()> {
    require_layout(dm, LayoutTag::ColumnSkew)?;
    machine.map_cells(&[&dm.name], |cell, locals| {
        locals[0].rotate_right(cell - 1);
        Ok(())
    })?;
    dm.layout = LayoutTag::PlainColumns;
    Ok(())
}

/// The B-operand preparation for the hyper-systolic multiply: starting
/// from column skew, slot-row `l` moves `l mod k` cells toward higher
/// indices (ring stride `-(l mod k)`). Slot-rows sharing a residue move
/// together, so this logs `k - 1` shift events of `p / k` slots each.
pub fn preshift_b<T: RingScalar>(
    machine: &mut RingMachine<T>,
    dm: &mut DistributedMatrix,
    k: usize,
) -> Result<()> {
    require_layout(dm, LayoutTag::ColumnSkew)?;
    let p = machine.p();
    if k == 0 || p % k != 0 {
        return Err(Error::BadFactor { k, p });
    }
    for d in 1..k {
        let slots: Vec<usize> = (0..p).filter(|l| l % k == d).collect();
        machine.cshift_row_slots(&dm.name, &slots, -(d as i64))?;
    }
    dm.layout = LayoutTag::Preshifted { k };
    Ok(())
}

/// Undo `preshift_b`, returning the array to plain column skew.
pub fn undo_preshift<T: RingScalar>(
    machine: &mut RingMachine<T>,
    dm: &mut DistributedMatrix,
) -> Result<()> {
    let k = match dm.layout {
        LayoutTag::Preshifted { k } => k,
        other => {
            return Err(Error::WrongLayout {
                name: dm.name.clone(),
                expected: "preshifted(k=...)".to_string(),
                found: other.to_string(),
            })
        }
    };
    let p = machine.p();
    for d in 1..k {
        let slots: Vec<usize> = (0..p).filter(|l| l % k == d).collect();
        machine.cshift_row_slots(&dm.name, &slots, d as i64)?;
    }
    dm.layout = LayoutTag::ColumnSkew;
    Ok(())
}
