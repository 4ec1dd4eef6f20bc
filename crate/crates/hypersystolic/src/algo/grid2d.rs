//! The 2D grid walkthroughs the ring algorithms are derived from. All
//! three matrices live column-skewed on an s x s grid; in each step one
//! grid row broadcasts its B elements down the columns and every cell
//! multiplies into C. These exist as executable references: broadcasts
//! are counted as their own event kind, never as ring shifts.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, RingScalar};

/// Step accounting for the grid walkthroughs. `broadcasts` counts one
/// per step (one grid row talking to all columns at once).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Grid2dStats {
    pub broadcasts: usize,
    pub a_h_shift_steps: usize,
    pub a_v_shift_steps: usize,
    pub b_preshift_rows: usize,
    pub c_back_shifts: usize,
}

/// Column-skew a matrix onto the grid: cell (r, c) holds m[(r+c) mod s][c],
/// so the diagonal sits in grid row 0.
fn skew_grid<T: RingScalar>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let s = m.rows();
    (0..s)
        .map(|r| (0..s).map(|c| m.get0((r + c) % s, c).clone()).collect())
        .collect()
}

fn unskew_grid<T: RingScalar>(g: &[Vec<T>]) -> Matrix<T> {
    let s = g.len();
    let mut out = Matrix::zeros(s, s);
    for (r, row) in g.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            out.set0((r + c) % s, c, v.clone());
        }
    }
    out
}

/// Data moves toward lower column indices.
fn shift_left_by<T>(grid: &mut [Vec<T>], by: usize) {
    let s = grid.len();
    if s == 0 {
        return;
    }
    for row in grid.iter_mut() {
        row.rotate_left(by % s);
    }
}

/// Data moves toward higher row indices.
fn shift_down<T>(grid: &mut Vec<Vec<T>>) {
    grid.rotate_right(1);
}

fn check_inputs<T>(s: usize, a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if s == 0 {
        return Err(Error::EmptyRing);
    }
    super::expect_square(a, s)?;
    super::expect_square(b, s)?;
    Ok(())
}

pub fn semi_systolic_2d<T: RingScalar>(
    grid_side: usize,
    a: &Matrix<T>,
    b: &Matrix<T>,
) -> Result<Matrix<T>> {
    Ok(semi_systolic_2d_with_stats(grid_side, a, b)?.0)
}

/// s steps; step t broadcasts grid row t of B down the columns, every
/// cell accumulates its A element times the broadcast value into C, and
/// A then moves left one and down one. B and C never move. The skews
/// make the indices meet: cell (r, c) sees A[(r+c) mod s][(c+t) mod s]
/// against B[(c+t) mod s][c] and owns C[(r+c) mod s][c].
pub fn semi_systolic_2d_with_stats<T: RingScalar>(
    grid_side: usize,
    a: &Matrix<T>,
    b: &Matrix<T>,
) -> Result<(Matrix<T>, Grid2dStats)> {
    let s = grid_side;
    check_inputs(s, a, b)?;
    let mut ag = skew_grid(a);
    let bg = skew_grid(b);
    let mut cg: Vec<Vec<T>> = vec![vec![T::zero(); s]; s];
    let mut stats = Grid2dStats::default();

    for t in 0..s {
        let bcast: Vec<T> = bg[t].clone();
        stats.broadcasts += 1;
        for r in 0..s {
            for c in 0..s {
                cg[r][c] = cg[r][c].clone() + ag[r][c].clone() * bcast[c].clone();
            }
        }
        // literal schedule: A moves after every step, the last included,
        // ending up back where it started
        shift_left_by(&mut ag, 1);
        stats.a_h_shift_steps += 1;
        shift_down(&mut ag);
        stats.a_v_shift_steps += 1;
    }

    Ok((unskew_grid(&cg), stats))
}

pub fn semi_hyper_systolic_2d<T: RingScalar>(
    grid_side: usize,
    a: &Matrix<T>,
    b: &Matrix<T>,
    k: usize,
) -> Result<Matrix<T>> {
    Ok(semi_hyper_systolic_2d_with_stats(grid_side, a, b, k)?.0)
}

/// The grouped-shift variant: B's grid row r is pre-shifted r mod K to
/// the right, after which A's horizontal stride-K move is only needed
/// every K-th step (the vertical unit move stays per-step). The step-t
/// products belong to the C element t mod K columns to the left, so they
/// collect in auxiliary array number t mod K; the wrap-up walks those
/// arrays left one hop at a time, merging as it goes.
pub fn semi_hyper_systolic_2d_with_stats<T: RingScalar>(
    grid_side: usize,
    a: &Matrix<T>,
    b: &Matrix<T>,
    k: usize,
) -> Result<(Matrix<T>, Grid2dStats)> {
    let s = grid_side;
    check_inputs(s, a, b)?;
    if k == 0 || s % k != 0 {
        return Err(Error::BadFactor { k, p: s });
    }
    let mut ag = skew_grid(a);
    let mut bg = skew_grid(b);
    let mut stats = Grid2dStats::default();

    for (r, row) in bg.iter_mut().enumerate() {
        let d = r % k;
        if d > 0 {
            row.rotate_right(d);
            stats.b_preshift_rows += 1;
        }
    }

    let mut cs: Vec<Vec<Vec<T>>> = vec![vec![vec![T::zero(); s]; s]; k];
    for t in 0..s {
        let bcast: Vec<T> = bg[t].clone();
        stats.broadcasts += 1;
        let d = t % k;
        for r in 0..s {
            for c in 0..s {
                cs[d][r][c] = cs[d][r][c].clone() + ag[r][c].clone() * bcast[c].clone();
            }
        }
        shift_down(&mut ag);
        stats.a_v_shift_steps += 1;
        if (t + 1) % k == 0 {
            // every K-th step, the last one included
            shift_left_by(&mut ag, k);
            stats.a_h_shift_steps += 1;
        }
    }

    // cs[d] holds contributions whose owner sits d cells to the left
    for step in 1..k {
        let src = k - step;
        shift_left_by(&mut cs[src], 1);
        stats.c_back_shifts += 1;
        let (head, tail) = cs.split_at_mut(src);
        let dst = &mut head[src - 1];
        let moved = &tail[0];
        for r in 0..s {
            for c in 0..s {
                dst[r][c] = dst[r][c].clone() + moved[r][c].clone();
            }
        }
    }

    Ok((unskew_grid(&cs[0]), stats))
}
