//! Getting from p x p matrices to n x m ones on the same p cells. Block
//! assignment turns the whole problem into one p x p product over
//! sub-matrix entries; cyclic assignment decomposes it into many p x p
//! scalar products (contiguous tiles are exactly the one-column-per-cell
//! layout when columns are dealt round-robin); block-cyclic does the
//! cyclic decomposition over tiles whose entries are small dense blocks
//! kept in normal order.

use std::ops::{Add, Mul};

use num_traits::Zero;

use crate::algo::{hyper_systolic_matmul, HsParams, RunReport};
use crate::error::{Error, Result};
use crate::layout::{
    collect_columns, distribute_columns, preshift_b, skew_columns, unskew_columns,
    DistributedMatrix, LayoutTag,
};
use crate::matrix::{naive_multiply, Matrix, RingScalar};
use crate::ring::RingMachine;

/// A matrix entry that is itself a matrix. `Zero` is shape-agnostic so
/// that fresh accumulators can absorb whatever block size shows up.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockEntry<T> {
    Zero,
    Dense(Matrix<T>),
}

impl<T: RingScalar> BlockEntry<T> {
    pub fn dense(m: Matrix<T>) -> Self {
        BlockEntry::Dense(m)
    }

    /// Read out as a dense rows x cols block, materializing zeros.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> Matrix<T> {
        match self {
            BlockEntry::Zero => Matrix::zeros(rows, cols),
            BlockEntry::Dense(m) => m.clone(),
        }
    }
}

impl<T: RingScalar> Add for BlockEntry<T> {
    type Output = BlockEntry<T>;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (BlockEntry::Zero, other) | (other, BlockEntry::Zero) => other,
            (BlockEntry::Dense(a), BlockEntry::Dense(b)) => {
                BlockEntry::Dense(a.add(&b).expect("block shapes agree by construction"))
            }
        }
    }
}

impl<T: RingScalar> Mul for BlockEntry<T> {
    type Output = BlockEntry<T>;

    fn mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (BlockEntry::Dense(a), BlockEntry::Dense(b)) => BlockEntry::Dense(
                naive_multiply(&a, &b).expect("block shapes agree by construction"),
            ),
            _ => BlockEntry::Zero,
        }
    }
}

impl<T: RingScalar> Zero for BlockEntry<T> {
    fn zero() -> Self {
        BlockEntry::Zero
    }

    fn is_zero(&self) -> bool {
        matches!(self, BlockEntry::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingScheme {
    Block,
    Cyclic,
    BlockCyclic { inner_block: usize },
}

impl MappingScheme {
    /// Divisibility gate for an n x m operand on p cells. Sizes that do
    /// not divide are rejected outright; there is no zero padding.
    pub fn validate(&self, n: usize, m: usize, p: usize) -> Result<()> {
        if p == 0 || n == 0 || m == 0 || n % p != 0 || m % p != 0 {
            return Err(Error::Infeasible(format!(
                "{n}x{m} needs p | n and p | m on p={p} cells"
            )));
        }
        if let MappingScheme::BlockCyclic { inner_block } = self {
            if *inner_block == 0 || (n / p) % inner_block != 0 || (m / p) % inner_block != 0 {
                return Err(Error::Infeasible(format!(
                    "inner block {inner_block} must divide n/p = {} and m/p = {}",
                    n / p,
                    m / p
                )));
            }
        }
        Ok(())
    }
}

fn take_block<T: RingScalar>(
    m: &Matrix<T>,
    r0: usize,
    c0: usize,
    rows: usize,
    cols: usize,
) -> Matrix<T> {
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out.set0(r, c, m.get0(r0 + r, c0 + c).clone());
        }
    }
    out
}

fn put_block<T: RingScalar>(m: &mut Matrix<T>, r0: usize, c0: usize, block: &Matrix<T>) {
    for r in 0..block.rows() {
        for c in 0..block.cols() {
            m.set0(r0 + r, c0 + c, block.get0(r, c).clone());
        }
    }
}

fn check_operands<T>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if b.rows() != a.cols() || b.cols() != a.rows() {
        return Err(Error::ShapeMismatch {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    Ok(())
}

fn check_params<T>(machine: &RingMachine<T>, params: HsParams) -> Result<()>
where
    T: Clone + PartialEq + std::fmt::Debug,
{
    if params.p() != machine.p() {
        return Err(Error::Infeasible(format!(
            "params are for p={} but the machine has {} cells",
            params.p(),
            machine.p()
        )));
    }
    Ok(())
}

/// One whole-problem product: A (n x m) and B (m x n) become p x p
/// matrices of sub-blocks and go through the generic algorithm once.
/// Returns the assembled n x n product along with the block-level run
/// report, whose shift counts depend on p and K only, never on n.
pub fn block_multiply<T: RingScalar>(
    machine: &mut RingMachine<BlockEntry<T>>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: HsParams,
) -> Result<(Matrix<T>, RunReport<BlockEntry<T>>)> {
    let p = machine.p();
    check_params(machine, params)?;
    check_operands(a, b)?;
    MappingScheme::Block.validate(a.rows(), a.cols(), p)?;
    let (n, m) = (a.rows(), a.cols());
    let (br, bc) = (n / p, m / p);

    let ablk = Matrix::from_vec(
        p,
        p,
        (0..p * p)
            .map(|i| BlockEntry::Dense(take_block(a, (i / p) * br, (i % p) * bc, br, bc)))
            .collect(),
    )?;
    let bblk = Matrix::from_vec(
        p,
        p,
        (0..p * p)
            .map(|i| BlockEntry::Dense(take_block(b, (i / p) * bc, (i % p) * br, bc, br)))
            .collect(),
    )?;

    let report = hyper_systolic_matmul(machine, &ablk, &bblk, params)?;
    let mut out = Matrix::zeros(n, n);
    for bi in 0..p {
        for bj in 0..p {
            let block = report.result.get0(bi, bj).to_matrix(br, br);
            put_block(&mut out, bi * br, bj * br, &block);
        }
    }
    Ok((out, report))
}

/// Watermark counter for simultaneously-live intermediate (c) arrays.
#[derive(Debug, Clone, Copy, Default)]
struct LivePeak {
    live: usize,
    peak: usize,
}

impl LivePeak {
    fn up(&mut self) {
        self.live += 1;
        self.peak = self.peak.max(self.live);
    }

    fn down(&mut self) {
        self.live -= 1;
    }
}

/// A cyclic-mapping run: the assembled product plus instrumentation.
#[derive(Debug, Clone)]
pub struct CyclicRun<T> {
    pub result: Matrix<T>,
    /// High-water mark of intermediate accumulator arrays registered on
    /// the machine at once: K per tile product, times the number of
    /// buffered products.
    pub peak_live_intermediates: usize,
    /// p x p tile products executed.
    pub tile_products: usize,
}

/// One p x p tile product, inlined rather than delegated so the live
/// intermediates can be metered at their register/unregister sites.
fn tile_product<E: RingScalar>(
    machine: &mut RingMachine<E>,
    at: &Matrix<E>,
    bt: &Matrix<E>,
    params: HsParams,
    meter: &mut LivePeak,
) -> Result<Matrix<E>> {
    let p = machine.p();
    let k = params.k();
    let ktilde = params.ktilde();

    let mut da = distribute_columns(machine, at, "a")?;
    let mut db = distribute_columns(machine, bt, "b")?;
    skew_columns(machine, &mut da)?;
    skew_columns(machine, &mut db)?;
    for l in 1..=k {
        machine.register_uniform(&format!("c{l}"), p, E::zero())?;
        meter.up();
    }
    preshift_b(machine, &mut db, k)?;

    for j in 1..=ktilde {
        for l in 1..=k {
            let m0 = (j - 1) * k + (l - 1);
            let name = format!("c{l}");
            machine.map_cells(&[&name, "a", "b"], |_cell, locals| {
                let (c_loc, ab) = locals.split_at_mut(1);
                let c_loc = &mut c_loc[0];
                for n0 in 0..p {
                    let src = (n0 + p - m0) % p;
                    c_loc[n0] = c_loc[n0].clone() + ab[0][src].clone() * ab[1][m0].clone();
                }
                Ok(())
            })?;
        }
        if j < ktilde {
            machine.cshift_row("a", k as i64)?;
        }
    }

    for step in 1..k {
        let src = format!("c{}", k - step + 1);
        let dst = format!("c{}", k - step);
        machine.cshift_row(&src, 1)?;
        machine.map_cells(&[&dst, &src], |_cell, locals| {
            let (d, s) = locals.split_at_mut(1);
            for n0 in 0..p {
                d[0][n0] = d[0][n0].clone() + s[0][n0].clone();
            }
            Ok(())
        })?;
    }

    let mut dc = DistributedMatrix {
        name: "c1".to_string(),
        rows: p,
        cols: p,
        layout: LayoutTag::ColumnSkew,
    };
    unskew_columns(machine, &mut dc)?;
    let res = collect_columns(machine, &dc)?;
    machine.unregister("a")?;
    machine.unregister("b")?;
    for l in 1..=k {
        machine.unregister(&format!("c{l}"))?;
        meter.down();
    }
    Ok(res)
}

/// A whole row of tile products sharing one A tile and its shift
/// schedule: the c arrays for every tile in the C block-row stay
/// registered side by side, so memory grows to K times the row width
/// while the A strides happen once instead of once per tile.
fn row_buffered_products<E: RingScalar>(
    machine: &mut RingMachine<E>,
    at: &Matrix<E>,
    bts: &[Matrix<E>],
    params: HsParams,
    meter: &mut LivePeak,
) -> Result<Vec<Matrix<E>>> {
    let p = machine.p();
    let k = params.k();
    let ktilde = params.ktilde();
    let width = bts.len();

    let mut da = distribute_columns(machine, at, "a")?;
    skew_columns(machine, &mut da)?;
    let mut dbs = Vec::with_capacity(width);
    for (w, bt) in bts.iter().enumerate() {
        let mut db = distribute_columns(machine, bt, &format!("b{w}"))?;
        skew_columns(machine, &mut db)?;
        dbs.push(db);
    }
    for w in 0..width {
        for l in 1..=k {
            machine.register_uniform(&format!("c{l}w{w}"), p, E::zero())?;
            meter.up();
        }
    }
    for db in dbs.iter_mut() {
        preshift_b(machine, db, k)?;
    }

    for j in 1..=ktilde {
        for l in 1..=k {
            let m0 = (j - 1) * k + (l - 1);
            for w in 0..width {
                let cname = format!("c{l}w{w}");
                let bname = format!("b{w}");
                machine.map_cells(&[&cname, "a", &bname], |_cell, locals| {
                    let (c_loc, ab) = locals.split_at_mut(1);
                    let c_loc = &mut c_loc[0];
                    for n0 in 0..p {
                        let src = (n0 + p - m0) % p;
                        c_loc[n0] =
                            c_loc[n0].clone() + ab[0][src].clone() * ab[1][m0].clone();
                    }
                    Ok(())
                })?;
            }
        }
        if j < ktilde {
            machine.cshift_row("a", k as i64)?;
        }
    }

    let mut results = Vec::with_capacity(width);
    for w in 0..width {
        for step in 1..k {
            let src = format!("c{}w{w}", k - step + 1);
            let dst = format!("c{}w{w}", k - step);
            machine.cshift_row(&src, 1)?;
            machine.map_cells(&[&dst, &src], |_cell, locals| {
                let (d, s) = locals.split_at_mut(1);
                for n0 in 0..p {
                    d[0][n0] = d[0][n0].clone() + s[0][n0].clone();
                }
                Ok(())
            })?;
        }
        let mut dc = DistributedMatrix {
            name: format!("c1w{w}"),
            rows: p,
            cols: p,
            layout: LayoutTag::ColumnSkew,
        };
        unskew_columns(machine, &mut dc)?;
        results.push(collect_columns(machine, &dc)?);
    }

    machine.unregister("a")?;
    for w in 0..width {
        machine.unregister(&format!("b{w}"))?;
        for l in 1..=k {
            machine.unregister(&format!("c{l}w{w}"))?;
            meter.down();
        }
    }
    Ok(results)
}

/// Shared driver for the cyclic decomposition: `tile` reads a p x p tile
/// of E entries out of a host matrix, `weld` adds a finished tile sum
/// into the output. Tiles are contiguous because dealing columns
/// round-robin puts any p consecutive columns on p distinct cells.
fn cyclic_driver<T, E>(
    machine: &mut RingMachine<E>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: HsParams,
    reduce_memory: bool,
    super_side: usize,
    tile: impl Fn(&Matrix<T>, usize, usize) -> Matrix<E>,
    weld: impl Fn(&mut Matrix<T>, usize, usize, &Matrix<E>) -> Result<()>,
) -> Result<CyclicRun<T>>
where
    T: RingScalar,
    E: RingScalar,
{
    check_params(machine, params)?;
    check_operands(a, b)?;
    let n = a.rows();
    let m = a.cols();
    let tn = n / super_side;
    let tm = m / super_side;

    let mut out = Matrix::zeros(n, n);
    let mut meter = LivePeak::default();
    let mut tile_products = 0usize;

    for ti in 0..tn {
        // host-side accumulators for one row of output tiles
        let mut acc: Vec<Option<Matrix<E>>> = vec![None; tn];
        for tk in 0..tm {
            let at = tile(a, ti, tk);
            if reduce_memory {
                for (tj, slot) in acc.iter_mut().enumerate() {
                    let bt = tile(b, tk, tj);
                    let prod = tile_product(machine, &at, &bt, params, &mut meter)?;
                    tile_products += 1;
                    *slot = Some(match slot.take() {
                        None => prod,
                        Some(cur) => cur.add(&prod)?,
                    });
                }
            } else {
                let bts: Vec<Matrix<E>> = (0..tn).map(|tj| tile(b, tk, tj)).collect();
                let prods = row_buffered_products(machine, &at, &bts, params, &mut meter)?;
                tile_products += prods.len();
                for (slot, prod) in acc.iter_mut().zip(prods) {
                    *slot = Some(match slot.take() {
                        None => prod,
                        Some(cur) => cur.add(&prod)?,
                    });
                }
            }
        }
        for (tj, slot) in acc.into_iter().enumerate() {
            let summed = slot.expect("every output tile gets at least one product");
            weld(&mut out, ti, tj, &summed)?;
        }
    }

    Ok(CyclicRun {
        result: out,
        peak_live_intermediates: meter.peak,
        tile_products,
    })
}

/// Cyclic assignment: the n x m by m x n product falls apart into
/// (n/p)·(n/p)·(m/p) independent p x p products, each run with the
/// generic algorithm. With `reduce_memory` every product cleans up
/// before the next starts (K live intermediates); without it, a whole
/// output-tile row is buffered so A's stride schedule is walked once per
/// A tile instead of once per product (K times row-width intermediates).
pub fn cyclic_multiply<T: RingScalar>(
    machine: &mut RingMachine<T>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: HsParams,
    reduce_memory: bool,
) -> Result<CyclicRun<T>> {
    let p = machine.p();
    MappingScheme::Cyclic.validate(a.rows(), a.cols(), p)?;
    cyclic_driver(
        machine,
        a,
        b,
        params,
        reduce_memory,
        p,
        |host, ti, tj| take_block(host, ti * p, tj * p, p, p),
        |host, ti, tj, tile| {
            put_block(host, ti * p, tj * p, tile);
            Ok(())
        },
    )
}

/// Block-cyclic assignment: like cyclic, but each p x p tile entry is an
/// inner_block x inner_block dense sub-block in normal (unskewed) order;
/// only the p x p tile structure is ever skewed or shifted. With
/// inner_block = 1 the run is step-for-step the same as cyclic_multiply,
/// down to an identical shift log.
pub fn block_cyclic_multiply<T: RingScalar>(
    machine: &mut RingMachine<BlockEntry<T>>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: HsParams,
    inner_block: usize,
    reduce_memory: bool,
) -> Result<CyclicRun<T>> {
    let p = machine.p();
    MappingScheme::BlockCyclic { inner_block }.validate(a.rows(), a.cols(), p)?;
    let l = inner_block;
    let side = p * l;
    cyclic_driver(
        machine,
        a,
        b,
        params,
        reduce_memory,
        side,
        |host, ti, tj| {
            Matrix::from_vec(
                p,
                p,
                (0..p * p)
                    .map(|i| {
                        BlockEntry::Dense(take_block(
                            host,
                            ti * side + (i / p) * l,
                            tj * side + (i % p) * l,
                            l,
                            l,
                        ))
                    })
                    .collect(),
            )
            .expect("tile grid is p*p by construction")
        },
        |host, ti, tj, tile| {
            for bi in 0..p {
                for bj in 0..p {
                    let dense = tile.get0(bi, bj).to_matrix(l, l);
                    put_block(host, ti * side + bi * l, tj * side + bj * l, &dense);
                }
            }
            Ok(())
        },
    )
}

/// Local multiply-adds per transferred operand word for an inner block
/// of side l: an l x l tile pair costs l^3 multiply-adds against the
/// 2 l^2 words that moved, so the ratio is l/2 and grows linearly with
/// the tile side.
pub fn flops_per_word(inner_block: usize) -> f64 {
    inner_block as f64 / 2.0
}
