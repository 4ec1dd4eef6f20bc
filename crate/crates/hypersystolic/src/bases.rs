//! Stride bases for the two-array reduction, their completeness theory,
//! and the shift-count / gain-factor formulas.
//!
//! A stride basis is an ordered sequence starting at 0; its prefix sums
//! are the ring positions a replica chain visits. A pair of bases (A, B)
//! is *complete* for range n when every offset m in 0..n can be written
//! as s + u (mod n) with s a prefix sum of A and u a prefix sum of B.
//! The multiplicity table counts, per offset, how many (s, u) pairings
//! produce it; complete means every count is at least 1.
//!
//! Note the pairing is between whole prefix sums (one per replica), not
//! between arbitrary contiguous runs of strides: each replica of the
//! reduction is the cumulative shift of everything before it, so only the
//! prefix totals are ever addressable. Counting runs instead would both
//! overcount multiplicities and admit shorter "complete" pairs that the
//! reduction cannot actually realize.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::ring::CostModel;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StrideBasis {
    strides: Vec<i64>,
}

impl StrideBasis {
    /// The sequence must start with 0 (the unshifted original is always
    /// replica number zero).
    pub fn new(strides: Vec<i64>) -> Result<Self> {
        if strides.first() != Some(&0) {
            return Err(Error::BadBasis(
                "stride sequence must start with 0".to_string(),
            ));
        }
        Ok(StrideBasis { strides })
    }

    /// Build from the moving strides alone; the leading 0 is implied.
    pub fn from_moves(moves: &[i64]) -> Self {
        let mut strides = Vec::with_capacity(moves.len() + 1);
        strides.push(0);
        strides.extend_from_slice(moves);
        StrideBasis { strides }
    }

    pub fn strides(&self) -> &[i64] {
        &self.strides
    }

    /// The strides that actually move data (everything after the leading 0).
    pub fn moves(&self) -> &[i64] {
        &self.strides[1..]
    }

    /// k: how many shift events this basis costs per traversal.
    pub fn shift_count(&self) -> usize {
        self.strides.len() - 1
    }

    /// The k+1 ring positions the replica chain visits, reduced mod n.
    pub fn prefix_sums(&self, n: usize) -> Vec<usize> {
        let m = n as i64;
        let mut acc = 0i64;
        self.strides
            .iter()
            .map(|s| {
                acc += s;
                acc.rem_euclid(m) as usize
            })
            .collect()
    }

    /// Total cost of walking the basis once on an n-cell ring.
    pub fn total_cost(&self, model: &CostModel, n: usize) -> f64 {
        self.moves().iter().map(|&s| model.cost(s, n)).sum()
    }
}

impl fmt::Display for StrideBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.strides.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for StrideBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let strides = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::BadBasis(format!("bad stride {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        StrideBasis::new(strides)
    }
}

/// Offset coverage counts for a basis pair: `count(m)` is the number of
/// (prefix sum of A, prefix sum of B) pairings with s + u ≡ m (mod n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityTable {
    n: usize,
    counts: Vec<usize>,
}

impl MultiplicityTable {
    pub fn new(a: &StrideBasis, b: &StrideBasis, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadBasis("range n must be positive".to_string()));
        }
        let mut counts = vec![0usize; n];
        let us = b.prefix_sums(n);
        for s in a.prefix_sums(n) {
            for &u in &us {
                counts[(s + u) % n] += 1;
            }
        }
        Ok(MultiplicityTable { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, m: usize) -> usize {
        self.counts[m % self.n]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn is_complete(&self) -> bool {
        self.counts.iter().all(|&c| c >= 1)
    }

    /// Offsets no pairing reaches, ascending.
    pub fn missing(&self) -> Vec<usize> {
        (0..self.n).filter(|&m| self.counts[m] == 0).collect()
    }

    pub fn all_exactly_one(&self) -> bool {
        self.counts.iter().all(|&c| c == 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,count\n");
        for (m, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{m},{c}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisPair {
    pub a: StrideBasis,
    pub b: StrideBasis,
    pub n: usize,
}

impl BasisPair {
    pub fn new(a: StrideBasis, b: StrideBasis, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadBasis("range n must be positive".to_string()));
        }
        Ok(BasisPair { a, b, n })
    }

    pub fn multiplicity(&self) -> MultiplicityTable {
        MultiplicityTable::new(&self.a, &self.b, self.n).expect("n validated at construction")
    }

    pub fn is_complete(&self) -> bool {
        self.multiplicity().is_complete()
    }

    pub fn require_complete(&self) -> Result<()> {
        let table = self.multiplicity();
        match table.missing().first() {
            None => Ok(()),
            Some(&m) => Err(Error::IncompletePair {
                n: self.n,
                missing: m,
            }),
        }
    }
}

/// Completeness check plus the full per-offset table in one call.
pub fn h_range_complete(pair: &BasisPair) -> (bool, MultiplicityTable) {
    let table = pair.multiplicity();
    let complete = table.is_complete();
    (complete, table)
}

/// The regular basis trio for the p x p matrix product with p = k * ktilde:
/// A walks in strides of k, B and C are unit-stride chains of length k - 1
/// (B backwards, C forwards, matching the pre-shift and back-shift phases).
pub fn regular_bases(k: usize, ktilde: usize) -> Result<(StrideBasis, StrideBasis, StrideBasis)> {
    if k == 0 || ktilde == 0 {
        return Err(Error::BadBasis("K and Ktilde must be positive".to_string()));
    }
    let a = StrideBasis::from_moves(&vec![k as i64; ktilde - 1]);
    let b = StrideBasis::from_moves(&vec![-1i64; k - 1]);
    let c = StrideBasis::from_moves(&vec![1i64; k - 1]);
    Ok((a, b, c))
}

/// The regular pair for the two-array reduction over n = k * ktilde values:
/// A = (0, 1, ..., 1) with k-1 ones, B = (0, k, ..., k) with ktilde-1
/// repeats. Every offset decomposes uniquely as r + q*k, so the pair is
/// complete with multiplicity exactly 1.
pub fn regular_pair(k: usize, ktilde: usize) -> Result<BasisPair> {
    if k == 0 || ktilde == 0 {
        return Err(Error::BadBasis("K and Ktilde must be positive".to_string()));
    }
    let a = StrideBasis::from_moves(&vec![1i64; k - 1]);
    let b = StrideBasis::from_moves(&vec![k as i64; ktilde - 1]);
    BasisPair::new(a, b, k * ktilde)
}

fn require_factor(k: usize, p: usize) -> Result<usize> {
    if k == 0 || p == 0 || p % k != 0 {
        return Err(Error::BadFactor { k, p });
    }
    Ok(p / k)
}

/// Paper-convention shift count of the hyper-systolic matrix product:
/// 1 (the whole pre-shift of B, counted as one full-matrix movement)
/// + ktilde-1 (shifts of A) + k-1 (back-shifts of C) = k + ktilde - 1.
pub fn hyper_shift_count(p: usize, k: usize) -> Result<usize> {
    let ktilde = require_factor(k, p)?;
    Ok(k + ktilde - 1)
}

/// Literal shift events the same run performs: the pre-shift is k-1
/// grouped row shifts rather than one, so 2k + ktilde - 3.
pub fn hyper_shift_count_raw(p: usize, k: usize) -> Result<usize> {
    let ktilde = require_factor(k, p)?;
    Ok((k - 1) + (ktilde - 1) + (k - 1))
}

pub fn systolic_shift_count(p: usize) -> usize {
    p.saturating_sub(1)
}

fn exact_sqrt(p: usize) -> Option<usize> {
    let r = (p as f64).sqrt().round() as usize;
    for cand in [r.saturating_sub(1), r, r + 1] {
        if cand * cand == p {
            return Some(cand);
        }
    }
    None
}

/// Shift steps of the systolic phase of the 2D torus product on p = s*s
/// cells: 2(s - 1).
pub fn cannon_shift_count(p: usize) -> Result<usize> {
    let s = exact_sqrt(p).filter(|&s| s > 0).ok_or_else(|| {
        Error::Infeasible(format!("torus grid needs a square cell count, got p = {p}"))
    })?;
    Ok(2 * (s - 1))
}

/// Gain of hyper-systolic over systolic matrix multiplication:
/// (p - 1) / (k + ktilde - 1).
pub fn gain_factor_matmul(p: usize, k: usize, ktilde: usize) -> Result<Ratio<u64>> {
    if k.checked_mul(ktilde) != Some(p) || p == 0 {
        return Err(Error::BadFactor { k, p });
    }
    Ok(Ratio::new((p - 1) as u64, (k + ktilde - 1) as u64))
}

/// Gain of the hyper-systolic two-array reduction over the plain ring
/// walk: (n - 1) / (2k + ktilde - 3). The denominator is the measured
/// forward + back shift count; it is 0 only at k = ktilde = 1, where the
/// ratio is undefined.
pub fn gain_factor_two_arrays(n: usize, k: usize, ktilde: usize) -> Result<Ratio<u64>> {
    if k.checked_mul(ktilde) != Some(n) || n == 0 {
        return Err(Error::BadFactor { k, p: n });
    }
    let denom = 2 * k + ktilde;
    if denom <= 3 {
        return Err(Error::Infeasible(
            "gain is undefined at K = Ktilde = 1 (zero shifts)".to_string(),
        ));
    }
    Ok(Ratio::new((n - 1) as u64, (denom - 3) as u64))
}

/// Divisor factorizations (k, n/k) of n, ascending in k.
pub fn divisor_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).filter(|k| n % k == 0).map(|k| (k, n / k)).collect()
}

/// The divisor of p nearest to sqrt(p), preferring the smaller one on a
/// tie. This balances k against ktilde = p/k in k + ktilde - 1.
pub fn balanced_factor(p: usize) -> usize {
    let root = (p as f64).sqrt();
    divisor_pairs(p)
        .iter()
        .map(|&(k, _)| k)
        .min_by(|&x, &y| {
            let dx = (x as f64 - root).abs();
            let dy = (y as f64 - root).abs();
            dx.partial_cmp(&dy).unwrap().then(x.cmp(&y))
        })
        .unwrap_or(1)
}

const SEARCH_CAP: usize = 64;

/// Exact search for a complete pair of minimum cost.
///
/// Under the constant model this minimizes k + k' (every shift costs 1);
/// under per-hop or table costs it minimizes the summed stride costs.
/// Strides are reported as canonical residues in 1..n-1 (a stride of -d
/// is the same ring operation as n-d). Ties are broken by the
/// lexicographically smallest stride sequence, A first, so results are
/// deterministic. `max_len` bounds k + k'; if no complete pair exists
/// within it the search reports an error.
///
/// The search is exhaustive and exponential in the worst case; n is
/// capped at 64, and in practice the constant model is comfortable up to
/// about n = 25 while general cost models want small n and max_len.
pub fn optimal_basis_search(n: usize, cost: &CostModel, max_len: usize) -> Result<BasisPair> {
    if n == 0 {
        return Err(Error::BadBasis("range n must be positive".to_string()));
    }
    if n > SEARCH_CAP {
        return Err(Error::SearchBound(format!(
            "n = {n} exceeds the supported search cap of {SEARCH_CAP}"
        )));
    }
    cost.validate(n)?;
    match cost {
        CostModel::Constant => search_constant(n, max_len),
        _ => search_general(n, cost, max_len),
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn rot(mask: u64, by: usize, n: usize, full: u64) -> u64 {
    if by == 0 {
        return mask;
    }
    ((mask << by) | (mask >> (n - by))) & full
}

#[derive(Clone)]
struct SubsetInfo {
    mask: u64,
    diffs: u64,
}

/// All subsets of {0..n-1} of the given size that contain 0, with their
/// sets of pairwise differences (as a bitmask over nonzero residues).
fn subsets_with_zero(n: usize, size: usize) -> Vec<SubsetInfo> {
    let mut out = Vec::new();
    let mut elems: Vec<usize> = vec![0];
    fn go(n: usize, size: usize, start: usize, elems: &mut Vec<usize>, out: &mut Vec<SubsetInfo>) {
        if elems.len() == size {
            let mut mask = 0u64;
            let mut diffs = 0u64;
            for &e in elems.iter() {
                mask |= 1 << e;
            }
            for &x in elems.iter() {
                for &y in elems.iter() {
                    if x != y {
                        diffs |= 1 << ((x + n - y) % n);
                    }
                }
            }
            out.push(SubsetInfo { mask, diffs });
            return;
        }
        let remaining = size - elems.len();
        for e in start..=(n - remaining) {
            elems.push(e);
            go(n, size, e + 1, elems, out);
            elems.pop();
        }
    }
    if size >= 1 && size <= n {
        go(n, size, 1, &mut elems, &mut out);
    }
    out
}

fn union_covers(mask_a: u64, mask_b: u64, n: usize, full: u64) -> bool {
    let mut cover = 0u64;
    let mut rest = mask_b;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        cover |= rot(mask_a, u, n, full);
        if cover == full {
            return true;
        }
    }
    cover == full
}

/// Lexicographically smallest stride sequence that visits every element
/// of the set, starting at 0: greedily take the smallest positive residue
/// that lands on an unvisited member.
fn lex_path(mask: u64, n: usize) -> Vec<i64> {
    let mut seq = vec![0i64];
    let mut visited = 1u64;
    let mut pos = 0usize;
    while visited != mask {
        for s in 1..n {
            let next = (pos + s) % n;
            if mask >> next & 1 == 1 && visited >> next & 1 == 0 {
                seq.push(s as i64);
                visited |= 1 << next;
                pos = next;
                break;
            }
        }
    }
    seq
}

fn search_constant(n: usize, max_len: usize) -> Result<BasisPair> {
    let full = full_mask(n);
    for total in 0..=max_len {
        let mut best: Option<(Vec<i64>, Vec<i64>)> = None;
        for k in 0..=total {
            let kp = total - k;
            if (k + 1) * (kp + 1) < n {
                continue;
            }
            let side_a = subsets_with_zero(n, k + 1);
            let side_b_storage;
            let side_b = if kp == k {
                &side_a
            } else {
                side_b_storage = subsets_with_zero(n, kp + 1);
                &side_b_storage
            };
            // With exactly n pairings, coverage is equivalent to all sums
            // being distinct, i.e. the two difference sets only share 0 —
            // a single AND instead of building the union.
            let exact = (k + 1) * (kp + 1) == n;
            for a in &side_a {
                for b in side_b.iter() {
                    let covers = if exact {
                        a.diffs & b.diffs == 0
                    } else {
                        union_covers(a.mask, b.mask, n, full)
                    };
                    if covers {
                        let cand = (lex_path(a.mask, n), lex_path(b.mask, n));
                        if best.as_ref().map_or(true, |cur| cand < *cur) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        if let Some((sa, sb)) = best {
            return BasisPair::new(StrideBasis::new(sa)?, StrideBasis::new(sb)?, n);
        }
    }
    Err(Error::SearchBound(format!(
        "no complete pair with k + k' <= {max_len} for n = {n}"
    )))
}

struct GeneralSearch {
    n: usize,
    full: u64,
    costs: Vec<f64>,
    max_len: usize,
    seq_a: Vec<i64>,
    seq_b: Vec<i64>,
    best: Option<(f64, Vec<i64>, Vec<i64>)>,
}

impl GeneralSearch {
    fn beaten(&self, cost: f64) -> bool {
        matches!(&self.best, Some((bc, _, _)) if cost > *bc)
    }

    fn offer(&mut self, cost: f64) {
        let better = match &self.best {
            None => true,
            Some((bc, ba, bb)) => {
                cost < *bc
                    || (cost == *bc
                        && (&self.seq_a, &self.seq_b) < (ba, bb))
            }
        };
        if better {
            self.best = Some((cost, self.seq_a.clone(), self.seq_b.clone()));
        }
    }

    fn dfs_a(&mut self, pos: usize, mask: u64, cost: f64) {
        self.dfs_b(mask, 0, 1, cost);
        if self.seq_a.len() - 1 >= self.max_len {
            return;
        }
        for s in 1..self.n {
            let nc = cost + self.costs[s];
            if self.beaten(nc) {
                continue;
            }
            let next = (pos + s) % self.n;
            self.seq_a.push(s as i64);
            self.dfs_a(next, mask | 1 << next, nc);
            self.seq_a.pop();
        }
    }

    fn dfs_b(&mut self, mask_a: u64, pos: usize, mask: u64, cost: f64) {
        if union_covers(mask_a, mask, self.n, self.full) {
            // extending a covering pair only adds cost and lex weight
            self.offer(cost);
            return;
        }
        if self.seq_a.len() + self.seq_b.len() - 2 >= self.max_len {
            return;
        }
        for s in 1..self.n {
            let nc = cost + self.costs[s];
            if self.beaten(nc) {
                continue;
            }
            let next = (pos + s) % self.n;
            self.seq_b.push(s as i64);
            self.dfs_b(mask_a, next, mask | 1 << next, nc);
            self.seq_b.pop();
        }
    }
}

// recursion depth in the general search equals max_len
const GENERAL_LEN_CAP: usize = 256;

fn search_general(n: usize, cost: &CostModel, max_len: usize) -> Result<BasisPair> {
    if max_len > GENERAL_LEN_CAP {
        return Err(Error::SearchBound(format!(
            "max_len = {max_len} exceeds the exhaustive-search cap of {GENERAL_LEN_CAP}"
        )));
    }
    let mut search = GeneralSearch {
        n,
        full: full_mask(n),
        costs: (0..n).map(|s| cost.cost(s as i64, n)).collect(),
        max_len,
        seq_a: vec![0],
        seq_b: vec![0],
        best: None,
    };
    search.dfs_a(0, 1, 0.0);
    match search.best {
        Some((_, sa, sb)) => BasisPair::new(StrideBasis::new(sa)?, StrideBasis::new(sb)?, n),
        None => Err(Error::SearchBound(format!(
            "no complete pair with k + k' <= {max_len} for n = {n}"
        ))),
    }
}
