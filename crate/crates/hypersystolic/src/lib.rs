//! Simulator and algorithm library for shift-efficient matrix
//! multiplication on a 1-D ring of p cells.
//!
//! The core object is [`RingMachine`]: p cells, each holding named local
//! arrays, with one communication primitive — the circular shift — and a
//! log that records every shift with its cost. On top of that sit column
//! layouts (plain, skewed, pre-shifted), the classic systolic multiply
//! with p-1 shifts, and the hyper-systolic variant that gets the same
//! p x p product done in K + p/K - 1 whole-matrix movements by keeping K
//! partial result arrays and folding them together at the end. Choosing
//! K near sqrt(p) makes the count ~ 2 sqrt(p) - 2, i.e. Cannon's 2-D
//! budget on a plain ring.
//!
//! The same shift-graph trick works for any pairwise interaction
//! y_i = combine_j f(x_i, z_j); see [`algo::pairwise_reduce`] and the
//! stride-basis machinery in [`bases`]. The [`mapping`] module scales
//! the p x p kernels up to n x m operands via block, cyclic, and
//! block-cyclic assignments.
//!
//! Everything is deterministic: same inputs, same shift log, same costs.

pub mod algo;
pub mod bases;
pub mod error;
pub mod layout;
pub mod mapping;
pub mod matrix;
pub mod ring;
pub mod textio;

pub use algo::{
    cannon_matmul, complexity_counts, hyper_systolic_matmul, pairwise_reduce,
    semi_hyper_systolic_2d, semi_hyper_systolic_2d_with_stats, semi_systolic_2d,
    semi_systolic_2d_with_stats, systolic_matmul, AlgoKind, CountConvention, Grid2dStats,
    HsParams, PhaseCounts, ReduceReport, RunReport,
};
pub use bases::{
    balanced_factor, cannon_shift_count, divisor_pairs, gain_factor_matmul,
    gain_factor_two_arrays, h_range_complete, hyper_shift_count, hyper_shift_count_raw,
    optimal_basis_search, regular_bases, regular_pair, systolic_shift_count, BasisPair,
    MultiplicityTable, StrideBasis,
};
pub use error::{Error, Result};
pub use layout::{
    collect_columns, distribute_columns, preshift_b, skew_columns, undo_preshift,
    unskew_columns, DistributedMatrix, LayoutTag,
};
pub use mapping::{
    block_cyclic_multiply, block_multiply, cyclic_multiply, flops_per_word, BlockEntry,
    CyclicRun, MappingScheme,
};
pub use matrix::{approx_equal, naive_multiply, Matrix, MetricScalar, RingScalar};
pub use ring::{CostModel, RingMachine, ShiftEntry, ShiftLog};
pub use textio::{read_matrix, read_matrix_file, write_matrix, write_matrix_file};
