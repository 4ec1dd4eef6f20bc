use thiserror::Error;

/// Everything that can go wrong in this crate. One flat enum keeps the
/// `?`-plumbing simple; the variants carry enough context to print a
/// message a user can act on without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: cannot multiply {left_rows}x{left_cols} by {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("expected a {expected_rows}x{expected_cols} matrix, got {rows}x{cols}")]
    WrongSize {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("ring must have at least one cell")]
    EmptyRing,

    #[error("cost table must have one entry per cell ({p}), with table[0] == 0; got {msg}")]
    BadCostTable { p: usize, msg: String },

    #[error("bad cost model {0:?}: expected `constant`, `per_hop`, or `table:c0,c1,...`")]
    BadCostModel(String),

    #[error("cannot register array {name:?}: {msg}")]
    BadArray { name: String, msg: String },

    #[error("no array named {0:?} is registered on the machine")]
    UnknownArray(String),

    #[error("an array named {0:?} is already registered")]
    DuplicateArray(String),

    #[error("cell {cell} is out of range 1..={p}")]
    BadCell { cell: usize, p: usize },

    #[error("cell {cell} failed: {msg}")]
    CellFailed { cell: usize, msg: String },

    #[error("slot {slot} is out of range for an array of local length {len}")]
    BadSlot { slot: usize, len: usize },

    #[error("array {name:?} has layout {found}, operation requires {expected}")]
    WrongLayout {
        name: String,
        expected: String,
        found: String,
    },

    #[error("K = {k} does not divide p = {p}")]
    BadFactor { k: usize, p: usize },

    #[error("invalid stride basis: {0}")]
    BadBasis(String),

    #[error("basis pair does not cover every offset mod {n}: offset {missing} is unreachable")]
    IncompletePair { n: usize, missing: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("search bound exceeded: {0}")]
    SearchBound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
