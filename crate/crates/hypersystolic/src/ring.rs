//! The machine model: `p` cells on a 1-D ring, each holding named local
//! arrays, with circular shifts as the only way data moves between cells.
//!
//! Shift direction convention, used everywhere in this crate: after
//! `cshift_row(name, k)`, cell `i` holds what cell `(i + k) mod p` held
//! before (0-based). A positive stride therefore moves data toward lower
//! cell indices. `cshift_col` is a purely local rotation of each cell's
//! array (an addressing change, not communication) and is never logged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How much one circular shift costs.
///
/// `Constant` charges 1 per shift regardless of stride (the count that the
/// shift-complexity formulas talk about). `PerHop` charges the ring
/// distance, i.e. a stride of `k` costs `min(k mod p, p - k mod p)` because
/// the ring can be traversed either way. `Table` lets callers supply an
/// arbitrary per-residue cost, e.g. measured latencies of a real network.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    Constant,
    PerHop,
    Table(Vec<f64>),
}

impl CostModel {
    /// Cost of a single shift event with the given stride on a `p`-cell ring.
    pub fn cost(&self, stride: i64, p: usize) -> f64 {
        if stride == 0 {
            return 0.0;
        }
        let r = stride.rem_euclid(p as i64) as usize;
        match self {
            CostModel::Constant => 1.0,
            CostModel::PerHop => r.min(p - r) as f64,
            CostModel::Table(t) => t[r % t.len()],
        }
    }

    /// Check a table against the ring size. Called by `RingMachine::new`,
    /// so a machine can only ever exist with a usable cost model.
    pub fn validate(&self, p: usize) -> Result<()> {
        if let CostModel::Table(t) = self {
            if t.len() != p {
                return Err(Error::BadCostTable {
                    p,
                    msg: format!("{} entries", t.len()),
                });
            }
            if t[0] != 0.0 {
                return Err(Error::BadCostTable {
                    p,
                    msg: format!("table[0] = {}", t[0]),
                });
            }
            if let Some(bad) = t.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::BadCostTable {
                    p,
                    msg: format!("entry {bad} (costs must be finite and nonnegative)"),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Constant => write!(f, "constant"),
            CostModel::PerHop => write!(f, "per_hop"),
            CostModel::Table(t) => {
                write!(f, "table:")?;
                for (i, c) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(CostModel::Constant),
            "per_hop" => Ok(CostModel::PerHop),
            _ => {
                if let Some(list) = s.strip_prefix("table:") {
                    let mut t = Vec::new();
                    for tok in list.split(',') {
                        let c: f64 = tok
                            .trim()
                            .parse()
                            .map_err(|_| Error::BadCostModel(s.to_string()))?;
                        t.push(c);
                    }
                    Ok(CostModel::Table(t))
                } else {
                    Err(Error::BadCostModel(s.to_string()))
                }
            }
        }
    }
}

/// One logged shift event. `step` is 1-based, `elements` is the number of
/// local slots that moved per cell (a full-array shift moves all of them,
/// a slot-restricted shift only the selected ones).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEntry {
    pub step: usize,
    pub array: String,
    pub stride: i64,
    pub elements: usize,
    pub cost: f64,
}

/// Append-only record of every inter-cell shift a machine has performed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftLog {
    pub entries: Vec<ShiftEntry>,
}

impl ShiftLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.entries.iter().map(|e| e.cost).sum()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|e| e.elements).sum()
    }

    /// CSV with header `step,array,stride,elements,cost` and a trailing
    /// `TOTAL` row summing the elements and cost columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,array,stride,elements,cost\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.step, e.array, e.stride, e.elements, e.cost
            ));
        }
        out.push_str(&format!(
            "TOTAL,,,{},{}\n",
            self.total_elements(),
            self.total_cost()
        ));
        out
    }
}

/// A simulated ring of `p` cells. Every cell stores the same set of named
/// arrays, all of the same local length per array, so a row shift is always
/// well defined. Element types only need to be cloneable and comparable;
/// arithmetic is the algorithms' business, not the machine's.
#[derive(Debug, Clone)]
pub struct RingMachine<T> {
    p: usize,
    cost: CostModel,
    cells: Vec<BTreeMap<String, Vec<T>>>,
    log: ShiftLog,
}

impl<T: Clone + PartialEq + fmt::Debug> RingMachine<T> {
    pub fn new(p: usize, cost: CostModel) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyRing);
        }
        cost.validate(p)?;
        Ok(RingMachine {
            p,
            cost,
            cells: vec![BTreeMap::new(); p],
            log: ShiftLog::default(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn log(&self) -> &ShiftLog {
        &self.log
    }

    pub fn clear_log(&mut self) {
        self.log.entries.clear();
    }

    /// Registered array names, in sorted order.
    pub fn names(&self) -> Vec<String> {
        self.cells[0].keys().cloned().collect()
    }

    /// Local length of an array (identical on every cell).
    pub fn slot_len(&self, name: &str) -> Result<usize> {
        self.cells[0]
            .get(name)
            .map(Vec::len)
            .ok_or_else(|| Error::UnknownArray(name.to_string()))
    }

    /// Register an array from explicit per-cell contents. `per_cell[i]` is
    /// the local array of cell `i` (0-based here; the ring is the natural
    /// index space for whole-machine data).
    pub fn register(&mut self, name: &str, per_cell: Vec<Vec<T>>) -> Result<()> {
        if self.cells[0].contains_key(name) {
            return Err(Error::DuplicateArray(name.to_string()));
        }
        if per_cell.len() != self.p {
            return Err(Error::BadArray {
                name: name.to_string(),
                msg: format!("need one local array per cell ({}), got {}", self.p, per_cell.len()),
            });
        }
        let len = per_cell[0].len();
        if per_cell.iter().any(|v| v.len() != len) {
            return Err(Error::BadArray {
                name: name.to_string(),
                msg: "local arrays must all have the same length".to_string(),
            });
        }
        for (cell, local) in self.cells.iter_mut().zip(per_cell) {
            cell.insert(name.to_string(), local);
        }
        Ok(())
    }

    /// Register an array with `slots` copies of `init` on every cell.
    pub fn register_uniform(&mut self, name: &str, slots: usize, init: T) -> Result<()> {
        self.register(name, vec![vec![init; slots]; self.p])
    }

    /// Remove an array entirely, returning its per-cell contents.
    pub fn unregister(&mut self, name: &str) -> Result<Vec<Vec<T>>> {
        if !self.cells[0].contains_key(name) {
            return Err(Error::UnknownArray(name.to_string()));
        }
        Ok(self
            .cells
            .iter_mut()
            .map(|cell| cell.remove(name).unwrap())
            .collect())
    }

    /// Read-only view of one cell's local array. `cell` is 1-based, matching
    /// how cells are numbered in reports and error messages.
    pub fn local(&self, cell: usize, name: &str) -> Result<&[T]> {
        if cell == 0 || cell > self.p {
            return Err(Error::BadCell { cell, p: self.p });
        }
        self.cells[cell - 1]
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownArray(name.to_string()))
    }

    /// Clone of an array's full per-cell contents, indexed 0-based by cell.
    pub fn array_snapshot(&self, name: &str) -> Result<Vec<Vec<T>>> {
        if !self.cells[0].contains_key(name) {
            return Err(Error::UnknownArray(name.to_string()));
        }
        Ok(self.cells.iter().map(|c| c[name].clone()).collect())
    }

    /// Circular shift of a whole array along the ring: afterwards cell `i`
    /// holds what cell `(i + stride) mod p` held before. Logged.
    pub fn cshift_row(&mut self, name: &str, stride: i64) -> Result<()> {
        let len = self.slot_len(name)?;
        let k = stride.rem_euclid(self.p as i64) as usize;
        let mut moved: Vec<Vec<T>> = self
            .cells
            .iter_mut()
            .map(|cell| cell.remove(name).unwrap())
            .collect();
        moved.rotate_left(k);
        for (cell, local) in self.cells.iter_mut().zip(moved) {
            cell.insert(name.to_string(), local);
        }
        self.push_log(name, stride, len);
        Ok(())
    }

    /// Like `cshift_row`, but only the given local slots take part; the
    /// rest of the array stays put. One log entry for the whole event,
    /// with `elements` equal to the number of slots moved.
    pub fn cshift_row_slots(&mut self, name: &str, slots: &[usize], stride: i64) -> Result<()> {
        let len = self.slot_len(name)?;
        for &s in slots {
            if s >= len {
                return Err(Error::BadSlot { slot: s, len });
            }
        }
        let k = stride.rem_euclid(self.p as i64) as usize;
        for &s in slots {
            let mut lane: Vec<T> = self.cells.iter().map(|c| c[name][s].clone()).collect();
            lane.rotate_left(k);
            for (cell, v) in self.cells.iter_mut().zip(lane) {
                cell.get_mut(name).unwrap()[s] = v;
            }
        }
        self.push_log(name, stride, slots.len());
        Ok(())
    }

    /// Rotate every cell's local array in place: afterwards slot `j` holds
    /// what slot `(j + stride) mod len` held before. This is memory
    /// re-addressing inside each cell, so it does not appear in the log.
    pub fn cshift_col(&mut self, name: &str, stride: i64) -> Result<()> {
        let len = self.slot_len(name)?;
        if len == 0 {
            return Ok(());
        }
        let k = stride.rem_euclid(len as i64) as usize;
        for cell in &mut self.cells {
            cell.get_mut(name).unwrap().rotate_left(k);
        }
        Ok(())
    }

    /// Run a local computation on every cell. The closure sees the cell
    /// number (1-based) and the cell's local arrays in the order of
    /// `names`, and may mutate them freely. If any cell reports an error
    /// the whole machine state is rolled back, so a failed step can't
    /// leave arrays half-updated.
    pub fn map_cells<F>(&mut self, names: &[&str], mut f: F) -> Result<()>
    where
        F: FnMut(usize, &mut [Vec<T>]) -> std::result::Result<(), String>,
    {
        for (i, n) in names.iter().enumerate() {
            if !self.cells[0].contains_key(*n) {
                return Err(Error::UnknownArray(n.to_string()));
            }
            if names[..i].contains(n) {
                return Err(Error::DuplicateArray(n.to_string()));
            }
        }
        let backup = self.cells.clone();
        for idx in 0..self.p {
            let mut locals: Vec<Vec<T>> = names
                .iter()
                .map(|n| self.cells[idx].remove(*n).unwrap())
                .collect();
            let outcome = f(idx + 1, &mut locals);
            for (n, local) in names.iter().zip(locals) {
                self.cells[idx].insert(n.to_string(), local);
            }
            if let Err(msg) = outcome {
                self.cells = backup;
                return Err(Error::CellFailed { cell: idx + 1, msg });
            }
        }
        Ok(())
    }

    fn push_log(&mut self, name: &str, stride: i64, elements: usize) {
        let cost = self.cost.cost(stride, self.p);
        self.log.entries.push(ShiftEntry {
            step: self.log.entries.len() + 1,
            array: name.to_string(),
            stride,
            elements,
            cost,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counter_machine(p: usize) -> RingMachine<i64> {
        let mut m = RingMachine::new(p, CostModel::Constant).unwrap();
        m.register("x", (0..p as i64).map(|v| vec![v]).collect()).unwrap();
        m
    }

    fn lane(m: &RingMachine<i64>, name: &str) -> Vec<i64> {
        (1..=m.p()).map(|c| m.local(c, name).unwrap()[0]).collect()
    }

    #[test]
    fn positive_stride_pulls_from_higher_cells() {
        let mut m = counter_machine(4);
        m.cshift_row("x", 1).unwrap();
        // cell i now holds what cell i+1 held
        assert_eq!(lane(&m, "x"), vec![1, 2, 3, 0]);
    }

    #[test]
    fn negative_stride_pushes_toward_higher_cells() {
        let mut m = counter_machine(4);
        m.cshift_row("x", -1).unwrap();
        assert_eq!(lane(&m, "x"), vec![3, 0, 1, 2]);
    }

    #[test]
    fn full_turn_is_identity() {
        let mut m = counter_machine(5);
        m.cshift_row("x", 5).unwrap();
        assert_eq!(lane(&m, "x"), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn col_shift_rotates_locally_and_is_not_logged() {
        let mut m = RingMachine::new(2, CostModel::Constant).unwrap();
        m.register("y", vec![vec![10, 11, 12], vec![20, 21, 22]]).unwrap();
        m.cshift_col("y", 1).unwrap();
        assert_eq!(m.local(1, "y").unwrap(), &[11, 12, 10]);
        assert_eq!(m.local(2, "y").unwrap(), &[21, 22, 20]);
        assert!(m.log().is_empty());
    }

    #[test]
    fn slot_restricted_shift_leaves_other_slots_alone() {
        let mut m = RingMachine::new(3, CostModel::Constant).unwrap();
        m.register(
            "z",
            vec![vec![1, 100], vec![2, 200], vec![3, 300]],
        )
        .unwrap();
        m.cshift_row_slots("z", &[1], 1).unwrap();
        assert_eq!(m.local(1, "z").unwrap(), &[1, 200]);
        assert_eq!(m.local(2, "z").unwrap(), &[2, 300]);
        assert_eq!(m.local(3, "z").unwrap(), &[3, 100]);
        assert_eq!(m.log().entries[0].elements, 1);
    }

    #[test]
    fn log_records_steps_strides_and_costs() {
        let mut m = counter_machine(4);
        m.cshift_row("x", 1).unwrap();
        m.cshift_row("x", -2).unwrap();
        let log = m.log();
        assert_eq!(log.len(), 2);
        assert_eq!(log.entries[0].step, 1);
        assert_eq!(log.entries[1].step, 2);
        assert_eq!(log.entries[1].stride, -2);
        assert_eq!(log.total_cost(), 2.0);
        let csv = log.to_csv();
        assert!(csv.starts_with("step,array,stride,elements,cost\n"));
        assert!(csv.contains("1,x,1,1,1\n"));
        assert!(csv.contains("2,x,-2,1,1\n"));
        assert!(csv.ends_with("TOTAL,,,2,2\n"));
    }

    #[test]
    fn per_hop_cost_takes_the_short_way_round() {
        let m = CostModel::PerHop;
        assert_eq!(m.cost(1, 8), 1.0);
        assert_eq!(m.cost(3, 8), 3.0);
        assert_eq!(m.cost(5, 8), 3.0);
        assert_eq!(m.cost(-1, 8), 1.0);
        assert_eq!(m.cost(8, 8), 0.0);
        assert_eq!(m.cost(0, 8), 0.0);
    }

    #[test]
    fn table_cost_indexes_by_residue() {
        let t = CostModel::Table(vec![0.0, 1.5, 4.0]);
        assert_eq!(t.cost(1, 3), 1.5);
        assert_eq!(t.cost(2, 3), 4.0);
        assert_eq!(t.cost(-1, 3), 4.0);
        assert_eq!(t.cost(4, 3), 1.5);
    }

    #[test]
    fn bad_tables_are_rejected_at_machine_construction() {
        let wrong_len = RingMachine::<i64>::new(3, CostModel::Table(vec![0.0, 1.0]));
        assert!(matches!(wrong_len, Err(Error::BadCostTable { p: 3, .. })));
        let nonzero_origin = RingMachine::<i64>::new(2, CostModel::Table(vec![1.0, 1.0]));
        assert!(nonzero_origin.is_err());
        let negative = RingMachine::<i64>::new(2, CostModel::Table(vec![0.0, -1.0]));
        assert!(negative.is_err());
    }

    #[test]
    fn cost_model_round_trips_through_strings() {
        for s in ["constant", "per_hop", "table:0,1,2.5,1"] {
            let m: CostModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("bogus".parse::<CostModel>().is_err());
        assert!("table:0,abc".parse::<CostModel>().is_err());
        assert!("table:".parse::<CostModel>().is_err());
    }

    #[test]
    fn zero_cells_is_an_error() {
        assert!(matches!(
            RingMachine::<i64>::new(0, CostModel::Constant),
            Err(Error::EmptyRing)
        ));
    }

    #[test]
    fn register_validates_shape_and_duplicates() {
        let mut m = RingMachine::new(2, CostModel::Constant).unwrap();
        assert!(m.register("a", vec![vec![1]]).is_err());
        assert!(m.register("a", vec![vec![1], vec![2, 3]]).is_err());
        m.register("a", vec![vec![1], vec![2]]).unwrap();
        assert!(matches!(
            m.register("a", vec![vec![1], vec![2]]),
            Err(Error::DuplicateArray(_))
        ));
        let contents = m.unregister("a").unwrap();
        assert_eq!(contents, vec![vec![1], vec![2]]);
        assert!(m.local(1, "a").is_err());
    }

    #[test]
    fn map_cells_rolls_back_on_failure() {
        let mut m = counter_machine(4);
        let before = m.array_snapshot("x").unwrap();
        let err = m
            .map_cells(&["x"], |cell, locals| {
                locals[0][0] += 1000;
                if cell == 3 {
                    Err("boom".to_string())
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::CellFailed { cell: 3, .. }));
        assert_eq!(m.array_snapshot("x").unwrap(), before);
    }

    #[test]
    fn map_cells_sees_arrays_in_request_order() {
        let mut m = RingMachine::new(2, CostModel::Constant).unwrap();
        m.register("a", vec![vec![1], vec![2]]).unwrap();
        m.register("b", vec![vec![10], vec![20]]).unwrap();
        m.map_cells(&["b", "a"], |_, locals| {
            locals[1][0] += locals[0][0];
            Ok(())
        })
        .unwrap();
        assert_eq!(m.local(1, "a").unwrap(), &[11]);
        assert_eq!(m.local(2, "a").unwrap(), &[22]);
        assert!(matches!(
            m.map_cells(&["a", "a"], |_, _| Ok(())),
            Err(Error::DuplicateArray(_))
        ));
        assert!(matches!(
            m.map_cells(&["nope"], |_, _| Ok(())),
            Err(Error::UnknownArray(_))
        ));
    }

    #[test]
    fn out_of_range_cells_and_slots_error() {
        let mut m = counter_machine(3);
        assert!(matches!(m.local(0, "x"), Err(Error::BadCell { .. })));
        assert!(matches!(m.local(4, "x"), Err(Error::BadCell { .. })));
        assert!(matches!(
            m.cshift_row_slots("x", &[1], 1),
            Err(Error::BadSlot { slot: 1, len: 1 })
        ));
    }

    proptest! {
        #[test]
        fn shifts_compose_additively(
            p in 1usize..9,
            strides in proptest::collection::vec(-20i64..20, 1..6),
        ) {
            let mut step_by_step = counter_machine(p);
            for &s in &strides {
                step_by_step.cshift_row("x", s).unwrap();
            }
            let mut one_shot = counter_machine(p);
            one_shot.cshift_row("x", strides.iter().sum()).unwrap();
            prop_assert_eq!(lane(&step_by_step, "x"), lane(&one_shot, "x"));
        }

        #[test]
        fn opposite_strides_cancel(p in 1usize..9, s in -20i64..20) {
            let mut m = counter_machine(p);
            m.cshift_row("x", s).unwrap();
            m.cshift_row("x", -s).unwrap();
            prop_assert_eq!(lane(&m, "x"), (0..p as i64).collect::<Vec<_>>());
        }

        #[test]
        fn slot_shift_agrees_with_full_shift_on_all_slots(
            p in 1usize..7,
            slots in 1usize..4,
            s in -10i64..10,
        ) {
            let contents: Vec<Vec<i64>> = (0..p)
                .map(|i| (0..slots).map(|j| (i * 10 + j) as i64).collect())
                .collect();
            let mut a = RingMachine::new(p, CostModel::Constant).unwrap();
            a.register("w", contents.clone()).unwrap();
            a.cshift_row("w", s).unwrap();
            let mut b = RingMachine::new(p, CostModel::Constant).unwrap();
            b.register("w", contents).unwrap();
            let all: Vec<usize> = (0..slots).collect();
            b.cshift_row_slots("w", &all, s).unwrap();
            prop_assert_eq!(a.array_snapshot("w").unwrap(), b.array_snapshot("w").unwrap());
        }
    }
}
