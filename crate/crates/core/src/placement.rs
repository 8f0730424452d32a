//! Placements of modules on the grid and the quantities evaluated on them:
//! temporal overlap, forbidden spatial overlap, bounding-array area, and the
//! 0/1 occupancy encoding used for relocation.
//!
//! Coordinates are 1-based with `(1, 1)` at the bottom-left cell. A module's
//! position is the cell under its bottom-left corner.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{ModuleSpec, ProblemInstance};

/// Compact position of one module: bottom-left cell and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub row: u32,
    pub col: u32,
    pub rotated: bool,
}

impl Position {
    pub const fn new(row: u32, col: u32, rotated: bool) -> Self {
        Position { row, col, rotated }
    }
}

/// A module placed on the grid, identified by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedModule {
    #[serde(rename = "id")]
    pub module_id: String,
    pub row: u32,
    pub col: u32,
    pub rotated: bool,
}

/// Inclusive cell rectangle, rows `row0..=row1`, columns `col0..=col1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRect {
    pub row0: u32,
    pub col0: u32,
    pub row1: u32,
    pub col1: u32,
}

impl CellRect {
    pub fn of(spec: &ModuleSpec, pos: Position) -> Self {
        let (w, h) = spec.footprint(pos.rotated);
        CellRect {
            row0: pos.row,
            col0: pos.col,
            row1: pos.row + h - 1,
            col1: pos.col + w - 1,
        }
    }

    pub fn rows(&self) -> u32 {
        self.row1 - self.row0 + 1
    }

    pub fn cols(&self) -> u32 {
        self.col1 - self.col0 + 1
    }

    pub fn cell_count(&self) -> u64 {
        u64::from(self.rows()) * u64::from(self.cols())
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.row0..=self.row1).contains(&row) && (self.col0..=self.col1).contains(&col)
    }

    pub fn contains_rect(&self, other: &CellRect) -> bool {
        self.row0 <= other.row0
            && other.row1 <= self.row1
            && self.col0 <= other.col0
            && other.col1 <= self.col1
    }

    /// Number of cells shared with `other`.
    pub fn intersection(&self, other: &CellRect) -> u64 {
        let r0 = self.row0.max(other.row0);
        let r1 = self.row1.min(other.row1);
        let c0 = self.col0.max(other.col0);
        let c1 = self.col1.min(other.col1);
        if r0 > r1 || c0 > c1 {
            0
        } else {
            u64::from(r1 - r0 + 1) * u64::from(c1 - c0 + 1)
        }
    }

    pub fn union(&self, other: &CellRect) -> CellRect {
        CellRect {
            row0: self.row0.min(other.row0),
            col0: self.col0.min(other.col0),
            row1: self.row1.max(other.row1),
            col1: self.col1.max(other.col1),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.row0..=self.row1).flat_map(move |r| (self.col0..=self.col1).map(move |c| (r, c)))
    }
}

/// True iff the half-open spans `[start, start + duration)` intersect.
pub fn time_overlap(a: &ModuleSpec, b: &ModuleSpec) -> bool {
    a.start_time_s < b.end_time_s() && b.start_time_s < a.end_time_s()
}

/// Pairwise time-overlap table for an instance. A module is not listed as
/// concurrent with itself.
#[derive(Debug, Clone)]
pub struct Concurrency {
    matrix: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    n: usize,
}

impl Concurrency {
    pub fn new(inst: &ProblemInstance) -> Self {
        let n = inst.modules.len();
        let mut matrix = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && time_overlap(&inst.modules[i], &inst.modules[j]) {
                    matrix[i * n + j] = true;
                    neighbors[i].push(j);
                }
            }
        }
        Concurrency {
            matrix,
            neighbors,
            n,
        }
    }

    pub fn concurrent(&self, i: usize, j: usize) -> bool {
        self.matrix[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }
}

/// A full layout: one position per module of the instance, stored in the
/// instance's module order.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    instance: Arc<ProblemInstance>,
    positions: Vec<Position>,
}

impl Placement {
    /// Builds a placement from positions in instance module order, checking
    /// core-area containment.
    pub fn new(instance: Arc<ProblemInstance>, positions: Vec<Position>) -> Result<Self> {
        assert_eq!(
            positions.len(),
            instance.modules.len(),
            "one position per module"
        );
        let (rows, cols) = instance.bounds();
        for (spec, pos) in instance.modules.iter().zip(&positions) {
            if !fits_in_core(spec, *pos, rows, cols) {
                return Err(Error::OutOfCore {
                    module: spec.id.clone(),
                    row: pos.row,
                    col: pos.col,
                });
            }
        }
        Ok(Placement {
            instance,
            positions,
        })
    }

    /// Builds a placement from id-labelled entries, in any order.
    pub fn from_placed(instance: Arc<ProblemInstance>, placed: &[PlacedModule]) -> Result<Self> {
        let mut positions: Vec<Option<Position>> = vec![None; instance.modules.len()];
        for pm in placed {
            let idx = instance
                .index_of(&pm.module_id)
                .ok_or_else(|| Error::UnknownModule(pm.module_id.clone()))?;
            if positions[idx].is_some() {
                return Err(Error::InvalidModule {
                    module: pm.module_id.clone(),
                    field: "module_id",
                    reason: "placed more than once".into(),
                });
            }
            if pm.rotated && !instance.modules[idx].rotatable {
                return Err(Error::InvalidModule {
                    module: pm.module_id.clone(),
                    field: "rotated",
                    reason: "module is not rotatable".into(),
                });
            }
            positions[idx] = Some(Position::new(pm.row, pm.col, pm.rotated));
        }
        let positions = positions
            .into_iter()
            .zip(&instance.modules)
            .map(|(p, m)| p.ok_or_else(|| Error::UnknownModule(format!("{} (not placed)", m.id))))
            .collect::<Result<Vec<_>>>()?;
        Placement::new(instance, positions)
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn instance_arc(&self) -> &Arc<ProblemInstance> {
        &self.instance
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn placed(&self) -> Vec<PlacedModule> {
        self.instance
            .modules
            .iter()
            .zip(&self.positions)
            .map(|(m, p)| PlacedModule {
                module_id: m.id.clone(),
                row: p.row,
                col: p.col,
                rotated: p.rotated,
            })
            .collect()
    }

    pub fn footprint(&self, idx: usize) -> CellRect {
        CellRect::of(&self.instance.modules[idx], self.positions[idx])
    }

    pub fn footprints(&self) -> Vec<CellRect> {
        (0..self.positions.len())
            .map(|i| self.footprint(i))
            .collect()
    }

    pub fn is_feasible(&self) -> bool {
        overlap_penalty(self) == 0
    }

    /// Returns a copy with one module moved. Fails if it leaves the core.
    pub fn with_position(&self, idx: usize, pos: Position) -> Result<Placement> {
        let mut positions = self.positions.clone();
        positions[idx] = pos;
        Placement::new(self.instance.clone(), positions)
    }

    /// Shifts the layout so its bounding array starts at `(1, 1)`.
    pub fn normalized(&self) -> Placement {
        let bb = bounding_box(&self.instance, &self.positions);
        let positions = self
            .positions
            .iter()
            .map(|p| Position::new(p.row - bb.row0 + 1, p.col - bb.col0 + 1, p.rotated))
            .collect();
        Placement {
            instance: self.instance.clone(),
            positions,
        }
    }
}

pub(crate) fn fits_in_core(spec: &ModuleSpec, pos: Position, rows: u32, cols: u32) -> bool {
    if pos.rotated && !spec.rotatable {
        return false;
    }
    let (w, h) = spec.footprint(pos.rotated);
    pos.row >= 1 && pos.col >= 1 && pos.row + h - 1 <= rows && pos.col + w - 1 <= cols
}

/// Largest-area-first, lowest-then-leftmost positions.
///
/// Modules are taken by descending footprint area (ties by id). Each goes to
/// the first `(row, col)` in row-major order where it avoids every
/// already-placed concurrent module, trying the unrotated orientation before
/// the rotated one at each position. `None` if some module finds no spot.
pub fn first_fit_positions(inst: &ProblemInstance) -> Option<Vec<Position>> {
    let (rows, cols) = inst.bounds();
    let conc = Concurrency::new(inst);
    let mut order: Vec<usize> = (0..inst.modules.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&inst.modules[a], &inst.modules[b]);
        mb.cell_count()
            .cmp(&ma.cell_count())
            .then_with(|| ma.id.cmp(&mb.id))
    });

    let mut placed: Vec<Option<CellRect>> = vec![None; inst.modules.len()];
    let mut positions = vec![Position::new(1, 1, false); inst.modules.len()];
    for idx in order {
        let spec = &inst.modules[idx];
        let orientations: &[bool] = if spec.rotatable {
            &[false, true]
        } else {
            &[false]
        };
        let spot = (1..=rows)
            .flat_map(|r| (1..=cols).map(move |c| (r, c)))
            .flat_map(|(r, c)| {
                orientations
                    .iter()
                    .map(move |&rot| Position::new(r, c, rot))
            })
            .find(|&pos| {
                let rect = CellRect::of(spec, pos);
                rect.row1 <= rows
                    && rect.col1 <= cols
                    && placed.iter().enumerate().all(|(j, other)| match other {
                        Some(o) if conc.concurrent(idx, j) => o.intersection(&rect) == 0,
                        _ => true,
                    })
            })?;
        placed[idx] = Some(CellRect::of(spec, spot));
        positions[idx] = spot;
    }
    Some(positions)
}

/// Sum over time-concurrent pairs of the cells their footprints share.
pub fn overlap_penalty(p: &Placement) -> u64 {
    let conc = Concurrency::new(&p.instance);
    overlap_penalty_with(&p.instance, &conc, &p.positions)
}

pub(crate) fn overlap_penalty_with(
    inst: &ProblemInstance,
    conc: &Concurrency,
    positions: &[Position],
) -> u64 {
    let rects: Vec<CellRect> = inst
        .modules
        .iter()
        .zip(positions)
        .map(|(m, p)| CellRect::of(m, *p))
        .collect();
    let mut total = 0;
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            if conc.concurrent(i, j) {
                total += rects[i].intersection(&rects[j]);
            }
        }
    }
    total
}

/// Size of the smallest axis-aligned rectangle holding every footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayArea {
    pub rows_used: u32,
    pub cols_used: u32,
    pub cell_count: u64,
}

pub(crate) fn bounding_box(inst: &ProblemInstance, positions: &[Position]) -> CellRect {
    inst.modules
        .iter()
        .zip(positions)
        .map(|(m, p)| CellRect::of(m, *p))
        .reduce(|a, b| a.union(&b))
        .expect("instance has modules")
}

/// The bounding array of the placement in grid coordinates.
pub fn bounding_array(p: &Placement) -> CellRect {
    bounding_box(&p.instance, &p.positions)
}

pub fn array_area_cells(p: &Placement) -> ArrayArea {
    let bb = bounding_array(p);
    ArrayArea {
        rows_used: bb.rows(),
        cols_used: bb.cols(),
        cell_count: bb.cell_count(),
    }
}

pub fn area_mm2(cell_count: u64, pitch_mm: f64) -> f64 {
    cell_count as f64 * pitch_mm * pitch_mm
}

/// 0/1 grid; `true` marks an occupied or faulty cell.
///
/// Indexed 1-based with row 1 at the bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyMatrix {
    rows: u32,
    cols: u32,
    cells: Vec<bool>,
}

impl OccupancyMatrix {
    pub fn empty(rows: u32, cols: u32) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be nonempty");
        OccupancyMatrix {
            rows,
            cols,
            cells: vec![false; (rows * cols) as usize],
        }
    }

    pub fn from_fn(rows: u32, cols: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::empty(rows, cols);
        for r in 1..=rows {
            for c in 1..=cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Parses rows written top row first, as they would be drawn; `1` or `#`
    /// marks an occupied cell.
    pub fn from_picture(lines: &[&str]) -> Self {
        let rows = lines.len() as u32;
        let cols = lines.first().map_or(0, |l| l.chars().count()) as u32;
        let mut m = Self::empty(rows, cols);
        for (i, line) in lines.iter().enumerate() {
            assert_eq!(line.chars().count() as u32, cols, "ragged picture");
            let row = rows - i as u32;
            for (j, ch) in line.chars().enumerate() {
                m.set(row, j as u32 + 1, matches!(ch, '1' | '#'));
            }
        }
        m
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    #[inline]
    fn index(&self, row: u32, col: u32) -> usize {
        debug_assert!((1..=self.rows).contains(&row) && (1..=self.cols).contains(&col));
        ((row - 1) * self.cols + (col - 1)) as usize
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.cells[self.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, occupied: bool) {
        let i = self.index(row, col);
        self.cells[i] = occupied;
    }

    /// Marks every cell of `rect` (clipped to the matrix) as occupied.
    pub fn fill(&mut self, rect: &CellRect) {
        let r1 = rect.row1.min(self.rows);
        let c1 = rect.col1.min(self.cols);
        for r in rect.row0.max(1)..=r1 {
            for c in rect.col0.max(1)..=c1 {
                self.set(r, c, true);
            }
        }
    }

    pub fn count_occupied(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for OccupancyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in (1..=self.rows).rev() {
            for c in 1..=self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Occupancy seen by `target` once it is lifted off the grid: cells of every
/// other module concurrent with it, plus the faulty cell, over the full grid.
pub fn occupancy_for(
    p: &Placement,
    target: &str,
    faulty_cell: Option<(u32, u32)>,
) -> Result<OccupancyMatrix> {
    let idx = p
        .instance
        .index_of(target)
        .ok_or_else(|| Error::UnknownModule(target.to_owned()))?;
    let (rows, cols) = p.instance.bounds();
    let region = CellRect {
        row0: 1,
        col0: 1,
        row1: rows,
        col1: cols,
    };
    let conc = Concurrency::new(&p.instance);
    occupancy_in(p, &conc, idx, faulty_cell, region)
}

/// Like [`occupancy_for`] but restricted to `region` (grid coordinates); the
/// returned matrix is indexed relative to the region's bottom-left cell.
pub(crate) fn occupancy_in(
    p: &Placement,
    conc: &Concurrency,
    target: usize,
    faulty_cell: Option<(u32, u32)>,
    region: CellRect,
) -> Result<OccupancyMatrix> {
    let mut m = OccupancyMatrix::empty(region.rows(), region.cols());
    for &j in conc.neighbors(target) {
        if let Some(local) = to_local(&region, &p.footprint(j)) {
            m.fill(&local);
        }
    }
    if let Some((row, col)) = faulty_cell {
        if !region.contains(row, col) {
            return Err(Error::CellOutOfBounds {
                row,
                col,
                rows: region.row1,
                cols: region.col1,
            });
        }
        m.set(row - region.row0 + 1, col - region.col0 + 1, true);
    }
    Ok(m)
}

/// Clips `rect` to `region` and re-expresses it relative to the region.
pub(crate) fn to_local(region: &CellRect, rect: &CellRect) -> Option<CellRect> {
    let r0 = rect.row0.max(region.row0);
    let r1 = rect.row1.min(region.row1);
    let c0 = rect.col0.max(region.col0);
    let c1 = rect.col1.min(region.col1);
    (r0 <= r1 && c0 <= c1).then(|| CellRect {
        row0: r0 - region.row0 + 1,
        col0: c0 - region.col0 + 1,
        row1: r1 - region.row0 + 1,
        col1: c1 - region.col0 + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{pcr_fixture, GridSpec};

    fn module(id: &str, w: u32, h: u32, start: f64, dur: f64) -> ModuleSpec {
        ModuleSpec {
            id: id.into(),
            width_cells: w,
            height_cells: h,
            start_time_s: start,
            duration_s: dur,
            rotatable: true,
        }
    }

    fn instance(rows: u32, cols: u32, modules: Vec<ModuleSpec>) -> Arc<ProblemInstance> {
        let grid = GridSpec {
            rows_max: rows,
            cols_max: cols,
            pitch_mm: 1.5,
        };
        Arc::new(ProblemInstance::new(grid, modules).unwrap())
    }

    #[test]
    fn time_overlap_half_open() {
        let a = module("a", 1, 1, 0.0, 10.0);
        assert!(!time_overlap(&a, &module("b", 1, 1, 10.0, 5.0)));
        assert!(time_overlap(&a, &module("b", 1, 1, 5.0, 6.0)));
        assert!(time_overlap(&a, &module("b", 1, 1, 0.0, 6.0)));
        assert!(time_overlap(&a, &a));
    }

    #[test]
    fn pcr_concurrency() {
        let inst = pcr_fixture();
        let m = |id: &str| inst.module(id).unwrap();
        assert!(time_overlap(m("M1"), m("M2")));
        assert!(time_overlap(m("M1"), m("M5")));
        // The two mixers the schedule lets share cells.
        assert!(!time_overlap(m("M1"), m("M3")));
        assert!(!time_overlap(m("M6"), m("M7")));
    }

    #[test]
    fn overlap_penalty_counts_shared_cells() {
        let disjoint_time = instance(
            4,
            4,
            vec![module("a", 2, 2, 0.0, 1.0), module("b", 2, 2, 1.0, 1.0)],
        );
        let p = Placement::new(
            disjoint_time,
            vec![Position::new(1, 1, false), Position::new(1, 1, false)],
        )
        .unwrap();
        assert_eq!(overlap_penalty(&p), 0);

        let same_time = instance(
            4,
            4,
            vec![module("a", 2, 2, 0.0, 1.0), module("b", 2, 2, 0.0, 1.0)],
        );
        // b sits one column to the right: shared 2-row x 1-col strip.
        let p = Placement::new(
            same_time,
            vec![Position::new(1, 1, false), Position::new(1, 2, false)],
        )
        .unwrap();
        assert_eq!(overlap_penalty(&p), 2);
        assert!(!p.is_feasible());
    }

    #[test]
    fn core_containment_enforced() {
        let inst = instance(4, 4, vec![module("a", 2, 3, 0.0, 1.0)]);
        assert!(Placement::new(inst.clone(), vec![Position::new(2, 3, false)]).is_ok());
        assert!(matches!(
            Placement::new(inst.clone(), vec![Position::new(3, 3, false)]),
            Err(Error::OutOfCore { .. })
        ));
        assert!(Placement::new(inst, vec![Position::new(0, 1, false)]).is_err());
    }

    #[test]
    fn area_examples() {
        let inst = instance(10, 10, vec![module("a", 4, 4, 0.0, 1.0)]);
        let p = Placement::new(inst, vec![Position::new(5, 3, false)]).unwrap();
        assert_eq!(
            array_area_cells(&p),
            ArrayArea {
                rows_used: 4,
                cols_used: 4,
                cell_count: 16
            }
        );

        let inst = instance(
            20,
            20,
            vec![module("a", 1, 1, 0.0, 1.0), module("b", 1, 1, 0.0, 1.0)],
        );
        let span = |r: u32, c: u32| {
            let p = Placement::new(
                inst.clone(),
                vec![Position::new(1, 1, false), Position::new(r, c, false)],
            )
            .unwrap();
            array_area_cells(&p)
        };
        assert_eq!(span(7, 9).cell_count, 63);
        assert_eq!((span(7, 11).rows_used, span(7, 11).cols_used), (7, 11));
        assert_eq!(span(7, 11).cell_count, 77);
    }

    #[test]
    fn area_in_mm2() {
        assert_eq!(area_mm2(84, 1.5), 189.0);
        assert_eq!(area_mm2(63, 1.5), 141.75);
        assert_eq!(area_mm2(0, 1.5), 0.0);
    }

    #[test]
    fn occupancy_single_module() {
        let inst = instance(3, 3, vec![module("a", 2, 2, 0.0, 1.0)]);
        let p = Placement::new(inst, vec![Position::new(1, 1, false)]).unwrap();
        let m = occupancy_for(&p, "a", None).unwrap();
        assert_eq!(m.count_occupied(), 0);
        let m = occupancy_for(&p, "a", Some((1, 1))).unwrap();
        assert_eq!(m.count_occupied(), 1);
        assert!(m.get(1, 1));
        assert!(matches!(
            occupancy_for(&p, "zz", None),
            Err(Error::UnknownModule(_))
        ));
        assert!(matches!(
            occupancy_for(&p, "a", Some((4, 1))),
            Err(Error::CellOutOfBounds { .. })
        ));
    }

    #[test]
    fn occupancy_marks_only_concurrent_modules() {
        let inst = Arc::new(pcr_fixture());
        // Stack everything in a diagonal so no two footprints touch.
        let mut positions = Vec::new();
        let mut at = 1;
        for m in &inst.modules {
            positions.push(Position::new(at, at, false));
            at += m.width_cells.max(m.height_cells);
        }
        let p = Placement::new(inst.clone(), positions).unwrap();
        let m = occupancy_for(&p, "M1", None).unwrap();
        let conc = Concurrency::new(&inst);
        let i1 = inst.index_of("M1").unwrap();
        let mut expected = OccupancyMatrix::empty(37, 37);
        for j in 0..inst.modules.len() {
            if j != i1 && time_overlap(&inst.modules[i1], &inst.modules[j]) {
                assert!(conc.concurrent(i1, j));
                expected.fill(&p.footprint(j));
            }
        }
        assert_eq!(m, expected);
        // M2, M4, M5 are concurrent with M1 in the fixture schedule.
        assert_eq!(m.count_occupied(), 18 * 3);
        for (r, c) in p.footprint(i1).cells() {
            assert!(!m.get(r, c));
        }
    }

    #[test]
    fn picture_round_trip() {
        let m = OccupancyMatrix::from_picture(&["010", "000"]);
        assert!(m.get(2, 2));
        assert!(!m.get(1, 2));
        assert_eq!(m.to_string(), "010\n000\n");
    }

    #[test]
    fn normalization_moves_to_origin() {
        let inst = instance(
            10,
            10,
            vec![module("a", 2, 2, 0.0, 1.0), module("b", 1, 3, 0.0, 1.0)],
        );
        let p = Placement::new(
            inst,
            vec![Position::new(4, 5, false), Position::new(6, 8, true)],
        )
        .unwrap();
        let n = p.normalized();
        assert_eq!(n.positions()[0], Position::new(1, 1, false));
        assert_eq!(array_area_cells(&n), array_area_cells(&p));
        assert_eq!(bounding_array(&n).row0, 1);
        assert_eq!(bounding_array(&n).col0, 1);
    }
}
