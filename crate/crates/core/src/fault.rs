//! Single-cell fault tolerance under partial reconfiguration.
//!
//! A cell is C-covered when no module uses it, or when every module whose
//! footprint contains it can be moved, alone, to an empty spot that avoids
//! the cell. Other modules stay where they are. Only modules whose time span
//! overlaps the relocated module's span block it. Relocation targets are
//! searched inside the placement's bounding array, the fabricated chip.
//!
//! The fault tolerance index is `k / (rows * cols)` over that array, with `k`
//! the number of C-covered cells.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::empty_rect::{maximal_empty_rects, BRUTE_FORCE_CELL_LIMIT};
use crate::error::{Error, Result};
use crate::placement::{
    bounding_array, occupancy_in, overlap_penalty_with, CellRect, Concurrency, PlacedModule,
    Placement, Position,
};
use crate::problem::ProblemInstance;

/// Coverage of every cell of an evaluated array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub grid_rows: u32,
    pub grid_cols: u32,
    /// Grid coordinates of the array's bottom-left cell.
    pub origin_row: u32,
    pub origin_col: u32,
    /// Row-major, row 1 (bottom) first; local coordinates.
    pub covered: Vec<bool>,
    pub k: u64,
}

impl CoverageReport {
    pub fn cell_count(&self) -> u64 {
        u64::from(self.grid_rows) * u64::from(self.grid_cols)
    }

    pub fn fti(&self) -> f64 {
        self.k as f64 / self.cell_count() as f64
    }

    /// Coverage of a cell given in array-local coordinates.
    pub fn is_covered_local(&self, row: u32, col: u32) -> bool {
        self.covered[((row - 1) * self.grid_cols + (col - 1)) as usize]
    }

    /// Local cells that are not covered.
    pub fn uncovered(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (1..=self.grid_rows)
            .flat_map(move |r| (1..=self.grid_cols).map(move |c| (r, c)))
            .filter(move |&(r, c)| !self.is_covered_local(r, c))
    }
}

fn containing_modules(p: &Placement, row: u32, col: u32) -> Vec<usize> {
    (0..p.positions().len())
        .filter(|&i| p.footprint(i).contains(row, col))
        .collect()
}

fn check_feasible(p: &Placement, conc: &Concurrency) -> Result<()> {
    let overlap = overlap_penalty_with(p.instance(), conc, p.positions());
    if overlap > 0 {
        return Err(Error::Infeasible { overlap });
    }
    Ok(())
}

fn check_in_region(region: &CellRect, row: u32, col: u32) -> Result<()> {
    if region.contains(row, col) {
        Ok(())
    } else {
        Err(Error::CellOutOfBounds {
            row,
            col,
            rows: region.row1,
            cols: region.col1,
        })
    }
}

/// Whether a fault at `cell` (grid coordinates) can be tolerated by moving
/// each affected module into a maximal empty rectangle of the bounding
/// array.
pub fn is_covered(p: &Placement, cell: (u32, u32)) -> Result<bool> {
    let conc = Concurrency::new(p.instance());
    check_feasible(p, &conc)?;
    let region = bounding_array(p);
    let (row, col) = cell;
    check_in_region(&region, row, col)?;
    for idx in containing_modules(p, row, col) {
        let spec = &p.instance().modules[idx];
        let occ = occupancy_in(p, &conc, idx, Some(cell), region)?;
        let rects = maximal_empty_rects(&occ);
        let (w, h) = spec.footprint(false);
        if !rects.iter().any(|r| r.fits(w, h, spec.rotatable)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exhaustive check of the same property: try every position and
/// orientation of each affected module against the concurrent footprints.
pub fn brute_force_is_covered(p: &Placement, cell: (u32, u32)) -> Result<bool> {
    let region = bounding_array(p);
    let cells = region.cell_count() as usize;
    if cells > BRUTE_FORCE_CELL_LIMIT {
        return Err(Error::OracleTooLarge {
            cells,
            limit: BRUTE_FORCE_CELL_LIMIT,
        });
    }
    let (row, col) = cell;
    check_in_region(&region, row, col)?;
    let inst = p.instance();
    let footprints = p.footprints();
    let holders: Vec<usize> = (0..footprints.len())
        .filter(|&i| footprints[i].contains(row, col))
        .collect();
    for idx in holders {
        let spec = &inst.modules[idx];
        let blockers: Vec<CellRect> = (0..footprints.len())
            .filter(|&j| j != idx && crate::placement::time_overlap(spec, &inst.modules[j]))
            .map(|j| footprints[j])
            .collect();
        let orientations: &[bool] = if spec.rotatable {
            &[false, true]
        } else {
            &[false]
        };
        let mut found = false;
        'search: for &rotated in orientations {
            for r in region.row0..=region.row1 {
                for c in region.col0..=region.col1 {
                    let cand = CellRect::of(spec, Position::new(r, c, rotated));
                    if !region.contains_rect(&cand) || cand.contains(row, col) {
                        continue;
                    }
                    if blockers.iter().all(|b| b.intersection(&cand) == 0) {
                        found = true;
                        break 'search;
                    }
                }
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coverage over the placement's bounding array.
pub fn coverage_report(p: &Placement) -> Result<CoverageReport> {
    CoverageEvaluator::new(p.instance()).report(p)
}

/// Coverage over an arbitrary region of the grid, which also serves as the
/// relocation space.
pub fn coverage_report_over(p: &Placement, region: CellRect) -> Result<CoverageReport> {
    let (rows, cols) = p.instance().bounds();
    if region.row0 < 1 || region.col0 < 1 || region.row1 > rows || region.col1 > cols {
        return Err(Error::CellOutOfBounds {
            row: region.row1,
            col: region.col1,
            rows,
            cols,
        });
    }
    let conc = Concurrency::new(p.instance());
    check_feasible(p, &conc)?;
    let mut eval = CoverageEvaluator::new(p.instance());
    Ok(eval.report_in(p.positions(), region))
}

/// Where a module containing a faulty cell would be moved, if anywhere.
///
/// Among maximal empty rectangles that fit the module, the one whose
/// bottom-left cell is lowest (then leftmost) wins; the module goes to that
/// corner, unrotated when both orientations fit.
pub fn relocation_for(
    p: &Placement,
    module_id: &str,
    faulty_cell: (u32, u32),
) -> Result<Option<PlacedModule>> {
    let inst = p.instance();
    let idx = inst
        .index_of(module_id)
        .ok_or_else(|| Error::UnknownModule(module_id.to_owned()))?;
    let (row, col) = faulty_cell;
    if !p.footprint(idx).contains(row, col) {
        return Err(Error::CellNotInModule {
            module: module_id.to_owned(),
            row,
            col,
        });
    }
    let conc = Concurrency::new(inst);
    let region = bounding_array(p);
    let occ = occupancy_in(p, &conc, idx, Some(faulty_cell), region)?;
    let spec = &inst.modules[idx];
    let (w, h) = spec.footprint(false);
    let target = maximal_empty_rects(&occ)
        .into_iter()
        .filter(|r| r.fits(w, h, spec.rotatable))
        .min_by_key(|r| (r.bottom, r.left));
    Ok(target.map(|r| PlacedModule {
        module_id: module_id.to_owned(),
        row: region.row0 + r.bottom - 1,
        col: region.col0 + r.left - 1,
        rotated: !r.fits(w, h, false),
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    module: usize,
    region: CellRect,
    // The module's own position followed by those of its concurrent modules.
    positions: Vec<Position>,
}

const CACHE_LIMIT: usize = 1 << 17;

/// Coverage evaluation with a memo of per-module relocation results.
///
/// Whether a module survives a fault in one of its cells depends only on the
/// array region, its own position, and the positions of modules concurrent
/// with it, so a single-module move invalidates only a few entries.
#[derive(Debug)]
pub struct CoverageEvaluator {
    conc: Concurrency,
    instance: ProblemInstance,
    blocked: Vec<i32>,
    hits: Vec<i64>,
    cache: HashMap<CacheKey, Vec<bool>>,
}

impl CoverageEvaluator {
    pub fn new(inst: &ProblemInstance) -> Self {
        CoverageEvaluator {
            conc: Concurrency::new(inst),
            instance: inst.clone(),
            blocked: Vec::new(),
            hits: Vec::new(),
            cache: HashMap::new(),
        }
    }

    /// Full report over the bounding array; fails on infeasible placements.
    pub fn report(&mut self, p: &Placement) -> Result<CoverageReport> {
        check_feasible(p, &self.conc)?;
        let region = bounding_array(p);
        Ok(self.report_in(p.positions(), region))
    }

    /// Number of covered cells of a feasible layout's bounding array.
    pub(crate) fn covered_count(&mut self, positions: &[Position]) -> u64 {
        let region = crate::placement::bounding_box(&self.instance, positions);
        self.report_in(positions, region).k
    }

    fn report_in(&mut self, positions: &[Position], region: CellRect) -> CoverageReport {
        let rows = region.rows();
        let cols = region.cols();
        let mut covered = vec![true; (rows * cols) as usize];
        for idx in 0..positions.len() {
            let fp = CellRect::of(&self.instance.modules[idx], positions[idx]);
            let survives = self.module_survival(idx, positions, region);
            for (i, (r, c)) in fp.cells().enumerate() {
                if !survives[i] && region.contains(r, c) {
                    covered[((r - region.row0) * cols + (c - region.col0)) as usize] = false;
                }
            }
        }
        let k = covered.iter().filter(|&&b| b).count() as u64;
        CoverageReport {
            grid_rows: rows,
            grid_cols: cols,
            origin_row: region.row0,
            origin_col: region.col0,
            covered,
            k,
        }
    }

    /// For each cell of module `idx`'s footprint (row-major), whether the
    /// module can be relocated when that cell fails.
    ///
    /// Every empty placement of the module in the region is counted once,
    /// along with how many of them cover each cell. A fault at `f` leaves the
    /// module somewhere to go iff some placement misses `f`. This is the same
    /// question the maximal-rectangle test answers, without redoing the sweep
    /// for every fault.
    fn module_survival(
        &mut self,
        idx: usize,
        positions: &[Position],
        region: CellRect,
    ) -> Vec<bool> {
        let key = CacheKey {
            module: idx,
            region,
            positions: std::iter::once(positions[idx])
                .chain(self.conc.neighbors(idx).iter().map(|&j| positions[j]))
                .collect(),
        };
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }

        let spec = &self.instance.modules[idx];
        let rows = region.rows() as usize;
        let cols = region.cols() as usize;
        let stride = cols + 1;

        // blocked[r * stride + c]: occupied cells in local rows 1..=r, cols 1..=c
        let blocked = &mut self.blocked;
        blocked.clear();
        blocked.resize((rows + 1) * stride, 0);
        for &j in self.conc.neighbors(idx) {
            let other = CellRect::of(&self.instance.modules[j], positions[j]);
            if let Some(local) = crate::placement::to_local(&region, &other) {
                for (r, c) in local.cells() {
                    blocked[r as usize * stride + c as usize] = 1;
                }
            }
        }
        for r in 1..=rows {
            for c in 1..=cols {
                let i = r * stride + c;
                blocked[i] += blocked[i - stride] + blocked[i - 1] - blocked[i - stride - 1];
            }
        }

        // 2-D difference array of placements; prefix-summed below into the
        // number of placements covering each cell.
        let hits = &mut self.hits;
        hits.clear();
        hits.resize((rows + 2) * (stride + 1), 0);
        let hs = stride + 1;
        let mut total: i64 = 0;
        let (w, h) = spec.footprint(false);
        let shapes: &[(u32, u32)] = if spec.rotatable && w != h {
            &[(w, h), (h, w)]
        } else {
            &[(w, h)]
        };
        for &(w, h) in shapes {
            let (w, h) = (w as usize, h as usize);
            if w > cols || h > rows {
                continue;
            }
            for r0 in 1..=rows + 1 - h {
                let r1 = r0 + h - 1;
                for c0 in 1..=cols + 1 - w {
                    let c1 = c0 + w - 1;
                    let inside = blocked[r1 * stride + c1] + blocked[(r0 - 1) * stride + c0 - 1]
                        - blocked[(r0 - 1) * stride + c1]
                        - blocked[r1 * stride + c0 - 1];
                    if inside == 0 {
                        total += 1;
                        hits[r0 * hs + c0] += 1;
                        hits[(r1 + 1) * hs + c0] -= 1;
                        hits[r0 * hs + c1 + 1] -= 1;
                        hits[(r1 + 1) * hs + c1 + 1] += 1;
                    }
                }
            }
        }
        for r in 1..=rows {
            for c in 1..=cols {
                let i = r * hs + c;
                hits[i] += hits[i - hs] + hits[i - 1] - hits[i - hs - 1];
            }
        }

        let fp = CellRect::of(spec, positions[idx]);
        let survives: Vec<bool> = fp
            .cells()
            .map(|(r, c)| {
                region.contains(r, c) && {
                    let (lr, lc) = (
                        (r - region.row0 + 1) as usize,
                        (c - region.col0 + 1) as usize,
                    );
                    total - hits[lr * hs + lc] > 0
                }
            })
            .collect();

        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(key, survives.clone());
        survives
    }
}
