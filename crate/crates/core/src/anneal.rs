//! Simulated-annealing placement.
//!
//! Modules are moved directly in grid coordinates. A proposal either
//! displaces one module inside a temperature-controlled window (optionally
//! flipping its orientation) or swaps the bottom-left corners of two modules
//! (optionally flipping one or both). Forbidden overlap between concurrent
//! modules is priced into the cost instead of being forbidden outright, so
//! the chain can pass through infeasible layouts; only feasible layouts are
//! ever returned as the best-seen result.
//!
//! The outer loop cools geometrically, `T_i = t_initial * cooling_alpha^i`,
//! and stops after the first round whose window has shrunk to `window_min`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::CoverageEvaluator;
use crate::placement::{
    bounding_box, first_fit_positions, fits_in_core, overlap_penalty_with, Concurrency, Placement,
    Position,
};
use crate::problem::ProblemInstance;

/// Grid size above which fault-aware annealing warns about run time.
pub const FT_GRID_WARN_CELLS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub t_initial: f64,
    pub cooling_alpha: f64,
    pub iters_per_module: u32,
    pub p_single_move: f64,
    /// `None` means one cell per unit of `t_initial`, rounded up.
    pub window_initial: Option<u32>,
    pub window_min: u32,
    pub rng_seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            t_initial: 10_000.0,
            cooling_alpha: 0.9,
            iters_per_module: 400,
            p_single_move: 0.75,
            window_initial: None,
            window_min: 1,
            rng_seed: 0,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_owned(),
            })
        };
        if !(self.t_initial.is_finite() && self.t_initial > 0.0) {
            return bad("t_initial", "must be positive");
        }
        if !(self.cooling_alpha > 0.0 && self.cooling_alpha < 1.0) {
            return bad("cooling_alpha", "must lie strictly between 0 and 1");
        }
        if !(self.p_single_move > 0.0 && self.p_single_move < 1.0) {
            return bad("p_single_move", "must lie strictly between 0 and 1");
        }
        if self.window_min < 1 {
            return bad("window_min", "must be at least 1");
        }
        if self.window_initial == Some(0) {
            return bad("window_initial", "must be at least 1");
        }
        if self.iters_per_module < 1 {
            return bad("iters_per_module", "must be at least 1");
        }
        Ok(())
    }

    pub fn resolved_window_initial(&self) -> u32 {
        self.window_initial
            .unwrap_or_else(|| self.t_initial.ceil().min(f64::from(u32::MAX)) as u32)
            .max(1)
    }

    /// Temperature of cooling round `round` (0-based).
    pub fn temperature(&self, round: u32) -> f64 {
        self.t_initial * self.cooling_alpha.powi(round as i32)
    }
}

/// Displacement window half-width in cells at temperature `t`.
pub fn window_span(t: f64, params: &AnnealParams) -> u32 {
    let scaled = (f64::from(params.resolved_window_initial()) * t / params.t_initial).ceil();
    (scaled.min(f64::from(u32::MAX)) as u32).max(params.window_min)
}

/// Which fault-tolerance quantity `beta_ft` multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtTerm {
    /// `k / cells`. Bounded by 1, so a larger array only pays off when the
    /// coverage gain outweighs the added area.
    #[default]
    Index,
    /// `k` itself. Every unused cell is covered, so once `beta_ft` exceeds
    /// `alpha_area` growing the array always lowers the cost.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha_area: f64,
    pub beta_ft: f64,
    /// `None` resolves to twice the area weight times the largest module's
    /// cell count.
    pub lambda_overlap: Option<f64>,
    #[serde(default)]
    pub ft_term: FtTerm,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha_area: 1.0,
            beta_ft: 0.0,
            lambda_overlap: None,
            ft_term: FtTerm::Index,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_area.is_finite() && self.alpha_area >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha_area",
                reason: "must be nonnegative".into(),
            });
        }
        if !(self.beta_ft.is_finite() && self.beta_ft >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta_ft",
                reason: "must be nonnegative".into(),
            });
        }
        if let Some(l) = self.lambda_overlap {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "lambda_overlap",
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }

    pub fn resolved_lambda(&self, inst: &ProblemInstance) -> f64 {
        self.lambda_overlap.unwrap_or_else(|| {
            // A zero area weight would make the penalty vanish.
            let scale = if self.alpha_area > 0.0 {
                self.alpha_area
            } else {
                1.0
            };
            2.0 * scale * f64::from(inst.largest_module_cells())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Displace,
    DisplaceRotate,
    Interchange,
    InterchangeRotate,
}

/// Which move kinds a run may propose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSet {
    pub displace: bool,
    pub displace_rotate: bool,
    pub interchange: bool,
    pub interchange_rotate: bool,
}

impl MoveSet {
    pub const ALL: MoveSet = MoveSet {
        displace: true,
        displace_rotate: true,
        interchange: true,
        interchange_rotate: true,
    };

    pub const SINGLE_MODULE: MoveSet = MoveSet {
        displace: true,
        displace_rotate: true,
        interchange: false,
        interchange_rotate: false,
    };

    pub fn allows(&self, kind: MoveKind) -> bool {
        match kind {
            MoveKind::Displace => self.displace,
            MoveKind::DisplaceRotate => self.displace_rotate,
            MoveKind::Interchange => self.interchange,
            MoveKind::InterchangeRotate => self.interchange_rotate,
        }
    }

    fn single(&self) -> bool {
        self.displace || self.displace_rotate
    }

    fn pair(&self) -> bool {
        self.interchange || self.interchange_rotate
    }
}

/// A proposed change. Modules are referred to by instance index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Displace {
        module: usize,
        row: u32,
        col: u32,
        rotate: bool,
    },
    Interchange {
        a: usize,
        b: usize,
        rotate_a: bool,
        rotate_b: bool,
    },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match *self {
            Move::Displace { rotate: false, .. } => MoveKind::Displace,
            Move::Displace { rotate: true, .. } => MoveKind::DisplaceRotate,
            Move::Interchange {
                rotate_a: false,
                rotate_b: false,
                ..
            } => MoveKind::Interchange,
            Move::Interchange { .. } => MoveKind::InterchangeRotate,
        }
    }

    /// Applies the move, returning `None` if any module would leave the core.
    pub fn apply(&self, inst: &ProblemInstance, positions: &[Position]) -> Option<Vec<Position>> {
        let (rows, cols) = inst.bounds();
        let mut next = positions.to_vec();
        match *self {
            Move::Displace {
                module,
                row,
                col,
                rotate,
            } => {
                next[module] = Position::new(row, col, positions[module].rotated ^ rotate);
                fits_in_core(&inst.modules[module], next[module], rows, cols).then_some(next)
            }
            Move::Interchange {
                a,
                b,
                rotate_a,
                rotate_b,
            } => {
                let (pa, pb) = (positions[a], positions[b]);
                next[a] = Position::new(pb.row, pb.col, pa.rotated ^ rotate_a);
                next[b] = Position::new(pa.row, pa.col, pb.rotated ^ rotate_b);
                (fits_in_core(&inst.modules[a], next[a], rows, cols)
                    && fits_in_core(&inst.modules[b], next[b], rows, cols))
                .then_some(next)
            }
        }
    }
}

/// Draws one move. Single-module moves are chosen with probability
/// `p_single_move` and land inside the current window around the module;
/// within each class the rotating variant is chosen half the time.
pub fn propose<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    positions: &[Position],
    t: f64,
    params: &AnnealParams,
    moves: &MoveSet,
    rng: &mut R,
) -> Move {
    let n = positions.len();
    let pair_ok = n >= 2 && moves.pair();
    let single = if !pair_ok {
        true
    } else if !moves.single() {
        false
    } else {
        rng.gen::<f64>() < params.p_single_move
    };

    if single {
        let module = rng.gen_range(0..n);
        let rotate = pick_variant(moves.displace, moves.displace_rotate, rng)
            && inst.modules[module].rotatable;
        let cur = positions[module];
        let spec = &inst.modules[module];
        let (w, h) = spec.footprint(cur.rotated ^ rotate);
        let (rows, cols) = inst.bounds();
        let span = window_span(t, params);
        let row = sample_axis(cur.row, span, rows.checked_sub(h).map(|x| x + 1), rng);
        let col = sample_axis(cur.col, span, cols.checked_sub(w).map(|x| x + 1), rng);
        Move::Displace {
            module,
            row,
            col,
            rotate,
        }
    } else {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (rotate_a, rotate_b) = if pick_variant(moves.interchange, moves.interchange_rotate, rng)
        {
            match rng.gen_range(0..3) {
                0 => (true, false),
                1 => (false, true),
                _ => (true, true),
            }
        } else {
            (false, false)
        };
        Move::Interchange {
            a,
            b,
            rotate_a: rotate_a && inst.modules[a].rotatable,
            rotate_b: rotate_b && inst.modules[b].rotatable,
        }
    }
}

fn pick_variant<R: Rng + ?Sized>(plain: bool, rotating: bool, rng: &mut R) -> bool {
    match (plain, rotating) {
        (true, true) => rng.gen_bool(0.5),
        (false, true) => true,
        _ => false,
    }
}

/// Uniform coordinate within `span` of `cur`, restricted to `1..=max_start`.
/// Falls back to `cur` when the window misses the valid range entirely; such
/// a move is then rejected as leaving the core.
fn sample_axis<R: Rng + ?Sized>(cur: u32, span: u32, max_start: Option<u32>, rng: &mut R) -> u32 {
    let Some(max_start) = max_start.filter(|&m| m >= 1) else {
        return cur;
    };
    let lo = cur.saturating_sub(span).max(1);
    let hi = cur.saturating_add(span).min(max_start);
    if lo > hi {
        cur
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Metropolis rule: improvements and ties are always taken; a worse state is
/// taken when `r < exp(-delta / t)`.
pub fn metropolis_accept(delta: f64, t: f64, r: f64) -> bool {
    delta <= 0.0 || r < (-delta / t).exp()
}

/// Cost breakdown of one layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerms {
    pub cells: u64,
    pub overlap: u64,
    pub k: u64,
    pub total: f64,
}

/// Evaluates `alpha * cells - beta * ft + lambda * overlap` for layouts of one
/// instance, where `ft` is `k / cells` or `k` depending on
/// [`CostWeights::ft_term`].
#[derive(Debug)]
pub struct CostModel {
    instance: Arc<ProblemInstance>,
    conc: Concurrency,
    weights: CostWeights,
    lambda: f64,
    with_ft: bool,
    coverage: CoverageEvaluator,
}

impl CostModel {
    pub fn new(instance: Arc<ProblemInstance>, weights: CostWeights, with_ft: bool) -> Self {
        let lambda = weights.resolved_lambda(&instance);
        CostModel {
            conc: Concurrency::new(&instance),
            coverage: CoverageEvaluator::new(&instance),
            instance,
            weights,
            lambda,
            with_ft,
        }
    }

    pub fn terms(&mut self, positions: &[Position]) -> CostTerms {
        let cells = bounding_box(&self.instance, positions).cell_count();
        let overlap = overlap_penalty_with(&self.instance, &self.conc, positions);
        // k needs a feasible layout; infeasible layouts score k = 0.
        let k = if self.with_ft && overlap == 0 {
            self.coverage.covered_count(positions)
        } else {
            0
        };
        let ft = match self.weights.ft_term {
            FtTerm::Index => k as f64 / cells as f64,
            FtTerm::Count => k as f64,
        };
        let total = self.weights.alpha_area * cells as f64 - self.weights.beta_ft * ft
            + self.lambda * overlap as f64;
        CostTerms {
            cells,
            overlap,
            k,
            total,
        }
    }
}

/// Cost of a placement under `w`.
pub fn cost(p: &Placement, w: &CostWeights, with_ft: bool) -> f64 {
    CostModel::new(p.instance_arc().clone(), *w, with_ft)
        .terms(p.positions())
        .total
}

/// Shelf-packs modules in instance order from the bottom-left corner,
/// ignoring time sharing, so the result is feasible for any schedule. When
/// the bounds are too tight for that, falls back to the time-aware
/// [`first_fit_positions`].
pub fn initial_placement(inst: Arc<ProblemInstance>) -> Result<Placement> {
    let positions = shelf_positions(&inst).or_else(|| first_fit_positions(&inst));
    let Some(positions) = positions else {
        let (rows, cols) = inst.bounds();
        let needed: u32 = inst
            .modules
            .iter()
            .map(|m| m.width_cells.max(m.height_cells))
            .sum();
        return Err(Error::BoundsTooTight {
            rows,
            cols,
            needed_rows: needed,
            needed_cols: needed,
        });
    };
    Placement::new(inst, positions)
}

fn shelf_positions(inst: &ProblemInstance) -> Option<Vec<Position>> {
    let (rows, cols) = inst.bounds();
    let mut positions = Vec::with_capacity(inst.modules.len());
    let (mut row, mut col, mut shelf) = (1u32, 1u32, 0u32);
    for spec in &inst.modules {
        let mut placed = None;
        let orientations: &[bool] = if spec.rotatable {
            &[false, true]
        } else {
            &[false]
        };
        for _attempt in 0..2 {
            for &rot in orientations {
                let (w, h) = spec.footprint(rot);
                if col + w - 1 <= cols && row + h - 1 <= rows {
                    placed = Some((Position::new(row, col, rot), w, h));
                    break;
                }
            }
            if placed.is_some() || col == 1 {
                break;
            }
            // open a new shelf
            row += shelf;
            col = 1;
            shelf = 0;
        }
        let (pos, w, h) = placed?;
        positions.push(pos);
        col += w;
        shelf = shelf.max(h);
    }
    Some(positions)
}

/// Hooks for inspecting a run.
pub trait Observer {
    fn round_started(&mut self, _round: u32, _temperature: f64, _window: u32) {}
    /// Called for every proposal that stayed inside the core.
    fn evaluated(&mut self, _mv: &Move, _delta: f64, _accepted: bool) {}
    /// Called with the current state's terms after every accepted move.
    fn current(&mut self, _terms: &CostTerms) {}
}

/// Observer that ignores everything.
pub struct Quiet;

impl Observer for Quiet {}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    /// Lowest-cost feasible layout seen, or the final layout when none was
    /// feasible.
    pub placement: Placement,
    pub terms: CostTerms,
    pub feasible: bool,
    pub rounds: u32,
    pub proposals: u64,
    pub accepted: u64,
    pub final_temperature: f64,
}

pub fn anneal(
    start: &Placement,
    params: &AnnealParams,
    weights: &CostWeights,
    with_ft: bool,
    moves: &MoveSet,
) -> Result<AnnealOutcome> {
    anneal_observed(start, params, weights, with_ft, moves, &mut Quiet)
}

pub fn anneal_observed(
    start: &Placement,
    params: &AnnealParams,
    weights: &CostWeights,
    with_ft: bool,
    moves: &MoveSet,
    observer: &mut dyn Observer,
) -> Result<AnnealOutcome> {
    params.validate()?;
    weights.validate()?;
    if !(moves.single() || moves.pair()) {
        return Err(Error::InvalidParameter {
            name: "move_filter",
            reason: "no move kind enabled".into(),
        });
    }
    let inst = start.instance_arc().clone();
    if with_ft && inst.grid.cell_count() > FT_GRID_WARN_CELLS {
        log::warn!(
            "fault-aware annealing on a {}x{} grid evaluates full coverage per move; expect long run times",
            inst.grid.rows_max,
            inst.grid.cols_max
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut model = CostModel::new(inst.clone(), *weights, with_ft);
    let iters = u64::from(params.iters_per_module) * inst.modules.len() as u64;

    let mut current = start.positions().to_vec();
    let mut current_terms = model.terms(&current);
    let mut best: Option<(Vec<Position>, CostTerms)> =
        (current_terms.overlap == 0).then(|| (current.clone(), current_terms));

    let mut round = 0u32;
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    let final_temperature = loop {
        let t = params.temperature(round);
        let window = window_span(t, params);
        observer.round_started(round, t, window);
        for _ in 0..iters {
            let mv = propose(&inst, &current, t, params, moves, &mut rng);
            let Some(candidate) = mv.apply(&inst, &current) else {
                continue;
            };
            proposals += 1;
            let terms = model.terms(&candidate);
            let delta = terms.total - current_terms.total;
            let r: f64 = rng.gen();
            let take = metropolis_accept(delta, t, r);
            observer.evaluated(&mv, delta, take);
            if !take {
                continue;
            }
            accepted += 1;
            current = candidate;
            current_terms = terms;
            observer.current(&current_terms);
            if current_terms.overlap == 0
                && best
                    .as_ref()
                    .is_none_or(|(_, b)| current_terms.total < b.total)
            {
                best = Some((current.clone(), current_terms));
            }
        }
        if window <= params.window_min {
            break t;
        }
        round += 1;
    };

    let (positions, terms, feasible) = match best {
        Some((pos, terms)) => (pos, terms, true),
        None => (current, current_terms, false),
    };
    Ok(AnnealOutcome {
        placement: Placement::new(inst, positions)?,
        terms,
        feasible,
        rounds: round + 1,
        proposals,
        accepted,
        final_temperature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{array_area_cells, overlap_penalty};
    use crate::problem::{pcr_fixture, GridSpec, ModuleSpec};

    fn module(id: &str, w: u32, h: u32, start: f64) -> ModuleSpec {
        ModuleSpec {
            id: id.into(),
            width_cells: w,
            height_cells: h,
            start_time_s: start,
            duration_s: 1.0,
            rotatable: true,
        }
    }

    fn inst(rows: u32, cols: u32, modules: Vec<ModuleSpec>) -> Arc<ProblemInstance> {
        let grid = GridSpec {
            rows_max: rows,
            cols_max: cols,
            pitch_mm: 1.5,
        };
        Arc::new(ProblemInstance::new(grid, modules).unwrap())
    }

    fn quick_params(seed: u64) -> AnnealParams {
        AnnealParams {
            iters_per_module: 40,
            rng_seed: seed,
            ..AnnealParams::default()
        }
    }

    #[test]
    fn window_rule() {
        let p = AnnealParams {
            window_initial: Some(16),
            ..AnnealParams::default()
        };
        assert_eq!(window_span(p.t_initial, &p), 16);
        assert_eq!(window_span(p.t_initial / 2.0, &p), 8);
        assert_eq!(window_span(1e-12, &p), 1);
        let mut last = u32::MAX;
        for i in 0..200 {
            let w = window_span(p.temperature(i), &p);
            assert!(w <= last);
            last = w;
        }
        // default window tracks the temperature in cells
        let d = AnnealParams::default();
        assert_eq!(d.resolved_window_initial(), 10_000);
        assert_eq!(window_span(37.2, &d), 38);
    }

    #[test]
    fn param_validation() {
        assert!(AnnealParams::default().validate().is_ok());
        for bad in [
            AnnealParams {
                cooling_alpha: 1.0,
                ..AnnealParams::default()
            },
            AnnealParams {
                p_single_move: 0.0,
                ..AnnealParams::default()
            },
            AnnealParams {
                window_min: 0,
                ..AnnealParams::default()
            },
            AnnealParams {
                t_initial: -1.0,
                ..AnnealParams::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let w = CostWeights {
            lambda_overlap: Some(0.0),
            ..CostWeights::default()
        };
        assert!(w.validate().is_err());
    }

    #[test]
    fn metropolis_examples() {
        assert!(metropolis_accept(-5.0, 1e-9, 0.999_999));
        assert!(metropolis_accept(0.0, 1.0, 0.999_999));
        assert!(metropolis_accept(1.0, 1.0, 0.3));
        assert!(!metropolis_accept(1.0, 1.0, 0.4));
    }

    #[test]
    fn single_module_starts_at_origin_and_only_displaces() {
        let i = inst(5, 5, vec![module("a", 2, 3, 0.0)]);
        let p = initial_placement(i.clone()).unwrap();
        assert_eq!(p.positions()[0], Position::new(1, 1, false));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mv = propose(
                &i,
                p.positions(),
                100.0,
                &AnnealParams::default(),
                &MoveSet::ALL,
                &mut rng,
            );
            assert!(matches!(mv, Move::Displace { .. }));
        }
    }

    #[test]
    fn minimum_window_stays_local() {
        let i = inst(20, 20, vec![module("a", 2, 2, 0.0), module("b", 2, 2, 0.0)]);
        let start = vec![Position::new(10, 10, false), Position::new(1, 1, false)];
        let params = AnnealParams {
            window_initial: Some(20),
            ..AnnealParams::default()
        };
        let t = 1e-6;
        assert_eq!(window_span(t, &params), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            if let Move::Displace {
                module, row, col, ..
            } = propose(&i, &start, t, &params, &MoveSet::SINGLE_MODULE, &mut rng)
            {
                let cur = start[module];
                assert!(row.abs_diff(cur.row) <= 1 && col.abs_diff(cur.col) <= 1);
            } else {
                panic!("interchange proposed with single-module filter");
            }
        }
    }

    #[test]
    fn proposals_are_seeded() {
        let i = Arc::new(pcr_fixture());
        let p = initial_placement(i.clone()).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| {
                    propose(
                        &i,
                        p.positions(),
                        500.0,
                        &AnnealParams::default(),
                        &MoveSet::ALL,
                        &mut rng,
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn initial_placement_feasible() {
        let i = inst(10, 10, vec![module("a", 2, 2, 0.0), module("b", 2, 2, 0.0)]);
        let p = initial_placement(i).unwrap();
        assert_eq!(overlap_penalty(&p), 0);

        let pcr = initial_placement(Arc::new(pcr_fixture())).unwrap();
        assert_eq!(overlap_penalty(&pcr), 0);

        let tight = inst(4, 4, vec![module("a", 4, 4, 0.0), module("b", 2, 2, 0.0)]);
        assert!(matches!(
            initial_placement(tight),
            Err(Error::BoundsTooTight { .. })
        ));
    }

    #[test]
    fn cost_formula() {
        // Two concurrent 1x1 modules at opposite corners of a 7x9 box.
        let i = inst(20, 20, vec![module("a", 1, 1, 0.0), module("b", 1, 1, 0.0)]);
        let p = Placement::new(
            i.clone(),
            vec![Position::new(1, 1, false), Position::new(7, 9, false)],
        )
        .unwrap();
        let w = CostWeights::default();
        assert_eq!(cost(&p, &w, false), 63.0);

        let ii = inst(
            20,
            20,
            vec![
                module("a", 2, 1, 0.0),
                module("b", 2, 1, 0.0),
                module("c", 1, 1, 0.0),
            ],
        );
        let q = Placement::new(
            ii,
            vec![
                Position::new(1, 1, false),
                Position::new(1, 1, false),
                Position::new(7, 9, false),
            ],
        )
        .unwrap();
        let w = CostWeights {
            lambda_overlap: Some(10.0),
            ..CostWeights::default()
        };
        assert_eq!(cost(&q, &w, false), 63.0 + 20.0);
        // Infeasible layouts score k = 0 even when fault tolerance is on.
        let w = CostWeights {
            beta_ft: 5.0,
            lambda_overlap: Some(10.0),
            ..CostWeights::default()
        };
        assert_eq!(cost(&q, &w, true), 83.0);

        // Both 1x1 modules can always move, so all 63 cells are covered.
        let w = CostWeights {
            beta_ft: 30.0,
            ..CostWeights::default()
        };
        assert_eq!(cost(&p, &w, true), 63.0 - 30.0);
        let w = CostWeights {
            ft_term: FtTerm::Count,
            ..w
        };
        assert_eq!(cost(&p, &w, true), 63.0 - 30.0 * 63.0);
    }

    #[test]
    fn default_lambda() {
        let i = pcr_fixture();
        assert_eq!(CostWeights::default().resolved_lambda(&i), 48.0);
    }

    struct Recorder {
        temps: Vec<f64>,
        negatives: u64,
        negatives_taken: u64,
        feasible_costs: Vec<f64>,
    }

    impl Observer for Recorder {
        fn round_started(&mut self, _round: u32, t: f64, _window: u32) {
            self.temps.push(t);
        }
        fn evaluated(&mut self, _mv: &Move, delta: f64, accepted: bool) {
            if delta < 0.0 {
                self.negatives += 1;
                self.negatives_taken += u64::from(accepted);
            }
        }
        fn current(&mut self, terms: &CostTerms) {
            if terms.overlap == 0 {
                self.feasible_costs.push(terms.total);
            }
        }
    }

    #[test]
    fn instrumented_run() {
        let i = Arc::new(pcr_fixture());
        let start = initial_placement(i).unwrap();
        let params = quick_params(5);
        let mut rec = Recorder {
            temps: vec![],
            negatives: 0,
            negatives_taken: 0,
            feasible_costs: vec![],
        };
        let out = anneal_observed(
            &start,
            &params,
            &CostWeights::default(),
            false,
            &MoveSet::ALL,
            &mut rec,
        )
        .unwrap();
        assert!(rec.negatives > 0);
        assert_eq!(rec.negatives, rec.negatives_taken);
        for (i, t) in rec.temps.iter().enumerate() {
            let expect = 10_000.0 * 0.9f64.powi(i as i32);
            assert!((t - expect).abs() <= 1e-12 * expect);
        }
        assert!(out.feasible);
        assert_eq!(overlap_penalty(&out.placement), 0);
        assert!(rec.feasible_costs.iter().all(|&c| out.terms.total <= c));
        assert_eq!(out.terms.cells, array_area_cells(&out.placement).cell_count);
        // Stops on the first round at the minimum window: T <= 1 by default.
        assert!(out.final_temperature <= 1.0);
        assert!(out.final_temperature / 0.9 > 1.0);
    }

    #[test]
    fn anneal_is_deterministic() {
        let i = Arc::new(pcr_fixture());
        let start = initial_placement(i).unwrap();
        let run = |seed| {
            anneal(
                &start,
                &quick_params(seed),
                &CostWeights::default(),
                false,
                &MoveSet::ALL,
            )
            .unwrap()
            .placement
        };
        assert_eq!(run(1), run(1));
    }
}
