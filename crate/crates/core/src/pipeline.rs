//! End-to-end optimization flows: the greedy baseline, area-only annealing,
//! the two-stage area-then-fault-tolerance optimizer, and weight sweeps.

use std::sync::Arc;
use std::time::Instant;

use crate::anneal::{anneal, initial_placement, AnnealParams, CostWeights, MoveSet};
use crate::error::{Error, Result};
use crate::fault::{coverage_report, CoverageReport};
use crate::placement::{
    area_mm2, array_area_cells, first_fit_positions, overlap_penalty, Placement,
};
use crate::problem::ProblemInstance;

/// LTSA starts this many times colder than the first stage by default.
pub const LTSA_TEMPERATURE_DIVISOR: f64 = 100.0;

/// Salt mixed into the seed of the second stage so its random stream differs
/// from the first stage's.
const LTSA_SEED_SALT: u64 = 0x4c54_5341;

/// Outcome of one optimization flow.
#[derive(Debug, Clone)]
pub struct StageResult {
    pub placement: Placement,
    pub rows_used: u32,
    pub cols_used: u32,
    pub cell_count: u64,
    pub area_mm2: f64,
    pub k: u64,
    pub fti: f64,
    pub coverage: CoverageReport,
    pub elapsed_s: f64,
    pub seed: u64,
}

impl StageResult {
    /// Shifts `placement` so its array starts at (1, 1) and measures it.
    fn evaluate(placement: Placement, seed: u64, started: Instant) -> Result<Self> {
        let placement = placement.normalized();
        let overlap = overlap_penalty(&placement);
        if overlap > 0 {
            return Err(Error::Infeasible { overlap });
        }
        let area = array_area_cells(&placement);
        let coverage = coverage_report(&placement)?;
        Ok(StageResult {
            rows_used: area.rows_used,
            cols_used: area.cols_used,
            cell_count: area.cell_count,
            area_mm2: area_mm2(area.cell_count, placement.instance().grid.pitch_mm),
            k: coverage.k,
            fti: coverage.fti(),
            coverage,
            placement,
            elapsed_s: started.elapsed().as_secs_f64(),
            seed,
        })
    }
}

/// Largest-area-first, lowest-then-leftmost placement; see
/// [`first_fit_positions`].
pub fn greedy_baseline(inst: Arc<ProblemInstance>) -> Result<StageResult> {
    let started = Instant::now();
    let positions = first_fit_positions(&inst).ok_or(Error::NoFeasiblePlacement)?;
    let placement = Placement::new(inst, positions)?;
    StageResult::evaluate(placement, 0, started)
}

/// Stage one: fault-oblivious annealing for minimum area from the
/// constructive start, with every move kind enabled.
pub fn optimize_area(
    inst: Arc<ProblemInstance>,
    params: &AnnealParams,
    weights: &CostWeights,
) -> Result<StageResult> {
    let started = Instant::now();
    let start = initial_placement(inst)?;
    let area_only = CostWeights {
        beta_ft: 0.0,
        ..*weights
    };
    let out = anneal(&start, params, &area_only, false, &MoveSet::ALL)?;
    if !out.feasible {
        return Err(Error::NoFeasiblePlacement);
    }
    StageResult::evaluate(out.placement, params.rng_seed, started)
}

/// Stage two on top of [`optimize_area`]: low-temperature annealing with the
/// fault-tolerance term, single-module displacements only.
///
/// `t_ltsa` defaults to `t_initial / 100`.
pub fn optimize_two_stage(
    inst: Arc<ProblemInstance>,
    params: &AnnealParams,
    weights: &CostWeights,
    t_ltsa: Option<f64>,
) -> Result<(StageResult, StageResult)> {
    if weights.beta_ft.is_nan() || weights.beta_ft <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "beta_ft",
            reason: "two-stage optimization needs a positive fault-tolerance weight".into(),
        });
    }
    let started = Instant::now();
    let first = optimize_area(inst, params, weights)?;
    let ltsa = AnnealParams {
        t_initial: t_ltsa.unwrap_or(params.t_initial / LTSA_TEMPERATURE_DIVISOR),
        rng_seed: params.rng_seed ^ LTSA_SEED_SALT,
        ..params.clone()
    };
    let out = anneal(
        &first.placement,
        &ltsa,
        weights,
        true,
        &MoveSet::SINGLE_MODULE,
    )?;
    if !out.feasible {
        return Err(Error::NoFeasiblePlacement);
    }
    let second = StageResult::evaluate(out.placement, params.rng_seed, started)?;
    Ok((first, second))
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub beta: f64,
    pub result: StageResult,
}

/// Two-stage runs for each weight in `betas`; run `i` uses seed
/// `rng_seed + i`. Results keep the input order.
pub fn beta_sweep(
    inst: Arc<ProblemInstance>,
    params: &AnnealParams,
    weights: &CostWeights,
    betas: &[f64],
    t_ltsa: Option<f64>,
) -> Result<Vec<SweepEntry>> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter {
            name: "betas",
            reason: "need at least one value".into(),
        });
    }
    if let Some(b) = betas.iter().find(|b| b.is_nan() || **b <= 0.0) {
        return Err(Error::InvalidParameter {
            name: "betas",
            reason: format!("every value must be positive, got {b}"),
        });
    }
    betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let p = AnnealParams {
                rng_seed: params.rng_seed.wrapping_add(i as u64),
                ..params.clone()
            };
            let w = CostWeights {
                beta_ft: beta,
                ..*weights
            };
            let (_, result) = optimize_two_stage(inst.clone(), &p, &w, t_ltsa)?;
            Ok(SweepEntry { beta, result })
        })
        .collect()
}
