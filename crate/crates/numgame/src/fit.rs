//! Grid-search parameter fitting.
//!
//! [`fit_grid`] sweeps the full model (size-principle likelihood, hypothesis
//! averaging) over a (lambda, alpha) lattice, scoring each cell by mean JSD
//! against an observed response matrix, then refines on a 0.01-step sub-grid
//! spanning one coarse cell on each side of the incumbent.
//!
//! Likelihoods do not depend on lambda, so each alpha gets one cache of
//! per-set likelihood sums split by hypothesis kind; a lambda sweep then only
//! re-weights the two components:
//!
//! ```text
//! P(y|X) = (1-a) + a * (rp*S_rule(y) + ip*S_int(y)) / (rp*T_rule + ip*T_int)
//! ```
//!
//! with rp = lambda/rule_count and ip = (1-lambda)/interval_count. This
//! collapses the dominant cost of the sweep.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{log_likelihoods, ExampleSet, LikelihoodMode};
use crate::error::{Error, Result};
use crate::eval::{jsd, jsd_per_target_mean, JsdConvention, ResponseMatrix};
use crate::space::HypothesisSpace;

/// The coarse lattice reported in the source protocol.
pub const DEFAULT_GRID: [f64; 8] = [0.0, 0.01, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0];

/// The refinement step between coarse neighbors.
pub const REFINE_STEP_CENTI: i64 = 1;

/// Which pass produced a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellPhase {
    Coarse,
    Refined,
}

/// One evaluated lattice point. `mean_jsd` is None for infeasible cells
/// (zero evidence at alpha = 1 for some set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda: f64,
    pub alpha: f64,
    pub mean_jsd: Option<f64>,
    pub phase: CellPhase,
}

/// Outcome of a grid search with refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_lambda: f64,
    pub best_alpha: f64,
    pub best_mean_jsd: f64,
    pub grid: Vec<GridCell>,
    pub refinement_trace: Vec<GridCell>,
    pub per_set_at_best: BTreeMap<String, f64>,
}

/// Fitting knobs.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub convention: JsdConvention,
    /// Disable to stop after the coarse pass.
    pub refine: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            convention: JsdConvention::Normalized,
            refine: true,
        }
    }
}

/// Per-set likelihood sums for one alpha, split by hypothesis kind.
struct SetStats {
    t_rule: f64,
    t_interval: f64,
    s_rule: Vec<f64>,
    s_interval: Vec<f64>,
}

fn build_alpha_cache(
    space: &HypothesisSpace,
    sets: &[ExampleSet],
    alpha: f64,
) -> Result<Vec<SetStats>> {
    sets.par_iter()
        .map(|set| {
            let loglik = log_likelihoods(space, set, LikelihoodMode::SizePrinciple, alpha)?;
            let max = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let n = space.domain_max() as usize;
            let mut stats = SetStats {
                t_rule: 0.0,
                t_interval: 0.0,
                s_rule: vec![0.0; n],
                s_interval: vec![0.0; n],
            };
            if max == f64::NEG_INFINITY {
                return Ok(stats);
            }
            let rule_count = space.rule_count();
            for (idx, h) in space.hypotheses().iter().enumerate() {
                let scaled = (loglik[idx] - max).exp();
                if scaled == 0.0 {
                    continue;
                }
                if idx < rule_count {
                    stats.t_rule += scaled;
                    for &y in &h.extension {
                        stats.s_rule[(y - 1) as usize] += scaled;
                    }
                } else {
                    stats.t_interval += scaled;
                    for &y in &h.extension {
                        stats.s_interval[(y - 1) as usize] += scaled;
                    }
                }
            }
            Ok(stats)
        })
        .collect()
}

/// Mean JSD for one (lambda, alpha) cell, or None when some set has zero
/// evidence under that prior.
fn cell_mean_jsd(
    space: &HypothesisSpace,
    cache: &[SetStats],
    observed_rows: &[&[f64]],
    lambda: f64,
    alpha: f64,
    convention: JsdConvention,
) -> Option<f64> {
    let rule_count = space.rule_count();
    let interval_count = space.interval_count();
    let rp = if rule_count > 0 {
        lambda / rule_count as f64
    } else {
        0.0
    };
    let ip = if interval_count > 0 {
        (1.0 - lambda) / interval_count as f64
    } else {
        0.0
    };
    if (lambda > 0.0 && rule_count == 0) || (lambda < 1.0 && interval_count == 0) {
        return None;
    }
    let miss = 1.0 - alpha;
    let n = space.domain_max() as usize;
    let mut total = 0.0;
    let mut pred = vec![0.0; n];
    for (stats, observed) in cache.iter().zip(observed_rows) {
        let denom = rp * stats.t_rule + ip * stats.t_interval;
        if denom <= 0.0 || !denom.is_finite() {
            return None;
        }
        for y in 0..n {
            let mass = (rp * stats.s_rule[y] + ip * stats.s_interval[y]) / denom;
            pred[y] = (miss + alpha * mass).clamp(0.0, 1.0);
        }
        let d = match convention {
            JsdConvention::Normalized => jsd(observed, &pred),
            JsdConvention::PerTargetMean => jsd_per_target_mean(observed, &pred),
        }
        .expect("validated inputs");
        total += d;
    }
    Some(total / cache.len() as f64)
}

fn validate_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::validation("fit grid", "grid is empty"));
    }
    for &v in grid {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::ParameterOutOfRange {
                name: "grid value",
                value: v,
            });
        }
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    sorted.dedup();
    Ok(sorted)
}

/// Centi-step lattice values spanning [lo, hi], clipped to [0, 1].
fn refine_values(lo: f64, hi: f64) -> Vec<f64> {
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    let lo_c = (lo * 100.0 - 1e-9).ceil() as i64;
    let hi_c = (hi * 100.0 + 1e-9).floor() as i64;
    (lo_c..=hi_c)
        .step_by(REFINE_STEP_CENTI as usize)
        .map(|c| c as f64 / 100.0)
        .collect()
}

fn neighbors(sorted: &[f64], value: f64) -> (f64, f64) {
    let pos = sorted
        .iter()
        .position(|&v| v == value)
        .expect("incumbent comes from the grid");
    let lo = if pos > 0 { sorted[pos - 1] } else { sorted[pos] };
    let hi = if pos + 1 < sorted.len() {
        sorted[pos + 1]
    } else {
        sorted[pos]
    };
    (lo, hi)
}

/// Strictly better under (mean, lambda, alpha) with smaller-is-better ties.
fn improves(candidate: &GridCell, incumbent: &Option<GridCell>) -> bool {
    let Some(mean) = candidate.mean_jsd else {
        return false;
    };
    match incumbent {
        None => true,
        Some(best) => {
            let best_mean = best.mean_jsd.expect("incumbent is feasible");
            mean < best_mean
                || (mean == best_mean
                    && (candidate.lambda, candidate.alpha) < (best.lambda, best.alpha))
        }
    }
}

/// Grid search over (lambda, alpha) with local refinement.
///
/// Evaluates the full model at every lattice point of `grid x grid`, refines
/// around the incumbent on the 0.01 lattice spanning one coarse cell per
/// side, and returns the global best (ties break toward smaller lambda, then
/// smaller alpha). Cells that hit zero evidence are recorded as infeasible
/// rather than failing the search.
pub fn fit_grid(
    space: &HypothesisSpace,
    sets: &[ExampleSet],
    observed: &ResponseMatrix,
    grid: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    let grid = validate_grid(grid)?;
    if sets.is_empty() {
        return Err(Error::validation("fit", "no example sets"));
    }
    let mut observed_rows: Vec<&[f64]> = Vec::with_capacity(sets.len());
    for set in sets {
        match observed.rows.get(&set.id) {
            Some(row) => observed_rows.push(row.as_slice()),
            None => {
                return Err(Error::validation(
                    "fit",
                    format!(
                        "observed matrix '{}' has no row for set '{}'",
                        observed.agent, set.id
                    ),
                ))
            }
        }
    }

    let mut caches: BTreeMap<u64, Vec<SetStats>> = BTreeMap::new();
    for &alpha in &grid {
        caches.insert(alpha.to_bits(), build_alpha_cache(space, sets, alpha)?);
    }

    let evaluate = |lambda: f64, alpha: f64, phase: CellPhase, caches: &BTreeMap<u64, Vec<SetStats>>| {
        let cache = &caches[&alpha.to_bits()];
        GridCell {
            lambda,
            alpha,
            mean_jsd: cell_mean_jsd(
                space,
                cache,
                &observed_rows,
                lambda,
                alpha,
                options.convention,
            ),
            phase,
        }
    };

    let mut coarse = Vec::with_capacity(grid.len() * grid.len());
    let mut best: Option<GridCell> = None;
    for &lambda in &grid {
        for &alpha in &grid {
            let cell = evaluate(lambda, alpha, CellPhase::Coarse, &caches);
            if improves(&cell, &best) {
                best = Some(cell.clone());
            }
            coarse.push(cell);
        }
    }
    let coarse_best = best.clone().ok_or_else(|| {
        Error::EmptySupport("every grid cell was infeasible (zero evidence)".to_string())
    })?;

    let mut refined = Vec::new();
    if options.refine {
        let (l_lo, l_hi) = neighbors(&grid, coarse_best.lambda);
        let (a_lo, a_hi) = neighbors(&grid, coarse_best.alpha);
        let lambda_values = refine_values(l_lo, l_hi);
        let alpha_values = refine_values(a_lo, a_hi);
        for &alpha in &alpha_values {
            caches
                .entry(alpha.to_bits())
                .or_insert(build_alpha_cache(space, sets, alpha)?);
        }
        let on_coarse = |v: f64| grid.iter().any(|&g| g == v);
        for &lambda in &lambda_values {
            for &alpha in &alpha_values {
                if on_coarse(lambda) && on_coarse(alpha) {
                    continue; // already evaluated in the coarse pass
                }
                let cell = evaluate(lambda, alpha, CellPhase::Refined, &caches);
                if improves(&cell, &best) {
                    best = Some(cell.clone());
                }
                refined.push(cell);
            }
        }
    }

    let best = best.expect("coarse pass produced a feasible incumbent");
    let best_mean = best.mean_jsd.expect("best cell is feasible");

    // Per-set divergence at the best cell.
    let cache = &caches[&best.alpha.to_bits()];
    let mut per_set_at_best = BTreeMap::new();
    {
        let rule_count = space.rule_count();
        let interval_count = space.interval_count();
        let rp = if rule_count > 0 {
            best.lambda / rule_count as f64
        } else {
            0.0
        };
        let ip = if interval_count > 0 {
            (1.0 - best.lambda) / interval_count as f64
        } else {
            0.0
        };
        let miss = 1.0 - best.alpha;
        let n = space.domain_max() as usize;
        for ((stats, observed_row), set) in cache.iter().zip(&observed_rows).zip(sets) {
            let denom = rp * stats.t_rule + ip * stats.t_interval;
            let mut pred = vec![0.0; n];
            for y in 0..n {
                let mass = (rp * stats.s_rule[y] + ip * stats.s_interval[y]) / denom;
                pred[y] = (miss + best.alpha * mass).clamp(0.0, 1.0);
            }
            let d = match options.convention {
                JsdConvention::Normalized => jsd(observed_row, &pred)?,
                JsdConvention::PerTargetMean => jsd_per_target_mean(observed_row, &pred)?,
            };
            per_set_at_best.insert(set.id.clone(), d);
        }
    }

    Ok(FitResult {
        best_lambda: best.lambda,
        best_alpha: best.alpha,
        best_mean_jsd: best_mean,
        grid: coarse,
        refinement_trace: refined,
        per_set_at_best,
    })
}

impl FitResult {
    /// The (lambda, alpha, mean JSD) surface as plot-ready CSV. Infeasible
    /// cells render with an empty mean column; the best cell is marked.
    pub fn surface_csv(&self) -> String {
        let mut out = String::from("lambda,alpha,mean_jsd,phase,best\n");
        for cell in self.grid.iter().chain(&self.refinement_trace) {
            let mean = cell.mean_jsd.map(|m| m.to_string()).unwrap_or_default();
            let phase = match cell.phase {
                CellPhase::Coarse => "coarse",
                CellPhase::Refined => "refined",
            };
            let best = (cell.lambda == self.best_lambda
                && cell.alpha == self.best_alpha
                && cell.mean_jsd == Some(self.best_mean_jsd)) as u8;
            out.push_str(&format!(
                "{},{},{mean},{phase},{best}\n",
                cell.lambda, cell.alpha
            ));
        }
        out
    }

    /// Per-set JSD at the best fit, for histogram plotting.
    pub fn per_set_csv(&self) -> String {
        let mut out = String::from("set_id,jsd\n");
        for (set_id, d) in &self.per_set_at_best {
            out.push_str(&format!("{set_id},{d}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}
