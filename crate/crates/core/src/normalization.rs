//! Telescoping Monte Carlo estimation of `log E_p[e^{⟨x,v⟩}]`.
//!
//! Direct Monte Carlo under `p` has exponentially bad relative variance for
//! large tilts, so the estimator walks a linear path `0 → v` in `N` stages.
//! Stage `n` draws from the tilt `((n-1)/N)·v` and averages
//! `exp(⟨x, v/N⟩)`; the product of stage means telescopes to the full
//! normalization constant. Because every draw lies in the norm ball and
//! `N ≥ C·‖v‖`, each summand lies in `(0, e]`, which is what gives the
//! Hoeffding sample-count its guarantee.
//!
//! Stage means are accumulated in log space; the pipeline upstream feeds
//! tilts whose normalization constants span hundreds of orders of magnitude.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::ScoreOracle;
use crate::error::{Error, Result};
use crate::linear_tilt::{sample_linear_tilt_with, LinearTiltSpec};
use crate::math::{all_finite, dot, l2_norm};
use crate::rng::derive_seed;
use crate::sampler::ScheduleParams;

/// Result record of one estimation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizationEstimate {
    /// Estimate of `log E_p[e^{⟨x,v⟩}]`.
    pub log_value: f64,
    pub num_stages: usize,
    pub samples_per_stage: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// True when the Hoeffding sample count was truncated by the draw
    /// budget; the (ε, δ) guarantee does not apply to such runs.
    pub budget_limited: bool,
}

/// Budget knobs. `budget_cap` bounds total draws across all stages.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub budget_cap: u64,
    pub schedule: ScheduleParams,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self {
            budget_cap: 10_000_000,
            schedule: ScheduleParams::default(),
        }
    }
}

/// Stage count, uncapped per-stage sample count, and per-stage tolerance
/// for a given tilt norm. `N = max(1, ⌈C·‖v‖⌉)`, `ε' = ε/(2(1+e)e·N)`, and
/// `M = ⌈e²·ln(2N/δ)/(2ε'²)⌉` — the sample count demanded by a Hoeffding
/// bound for means of `[0, e]`-valued summands at deviation ε' and failure
/// probability δ/N.
pub fn normalization_plan(
    v_norm: f64,
    epsilon: f64,
    delta: f64,
    norm_bound: f64,
) -> (usize, f64, f64) {
    let e = std::f64::consts::E;
    let stages = (norm_bound * v_norm).ceil().max(1.0);
    let eps_prime = epsilon / (2.0 * (1.0 + e) * e * stages);
    let m = (e * e * (2.0 * stages / delta).ln() / (2.0 * eps_prime * eps_prime)).ceil();
    (stages as usize, m, eps_prime)
}

pub fn estimate_normalization<S: ScoreOracle + ?Sized>(
    score: &S,
    v: &[f64],
    epsilon: f64,
    delta: f64,
    norm_bound: f64,
    seed: u64,
) -> Result<NormalizationEstimate> {
    estimate_normalization_with(
        score,
        v,
        epsilon,
        delta,
        norm_bound,
        seed,
        &NormalizationParams::default(),
    )
}

pub fn estimate_normalization_with<S: ScoreOracle + ?Sized>(
    score: &S,
    v: &[f64],
    epsilon: f64,
    delta: f64,
    norm_bound: f64,
    seed: u64,
    params: &NormalizationParams,
) -> Result<NormalizationEstimate> {
    if v.len() != score.dim() {
        return Err(Error::DimMismatch {
            expected: score.dim(),
            got: v.len(),
        });
    }
    if !all_finite(v) {
        return Err(Error::NonFinite { name: "v" });
    }
    for (name, val) in [("epsilon", epsilon), ("delta", delta)] {
        if !val.is_finite() || val <= 0.0 || val >= 0.5 {
            return Err(Error::invalid(name, "must lie in (0, 1/2)"));
        }
    }
    if !(norm_bound >= 1.0) {
        return Err(Error::invalid("norm_bound", "must be at least 1"));
    }
    if params.budget_cap == 0 {
        return Err(Error::invalid("budget_cap", "must be positive"));
    }

    let (num_stages, m_required, eps_prime) =
        normalization_plan(l2_norm(v), epsilon, delta, norm_bound);
    let budget_limited = m_required * num_stages as f64 > params.budget_cap as f64;
    let samples_per_stage = if budget_limited {
        ((params.budget_cap / num_stages as u64).max(1)) as usize
    } else {
        m_required as usize
    };

    // Per-stage increment along the path; summands are exp(⟨x, v/N⟩).
    let step: Vec<f64> = v.iter().map(|vi| vi / num_stages as f64).collect();
    let mut log_value = 0.0;
    for stage in 1..=num_stages {
        let frac = (stage - 1) as f64 / num_stages as f64;
        let tilt: Vec<f64> = v.iter().map(|vi| frac * vi).collect();
        let spec = LinearTiltSpec::new(tilt, eps_prime.min(0.5), norm_bound)?;
        let summands: Vec<f64> = (0..samples_per_stage)
            .into_par_iter()
            .map(|m| {
                let draw_seed = derive_seed(seed, &[stage as u64, m as u64]);
                let x = sample_linear_tilt_with(score, &spec, draw_seed, &params.schedule)?;
                let exponent = dot(&x, &step);
                // Guaranteed by the support projection and N ≥ C·‖v‖.
                assert!(
                    exponent <= 1.0 + 1e-9,
                    "per-stage summand exponent {exponent} escaped (0, 1]"
                );
                Ok(exponent.exp())
            })
            .collect::<Result<Vec<f64>>>()?;
        // Deterministic reduction: summation in draw-index order.
        let mean = summands.iter().sum::<f64>() / samples_per_stage as f64;
        log_value += mean.ln();
    }

    Ok(NormalizationEstimate {
        log_value,
        num_stages,
        samples_per_stage,
        epsilon,
        delta,
        budget_limited,
    })
}
