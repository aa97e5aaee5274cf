//! Seeded reverse-SDE sampling from a noised-score oracle.
//!
//! The forward process is the Ornstein–Uhlenbeck SDE `dX = -X dt + √2 dB`,
//! whose time-`t` marginal is the σ-noised law with `σ(t) = √(1-e^{-2t})`.
//! Sampling runs the reverse SDE `dY = (Y + 2·s_σ(Y)) dt + √2 dB` from a
//! standard Gaussian at `t_max` down to `t_min` with an exponential
//! integrator on a geometric time grid, then projects the terminal iterate
//! onto the support ball. Output is a deterministic function of
//! `(score, schedule, seed)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base::{NoiseLevel, ScoreOracle, SIGMA_CLAMP_MIN};
use crate::error::{Error, Result};
use crate::math::{all_finite, l2_norm};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    GeometricInTime,
}

/// Discretization plan for one reverse-SDE run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    pub num_steps: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub projection_radius: f64,
    pub interpolation: Interpolation,
}

/// Knobs for [`default_schedule_with`]. `c0` scales the step count; the cap
/// keeps tiny tolerances from demanding astronomically many steps.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub c0: f64,
    pub max_steps: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            c0: 8.0,
            max_steps: 20_000,
        }
    }
}

fn time_of_sigma(sigma: f64) -> f64 {
    // σ² = 1 - e^{-2t}  =>  t = -½ ln(1-σ²)
    -0.5 * (-sigma * sigma).ln_1p()
}

fn sigma_of_time(t: f64) -> f64 {
    (-(-2.0 * t).exp_m1()).sqrt()
}

impl DiffusionSchedule {
    pub fn new(
        num_steps: usize,
        sigma_max: f64,
        sigma_min: f64,
        projection_radius: f64,
    ) -> Result<Self> {
        if num_steps < 2 {
            return Err(Error::invalid("num_steps", "must be at least 2"));
        }
        for (name, v) in [("sigma_max", sigma_max), ("sigma_min", sigma_min)] {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::invalid(name, "must lie in (0, 1)"));
            }
        }
        if sigma_min >= sigma_max {
            return Err(Error::invalid("sigma_min", "must be below sigma_max"));
        }
        if !projection_radius.is_finite() || projection_radius <= 0.0 {
            return Err(Error::invalid("projection_radius", "must be positive"));
        }
        Ok(Self {
            num_steps,
            sigma_max,
            sigma_min,
            projection_radius,
            interpolation: Interpolation::GeometricInTime,
        })
    }

    /// Strictly decreasing OU times `t_0 > t_1 > ... > t_K`, geometric.
    pub fn time_grid(&self) -> Vec<f64> {
        let t_max = time_of_sigma(self.sigma_max);
        let t_min = time_of_sigma(self.sigma_min);
        let k = self.num_steps;
        let log_max = t_max.ln();
        let log_min = t_min.ln();
        (0..=k)
            .map(|i| (log_max + (log_min - log_max) * i as f64 / k as f64).exp())
            .collect()
    }
}

/// Schedule for a target Wasserstein tolerance, with default knobs.
pub fn default_schedule(epsilon: f64, dim: usize, norm_bound: f64) -> Result<DiffusionSchedule> {
    default_schedule_with(epsilon, dim, norm_bound, &ScheduleParams::default())
}

/// Schedule construction: `K = ⌈c0·d·C²/ε²⌉` steps (capped), a start time
/// `T = ln(4·d·C/ε)` so the Gaussian initialization bias is negligible, and
/// a final noise level small enough that the residual forward-noise
/// displacement `√(1-√(1-σ²))·C + σ·√d` stays below `ε/2`.
pub fn default_schedule_with(
    epsilon: f64,
    dim: usize,
    norm_bound: f64,
    params: &ScheduleParams,
) -> Result<DiffusionSchedule> {
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    if !norm_bound.is_finite() || norm_bound <= 0.0 {
        return Err(Error::invalid("norm_bound", "must be positive"));
    }
    let d = dim as f64;
    let steps_raw = (params.c0 * d * norm_bound * norm_bound / (epsilon * epsilon)).ceil();
    let num_steps = if steps_raw >= params.max_steps as f64 {
        params.max_steps
    } else {
        (steps_raw as usize).max(2)
    };

    let t_max = (4.0 * d * norm_bound / epsilon).ln().max(1.0);
    let sigma_max = sigma_of_time(t_max).min(1.0 - 1e-9);

    // Largest σ with √(1-√(1-σ²))·C + σ√d ≤ ε/2, by bisection; the clamp
    // floor wins when even that is too large to represent.
    let residual = |sig: f64| (1.0 - (1.0 - sig * sig).sqrt()).sqrt() * norm_bound + sig * d.sqrt();
    let target = epsilon / 2.0;
    let sigma_min = if residual(SIGMA_CLAMP_MIN) >= target {
        SIGMA_CLAMP_MIN
    } else {
        let mut lo = SIGMA_CLAMP_MIN;
        let mut hi = sigma_max * 0.5;
        if residual(hi) <= target {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    DiffusionSchedule::new(num_steps, sigma_max, sigma_min.max(SIGMA_CLAMP_MIN), norm_bound)
}

/// Run the reverse SDE and return the projected terminal point.
///
/// Aborts with [`Error::ScoreNotFinite`] if the oracle ever returns a
/// non-finite value; the message carries the σ and state norm at the fault.
pub fn unadjusted_sample<S: ScoreOracle + ?Sized>(
    score: &S,
    schedule: &DiffusionSchedule,
    seed: u64,
) -> Result<Vec<f64>> {
    let dim = score.dim();
    let mut rng = rng_from_seed(seed);
    let mut y: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let grid = schedule.time_grid();
    for w in grid.windows(2) {
        let (t_cur, t_next) = (w[0], w[1]);
        let h = t_cur - t_next;
        let sigma = NoiseLevel::new(sigma_of_time(t_cur))?;
        let s = score.score(sigma, &y)?;
        if !all_finite(&s) {
            return Err(Error::ScoreNotFinite {
                sigma: sigma.value(),
                x_norm: l2_norm(&y),
            });
        }
        let em = h.exp_m1();
        let eh = em + 1.0;
        let noise_std = (em * (eh + 1.0)).sqrt(); // √(e^{2h}-1)
        for j in 0..dim {
            let xi: f64 = rng.sample(StandardNormal);
            y[j] = eh * y[j] + 2.0 * em * s[j] + noise_std * xi;
        }
    }
    project_to_ball(&mut y, schedule.projection_radius);
    Ok(y)
}

/// Euclidean projection onto the centered ball of the given radius.
pub fn project_to_ball(x: &mut [f64], radius: f64) {
    let norm = l2_norm(x);
    if norm > radius {
        let scale = radius / norm;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
}
