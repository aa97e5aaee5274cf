//! Sampling from PSD quadratic tilts `p*(x) ∝ p(x)·e^{½‖Lx‖²}`.
//!
//! Writing the reward through a factor `L ∈ R^{r×d}` turns the quadratic
//! tilt into a Gaussian integral over an auxiliary `z ∈ R^r`:
//!
//! ```text
//! p*(x) ∝ ∫ Z(z) · e^{-½‖z‖²} · p(x; Lᵀz) dz,   Z(z) = E_p[e^{⟨Lx,z⟩}]
//! ```
//!
//! i.e. a mixture of *linear* tilts weighted by `Z(z)·e^{-½‖z‖²}`. The
//! sampler discretizes `z` on a lattice ball, estimates each mixture
//! log-weight with the telescoping normalization estimator, draws a lattice
//! point by Gumbel-max, and finishes with one linear-tilt draw. Cost scales
//! like `(R/γ)^r`, so this is only viable for small rank — the grid builder
//! enforces a hard cap and the CLI warns well before it.
//!
//! For tests, [`grid_log_weights_exact`] swaps the Monte Carlo estimates
//! for exact log-partition values, isolating discretization error from
//! estimation error, and [`discretized_mixture_exact`] materializes the
//! discretized mixture itself as a finite-atom distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{FiniteAtomBase, ScoreOracle};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::linear_tilt::{sample_linear_tilt_with, LinearTiltSpec};
use crate::math::{dot, l2_norm, log_sum_exp};
use crate::metrics::DiscreteDistribution;
use crate::normalization::{estimate_normalization_with, NormalizationParams};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::ScheduleParams;

/// Reward factor and tolerances for one PSD-tilt sampling problem. The
/// reward is `r(x) = ½‖Lx‖²`; `d_bound` must dominate `sup ‖Lx‖` over the
/// support of the base.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdTiltSpec {
    factor: Matrix,
    d_bound: f64,
    norm_bound: f64,
    eps_final: f64,
    spectral_norm: f64,
}

impl PsdTiltSpec {
    pub fn new(factor: Matrix, d_bound: f64, norm_bound: f64, eps_final: f64) -> Result<Self> {
        if factor.rows() > factor.cols() {
            return Err(Error::invalid(
                "factor",
                "rank (rows) must not exceed dimension (cols)",
            ));
        }
        if !(d_bound >= 1.0) || !d_bound.is_finite() {
            return Err(Error::invalid("d_bound", "must be finite and at least 1"));
        }
        if !norm_bound.is_finite() || norm_bound <= 0.0 {
            return Err(Error::invalid("norm_bound", "must be positive"));
        }
        if !eps_final.is_finite() || eps_final <= 0.0 || eps_final >= 0.5 {
            return Err(Error::invalid("eps_final", "must lie in (0, 1/2)"));
        }
        let spectral_norm = factor.spectral_norm();
        if !spectral_norm.is_finite() {
            return Err(Error::NonFinite { name: "factor" });
        }
        Ok(Self {
            factor,
            d_bound,
            norm_bound,
            eps_final,
            spectral_norm,
        })
    }

    /// Build a spec with the tightest valid reward bound for a finite-atom
    /// base: `D = max(1, max_i ‖L·x_i‖)`.
    pub fn with_tight_bound(
        factor: Matrix,
        base: &FiniteAtomBase,
        eps_final: f64,
    ) -> Result<Self> {
        if factor.cols() != base.dim() {
            return Err(Error::DimMismatch {
                expected: base.dim(),
                got: factor.cols(),
            });
        }
        let mut d_bound: f64 = 1.0;
        for atom in base.atoms() {
            d_bound = d_bound.max(l2_norm(&factor.mul_vec(&atom.location)?));
        }
        Self::new(factor, d_bound, base.norm_bound(), eps_final)
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn rank(&self) -> usize {
        self.factor.rows()
    }

    pub fn dim(&self) -> usize {
        self.factor.cols()
    }

    pub fn d_bound(&self) -> f64 {
        self.d_bound
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn eps_final(&self) -> f64 {
        self.eps_final
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// The reward matrix `A = ½LᵀL`, so that `xᵀAx = ½‖Lx‖²`.
    pub fn reward_matrix(&self) -> Matrix {
        self.factor.gram().scale(0.5)
    }

    /// Lattice radius for the auxiliary variable:
    /// `R = D + 2√r + 2√ln(54/ε)`.
    pub fn grid_radius(&self) -> f64 {
        self.d_bound
            + 2.0 * (self.rank() as f64).sqrt()
            + 2.0 * (54.0 / self.eps_final).ln().sqrt()
    }

    /// Lattice spacing `γ = ε/(54·D)`.
    pub fn grid_spacing(&self) -> f64 {
        self.eps_final / (54.0 * self.d_bound)
    }

    /// Per-grid-point tolerance for the normalization estimates:
    /// `ε₁ = ε²/(72·C)`.
    pub fn weight_epsilon(&self) -> f64 {
        self.eps_final * self.eps_final / (72.0 * self.norm_bound)
    }

    /// Tolerance of the final linear-tilt draw: `ε₂ = ε/3`.
    pub fn final_epsilon(&self) -> f64 {
        self.eps_final / 3.0
    }
}

pub const DEFAULT_GRID_CAP: usize = 5_000_000;

/// The lattice ball `γZ^r ∩ B(R)`, enumerated in axis-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    radius: f64,
    spacing: f64,
    rank: usize,
    points: Vec<f64>, // flat, stride = rank
}

impl GridSpec {
    pub fn build(radius: f64, spacing: f64, rank: usize, cap: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", "must be positive and finite"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid("spacing", "must be positive and finite"));
        }
        if rank == 0 {
            return Err(Error::invalid("rank", "must be positive"));
        }
        let mut points = Vec::new();
        let mut prefix = vec![0.0; rank];
        enumerate_ball(
            &mut points,
            &mut prefix,
            0,
            radius * radius,
            spacing,
            rank,
            cap,
        )
        .map_err(|_| Error::GridCapExceeded {
            cap,
            radius,
            spacing,
            rank,
        })?;
        Ok(Self {
            radius,
            spacing,
            rank,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.rank
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.rank..(i + 1) * self.rank]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.rank)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

fn enumerate_ball(
    points: &mut Vec<f64>,
    prefix: &mut [f64],
    axis: usize,
    remaining_sq: f64,
    spacing: f64,
    rank: usize,
    cap: usize,
) -> std::result::Result<(), ()> {
    if axis == rank {
        if points.len() / rank >= cap {
            return Err(());
        }
        points.extend_from_slice(prefix);
        return Ok(());
    }
    let k_max = (remaining_sq.sqrt() / spacing).floor() as i64;
    for k in -k_max..=k_max {
        let z = k as f64 * spacing;
        let zz = z * z;
        if zz > remaining_sq {
            continue;
        }
        prefix[axis] = z;
        enumerate_ball(points, prefix, axis + 1, remaining_sq - zz, spacing, rank, cap)?;
    }
    Ok(())
}

/// The lattice dictated by the spec's radius/spacing formulas.
pub fn build_grid(spec: &PsdTiltSpec) -> Result<GridSpec> {
    build_grid_with(spec, DEFAULT_GRID_CAP)
}

pub fn build_grid_with(spec: &PsdTiltSpec, cap: usize) -> Result<GridSpec> {
    GridSpec::build(spec.grid_radius(), spec.grid_spacing(), spec.rank(), cap)
}

/// Mixture weights over the grid, with provenance of budget truncation.
#[derive(Clone, Debug)]
pub struct GridWeights {
    pub weights: DiscreteDistribution,
    pub budget_limited: bool,
}

/// Estimate `log(Z(z)·e^{-½‖z‖²})` for every grid point by telescoping
/// Monte Carlo, then normalize. Points are processed independently with
/// per-point derived seeds; the reduction order is fixed by grid index.
pub fn grid_log_weights<S: ScoreOracle + ?Sized>(
    score: &S,
    spec: &PsdTiltSpec,
    grid: &GridSpec,
    seed: u64,
    params: &NormalizationParams,
) -> Result<GridWeights> {
    if spec.dim() != score.dim() {
        return Err(Error::DimMismatch {
            expected: score.dim(),
            got: spec.dim(),
        });
    }
    let eps1 = spec.weight_epsilon();
    let delta1 = eps1 / grid.len() as f64;
    let results: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let z = grid.point(j);
            let v = spec.factor.tr_mul_vec(z)?;
            let est = estimate_normalization_with(
                score,
                &v,
                eps1,
                delta1,
                spec.norm_bound,
                derive_seed(seed, &[j as u64]),
                params,
            )?;
            let log_weight = est.log_value - 0.5 * dot(z, z);
            Ok((log_weight, est.budget_limited))
        })
        .collect::<Result<Vec<_>>>()?;
    let budget_limited = results.iter().any(|(_, b)| *b);
    let log_weights: Vec<f64> = results.into_iter().map(|(w, _)| w).collect();
    let points: Vec<Vec<f64>> = grid.iter_points().map(|z| z.to_vec()).collect();
    Ok(GridWeights {
        weights: DiscreteDistribution::from_unnormalized(points, log_weights)?,
        budget_limited,
    })
}

/// Oracle-mode weights: exact `log Z(z)` from the base's log-MGF. Swapping
/// this in for [`grid_log_weights`] isolates discretization error from
/// Monte Carlo error.
pub fn grid_log_weights_exact(
    base: &FiniteAtomBase,
    spec: &PsdTiltSpec,
    grid: &GridSpec,
) -> Result<DiscreteDistribution> {
    if spec.dim() != base.dim() {
        return Err(Error::DimMismatch {
            expected: base.dim(),
            got: spec.dim(),
        });
    }
    let log_weights = grid
        .iter_points()
        .map(|z| {
            let v = spec.factor.tr_mul_vec(z)?;
            Ok(base.log_mgf(&v)? - 0.5 * dot(z, z))
        })
        .collect::<Result<Vec<f64>>>()?;
    let points: Vec<Vec<f64>> = grid.iter_points().map(|z| z.to_vec()).collect();
    DiscreteDistribution::from_unnormalized(points, log_weights)
}

/// Caps and schedule knobs for the full pipeline.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PsdParams {
    pub grid_cap: usize,
    pub normalization: NormalizationParams,
    pub final_schedule: ScheduleParams,
}

impl Default for PsdParams {
    fn default() -> Self {
        Self {
            grid_cap: DEFAULT_GRID_CAP,
            normalization: NormalizationParams::default(),
            final_schedule: ScheduleParams::default(),
        }
    }
}

/// Grid summary emitted alongside samples.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridDiagnostics {
    #[serde(rename = "R")]
    pub radius: f64,
    pub gamma: f64,
    pub grid_size: usize,
    pub budget_limited: bool,
}

/// A prepared PSD-tilt sampler: grid built and mixture weights estimated
/// once, after which draws are cheap and independently seeded.
pub struct PsdTiltSampler<'a, S: ?Sized> {
    score: &'a S,
    spec: PsdTiltSpec,
    weights: DiscreteDistribution,
    budget_limited: bool,
    final_schedule: ScheduleParams,
    grid_size: usize,
}

impl<'a, S: ScoreOracle + ?Sized> PsdTiltSampler<'a, S> {
    pub fn prepare(
        score: &'a S,
        spec: &PsdTiltSpec,
        seed: u64,
        params: &PsdParams,
    ) -> Result<Self> {
        let grid = build_grid_with(spec, params.grid_cap)?;
        let gw = grid_log_weights(score, spec, &grid, seed, &params.normalization)?;
        Ok(Self {
            score,
            spec: spec.clone(),
            weights: gw.weights,
            budget_limited: gw.budget_limited,
            final_schedule: params.final_schedule,
            grid_size: grid.len(),
        })
    }

    /// Build a sampler from externally computed weights (oracle mode or a
    /// precomputed Monte Carlo pass).
    pub fn with_weights(
        score: &'a S,
        spec: &PsdTiltSpec,
        grid: &GridSpec,
        weights: DiscreteDistribution,
        budget_limited: bool,
        final_schedule: ScheduleParams,
    ) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        Ok(Self {
            score,
            spec: spec.clone(),
            weights,
            budget_limited,
            final_schedule,
            grid_size: grid.len(),
        })
    }

    /// Draw one sample: Gumbel-max over the grid weights, then a
    /// linear-tilt draw at `v = Lᵀz` and tolerance `ε/3`.
    pub fn sample(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = rng_from_seed(derive_seed(seed, &[0]));
        let idx = self.weights.sample_index(&mut rng);
        let z = &self.weights.points()[idx];
        let v = self.spec.factor.tr_mul_vec(z)?;
        let tilt_spec = LinearTiltSpec::new(v, self.spec.final_epsilon(), self.spec.norm_bound)?;
        sample_linear_tilt_with(
            self.score,
            &tilt_spec,
            derive_seed(seed, &[1]),
            &self.final_schedule,
        )
    }

    pub fn diagnostics(&self) -> GridDiagnostics {
        GridDiagnostics {
            radius: self.spec.grid_radius(),
            gamma: self.spec.grid_spacing(),
            grid_size: self.grid_size,
            budget_limited: self.budget_limited,
        }
    }

    pub fn weights(&self) -> &DiscreteDistribution {
        &self.weights
    }

    pub fn spec(&self) -> &PsdTiltSpec {
        &self.spec
    }
}

/// One-shot draw with default parameters. Prefer [`PsdTiltSampler::prepare`]
/// plus repeated [`PsdTiltSampler::sample`] when more than one draw is
/// needed; preparation dominates the cost.
pub fn psd_tilt_sample<S: ScoreOracle + ?Sized>(
    score: &S,
    spec: &PsdTiltSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = PsdTiltSampler::prepare(score, spec, seed, &PsdParams::default())?;
    sampler.sample(derive_seed(seed, &[b'x' as u64]))
}

const EXACT_MIXTURE_TERM_CAP_PER_ATOM: u128 = 1_000_000;

/// The exact finite-atom form of the discretized mixture
/// `q(x) ∝ Σ_z Z(z)·e^{-½‖z‖²}·p(x; Lᵀz)`, for tests against the tilted
/// target.
pub fn discretized_mixture_exact(
    base: &FiniteAtomBase,
    spec: &PsdTiltSpec,
    grid: &GridSpec,
) -> Result<FiniteAtomBase> {
    if spec.dim() != base.dim() {
        return Err(Error::DimMismatch {
            expected: base.dim(),
            got: spec.dim(),
        });
    }
    let terms = grid.len() as u128 * base.atoms().len() as u128;
    let cap = EXACT_MIXTURE_TERM_CAP_PER_ATOM * base.atoms().len() as u128;
    if terms > cap {
        return Err(Error::SummationCapExceeded { terms, cap });
    }
    // The mixture weight Z(z) cancels against the normalization of the
    // tilted component p(x; Lᵀz), leaving w_i · e^{-½‖z‖² + ⟨L·x_i, z⟩}.
    let z_terms: Vec<f64> = grid.iter_points().map(|z| -0.5 * dot(z, z)).collect();
    let mut log_weights = Vec::with_capacity(base.atoms().len());
    for atom in base.atoms() {
        let lx = spec.factor.mul_vec(&atom.location)?;
        let contributions: Vec<f64> = grid
            .iter_points()
            .zip(&z_terms)
            .map(|(z, zt)| zt + dot(&lx, z))
            .collect();
        log_weights.push(atom.weight.ln() + log_sum_exp(&contributions));
    }
    Ok(base.reweighted(log_weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row_matrix(row: Vec<f64>) -> Matrix {
        Matrix::from_rows(vec![row]).unwrap()
    }

    #[test]
    fn grid_formulas_rank_one_example() {
        let spec = PsdTiltSpec::new(row_matrix(vec![1.0]), 1.0, 1.0, 0.2).unwrap();
        let r = spec.grid_radius();
        let gamma = spec.grid_spacing();
        assert_abs_diff_eq!(r, 1.0 + 2.0 + 2.0 * (270.0f64).ln().sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(gamma, 0.2 / 54.0, epsilon = 1e-15);
        let grid = build_grid(&spec).unwrap();
        let expected = 2 * (r / gamma).floor() as usize + 1;
        assert_eq!(grid.len(), expected);
        assert!(grid.iter_points().any(|z| z[0] == 0.0));
    }

    #[test]
    fn grid_contains_origin_for_higher_rank() {
        let grid = GridSpec::build(1.5, 0.4, 3, 100_000).unwrap();
        assert!(grid.iter_points().any(|z| z.iter().all(|&v| v == 0.0)));
        // Every point is inside the ball and on the lattice.
        for z in grid.iter_points() {
            assert!(l2_norm(z) <= 1.5 + 1e-12);
            for &v in z {
                let k = v / 0.4;
                assert_abs_diff_eq!(k, k.round(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rank_two_count_tracks_disk_area() {
        let radius = 3.0;
        let spacing = 0.02; // R/γ = 150
        let grid = GridSpec::build(radius, spacing, 2, 1_000_000).unwrap();
        let expected = std::f64::consts::PI * (radius / spacing).powi(2);
        let ratio = grid.len() as f64 / expected;
        assert!(
            (ratio - 1.0).abs() < 0.05,
            "lattice count {} vs disk area {expected}",
            grid.len()
        );
    }

    #[test]
    fn grid_cap_is_enforced_with_parameters_in_error() {
        let err = GridSpec::build(10.0, 1e-6, 1, 1000).unwrap_err();
        match err {
            Error::GridCapExceeded { cap, rank, .. } => {
                assert_eq!(cap, 1000);
                assert_eq!(rank, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_factor_weights_are_standard_gaussian() {
        // L = 0 makes every normalization exactly 1 (the tilt is zero and
        // the per-stage summands are identically 1), so the grid weights
        // collapse to exp(-½ z²) even under Monte Carlo estimation.
        let base = FiniteAtomBase::hypercube(1).unwrap();
        let spec = PsdTiltSpec::new(row_matrix(vec![0.0]), 1.0, 1.0, 0.45).unwrap();
        let grid = GridSpec::build(2.0, 0.5, 1, 1000).unwrap();
        let params = NormalizationParams {
            budget_cap: 4,
            schedule: ScheduleParams {
                c0: 8.0,
                max_steps: 8,
            },
        };
        let gw = grid_log_weights(&base, &spec, &grid, 3, &params).unwrap();
        let direct: Vec<f64> = grid.iter_points().map(|z| -0.5 * z[0] * z[0]).collect();
        let lse = log_sum_exp(&direct);
        for (got, want) in gw.weights.log_weights().iter().zip(&direct) {
            assert_abs_diff_eq!(*got, want - lse, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_weights_match_closed_form_and_are_symmetric() {
        // Two-point base ±u with L = √(2λ)uᵀ: Z(z) = cosh(√(2λ)‖u‖²·z),
        // an even function, so mirror lattice points carry equal weight.
        let u = [0.6, 0.8];
        let lambda = 2.0f64;
        let base = FiniteAtomBase::two_point(&u).unwrap();
        let l = row_matrix(u.iter().map(|v| v * (2.0 * lambda).sqrt()).collect());
        let spec = PsdTiltSpec::with_tight_bound(l, &base, 0.3).unwrap();
        let grid = GridSpec::build(3.0, 0.25, 1, 10_000).unwrap();
        let weights = grid_log_weights_exact(&base, &spec, &grid).unwrap();
        let scale = (2.0 * lambda).sqrt(); // ‖u‖ = 1
        let direct: Vec<f64> = grid
            .iter_points()
            .map(|z| (scale * z[0]).cosh().ln() - 0.5 * z[0] * z[0])
            .collect();
        let lse = log_sum_exp(&direct);
        for (got, want) in weights.log_weights().iter().zip(&direct) {
            assert_abs_diff_eq!(*got, want - lse, epsilon = 1e-10);
        }
        let n = grid.len();
        for j in 0..n / 2 {
            assert_abs_diff_eq!(
                weights.log_weights()[j],
                weights.log_weights()[n - 1 - j],
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn origin_only_grid_reproduces_base() {
        let base = FiniteAtomBase::hypercube(2).unwrap();
        let spec = PsdTiltSpec::new(
            Matrix::from_rows(vec![vec![0.7, -0.2]]).unwrap(),
            2.0,
            base.norm_bound(),
            0.3,
        )
        .unwrap();
        let grid = GridSpec::build(0.5, 1.0, 1, 10).unwrap();
        assert_eq!(grid.len(), 1);
        let q = discretized_mixture_exact(&base, &spec, &grid).unwrap();
        for (a, b) in base.atoms().iter().zip(q.atoms()) {
            assert_abs_diff_eq!(a.weight, b.weight, epsilon = 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(PsdTiltSpec::new(row_matrix(vec![1.0]), 0.5, 1.0, 0.2).is_err());
        assert!(PsdTiltSpec::new(row_matrix(vec![1.0]), 1.0, 1.0, 0.6).is_err());
        let tall = Matrix::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        assert!(PsdTiltSpec::new(tall, 1.0, 1.0, 0.2).is_err());
    }

    #[test]
    fn reward_matrix_matches_half_gram() {
        let l = Matrix::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let a = PsdTiltSpec::new(l, 3.0, 1.0, 0.2)
            .unwrap()
            .reward_matrix();
        // ½ LᵀL for L = (1 2): [[0.5, 1.0], [1.0, 2.0]]
        assert_abs_diff_eq!(a.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.get(0, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.get(1, 1), 2.0, epsilon = 1e-15);
    }
}
