//! Base distributions with closed-form noised scores.
//!
//! A base distribution `p` enters every algorithm in this crate only through
//! the noised-score oracle `s_σ(x) = ∇ log p_σ(x)`, where `p_σ` is the law
//! of `√(1−σ²)·X + σ·Z`. The two concrete bases here additionally expose
//! exact tilting and exact log partition functions, which is what makes the
//! samplers testable against ground truth:
//!
//! - [`FiniteAtomBase`]: a weighted atom list. Its noised law is a Gaussian
//!   mixture, so scores, tilts, and `log E[e^{⟨x,v⟩}]` are all exact.
//! - [`GaussianMixtureBase`]: an isotropic Gaussian mixture. Support is only
//!   approximately bounded; it exists for the two-mode metastability demo
//!   and carries an effective norm bound for that purpose.
//!
//! All mixture-weight arithmetic is done in log space with max subtraction;
//! tilt exponents like `e^{28}` are routine here and would overflow linear
//! space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{all_finite, dot, l2_norm, log_sum_exp, squared_distance};

/// Noise levels are clamped to this closed interval. The linear-tilt score
/// shift `σ²/√(1−σ²)·v` diverges as σ → 1; clamping keeps every oracle query
/// finite while the sampler schedule governs actual accuracy.
pub const SIGMA_CLAMP_MIN: f64 = 1e-6;
pub const SIGMA_CLAMP_MAX: f64 = 1.0 - 1e-6;

/// A noise scale σ, clamped into `[SIGMA_CLAMP_MIN, SIGMA_CLAMP_MAX]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(Error::NonFinite { name: "sigma" });
        }
        Ok(Self(sigma.clamp(SIGMA_CLAMP_MIN, SIGMA_CLAMP_MAX)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `√(1−σ²)`, the contraction applied to the signal at this noise level.
    pub fn signal_scale(self) -> f64 {
        (1.0 - self.0 * self.0).sqrt()
    }
}

/// Query access to the noised scores of some distribution on `R^d`.
pub trait ScoreOracle: Sync {
    fn dim(&self) -> usize;

    /// `∇ log p_σ(x)` at the clamped noise level σ.
    fn score(&self, sigma: NoiseLevel, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: ScoreOracle + ?Sized> ScoreOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn score(&self, sigma: NoiseLevel, x: &[f64]) -> Result<Vec<f64>> {
        (**self).score(sigma, x)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// A finitely supported distribution: weighted atoms inside a norm ball.
///
/// Weights are normalized on construction (idempotently: inputs already
/// summing to 1 within 1e-12 are kept bit for bit, so serialization round
/// trips are exact). Locations must be distinct and lie within `norm_bound`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "FiniteAtomBaseRepr", into = "FiniteAtomBaseRepr")]
pub struct FiniteAtomBase {
    dim: usize,
    atoms: Vec<Atom>,
    norm_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct FiniteAtomBaseRepr {
    dim: usize,
    atoms: Vec<Atom>,
    norm_bound: f64,
}

impl TryFrom<FiniteAtomBaseRepr> for FiniteAtomBase {
    type Error = Error;

    fn try_from(repr: FiniteAtomBaseRepr) -> Result<Self> {
        let base = FiniteAtomBase::new(repr.atoms, repr.norm_bound)?;
        if base.dim != repr.dim {
            return Err(Error::DimMismatch {
                expected: repr.dim,
                got: base.dim,
            });
        }
        Ok(base)
    }
}

impl From<FiniteAtomBase> for FiniteAtomBaseRepr {
    fn from(base: FiniteAtomBase) -> Self {
        Self {
            dim: base.dim,
            atoms: base.atoms,
            norm_bound: base.norm_bound,
        }
    }
}

/// Bit-level key for location distinctness; folds -0.0 into 0.0.
fn location_key(loc: &[f64]) -> Vec<u64> {
    loc.iter()
        .map(|&v| (if v == 0.0 { 0.0f64 } else { v }).to_bits())
        .collect()
}

impl FiniteAtomBase {
    pub fn new(atoms: Vec<Atom>, norm_bound: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty { name: "atoms" });
        }
        if !norm_bound.is_finite() || norm_bound <= 0.0 {
            return Err(Error::invalid("norm_bound", "must be positive and finite"));
        }
        let dim = atoms[0].location.len();
        if dim == 0 {
            return Err(Error::Empty { name: "atom location" });
        }
        let mut keys = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for atom in &atoms {
            if atom.location.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: atom.location.len(),
                });
            }
            if !all_finite(&atom.location) {
                return Err(Error::NonFinite {
                    name: "atom location",
                });
            }
            if !atom.weight.is_finite() || atom.weight <= 0.0 {
                return Err(Error::invalid("weight", "must be positive and finite"));
            }
            let norm = l2_norm(&atom.location);
            if norm > norm_bound * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "norm_bound",
                    format!("atom norm {norm} exceeds bound {norm_bound}"),
                ));
            }
            if !keys.insert(location_key(&atom.location)) {
                return Err(Error::invalid("atoms", "locations must be distinct"));
            }
            total += atom.weight;
        }
        let mut atoms = atoms;
        if (total - 1.0).abs() > 1e-12 {
            for atom in &mut atoms {
                atom.weight /= total;
            }
        }
        Ok(Self {
            dim,
            atoms,
            norm_bound,
        })
    }

    /// Uniform distribution on `{-1, 1}^dim`.
    pub fn hypercube(dim: usize) -> Result<Self> {
        Self::cube_with_levels(dim, -1.0, 1.0)
    }

    /// Uniform distribution on `{0, 1}^dim`.
    pub fn binary_hypercube(dim: usize) -> Result<Self> {
        Self::cube_with_levels(dim, 0.0, 1.0)
    }

    fn cube_with_levels(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if dim == 0 || dim > 20 {
            return Err(Error::invalid("dim", "must be in 1..=20 for enumeration"));
        }
        let n = 1usize << dim;
        let weight = 1.0 / n as f64;
        let atoms = (0..n)
            .map(|mask| Atom {
                location: (0..dim)
                    .map(|j| if mask >> j & 1 == 1 { hi } else { lo })
                    .collect(),
                weight,
            })
            .collect();
        Self::new(atoms, (dim as f64).sqrt())
    }

    /// The symmetric two-atom measure `½δ_{-u} + ½δ_{+u}`.
    pub fn two_point(u: &[f64]) -> Result<Self> {
        let norm = l2_norm(u);
        if norm == 0.0 {
            return Err(Error::invalid("u", "must be nonzero"));
        }
        let atoms = vec![
            Atom {
                location: u.iter().map(|v| -v).collect(),
                weight: 0.5,
            },
            Atom {
                location: u.to_vec(),
                weight: 0.5,
            },
        ];
        Self::new(atoms, norm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight.ln()).collect()
    }

    fn check_vector(&self, name: &'static str, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if !all_finite(v) {
            return Err(Error::NonFinite { name });
        }
        Ok(())
    }

    /// Renormalize in log space. Atoms whose weight underflows to zero
    /// (more than ~745 nats below the heaviest) are dropped: they carry no
    /// representable mass and would violate the positive-weight invariant.
    pub(crate) fn reweighted(&self, log_weights: Vec<f64>) -> Self {
        let lse = log_sum_exp(&log_weights);
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .zip(&log_weights)
            .filter_map(|(atom, lw)| {
                let weight = (lw - lse).exp();
                (weight > 0.0).then(|| Atom {
                    location: atom.location.clone(),
                    weight,
                })
            })
            .collect();
        Self::new(atoms, self.norm_bound).expect("reweighting preserves validity")
    }

    /// The linear tilt `p(x;v) ∝ p(x)·e^{⟨x,v⟩}`, exact.
    pub fn linear_tilt(&self, v: &[f64]) -> Result<Self> {
        self.check_vector("v", v)?;
        let lw = self
            .atoms
            .iter()
            .map(|a| a.weight.ln() + dot(&a.location, v))
            .collect();
        Ok(self.reweighted(lw))
    }

    /// The quadratic tilt `∝ p(x)·exp(xᵀAx)` for exactly symmetric `A`.
    pub fn quadratic_tilt(&self, a: &Matrix) -> Result<Self> {
        a.check_symmetric()?;
        if a.rows() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: a.rows(),
            });
        }
        let lw = self
            .atoms
            .iter()
            .map(|atom| {
                Ok(atom.weight.ln() + a.quadratic_form(&atom.location)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.reweighted(lw))
    }

    /// `log E_{x~p}[e^{⟨x,v⟩}]`, exact via log-sum-exp over the atoms.
    pub fn log_mgf(&self, v: &[f64]) -> Result<f64> {
        self.check_vector("v", v)?;
        let lw: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.weight.ln() + dot(&a.location, v))
            .collect();
        Ok(log_sum_exp(&lw))
    }

    /// `log p_σ(x)` of the noised law (a Gaussian mixture), exact.
    pub fn noised_log_density(&self, sigma: NoiseLevel, x: &[f64]) -> Result<f64> {
        self.check_vector("x", x)?;
        let scale = sigma.signal_scale();
        let var = sigma.value() * sigma.value();
        let logits: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| {
                let mean: Vec<f64> = a.location.iter().map(|v| scale * v).collect();
                a.weight.ln() - squared_distance(x, &mean) / (2.0 * var)
            })
            .collect();
        let d = self.dim as f64;
        Ok(log_sum_exp(&logits) - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln())
    }

    /// Draw an atom index by inverse-CDF lookup in declaration order.
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (i, atom) in self.atoms.iter().enumerate() {
            cum += atom.weight;
            if u < cum {
                return i;
            }
        }
        self.atoms.len() - 1
    }

    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.atoms[self.sample_index(rng)].location.clone()
    }
}

impl ScoreOracle for FiniteAtomBase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, sigma: NoiseLevel, x: &[f64]) -> Result<Vec<f64>> {
        self.check_vector("x", x)?;
        let scale = sigma.signal_scale();
        let var = sigma.value() * sigma.value();
        let logits: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| {
                let sq: f64 = a
                    .location
                    .iter()
                    .zip(x)
                    .map(|(&l, &xi)| {
                        let d = xi - scale * l;
                        d * d
                    })
                    .sum();
                a.weight.ln() - sq / (2.0 * var)
            })
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut resp: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = resp.iter().sum();
        for r in &mut resp {
            *r /= total;
        }
        let mut out = vec![0.0; self.dim];
        for (atom, r) in self.atoms.iter().zip(&resp) {
            for (o, (&l, &xi)) in out.iter_mut().zip(atom.location.iter().zip(x)) {
                *o += r * (scale * l - xi) / var;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub weight: f64,
}

/// An isotropic Gaussian mixture base.
///
/// Strictly speaking this violates bounded support; it is admitted for the
/// two-mode Gibbs demo, with [`GaussianMixtureBase::effective_norm_bound`]
/// standing in for the support radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GaussianMixtureRepr", into = "GaussianMixtureRepr")]
pub struct GaussianMixtureBase {
    dim: usize,
    components: Vec<GaussianComponent>,
}

#[derive(Serialize, Deserialize)]
struct GaussianMixtureRepr {
    dim: usize,
    components: Vec<GaussianComponent>,
}

impl TryFrom<GaussianMixtureRepr> for GaussianMixtureBase {
    type Error = Error;

    fn try_from(repr: GaussianMixtureRepr) -> Result<Self> {
        let base = GaussianMixtureBase::new(repr.components)?;
        if base.dim != repr.dim {
            return Err(Error::DimMismatch {
                expected: repr.dim,
                got: base.dim,
            });
        }
        Ok(base)
    }
}

impl From<GaussianMixtureBase> for GaussianMixtureRepr {
    fn from(base: GaussianMixtureBase) -> Self {
        Self {
            dim: base.dim,
            components: base.components,
        }
    }
}

impl GaussianMixtureBase {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty { name: "components" });
        }
        let dim = components[0].mean.len();
        if dim == 0 {
            return Err(Error::Empty { name: "mean" });
        }
        let mut total = 0.0;
        for c in &components {
            if c.mean.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: c.mean.len(),
                });
            }
            if !all_finite(&c.mean) {
                return Err(Error::NonFinite { name: "mean" });
            }
            if !c.variance.is_finite() || c.variance <= 0.0 {
                return Err(Error::invalid("variance", "must be strictly positive"));
            }
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(Error::invalid("weight", "must be positive and finite"));
            }
            total += c.weight;
        }
        let mut components = components;
        if (total - 1.0).abs() > 1e-12 {
            for c in &mut components {
                c.weight /= total;
            }
        }
        Ok(Self { dim, components })
    }

    /// `½N(-u, τ²I) + ½N(u, τ²I)`.
    pub fn symmetric_pair(u: &[f64], variance: f64) -> Result<Self> {
        Self::new(vec![
            GaussianComponent {
                mean: u.iter().map(|v| -v).collect(),
                variance,
                weight: 0.5,
            },
            GaussianComponent {
                mean: u.to_vec(),
                variance,
                weight: 0.5,
            },
        ])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// `max_i ‖mean_i‖ + 6·√(max_i variance_i · d)`: the radius outside of
    /// which the mixture carries negligible mass.
    pub fn effective_norm_bound(&self) -> f64 {
        let max_mean = self
            .components
            .iter()
            .map(|c| l2_norm(&c.mean))
            .fold(0.0, f64::max);
        let max_var = self
            .components
            .iter()
            .map(|c| c.variance)
            .fold(0.0, f64::max);
        max_mean + 6.0 * (max_var * self.dim as f64).sqrt()
    }

    /// `log p_σ(x)` of the noised mixture, exact.
    pub fn noised_log_density(&self, sigma: NoiseLevel, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite { name: "x" });
        }
        let scale = sigma.signal_scale();
        let sig2 = sigma.value() * sigma.value();
        let d = self.dim as f64;
        let logits: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let v = (1.0 - sig2) * c.variance + sig2;
                let mean: Vec<f64> = c.mean.iter().map(|m| scale * m).collect();
                c.weight.ln() - 0.5 * d * v.ln() - squared_distance(x, &mean) / (2.0 * v)
            })
            .collect();
        Ok(log_sum_exp(&logits) - 0.5 * d * (2.0 * std::f64::consts::PI).ln())
    }
}

impl ScoreOracle for GaussianMixtureBase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, sigma: NoiseLevel, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite { name: "x" });
        }
        let scale = sigma.signal_scale();
        let sig2 = sigma.value() * sigma.value();
        let d = self.dim as f64;
        // Noising an N(m, τ²I) component yields N(√(1−σ²)m, ((1−σ²)τ²+σ²)I).
        let vars: Vec<f64> = self
            .components
            .iter()
            .map(|c| (1.0 - sig2) * c.variance + sig2)
            .collect();
        let logits: Vec<f64> = self
            .components
            .iter()
            .zip(&vars)
            .map(|(c, &v)| {
                let sq: f64 = c
                    .mean
                    .iter()
                    .zip(x)
                    .map(|(&m, &xi)| {
                        let diff = xi - scale * m;
                        diff * diff
                    })
                    .sum();
                c.weight.ln() - 0.5 * d * v.ln() - sq / (2.0 * v)
            })
            .collect();
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut resp: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let total: f64 = resp.iter().sum();
        for r in &mut resp {
            *r /= total;
        }
        let mut out = vec![0.0; self.dim];
        for ((c, r), &v) in self.components.iter().zip(&resp).zip(&vars) {
            for (o, (&m, &xi)) in out.iter_mut().zip(c.mean.iter().zip(x)) {
                *o += r * (scale * m - xi) / v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn simple_base() -> FiniteAtomBase {
        FiniteAtomBase::new(
            vec![
                Atom {
                    location: vec![0.9, -0.3],
                    weight: 0.4,
                },
                Atom {
                    location: vec![-0.5, 0.7],
                    weight: 0.35,
                },
                Atom {
                    location: vec![0.1, 0.2],
                    weight: 0.25,
                },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn sigma_is_clamped_not_rejected() {
        assert_eq!(NoiseLevel::new(0.0).unwrap().value(), SIGMA_CLAMP_MIN);
        assert_eq!(NoiseLevel::new(2.0).unwrap().value(), SIGMA_CLAMP_MAX);
        assert!(NoiseLevel::new(f64::NAN).is_err());
    }

    #[test]
    fn single_atom_score_is_linear() {
        let x0 = vec![0.4, -0.8];
        let base = FiniteAtomBase::new(
            vec![Atom {
                location: x0.clone(),
                weight: 1.0,
            }],
            1.0,
        )
        .unwrap();
        let sigma = NoiseLevel::new(0.37).unwrap();
        let x = vec![1.1, 0.2];
        let got = base.score(sigma, &x).unwrap();
        let scale = sigma.signal_scale();
        let var = sigma.value() * sigma.value();
        for j in 0..2 {
            assert_abs_diff_eq!(got[j], -(x[j] - scale * x0[j]) / var, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_pair_score_vanishes_at_midpoint() {
        let base = FiniteAtomBase::hypercube(1).unwrap();
        let s = base
            .score(NoiseLevel::new(0.6).unwrap(), &[0.0])
            .unwrap();
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_tilt_is_identity() {
        let base = simple_base();
        let tilted = base.linear_tilt(&[0.0, 0.0]).unwrap();
        for (a, b) in base.atoms().iter().zip(tilted.atoms()) {
            assert_abs_diff_eq!(a.weight, b.weight, epsilon = 1e-15);
            assert_eq!(a.location, b.location);
        }
    }

    #[test]
    fn hand_computed_tilt_weights() {
        // Unif({-1,1}), v = ln 2: weight of +1 is e^{ln2}/(e^{ln2}+e^{-ln2}) = 0.8.
        let base = FiniteAtomBase::hypercube(1).unwrap();
        let tilted = base.linear_tilt(&[(2.0f64).ln()]).unwrap();
        for atom in tilted.atoms() {
            let expected = if atom.location[0] > 0.0 { 0.8 } else { 0.2 };
            assert_abs_diff_eq!(atom.weight, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn tilt_then_inverse_tilt_restores_weights() {
        let base = simple_base();
        let v = [1.3, -0.4];
        let back = base
            .linear_tilt(&v)
            .unwrap()
            .linear_tilt(&[-v[0], -v[1]])
            .unwrap();
        for (a, b) in base.atoms().iter().zip(back.atoms()) {
            assert_abs_diff_eq!(a.weight, b.weight, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadratic_tilt_zero_matrix_is_identity() {
        let base = simple_base();
        let tilted = base.quadratic_tilt(&Matrix::zeros(2, 2)).unwrap();
        for (a, b) in base.atoms().iter().zip(tilted.atoms()) {
            assert_abs_diff_eq!(a.weight, b.weight, epsilon = 1e-15);
        }
    }

    #[test]
    fn balanced_pair_mass_under_strong_negative_tilt() {
        // d = 2, w = (1,-1), A = -7 wwᵀ. Brute force over the four corners:
        // corners with w·x = 0 keep weight 1, the others get e^{-28}.
        let base = FiniteAtomBase::hypercube(2).unwrap();
        let a = Matrix::outer(&[1.0, -1.0], &[1.0, -1.0], -7.0);
        let tilted = base.quadratic_tilt(&a).unwrap();
        let mass: f64 = tilted
            .atoms()
            .iter()
            .filter(|at| (at.location[0] - at.location[1]).abs() < 1e-12)
            .map(|at| at.weight)
            .sum();
        let expected = 1.0 / (1.0 + (-28.0f64).exp());
        assert_abs_diff_eq!(mass, expected, epsilon = 1e-12);
    }

    #[test]
    fn rank_one_psd_tilt_keeps_symmetric_pair_balanced() {
        let u = [0.6, 0.8];
        let base = FiniteAtomBase::two_point(&u).unwrap();
        let a = Matrix::outer(&u, &u, 1.5);
        let tilted = base.quadratic_tilt(&a).unwrap();
        assert_abs_diff_eq!(tilted.atoms()[0].weight, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(tilted.atoms()[1].weight, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn asymmetric_quadratic_tilt_rejected() {
        let base = simple_base();
        let mut a = Matrix::zeros(2, 2);
        a.set(0, 1, 1.0);
        assert!(matches!(
            base.quadratic_tilt(&a),
            Err(Error::AsymmetricMatrix { .. })
        ));
    }

    #[test]
    fn log_mgf_at_zero_is_zero() {
        assert_abs_diff_eq!(
            simple_base().log_mgf(&[0.0, 0.0]).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn log_mgf_on_cube_is_sum_of_log_cosh() {
        let base = FiniteAtomBase::hypercube(2).unwrap();
        let got = base.log_mgf(&[(2.0f64).ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(got, 1.25f64.ln(), epsilon = 1e-12);

        let base4 = FiniteAtomBase::hypercube(4).unwrap();
        let v = [0.3f64, -1.1, 0.0, 2.4];
        let expected: f64 = v.iter().map(|&vj| vj.cosh().ln()).sum();
        assert_abs_diff_eq!(base4.log_mgf(&v).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn serde_round_trip_preserves_bits() {
        let base = simple_base();
        let json = serde_json::to_string(&base).unwrap();
        let back: FiniteAtomBase = serde_json::from_str(&json).unwrap();
        for (a, b) in base.atoms().iter().zip(back.atoms()) {
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            assert_eq!(a.location, b.location);
        }
    }

    #[test]
    fn invalid_bases_rejected() {
        // Atom outside the ball.
        assert!(FiniteAtomBase::new(
            vec![Atom {
                location: vec![2.0],
                weight: 1.0
            }],
            1.0
        )
        .is_err());
        // Duplicate atoms.
        assert!(FiniteAtomBase::new(
            vec![
                Atom {
                    location: vec![0.5],
                    weight: 0.5
                },
                Atom {
                    location: vec![0.5],
                    weight: 0.5
                }
            ],
            1.0
        )
        .is_err());
        // Nonpositive weight.
        assert!(FiniteAtomBase::new(
            vec![Atom {
                location: vec![0.5],
                weight: 0.0
            }],
            1.0
        )
        .is_err());
    }

    #[test]
    fn mixture_score_vanishes_at_symmetric_midpoint() {
        let base = GaussianMixtureBase::symmetric_pair(&[1.0, 0.0], 0.2).unwrap();
        let s = base
            .score(NoiseLevel::new(0.5).unwrap(), &[0.0, 0.0])
            .unwrap();
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn mixture_effective_bound_dominates_means() {
        let base = GaussianMixtureBase::symmetric_pair(&[3.0, 4.0], 0.01).unwrap();
        assert!(base.effective_norm_bound() > 5.0);
    }

    proptest! {
        #[test]
        fn tilt_composition(
            vx in -2.0f64..2.0, vy in -2.0f64..2.0,
            wx in -2.0f64..2.0, wy in -2.0f64..2.0,
        ) {
            let base = simple_base();
            let two_step = base.linear_tilt(&[vx, vy]).unwrap().linear_tilt(&[wx, wy]).unwrap();
            let one_step = base.linear_tilt(&[vx + wx, vy + wy]).unwrap();
            for (a, b) in two_step.atoms().iter().zip(one_step.atoms()) {
                prop_assert!((a.weight - b.weight).abs() <= 1e-12);
            }
        }

        #[test]
        fn log_mgf_is_convex_along_segments(
            ax in -3.0f64..3.0, ay in -3.0f64..3.0,
            bx in -3.0f64..3.0, by in -3.0f64..3.0,
            t in 0.0f64..1.0,
        ) {
            let base = simple_base();
            let mid = [t * ax + (1.0 - t) * bx, t * ay + (1.0 - t) * by];
            let lhs = base.log_mgf(&mid).unwrap();
            let rhs = t * base.log_mgf(&[ax, ay]).unwrap()
                + (1.0 - t) * base.log_mgf(&[bx, by]).unwrap();
            prop_assert!(lhs <= rhs + 1e-10);
        }

        #[test]
        fn tilted_atoms_stay_in_ball(vx in -5.0f64..5.0, vy in -5.0f64..5.0) {
            let base = simple_base();
            let tilted = base.linear_tilt(&[vx, vy]).unwrap();
            for atom in tilted.atoms() {
                prop_assert!(l2_norm(&atom.location) <= tilted.norm_bound() * (1.0 + 1e-12));
            }
        }
    }
}
