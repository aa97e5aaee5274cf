//! Ground-truth metrics: exact TV and W2 on discrete supports, empirical W2
//! between sample sets, and the sign-rounding mass inequality.
//!
//! Two conventions run through this module:
//!
//! - **Canonical rounding.** TV requires aligning atom locations across two
//!   distributions; locations are keyed by rounding coordinates to 1e-12.
//!   Exact tilts preserve locations bit for bit, so this is lossless for
//!   everything produced in this crate; genuinely distinct atoms that
//!   collide under rounding are reported as an error rather than merged.
//! - **Sampling floor.** The empirical W2 between two finite samples of the
//!   *same* law is strictly positive; tolerance budgets for sampler accuracy
//!   must measure and add that floor ([`sampling_floor`]).

mod transport;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base::FiniteAtomBase;
use crate::error::{Error, Result};
use crate::math::{all_finite, log_sum_exp};
use crate::rng::{derive_seed, rng_from_seed};

/// Atoms with normalized log-weights (`log Σ e^{w_i} = 0`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    points: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Normalize arbitrary finite log-weights by subtracting their
    /// log-sum-exp.
    pub fn from_unnormalized(points: Vec<Vec<f64>>, log_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty { name: "points" });
        }
        if points.len() != log_weights.len() {
            return Err(Error::DimMismatch {
                expected: points.len(),
                got: log_weights.len(),
            });
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !all_finite(p) {
                return Err(Error::NonFinite { name: "point" });
            }
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::NonFinite { name: "log_weight" });
        }
        let lse = log_sum_exp(&log_weights);
        if !lse.is_finite() {
            return Err(Error::invalid("log_weights", "total mass is zero"));
        }
        let log_weights = log_weights.iter().map(|w| w - lse).collect();
        Ok(Self {
            points,
            log_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// Gumbel-max draw of an atom index; works directly on log-weights so
    /// extreme weight ranges never leave log space.
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, lw) in self.log_weights.iter().enumerate() {
            let e: f64 = rng.sample(rand_distr::Exp1);
            let g = lw - e.ln();
            if g > best {
                best = g;
                arg = i;
            }
        }
        arg
    }
}

impl From<&FiniteAtomBase> for DiscreteDistribution {
    fn from(base: &FiniteAtomBase) -> Self {
        Self {
            points: base.atoms().iter().map(|a| a.location.clone()).collect(),
            log_weights: base.log_weights(),
        }
    }
}

/// A finite collection of draws, tagged with the seed that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    seed_provenance: u64,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, seed_provenance: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty { name: "points" });
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !all_finite(p) {
                return Err(Error::NonFinite { name: "point" });
            }
        }
        Ok(Self {
            points,
            seed_provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn seed_provenance(&self) -> u64 {
        self.seed_provenance
    }

    /// The empirical measure, with bit-identical points merged.
    pub fn empirical(&self) -> DiscreteDistribution {
        let mut merged: BTreeMap<Vec<u64>, (Vec<f64>, usize)> = BTreeMap::new();
        for p in &self.points {
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            merged
                .entry(key)
                .or_insert_with(|| (p.clone(), 0))
                .1 += 1;
        }
        let n = self.points.len() as f64;
        let (points, log_weights) = merged
            .into_values()
            .map(|(p, c)| (p, (c as f64 / n).ln()))
            .unzip();
        DiscreteDistribution {
            points,
            log_weights,
        }
    }
}

/// `n` exact draws from a finite-atom distribution.
pub fn exact_sample_set(base: &FiniteAtomBase, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let points = (0..n).map(|_| base.sample_point(&mut rng)).collect();
    SampleSet::new(points, seed)
}

const ROUNDING_SCALE: f64 = 1e12;
const ROUNDING_COORD_LIMIT: f64 = 1e6;

fn canonical_key(point: &[f64]) -> Result<Vec<i64>> {
    point
        .iter()
        .map(|&v| {
            if v.abs() > ROUNDING_COORD_LIMIT {
                return Err(Error::invalid(
                    "support",
                    format!("coordinate {v} too large for canonical rounding"),
                ));
            }
            Ok((v * ROUNDING_SCALE).round() as i64)
        })
        .collect()
}

fn keyed_weights(dist: &DiscreteDistribution) -> Result<BTreeMap<Vec<i64>, f64>> {
    let mut map = BTreeMap::new();
    for (p, w) in dist.points.iter().zip(dist.weights()) {
        let key = canonical_key(p)?;
        if map.insert(key.clone(), w).is_some() {
            return Err(Error::AmbiguousSupport { key });
        }
    }
    Ok(map)
}

/// Exact total variation `½ Σ |p_i − q_i|` over the union of supports,
/// aligned by canonical rounding.
pub fn exact_tv(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let pw = keyed_weights(p)?;
    let mut qw = keyed_weights(q)?;
    let mut total = 0.0;
    for (key, wp) in &pw {
        let wq = qw.remove(key).unwrap_or(0.0);
        total += (wp - wq).abs();
    }
    for (_, wq) in qw {
        total += wq;
    }
    Ok(0.5 * total)
}

pub fn exact_tv_bases(p: &FiniteAtomBase, q: &FiniteAtomBase) -> Result<f64> {
    exact_tv(&p.into(), &q.into())
}

const TRANSPORT_PAIR_CAP: usize = 1_000_000;

/// Exact Wasserstein-2 between discrete distributions (min-cost transport
/// with squared-Euclidean costs, then a square root).
pub fn exact_w2(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if p.len().saturating_mul(q.len()) > TRANSPORT_PAIR_CAP {
        return Err(Error::TransportSizeCap {
            left: p.len(),
            right: q.len(),
            cap: TRANSPORT_PAIR_CAP,
        });
    }
    let cost = transport::min_cost_transport(&p.points, &p.weights(), &q.points, &q.weights())?;
    Ok(cost.sqrt())
}

pub fn exact_w2_bases(p: &FiniteAtomBase, q: &FiniteAtomBase) -> Result<f64> {
    exact_w2(&p.into(), &q.into())
}

/// Largest sample-set size for which empirical W2 is solved exactly.
pub const EXACT_ASSIGNMENT_CAP: usize = 512;
/// Number of fixed-seed projections used by the sliced estimator.
pub const SLICED_PROJECTIONS: usize = 128;
const SLICED_SEED: u64 = 0x51_1CED;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct W2Estimate {
    pub value: f64,
    /// True when the value is the sliced estimate rather than the exact
    /// assignment distance.
    pub sliced: bool,
}

/// Empirical W2 between sample sets.
///
/// Equal-size sets of at most [`EXACT_ASSIGNMENT_CAP`] points are solved
/// exactly (optimal coupling of the two empirical measures). Larger or
/// unequal sets fall back to the sliced estimate: the root-mean of squared
/// 1-D quantile-coupling distances over [`SLICED_PROJECTIONS`] fixed-seed
/// random directions. The sliced value is a different (smaller) metric and
/// is flagged as such.
pub fn empirical_w2(a: &SampleSet, b: &SampleSet) -> Result<W2Estimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.len() == b.len() && a.len() <= EXACT_ASSIGNMENT_CAP {
        let pa = a.empirical();
        let pb = b.empirical();
        let cost =
            transport::min_cost_transport(&pa.points, &pa.weights(), &pb.points, &pb.weights())?;
        Ok(W2Estimate {
            value: cost.sqrt(),
            sliced: false,
        })
    } else {
        let dim = a.dim();
        let mut rng = rng_from_seed(SLICED_SEED);
        let mut total = 0.0;
        for _ in 0..SLICED_PROJECTIONS {
            let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = crate::math::l2_norm(&dir);
            for v in &mut dir {
                *v /= norm;
            }
            let proj = |s: &SampleSet| -> Vec<f64> {
                let mut vals: Vec<f64> =
                    s.points.iter().map(|p| crate::math::dot(p, &dir)).collect();
                vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
                vals
            };
            total += w2_squared_1d_sorted(&proj(a), &proj(b));
        }
        Ok(W2Estimate {
            value: (total / SLICED_PROJECTIONS as f64).sqrt(),
            sliced: true,
        })
    }
}

/// Squared 1-D W2 between uniform empirical measures given sorted values;
/// handles unequal sizes by walking the merged quantile breakpoints.
fn w2_squared_1d_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut level = 0.0f64;
    let mut cost = 0.0;
    while i < xs.len() && j < ys.len() {
        let next_i = (i as f64 + 1.0) / n;
        let next_j = (j as f64 + 1.0) / m;
        let next = next_i.min(next_j);
        let d = xs[i] - ys[j];
        cost += (next - level) * d * d;
        level = next;
        if next_i <= next {
            i += 1;
        }
        if next_j <= next {
            j += 1;
        }
    }
    cost
}

/// Empirical W2 between two independent exact sample sets of the same law;
/// the irreducible part of any empirical-W2 tolerance at this sample size.
pub fn sampling_floor(base: &FiniteAtomBase, n: usize, seed: u64) -> Result<f64> {
    let a = exact_sample_set(base, n, derive_seed(seed, &[1]))?;
    let b = exact_sample_set(base, n, derive_seed(seed, &[2]))?;
    Ok(empirical_w2(&a, &b)?.value)
}

/// Floor calibrated by repeated draws: the max of [`sampling_floor`]
/// realizations over `pairs` independent pair seeds. A single realization
/// of the floor statistic scatters as much as the quantity it budgets for;
/// the recorded floor should dominate that scatter.
pub fn sampling_floor_calibrated(
    base: &FiniteAtomBase,
    n: usize,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut floor = 0.0f64;
    for k in 0..pairs.max(1) {
        floor = floor.max(sampling_floor(base, n, derive_seed(seed, &[k as u64]))?);
    }
    Ok(floor)
}

/// Coordinatewise sign pattern with the fixed convention `sign(0) = +1`;
/// bit `j` is set iff `x_j ≥ 0`.
pub fn sign_pattern(x: &[f64]) -> u64 {
    debug_assert!(x.len() <= 64);
    let mut mask = 0u64;
    for (j, &v) in x.iter().enumerate() {
        if v >= 0.0 {
            mask |= 1 << j;
        }
    }
    mask
}

/// A set of sign vectors in `{-1, +1}^dim`, stored as bit masks.
#[derive(Clone, Debug, Default)]
pub struct SignSet {
    dim: usize,
    patterns: std::collections::BTreeSet<u64>,
}

impl SignSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > 20 {
            return Err(Error::invalid("dim", "must be in 1..=20"));
        }
        Ok(Self {
            dim,
            patterns: Default::default(),
        })
    }

    pub fn insert_mask(&mut self, mask: u64) {
        debug_assert!(mask < (1u64 << self.dim));
        self.patterns.insert(mask);
    }

    pub fn insert_vector(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.patterns.insert(sign_pattern(x));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.patterns.contains(&sign_pattern(x))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RoundingCheck {
    /// `ν(R_S)`: fraction of the sample set whose sign pattern lies in `S`.
    pub lhs: f64,
    /// `μ(S) − W2(μ, ν)²`.
    pub rhs: f64,
    pub w2: f64,
    pub holds: bool,
}

/// Check `ν(R_S) ≥ μ(S) − W2(μ, ν̂)²` for a sign-supported `μ` and the
/// empirical measure `ν̂` of a sample set, with the W2 computed exactly on
/// the discrete supports.
pub fn rounding_mass_bound(
    mu: &FiniteAtomBase,
    nu: &SampleSet,
    s: &SignSet,
) -> Result<RoundingCheck> {
    if mu.dim() != nu.dim() || mu.dim() != s.dim() {
        return Err(Error::DimMismatch {
            expected: mu.dim(),
            got: if nu.dim() != mu.dim() { nu.dim() } else { s.dim() },
        });
    }
    for atom in mu.atoms() {
        if atom.location.iter().any(|&v| v.abs() != 1.0) {
            return Err(Error::invalid(
                "mu",
                "must be supported on sign vectors with entries ±1",
            ));
        }
    }
    let mu_mass: f64 = mu
        .atoms()
        .iter()
        .filter(|a| s.contains_point(&a.location))
        .map(|a| a.weight)
        .sum();
    let nu_mass = nu
        .points()
        .iter()
        .filter(|p| s.contains_point(p))
        .count() as f64
        / nu.len() as f64;
    let w2 = exact_w2(&mu.into(), &nu.empirical())?;
    let rhs = mu_mass - w2 * w2;
    Ok(RoundingCheck {
        lhs: nu_mass,
        rhs,
        w2,
        holds: nu_mass >= rhs - 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Atom;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(points: Vec<Vec<f64>>, weights: Vec<f64>) -> DiscreteDistribution {
        let lw = weights.iter().map(|w| w.ln()).collect();
        DiscreteDistribution::from_unnormalized(points, lw).unwrap()
    }

    #[test]
    fn normalized_log_weights_sum_to_zero() {
        let d = dist(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![10.0, 30.0, 60.0],
        );
        assert_abs_diff_eq!(log_sum_exp(d.log_weights()), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn tv_basic_cases() {
        let p = dist(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0 + 1e-300]);
        let q = dist(vec![vec![0.0], vec![1.0]], vec![1e-300, 1.0]);
        assert_abs_diff_eq!(exact_tv(&p, &p).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_tv(&p, &q).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn tv_over_disjoint_supports_is_one() {
        let p = dist(vec![vec![0.0]], vec![1.0]);
        let q = dist(vec![vec![5.0]], vec![1.0]);
        assert_abs_diff_eq!(exact_tv(&p, &q).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tv_rejects_rounding_collisions() {
        let p = DiscreteDistribution::from_unnormalized(
            vec![vec![0.0], vec![1e-14]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let q = dist(vec![vec![0.0]], vec![1.0]);
        assert!(matches!(
            exact_tv(&p, &q),
            Err(Error::AmbiguousSupport { .. })
        ));
    }

    #[test]
    fn w2_point_masses() {
        let p = dist(vec![vec![0.0, 0.0]], vec![1.0]);
        let q = dist(vec![vec![3.0, 4.0]], vec![1.0]);
        assert_abs_diff_eq!(exact_w2(&p, &q).unwrap(), 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(exact_w2(&p, &p).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn w2_matches_quantile_formula_in_one_dimension() {
        let p = dist(vec![vec![-1.0], vec![0.0], vec![2.0]], vec![0.25, 0.5, 0.25]);
        let q = dist(vec![vec![-0.5], vec![1.0]], vec![0.5, 0.5]);
        // Quantile coupling by hand: levels (0.25, 0.25, 0.25, 0.25) pair
        // (-1,-0.5), (0,-0.5), (0,1), (2,1).
        let expected = (0.25 * (0.5f64.powi(2) + 0.5f64.powi(2) + 1.0 + 1.0)).sqrt();
        assert_abs_diff_eq!(exact_w2(&p, &q).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn w2_metric_sanity_on_random_triples() {
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.random_range(2..6);
                let points: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect();
                let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
                dist(points, weights)
            };
            let (p, q, r) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let pq = exact_w2(&p, &q).unwrap();
            let qp = exact_w2(&q, &p).unwrap();
            let pr = exact_w2(&p, &r).unwrap();
            let qr = exact_w2(&q, &r).unwrap();
            assert_abs_diff_eq!(pq, qp, epsilon = 1e-9);
            assert!(pq <= pr + qr + 1e-9, "triangle inequality violated");
        }
    }

    #[test]
    fn tv_w2_ball_relation() {
        // For laws in the radius-C ball, W2 ≤ 2·C·√TV (mass TV moves at
        // most the diameter).
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let c = 1.5;
            let n = rng.random_range(2..6);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let mut p: Vec<f64> =
                        (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm = crate::math::l2_norm(&p);
                    if norm > c {
                        for v in &mut p {
                            *v *= c / norm;
                        }
                    }
                    p
                })
                .collect();
            let wa: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let wb: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let p = dist(points.clone(), wa);
            let q = dist(points, wb);
            let tv = exact_tv(&p, &q).unwrap();
            let w2 = exact_w2(&p, &q).unwrap();
            assert!(w2 <= 2.0 * c * tv.sqrt() + 1e-9);
        }
    }

    #[test]
    fn empirical_w2_trivial_cases() {
        let a = SampleSet::new(vec![vec![1.0, 2.0]], 0).unwrap();
        let b = SampleSet::new(vec![vec![4.0, 6.0]], 0).unwrap();
        let est = empirical_w2(&a, &b).unwrap();
        assert!(!est.sliced);
        assert_abs_diff_eq!(est.value, 5.0, epsilon = 1e-9);
        let same = empirical_w2(&a, &a).unwrap();
        assert_abs_diff_eq!(same.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn empirical_w2_switches_to_sliced_mode() {
        let a = SampleSet::new(vec![vec![0.0]; 600], 0).unwrap();
        let b = SampleSet::new(vec![vec![1.0]; 600], 0).unwrap();
        let est = empirical_w2(&a, &b).unwrap();
        assert!(est.sliced);
        // Point masses: every projection sees the full distance.
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-9);
        let unequal = empirical_w2(
            &SampleSet::new(vec![vec![0.0]; 3], 0).unwrap(),
            &SampleSet::new(vec![vec![0.0]; 4], 0).unwrap(),
        )
        .unwrap();
        assert!(unequal.sliced);
        assert_abs_diff_eq!(unequal.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn one_dimensional_quantile_walk_handles_unequal_sizes() {
        // {0, 1} vs {0.5}: every quantile level pays 0.25.
        let v = w2_squared_1d_sorted(&[0.0, 1.0], &[0.5]);
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn exact_draws_concentrate_on_atoms() {
        let base = FiniteAtomBase::hypercube(2).unwrap();
        let s = exact_sample_set(&base, 4000, 5).unwrap();
        let emp = s.empirical();
        assert_eq!(emp.len(), 4);
        for w in emp.weights() {
            assert!((w - 0.25).abs() < 0.05);
        }
    }

    #[test]
    fn sign_pattern_uses_plus_convention_at_zero() {
        assert_eq!(sign_pattern(&[0.0, -0.1, 0.1]), 0b101);
        assert_eq!(sign_pattern(&[-0.0, -1.0]), 0b01); // -0.0 ≥ 0.0 is true
    }

    #[test]
    fn rounding_bound_tight_when_samples_match_mu() {
        let base = FiniteAtomBase::hypercube(3).unwrap();
        let nu = exact_sample_set(&base, 256, 11).unwrap();
        let mut s = SignSet::new(3).unwrap();
        for atom in base.atoms().iter().take(4) {
            s.insert_vector(&atom.location).unwrap();
        }
        let check = rounding_mass_bound(&base, &nu, &s).unwrap();
        assert!(check.holds);
        assert!(check.lhs >= check.rhs);
        // With ν drawn from μ the two sides should be close.
        assert!((check.lhs - 0.5).abs() < 0.15);
    }

    #[test]
    fn rounding_bound_survives_adversarial_nu() {
        // All ν mass far outside every sign cell of S keeps the inequality
        // true because the W2 term blows up.
        let base = FiniteAtomBase::hypercube(2).unwrap();
        let nu = SampleSet::new(vec![vec![50.0, 50.0]; 8], 0).unwrap();
        let mut s = SignSet::new(2).unwrap();
        s.insert_mask(0b00);
        s.insert_mask(0b01);
        let check = rounding_mass_bound(&base, &nu, &s).unwrap();
        assert!(check.holds);
        assert!(check.rhs < 0.0);
    }

    #[test]
    fn rounding_bound_rejects_off_cube_mu() {
        let base = FiniteAtomBase::new(
            vec![Atom {
                location: vec![0.5, 0.5],
                weight: 1.0,
            }],
            1.0,
        )
        .unwrap();
        let nu = SampleSet::new(vec![vec![0.0, 0.0]], 0).unwrap();
        let s = SignSet::new(2).unwrap();
        assert!(rounding_mass_bound(&base, &nu, &s).is_err());
    }

    #[test]
    fn chi_squared_tail_bound_empirically() {
        // Pr[‖Z‖ > 2√d + 2√ln(1/ε)] ≤ ε, with three-sigma binomial slack.
        let draws = 100_000;
        for d in [1usize, 4, 16] {
            for eps in [0.1f64, 0.01] {
                let mut rng = rng_from_seed(derive_seed(1234, &[d as u64, eps.to_bits()]));
                let threshold = 2.0 * (d as f64).sqrt() + 2.0 * (1.0 / eps).ln().sqrt();
                let mut exceed = 0usize;
                for _ in 0..draws {
                    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    if crate::math::l2_norm(&z) > threshold {
                        exceed += 1;
                    }
                }
                let rate = exceed as f64 / draws as f64;
                let slack = 3.0 * (eps * (1.0 - eps) / draws as f64).sqrt();
                assert!(
                    rate <= eps + slack,
                    "tail rate {rate} exceeds {eps} + {slack} at d={d}"
                );
            }
        }
    }

    proptest! {
        // TV of normalized densities against the unnormalized L1 bound:
        // TV(p, q) ≤ 2·Σ|f−g| / Σf for arbitrary nonnegative f, g.
        #[test]
        fn tv_unnormalized_bound(
            raw in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 2..24)
        ) {
            let f: Vec<f64> = raw.iter().map(|(a, _)| a + 1e-9).collect();
            let g: Vec<f64> = raw.iter().map(|(_, b)| b + 1e-9).collect();
            let points: Vec<Vec<f64>> = (0..raw.len()).map(|i| vec![i as f64]).collect();
            let p = dist(points.clone(), f.clone());
            let q = dist(points, g.clone());
            let tv = exact_tv(&p, &q).unwrap();
            let l1: f64 = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum();
            let zf: f64 = f.iter().sum();
            prop_assert!(tv <= 2.0 * l1 / zf + 1e-12);
        }

        #[test]
        fn empirical_w2_is_symmetric(
            pa in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
            pb in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
        ) {
            let a = SampleSet::new(pa.iter().map(|&(x, y)| vec![x, y]).collect(), 0).unwrap();
            let b = SampleSet::new(pb.iter().map(|&(x, y)| vec![x, y]).collect(), 0).unwrap();
            let ab = empirical_w2(&a, &b).unwrap().value;
            let ba = empirical_w2(&b, &a).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-9);
        }
    }
}
