//! The auxiliary-variable lifting, checked against quadrature and exact
//! enumeration.

use quadtilt::psd_tilt::{
    build_grid, discretized_mixture_exact, grid_log_weights_exact, GridSpec,
};
use quadtilt::metrics::exact_tv_bases;
use quadtilt::{Atom, FiniteAtomBase, Matrix, PsdTiltSpec};

fn four_atom_base() -> FiniteAtomBase {
    FiniteAtomBase::new(
        vec![
            Atom {
                location: vec![1.0, 0.4],
                weight: 0.35,
            },
            Atom {
                location: vec![-0.8, 0.7],
                weight: 0.25,
            },
            Atom {
                location: vec![-0.5, -1.0],
                weight: 0.25,
            },
            Atom {
                location: vec![0.9, -0.6],
                weight: 0.15,
            },
        ],
        1.25,
    )
    .unwrap()
}

/// Rank-1 lifting identity via quadrature: integrating
/// `Z(z)·e^{-½z²}·p(x_i; L·z)` over z reproduces `p(x_i)·e^{½(Lx_i)²}` up
/// to a normalization shared across atoms.
#[test]
fn quadrature_reproduces_quadratic_tilt() {
    let base = four_atom_base();
    let l_row = vec![0.9, -0.55];
    let spec = PsdTiltSpec::with_tight_bound(
        Matrix::from_rows(vec![l_row.clone()]).unwrap(),
        &base,
        0.3,
    )
    .unwrap();
    let r_max = spec.d_bound() + 10.0;
    let step = 5e-4;
    let n_steps = (2.0 * r_max / step) as usize;

    // Trapezoid over z of the unnormalized lifted mass per atom.
    let lx: Vec<f64> = base
        .atoms()
        .iter()
        .map(|a| l_row[0] * a.location[0] + l_row[1] * a.location[1])
        .collect();
    let mut lifted = vec![0.0f64; base.atoms().len()];
    for k in 0..=n_steps {
        let z = -r_max + k as f64 * step;
        let trapezoid = if k == 0 || k == n_steps { 0.5 } else { 1.0 };
        // Z(z)·e^{-½z²}·p(x_i;Lᵀz) = e^{-½z²}·w_i·e^{z·(Lx_i)} after the
        // tilt's own normalization cancels against Z(z).
        for (i, atom) in base.atoms().iter().enumerate() {
            lifted[i] += trapezoid * step * atom.weight * (-0.5 * z * z + z * lx[i]).exp();
        }
    }
    let total: f64 = lifted.iter().sum();
    let target: Vec<f64> = base
        .atoms()
        .iter()
        .zip(&lx)
        .map(|(a, &t)| a.weight * (0.5 * t * t).exp())
        .collect();
    let target_total: f64 = target.iter().sum();
    for i in 0..lifted.len() {
        let got = lifted[i] / total;
        let want = target[i] / target_total;
        assert!(
            ((got - want) / want).abs() <= 1e-6,
            "atom {i}: lifted {got} vs tilted {want}"
        );
    }
}

#[test]
fn discretized_mixture_tv_within_budget() {
    // Grid radius/spacing chosen for tolerance ε: R ≥ D + 2√r + 2√ln(1/ε),
    // γ ≤ ε/D. The resulting mixture must be within 18ε of the tilted
    // target in total variation — here checked exactly.
    let base = four_atom_base();
    let factor = Matrix::from_rows(vec![vec![1.1, -0.7]]).unwrap();
    let spec = PsdTiltSpec::with_tight_bound(factor, &base, 0.3).unwrap();
    let eps = spec.eps_final() * spec.eps_final() / (162.0 * base.norm_bound());
    let radius = spec.d_bound() + 2.0 + 2.0 * (1.0 / eps).ln().sqrt();
    let spacing = eps / spec.d_bound();
    let grid = GridSpec::build(radius, spacing, 1, 5_000_000).unwrap();
    let q = discretized_mixture_exact(&base, &spec, &grid).unwrap();
    let target = base.quadratic_tilt(&spec.reward_matrix()).unwrap();
    let tv = exact_tv_bases(&q, &target).unwrap();
    assert!(
        tv <= 18.0 * eps,
        "TV {tv} above discretization budget {}",
        18.0 * eps
    );
}

#[test]
fn refining_spacing_does_not_worsen_tv() {
    let base = four_atom_base();
    let factor = Matrix::from_rows(vec![vec![0.8, 0.5]]).unwrap();
    let spec = PsdTiltSpec::with_tight_bound(factor, &base, 0.3).unwrap();
    let target = base.quadratic_tilt(&spec.reward_matrix()).unwrap();
    // Start where the lattice-sum error is alive (γ ≳ 1); below that the
    // mixture converges super-exponentially and TV sits at the truncation
    // floor, where refinement only produces float-level jitter.
    let radius = spec.d_bound() + 9.0;
    let mut prev = f64::INFINITY;
    let mut spacing = 3.2;
    for _ in 0..5 {
        let grid = GridSpec::build(radius, spacing, 1, 5_000_000).unwrap();
        let q = discretized_mixture_exact(&base, &spec, &grid).unwrap();
        let tv = exact_tv_bases(&q, &target).unwrap();
        assert!(
            tv <= prev + 1e-12,
            "TV {tv} worse than previous {prev} at spacing {spacing}"
        );
        prev = tv;
        spacing /= 2.0;
    }
}

#[test]
fn fine_grid_marginal_matches_quadratic_tilt() {
    // In the fine-grid limit the x-marginal of the lifted weights is the
    // quadratic tilt, atom by atom.
    let base = four_atom_base();
    let factor = Matrix::from_rows(vec![vec![1.0, -0.6]]).unwrap();
    let spec = PsdTiltSpec::with_tight_bound(factor, &base, 0.3).unwrap();
    let grid = GridSpec::build(spec.d_bound() + 9.0, 2e-3, 1, 5_000_000).unwrap();
    let q = discretized_mixture_exact(&base, &spec, &grid).unwrap();
    let target = base.quadratic_tilt(&spec.reward_matrix()).unwrap();
    for (a, b) in q.atoms().iter().zip(target.atoms()) {
        assert!(
            (a.weight - b.weight).abs() <= 1e-6,
            "marginal weight {} vs tilt {}",
            a.weight,
            b.weight
        );
    }
}

#[test]
fn alg_grid_matches_formula_diagnostics() {
    let base = four_atom_base();
    let factor = Matrix::from_rows(vec![vec![1.2, 0.3]]).unwrap();
    let spec = PsdTiltSpec::with_tight_bound(factor, &base, 0.25).unwrap();
    let grid = build_grid(&spec).unwrap();
    assert_eq!(grid.radius(), spec.grid_radius());
    assert_eq!(grid.spacing(), spec.grid_spacing());
    assert_eq!(grid.len(), 2 * (grid.radius() / grid.spacing()).floor() as usize + 1);
}

#[test]
fn exact_weights_normalize() {
    let base = four_atom_base();
    let factor = Matrix::from_rows(vec![vec![0.9, 0.2]]).unwrap();
    let spec = PsdTiltSpec::with_tight_bound(factor, &base, 0.4).unwrap();
    let grid = GridSpec::build(4.0, 0.05, 1, 100_000).unwrap();
    let weights = grid_log_weights_exact(&base, &spec, &grid).unwrap();
    let lse = quadtilt::math::log_sum_exp(weights.log_weights());
    assert!(lse.abs() <= 1e-10);
}
