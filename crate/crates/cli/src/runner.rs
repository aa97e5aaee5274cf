//! Command execution: resolve the manifest, run, write artifacts.
//!
//! Every run writes into its output directory and nowhere else:
//! `samples.csv` (sampling commands), `metrics.json` (the command's result
//! record), `manifest.json` (the fully resolved configuration, base and
//! factor inlined so the run is self-contained), and optional trace files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use quadtilt::hardness::{
    gibbs_chain_trace, maxcut_value, partition_decode, partition_mass, MaxCutInstance,
    PartitionInstance,
};
use quadtilt::linalg::sym_eigenvalues;
use quadtilt::math::{dot, l2_norm};
use quadtilt::metrics::{empirical_w2, exact_sample_set, exact_tv, exact_w2, SampleSet};
use quadtilt::normalization::{estimate_normalization_with, NormalizationParams};
use quadtilt::psd_tilt::{build_grid_with, grid_log_weights, grid_log_weights_exact, PsdTiltSampler};
use quadtilt::rng::derive_seed;
use quadtilt::sampler::{default_schedule_with, unadjusted_sample, DiffusionSchedule, ScheduleParams};
use quadtilt::{Atom, FiniteAtomBase, PsdTiltSpec, ScoreOracle, TiltedScore};

use crate::config::*;
use crate::io;

/// Warn (stderr) when the auxiliary grid grows past this many points.
pub const GRID_WARN_THRESHOLD: usize = 100_000;

pub struct RunReport {
    pub metrics: serde_json::Value,
    pub samples_path: Option<PathBuf>,
}

/// Execute a resolved manifest. Writes artifacts under `manifest.out_dir`.
pub fn execute(manifest: &Manifest) -> Result<RunReport> {
    manifest.validate_references()?;
    std::fs::create_dir_all(&manifest.out_dir)
        .with_context(|| format!("creating out dir {}", manifest.out_dir.display()))?;

    let mut resolved = manifest.clone();
    let report = match &manifest.command {
        CommandConfig::SampleBase(p) => {
            let (params, report) = run_sample_base(manifest, p)?;
            resolved.command = CommandConfig::SampleBase(params);
            report
        }
        CommandConfig::SampleLinearTilt(p) => {
            let (params, report) = run_sample_linear_tilt(manifest, p)?;
            resolved.command = CommandConfig::SampleLinearTilt(params);
            report
        }
        CommandConfig::EstimateZ(p) => {
            let (params, report) = run_estimate_z(manifest, p)?;
            resolved.command = CommandConfig::EstimateZ(params);
            report
        }
        CommandConfig::SamplePsdTilt(p) => {
            let (params, report) = run_sample_psd_tilt(manifest, p)?;
            resolved.command = CommandConfig::SamplePsdTilt(params);
            report
        }
        CommandConfig::Verify(p) => run_verify(manifest, p)?,
        CommandConfig::PartitionDemo(p) => run_partition_demo(manifest, p)?,
        CommandConfig::MaxcutCheck(p) => run_maxcut_check(manifest, p)?,
        CommandConfig::GibbsDemo(p) => run_gibbs_demo(manifest, p)?,
        CommandConfig::Accept(p) => run_accept(manifest, p)?,
    };

    resolved.config_dir = None;
    io::write_json(&manifest.out_dir.join("manifest.json"), &resolved)?;
    io::write_json(&manifest.out_dir.join("metrics.json"), &report.metrics)?;
    Ok(report)
}

fn inline_base(base: &FiniteAtomBase) -> BaseSource {
    BaseSource::Inline { base: base.clone() }
}

fn schedule_params(overrides: &ScheduleOverrides) -> ScheduleParams {
    ScheduleParams {
        c0: 8.0,
        max_steps: overrides.max_steps.unwrap_or(ScheduleParams::default().max_steps),
    }
}

/// Derive the per-draw schedule from the tolerance, then apply explicit
/// step-count and noise-range overrides.
fn build_schedule(
    epsilon: f64,
    dim: usize,
    norm_bound: f64,
    overrides: &ScheduleOverrides,
) -> Result<DiffusionSchedule> {
    let derived = default_schedule_with(epsilon, dim, norm_bound, &schedule_params(overrides))?;
    if overrides.num_steps.is_none()
        && overrides.sigma_min.is_none()
        && overrides.sigma_max.is_none()
    {
        return Ok(derived);
    }
    Ok(DiffusionSchedule::new(
        overrides.num_steps.unwrap_or(derived.num_steps),
        overrides.sigma_max.unwrap_or(derived.sigma_max),
        overrides.sigma_min.unwrap_or(derived.sigma_min),
        derived.projection_radius,
    )?)
}

fn schedule_json(s: &DiffusionSchedule) -> serde_json::Value {
    json!({
        "num_steps": s.num_steps,
        "sigma_min": s.sigma_min,
        "sigma_max": s.sigma_max,
        "projection_radius": s.projection_radius,
    })
}

fn draw_many<S: ScoreOracle + ?Sized>(
    score: &S,
    schedule: &DiffusionSchedule,
    seed: u64,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .map(|i| Ok(unadjusted_sample(score, schedule, derive_seed(seed, &[i as u64]))?))
        .collect()
}

fn run_sample_base(
    manifest: &Manifest,
    p: &SampleBaseParams,
) -> Result<(SampleBaseParams, RunReport)> {
    let base = p.base.load(&manifest.config_dir())?;
    let schedule = build_schedule(p.epsilon, base.dim(), base.norm_bound(), &p.schedule)?;
    let points = draw_many(&base, &schedule, manifest.seed, p.num_samples)?;
    let path = manifest.out_dir.join("samples.csv");
    io::write_samples_csv(&path, &points)?;
    let metrics = json!({
        "command": "sample-base",
        "num_samples": p.num_samples,
        "dim": base.dim(),
        "epsilon": p.epsilon,
        "schedule": schedule_json(&schedule),
    });
    let mut resolved = p.clone();
    resolved.base = inline_base(&base);
    Ok((
        resolved,
        RunReport {
            metrics,
            samples_path: Some(path),
        },
    ))
}

fn run_sample_linear_tilt(
    manifest: &Manifest,
    p: &SampleLinearTiltParams,
) -> Result<(SampleLinearTiltParams, RunReport)> {
    let base = p.base.load(&manifest.config_dir())?;
    let schedule = build_schedule(p.epsilon, base.dim(), base.norm_bound(), &p.schedule)?;
    let tilted = TiltedScore::new(&base, p.v.clone())?;
    let points = draw_many(&tilted, &schedule, manifest.seed, p.num_samples)?;
    let path = manifest.out_dir.join("samples.csv");
    io::write_samples_csv(&path, &points)?;
    let metrics = json!({
        "command": "sample-linear-tilt",
        "num_samples": p.num_samples,
        "dim": base.dim(),
        "epsilon": p.epsilon,
        "v_norm": l2_norm(&p.v),
        "schedule": schedule_json(&schedule),
    });
    let mut resolved = p.clone();
    resolved.base = inline_base(&base);
    Ok((
        resolved,
        RunReport {
            metrics,
            samples_path: Some(path),
        },
    ))
}

fn run_estimate_z(
    manifest: &Manifest,
    p: &EstimateZParams,
) -> Result<(EstimateZParams, RunReport)> {
    let base = p.base.load(&manifest.config_dir())?;
    let params = NormalizationParams {
        budget_cap: manifest.caps.samples,
        schedule: schedule_params(&p.schedule),
    };
    let est = estimate_normalization_with(
        &base,
        &p.v,
        p.epsilon,
        p.delta,
        base.norm_bound(),
        manifest.seed,
        &params,
    )?;
    let metrics = json!({
        "command": "estimate-z",
        "log_value": est.log_value,
        "N": est.num_stages,
        "M": est.samples_per_stage,
        "epsilon": est.epsilon,
        "delta": est.delta,
        "budget_limited": est.budget_limited,
    });
    let mut resolved = p.clone();
    resolved.base = inline_base(&base);
    Ok((
        resolved,
        RunReport {
            metrics,
            samples_path: None,
        },
    ))
}

fn run_sample_psd_tilt(
    manifest: &Manifest,
    p: &SamplePsdTiltParams,
) -> Result<(SamplePsdTiltParams, RunReport)> {
    let base = p.base.load(&manifest.config_dir())?;
    let factor = p.factor.load(&manifest.config_dir())?;
    let spec = match p.d_bound {
        Some(d) => PsdTiltSpec::new(factor.clone(), d, base.norm_bound(), p.eps_final)?,
        None => PsdTiltSpec::with_tight_bound(factor.clone(), &base, p.eps_final)?,
    };
    let grid = build_grid_with(&spec, manifest.caps.grid)?;
    if grid.len() > GRID_WARN_THRESHOLD {
        eprintln!(
            "warning: auxiliary grid has {} points (rank {}, R {:.3}, gamma {:.3e}); \
             the run cost scales with it",
            grid.len(),
            spec.rank(),
            grid.radius(),
            grid.spacing()
        );
    }
    let (weights, budget_limited) = if p.oracle_mode {
        (grid_log_weights_exact(&base, &spec, &grid)?, false)
    } else {
        let norm_params = NormalizationParams {
            budget_cap: manifest.caps.samples,
            schedule: schedule_params(&p.inner_schedule),
        };
        let gw = grid_log_weights(&base, &spec, &grid, derive_seed(manifest.seed, &[11]), &norm_params)?;
        (gw.weights, gw.budget_limited)
    };
    let sampler = PsdTiltSampler::with_weights(
        &base,
        &spec,
        &grid,
        weights,
        budget_limited,
        schedule_params(&p.schedule),
    )?;
    let points: Vec<Vec<f64>> = (0..p.num_samples)
        .map(|i| sampler.sample(derive_seed(manifest.seed, &[b's' as u64, i as u64])))
        .collect::<quadtilt::Result<_>>()?;
    let path = manifest.out_dir.join("samples.csv");
    io::write_samples_csv(&path, &points)?;
    let diag = sampler.diagnostics();
    let metrics = json!({
        "command": "sample-psd-tilt",
        "num_samples": p.num_samples,
        "dim": base.dim(),
        "rank": spec.rank(),
        "eps_final": spec.eps_final(),
        "d_bound": spec.d_bound(),
        "spectral_norm": spec.spectral_norm(),
        "oracle_mode": p.oracle_mode,
        "grid": diag,
    });
    let mut resolved = p.clone();
    resolved.base = inline_base(&base);
    resolved.factor = MatrixSource::Inline {
        rows: (0..factor.rows()).map(|i| factor.row(i).to_vec()).collect(),
    };
    resolved.d_bound = Some(spec.d_bound());
    Ok((
        resolved,
        RunReport {
            metrics,
            samples_path: Some(path),
        },
    ))
}

enum VerifyInput {
    Base(FiniteAtomBase),
    Samples(SampleSet),
}

fn load_verify_input(dir: &Path, path: &Path) -> Result<VerifyInput> {
    let resolved = resolve_input(dir, path);
    match resolved.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(VerifyInput::Samples(io::read_samples_csv(&resolved)?)),
        Some("json") => {
            let text = std::fs::read_to_string(&resolved)
                .with_context(|| format!("reading {}", resolved.display()))?;
            Ok(VerifyInput::Base(serde_json::from_str(&text)?))
        }
        _ => bail!(
            "verify input {} must be a .csv sample file or .json base",
            resolved.display()
        ),
    }
}

fn run_verify(manifest: &Manifest, p: &VerifyParams) -> Result<RunReport> {
    let dir = manifest.config_dir();
    let left = load_verify_input(&dir, &p.left)?;
    let right = load_verify_input(&dir, &p.right)?;
    let mut sliced = false;
    let value = match (&left, &right, p.metric) {
        (VerifyInput::Base(a), VerifyInput::Base(b), VerifyMetric::W2) => exact_w2(&a.into(), &b.into())?,
        (VerifyInput::Base(a), VerifyInput::Base(b), VerifyMetric::Tv) => exact_tv(&a.into(), &b.into())?,
        (VerifyInput::Samples(a), VerifyInput::Samples(b), VerifyMetric::W2) => {
            let est = empirical_w2(a, b)?;
            sliced = est.sliced;
            est.value
        }
        (VerifyInput::Samples(a), VerifyInput::Samples(b), VerifyMetric::Tv) => {
            exact_tv(&a.empirical(), &b.empirical())?
        }
        (VerifyInput::Base(a), VerifyInput::Samples(b), VerifyMetric::W2) => {
            exact_w2(&a.into(), &b.empirical())?
        }
        (VerifyInput::Samples(a), VerifyInput::Base(b), VerifyMetric::W2) => {
            exact_w2(&a.empirical(), &b.into())?
        }
        (VerifyInput::Base(a), VerifyInput::Samples(b), VerifyMetric::Tv) => {
            exact_tv(&a.into(), &b.empirical())?
        }
        (VerifyInput::Samples(a), VerifyInput::Base(b), VerifyMetric::Tv) => {
            exact_tv(&a.empirical(), &b.into())?
        }
    };
    let floor = p.floor.unwrap_or(0.0);
    let pass = match p.tolerance {
        Some(tol) => value <= tol + floor,
        None => true,
    };
    let metrics = json!({
        "command": "verify",
        "metric": match p.metric { VerifyMetric::W2 => "w2", VerifyMetric::Tv => "tv" },
        "value": value,
        "floor": floor,
        "pass": pass,
        "sliced": sliced,
        "tolerance": p.tolerance,
    });
    Ok(RunReport {
        metrics,
        samples_path: None,
    })
}

fn run_partition_demo(manifest: &Manifest, p: &PartitionDemoParams) -> Result<RunReport> {
    if p.trials == 0 || p.samples_per_trial == 0 {
        bail!("trials and samples_per_trial must be positive");
    }
    let inst = PartitionInstance::new(p.w.clone())?;
    let mass = partition_mass(&inst);
    let tilted = inst.tilted();
    let mut yes = 0usize;
    for t in 0..p.trials {
        let samples = exact_sample_set(
            &tilted,
            p.samples_per_trial,
            derive_seed(manifest.seed, &[t as u64]),
        )?;
        if partition_decode(&samples, inst.w(), p.decode_rule)? {
            yes += 1;
        }
    }
    let metrics = json!({
        "command": "partition-demo",
        "w": inst.w(),
        "dim": inst.dim(),
        "beta": inst.beta(),
        "yes_instance": !mass.no_solution,
        "no_solution": mass.no_solution,
        "mass_on_solutions": mass.mass,
        "trials": p.trials,
        "samples_per_trial": p.samples_per_trial,
        "decode_rule": p.decode_rule,
        "decoded_yes_fraction": yes as f64 / p.trials as f64,
    });
    Ok(RunReport {
        metrics,
        samples_path: None,
    })
}

fn run_maxcut_check(_manifest: &Manifest, p: &MaxCutCheckParams) -> Result<RunReport> {
    let inst = MaxCutInstance::new(p.dim, p.edges.clone())?;
    let eigs = sym_eigenvalues(&inst.reward_matrix())?;
    let min_eig = eigs[0];
    let mut subsets_checked = 0usize;
    let mut mismatches = 0usize;
    if p.exhaustive {
        if p.dim > 12 {
            bail!("exhaustive subset check needs dim <= 12, got {}", p.dim);
        }
        for mask in 0u32..(1 << p.dim) {
            let subset: Vec<usize> = (0..p.dim).filter(|j| mask >> j & 1 == 1).collect();
            let via_form = maxcut_value(&inst, &subset)?;
            if via_form != inst.cut_size(&subset) as u64 {
                mismatches += 1;
            }
            subsets_checked += 1;
        }
    }
    let metrics = json!({
        "command": "maxcut-check",
        "dim": p.dim,
        "num_edges": inst.edges().len(),
        "beta": inst.beta(),
        "min_eigenvalue": min_eig,
        "psd": min_eig >= -1e-9,
        "exhaustive": p.exhaustive,
        "subsets_checked": subsets_checked,
        "mismatches": mismatches,
    });
    Ok(RunReport {
        metrics,
        samples_path: None,
    })
}

fn run_gibbs_demo(manifest: &Manifest, p: &GibbsDemoParams) -> Result<RunReport> {
    let (summary, trace) = gibbs_chain_trace(
        p.lambda,
        &p.u,
        p.steps,
        manifest.seed,
        p.mode,
        p.trace,
    )?;
    let mut trace_path = None;
    if p.trace {
        let path = manifest.out_dir.join("gibbs_trace.csv");
        let mut out = String::from("step,z,u_dot_x\n");
        for (i, (z, ux)) in trace.iter().enumerate() {
            out.push_str(&format!("{i},{z},{ux}\n"));
        }
        std::fs::write(&path, out)?;
        trace_path = Some(path);
    }
    let mut metrics = json!({
        "command": "gibbs-demo",
        "lambda": p.lambda,
        "steps": p.steps,
        "mode": p.mode,
        "fraction_positive": summary.fraction_positive,
        "sign_flips": summary.sign_flips,
        "final_z": summary.final_z,
        "trace": trace_path.as_ref().map(|p| p.display().to_string()),
    });
    if let Some(cmp) = &p.psd_compare {
        let norm_u = l2_norm(&p.u);
        let atoms = vec![
            Atom {
                location: p.u.iter().map(|v| -v).collect(),
                weight: 0.5,
            },
            Atom {
                location: p.u.clone(),
                weight: 0.5,
            },
        ];
        let base = FiniteAtomBase::new(atoms, norm_u.max(1.0))?;
        let coupling = (2.0 * p.lambda).sqrt();
        let factor = quadtilt::Matrix::from_rows(vec![p
            .u
            .iter()
            .map(|v| coupling * v)
            .collect()])?;
        let spec = PsdTiltSpec::with_tight_bound(factor, &base, cmp.eps_final)?;
        let grid = build_grid_with(&spec, manifest.caps.grid)?;
        let norm_params = NormalizationParams {
            budget_cap: manifest.caps.samples,
            schedule: schedule_params(&ScheduleOverrides::default()),
        };
        let gw = grid_log_weights(&base, &spec, &grid, derive_seed(manifest.seed, &[99]), &norm_params)?;
        let sampler = PsdTiltSampler::with_weights(
            &base,
            &spec,
            &grid,
            gw.weights,
            gw.budget_limited,
            ScheduleParams::default(),
        )?;
        let mut plus = 0usize;
        for i in 0..cmp.num_draws {
            let x = sampler.sample(derive_seed(manifest.seed, &[7, i as u64]))?;
            if dot(&p.u, &x) > 0.0 {
                plus += 1;
            }
        }
        metrics["psd_mode_fraction"] = json!(plus as f64 / cmp.num_draws as f64);
        metrics["psd_grid"] = serde_json::to_value(sampler.diagnostics())?;
    }
    Ok(RunReport {
        metrics,
        samples_path: None,
    })
}

fn run_accept(manifest: &Manifest, p: &AcceptParams) -> Result<RunReport> {
    let reports = crate::acceptance::run(&p.only);
    for r in &reports {
        println!("{}", r.line());
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let metrics = json!({
        "command": "accept",
        "criteria": reports,
        "all_pass": all_pass,
    });
    io::write_json(&manifest.out_dir.join("acceptance.json"), &metrics)?;
    if !all_pass {
        bail!("acceptance suite failed");
    }
    Ok(RunReport {
        metrics,
        samples_path: None,
    })
}
