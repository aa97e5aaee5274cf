//! Run configuration: the manifest document, per-command parameter blocks,
//! and the sources they draw bases and matrices from.
//!
//! Resolution order is defaults < `--config` document < command-line flags.
//! Every run writes the fully resolved manifest next to its outputs;
//! feeding that manifest back through `--config` reproduces the run bit for
//! bit (the `out_dir` field is informational and freely overridden).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use quadtilt::hardness::{DecodeRule, GibbsMode};
use quadtilt::{FiniteAtomBase, Matrix};

use crate::io;

/// Global caps threaded into the samplers. `samples` bounds total draws per
/// normalization estimate; `grid` bounds lattice size.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Caps {
    pub samples: u64,
    pub grid: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            samples: 10_000_000,
            grid: 5_000_000,
        }
    }
}

/// Overrides applied on top of the derived schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl ScheduleOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Where a base distribution comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseSource {
    Hypercube { dim: usize },
    BinaryHypercube { dim: usize },
    TwoPoint { u: Vec<f64> },
    Inline { base: FiniteAtomBase },
    File { path: PathBuf },
}

impl BaseSource {
    pub fn load(&self, config_dir: &Path) -> Result<FiniteAtomBase> {
        Ok(match self {
            BaseSource::Hypercube { dim } => FiniteAtomBase::hypercube(*dim)?,
            BaseSource::BinaryHypercube { dim } => FiniteAtomBase::binary_hypercube(*dim)?,
            BaseSource::TwoPoint { u } => FiniteAtomBase::two_point(u)?,
            BaseSource::Inline { base } => base.clone(),
            BaseSource::File { path } => {
                let resolved = resolve_path(config_dir, path);
                let text = std::fs::read_to_string(&resolved)
                    .with_context(|| format!("reading base file {}", resolved.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing base file {}", resolved.display()))?
            }
        })
    }

    pub fn exists(&self, config_dir: &Path) -> bool {
        match self {
            BaseSource::File { path } => resolve_path(config_dir, path).exists(),
            _ => true,
        }
    }
}

/// Where the reward factor matrix comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatrixSource {
    Inline { rows: Vec<Vec<f64>> },
    /// Whitespace-separated rows, one matrix row per line.
    File { path: PathBuf },
}

impl MatrixSource {
    pub fn load(&self, config_dir: &Path) -> Result<Matrix> {
        match self {
            MatrixSource::Inline { rows } => Ok(Matrix::from_rows(rows.clone())?),
            MatrixSource::File { path } => {
                let resolved = resolve_path(config_dir, path);
                io::read_matrix_file(&resolved)
            }
        }
    }
}

fn resolve_path(config_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config_dir.join(path)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBaseParams {
    pub base: BaseSource,
    pub epsilon: f64,
    pub num_samples: usize,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleLinearTiltParams {
    pub base: BaseSource,
    pub v: Vec<f64>,
    pub epsilon: f64,
    pub num_samples: usize,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateZParams {
    pub base: BaseSource,
    pub v: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplePsdTiltParams {
    pub base: BaseSource,
    pub factor: MatrixSource,
    /// Bound on `sup ‖Lx‖`; derived from the base atoms when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_bound: Option<f64>,
    pub eps_final: f64,
    pub num_samples: usize,
    /// Use exact log-partition values instead of Monte Carlo estimates for
    /// the grid weights (exact for finite-atom bases only).
    #[serde(default)]
    pub oracle_mode: bool,
    #[serde(default)]
    pub inner_schedule: ScheduleOverrides,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMetric {
    W2,
    Tv,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyParams {
    /// `.csv` sample files or `.json` serialized bases.
    pub left: PathBuf,
    pub right: PathBuf,
    pub metric: VerifyMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionDemoParams {
    pub w: Vec<i64>,
    pub trials: usize,
    #[serde(default = "default_one")]
    pub samples_per_trial: usize,
    #[serde(default)]
    pub decode_rule: DecodeRule,
}

fn default_one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxCutCheckParams {
    pub dim: usize,
    pub edges: Vec<(usize, usize)>,
    /// Check the quadratic form against brute-force cut counts on every
    /// subset (needs `dim ≤ 12`).
    #[serde(default)]
    pub exhaustive: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsPsdCompare {
    pub eps_final: f64,
    pub num_draws: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsDemoParams {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub steps: usize,
    #[serde(default = "default_gibbs_mode")]
    pub mode: GibbsMode,
    /// Write a per-step `(step, z, u_dot_x)` trace CSV.
    #[serde(default)]
    pub trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_compare: Option<GibbsPsdCompare>,
}

fn default_gibbs_mode() -> GibbsMode {
    GibbsMode::TwoAtom
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AcceptParams {
    /// Run only these criterion ids (1-based); empty means all.
    #[serde(default)]
    pub only: Vec<u32>,
}

/// Parameter block of one command.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum CommandConfig {
    SampleBase(SampleBaseParams),
    SampleLinearTilt(SampleLinearTiltParams),
    EstimateZ(EstimateZParams),
    SamplePsdTilt(SamplePsdTiltParams),
    Verify(VerifyParams),
    PartitionDemo(PartitionDemoParams),
    MaxcutCheck(MaxCutCheckParams),
    GibbsDemo(GibbsDemoParams),
    Accept(AcceptParams),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::SampleBase(_) => "sample-base",
            CommandConfig::SampleLinearTilt(_) => "sample-linear-tilt",
            CommandConfig::EstimateZ(_) => "estimate-z",
            CommandConfig::SamplePsdTilt(_) => "sample-psd-tilt",
            CommandConfig::Verify(_) => "verify",
            CommandConfig::PartitionDemo(_) => "partition-demo",
            CommandConfig::MaxcutCheck(_) => "maxcut-check",
            CommandConfig::GibbsDemo(_) => "gibbs-demo",
            CommandConfig::Accept(_) => "accept",
        }
    }
}

/// The resolved-run document: what was executed, with what seed and caps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub command: CommandConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub caps: Caps,
    /// Directory the config file lived in; relative file references inside
    /// `params` resolve against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_dir: Option<PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut manifest: Manifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if manifest.config_dir.is_none() {
            manifest.config_dir = path.parent().map(Path::to_path_buf);
        }
        Ok(manifest)
    }

    pub fn config_dir(&self) -> PathBuf {
        self.config_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Fail fast when referenced files are missing.
    pub fn validate_references(&self) -> Result<()> {
        let dir = self.config_dir();
        let check_base = |b: &BaseSource| -> Result<()> {
            if !b.exists(&dir) {
                bail!("base file referenced by config does not exist");
            }
            Ok(())
        };
        match &self.command {
            CommandConfig::SampleBase(p) => check_base(&p.base)?,
            CommandConfig::SampleLinearTilt(p) => check_base(&p.base)?,
            CommandConfig::EstimateZ(p) => check_base(&p.base)?,
            CommandConfig::SamplePsdTilt(p) => {
                check_base(&p.base)?;
                if let MatrixSource::File { path } = &p.factor {
                    if !resolve_path(&dir, path).exists() {
                        bail!("factor file {} does not exist", path.display());
                    }
                }
            }
            CommandConfig::Verify(p) => {
                for path in [&p.left, &p.right] {
                    if !resolve_path(&dir, path).exists() {
                        bail!("verify input {} does not exist", path.display());
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn resolve_input(config_dir: &Path, path: &Path) -> PathBuf {
    resolve_path(config_dir, path)
}
