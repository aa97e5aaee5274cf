use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use quadtilt_cli::config::*;
use quadtilt_cli::runner;

#[derive(Parser)]
#[command(
    name = "quadtilt",
    version,
    about = "Seeded sampling from reward-tilted score-oracle distributions, \
             with exact verification metrics and hardness demos"
)]
struct Cli {
    /// Root seed; every independent draw derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for samples, metrics, and the resolved manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON config or a previously emitted manifest; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on total draws per normalization estimate.
    #[arg(long, global = true)]
    cap_samples: Option<u64>,
    /// Cap on auxiliary-grid lattice points.
    #[arg(long, global = true)]
    cap_grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct BaseArgs {
    /// Uniform base on {-1,1}^D.
    #[arg(long, value_name = "D")]
    hypercube: Option<usize>,
    /// Uniform base on {0,1}^D.
    #[arg(long, value_name = "D")]
    binary_hypercube: Option<usize>,
    /// Symmetric two-point base at ±u, comma-separated coordinates.
    #[arg(long, value_name = "U", value_parser = parse_f64_list)]
    two_point: Option<std::vec::Vec<f64>>,
    /// Serialized base (JSON).
    #[arg(long, value_name = "PATH")]
    base_file: Option<PathBuf>,
}

impl BaseArgs {
    fn to_source(&self) -> Result<Option<BaseSource>> {
        let given = [
            self.hypercube.is_some(),
            self.binary_hypercube.is_some(),
            self.two_point.is_some(),
            self.base_file.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given > 1 {
            bail!("give at most one of --hypercube, --binary-hypercube, --two-point, --base-file");
        }
        Ok(if let Some(dim) = self.hypercube {
            Some(BaseSource::Hypercube { dim })
        } else if let Some(dim) = self.binary_hypercube {
            Some(BaseSource::BinaryHypercube { dim })
        } else if let Some(u) = &self.two_point {
            Some(BaseSource::TwoPoint { u: u.clone() })
        } else {
            self.base_file
                .as_ref()
                .map(|path| BaseSource::File { path: path.clone() })
        })
    }
}

#[derive(Args, Default, Clone)]
struct ScheduleArgs {
    /// Override the derived number of reverse-SDE steps.
    #[arg(long)]
    num_steps: Option<usize>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Cap on derived step counts.
    #[arg(long)]
    max_steps: Option<usize>,
}

impl ScheduleArgs {
    fn overlay(&self, base: ScheduleOverrides) -> ScheduleOverrides {
        ScheduleOverrides {
            num_steps: self.num_steps.or(base.num_steps),
            sigma_min: self.sigma_min.or(base.sigma_min),
            sigma_max: self.sigma_max.or(base.sigma_max),
            max_steps: self.max_steps.or(base.max_steps),
        }
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("{f:?}: {e}")))
        .collect()
}

fn parse_i64_list(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|f| f.trim().parse::<i64>().map_err(|e| format!("{f:?}: {e}")))
        .collect()
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|f| f.trim().parse::<u32>().map_err(|e| format!("{f:?}: {e}")))
        .collect()
}

/// `0-1,1-2` edge lists.
fn parse_edges(s: &str) -> Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|pair| {
            let (a, b) = pair
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("{pair:?}: expected U-V"))?;
            Ok((
                a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?,
                b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?,
            ))
        })
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Sample the base distribution through its score oracle.
    SampleBase {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        num_samples: Option<usize>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Sample the linear tilt p(x;v) ∝ p(x)·e^{⟨x,v⟩}.
    SampleLinearTilt {
        #[command(flatten)]
        base: BaseArgs,
        /// Tilt vector, comma-separated.
        #[arg(long, value_parser = parse_f64_list)]
        v: Option<std::vec::Vec<f64>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        num_samples: Option<usize>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Estimate log E_p[e^{⟨x,v⟩}] by telescoping Monte Carlo.
    EstimateZ {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long, value_parser = parse_f64_list)]
        v: Option<std::vec::Vec<f64>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Sample the PSD quadratic tilt p*(x) ∝ p(x)·e^{½‖Lx‖²}.
    SamplePsdTilt {
        #[command(flatten)]
        base: BaseArgs,
        /// Factor matrix file (whitespace-separated rows).
        #[arg(long, value_name = "PATH")]
        factor_file: Option<PathBuf>,
        /// Bound on sup ‖Lx‖; derived from the base atoms when omitted.
        #[arg(long)]
        d_bound: Option<f64>,
        #[arg(long)]
        eps_final: Option<f64>,
        #[arg(long)]
        num_samples: Option<usize>,
        /// Exact grid weights from the base's log-MGF instead of Monte Carlo.
        #[arg(long)]
        oracle_mode: bool,
        /// Step cap for the inner normalization draws.
        #[arg(long)]
        inner_max_steps: Option<usize>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Compare two sample CSVs or serialized bases under a metric.
    Verify {
        #[arg(long)]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        /// `w2` or `tv`.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Sampling floor added to the tolerance.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Exact solution mass and decoder trials for a balanced-partition tilt.
    PartitionDemo {
        /// Instance weights, comma-separated integers.
        #[arg(long, value_parser = parse_i64_list)]
        w: Option<std::vec::Vec<i64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        samples_per_trial: Option<usize>,
        /// first-draw | any-draw | majority
        #[arg(long)]
        decode_rule: Option<String>,
    },
    /// Check the max-cut tilt construction on a graph.
    MaxcutCheck {
        #[arg(long)]
        dim: Option<usize>,
        /// Edge list `0-1,1-2,...`.
        #[arg(long, value_parser = parse_edges)]
        edges: Option<std::vec::Vec<(usize, usize)>>,
        /// Check all subsets against brute-force cut counts (dim <= 12).
        #[arg(long)]
        exhaustive: bool,
    },
    /// Run the two-block Gibbs chain on the symmetric two-mode base.
    GibbsDemo {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_parser = parse_f64_list)]
        u: Option<std::vec::Vec<f64>>,
        #[arg(long)]
        steps: Option<usize>,
        /// Run on the Gaussian-mixture base with this component variance.
        #[arg(long)]
        mixture_variance: Option<f64>,
        /// Write a per-step (z, u·x) trace CSV.
        #[arg(long)]
        trace: bool,
        /// Also draw from the grid-over-z sampler at this tolerance.
        #[arg(long)]
        psd_eps_final: Option<f64>,
        #[arg(long)]
        psd_draws: Option<usize>,
    },
    /// Run the acceptance suite and print one line per criterion.
    Accept {
        /// Criterion ids to run, comma-separated; all when omitted.
        #[arg(long, value_parser = parse_u32_list)]
        only: Option<std::vec::Vec<u32>>,
    },
}

fn load_config_command(cli: &Cli) -> Result<Option<Manifest>> {
    match &cli.config {
        Some(path) => {
            let manifest = Manifest::load(path)?;
            Ok(Some(manifest))
        }
        None => Ok(None),
    }
}

fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.with_context(|| format!("missing required parameter {name}; pass a flag or --config"))
}

/// Build the resolved command block from config + flags (flags win).
fn resolve_command(command: &Command, config: Option<&CommandConfig>) -> Result<CommandConfig> {
    Ok(match command {
        Command::SampleBase {
            base,
            epsilon,
            num_samples,
            schedule,
        } => {
            let prev = match config {
                Some(CommandConfig::SampleBase(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not sample-base", other.name()),
                None => None,
            };
            CommandConfig::SampleBase(SampleBaseParams {
                base: match base.to_source()? {
                    Some(src) => src,
                    None => require(prev.as_ref().map(|p| p.base.clone()), "base")?,
                },
                epsilon: epsilon
                    .or(prev.as_ref().map(|p| p.epsilon))
                    .unwrap_or(0.1),
                num_samples: num_samples
                    .or(prev.as_ref().map(|p| p.num_samples))
                    .unwrap_or(512),
                schedule: schedule.overlay(prev.map(|p| p.schedule).unwrap_or_default()),
            })
        }
        Command::SampleLinearTilt {
            base,
            v,
            epsilon,
            num_samples,
            schedule,
        } => {
            let prev = match config {
                Some(CommandConfig::SampleLinearTilt(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not sample-linear-tilt", other.name()),
                None => None,
            };
            CommandConfig::SampleLinearTilt(SampleLinearTiltParams {
                base: match base.to_source()? {
                    Some(src) => src,
                    None => require(prev.as_ref().map(|p| p.base.clone()), "base")?,
                },
                v: require(
                    v.clone().or(prev.as_ref().map(|p| p.v.clone())),
                    "v",
                )?,
                epsilon: epsilon
                    .or(prev.as_ref().map(|p| p.epsilon))
                    .unwrap_or(0.1),
                num_samples: num_samples
                    .or(prev.as_ref().map(|p| p.num_samples))
                    .unwrap_or(512),
                schedule: schedule.overlay(prev.map(|p| p.schedule).unwrap_or_default()),
            })
        }
        Command::EstimateZ {
            base,
            v,
            epsilon,
            delta,
            schedule,
        } => {
            let prev = match config {
                Some(CommandConfig::EstimateZ(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not estimate-z", other.name()),
                None => None,
            };
            CommandConfig::EstimateZ(EstimateZParams {
                base: match base.to_source()? {
                    Some(src) => src,
                    None => require(prev.as_ref().map(|p| p.base.clone()), "base")?,
                },
                v: require(v.clone().or(prev.as_ref().map(|p| p.v.clone())), "v")?,
                epsilon: epsilon
                    .or(prev.as_ref().map(|p| p.epsilon))
                    .unwrap_or(0.1),
                delta: delta.or(prev.as_ref().map(|p| p.delta)).unwrap_or(0.05),
                schedule: schedule.overlay(prev.map(|p| p.schedule).unwrap_or_default()),
            })
        }
        Command::SamplePsdTilt {
            base,
            factor_file,
            d_bound,
            eps_final,
            num_samples,
            oracle_mode,
            inner_max_steps,
            schedule,
        } => {
            let prev = match config {
                Some(CommandConfig::SamplePsdTilt(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not sample-psd-tilt", other.name()),
                None => None,
            };
            let factor = match factor_file {
                Some(path) => MatrixSource::File { path: path.clone() },
                None => require(prev.as_ref().map(|p| p.factor.clone()), "factor")?,
            };
            let mut inner_schedule = prev
                .as_ref()
                .map(|p| p.inner_schedule)
                .unwrap_or_default();
            if let Some(ms) = inner_max_steps {
                inner_schedule.max_steps = Some(*ms);
            }
            CommandConfig::SamplePsdTilt(SamplePsdTiltParams {
                base: match base.to_source()? {
                    Some(src) => src,
                    None => require(prev.as_ref().map(|p| p.base.clone()), "base")?,
                },
                factor,
                d_bound: d_bound.or(prev.as_ref().and_then(|p| p.d_bound)),
                eps_final: eps_final
                    .or(prev.as_ref().map(|p| p.eps_final))
                    .unwrap_or(0.3),
                num_samples: num_samples
                    .or(prev.as_ref().map(|p| p.num_samples))
                    .unwrap_or(512),
                oracle_mode: *oracle_mode || prev.as_ref().is_some_and(|p| p.oracle_mode),
                inner_schedule,
                schedule: schedule.overlay(prev.map(|p| p.schedule).unwrap_or_default()),
            })
        }
        Command::Verify {
            left,
            right,
            metric,
            tolerance,
            floor,
        } => {
            let prev = match config {
                Some(CommandConfig::Verify(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not verify", other.name()),
                None => None,
            };
            let metric = match metric.as_deref() {
                Some("w2") => VerifyMetric::W2,
                Some("tv") => VerifyMetric::Tv,
                Some(other) => bail!("unknown metric {other:?}; use w2 or tv"),
                None => prev
                    .as_ref()
                    .map(|p| p.metric)
                    .unwrap_or(VerifyMetric::W2),
            };
            CommandConfig::Verify(VerifyParams {
                left: require(
                    left.clone().or(prev.as_ref().map(|p| p.left.clone())),
                    "left",
                )?,
                right: require(
                    right.clone().or(prev.as_ref().map(|p| p.right.clone())),
                    "right",
                )?,
                metric,
                tolerance: tolerance.or(prev.as_ref().and_then(|p| p.tolerance)),
                floor: floor.or(prev.and_then(|p| p.floor)),
            })
        }
        Command::PartitionDemo {
            w,
            trials,
            samples_per_trial,
            decode_rule,
        } => {
            let prev = match config {
                Some(CommandConfig::PartitionDemo(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not partition-demo", other.name()),
                None => None,
            };
            let rule = match decode_rule.as_deref() {
                Some("first-draw") => quadtilt::hardness::DecodeRule::FirstDraw,
                Some("any-draw") => quadtilt::hardness::DecodeRule::AnyDraw,
                Some("majority") => quadtilt::hardness::DecodeRule::Majority,
                Some(other) => bail!("unknown decode rule {other:?}"),
                None => prev.as_ref().map(|p| p.decode_rule).unwrap_or_default(),
            };
            CommandConfig::PartitionDemo(PartitionDemoParams {
                w: require(w.clone().or(prev.as_ref().map(|p| p.w.clone())), "w")?,
                trials: trials.or(prev.as_ref().map(|p| p.trials)).unwrap_or(100),
                samples_per_trial: samples_per_trial
                    .or(prev.as_ref().map(|p| p.samples_per_trial))
                    .unwrap_or(1),
                decode_rule: rule,
            })
        }
        Command::MaxcutCheck {
            dim,
            edges,
            exhaustive,
        } => {
            let prev = match config {
                Some(CommandConfig::MaxcutCheck(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not maxcut-check", other.name()),
                None => None,
            };
            CommandConfig::MaxcutCheck(MaxCutCheckParams {
                dim: require(dim.or(prev.as_ref().map(|p| p.dim)), "dim")?,
                edges: require(
                    edges.clone().or(prev.as_ref().map(|p| p.edges.clone())),
                    "edges",
                )?,
                exhaustive: *exhaustive || prev.is_some_and(|p| p.exhaustive),
            })
        }
        Command::GibbsDemo {
            lambda,
            u,
            steps,
            mixture_variance,
            trace,
            psd_eps_final,
            psd_draws,
        } => {
            let prev = match config {
                Some(CommandConfig::GibbsDemo(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not gibbs-demo", other.name()),
                None => None,
            };
            let mode = match mixture_variance {
                Some(variance) => quadtilt::hardness::GibbsMode::Mixture {
                    variance: *variance,
                },
                None => prev
                    .as_ref()
                    .map(|p| p.mode)
                    .unwrap_or(quadtilt::hardness::GibbsMode::TwoAtom),
            };
            let psd_compare = match (psd_eps_final, psd_draws) {
                (Some(eps_final), draws) => Some(GibbsPsdCompare {
                    eps_final: *eps_final,
                    num_draws: draws.unwrap_or(1000),
                }),
                (None, Some(draws)) => Some(GibbsPsdCompare {
                    eps_final: 0.3,
                    num_draws: *draws,
                }),
                (None, None) => prev.as_ref().and_then(|p| p.psd_compare.clone()),
            };
            CommandConfig::GibbsDemo(GibbsDemoParams {
                lambda: require(lambda.or(prev.as_ref().map(|p| p.lambda)), "lambda")?,
                u: require(u.clone().or(prev.as_ref().map(|p| p.u.clone())), "u")?,
                steps: steps
                    .or(prev.as_ref().map(|p| p.steps))
                    .unwrap_or(10_000),
                mode,
                trace: *trace || prev.as_ref().is_some_and(|p| p.trace),
                psd_compare,
            })
        }
        Command::Accept { only } => {
            let prev = match config {
                Some(CommandConfig::Accept(p)) => Some(p.clone()),
                Some(other) => bail!("config is for {}, not accept", other.name()),
                None => None,
            };
            CommandConfig::Accept(AcceptParams {
                only: only
                    .clone()
                    .or(prev.map(|p| p.only))
                    .unwrap_or_default(),
            })
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    let from_config = load_config_command(&cli)?;
    let command = resolve_command(&cli.command, from_config.as_ref().map(|m| &m.command))?;
    let manifest = Manifest {
        command,
        seed: cli
            .seed
            .or(from_config.as_ref().map(|m| m.seed))
            .unwrap_or(0),
        out_dir: cli
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out")),
        caps: {
            let mut caps = from_config.as_ref().map(|m| m.caps).unwrap_or_default();
            if let Some(s) = cli.cap_samples {
                caps.samples = s;
            }
            if let Some(g) = cli.cap_grid {
                caps.grid = g;
            }
            caps
        },
        config_dir: from_config.and_then(|m| m.config_dir),
    };
    let report = runner::execute(&manifest)?;
    println!("{}", serde_json::to_string_pretty(&report.metrics)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Budget/cap refusals exit 3, the acceptance gate exits 1,
            // everything else is a validation failure (2).
            let code = if let Some(core) = err.downcast_ref::<quadtilt::Error>() {
                match core {
                    quadtilt::Error::GridCapExceeded { .. }
                    | quadtilt::Error::SummationCapExceeded { .. }
                    | quadtilt::Error::TransportSizeCap { .. } => 3,
                    _ => 2,
                }
            } else if err.to_string().contains("acceptance suite failed") {
                1
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}
