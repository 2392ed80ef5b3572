use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mbp_core::estimator::{fit, lambda_policy, FitConfig, LambdaMode, SIMULATION_C2};
use mbp_core::harness::diagnose::{eta_rows, gf_rows, kl_rows, psd_rows};
use mbp_core::harness::sweep::penalty_weight;
use mbp_core::harness::{run_experiment, DiagnoseCheck, ExperimentConfig};
use mbp_core::markov::{decay_scaling_report, DecayFamily, DEFAULT_FREQ_POINTS};
use mbp_core::process::DEFAULT_BURN_IN;
use mbp_core::{random_sparse_theta, simulate, LinkSpec, ParamTensor, SamplePath, DEFAULT_EPS};

#[derive(Parser)]
#[command(
    name = "mbp",
    version,
    about = "Sparse multivariate Bernoulli process tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LinkArgs {
    /// Sigmoid slope.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Clamp margin of the link.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

impl LinkArgs {
    fn link(&self) -> Result<LinkSpec> {
        Ok(LinkSpec::sigmoid(self.alpha, self.eps)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample path from a tensor file or a random sparse tensor.
    Simulate {
        /// Tensor to simulate from.
        #[arg(long, conflicts_with_all = ["n_dims", "lags", "sparsity"])]
        theta: Option<PathBuf>,
        /// Dimension of a random sparse tensor.
        #[arg(long, requires_all = ["lags", "sparsity"])]
        n_dims: Option<usize>,
        #[arg(long)]
        lags: Option<usize>,
        #[arg(long)]
        sparsity: Option<usize>,
        #[arg(long, default_value_t = 0.3)]
        magnitude_low: f64,
        #[arg(long, default_value_t = 1.0)]
        magnitude_high: f64,
        /// Where to save the random tensor.
        #[arg(long)]
        theta_out: Option<PathBuf>,
        /// Recorded steps.
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        link: LinkArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit the ℓ1-penalized estimator to a sample path.
    Fit {
        #[arg(long)]
        path: PathBuf,
        /// Explicit weight on the ℓ1 term of the per-step loss.
        #[arg(long, conflicts_with = "lambda_mode")]
        lambda: Option<f64>,
        /// `simulation` or `theorem`.
        #[arg(long)]
        lambda_mode: Option<LambdaMode>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        no_accelerate: bool,
        #[command(flatten)]
        link: LinkArgs,
        /// Where to save the estimate.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run one diagnostic on a tensor and write its rows as CSV.
    Diagnose {
        #[arg(long)]
        theta: Option<PathBuf>,
        /// gf-bound, eta-bound, kl-decomp, psd or decay-table.
        #[arg(long)]
        check: DiagnoseCheck,
        #[arg(short, long)]
        out: PathBuf,
        /// Horizon for eta-bound.
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        /// Path length for psd.
        #[arg(long, default_value_t = 200_000)]
        path_length: usize,
        #[arg(long, default_value_t = 2000)]
        segments: usize,
        #[arg(long, default_value_t = DEFAULT_FREQ_POINTS)]
        freq_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decay family for decay-table: constant, polynomial or exponential.
        #[arg(long, default_value = "polynomial")]
        family: String,
        #[arg(long, default_value_t = 0.05)]
        scale: f64,
        /// Decay exponent (alpha or beta).
        #[arg(long, default_value_t = 2.0)]
        shape: f64,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        p_values: Vec<usize>,
        /// Dimension for decay-table when no tensor is given.
        #[arg(long)]
        n_dims: Option<usize>,
        #[command(flatten)]
        link: LinkArgs,
    },
    /// Run an experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn write_csv<T: serde::Serialize>(path: &PathBuf, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            theta,
            n_dims,
            lags,
            sparsity,
            magnitude_low,
            magnitude_high,
            theta_out,
            n,
            burn_in,
            seed,
            link,
            out,
        } => {
            let link = link.link()?;
            let theta = match (theta, n_dims, lags, sparsity) {
                (Some(p), ..) => ParamTensor::read_file(&p)
                    .with_context(|| format!("reading {}", p.display()))?,
                (None, Some(nd), Some(p), Some(s)) => random_sparse_theta(
                    nd,
                    p,
                    s,
                    magnitude_low,
                    magnitude_high,
                    seed.wrapping_add(1),
                )?,
                _ => bail!("give either --theta or --n-dims, --lags and --sparsity"),
            };
            if let Some(t) = theta_out {
                theta.write_file(&t)?;
            }
            let path = simulate(&theta, &link, n, burn_in, seed)?;
            path.write_file(&out)?;
            eprintln!(
                "wrote {} steps of {} series to {}",
                n,
                path.n_dims(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            path,
            lambda,
            lambda_mode,
            c2,
            max_iters,
            tol,
            no_accelerate,
            link,
            out,
        } => {
            let link = link.link()?;
            let data = SamplePath::read_file(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let (nd, p, n) = (data.n_dims(), data.n_lags(), data.n());
            let weight = match (lambda, lambda_mode) {
                (Some(l), _) => l,
                (None, mode) => {
                    let mode = mode.unwrap_or(LambdaMode::Simulation);
                    let c2 = c2.unwrap_or(match mode {
                        LambdaMode::Simulation => SIMULATION_C2,
                        LambdaMode::Theorem => 1.0,
                    });
                    let lam = lambda_policy(n, nd, p, &link, c2, mode)?;
                    penalty_weight(lam, n, mode)
                }
            };
            let cfg = FitConfig {
                lambda: weight,
                max_iters,
                tol,
                accelerate: !no_accelerate,
                ..FitConfig::default()
            };
            let res = fit(&data, &link, &cfg, None)?;
            res.theta_hat.write_file(&out)?;
            println!(
                "lambda={} iterations={} converged={} objective={} nnz={}",
                weight,
                res.iterations,
                res.converged,
                res.objective_trace.last().copied().unwrap_or(f64::NAN),
                res.theta_hat.nnz()
            );
            Ok(if res.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Diagnose {
            theta,
            check,
            out,
            horizon,
            path_length,
            segments,
            freq_points,
            seed,
            family,
            scale,
            shape,
            p_values,
            n_dims,
            link,
        } => {
            let link = link.link()?;
            let load = || -> Result<ParamTensor> {
                let p = theta
                    .as_ref()
                    .context("--theta is required for this check")?;
                ParamTensor::read_file(p).with_context(|| format!("reading {}", p.display()))
            };
            match check {
                DiagnoseCheck::GfBound => write_csv(&out, &gf_rows(&load()?, &link, 0)?)?,
                DiagnoseCheck::EtaBound => {
                    let (rows, hinf) = eta_rows(&load()?, &link, horizon, 0)?;
                    write_csv(&out, &rows)?;
                    eprintln!(
                        "h_inf_sq={} f_p={} holds={}",
                        hinf.h_inf_sq, hinf.f_p, hinf.holds
                    );
                }
                DiagnoseCheck::KlDecomp => write_csv(&out, &kl_rows(&load()?, &link, 0)?)?,
                DiagnoseCheck::Psd => {
                    let (rows, c) =
                        psd_rows(&load()?, &link, path_length, segments, freq_points, seed)?;
                    write_csv(&out, &rows)?;
                    println!("c_ell_sq_hat={c}");
                }
                DiagnoseCheck::DecayTable => {
                    let nd = match (&theta, n_dims) {
                        (_, Some(nd)) => nd,
                        (Some(_), None) => load()?.n_rows(),
                        (None, None) => bail!("decay-table needs --n-dims or --theta"),
                    };
                    let fam = DecayFamily::from_parts(&family, scale, shape)?;
                    let rows = decay_scaling_report(fam, nd, &p_values, &link)?;
                    let mut w = csv::Writer::from_path(&out)?;
                    if rows.is_empty() {
                        w.write_record(["p", "inner_norm", "g_f", "G_f", "diverged"])?;
                    }
                    for r in &rows {
                        w.serialize(r)?;
                    }
                    w.flush()?;
                }
                DiagnoseCheck::GradBound => bail!("grad-bound runs through `mbp experiment`"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, output_dir } => {
            let mut cfg = ExperimentConfig::from_file(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            for f in run_experiment(&cfg)? {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
