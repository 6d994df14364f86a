//! Command-line front end: experiment orchestration and reproducible output.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical-contract
//! failure, 4 I/O failure.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lfp_lab::config::SimConfig;
use lfp_lab::diagnostics::{audit_dissipation, decay_fit_trace, DissipationEvaluator};
use lfp_lab::equilibrium::{equilibrium_pair, tail_bound_check};
use lfp_lab::error::Error;
use lfp_lab::experiment::{read_snapshots, read_trace_csv, run_experiment, write_json};
use lfp_lab::forms::{constants_report, ConstantsReport};
use lfp_lab::fracops::operators_check;
use lfp_lab::grid::VelocityGrid;
use lfp_lab::params::AlphaParams;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "lfp-lab",
    about = "Numerical laboratory for kinetic equations with heavy-tailed equilibria",
    version
)]
struct Cli {
    /// Worker threads for the internal parallel maps (results are
    /// independent of this value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Stability exponent in (0, 2)
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Velocity truncation V (domain [-V, V))
    #[arg(long, default_value_t = 64.0)]
    extent: f64,
    /// Velocity nodes (even)
    #[arg(long, default_value_t = 2048)]
    nodes: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the heavy-tailed equilibrium and certify its tails
    Equilibrium {
        #[command(flatten)]
        grid: GridArgs,
        /// Output CSV (columns v, mu, grad_mu, envelope1, envelope2)
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the fractional-Laplacian discretizations
    OperatorsCheck {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output JSON report
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the functional-inequality constants
    Constants {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated epsilon values for the interpolation constant
        #[arg(long, default_value = "0.05,0.1,0.2", value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Probe-family level (2 doubles the family)
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the kinetic Levy-Fokker-Planck solver
    SimulateLfp {
        #[command(flatten)]
        grid: GridArgs,
        /// Initial data: lfp-default | equilibrium | a profile CSV path
        #[arg(long, default_value = "lfp-default")]
        init: String,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        tend: f64,
        /// "auto" or explicit "a,b,c[,eps]"
        #[arg(long, default_value = "auto")]
        coeffs: String,
        #[arg(long, default_value_t = 64)]
        x_modes: usize,
        #[arg(long, default_value_t = 1)]
        sample_every: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (trace.csv, decay.json, ...)
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also dump every sampled state for the dissipation audit
        #[arg(long, default_value_t = false)]
        snapshots: bool,
    },
    /// Run the heavy-tailed BGK solver
    SimulateBgk {
        #[command(flatten)]
        grid: GridArgs,
        /// Local equilibrium: "default" (the alpha-equilibrium) or a CSV path
        #[arg(long, default_value = "default")]
        equilibrium: String,
        #[arg(long, default_value = "bgk-default")]
        init: String,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        tend: f64,
        #[arg(long, default_value = "auto")]
        coeffs: String,
        #[arg(long, default_value_t = 64)]
        x_modes: usize,
        #[arg(long, default_value_t = 1)]
        sample_every: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = false)]
        snapshots: bool,
    },
    /// Fit an exponential decay rate to a trace CSV
    DecayFit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fit window "t0,t1"
        #[arg(long, value_delimiter = ',')]
        window: Vec<f64>,
        /// Output JSON (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the entropy-dissipation inequality on a snapshot dump
    DissipationCheck {
        #[arg(long)]
        snapshots: PathBuf,
        /// Defect tolerance as a multiple of the squared triple norm
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment from a config file or a named preset
    Run {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // results are invariant under the pool size: reductions use fixed
        // per-index order
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<Error>()
                .map(Error::exit_code)
                .unwrap_or(4);
            std::process::exit(code);
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Equilibrium { grid, out } => {
            let p = AlphaParams::new(grid.alpha, 1)?;
            let g = VelocityGrid::new(grid.extent, grid.nodes)?;
            let (mu, dmu) = equilibrium_pair(&p, &g)?;
            let report = tail_bound_check(&p, &mu, &dmu)?;
            let d = 1.0;
            let a = p.alpha();
            let mut text = String::from("# lfp-lab equilibrium v1\n");
            text.push_str("v,mu,grad_mu,envelope1,envelope2\n");
            for (j, &v) in g.nodes().iter().enumerate() {
                let e1 = (v.abs().powf(d + a) + 1.0) * mu.values()[j];
                let e2 = if v.abs() >= 1.0 {
                    (v.abs().powf(2.0 + d + a) + 1.0) * dmu.values()[j].abs() / v.abs()
                } else {
                    f64::NAN
                };
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    v,
                    mu.values()[j],
                    dmu.values()[j],
                    e1,
                    e2
                ));
            }
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "envelope ratios: density {:.4}, gradient {:.4}",
                report.density_ratio, report.gradient_ratio
            );
            Ok(())
        }
        Command::OperatorsCheck { grid, seed, out } => {
            let p = AlphaParams::new(grid.alpha, 1)?;
            let g = VelocityGrid::new(grid.extent, grid.nodes)?;
            let report = operators_check(&p, &g, seed)?;
            write_json(&out, &report)?;
            eprintln!(
                "cross-method max {:.3e}, equilibrium residual {:.3e}",
                report.cross_method_max, report.equilibrium_residual
            );
            Ok(())
        }
        Command::Constants {
            grid,
            eps,
            seed,
            level,
            out,
        } => {
            let p = AlphaParams::new(grid.alpha, 1)?;
            let g = VelocityGrid::new(grid.extent, grid.nodes)?;
            let mu = lfp_lab::equilibrium::equilibrium_density(&p, &g)?;
            let report = constants_report(&p, &mu, &eps, seed, level)?;
            write_json(&out, &report)?;
            eprintln!(
                "C_P = {:.4}, C_R = {:.4}, C_F = {:.4}",
                report.c_p, report.c_r, report.c_f
            );
            Ok(())
        }
        Command::SimulateLfp {
            grid,
            init,
            dt,
            tend,
            coeffs,
            x_modes,
            sample_every,
            seed,
            out,
            snapshots,
        } => {
            let cfg = build_config(
                "lfp",
                &grid,
                &init,
                dt,
                tend,
                &coeffs,
                x_modes,
                sample_every,
                seed,
                &out,
                snapshots,
                "default",
                "",
            )?;
            run_and_report(&cfg)
        }
        Command::SimulateBgk {
            grid,
            equilibrium,
            init,
            dt,
            tend,
            coeffs,
            x_modes,
            sample_every,
            seed,
            out,
            snapshots,
        } => {
            let (eq_kind, eq_file) = if equilibrium == "default" {
                ("default", String::new())
            } else {
                ("file", equilibrium.clone())
            };
            let cfg = build_config(
                "bgk",
                &grid,
                &init,
                dt,
                tend,
                &coeffs,
                x_modes,
                sample_every,
                seed,
                &out,
                snapshots,
                eq_kind,
                &eq_file,
            )?;
            run_and_report(&cfg)
        }
        Command::DecayFit { input, window, out } => {
            if window.len() != 2 {
                return Err(Error::Config("--window needs t0,t1".into()).into());
            }
            let trace = read_trace_csv(&input)?;
            let fit = decay_fit_trace(&trace, (window[0], window[1]))?;
            match out {
                Some(path) => write_json(&path, &fit)?,
                None => println!("{}", serde_json::to_string_pretty(&fit)?),
            }
            eprintln!(
                "lambda = {:.6}, residual = {:.3e}",
                fit.lambda, fit.residual
            );
            Ok(())
        }
        Command::DissipationCheck {
            snapshots,
            tolerance,
            out,
        } => {
            let file = read_snapshots(&snapshots)?;
            let (c_p, c_f, k_eps, ct_p) = file.constants.ok_or_else(|| {
                Error::Config(
                    "snapshot file carries no constants (explicit-coefficient run); \
                     rerun with auto coefficients"
                        .into(),
                )
            })?;
            let p = AlphaParams::new(file.alpha, 1)?;
            let grid = file.snaps[0].1.grid().clone();
            let mu = lfp_lab::equilibrium::equilibrium_density(&p, &grid)?;
            let report = ConstantsReport {
                alpha: file.alpha,
                tail_mass_budget: file.extent.powf(-file.alpha),
                c_p,
                c_r: f64::NAN,
                c_f,
                k_of_eps: vec![(file.coeffs.eps, k_eps)],
                torus_poincare: ct_p,
                test_family: "from snapshot header".into(),
            };
            let evaluator = DissipationEvaluator::new(&p, &mu, &file.coeffs, &report);
            let sel_pre = lfp_lab::diagnostics::dissipation_prefactors(&file.coeffs, &report);
            let lambda_cert =
                lfp_lab::diagnostics::certified_lambda(&file.coeffs, &report, &sel_pre);
            let mu_solver = lfp_lab::solver_lfp::CollisionPlan::new(&p, &grid)
                .discrete_equilibrium()
                .normalized();
            let mut times = Vec::new();
            let mut tn_sq = Vec::new();
            let mut d_vals = Vec::new();
            for (t, phase) in &file.snaps {
                let mut dev = phase.to_modes();
                dev.subtract_global_equilibrium(mu_solver.values());
                times.push(*t);
                tn_sq.push(dev.norm_bundle(&mu).triple_sq(&file.coeffs));
                d_vals.push(evaluator.dissipation(&dev).value);
            }
            let audit = audit_dissipation(&times, &tn_sq, &d_vals, lambda_cert, tolerance)?;
            match out {
                Some(path) => write_json(&path, &audit)?,
                None => println!("{}", serde_json::to_string_pretty(&audit)?),
            }
            if !audit.all_within_tolerance {
                return Err(Error::Contract(
                    "entropy-dissipation inequality breached; see the report".into(),
                )
                .into());
            }
            eprintln!(
                "dissipation inequality holds at {} interior snapshots (lambda_cert {:.3e})",
                audit.samples.len(),
                audit.lambda_cert
            );
            Ok(())
        }
        Command::Run { config, preset } => {
            let cfg = match (config, preset) {
                (Some(path), _) => SimConfig::load(&path)?,
                (None, Some(name)) => SimConfig::preset(&name)?,
                (None, None) => {
                    return Err(Error::Config("pass --config or --preset".into()).into())
                }
            };
            run_and_report(&cfg)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    model: &str,
    grid: &GridArgs,
    init: &str,
    dt: f64,
    tend: f64,
    coeffs: &str,
    x_modes: usize,
    sample_every: usize,
    seed: u64,
    out: &PathBuf,
    snapshots: bool,
    bgk_equilibrium: &str,
    bgk_file: &str,
) -> anyhow::Result<SimConfig> {
    let (preset, file) = match init {
        "lfp-default" | "bgk-default" | "equilibrium" => (init.to_string(), String::new()),
        path => ("file".to_string(), path.to_string()),
    };
    let coeffs_section = if coeffs == "auto" {
        String::from("mode = \"auto\"\n")
    } else {
        let parts: Vec<f64> = coeffs
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Config(format!("cannot parse --coeffs {coeffs:?}")))?;
        if parts.len() < 3 {
            return Err(Error::Config("--coeffs needs a,b,c[,eps]".into()).into());
        }
        let eps = parts.get(3).copied().unwrap_or(0.1);
        format!(
            "mode = \"explicit\"\na = {}\nb = {}\nc = {}\neps = {}\n",
            parts[0], parts[1], parts[2], eps
        )
    };
    let text = format!(
        "model = \"{model}\"\nseed = {seed}\n\n[params]\nalpha = {}\nextent = {}\nnodes = {}\nx_modes = {x_modes}\n\n\
         [time]\ndt = {dt}\nt_end = {tend}\nsample_every = {sample_every}\n\n[coeffs]\n{coeffs_section}\n\
         [init]\npreset = \"{preset}\"\nfile = \"{file}\"\n\n[output]\ndir = \"{}\"\nsnapshots = {snapshots}\n\n\
         [bgk]\nequilibrium = \"{bgk_equilibrium}\"\nfile = \"{bgk_file}\"\n",
        grid.alpha,
        grid.extent,
        grid.nodes,
        out.display(),
    );
    Ok(SimConfig::from_toml(&text)?)
}

fn run_and_report(cfg: &SimConfig) -> anyhow::Result<()> {
    let artifacts = run_experiment(cfg)?;
    eprintln!(
        "trace: {} ({} samples, mass drift {:.2e})",
        artifacts.trace_path.display(),
        artifacts.trace.len(),
        artifacts.trace.mass_drift()
    );
    eprintln!(
        "decay: lambda = {:.6}, residual = {:.3e} -> {}",
        artifacts.fit.lambda,
        artifacts.fit.residual,
        artifacts.decay_path.display()
    );
    if let Some(path) = &artifacts.constants_path {
        eprintln!("constants: {}", path.display());
    }
    if let Some(path) = &artifacts.snapshots_path {
        eprintln!("snapshots: {}", path.display());
    }
    Ok(())
}
