use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydrolimit::harness::{
    check_assumptions, epsilon_dir, mobility_info, run_epsilon, run_limit, run_sweep, write_density_dump,
    write_diagnostics_csv, write_ensemble_dump, write_limit_series, write_phase_dump, write_sweep, RunConfig,
};
use hydrolimit::kinetic::KineticState;
use hydrolimit::Error;

#[derive(Parser)]
#[command(name = "hydrolimit", version, about = "Kinetic Fokker-Planck runs and their diffusive limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One kinetic run at a single epsilon, with diagnostics and a final-state dump.
    SimulateKinetic {
        #[command(flatten)]
        common: Common,
        /// Epsilon to run; defaults to the first entry of the config list.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Limit-equation run with mass, variance and h0 bounds per snapshot.
    SimulateSmoluchowski {
        #[command(flatten)]
        common: Common,
    },
    /// Epsilon sweep with convergence-order fits.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Sampled check of the structural hypotheses.
    CheckAssumptions {
        #[command(flatten)]
        common: Common,
    },
    /// Two-sphere RPY eigenvalues against centre distance, as CSV on stdout.
    MobilityInfo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file; the built-in benchmark is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; artifacts go to `<out>/<run_id>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Run even when the assumption check fails.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::benchmark(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::ConfigInvalid("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
        }
        Ok(cfg)
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn simulate_kinetic(cfg: &RunConfig, epsilon: Option<f64>) -> Result<Outcome, Error> {
    let eps = epsilon.unwrap_or(cfg.epsilons[0]);
    if !(eps > 0.0) {
        return Err(Error::ConfigInvalid("--epsilon must be positive".into()));
    }
    let run = run_epsilon(cfg, eps)?;
    let dir = epsilon_dir(&cfg.run_dir(), eps);
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &run.records)?;
    match &run.final_state {
        KineticState::Grid(g) => write_phase_dump(&dir.join("final_phase.csv"), g)?,
        KineticState::Ensemble(e) => write_ensemble_dump(&dir.join("final_ensemble.csv"), e)?,
    }
    let s = &run.summary;
    println!(
        "eps={} nx={} dt={:.3e} sup_H={:.4e} sup_L1={:.4e} flux={:.4e} pdev={:.4e} structure={}",
        eps,
        s.nx,
        s.dt,
        s.sup_h_f_rho_m,
        s.sup_l1_f_rho_m,
        s.flux_residual,
        s.pressure_dev,
        if s.structure_ok() { "ok" } else { "FAIL" }
    );
    println!("wrote {}", dir.display());
    Ok(if s.structure_ok() { Outcome::Pass } else { Outcome::Fail })
}

fn simulate_smoluchowski(cfg: &RunConfig) -> Result<Outcome, Error> {
    let series = run_limit(cfg)?;
    let dir = cfg.run_dir().join("smoluchowski");
    write_limit_series(&dir.join("series.csv"), &series)?;
    write_density_dump(&dir.join("final_density.csv"), &series.final_state, &cfg.potential)?;
    let ok = series.max_principle_ok();
    println!(
        "T={} mass={:.12e} variance={:.6e} max_principle={}",
        cfg.t_final,
        series.final_state.mass(),
        series.final_state.variance(),
        if ok { "ok" } else { "FAIL" }
    );
    println!("wrote {}", dir.display());
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

fn sweep(cfg: &RunConfig, force: bool) -> Result<Outcome, Error> {
    let assumptions = check_assumptions(cfg)?;
    if !assumptions.passed() {
        eprint!("{}", assumptions.to_text());
        if !force {
            eprintln!("assumption check failed; rerun with --force to sweep anyway");
            return Ok(Outcome::Fail);
        }
        eprintln!("assumption check failed; continuing because of --force");
    }
    let report = run_sweep(cfg)?;
    let dir = cfg.run_dir();
    write_sweep(&dir, &report)?;
    for r in &report.runs {
        let s = &r.summary;
        println!(
            "eps={} nx={} sup_H={:.4e} sup_L1={:.4e} flux={:.4e} pdev={:.4e} remainder={:.4e} structure={}",
            s.epsilon,
            s.nx,
            s.sup_h_f_rho_m,
            s.sup_l1_f_rho_m,
            s.flux_residual,
            s.pressure_dev,
            s.remainder(),
            if s.structure_ok() { "ok" } else { "FAIL" }
        );
    }
    for t in &report.slopes {
        match t.fit {
            Some(f) => println!(
                "slope {}: {:.4} (fit residual {:.4}){}",
                t.quantity,
                f.slope,
                f.residual,
                if t.gated {
                    if t.pass() {
                        " PASS"
                    } else {
                        " FAIL"
                    }
                } else {
                    ""
                }
            ),
            None => println!("slope {}: not fitted ({})", t.quantity, t.note.as_deref().unwrap_or("")),
        }
    }
    if let Some(m) = report.h_monotone {
        println!("sup_H monotone in eps: {}", if m { "PASS" } else { "FAIL" });
    }
    println!("wrote {}", dir.display());
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::SimulateKinetic { common, epsilon } => simulate_kinetic(&common.load()?, epsilon),
        Command::SimulateSmoluchowski { common } => simulate_smoluchowski(&common.load()?),
        Command::Sweep { common } => {
            let cfg = common.load()?;
            sweep(&cfg, common.force)
        }
        Command::CheckAssumptions { common } => {
            let report = check_assumptions(&common.load()?)?;
            print!("{}", report.to_text());
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::MobilityInfo { common } => {
            let cfg = common.load()?;
            let mut out = std::io::stdout().lock();
            // a closed pipe (e.g. `| head`) is not an error for a CSV dump
            let _ = writeln!(out, "config_id,d,lambda_min,lambda_max");
            for s in mobility_info(&cfg)? {
                let _ = writeln!(out, "{},{:.12e},{:.12e},{:.12e}", cfg.run_id, s.distance, s.lambda_min, s.lambda_max);
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e @ Error::ConfigInvalid(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
