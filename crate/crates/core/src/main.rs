use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use optomech::analytic::negative_energy_threshold;
use optomech::hamiltonians::ModelKind;
use optomech::harness::{self, csv, ScanQuantity};
use optomech::params::RunConfig;
use optomech::Result;

#[derive(Parser)]
#[command(name = "optomech", version, about = "Compare optomechanical Hamiltonians on truncated Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest state of each photon sector by numerical diagonalization.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// ⟨x(t)⟩ and ⟨a(t)⟩ starting from a coherent field and mechanical vacuum.
    Dynamics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sector errors of every configured model against the Law model.
    CompareSpectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dynamics errors of every configured model against the Law model.
    CompareDynamics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Changes of energies and ⟨x(t)⟩ along a truncation ladder.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long, default_value = "20x30,30x45")]
        ladder: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Photon number at which the linear model's ground energy turns negative.
    Pathology {
        #[arg(long)]
        config: PathBuf,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { config, model, out } => {
            let cfg = RunConfig::from_file(config)?;
            let t = cfg.truncation()?;
            let records = harness::numeric_spectrum(model, &cfg.params()?, t, harness::n_keep_for(t)?)?;
            write(&out, &csv::spectrum(&cfg, model, &records))
        }
        Command::Dynamics { config, model, out } => {
            let cfg = RunConfig::from_file(config)?;
            let run = harness::run_dynamics(model, &cfg.params()?, cfg.truncation()?, cfg.alpha, &cfg.times())?;
            write(&out, &csv::dynamics(&cfg, &run))
        }
        Command::CompareSpectrum { config, out } => {
            let cfg = RunConfig::from_file(config)?;
            let t = cfg.truncation()?;
            let cmp = harness::compare_spectra(&cfg.models, &cfg.params()?, t, harness::n_keep_for(t)?)?;
            write(&out, &csv::compare_spectrum(&cfg, &cmp))
        }
        Command::CompareDynamics { config, out } => {
            let cfg = RunConfig::from_file(config)?;
            let cmp = harness::compare_dynamics(&cfg.models, &cfg.params()?, cfg.truncation()?, cfg.alpha, &cfg.times())?;
            write(&out, &csv::compare_dynamics(&cfg, &cmp))
        }
        Command::Converge { config, model, ladder, out } => {
            let cfg = RunConfig::from_file(config)?;
            let p = cfg.params()?;
            let ladder = harness::parse_ladder(&ladder)?;
            let t_max = cfg.t_max_periods * 2.0 * std::f64::consts::PI;
            let quantities = [
                ScanQuantity::Energies { n_keep: harness::DEFAULT_N_KEEP },
                ScanQuantity::Position { t_max, checkpoints: harness::DEFAULT_CHECKPOINTS },
            ];
            let reports = quantities
                .into_iter()
                .map(|q| harness::convergence_scan(model, &p, cfg.alpha, q, &ladder, harness::DEFAULT_TOLERANCE))
                .collect::<Result<Vec<_>>>()?;
            for r in &reports {
                println!(
                    "{} {}: max change {:e} (tolerance {:e}) -> {}",
                    model,
                    r.quantity.name(),
                    r.max_change(),
                    r.tolerance,
                    if r.converged { "converged" } else { "not converged" }
                );
            }
            write(&out, &csv::converge(&cfg, &reports))
        }
        Command::Pathology { config } => {
            let cfg = RunConfig::from_file(config)?;
            let th = negative_energy_threshold(&cfg.params()?)?;
            if th.saturated {
                println!("n* exceeds {} (search saturated)", th.n_star);
            } else {
                println!("n* = {}", th.n_star);
            }
            match th.energy_before {
                Some(e) => println!("E(n*-1, 0) = {}", csv::float(e)),
                None => println!("E(n*-1, 0) = none (n* = 0)"),
            }
            println!("E(n*, 0) = {}", csv::float(th.energy_at));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
