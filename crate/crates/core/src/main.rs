use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diskdelay::cli::{self, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "diskdelay", version, about = "Nonlocal delayed reaction-diffusion on a disk")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured scenario and write its artifacts.
    Run {
        /// Flat TOML run configuration.
        config: Option<PathBuf>,
        /// fig2_extinction or fig3_establishment.
        #[arg(long)]
        preset: Option<Preset>,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the eigenvalue/norm table as CSV (n, j, k, norm).
    EigenTable {
        #[arg(long, default_value_t = 0)]
        n_max: usize,
        #[arg(long, default_value_t = 8)]
        j_max: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// dirichlet, zero_flux or mixed.
        #[arg(long, default_value = "dirichlet")]
        bc: String,
        /// Coefficient of k J_n' in the mixed condition.
        #[arg(long)]
        a: Option<f64>,
        /// Coefficient of J_n in the mixed condition.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(command: Command) -> diskdelay::Result<()> {
    match command {
        Command::Run { config, preset, out } => {
            let mut cfg = match (config, preset) {
                (Some(path), None) => RunConfig::from_file(&path)?,
                (path, Some(preset)) => {
                    let mut raw = match path {
                        Some(path) => {
                            let text = std::fs::read_to_string(&path)
                                .map_err(|source| diskdelay::Error::Io { path, source })?;
                            cli::RawConfig::parse(&text)?
                        }
                        None => cli::RawConfig::default(),
                    };
                    raw.set_preset(preset);
                    RunConfig::from_raw(raw)?
                }
                (None, None) => {
                    return Err(diskdelay::Error::Config {
                        key: "config".into(),
                        reason: "pass a config file or --preset".into(),
                    })
                }
            };
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let summary = cli::run(&cfg)?;
            println!(
                "t = {}  max = {:e}  min = {:e}  mean = {:e}  converged = {}  -> {}",
                summary.t_end,
                summary.terminal_max,
                summary.terminal_min,
                summary.terminal_mean,
                summary.converged,
                cfg.output_dir.display()
            );
            Ok(())
        }
        Command::EigenTable {
            n_max,
            j_max,
            radius,
            bc,
            a,
            b,
            out,
        } => {
            let bc = cli::parse_bc(&bc, a, b)?;
            cli::dump_eigen_table(n_max, j_max, radius, bc, &out)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
