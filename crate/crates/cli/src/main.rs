use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::error;

use radm::checkpoint::Checkpoint;
use radm::config::{parse_bands, Geometry, PulsatileConfig, RunConfig};
use radm::pulsatile::{write_channel_csv, write_pipe_csv};
use radm::run::{checkpoint_spectrum, run};
use radm::verify::{run_all, Fault};
use radm::RadmError;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "radm", version, about = "Reduced-order ADM turbulence solver and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a configured run and write its artifacts.
    Run { config: PathBuf },
    /// Run the self-check suites and print a pass/fail table.
    Verify {
        /// Deliberately break one component to exercise the suites.
        #[arg(long, value_enum, default_value_t = Inject::None)]
        inject: Inject,
    },
    /// Shell spectrum and slopes of a checkpoint.
    Spectrum {
        checkpoint: PathBuf,
        /// Slope bands as lo-hi pairs.
        #[arg(long, default_value = "4-8,16-21")]
        bands: String,
        /// Write the CSV here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Sample a channel or pipe profile described by a case file.
    Pulsatile {
        case: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Inject {
    None,
    Symbol,
    Mask,
}

fn exit_code(e: &RadmError) -> u8 {
    match e {
        RadmError::Config(_) | RadmError::InvalidParameter(_) | RadmError::InvalidGrid(_) | RadmError::Format(_) | RadmError::Io(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERICAL,
    }
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cmd: Command) -> Result<u8, RadmError> {
    match cmd {
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            let summary = run(&cfg)?;
            println!("{}", summary.line());
        }
        Command::Verify { inject } => {
            let fault = match inject {
                Inject::None => Fault::None,
                Inject::Symbol => Fault::SymbolPerturbation,
                Inject::Mask => Fault::MaskRemoval,
            };
            let results = run_all(fault);
            for r in &results {
                println!("{r}");
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::Spectrum {
            checkpoint,
            bands,
            output: out,
        } => {
            let bands = parse_bands(&bands).ok_or_else(|| RadmError::Config(format!("bad bands '{bands}'")))?;
            let ck = Checkpoint::load(checkpoint)?;
            let (spectrum, slopes) = checkpoint_spectrum(&ck, &bands)?;
            let mut w = output(out.as_ref())?;
            spectrum.write_csv(&mut w)?;
            w.flush()?;
            for (lo, hi, s) in slopes {
                match s {
                    Some(v) => eprintln!("slope[{lo},{hi}] = {v:.4}"),
                    None => eprintln!("slope[{lo},{hi}] = n/a"),
                }
            }
        }
        Command::Pulsatile { case, output: out } => {
            let cfg = PulsatileConfig::load(case)?;
            let mut w = output(out.as_ref())?;
            match cfg.geometry {
                Geometry::Channel => write_channel_csv(&cfg.case, cfg.time, cfg.points, &mut w)?,
                Geometry::Pipe => write_pipe_csv(&cfg.case, cfg.points, &mut w)?,
            }
            w.flush()?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    if let Some(threads) = std::env::var("RADM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global() {
            error!("cannot size thread pool: {e}");
        }
    }

    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
