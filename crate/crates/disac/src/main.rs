use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disac::{dump_program, execute_path, output_dir, prepare, validate, DisacError, RunOptions};

#[derive(Parser)]
#[command(name = "disac", version, about = "Robust distributed ISAC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (or re-run a manifest.json)
    Run {
        spec: PathBuf,
        /// Output directory [default: $DISAC_OUT/<kind> or results/<kind>]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seed list overriding the spec
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads [default: available cores]
        #[arg(long)]
        workers: Option<usize>,
        /// Use the full-size network instead of the desk-scale one
        #[arg(long)]
        full_scale: bool,
    },
    /// Check a spec without running it
    Validate {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the first surrogate program of a spec as a conic text dump
    DumpProgram {
        spec: PathBuf,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(spec: &PathBuf) -> disac::Result<disac::ExperimentSpec> {
    let text = std::fs::read_to_string(spec).map_err(|e| DisacError::io(spec, e))?;
    let base = spec.parent().map(PathBuf::from).unwrap_or_default();
    prepare(&text, spec, &base, &RunOptions::default())
}

fn main_inner(cli: Cli) -> disac::Result<i32> {
    match cli.command {
        Command::Run {
            spec,
            out,
            seeds,
            workers,
            full_scale,
        } => {
            let opts = RunOptions {
                out,
                seeds,
                workers,
                full_scale,
            };
            let (result, dir) = execute_path(&spec, &opts)?;
            eprintln!(
                "{} points in {:.1} s ({} infeasible, {} solver trouble) -> {}",
                result.points,
                result.wall_time_s,
                result.infeasible_points,
                result.solver_trouble_points,
                dir.display()
            );
            Ok(result.exit_code())
        }
        Command::Validate { spec, out } => {
            let s = load(&spec)?;
            let dir = output_dir(&s, out.as_deref());
            let n = validate(&s, &dir)?;
            println!("ok: {} experiment, {n} points, output {}", s.kind.label(), dir.display());
            Ok(0)
        }
        Command::DumpProgram { spec, out } => {
            let text = dump_program(&load(&spec)?)?;
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| DisacError::io(&p, e))?,
                None => {
                    let mut out = std::io::stdout().lock();
                    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                        r => r.map_err(|e| DisacError::io("<stdout>", e))?,
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
