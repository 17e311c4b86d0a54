//! `lipkit`: reproducible experiments over finite Lipschitz/Hölder function
//! spaces, with escape certificates that can be re-checked from disk.
//!
//! Exit codes: 0 success, 1 configuration error, 2 internal invariant or
//! certificate-verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use lipkit::experiments::{
    load_certificate_document, run_barrier, run_dual_thinness, run_snowflake, BarrierConfig,
    BarrierPreset, DualThinnessConfig, ExperimentError, Formats, SnowflakeConfig,
};
use lipkit::porosity::verify_certificate;

#[derive(Parser)]
#[command(name = "lipkit", version, about = "escape certificates for Lipschitz function classes at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certificates over snowflaked dyadic chains: base metric d^alpha,
    /// gauge d^beta, one row per chain depth and class member.
    Snowflake {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Class bound (the ratio level the certificates escape from).
        #[arg(long = "s", default_value_t = 1.0)]
        class_bound: f64,
        #[arg(long, default_value_t = 4)]
        k_min: usize,
        #[arg(long, default_value_t = 20)]
        k_max: usize,
        /// Ball-exclusion samples per certificate.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Seeded class members per chain, in addition to the zero function.
        #[arg(long, default_value_t = 3)]
        funcs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of json,csv,svg.
        #[arg(long, default_value = "json,csv")]
        format: String,
    },
    /// Sup-norm gauge against the 1-norm metric on signed-basis witness
    /// sets in R^n: certified escape strength grows like sqrt(n)/2.
    DualThinness {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        #[arg(long = "s", default_value_t = 1.0)]
        class_bound: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json,csv")]
        format: String,
    },
    /// Barrier-cone membership tables for a polyhedral gauge, plus escape
    /// certificates along the recession direction when the gauge is
    /// unbounded.
    Barrier {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// One of strip, box, random.
        #[arg(long, default_value = "strip")]
        preset: String,
        #[arg(long = "s", default_value_t = 1.0)]
        class_bound: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Grid points per axis (odd), used when dim <= 2.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        /// Seeded dual samples, used when dim >= 3.
        #[arg(long, default_value_t = 200)]
        dual_samples: usize,
        /// Points on the recession witness line.
        #[arg(long, default_value_t = 8)]
        line_points: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json,csv")]
        format: String,
    },
    /// Re-check a stored certificate document.
    Verify {
        /// Path to a certificate JSON file written by an experiment.
        cert: PathBuf,
    },
}

fn parse_formats(text: &str) -> Result<Formats, ExperimentError> {
    text.parse().map_err(ExperimentError::Config)
}

fn run(cli: Cli) -> Result<ExitCode, ExperimentError> {
    match cli.command {
        Command::Snowflake {
            alpha,
            beta,
            class_bound,
            k_min,
            k_max,
            samples,
            funcs,
            seed,
            out,
            format,
        } => {
            let report = run_snowflake(&SnowflakeConfig {
                alpha,
                beta,
                class_bound,
                k_min,
                k_max,
                ball_samples: samples,
                sampled_functions: funcs,
                seed,
                out_dir: out.clone(),
                formats: parse_formats(&format)?,
            })?;
            let certified = report.rows.iter().filter(|r| r.status == "certified").count();
            let skipped = report.rows.len() - certified;
            println!(
                "snowflake: {certified} certificates, {skipped} skip records, reports in {}",
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::DualThinness {
            n_min,
            n_max,
            class_bound,
            samples,
            seed,
            out,
            format,
        } => {
            let report = run_dual_thinness(&DualThinnessConfig {
                n_min,
                n_max,
                class_bound,
                ball_samples: samples,
                seed,
                out_dir: out.clone(),
                formats: parse_formats(&format)?,
            })?;
            let certified = report.rows.iter().filter(|r| r.status == "certified").count();
            println!(
                "dual-thinness: {certified}/{} dimensions certified, reports in {}",
                report.rows.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Barrier {
            dim,
            preset,
            class_bound,
            samples,
            grid,
            dual_samples,
            line_points,
            seed,
            out,
            format,
        } => {
            let preset: BarrierPreset = preset.parse().map_err(ExperimentError::Config)?;
            let report = run_barrier(&BarrierConfig {
                dim,
                preset,
                class_bound,
                ball_samples: samples,
                grid,
                dual_samples,
                line_points,
                seed,
                out_dir: out.clone(),
                formats: parse_formats(&format)?,
            })?;
            println!(
                "barrier: bounded={}, barrier fraction {:.4} over {} duals, reports in {}",
                report.bounded,
                report.barrier_fraction,
                report.membership.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { cert } => {
            let doc = load_certificate_document(&cert)?;
            let report = verify_certificate(&doc.space, &doc.gauge, &doc.certificate);
            println!(
                "structure: {}",
                if report.structure_ok { "ok" } else { "FAILED" }
            );
            for (name, entry) in report.entries() {
                println!(
                    "{name}: {} (margin {:+.3e})",
                    if entry.pass { "ok" } else { "FAILED" },
                    entry.margin
                );
            }
            if report.all_passed() {
                println!("certificate verified");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("certificate INVALID");
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let benign = matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            );
            let _ = err.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
