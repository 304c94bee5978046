use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use screenveil::net::BudgetInput;
use screenveil_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "screenveil",
    version,
    about = "Screen-frame interventions: offline runs, frame server, corpus and latency budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run frames through a pipeline config and write composited output.
    Run {
        /// Directory of numbered PNG frames, or a text file listing frame paths.
        #[arg(long)]
        input: PathBuf,
        /// Pipeline config (TOML, schema "screenveil.pipeline/1").
        #[arg(long)]
        config: PathBuf,
        /// Output directory for frames/, plans/ and latency.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve overlay plans over TCP until interrupted.
    Serve {
        /// Address to listen on, e.g. 127.0.0.1:7070 (port 0 picks a free port).
        #[arg(long)]
        listen: String,
        /// Pipeline config (TOML, schema "screenveil.pipeline/1").
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a corpus manifest to PNG screens, sequences and masks.
    Corpus {
        /// Corpus manifest (TOML, schema "screenveil.corpus/1").
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the transfer and compute latency budget.
    Budget {
        /// Link bandwidth in bits per second.
        #[arg(long, allow_hyphen_values = true)]
        bandwidth: String,
        /// Size of one frame in bits.
        #[arg(long, allow_hyphen_values = true)]
        image_bits: String,
        /// Inference time of one model in milliseconds; repeat once per model.
        #[arg(long = "model-ms", required = true, allow_hyphen_values = true)]
        model_ms: Vec<String>,
        /// Frame rate for the model-capacity estimate.
        #[arg(long, allow_hyphen_values = true)]
        target_fps: Option<String>,
    },
}

fn number(flag: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Numeric(format!("--{flag} {s:?} is not a number")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { input, config, out } => {
            let s = commands::cmd_run(&input, &config, &out)?;
            println!(
                "processed {} frames, mean pipeline {:.1} ms/frame",
                s.frames,
                s.mean_ms()
            );
        }
        Command::Serve { listen, config } => {
            let listener = TcpListener::bind(&listen)
                .map_err(|e| CliError::Input(format!("cannot listen on {listen}: {e}")))?;
            let addr = listener
                .local_addr()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let shutdown = Arc::new(AtomicBool::new(false));
            let flag = shutdown.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
                .map_err(|e| CliError::Runtime(format!("cannot install signal handler: {e}")))?;
            println!("listening on {addr}");
            let _ = std::io::stdout().flush();
            commands::cmd_serve(listener, &config, shutdown)?;
            // stdout may already be closed by whoever sent the signal.
            let _ = writeln!(std::io::stdout(), "shut down");
        }
        Command::Corpus { manifest, out } => {
            let s = commands::cmd_corpus(&manifest, &out)?;
            println!(
                "wrote {} screens, {} sequence frames, {} masks to {}",
                s.screens,
                s.sequence_frames,
                s.masks,
                out.display()
            );
        }
        Command::Budget {
            bandwidth,
            image_bits,
            model_ms,
            target_fps,
        } => {
            let input = BudgetInput {
                bandwidth_bps: number("bandwidth", &bandwidth)?,
                image_bits: number("image-bits", &image_bits)?,
                per_model_ms: model_ms
                    .iter()
                    .map(|m| number("model-ms", m))
                    .collect::<Result<_, _>>()?,
                target_fps: target_fps
                    .as_deref()
                    .map(|f| number("target-fps", f))
                    .transpose()?,
            };
            let report = commands::cmd_budget(&input)?;
            print!("{}", commands::format_budget(&report, input.target_fps));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("screenveil: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
