use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vfd_cli::{parse_config, run, Overrides, RunError};

/// Monte Carlo BER campaigns for two-relay virtual full-duplex relaying.
#[derive(Parser, Debug)]
#[command(name = "vfdsim", version)]
struct Args {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme name or comma-separated list.
    #[arg(long)]
    scheme: Option<String>,
    /// Relay location, A or B.
    #[arg(long)]
    location: Option<String>,
    /// SNR grid in dB, START:STEP:STOP.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 100 realizations, L = 10, K = 256, SNR {0, 4, 8} dB.
    #[arg(long)]
    desk_scale: bool,
    /// Disable receiver noise.
    #[arg(long)]
    noiseless: bool,
    /// estimated, genie or zero; overrides every scheme.
    #[arg(long)]
    pe_mode: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let overrides = Overrides {
        scheme: args.scheme,
        location: args.location,
        snr: args.snr,
        realizations: args.realizations,
        seed: args.seed,
        desk_scale: args.desk_scale,
        noiseless: args.noiseless,
        pe_mode: args.pe_mode,
    };
    let outcome = parse_config(args.config.as_deref(), &overrides)
        .map_err(RunError::from)
        .and_then(|config| {
            let total = config.realizations;
            let step = (total / 20).max(1);
            let progress = move |done: usize| {
                if done.is_multiple_of(step) || done == total {
                    eprint!("\rrealization {done}/{total}");
                    let _ = std::io::stderr().flush();
                }
            };
            let result = run(&config, &args.out, Some(&progress));
            eprintln!();
            result
        });
    match outcome {
        Ok(result) => {
            for r in &result.records {
                println!("{:>20} {:>6} dB  BER {:.4e}", r.scheme.name(), r.snr_db, r.ber());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
