//! `thevenin`: run identification scenarios and summarize their output.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad JSON,
//! out-of-range tunables, bad flag values — the message names the key),
//! 1 for I/O failures and malformed CSV input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thevenin_core::{
    read_records, run_scenario, summarize, write_records, ConfigDocument, Error, EstimatorSet,
    SignalSummary, SummaryBands, SummaryMetrics,
};

#[derive(Parser)]
#[command(
    name = "thevenin",
    version,
    about = "Closed-loop identification of a node's source equivalent: simulate scenarios, summarize record streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config and write the record stream as CSV
    Simulate(SimulateArgs),
    /// Reduce a record-stream CSV to per-segment convergence metrics
    Summary(SummaryArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON scenario config
    #[arg(long)]
    config: PathBuf,
    /// CSV file the record stream is written to
    #[arg(long)]
    out: PathBuf,
    /// Override the noise seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Run only this comma-separated estimator subset (esc, rwls, kalman)
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
}

#[derive(Args)]
struct SummaryArgs {
    /// Record-stream CSV produced by `simulate`
    #[arg(long)]
    csv: PathBuf,
    /// Angle band half-width for the settling test (deg)
    #[arg(long, default_value_t = 1.0)]
    band_alpha: f64,
    /// Impedance-magnitude band half-width (ohm)
    #[arg(long, default_value_t = 0.1)]
    band_z: f64,
    /// Source-magnitude band half-width (V)
    #[arg(long, default_value_t = 1.0)]
    band_v: f64,
    /// Trailing window the steady-state means are taken over (s)
    #[arg(long, default_value_t = 10.0)]
    settle_window: f64,
    /// Emit machine-readable JSON instead of the table
    #[arg(long)]
    json: bool,
}

/// Failure classed by exit code.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }
}

/// Core errors split by class: config problems exit 2, everything else 1.
fn classify(err: Error) -> Failure {
    match err {
        Error::Config { .. } | Error::ConfigSyntax { .. } => Failure::config(err.to_string()),
        other => Failure::runtime(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Summary(args) => cmd_summary(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::runtime(format!("reading {}: {e}", args.config.display())))?;
    let mut doc = ConfigDocument::from_json_str(&text).map_err(classify)?;
    if let Some(seed) = args.seed {
        doc.scenario.seed = seed;
    }
    if let Some(names) = &args.estimators {
        doc.scenario.estimators = parse_estimators(names)?;
    }

    let records = run_scenario(&doc.scenario).map_err(classify)?;
    let file = fs::File::create(&args.out)
        .map_err(|e| Failure::runtime(format!("creating {}: {e}", args.out.display())))?;
    write_records(file, &records)
        .map_err(|e| Failure::runtime(format!("writing {}: {e}", args.out.display())))?;
    println!("wrote {} records to {}", records.len(), args.out.display());

    match summarize(&records, doc.output.settle_window, &doc.output.bands) {
        Ok(summary) => print_table(&summary),
        // The run itself succeeded; a window/stream mismatch only costs the
        // printed table.
        Err(e) => eprintln!("run summary unavailable: {e}"),
    }
    Ok(())
}

fn cmd_summary(args: SummaryArgs) -> Result<(), Failure> {
    for (value, flag) in [
        (args.band_alpha, "--band-alpha"),
        (args.band_z, "--band-z"),
        (args.band_v, "--band-v"),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Failure::config(format!(
                "{flag} must be positive and finite (got {value})"
            )));
        }
    }
    if !(args.settle_window > 0.0 && args.settle_window.is_finite()) {
        return Err(Failure::config(format!(
            "--settle-window must be positive and finite (got {})",
            args.settle_window
        )));
    }

    let file = fs::File::open(&args.csv)
        .map_err(|e| Failure::runtime(format!("opening {}: {e}", args.csv.display())))?;
    let records = read_records(file).map_err(|e| Failure::runtime(e.to_string()))?;
    let bands = SummaryBands {
        alpha_deg: args.band_alpha,
        zth: args.band_z,
        vth: args.band_v,
    };
    let summary = summarize(&records, args.settle_window, &bands)
        .map_err(|e| Failure::runtime(e.to_string()))?;

    if args.json {
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Failure::runtime(format!("serializing summary: {e}")))?;
        println!("{text}");
    } else {
        print_table(&summary);
    }
    Ok(())
}

fn parse_estimators(names: &[String]) -> Result<EstimatorSet, Failure> {
    let mut set = EstimatorSet {
        esc: false,
        rwls: false,
        kalman: false,
    };
    for name in names {
        match name.as_str() {
            "esc" => set.esc = true,
            "rwls" => set.rwls = true,
            "kalman" => set.kalman = true,
            other => {
                return Err(Failure::config(format!(
                    "unknown estimator `{other}`; expected esc, rwls, or kalman"
                )))
            }
        }
    }
    Ok(set)
}

fn print_table(summary: &SummaryMetrics) {
    for (i, seg) in summary.segments.iter().enumerate() {
        println!(
            "segment {}: t in [{}, {}) s; truth vth = {} V, zth = {} ohm, alpha = {} deg",
            i + 1,
            seg.t_start,
            seg.t_end,
            seg.vth_true,
            seg.zth_true,
            seg.alpha_true_deg
        );
        println!(
            "  {:<13} {:>12} {:>12} {:>10} {:>16}",
            "signal", "mean", "error", "std", "settled at (s)"
        );
        print_row("alpha (esc)", &seg.alpha_esc_deg);
        print_row("zth (rwls)", &seg.zth_rwls);
        print_row("zth (kf)", &seg.zth_kf);
        print_row("vth (rwls)", &seg.vth_rwls);
        print_row("vth (kf)", &seg.vth_kf);
    }
}

fn print_row(label: &str, signal: &Option<SignalSummary>) {
    let Some(s) = signal else { return };
    let settled = s
        .settling_time_s
        .map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
    println!(
        "  {:<13} {:>12.4} {:>12.4} {:>10.4} {:>16}",
        label, s.mean_estimate, s.mean_error, s.std_dev, settled
    );
}
