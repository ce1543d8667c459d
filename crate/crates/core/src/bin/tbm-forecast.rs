use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tbm_forecast::experiment::{run_experiment, DataSource, ExperimentConfig, CONFIG_KEYS};
use tbm_forecast::synthetic::{generate_series, SyntheticSpec};
use tbm_forecast::Error;

/// Forecast TBM load parameters (cutterhead torque, advance rate, thrust)
/// with lasso feature selection and shallow, feed-forward and recurrent
/// models.
#[derive(Parser)]
#[command(name = "tbm-forecast", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,

    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Input CSV, or `synthetic`.
    #[arg(long, value_name = "PATH")]
    data: Option<String>,

    /// swol, swl, mwol, mwl, all, or a comma list.
    #[arg(long)]
    setting: Option<String>,

    /// svr, rf, fnn, rnn, lstm, gru, all, or a comma list.
    #[arg(long)]
    model: Option<String>,

    /// torque, advance_rate, thrust, all, or a comma list.
    #[arg(long)]
    target: Option<String>,

    /// Window width.
    #[arg(long)]
    tau: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Whole-series normalization, no biases, sigmoid activations everywhere.
    #[arg(long)]
    paper_exact: bool,

    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,

    /// Cells run concurrently.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic series in the input CSV layout.
    Synth {
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3000)]
        length: usize,
        #[arg(long, default_value_t = 44)]
        features: usize,
    },
    /// Print a configuration file holding every key at its default.
    Defaults,
    /// List configuration keys.
    Keys,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &args.data {
        config.data = if d == "synthetic" {
            DataSource::Synthetic
        } else {
            DataSource::Csv(PathBuf::from(d))
        };
    }
    let overrides = [
        ("setting", args.setting.clone()),
        ("model", args.model.clone()),
        ("target", args.target.clone()),
        ("tau", args.tau.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("workers", args.workers.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if args.paper_exact {
        config.paper_exact = true;
    }
    if args.no_plots {
        config.plots = false;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs) -> Result<bool, Error> {
    let config = build_config(args)?;
    let outcome = run_experiment(&config)?;
    if let Some(report) = &outcome.report {
        print!("{}", report.to_csv_string()?);
    }
    for (id, err) in outcome.failures() {
        eprintln!("cell {id} failed: {err}");
    }
    eprintln!("outputs written to {}", outcome.out_dir.display());
    Ok(outcome.all_succeeded())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Some(Command::Defaults) => {
            print!("{}", ExperimentConfig::default().render());
            Ok(true)
        }
        Some(Command::Keys) => {
            for (key, doc) in CONFIG_KEYS {
                println!("{key:24} {doc}");
            }
            Ok(true)
        }
        Some(Command::Synth {
            out,
            seed,
            length,
            features,
        }) => SyntheticSpec::random(features, length, tbm_forecast::synthetic::DEFAULT_SUPPORT, seed)
            .and_then(|spec| generate_series(&spec))
            .and_then(|g| g.table.write_csv(&out))
            .map(|_| true),
        None => run(&cli.run),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
