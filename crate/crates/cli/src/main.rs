//! `motornet` command-line front end.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motornet::evaluation::TableFormat;

use config::RunConfig;
use error::{config as config_error, CliResult};

#[derive(Parser)]
#[command(name = "motornet", version, about = "Spec-built CNNs and FBCSP for motor-imagery EEG")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model spec and print its flatten width and parameter count.
    Validate {
        /// Spec file; the bundled EEGNet spec when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Build a model and print its layer table.
    Build {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the initial weights here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one method under one evaluation scheme.
    Run(Box<RunArgs>),
    /// Pack a CSV manifest of per-trial CSV matrices into a trial container.
    Convert {
        /// CSV with columns path,label,subject,session.
        #[arg(long)]
        manifest: PathBuf,
        /// Sampling rate of the trial matrices in Hz.
        #[arg(long)]
        fs: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge result summaries into one table.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Mark column A with the paired t-test p-value against column B.
        #[arg(long, value_name = "A,B")]
        compare: Vec<String>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

/// Every setting can also come from the `--config` file.
#[derive(Args)]
struct RunArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trial container; relative paths resolve against $MOTORNET_DATA_DIR when set.
    #[arg(long)]
    data: Option<String>,
    /// eegnet or fbcsp.
    #[arg(long)]
    method: Option<String>,
    /// Model spec for eegnet; "builtin" for the bundled EEGNet.
    #[arg(long)]
    spec: Option<String>,
    /// single, mixed, loso or lawhern.
    #[arg(long)]
    scheme: Option<String>,
    /// Held-out portion under loso: all or test.
    #[arg(long)]
    loso_test: Option<String>,
    /// Trial window in seconds as start,end, or none.
    #[arg(long)]
    window: Option<String>,
    /// Band-pass edges in Hz as low,high, or none.
    #[arg(long)]
    bandpass: Option<String>,
    #[arg(long)]
    filter_order: Option<String>,
    /// EMA standardization decay, or none.
    #[arg(long)]
    ema: Option<String>,
    /// Target sampling rate in Hz, or none.
    #[arg(long)]
    resample: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    csp_pairs: Option<String>,
    /// Features kept by mutual-information selection.
    #[arg(long)]
    csp_features: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; 1 gives bitwise-reproducible runs.
    #[arg(long)]
    threads: Option<String>,
}

impl RunArgs {
    fn resolve(self) -> CliResult<RunConfig> {
        let flags = commands::given(&[
            ("data", self.data),
            ("method", self.method),
            ("spec", self.spec),
            ("scheme", self.scheme),
            ("loso_test", self.loso_test),
            ("window", self.window),
            ("bandpass", self.bandpass),
            ("filter_order", self.filter_order),
            ("ema", self.ema),
            ("resample", self.resample),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("reps", self.reps),
            ("seed", self.seed),
            ("csp_pairs", self.csp_pairs),
            ("csp_features", self.csp_features),
            ("out", self.out),
            ("threads", self.threads),
        ]);
        RunConfig::resolve(self.config.as_deref(), flags).map_err(config_error)
    }
}

fn dispatch(command: Command) -> CliResult<String> {
    match command {
        Command::Validate { spec } => commands::validate(spec.as_deref()),
        Command::Build { spec, seed, out } => commands::build(spec.as_deref(), seed, out.as_deref()),
        Command::Run(args) => commands::run(&args.resolve()?),
        Command::Convert { manifest, fs, out } => commands::convert(&manifest, fs, &out),
        Command::Report { summaries, format, compare, out } => {
            let pairs = compare
                .iter()
                .map(|c| {
                    c.split_once(',')
                        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                        .ok_or_else(|| config_error(anyhow::anyhow!("--compare expects A,B, got {c:?}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let format = match format {
                Format::Csv => TableFormat::Csv,
                Format::Markdown => TableFormat::Markdown,
            };
            let text = commands::report(&summaries, format, &pairs)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(error::data)?;
                    Ok(format!("wrote {}", path.display()))
                }
                None => Ok(text.trim_end().to_string()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match dispatch(cli.command) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.kind.exit_code()
        }
    }
}
