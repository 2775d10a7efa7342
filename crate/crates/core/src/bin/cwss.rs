use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cwss::harness::config::{parse_methods, OUT_DIR_ENV};
use cwss::harness::report::trace_csv;
use cwss::harness::{
    emit_report, load_config, run_monte_carlo, run_trial_with, ExperimentConfig, Method, OutputFormat, Preset,
    TrialOptions,
};
use cwss::Result;

#[derive(Parser)]
#[command(name = "cwss", version, about = "Compressive wideband spectrum sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(clap::Args)]
struct Source {
    /// TOML config; keys not given fall back to the preset.
    config: Option<PathBuf>,
    /// Built-in scenario (table1..table4), used when no config file is given.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write reports.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sub-sampling ratio; repeat for several.
        #[arg(long)]
        ratio: Vec<f64>,
        #[arg(long = "snr-db", allow_hyphen_values = true)]
        snr_db: Option<f64>,
        /// Comma-separated subset of bpdn,vlbs,evlbs.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// List the built-in scenarios.
    Presets,
    /// Write one trial's per-iteration solver trace as CSV.
    Trace {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        ratio: Option<f64>,
        /// Restrict to one method.
        #[arg(long)]
        method: Option<String>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base_config(source: &Source) -> Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => load_config(path),
        (None, Some(name)) => Preset::from_name(name).map(|p| p.config()).ok_or_else(|| {
            cwss::Error::config("preset", format!("unknown preset `{name}`"))
        }),
        (None, None) => Ok(ExperimentConfig::default()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Presets => {
            for p in Preset::ALL {
                println!("{:<8} {}", p.name(), p.describe());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            source,
            trials,
            seed,
            ratio,
            snr_db,
            methods,
            out,
            format,
        } => {
            let mut config = base_config(&source)?;
            if let Some(t) = trials {
                config.trials = t;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            if !ratio.is_empty() {
                config.ratios = ratio;
            }
            if let Some(s) = snr_db {
                config.signal.snr_db = s;
            }
            if !methods.is_empty() {
                config.methods = parse_methods(methods.iter().map(String::as_str))?;
            }
            if let Some(o) = out {
                config.out_dir = o;
            }
            if let Some(f) = format {
                config.format = f.into();
            }
            config.validate()?;

            let report = run_monte_carlo(&config)?;
            let written = emit_report(&report, config.format, &config.out_dir)?;
            for s in &report.scenarios {
                print_summary(s);
            }
            for p in &written {
                println!("wrote {}", p.display());
            }
            if report.error_count > 0 {
                eprintln!("{} trial(s) failed", report.error_count);
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            source,
            trial,
            ratio,
            method,
            out,
        } => {
            let mut config = base_config(&source)?;
            if let Some(m) = method {
                config.methods = parse_methods([m.as_str()])?;
            }
            if let Some(r) = ratio {
                config.ratios = vec![r];
            }
            config.validate()?;
            let opts = TrialOptions {
                keep_spectra: false,
                record_trace: true,
            };
            let (_, rows) = run_trial_with(&config, config.ratios[0], trial, opts)?;
            let text = trace_csv(&rows)?;
            match out {
                Some(path) => write_file(&path, &text)?,
                None => {
                    use std::io::Write;
                    // A closed pipe (e.g. `| head`) is not an error worth reporting.
                    let _ = std::io::stdout().write_all(text.as_bytes());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| cwss::Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| cwss::Error::io(path, e))
}

fn print_summary(s: &cwss::harness::RatioReport) {
    println!("ratio {:.2}, {} trials, {} errors", s.ratio, s.trials, s.error_count);
    for m in &s.methods {
        let cells: Vec<String> = m.mean_energy.iter().map(|e| format!("{e:.4}")).collect();
        println!("  {:<6} {}", m.method.name(), cells.join(" "));
    }
    if let Some(m) = s.method(Method::Evlbs) {
        println!("  evlbs exact-mask rate {:.3}", m.exact_mask_rate);
    }
}
