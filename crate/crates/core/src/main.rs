use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sfnr::eval::{
    parse_config_text, read_results_csv, run_experiment_detailed, summarize, write_results, ExperimentConfig,
    Preset, StreamSource, PRESETS,
};
use sfnr::stream::{DriftStreamSpec, TargetMode};
use sfnr::Error;

/// Streaming regression with a scale-free network of regressors.
#[derive(Debug, Parser)]
#[command(name = "sfnr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a `key = value` config file.
    Run(RunArgs),
    /// Write a synthetic drifting stream as CSV.
    Gen(GenArgs),
    /// List the built-in presets.
    ListPresets,
    /// Summarise a results CSV (final windowed RMSE, mean ± stdev per algorithm).
    Summarize {
        results: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Run a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed list, e.g. `0..20` or `1,2,5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    length: Option<u64>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Results CSV; written to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    drift_log: Option<PathBuf>,
    /// Use the full-scale preset lengths.
    #[arg(long)]
    full: bool,
    /// Record wall time in `elapsed_ns` (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "rhpr-1")]
    preset: String,
    #[arg(long)]
    length: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    target_mode: Option<TargetMode>,
    #[arg(long)]
    full: bool,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => generate(args),
        Command::ListPresets => {
            for p in PRESETS {
                println!("{}", p.summary_line());
            }
            Ok(())
        }
        Command::Summarize { results } => summarize_file(&results),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut pairs = parse_config_text(&text)?;
    let mut set = |k: &str, v: String| pairs.push((k.to_string(), v));
    if let Some(s) = args.seed {
        set("seed", s.to_string());
    }
    if let Some(s) = args.seeds {
        set("seeds", s);
    }
    if let Some(a) = args.algorithm {
        set("algorithm", a);
    }
    if let Some(l) = args.length {
        set("length", l.to_string());
    }
    if let Some(w) = args.window_size {
        set("window_size", w.to_string());
    }
    if let Some(m) = args.metric {
        set("metric", m);
    }
    if let Some(d) = args.delta {
        set("delta", d.to_string());
    }
    if let Some(k) = args.kmax {
        set("kmax", k.to_string());
    }
    if let Some(o) = &args.out {
        set("out", o.display().to_string());
    }
    if let Some(d) = &args.drift_log {
        set("drift_log", d.display().to_string());
    }
    if args.full {
        set("full", "true".into());
    }
    if args.timing {
        set("timing", "true".into());
    }
    let cfg = ExperimentConfig::from_pairs(&pairs)?;
    let output = run_experiment_detailed(&cfg)?;
    if cfg.out.is_none() {
        let stdout = io::stdout();
        write_results(&output.rows, stdout.lock())?;
    }
    for s in summarize(&output.rows) {
        eprintln!("{}", s.line());
    }
    Ok(())
}

fn generate(args: GenArgs) -> Result<(), Failure> {
    let preset = Preset::find(&args.preset)?;
    if !preset.is_synthetic() {
        return Err(Failure::Usage(format!("preset {} is not synthetic", preset.name)));
    }
    let mut pairs = vec![("preset".to_string(), preset.name.to_string())];
    if args.full {
        pairs.push(("full".into(), "true".into()));
    }
    let cfg = ExperimentConfig::from_pairs(&pairs)?;
    let StreamSource::Synthetic {
        dims,
        length,
        mut drifts,
        target,
    } = cfg.stream
    else {
        unreachable!("synthetic preset");
    };
    let length = match args.length {
        Some(l) => {
            let full = if args.full { preset.full_length } else { preset.desk_length };
            if l != full {
                drifts = preset.drifts_for(l);
            }
            l
        }
        None => length,
    };
    let spec = DriftStreamSpec::rotating(
        args.seed,
        args.dims.unwrap_or(dims),
        length,
        &drifts,
        args.target_mode.unwrap_or(target),
    )?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            write_stream(&spec, BufWriter::new(file), path)
        }
        None => write_stream(&spec, BufWriter::new(io::stdout().lock()), Path::new("<stdout>")),
    }
}

fn write_stream<W: Write>(spec: &DriftStreamSpec, out: W, path: &Path) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..spec.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(Error::from)?;
    for inst in spec.stream()? {
        let mut rec: Vec<String> = inst.x.iter().map(f64::to_string).collect();
        rec.push(inst.y.to_string());
        w.write_record(&rec).map_err(Error::from)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn summarize_file(path: &Path) -> Result<(), Failure> {
    let rows = read_results_csv(path)?;
    println!("algorithm,n_seeds,mean_final_rmse,stdev_final_rmse,mean_drifts");
    for s in summarize(&rows) {
        println!("{},{},{},{},{}", s.algorithm, s.n_seeds, s.mean, s.stdev, s.mean_drifts);
    }
    Ok(())
}
