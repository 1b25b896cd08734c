use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use lidl::baselines::write_estimates_csv;
use lidl::density::build_backend;
use lidl::harness::{
    configure_threads, run_bench, sweep_delta, write_sweep_csv, MethodConfig, SpecSource, Suite,
    SweepConfig, SweepWindow,
};
use lidl::lidl::{lidl_estimate, LidlConfig, QuerySelection, ScheduleKind};
use lidl::manifolds::{generate, read_dataset_csv, write_dataset_csv, ManifoldSpec};
use lidl::Error;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "lidl", version, about = "Local intrinsic dimension estimation from approximate likelihoods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lidl,
    Mle,
    Twonn,
    Lpca,
}

impl Method {
    fn tag(self) -> &'static str {
        match self {
            Method::Lidl => "lidl",
            Method::Mle => "mle",
            Method::Twonn => "twonn",
            Method::Lpca => "lpca",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset to CSV.
    Generate {
        /// Preset name or inline spec JSON.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate LID at query points of a dataset CSV.
    Estimate {
        #[arg(long, value_enum)]
        method: Method,
        /// Method parameters as JSON (inline or a file path).
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        data: PathBuf,
        /// Manifold spec of the data, needed by the analytic oracles.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// LIDL estimate as a function of δ on a preset.
    Sweep {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        delta_lo: f64,
        #[arg(long)]
        delta_hi: f64,
        #[arg(long, default_value_t = 20)]
        grid_n: usize,
        /// Ratio of a centred δ pair; the default is the pair (δ, 1.05δ).
        #[arg(long)]
        centred_ratio: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Deserialize)]
struct EstimateConfig {
    #[serde(flatten)]
    method: MethodConfig,
    #[serde(default = "all_queries")]
    queries: QuerySelection,
    #[serde(default)]
    seed: u64,
}

fn all_queries() -> QuerySelection {
    QuerySelection::All
}

enum Failure {
    Config(anyhow::Error),
    AllRunsFailed(String),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::UnknownPreset(_) | Error::Json(_) => {
                Failure::Config(e.into())
            }
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn read_json_arg(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if !arg.trim_start().starts_with('{') && path.exists() {
        std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config)
    } else {
        Ok(arg.to_string())
    }
}

fn parse_spec(arg: &str) -> Result<ManifoldSpec, Failure> {
    let text = read_json_arg(arg)?;
    let source = if text.trim_start().starts_with('{') {
        SpecSource::Inline(ManifoldSpec::from_json(&text)?)
    } else {
        SpecSource::Preset(text.trim().to_string())
    };
    Ok(source.resolve()?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Generate { spec, n, seed, out } => {
            let spec = parse_spec(&spec)?;
            let data = generate(&spec, n, seed)?;
            write_dataset_csv(&data, create(&out)?)?;
        }
        Command::Estimate {
            method,
            config,
            data,
            spec,
            out,
        } => {
            let text = match config {
                Some(c) => read_json_arg(&c)?,
                None => "{}".into(),
            };
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
            let obj = value
                .as_object_mut()
                .ok_or_else(|| Failure::Config(anyhow::anyhow!("--config must be a JSON object")))?;
            obj.insert("method".into(), method.tag().into());
            let config: EstimateConfig = serde_json::from_value(value).map_err(Error::from)?;
            let file = File::open(&data).with_context(|| format!("opening {}", data.display()));
            let mut dataset = read_dataset_csv(file.map_err(Failure::Config)?)?;
            if let Some(s) = spec {
                dataset.spec = Some(parse_spec(&s)?);
            }
            let queries = config.queries.resolve(&dataset, config.seed)?;
            if let Some(baseline) = config.method.baseline() {
                let outcomes = baseline.estimate(&dataset, queries.points.view())?;
                write_estimates_csv(baseline.id(), &outcomes, create(&out)?)?;
                if outcomes.iter().all(|o| o.is_err()) {
                    return Err(Failure::AllRunsFailed("every query failed".into()));
                }
                return Ok(());
            }
            let MethodConfig::Lidl { schedule, backend, ensemble } = &config.method else {
                unreachable!("every other method is a baseline")
            };
            let backend = match (&dataset.spec, backend) {
                (_, Some(b)) => b.clone(),
                (Some(s), None) => config.method.lidl_backend(s)?,
                (None, None) => return Err(Error::InvalidSpec("LIDL without a backend needs --spec".into()).into()),
            };
            let mut lc = LidlConfig::new(schedule.clone(), backend);
            lc.ensemble = *ensemble;
            lc.seed = config.seed;
            let built = build_backend(&lc.backend);
            let report = lidl_estimate(built.as_ref(), &dataset, queries.points.view(), &lc)?;
            report.write_csv(create(&out)?)?;
            if report.estimates().next().is_none() {
                return Err(Failure::AllRunsFailed("every query failed".into()));
            }
        }
        Command::Sweep {
            preset,
            delta_lo,
            delta_hi,
            grid_n,
            centred_ratio,
            n,
            queries,
            runs,
            seed,
            out,
        } => {
            let mut config = SweepConfig::new(
                SpecSource::Preset(preset),
                ScheduleKind::LogSpaced {
                    lo: delta_lo,
                    hi: delta_hi,
                    n: grid_n,
                },
            );
            config.n = n;
            config.runs = runs;
            config.seed = seed;
            config.queries = QuerySelection::Subsample { n: queries };
            if let Some(ratio) = centred_ratio {
                config.window = SweepWindow::Centred { ratio };
            }
            let report = sweep_delta(&config)?;
            write_sweep_csv(&report, create(&out)?)?;
            if report.points.iter().all(|p| p.count == 0) {
                return Err(Failure::AllRunsFailed("every sweep point failed".into()));
            }
        }
        Command::Bench { suite, out_dir } => {
            let suite: Suite = suite.parse()?;
            let outcome = run_bench(suite, &out_dir)?;
            if outcome.all_failed() {
                return Err(Failure::AllRunsFailed("every benchmark run failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::AllRunsFailed(msg)) => {
            eprintln!("all runs failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
