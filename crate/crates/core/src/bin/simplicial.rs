use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use simplicial::census::{census, to_distribution, ComplexKind, DistributionSeries};
use simplicial::fitkit::{fit_series, FitOptions, LogBase, Model};
use simplicial::graph::ParseOptions;
use simplicial::growth::{calibrate_pt, generate_pa_tf, CalibrationOptions, GrowthConfig, DEFAULT_MIN_SEED_NODES};
use simplicial::pipeline::{self, ExperimentConfig, FailureClass, PipelineError};

#[derive(Parser)]
#[command(name = "simplicial", version, about = "S*/T* simplicial-complex census, PA-TF growth and distribution fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    S,
    T,
}

impl From<Kind> for ComplexKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::S => ComplexKind::S,
            Kind::T => ComplexKind::T,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    /// Log-quadratic S* model
    S,
    /// Exponentially modified Gaussian
    Emg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    #[value(name = "10")]
    Ten,
    E,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Ten => LogBase::Ten,
            Base::E => LogBase::E,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Node count, edge count and average clustering of an edge list
    Summarize {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Adjacency-factor distribution as factor,count,freq CSV
    Census {
        path: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Write the distribution here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump per-edge or per-triangle factors
        #[arg(long)]
        units: Option<PathBuf>,
    },
    /// Grow a PA-TF network and write it as an edge list
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        pt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the TF probability that reaches a target average clustering
    Calibrate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[arg(long, default_value_t = 5)]
        pilots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a model to a factor,count,freq distribution CSV
    Fit {
        path: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "10")]
        log_base: Base,
        /// Write x,model rows over the fitted support
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Full real-vs-grown comparison over one or more edge lists
    Experiment {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[arg(long, default_value_t = 5)]
        pilots: usize,
        #[arg(long, value_enum, default_value = "10")]
        log_base: Base,
        #[arg(long, default_value = "experiment_out")]
        out: PathBuf,
    },
}

fn exit_code(class: FailureClass) -> ExitCode {
    match class {
        FailureClass::Usage => ExitCode::from(1),
        FailureClass::Data => ExitCode::from(2),
        FailureClass::Numeric => ExitCode::from(3),
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), PipelineError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| PipelineError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| PipelineError::Write {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<ExitCode, PipelineError> {
    match command {
        Command::Summarize { path, format } => {
            let (graph, _) = pipeline::load_graph(&path, &ParseOptions::default())?;
            let row = pipeline::summarize(&graph);
            let text = match format {
                Format::Json => json(&row),
                Format::Csv => format!(
                    "nodes,edges,avg_cc\n{},{},{}\n",
                    row.nodes,
                    row.edges,
                    row.avg_cc.map(|c| format!("{c:?}")).unwrap_or_default()
                ),
            };
            write_out(None, &text)?;
            if let Some(err) = row.error {
                eprintln!("error: {}: {err}", path.display());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Census { path, kind, out, units } => {
            let (graph, _) = pipeline::load_graph(&path, &ParseOptions::default())?;
            let result = census(&graph, kind.into());
            if result.is_empty() {
                let what = match result.kind {
                    ComplexKind::S => "no edges",
                    ComplexKind::T => "no triangles",
                };
                eprintln!("error: {}: {what}", path.display());
                return Ok(ExitCode::from(2));
            }
            if let Some(units_path) = &units {
                let mut buf = Vec::new();
                result.write_units(&mut buf).expect("in-memory write");
                write_out(Some(units_path), &String::from_utf8_lossy(&buf))?;
            }
            let series = to_distribution(&result)?;
            write_out(out.as_ref(), &series.to_csv_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate { n, m, n0, pt, seed, out } => {
            let cfg = GrowthConfig {
                n,
                n0: n0.unwrap_or(m.max(DEFAULT_MIN_SEED_NODES)),
                m,
                p_t: pt,
                seed,
            };
            let graph = generate_pa_tf(&cfg)?;
            match out {
                Some(p) => pipeline::save_graph(&graph, &p)?,
                None => write_out(None, &simplicial::graph::to_edge_list_string(&graph))?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate {
            n,
            m,
            target,
            tolerance,
            pilots,
            seed,
        } => {
            let opts = CalibrationOptions {
                pilots,
                ..CalibrationOptions::new(target, tolerance, seed)
            };
            let result = calibrate_pt(n, m, &opts)?;
            write_out(None, &json(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            path,
            model,
            log_base,
            curve,
        } => {
            let text = fs::read_to_string(&path).map_err(|source| PipelineError::Read {
                path: path.display().to_string(),
                source,
            })?;
            let series = DistributionSeries::parse_csv(&text)
                .map_err(|msg| PipelineError::Usage(format!("{}: {msg}", path.display())))?;
            let model = match model {
                ModelArg::S => Model::SModel,
                ModelArg::Emg => Model::Emg,
            };
            let opts = FitOptions {
                log_base: log_base.into(),
                ..FitOptions::default()
            };
            let result = fit_series(model, &series, &opts)?;
            if let Some(p) = &curve {
                let mut buf = Vec::new();
                result.write_curve_csv(&mut buf).expect("in-memory write");
                write_out(Some(p), &String::from_utf8_lossy(&buf))?;
            }
            write_out(None, &json(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment {
            paths,
            replicas,
            seed,
            tolerance,
            pilots,
            log_base,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(paths, out);
            cfg.replicas = replicas;
            cfg.seed = seed;
            cfg.tolerance = tolerance;
            cfg.pilots = pilots;
            cfg.fit.log_base = log_base.into();
            let report = pipeline::run_experiment(&cfg)?;
            write_out(None, &report.table2_csv())?;
            for failure in report.failures() {
                eprintln!("error: stage {} failed: {}", failure.stage, failure.message);
            }
            Ok(report.worst_failure().map_or(ExitCode::SUCCESS, exit_code))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}
