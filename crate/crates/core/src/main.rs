use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use csp_core::harness::{
    dependency_report, format_dependency, format_table, load_instance, read_csv, run_experiment, write_csv,
    ExperimentSpec,
};
use csp_core::instances::GeneratorSpec;
use csp_core::model::to_native_pretty;
use csp_core::propagation::{RevisionPolicy, Scheme};
use csp_core::search::{solve, Mode, RestartPolicy, SearchConfig, SearchResult, ValueOrder};
use csp_core::vorder::VOHeuristic;

#[derive(Parser)]
#[command(name = "csp", version, about = "MAC constraint solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file or generator spec.
    Solve {
        instance: String,
        #[arg(long = "var", default_value = "dom/wdeg")]
        var_heuristic: String,
        #[arg(long, default_value = "var")]
        scheme: String,
        #[arg(long = "rev", default_value = "fifo")]
        revision: String,
        #[arg(long, default_value = "geo:10:1.5")]
        restart: String,
        #[arg(long = "values", default_value = "lex")]
        values: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds.
        #[arg(long, default_value_t = 3600.0)]
        timeout: f64,
        #[arg(long, default_value = "first")]
        mode: String,
    },
    /// Run an experiment spec and write CSV.
    Bench {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print an aligned table.
        #[arg(long)]
        table: bool,
    },
    /// Analyse a results CSV.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
    /// Write a generated instance in the native format.
    Gen {
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReportKind {
    /// Node-count variance across fifo, dom and v_dom/wdeg.
    Variance { results: PathBuf },
    /// Print results as an aligned table.
    Table { results: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            instance,
            var_heuristic,
            scheme,
            revision,
            restart,
            values,
            seed,
            timeout,
            mode,
        } => {
            if !(timeout >= 0.0) || !timeout.is_finite() {
                bail!("timeout must be a non-negative number of seconds");
            }
            let cfg = SearchConfig {
                var_heuristic: var_heuristic.parse::<VOHeuristic>()?,
                scheme: scheme.parse::<Scheme>().map_err(anyhow::Error::msg)?,
                revision: revision.parse::<RevisionPolicy>().map_err(anyhow::Error::msg)?,
                restart: restart.parse::<RestartPolicy>()?,
                value_order: values.parse::<ValueOrder>().map_err(anyhow::Error::msg)?,
                mode: mode.parse::<Mode>().map_err(anyhow::Error::msg)?,
                timeout: Duration::from_secs_f64(timeout),
                ..SearchConfig::default()
            }
            .with_seed(seed);
            let p = load_instance(&instance, Path::new("."))?;
            let out = solve(&p, &cfg)?;
            let s = out.stats;
            println!("result {}", out.result.label());
            if let SearchResult::Sat(sol) = &out.result {
                if cfg.mode == Mode::First {
                    let parts: Vec<String> = p
                        .variables()
                        .map(|x| format!("{}={}", p.variable_name(x), sol[x.index()]))
                        .collect();
                    println!("solution {}", parts.join(" "));
                }
            }
            if cfg.mode == Mode::Count {
                println!("solutions {}", out.solutions);
            }
            println!(
                "time_ms {:.1} nodes {} checks {} revisions {} dwos {} restarts {}",
                s.time.as_secs_f64() * 1000.0,
                s.nodes,
                s.checks,
                s.revisions,
                s.dwos,
                s.restarts
            );
            Ok(ExitCode::from(match out.result {
                SearchResult::Sat(_) => 0,
                SearchResult::Unsat => 1,
                SearchResult::Timeout => 2,
            }))
        }
        Command::Bench { spec, out, table } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let es = ExperimentSpec::from_json(&text)?;
            let base = spec.parent().unwrap_or(Path::new("."));
            let rows = run_experiment(&es, base)?;
            match out.or(es.output.clone()) {
                Some(path) => {
                    let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&rows, f)?;
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            if table {
                print!("{}", format_table(&rows));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { kind } => {
            let (path, variance) = match &kind {
                ReportKind::Variance { results } => (results, true),
                ReportKind::Table { results } => (results, false),
            };
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let rows = read_csv(f)?;
            if variance {
                print!("{}", format_dependency(&dependency_report(&rows)));
            } else {
                print!("{}", format_table(&rows));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { spec, out } => {
            let p = spec.parse::<GeneratorSpec>()?.generate()?;
            let text = to_native_pretty(&p);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => {
                    let mut out = std::io::stdout().lock();
                    if let Err(e) = writeln!(out, "{text}") {
                        if e.kind() != std::io::ErrorKind::BrokenPipe {
                            return Err(e.into());
                        }
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
