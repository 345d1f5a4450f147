use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use chronos::config::Config;
use chronos::embedding::VectorIndex;
use chronos::error::Error;
use chronos::harness::{aggregate, load_dataset, Ablation, Engine, Method, Report, RunConfig, Trace};
use chronos::store::QuadrupleStore;

#[derive(Parser)]
#[command(name = "chronos", version, about = "Time-aware retrieval and temporal QA over evolving facts")]
struct Cli {
    /// TOML config file. Defaults to ./chronos.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set retrieval.top_n=6`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL file of quadruples and write the canonical store.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Embed every quadruple in a store and save the vectors.
    Index {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one question.
    Ask {
        #[arg(long)]
        question: String,
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "chronos")]
        method: String,
        #[arg(long = "ablate", value_name = "FLAG")]
        ablations: Vec<String>,
        /// Print the analysis, ranked candidates with score terms, and views.
        #[arg(long)]
        explain: bool,
        /// Write the final event graph as JSON.
        #[arg(long, value_name = "PATH")]
        dump_graph: Option<PathBuf>,
    },
    /// Run a method over a dataset and save a report (JSON plus CSV).
    Eval {
        #[arg(long)]
        method: String,
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        source: Source,
        #[arg(long = "ablate", value_name = "FLAG")]
        ablations: Vec<String>,
        /// Write one graph JSON per item into this directory.
        #[arg(long, value_name = "DIR")]
        dump_graphs: Option<PathBuf>,
        /// Report path. Defaults to runs/<label>.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run name shown in comparison tables. Defaults to the label.
        #[arg(long)]
        name: Option<String>,
    },
    /// Compare saved reports.
    Report {
        #[arg(long = "compare", value_name = "REPORT", required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Also show the item-weighted overall accuracy.
        #[arg(long)]
        overall_both: bool,
        /// Print JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Store JSONL.
    #[arg(long)]
    store: PathBuf,
    /// Saved index; rebuilt from the store when omitted.
    #[arg(long)]
    index: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let default = Path::new("chronos.toml");
    let file = cli
        .config
        .as_deref()
        .or_else(|| default.exists().then_some(default));
    Config::from_env(file, &cli.overrides)
}

fn engine(config: &Config, source: &Source) -> Result<Engine, Error> {
    let store = Arc::new(QuadrupleStore::load(&source.store)?);
    let embedder = config.embedder()?;
    let index = match &source.index {
        Some(path) => VectorIndex::load(path, store, embedder)?,
        None => VectorIndex::build(store, embedder)?,
    };
    Ok(Engine::new(Arc::new(index), config.gateway()?))
}

fn run_config(config: &Config, method: &str, ablations: &[String]) -> Result<RunConfig, Error> {
    let mut rc = config.run_config(method.parse::<Method>()?)?;
    for a in ablations {
        rc.ablations.insert(a.parse::<Ablation>()?);
    }
    rc.validate()?;
    Ok(rc)
}

fn explain(trace: &Trace) {
    if let Some(a) = &trace.analysis {
        println!("entities: {}", a.entities.join(" | "));
        println!("query: {}", a.time_agnostic_query);
        println!(
            "window: {}{}",
            a.window,
            if a.window_defaulted { " (default)" } else { "" }
        );
    }
    if !trace.retrieved.is_empty() {
        println!("\nretrieved:");
        println!("  {:>3}  {:>8}  {:>7}  {:>8}  {:>8}  event", "pos", "sim", "delta", "time", "score");
        for c in &trace.retrieved {
            println!(
                "  {:>3}  {:>8.4}  {:>7}  {:>8.4}  {:>8.4}  {}",
                c.position, c.sim, c.delta_days, c.time_score, c.score, c.quad
            );
        }
    }
    if !trace.documents.is_empty() {
        println!("\ndocuments:");
        for d in &trace.documents {
            println!("  {d}");
        }
    }
    if trace.history_degraded {
        println!("\nhistory reconstruction failed; continued without it");
    }
    if let Some(f) = &trace.follow_up {
        println!("\nfollow-up query: {f}");
    }
    if let Some(v) = &trace.views {
        if !v.temporal_view.is_empty() {
            println!("\n{}", v.temporal_view);
        }
        for text in v.entity_views.values() {
            println!("\n{text}");
        }
    }
    println!();
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Ingest { input, store } => {
            let s = QuadrupleStore::load(input)?;
            s.save(store)?;
            println!("wrote {} quadruples to {}", s.len(), store.display());
        }
        Command::Index { store, out } => {
            let config = load_config(&cli)?;
            let s = Arc::new(QuadrupleStore::load(store)?);
            let index = VectorIndex::build(s, config.embedder()?)?;
            index.save(out)?;
            println!(
                "indexed {} quadruples ({} provider, dim {}) into {}",
                index.len(),
                index.provider().name(),
                index.provider().dim(),
                out.display()
            );
        }
        Command::Ask {
            question,
            source,
            method,
            ablations,
            explain: show,
            dump_graph,
        } => {
            let config = load_config(&cli)?;
            let rc = run_config(&config, method, ablations)?;
            let engine = engine(&config, source)?;
            let mut trace = Trace::default();
            let result = engine.run(question, question, &rc, &mut trace);
            if *show {
                explain(&trace);
            }
            if let (Some(path), Some(graph)) = (dump_graph, &trace.graph) {
                std::fs::write(path, graph.serialize() + "\n").map_err(|e| {
                    Error::Config(format!("{}: {e}", path.display()))
                })?;
            }
            println!("{}", result?);
        }
        Command::Eval {
            method,
            dataset,
            source,
            ablations,
            dump_graphs,
            out,
            name,
        } => {
            let config = load_config(&cli)?;
            let rc = run_config(&config, method, ablations)?;
            let items = load_dataset(dataset)?;
            let engine = engine(&config, source)?;
            let label = rc.label();
            let report = engine.evaluate(
                name.as_deref().unwrap_or(&label),
                &items,
                &rc,
                dump_graphs.as_deref(),
            )?;
            let path = out
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs").join(format!("{label}.json")));
            let csv = report.save(&path)?;
            print!("{}", aggregate(std::slice::from_ref(&report), false).to_text());
            let failed = report.records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} item(s) failed; see the error column");
            }
            println!("report: {} and {}", path.display(), csv.display());
        }
        Command::Report {
            runs,
            overall_both,
            json,
        } => {
            let reports = runs
                .iter()
                .map(Report::load)
                .collect::<Result<Vec<_>, _>>()?;
            let table = aggregate(&reports, *overall_both);
            if *json {
                println!("{}", table.to_json());
            } else {
                print!("{}", table.to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
