use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use inverse_contagion::contagion::{
    build_true_model, perturb_model, random_model, read_bank, read_model, sample_bank, write_bank, write_model,
};
use inverse_contagion::graph::{generate_er, load_edge_list, Graph};
use inverse_contagion::harness::{run_experiment, ExperimentConfig};
use inverse_contagion::kernels::TaskKind;
use inverse_contagion::learner::{infer, train, TrainMethod, TrainerConfig};
use inverse_contagion::optimize::{generate_pairs, read_pairs, write_pairs};

#[derive(Parser)]
#[command(name = "invcon", version, about = "Learning diffusion decisions from query-decision pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphType {
    Er,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random directed graph as an edge list.
    GenGraph {
        #[arg(long = "type", value_enum, default_value = "er")]
        kind: GraphType,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load an edge list and print its summary.
    Load {
        #[arg(long)]
        edges: PathBuf,
    },
    /// Draw true diffusion parameters for a graph.
    GenModel {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb every parameter of a model within a relative band `q`.
    Perturb {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Model with uniformly random parameters.
    RandomModel {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate query-decision pairs from a model.
    GenPairs {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        count: usize,
        #[arg(long = "eval-bank", default_value_t = 200)]
        eval_bank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a bank of realizations.
    SampleBank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit realization weights on source-task pairs.
    Train {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        source: TaskKind,
        #[arg(long)]
        target: TaskKind,
        #[arg(long, default_value_t = 0.01)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        cstar: f64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value = "subgradient")]
        method: TrainMethod,
        #[arg(long, default_value_t = 0.1)]
        eta0: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide for one target-task query with trained weights.
    Predict {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        /// Comma-separated node ids.
        #[arg(long)]
        query: String,
        #[arg(long)]
        budget: usize,
    },
    /// Run a full experiment from a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Line-delimited JSON records; the table goes to stdout.
        #[arg(long)]
        report: PathBuf,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_graph(path: &Path) -> Result<Graph> {
    Ok(load_edge_list(open(path)?).with_context(|| format!("reading {}", path.display()))?.0)
}

fn load_model(path: &Path) -> Result<inverse_contagion::contagion::DiffusionModel> {
    read_model(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_bank(path: &Path) -> Result<inverse_contagion::contagion::RealizationBank> {
    read_bank(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn parse_ids(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().with_context(|| format!("bad node id {t:?}")))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraph { kind: GraphType::Er, nodes, edges, seed, out } => {
            let g = generate_er(nodes, edges, seed)?;
            create(&out)?.write_all(g.to_edge_list().as_bytes())?;
            println!("{} nodes, {} edges, hash {}", g.node_count(), g.edge_count(), g.content_hash());
        }
        Command::Load { edges } => {
            let (g, stats) = load_edge_list(open(&edges)?)?;
            println!("nodes {}", g.node_count());
            println!("edges {}", g.edge_count());
            println!("duplicates_dropped {}", stats.duplicates);
            println!("self_loops_dropped {}", stats.self_loops);
            println!("hash {}", g.content_hash());
        }
        Command::GenModel { graph, seed, out } => {
            let m = build_true_model(Arc::new(load_graph(&graph)?), seed)?;
            write_model(&m, create(&out)?)?;
        }
        Command::Perturb { model, q, seed, out } => {
            let m = perturb_model(&load_model(&model)?, q, seed)?;
            write_model(&m, create(&out)?)?;
        }
        Command::RandomModel { graph, seed, out } => {
            let m = random_model(Arc::new(load_graph(&graph)?), seed)?;
            write_model(&m, create(&out)?)?;
        }
        Command::GenPairs { model, task, count, eval_bank, seed, out } => {
            let pairs = generate_pairs(&load_model(&model)?, task, count, eval_bank, seed)?;
            write_pairs(&pairs, create(&out)?)?;
        }
        Command::SampleBank { model, k, seed, out } => {
            let bank = sample_bank(&load_model(&model)?, k, seed)?;
            write_bank(&bank, create(&out)?)?;
        }
        Command::Train { pairs, bank, source, target, c, cstar, epochs, method, eta0, tolerance, seed, out } => {
            let pairs = read_pairs(open(&pairs)?)?;
            let bank = load_bank(&bank)?;
            let cfg = TrainerConfig { c, cstar, method, epochs, eta0, tolerance, seed };
            let outcome = train(&pairs, &bank, source, target, &cfg)?;
            outcome.weights.write(create(&out)?)?;
            eprintln!("objective {} after {} steps", outcome.objective, outcome.steps);
        }
        Command::Predict { weights, bank, query, budget } => {
            let h = inverse_contagion::learner::HypothesisWeights::read(open(&weights)?)?;
            let bank = load_bank(&bank)?;
            let y = infer(&h, &bank, &parse_ids(&query)?, budget)?;
            let ids: Vec<String> = y.iter().map(ToString::to_string).collect();
            println!("{}", ids.join(","));
        }
        Command::Evaluate { config, report } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let r = run_experiment(&cfg)?;
            let mut w = create(&report)?;
            r.write_jsonl(&mut w)?;
            w.flush()?;
            print!("{}", r.render_table());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
