use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::baselines::{hd_predict, nb_predict, nb_train, random_predict};
use super::config::{Empirical, ExperimentConfig, GraphSource};
use super::ratio::QueryEvaluator;
use super::report::{summarize, CellKey, EvaluationReport, Method, QueryRecord, TrainingRecord};
use crate::contagion::{build_true_model, perturb_model, random_model, sample_bank, DiffusionModel};
use crate::error::{Error, Result};
use crate::graph::{generate_er, load_edge_list, Graph};
use crate::kernels::BankContexts;
use crate::learner::{greedy_decision, train};
use crate::optimize::{generate_pairs, QueryDecisionPair};
use crate::rng::{derive_indexed, derive_seed, stream};

fn context(what: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Domain(format!("{what}: {e}"))
}

/// Builds or loads the experiment graph.
pub fn build_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match cfg.graph_source()? {
        GraphSource::Er { nodes, edges } => generate_er(nodes, edges, derive_seed(cfg.master_seed, "graph")),
        GraphSource::File(p) => Ok(load_edge_list(BufReader::new(File::open(&p)?))?.0),
    }
}

/// Empirical model for one repetition.
pub fn empirical_model(truth: &DiffusionModel, spec: Empirical, seed: u64) -> Result<DiffusionModel> {
    match spec {
        Empirical::Perturbed(q) => perturb_model(truth, q, seed),
        Empirical::Random => random_model(truth.graph().clone(), seed),
    }
}

struct Repetition {
    queries: Vec<QueryRecord>,
    training: Vec<TrainingRecord>,
    timings: Vec<(String, f64)>,
}

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    truth: &'a DiffusionModel,
    source_pool: &'a [QueryDecisionPair],
    target_pool: &'a [QueryDecisionPair],
    specs: &'a [Empirical],
}

fn shuffled(len: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut stream(seed, 0));
    idx
}

fn run_repetition(sh: &Shared, rep: usize) -> Result<Repetition> {
    let cfg = sh.cfg;
    let seed = derive_indexed(derive_seed(cfg.master_seed, "repetition"), rep as u64);
    let g = sh.truth.graph();
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |label: String, timings: &mut Vec<(String, f64)>| {
        timings.push((format!("rep {rep} {label}"), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let max_m = *cfg.train_sizes.iter().max().expect("validated");
    let train_all: Vec<&QueryDecisionPair> = shuffled(sh.source_pool.len(), derive_seed(seed, "train-split"))
        .into_iter()
        .take(max_m)
        .map(|i| &sh.source_pool[i])
        .collect();
    let test_idx: Vec<usize> =
        shuffled(sh.target_pool.len(), derive_seed(seed, "test-split")).into_iter().take(cfg.test_size).collect();
    let eval_bank = sample_bank(sh.truth, cfg.eval_samples, derive_seed(seed, "eval-bank"))?;
    let evaluators: Vec<QueryEvaluator> = test_idx
        .par_iter()
        .map(|&i| {
            let p = &sh.target_pool[i];
            QueryEvaluator::new(&eval_bank, cfg.target, &p.query, &p.decision)
        })
        .collect::<Result<_>>()?;
    lap("evaluation bank".into(), &mut timings);

    let mut queries = Vec::new();
    let mut record = |key: &CellKey, decisions: Vec<Vec<usize>>| -> Result<()> {
        for (j, y) in decisions.iter().enumerate() {
            let r = evaluators[j].ratio(y)?;
            queries.push(QueryRecord::new(rep, key.clone(), test_idx[j], r));
        }
        Ok(())
    };
    let budgets: Vec<usize> = test_idx.iter().map(|&i| sh.target_pool[i].decision.len()).collect();

    if cfg.baselines {
        let hd = budgets.iter().map(|&k| hd_predict(g, k)).collect::<Result<_>>()?;
        record(&CellKey { method: Method::Hd, empirical: None, k: None, m: None }, hd)?;
        let random_seed = derive_seed(seed, "random-baseline");
        let random = test_idx
            .iter()
            .zip(&budgets)
            .map(|(&i, &k)| random_predict(g, k, derive_indexed(random_seed, i as u64)))
            .collect::<Result<_>>()?;
        record(&CellKey { method: Method::Random, empirical: None, k: None, m: None }, random)?;
        for &m in &cfg.train_sizes {
            let train: Vec<QueryDecisionPair> = train_all[..m].iter().map(|&p| p.clone()).collect();
            let nb = nb_train(&train, g.node_count())?;
            let nb_out = test_idx
                .iter()
                .zip(&budgets)
                .map(|(&i, &k)| nb_predict(&nb, &sh.target_pool[i].query, k))
                .collect::<Result<_>>()?;
            record(&CellKey { method: Method::Nb, empirical: None, k: None, m: Some(m) }, nb_out)?;
        }
        lap("baselines".into(), &mut timings);
    }

    let mut training = Vec::new();
    let k_max = *cfg.k_values.iter().max().expect("validated");
    for (d, &spec) in sh.specs.iter().enumerate() {
        let label = spec.to_string();
        let model = empirical_model(sh.truth, spec, derive_indexed(derive_seed(seed, "empirical-model"), d as u64))?;
        let full = sample_bank(&model, k_max, derive_indexed(derive_seed(seed, "empirical-bank"), d as u64))?;
        for &k in &cfg.k_values {
            let bank = full.prefix(k)?;
            let contexts: Vec<BankContexts> = test_idx
                .par_iter()
                .map(|&i| BankContexts::new(&bank, cfg.target, &sh.target_pool[i].query))
                .collect::<Result<_>>()?;
            let decide = |w: &[f64]| -> Result<Vec<Vec<usize>>> {
                contexts.par_iter().zip(&budgets).map(|(ctx, &b)| greedy_decision(ctx, w, b)).collect()
            };
            let ones = vec![1.0; k];
            let key = CellKey { method: Method::SiInitial, empirical: Some(label.clone()), k: Some(k), m: None };
            record(&key, decide(&ones)?)?;
            for &m in &cfg.train_sizes {
                let train_pairs: Vec<QueryDecisionPair> = train_all[..m].iter().map(|&p| p.clone()).collect();
                let trainer = cfg.trainer(derive_seed(seed, &format!("trainer-{d}-{k}-{m}")));
                let out = train(&train_pairs, &bank, cfg.source, cfg.target, &trainer)
                    .map_err(context(&format!("training {label} K={k} m={m}")))?;
                training.push(TrainingRecord {
                    repetition: rep,
                    empirical: label.clone(),
                    k,
                    m,
                    objective_initial: out.objective_trace[0],
                    objective_final: out.objective,
                    steps: out.steps,
                });
                let key = CellKey { method: Method::SiFinal, empirical: Some(label.clone()), k: Some(k), m: Some(m) };
                record(&key, decide(out.weights.weights())?)?;
                lap(format!("{label} K={k} m={m}"), &mut timings);
            }
        }
    }
    Ok(Repetition { queries, training, timings })
}

/// Runs every repetition of the configured experiment. The result depends only
/// on the configuration (including the master seed).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = Vec::new();
    let g = Arc::new(build_graph(cfg).map_err(context("graph"))?);
    let truth = build_true_model(g.clone(), derive_seed(cfg.master_seed, "true-model"))?;
    let specs = cfg.empirical_specs()?;
    log::info!("graph: {} nodes, {} edges", g.node_count(), g.edge_count());
    let source_pool =
        generate_pairs(&truth, cfg.source, cfg.source_pool, cfg.pair_eval_bank, derive_seed(cfg.master_seed, "source-pool"))
            .map_err(context("source pool"))?;
    let target_pool =
        generate_pairs(&truth, cfg.target, cfg.target_pool, cfg.pair_eval_bank, derive_seed(cfg.master_seed, "target-pool"))
            .map_err(context("target pool"))?;
    timings.push(("pair pools".to_string(), start.elapsed().as_secs_f64()));
    log::info!("pools ready after {:.1}s", start.elapsed().as_secs_f64());

    let shared = Shared { cfg, truth: &truth, source_pool: &source_pool, target_pool: &target_pool, specs: &specs };
    let mut queries = Vec::new();
    let mut training = Vec::new();
    for rep in 0..cfg.repetitions {
        let r = run_repetition(&shared, rep).map_err(context(&format!("repetition {rep}")))?;
        log::info!("repetition {rep} done after {:.1}s", start.elapsed().as_secs_f64());
        queries.extend(r.queries);
        training.extend(r.training);
        timings.extend(r.timings);
    }
    timings.push(("total".to_string(), start.elapsed().as_secs_f64()));
    Ok(EvaluationReport {
        config: cfg.clone(),
        graph_hash: g.content_hash(),
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        true_model_hash: truth.content_hash(),
        cells: summarize(&queries, cfg.repetitions),
        training,
        queries,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 5,
            graph: "er:60:100".into(),
            source: crate::kernels::TaskKind::Dc,
            target: crate::kernels::TaskKind::De,
            k_values: vec![3, 6],
            train_sizes: vec![8],
            test_size: 6,
            source_pool: 12,
            target_pool: 10,
            pair_eval_bank: 20,
            eval_samples: 30,
            repetitions: 2,
            epochs: 2,
            ..Default::default()
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        let (mut ja, mut jb) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut ja).unwrap();
        b.write_jsonl(&mut jb).unwrap();
        assert_eq!(ja, jb);
        // 2 reps × 6 queries × (hd + random + nb + 2 dists × 2 K × 2 weightings)
        assert_eq!(a.queries.len(), 2 * 6 * (3 + 8));
        assert!(a.queries.iter().all(|q| q.ratio.is_none_or(|r| r >= 0.0)));
        assert!(a.cell(Method::SiFinal, Some("M_0.1"), Some(6), Some(8)).is_some());
        assert!(a.cell(Method::SiInitial, Some("M_inf"), Some(3), None).is_some());
        assert!(a.render_table().contains("si-final"));
    }

    #[test]
    fn same_task_configuration_runs() {
        let cfg = ExperimentConfig {
            source: crate::kernels::TaskKind::Dc,
            target: crate::kernels::TaskKind::Dc,
            repetitions: 1,
            baselines: false,
            empirical: vec!["q0.5".into()],
            ..small()
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.cells.len(), 4);
    }
}
