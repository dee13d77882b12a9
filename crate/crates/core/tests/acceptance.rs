//! Acceptance criteria 1-11. Runs as a plain binary so every criterion prints
//! one PASS/FAIL line; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use inverse_contagion::contagion::{
    sample_bank, simulate, CascadeSeeds, DiffusionModel, EdgeParams, ModelDescriptor, Realization, RealizationBank,
};
use inverse_contagion::graph::{generate_er, Graph, NodeId};
use inverse_contagion::harness::{run_experiment, EvaluationReport, ExperimentConfig, Method};
use inverse_contagion::kernels::{kernel, BankContexts, BankObjective, TaskKind};
use inverse_contagion::learner::{
    empirical_risk, gamma_value, hypothesis_score, infer, pac_bound, train, HypothesisWeights, TrainerConfig,
};
use inverse_contagion::optimize::{generate_pairs, greedy_max, GreedyMode, QueryDecisionPair};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn model_on(g: Graph, p: f64, seed: u64) -> DiffusionModel {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let params = (0..g.edge_count())
        .map(|_| EdgeParams { p, shape: r.random_range(0.5..3.0), scale: r.random_range(0.2..2.0) })
        .collect();
    DiffusionModel::new(Arc::new(g), params, ModelDescriptor::Explicit).unwrap()
}

fn small_bank(n: usize, edges: usize, k: usize, seed: u64) -> RealizationBank {
    let g = generate_er(n, edges, seed).unwrap();
    sample_bank(&model_on(g, 0.6, seed ^ 7), k, seed ^ 11).unwrap()
}

fn random_subset(r: &mut impl Rng, n: usize, max: usize) -> Vec<NodeId> {
    let k = r.random_range(0..=max.min(n));
    let mut v = sample(r, n, k).into_vec();
    v.sort_unstable();
    v
}

fn subsets(n: usize, max: usize) -> Vec<Vec<NodeId>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

fn task_of(i: u64) -> TaskKind {
    if i.is_multiple_of(2) {
        TaskKind::De
    } else {
        TaskKind::Dc
    }
}

fn greedy_guarantee() -> Check {
    let start = Instant::now();
    let bound = 1.0 - (-1.0f64).exp();
    let (mut instances, mut violations, mut worst) = (0, 0, f64::INFINITY);
    for i in 0..240u64 {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + i);
        let n = r.random_range(3..=8);
        let bank = small_bank(n, r.random_range(n..=(3 * n).min(n * (n - 1))), 1, i);
        let real = &bank.realizations()[0];
        let task = task_of(i);
        let x = random_subset(&mut r, n, n).into_iter().collect::<Vec<_>>();
        let x = if x.is_empty() { vec![0] } else { x };
        let budget = r.random_range(1..=3);
        let ctx = BankContexts::new(&bank, task, &x).unwrap();
        let obj = BankObjective::new(&ctx, &[1.0]).unwrap();
        let ground: Vec<NodeId> = (0..n).collect();
        let y = greedy_max(&obj, &ground, budget, GreedyMode::Lazy).selected;
        let got = kernel(real, task, &x, &y) as f64;
        let best = subsets(n, budget).iter().map(|s| kernel(real, task, &x, s)).max().unwrap() as f64;
        instances += 1;
        if got < bound * best - 1e-12 {
            violations += 1;
        }
        if best > 0.0 {
            worst = worst.min(got / best);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        violations == 0 && secs < 60.0,
        format!("{instances} instances, {violations} violations, worst ratio {worst:.4}, {secs:.1}s"),
    )
}

fn kernel_structure() -> Check {
    let start = Instant::now();
    let (mut tuples, mut mono, mut sub) = (0, 0, 0);
    for i in 0..600u64 {
        let mut r = ChaCha8Rng::seed_from_u64(5000 + i);
        let n = r.random_range(3..=10);
        let bank = small_bank(n, r.random_range(n..=(3 * n).min(n * (n - 1))), 1, 77 + i);
        let real = &bank.realizations()[0];
        let task = task_of(i);
        let x = random_subset(&mut r, n, 4);
        let y_big = random_subset(&mut r, n, n - 1);
        let y: Vec<NodeId> = y_big.iter().copied().filter(|_| r.random_bool(0.5)).collect();
        let outside: Vec<NodeId> = (0..n).filter(|v| !y_big.contains(v)).collect();
        let v = outside[r.random_range(0..outside.len())];
        let f = |s: &[NodeId]| kernel(real, task, &x, s) as i64;
        let with = |s: &[NodeId]| {
            let mut t = s.to_vec();
            t.push(v);
            f(&t)
        };
        tuples += 1;
        if f(&y) > f(&y_big) || f(&y) > with(&y) {
            mono += 1;
        }
        if with(&y) - f(&y) < with(&y_big) - f(&y_big) {
            sub += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        mono == 0 && sub == 0 && secs < 60.0,
        format!("{tuples} tuples, {mono} monotonicity and {sub} diminishing-returns violations, {secs:.1}s"),
    )
}

fn fixed_realization(n: usize, edges: &[(usize, usize, f64)]) -> Realization {
    let g = Arc::new(Graph::from_edges(n, edges.iter().map(|&(u, v, _)| (u, v))).unwrap().0);
    let live = edges.iter().map(|&(u, v, t)| (g.find_edge(u, v).unwrap(), t)).collect();
    Realization::from_live_edges(g, live).unwrap()
}

fn simulation_fixtures() -> Check {
    let label = |r: &Realization, sets: Vec<Vec<NodeId>>| -> Vec<Option<(usize, f64)>> {
        let out = simulate(r, &CascadeSeeds::new(sets).unwrap()).unwrap();
        out.nodes.iter().map(|a| a.map(|a| (a.cascade, a.time))).collect()
    };
    let mut failures = Vec::new();
    let tie = fixed_realization(3, &[(0, 2, 1.0), (1, 2, 1.0)]);
    if label(&tie, vec![vec![0], vec![1]])[2] != Some((1, 1.0)) {
        failures.push("tie");
    }
    let tie_swapped = fixed_realization(3, &[(0, 2, 1.0), (1, 2, 1.0)]);
    if label(&tie_swapped, vec![vec![1], vec![0]])[2] != Some((1, 1.0)) {
        failures.push("tie with swapped seeds");
    }
    let path = fixed_realization(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
    if label(&path, vec![vec![0]]) != vec![Some((1, 0.0)), Some((1, 1.0)), Some((1, 2.0))] {
        failures.push("path");
    }
    if label(&path, vec![vec![1]]) != vec![None, Some((1, 0.0)), Some((1, 1.0))] {
        failures.push("seed at time 0");
    }
    let expect = [
        (TaskKind::Dc, vec![], 0),
        (TaskKind::Dc, vec![2], 1),
        (TaskKind::Dc, vec![1], 2),
        (TaskKind::De, vec![1], 0),
        (TaskKind::De, vec![0], 1),
    ];
    for (task, y, want) in expect {
        if kernel(&path, task, &[0], &y) != want {
            failures.push("path kernel");
        }
    }
    ensure(failures.is_empty(), format!("tie, path and time-0 fixtures; mismatches: {failures:?}"))
}

fn scale_invariance() -> Check {
    let g = generate_er(60, 120, 3).unwrap();
    let model = model_on(g, 0.5, 4);
    let bank = sample_bank(&model, 12, 5).unwrap();
    let pairs = generate_pairs(&model, TaskKind::Dc, 12, 20, 6).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut mismatches) = (0, 0);
    for i in 0..50u64 {
        let h = if i < 10 {
            let cfg = TrainerConfig { epochs: 2, seed: i, ..Default::default() };
            train(&pairs, &bank, TaskKind::Dc, TaskKind::De, &cfg).unwrap().weights
        } else {
            let w: Vec<f64> = (0..12).map(|_| if r.random_bool(0.2) { 0.0 } else { r.random_range(0.0..5.0) }).collect();
            HypothesisWeights::new(w, &bank, TaskKind::Dc, task_of(i), TrainerConfig::default()).unwrap()
        };
        let x = random_subset(&mut r, 60, 20);
        let x = if x.is_empty() { vec![1] } else { x };
        let k = r.random_range(1..=8);
        let base = infer(&h, &bank, &x, k).unwrap();
        for c in [0.5, 3.0, 100.0] {
            checked += 1;
            if infer(&h.scaled(c).unwrap(), &bank, &x, k).unwrap() != base {
                mismatches += 1;
            }
        }
    }
    ensure(mismatches == 0, format!("{checked} scaled inferences, {mismatches} differ"))
}

struct Experiment {
    report: EvaluationReport,
    elapsed: Duration,
}

fn experiment() -> &'static Experiment {
    static RUN: OnceLock<Experiment> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig { test_size: 200, repetitions: 5, ..Default::default() };
        let start = Instant::now();
        let report = run_experiment(&cfg).expect("experiment runs");
        Experiment { report, elapsed: start.elapsed() }
    })
}

fn si(method: Method, dist: &str, k: usize) -> f64 {
    let e = experiment();
    let m = (method == Method::SiFinal).then_some(270);
    e.report.cell(method, Some(dist), Some(k), m).expect("cell present").mean
}

fn baseline(method: Method) -> f64 {
    experiment().report.cell(method, None, None, None).expect("cell present").mean
}

fn distribution_trend() -> Check {
    let (q, inf) = (si(Method::SiFinal, "M_0.1", 60), si(Method::SiFinal, "M_inf", 60));
    let secs = experiment().elapsed.as_secs_f64();
    ensure(
        q - inf >= 0.10 && secs <= 1800.0,
        format!("M_0.1 {q:.4} vs M_inf {inf:.4}, gap {:.4} (need 0.10); experiment took {secs:.0}s", q - inf),
    )
}

fn k_trend() -> Check {
    let v: Vec<f64> = [15, 30, 60].iter().map(|&k| si(Method::SiFinal, "M_0.1", k)).collect();
    ensure(
        v[1] >= v[0] - 0.02 && v[2] >= v[1] - 0.02 && v[2] >= v[0] - 0.02,
        format!("K=15 {:.4}, K=30 {:.4}, K=60 {:.4}", v[0], v[1], v[2]),
    )
}

fn absolute_target() -> Check {
    let v = si(Method::SiFinal, "M_0.1", 60);
    ensure(v >= 0.78, format!("M_0.1 K=60 mean ratio {v:.4} (need 0.78)"))
}

fn baseline_separation() -> Check {
    let v = si(Method::SiFinal, "M_0.1", 60);
    let (random, hd) = (baseline(Method::Random), baseline(Method::Hd));
    ensure(
        v - random >= 0.3 && v - hd >= 0.2,
        format!("learned {v:.4}, random {random:.4}, HD {hd:.4}"),
    )
}

fn training_efficacy() -> Check {
    let (before, after) = (si(Method::SiInitial, "M_0.1", 30), si(Method::SiFinal, "M_0.1", 30));
    ensure(after >= before, format!("M_0.1 K=30 initial {before:.5}, final {after:.5}"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn diagnostic_arithmetic() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = r.random_range(1..40);
        let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..2.0)).collect();
        let m = r.random_range(10..2000);
        let alpha = r.random_range(0.2..1.0);
        let beta = r.random_range(0.01..alpha);
        let g = gamma_value(&w, m, beta, alpha).unwrap();
        let norm2 = w.iter().fold(0.0, |a, x| a + x * x);
        let wmin = w.iter().cloned().fold(f64::MAX, f64::min);
        let expect_g = (alpha.powi(2) + 1.0) / (wmin * beta * alpha) * (2.0 * (2.0 * (m * k) as f64 / norm2).ln()).sqrt();
        let em = r.random_range(0.0..1.0);
        let delta = r.random_range(0.001..0.5);
        let b = pac_bound(em, &w, m, g, delta).unwrap();
        let mf = m as f64;
        let expect_b =
            em + norm2 / mf + ((g.powi(2) * norm2 / 2.0 + (mf / delta).ln()) / (2.0 * (mf - 1.0))).sqrt();
        worst = worst.max(rel_err(g, expect_g)).max(rel_err(b, expect_b));
    }

    let mut risk_mismatch = 0;
    for s in 0..6u64 {
        let bank = small_bank(6, 10, 3, 40 + s);
        let target = task_of(s);
        let weights = vec![1.0, 0.5 + s as f64, 2.0];
        let h = HypothesisWeights::new(weights, &bank, TaskKind::Dc, target, TrainerConfig::default()).unwrap();
        let pairs: Vec<QueryDecisionPair> = (0..3)
            .map(|j| QueryDecisionPair {
                task: target,
                query: vec![j, (j + 2) % 6],
                decision: (0..=(j + s as usize) % 3).map(|d| (d + 3) % 6).collect(),
                budget: 0,
                ratio_tag: 1.0,
            })
            .collect();
        let loss = |p: &QueryDecisionPair, y: &[NodeId]| {
            p.decision.iter().filter(|v| !y.contains(v)).count() as f64 / p.decision.len() as f64
        };
        let (beta, alpha) = (0.1, 1.0 - (-1.0f64).exp());
        let got = empirical_risk(&h, &bank, &pairs, beta, alpha, loss).unwrap();
        let mut total = 0.0;
        for p in &pairs {
            let y_ref = infer(&h, &bank, &p.query, p.decision.len()).unwrap();
            let reference = hypothesis_score(&h, &bank, target, &p.query, &y_ref).unwrap();
            let mut worst_loss = 0.0f64;
            for y in subsets(6, p.decision.len()) {
                let score = hypothesis_score(&h, &bank, target, &p.query, &y).unwrap();
                if alpha * reference - score <= beta * reference {
                    worst_loss = worst_loss.max(loss(p, &y));
                }
            }
            total += worst_loss;
        }
        if got != total / pairs.len() as f64 {
            risk_mismatch += 1;
        }
    }
    ensure(
        worst <= 1e-12 && risk_mismatch == 0,
        format!("max relative error {worst:.2e} over 100 inputs; {risk_mismatch} of 6 risk fixtures differ"),
    )
}

fn run_pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let bin = env!("CARGO_BIN_EXE_invcon");
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    std::fs::write(
        dir.join("exp.toml"),
        "master_seed = 4\ngraph = \"er:80:120\"\nk_values = [4, 8]\ntrain_sizes = [10]\ntest_size = 8\n\
         source_pool = 20\ntarget_pool = 12\npair_eval_bank = 20\neval_samples = 30\nrepetitions = 2\nepochs = 2\n",
    )
    .unwrap();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen-graph", "--type", "er", "--nodes", "80", "--edges", "120", "--seed", "1", "--out", &p("g.txt")],
        vec!["gen-model", "--graph", &p("g.txt"), "--seed", "2", "--out", &p("m.json")],
        vec!["perturb", "--model", &p("m.json"), "--q", "0.1", "--seed", "3", "--out", &p("mq.json")],
        vec!["random-model", "--graph", &p("g.txt"), "--seed", "3", "--out", &p("mr.json")],
        vec!["gen-pairs", "--model", &p("m.json"), "--task", "dc", "--count", "10", "--eval-bank", "20", "--seed", "4", "--out", &p("pairs.tsv")],
        vec!["sample-bank", "--model", &p("mq.json"), "--k", "6", "--seed", "5", "--out", &p("bank.bin")],
        vec![
            "train", "--pairs", &p("pairs.tsv"), "--bank", &p("bank.bin"), "--source", "dc", "--target", "de", "--c",
            "0.01", "--cstar", "1.0", "--epochs", "3", "--seed", "6", "--out", &p("w.txt"),
        ],
        vec!["predict", "--weights", &p("w.txt"), "--bank", &p("bank.bin"), "--query", "1,5,9,20", "--budget", "3"],
        vec!["evaluate", "--config", &p("exp.toml"), "--report", &p("report.jsonl")],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();
    let mut outputs = Vec::new();
    for args in steps {
        let out = Command::new(bin).args(&args).env("RUST_LOG", "warn").output().unwrap();
        assert!(out.status.success(), "{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr));
        if args[0] == "predict" {
            outputs.push(("predict stdout".to_string(), out.stdout));
        }
    }
    for f in ["g.txt", "m.json", "mq.json", "mr.json", "pairs.tsv", "bank.bin", "w.txt", "report.jsonl"] {
        outputs.push((f.to_string(), std::fs::read(dir.join(f)).unwrap()));
    }
    outputs
}

fn cli_determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run_pipeline(a.path()), run_pipeline(b.path()));
    let differing: Vec<&str> = ra.iter().zip(&rb).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    ensure(
        differing.is_empty() && ra.iter().all(|(_, bytes)| !bytes.is_empty()),
        format!("{} artifacts compared across two pipeline runs; differing: {differing:?}", ra.len()),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("greedy guarantee", greedy_guarantee),
        ("kernel structure", kernel_structure),
        ("simulation fixtures", simulation_fixtures),
        ("scale invariance", scale_invariance),
        ("empirical-distribution trend", distribution_trend),
        ("K trend", k_trend),
        ("absolute target", absolute_target),
        ("baseline separation", baseline_separation),
        ("training efficacy", training_efficacy),
        ("diagnostic arithmetic", diagnostic_arithmetic),
        ("CLI determinism", cli_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
