use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{greedy_decision, HypothesisWeights, TrainMethod, TrainerConfig};
use crate::contagion::RealizationBank;
use crate::error::{invalid, Result};
use crate::kernels::{BankContexts, TaskKind};
use crate::optimize::QueryDecisionPair;
use crate::rng;

/// Trained weights plus the objective value after initialization and after
/// every completed epoch (cutting-plane round for the n-slack method).
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: HypothesisWeights,
    pub objective_trace: Vec<f64>,
    /// Objective of the returned weights.
    pub objective: f64,
    pub steps: usize,
}

/// One training sample with its query-specific bank views and the kernel
/// values of its reference decision.
struct Sample {
    ctx: BankContexts,
    reference: Vec<f64>,
    budget: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(w: &[f64]) -> f64 {
    dot(w, w)
}

struct Violation {
    features: Vec<f64>,
    /// Slack `max(0, w·φ̂ − C*·w·φ)`.
    slack: f64,
    /// Slack relative to the oracle score.
    relative: f64,
}

impl Sample {
    fn violation(&self, w: &[f64], cstar: f64) -> Result<Violation> {
        let y = greedy_decision(&self.ctx, w, self.budget)?;
        let features = self.ctx.features(&y)?;
        Ok(self.violation_for(w, cstar, features))
    }

    fn violation_for(&self, w: &[f64], cstar: f64, features: Vec<f64>) -> Violation {
        let top = dot(w, &features);
        let slack = (top - cstar * dot(w, &self.reference)).max(0.0);
        let relative = if top > 0.0 { slack / top } else { 0.0 };
        Violation { features, slack, relative }
    }
}

/// `J(w)` with fresh oracle calls, and the largest relative violation.
fn objective(samples: &[Sample], w: &[f64], cfg: &TrainerConfig) -> Result<(f64, f64)> {
    let m = samples.len() as f64;
    let v: Vec<Violation> = samples.par_iter().map(|s| s.violation(w, cfg.cstar)).collect::<Result<_>>()?;
    let slack: f64 = v.iter().map(|v| v.slack).sum();
    let worst = v.iter().map(|v| v.relative).fold(0.0, f64::max);
    Ok((norm2(w) + cfg.c / m * slack, worst))
}

fn project(w: &mut [f64]) {
    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Tracks the best non-zero iterate. The objective is minimized by `w = 0`,
/// which carries no information for inference, so zero vectors are skipped.
struct Best {
    w: Vec<f64>,
    j: f64,
}

impl Best {
    fn offer(&mut self, w: &[f64], j: f64) {
        if j < self.j && w.iter().any(|&x| x > 0.0) {
            self.w = w.to_vec();
            self.j = j;
        }
    }
}

/// Fits weights on `bank` from source-task pairs, starting from all ones.
pub fn train(
    pairs: &[QueryDecisionPair],
    bank: &RealizationBank,
    source: TaskKind,
    target: TaskKind,
    cfg: &TrainerConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return invalid("training needs at least one pair");
    }
    if let Some(p) = pairs.iter().find(|p| p.task != source) {
        return invalid(format!("pair of task {} given for source task {source}", p.task));
    }
    let samples: Vec<Sample> = pairs
        .par_iter()
        .map(|p| {
            let ctx = BankContexts::new(bank, source, &p.query)?;
            let reference = ctx.features(&p.decision)?;
            Ok(Sample { ctx, reference, budget: p.decision.len() })
        })
        .collect::<Result<_>>()?;
    let mut w = vec![1.0; bank.len()];
    let (j0, _) = objective(&samples, &w, cfg)?;
    let mut best = Best { w: w.clone(), j: j0 };
    let mut trace = vec![j0];
    let steps = match cfg.method {
        TrainMethod::Subgradient => subgradient(&samples, &mut w, cfg, &mut best, &mut trace)?,
        TrainMethod::NSlack => n_slack(&samples, &mut w, cfg, &mut best, &mut trace)?,
    };
    let weights = HypothesisWeights::new(best.w, bank, source, target, cfg.clone())?;
    Ok(TrainOutcome { weights, objective_trace: trace, objective: best.j, steps })
}

fn subgradient(
    samples: &[Sample],
    w: &mut [f64],
    cfg: &TrainerConfig,
    best: &mut Best,
    trace: &mut Vec<f64>,
) -> Result<usize> {
    let m = samples.len() as f64;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut t = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(rng::derive_seed(cfg.seed, "epoch-order"), epoch as u64));
        for &i in &order {
            let s = &samples[i];
            let v = s.violation(w, cfg.cstar)?;
            if v.relative <= cfg.tolerance {
                continue;
            }
            t += 1;
            let eta = cfg.eta0 / (t as f64).sqrt();
            for (r, x) in w.iter_mut().enumerate() {
                let g = 2.0 * *x / m + cfg.c / m * (v.features[r] - cfg.cstar * s.reference[r]);
                *x -= eta * g;
            }
            project(w);
        }
        let (j, worst) = objective(samples, w, cfg)?;
        trace.push(j);
        best.offer(w, j);
        log::debug!("epoch {} objective {j:.6} worst violation {worst:.3e}", epoch + 1);
        if worst <= cfg.tolerance {
            break;
        }
    }
    Ok(t)
}

/// Restricted objective over the accumulated working sets, and the
/// maximizing constraint per sample.
fn restricted(samples: &[Sample], sets: &[Vec<Vec<f64>>], w: &[f64], cfg: &TrainerConfig) -> (f64, Vec<Option<usize>>) {
    let m = samples.len() as f64;
    let mut slack = 0.0;
    let mut active = Vec::with_capacity(samples.len());
    for (s, set) in samples.iter().zip(sets) {
        let base = cfg.cstar * dot(w, &s.reference);
        let mut top: Option<(usize, f64)> = None;
        for (j, phi) in set.iter().enumerate() {
            let xi = dot(w, phi) - base;
            if xi > 0.0 && top.is_none_or(|(_, b)| xi > b) {
                top = Some((j, xi));
            }
        }
        slack += top.map_or(0.0, |(_, xi)| xi);
        active.push(top.map(|(j, _)| j));
    }
    (norm2(w) + cfg.c / m * slack, active)
}

const INNER_ITERATIONS: usize = 200;

fn n_slack(
    samples: &[Sample],
    w: &mut Vec<f64>,
    cfg: &TrainerConfig,
    best: &mut Best,
    trace: &mut Vec<f64>,
) -> Result<usize> {
    let m = samples.len() as f64;
    let mut sets: Vec<Vec<Vec<f64>>> = vec![Vec::new(); samples.len()];
    let mut steps = 0;
    for _round in 0..cfg.epochs {
        let found: Vec<Violation> =
            samples.par_iter().map(|s| s.violation(w, cfg.cstar)).collect::<Result<_>>()?;
        let mut added = 0;
        for (set, v) in sets.iter_mut().zip(found) {
            if v.relative > cfg.tolerance && !set.contains(&v.features) {
                set.push(v.features);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        let mut inner_best = (restricted(samples, &sets, w, cfg).0, w.clone());
        for t in 1..=INNER_ITERATIONS {
            let (_, active) = restricted(samples, &sets, w, cfg);
            let mut grad: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
            for ((s, set), a) in samples.iter().zip(&sets).zip(&active) {
                if let Some(j) = a {
                    for (r, g) in grad.iter_mut().enumerate() {
                        *g += cfg.c / m * (set[*j][r] - cfg.cstar * s.reference[r]);
                    }
                }
            }
            let eta = cfg.eta0 / (t as f64).sqrt();
            for (x, g) in w.iter_mut().zip(&grad) {
                *x -= eta * g;
            }
            project(w);
            steps += 1;
            let (j, _) = restricted(samples, &sets, w, cfg);
            if j < inner_best.0 && w.iter().any(|&x| x > 0.0) {
                inner_best = (j, w.clone());
            }
        }
        *w = inner_best.1;
        let (j, _) = objective(samples, w, cfg)?;
        trace.push(j);
        best.offer(w, j);
    }
    Ok(steps)
}
