use rand_distr::{Distribution, Normal};

use super::{check_weights, greedy_decision, HypothesisWeights};
use crate::contagion::RealizationBank;
use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;
use crate::kernels::{BankContexts, BankObjective};
use crate::optimize::{subsets_at_most, QueryDecisionPair, ScoreFunction, BRUTE_FORCE_LIMIT};
use crate::rng;

fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Scale of the posterior mean for prior weights `w̃`, sample count `m`,
/// margin `beta` and inference ratio `alpha`.
pub fn gamma_value(w: &[f64], m: usize, beta: f64, alpha: f64) -> Result<f64> {
    if w.is_empty() {
        return domain("empty weight vector");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("inference ratio must lie in (0, 1], got {alpha}"));
    }
    if !(beta > 0.0 && beta < alpha) {
        return domain(format!("margin must lie in (0, {alpha}), got {beta}"));
    }
    let min = w.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return domain("smallest weight magnitude is zero");
    }
    let n2: f64 = w.iter().map(|x| x * x).sum();
    let arg = 2.0 * m as f64 * w.len() as f64 / n2;
    if arg <= 1.0 {
        return domain(format!("log argument {arg} is not above 1"));
    }
    Ok((alpha * alpha + 1.0) / (min * beta * alpha) * (2.0 * arg.ln()).sqrt())
}

/// Generalization bound on the margin risk given the empirical risk.
pub fn pac_bound(em_risk: f64, w: &[f64], m: usize, gamma: f64, delta: f64) -> Result<f64> {
    if m < 2 {
        return domain("the bound needs at least two samples");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("confidence must lie in (0, 1), got {delta}"));
    }
    if !gamma.is_finite() || !em_risk.is_finite() {
        return domain("non-finite input");
    }
    let n2: f64 = w.iter().map(|x| x * x).sum();
    let m = m as f64;
    Ok(em_risk + n2 / m + ((gamma * gamma * n2 / 2.0 + (m / delta).ln()) / (2.0 * (m - 1.0))).sqrt())
}

/// Draws each weight from `Normal(γ·w̃_p, 1)` and clips at zero.
pub fn sample_final_weights(w: &[f64], gamma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    let mut r = rng::rng(seed);
    w.iter()
        .map(|&x| {
            let n = Normal::new(gamma * x, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(n.sample(&mut r).max(0.0))
        })
        .collect()
}

fn in_margin(score: f64, reference: f64, beta: f64, alpha: f64) -> bool {
    alpha * reference - score <= beta * reference
}

/// Whether `y` lies within the margin of the inference output `y_ref` under
/// the target-task score.
pub fn margin_membership(
    h: &HypothesisWeights,
    bank: &RealizationBank,
    x: &[NodeId],
    y: &[NodeId],
    y_ref: &[NodeId],
    beta: f64,
    alpha: f64,
) -> Result<bool> {
    let s = super::hypothesis_score(h, bank, h.target(), x, y)?;
    let r = super::hypothesis_score(h, bank, h.target(), x, y_ref)?;
    Ok(in_margin(s, r, beta, alpha))
}

/// Average over pairs of the worst loss among decisions inside the margin of
/// the inference output. Decisions range over all node sets no larger than the
/// pair's decision.
pub fn empirical_risk<L>(
    h: &HypothesisWeights,
    bank: &RealizationBank,
    pairs: &[QueryDecisionPair],
    beta: f64,
    alpha: f64,
    loss: L,
) -> Result<f64>
where
    L: Fn(&QueryDecisionPair, &[NodeId]) -> f64,
{
    h.check_bank(bank)?;
    check_weights(h.weights())?;
    if pairs.is_empty() {
        return invalid("no pairs to evaluate");
    }
    let n = bank.graph().node_count();
    let mut total = 0.0;
    for p in pairs {
        let k = p.decision.len();
        if subsets_at_most(n, k) > BRUTE_FORCE_LIMIT {
            return invalid(format!("enumerating decisions of size {k} over {n} nodes is too large"));
        }
        let ctx = BankContexts::new(bank, h.target(), &p.query)?;
        let obj = BankObjective::new(&ctx, h.weights())?;
        let y_ref = greedy_decision(&ctx, h.weights(), k)?;
        let reference = obj.evaluate(&y_ref);
        let mut worst = 0.0f64;
        let mut current = Vec::new();
        enumerate(n, k, 0, &mut current, &mut |y| {
            if in_margin(obj.evaluate(y), reference, beta, alpha) {
                worst = worst.max(loss(p, y));
            }
        });
        total += worst;
    }
    Ok(total / pairs.len() as f64)
}

fn enumerate(n: usize, k: usize, start: usize, current: &mut Vec<NodeId>, f: &mut impl FnMut(&[NodeId])) {
    f(current);
    if current.len() == k {
        return;
    }
    for v in start..n {
        current.push(v);
        enumerate(n, k, v + 1, current, f);
        current.pop();
    }
}
