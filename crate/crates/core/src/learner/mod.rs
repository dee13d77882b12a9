//! Weighted realization-kernel hypotheses: scoring, greedy inference, the
//! structured trainer and the PAC-Bayes diagnostics.

mod diagnostics;
mod train;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contagion::RealizationBank;
use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;
use crate::kernels::{feature_map, BankContexts, BankObjective, TaskKind};
use crate::optimize::{greedy_max, GreedyMode};

pub use diagnostics::{empirical_risk, gamma_value, margin_membership, pac_bound, sample_final_weights};
pub use train::{train, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMethod {
    /// Online projected subgradient over samples.
    Subgradient,
    /// Cutting-plane outer loop with per-sample working sets.
    NSlack,
}

impl fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMethod::Subgradient => "subgradient",
            TrainMethod::NSlack => "n_slack",
        })
    }
}

impl FromStr for TrainMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subgradient" => Ok(TrainMethod::Subgradient),
            "n_slack" | "nslack" | "n-slack" => Ok(TrainMethod::NSlack),
            other => invalid(format!("unknown training method {other:?}")),
        }
    }
}

/// Trainer hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Weight of the averaged slack against the regularizer.
    pub c: f64,
    /// Margin coefficient applied to the reference decision's score.
    pub cstar: f64,
    pub method: TrainMethod,
    pub epochs: usize,
    /// Initial step size; step `t` uses `eta0 / sqrt(t)`.
    pub eta0: f64,
    /// Relative violation below which a constraint counts as satisfied.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self { c: 0.01, cstar: 1.0, method: TrainMethod::Subgradient, epochs: 10, eta0: 0.1, tolerance: 1e-3, seed: 0 }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invalid(format!("C must be positive, got {}", self.c));
        }
        if !(self.cstar > 0.0 && self.cstar <= 1.0) {
            return invalid(format!("C* must lie in (0, 1], got {}", self.cstar));
        }
        if self.epochs == 0 {
            return invalid("at least one epoch is required");
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return invalid(format!("step size must be positive, got {}", self.eta0));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return invalid(format!("tolerance must be non-negative, got {}", self.tolerance));
        }
        Ok(())
    }
}

/// Non-negative weights over the realizations of one bank.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisWeights {
    weights: Vec<f64>,
    bank_hash: String,
    source: TaskKind,
    target: TaskKind,
    config: TrainerConfig,
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    match w.iter().position(|x| !(*x >= 0.0 && x.is_finite())) {
        Some(i) => invalid(format!("weight {i} is {}, weights must be finite and non-negative", w[i])),
        None => Ok(()),
    }
}

impl HypothesisWeights {
    pub fn new(
        weights: Vec<f64>,
        bank: &RealizationBank,
        source: TaskKind,
        target: TaskKind,
        config: TrainerConfig,
    ) -> Result<Self> {
        check_weights(&weights)?;
        if weights.len() != bank.len() {
            return invalid(format!("{} weights for a bank of {}", weights.len(), bank.len()));
        }
        Ok(Self { weights, bank_hash: bank.content_hash().to_string(), source, target, config })
    }

    /// All-ones weights for `bank`.
    pub fn uniform(bank: &RealizationBank, source: TaskKind, target: TaskKind, config: TrainerConfig) -> Self {
        Self::new(vec![1.0; bank.len()], bank, source, target, config).expect("ones are valid weights")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bank_hash(&self) -> &str {
        &self.bank_hash
    }

    pub fn source(&self) -> TaskKind {
        self.source
    }

    pub fn target(&self) -> TaskKind {
        self.target
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    /// The same hypothesis with weights multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("scale must be positive, got {c}"));
        }
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= c);
        Ok(out)
    }

    /// Same hypothesis with different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        if weights.len() != self.weights.len() {
            return invalid("weight vector length changed");
        }
        Ok(Self { weights, ..self.clone() })
    }

    /// Fails unless `bank` is the bank these weights were fitted on.
    pub fn check_bank(&self, bank: &RealizationBank) -> Result<()> {
        if bank.len() != self.weights.len() || bank.content_hash() != self.bank_hash {
            return invalid("weights do not belong to this realization bank");
        }
        Ok(())
    }

    /// Writes `key = value` header lines, then one weight per line.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        let c = &self.config;
        writeln!(w, "k = {}", self.weights.len())?;
        writeln!(w, "bank_hash = {}", self.bank_hash)?;
        writeln!(w, "source = {}", self.source)?;
        writeln!(w, "target = {}", self.target)?;
        writeln!(w, "c = {}", c.c)?;
        writeln!(w, "cstar = {}", c.cstar)?;
        writeln!(w, "method = {}", c.method)?;
        writeln!(w, "epochs = {}", c.epochs)?;
        writeln!(w, "eta0 = {}", c.eta0)?;
        writeln!(w, "tolerance = {}", c.tolerance)?;
        writeln!(w, "seed = {}", c.seed)?;
        writeln!(w, "weights")?;
        for x in &self.weights {
            writeln!(w, "{x}")?;
        }
        Ok(())
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut header = std::collections::BTreeMap::new();
        let mut weights = Vec::new();
        let mut in_body = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            let no = i + 1;
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if in_body {
                let x: f64 = t.parse().map_err(|e| Error::Parse { line: no, msg: format!("bad weight {t:?}: {e}") })?;
                weights.push(x);
            } else if t == "weights" {
                in_body = true;
            } else {
                let (k, v) = t
                    .split_once('=')
                    .ok_or_else(|| Error::Parse { line: no, msg: format!("expected key = value, got {t:?}") })?;
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| Error::Format(format!("weights file lacks {k:?}")));
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e| Error::Format(format!("bad value for {k}: {e}")))
        }
        let k: usize = num("k", get("k")?)?;
        if k != weights.len() {
            return Err(Error::Format(format!("header declares {k} weights, found {}", weights.len())));
        }
        let config = TrainerConfig {
            c: num("c", get("c")?)?,
            cstar: num("cstar", get("cstar")?)?,
            method: get("method")?.parse()?,
            epochs: num("epochs", get("epochs")?)?,
            eta0: num("eta0", get("eta0")?)?,
            tolerance: num("tolerance", get("tolerance")?)?,
            seed: num("seed", get("seed")?)?,
        };
        check_weights(&weights)?;
        Ok(Self {
            weights,
            bank_hash: get("bank_hash")?.clone(),
            source: get("source")?.parse()?,
            target: get("target")?.parse()?,
            config,
        })
    }
}

/// `Σ_r w_r f_r(X, Y)` for the source or target task of `h`.
pub fn hypothesis_score(
    h: &HypothesisWeights,
    bank: &RealizationBank,
    task: TaskKind,
    x: &[NodeId],
    y: &[NodeId],
) -> Result<f64> {
    if task != h.source && task != h.target {
        return invalid(format!("task {task} is neither the source nor the target of these weights"));
    }
    h.check_bank(bank)?;
    Ok(feature_map(bank, task, x, y)?.dot(&h.weights))
}

/// Greedy maximizer of the weighted score for precomputed query contexts.
pub fn greedy_decision(ctx: &BankContexts, w: &[f64], budget: usize) -> Result<Vec<NodeId>> {
    let obj = BankObjective::new(ctx, w)?;
    let ground: Vec<NodeId> = (0..ctx.node_count()).collect();
    let mut y = greedy_max(&obj, &ground, budget, GreedyMode::Lazy).selected;
    y.sort_unstable();
    Ok(y)
}

/// Most violated constraint for query `x`: the greedy maximizer of the
/// weighted `task` score with the given budget.
pub fn separation_oracle(
    w: &[f64],
    bank: &RealizationBank,
    task: TaskKind,
    x: &[NodeId],
    budget: usize,
) -> Result<Vec<NodeId>> {
    check_weights(w)?;
    let ctx = BankContexts::new(bank, task, x)?;
    greedy_decision(&ctx, w, budget)
}

/// Decision for query `x` under the target task, at most `k` nodes.
pub fn infer(h: &HypothesisWeights, bank: &RealizationBank, x: &[NodeId], k: usize) -> Result<Vec<NodeId>> {
    h.check_bank(bank)?;
    let ctx = BankContexts::new(bank, h.target, x)?;
    greedy_decision(&ctx, &h.weights, k)
}
