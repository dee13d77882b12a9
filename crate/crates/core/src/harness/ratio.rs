use serde::Serialize;

use crate::contagion::{sample_bank, DiffusionModel, RealizationBank};
use crate::error::{invalid, Result};
use crate::graph::NodeId;
use crate::kernels::{BankContexts, TaskKind};

/// A performance ratio. Degenerate values (positive numerator over a
/// non-positive denominator) are kept for the record but excluded from means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioOutcome {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64) -> RatioOutcome {
    if den > 0.0 {
        RatioOutcome { value: num / den, degenerate: false }
    } else if num <= 0.0 {
        RatioOutcome { value: 1.0, degenerate: false }
    } else {
        RatioOutcome { value: f64::INFINITY, degenerate: true }
    }
}

/// Evaluates candidate decisions for one query against its reference decision
/// on a fixed bank.
pub struct QueryEvaluator {
    ctx: BankContexts,
    reference: f64,
    empty: f64,
}

impl QueryEvaluator {
    pub fn new(bank: &RealizationBank, task: TaskKind, x: &[NodeId], y_ref: &[NodeId]) -> Result<Self> {
        let ctx = BankContexts::new(bank, task, x)?;
        let mut e = Self { ctx, reference: 0.0, empty: 0.0 };
        e.empty = e.mean(&[])?;
        e.reference = e.mean(y_ref)?;
        Ok(e)
    }

    /// Bank average of the task kernel.
    pub fn mean(&self, y: &[NodeId]) -> Result<f64> {
        let f = self.ctx.features(y)?;
        Ok(f.iter().sum::<f64>() / f.len() as f64)
    }

    pub fn ratio(&self, y: &[NodeId]) -> Result<RatioOutcome> {
        let v = self.mean(y)?;
        Ok(match self.ctx.task() {
            TaskKind::De => ratio(v, self.reference),
            TaskKind::Dc => ratio(v - self.empty, self.reference - self.empty),
        })
    }
}

/// Ratio of `y_hat` to `y_ref` on `n` fresh realizations of the true model,
/// shared by all three estimates. DC ratios measure improvement over the
/// empty decision.
pub fn performance_ratio(
    m_true: &DiffusionModel,
    task: TaskKind,
    x: &[NodeId],
    y_hat: &[NodeId],
    y_ref: &[NodeId],
    n: usize,
    seed: u64,
) -> Result<RatioOutcome> {
    if n == 0 {
        return invalid("evaluation needs at least one sample");
    }
    let bank = sample_bank(m_true, n, seed)?;
    QueryEvaluator::new(&bank, task, x, y_ref)?.ratio(y_hat)
}
