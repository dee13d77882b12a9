//! Per-realization objective kernels for diffusion enhancement (DE) and
//! diffusion containment (DC), bank feature maps, and Monte Carlo estimates of
//! the expected objectives.

mod objective;

use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contagion::{
    competitive_spread, sample_bank, DiffusionModel, Realization, RealizationBank, SpreadScratch, UNSET,
};
use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;

pub use objective::{BankContexts, BankObjective, BankState};

/// The two contagion-management tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Diffusion enhancement: seed a cascade that reaches as much of X as possible.
    De,
    /// Diffusion containment: seed a positive cascade that limits a negative one started at X.
    Dc,
}

impl TaskKind {
    pub fn tag(self) -> &'static str {
        match self {
            TaskKind::De => "de",
            TaskKind::Dc => "dc",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "de" => Ok(TaskKind::De),
            "dc" => Ok(TaskKind::Dc),
            other => invalid(format!("unknown task {other:?}, expected de or dc")),
        }
    }
}

/// Kernel values of one `(X, Y)` pair on every realization of a bank.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelFeatures {
    pub values: Vec<f64>,
}

impl KernelFeatures {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.values.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn check_ids(r: &Realization, ids: &[NodeId]) -> Result<()> {
    match ids.iter().find(|&&v| v >= r.node_count()) {
        Some(v) => invalid(format!("node {v} out of range for {} nodes", r.node_count())),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest live-path time from any source to every node; `None` when
/// unreachable.
pub fn earliest_arrival(r: &Realization, sources: &[NodeId]) -> Result<Vec<Option<f64>>> {
    check_ids(r, sources)?;
    let mut dist: Vec<Option<f64>> = vec![None; r.node_count()];
    let mut heap: BinaryHeap<Dist> = sources.iter().map(|&s| Dist(0.0, s)).collect();
    while let Some(Dist(d, u)) = heap.pop() {
        if dist[u].is_some() {
            continue;
        }
        dist[u] = Some(d);
        for (v, t) in r.live_out(u) {
            if dist[v].is_none() {
                heap.push(Dist(d + t, v));
            }
        }
    }
    Ok(dist)
}

/// Nodes reachable from `sources` over live edges (sources included).
pub fn live_reach(r: &Realization, sources: &[NodeId]) -> Vec<bool> {
    let mut seen = vec![false; r.node_count()];
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for (v, _) in r.live_out(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Number of nodes of `x` reached by a cascade seeded at `y`. No time horizon
/// applies, so travel times are ignored. Panics on out-of-range ids.
pub fn kernel_de(r: &Realization, x: &[NodeId], y: &[NodeId]) -> usize {
    if y.is_empty() {
        return 0;
    }
    let reach = live_reach(r, y);
    let mut xs = x.to_vec();
    xs.sort_unstable();
    xs.dedup();
    xs.into_iter().filter(|&u| reach[u]).count()
}

/// Number of nodes not taken by the negative cascade seeded at `x` when a
/// positive cascade starts from `y \ x`. Panics on out-of-range ids.
pub fn kernel_dc(r: &Realization, x: &[NodeId], y: &[NodeId]) -> usize {
    let n = r.node_count();
    let mut negative = x.to_vec();
    negative.sort_unstable();
    negative.dedup();
    let positive = y.iter().copied().filter(|v| negative.binary_search(v).is_err());
    let mut scratch = SpreadScratch::default();
    scratch.reset(n);
    let seeds = negative.iter().map(|&v| (v, 1u32)).chain(positive.map(|v| (v, 2u32)));
    competitive_spread(seeds, |u| r.live_out(u), &mut scratch);
    let taken = scratch.touched.iter().filter(|&&v| scratch.cascade[v as usize] == 1).count();
    debug_assert!(scratch.touched.iter().all(|&v| scratch.cascade[v as usize] != UNSET));
    n - taken
}

/// Kernel of `task` on a single realization.
pub fn kernel(r: &Realization, task: TaskKind, x: &[NodeId], y: &[NodeId]) -> usize {
    match task {
        TaskKind::De => kernel_de(r, x, y),
        TaskKind::Dc => kernel_dc(r, x, y),
    }
}

fn check_bank_ids(bank: &RealizationBank, x: &[NodeId], y: &[NodeId]) -> Result<()> {
    let r = &bank.realizations()[0];
    check_ids(r, x)?;
    check_ids(r, y)
}

/// Kernel values on every realization of the bank, in bank order.
pub fn feature_map(bank: &RealizationBank, task: TaskKind, x: &[NodeId], y: &[NodeId]) -> Result<KernelFeatures> {
    check_bank_ids(bank, x, y)?;
    let values = bank.realizations().par_iter().map(|r| kernel(r, task, x, y) as f64).collect();
    Ok(KernelFeatures { values })
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err, samples: n }
    }
}

/// Monte Carlo estimate of the expected objective over `n` fresh realizations.
pub fn estimate_objective(
    model: &DiffusionModel,
    task: TaskKind,
    x: &[NodeId],
    y: &[NodeId],
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    let bank = sample_bank(model, n, seed)?;
    estimate_on_bank(&bank, task, x, y)
}

/// Estimate over a fixed bank (common random numbers across candidates).
pub fn estimate_on_bank(bank: &RealizationBank, task: TaskKind, x: &[NodeId], y: &[NodeId]) -> Result<Estimate> {
    Ok(Estimate::from_values(&feature_map(bank, task, x, y)?.values))
}

#[cfg(test)]
mod tests;
