use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::realization::Realization;
use crate::error::{invalid, Result};
use crate::graph::NodeId;

/// Seed sets of `L` competing cascades. Index 0 is cascade 1, the highest
/// priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeSeeds {
    sets: Vec<Vec<NodeId>>,
}

impl CascadeSeeds {
    /// Fails if any node appears in two seed sets.
    pub fn new(sets: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut all: Vec<(NodeId, usize)> =
            sets.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&v| (v, i))).collect();
        all.sort_unstable();
        for w in all.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                return invalid(format!(
                    "node {} seeds both cascade {} and cascade {}",
                    w[0].0,
                    w[0].1 + 1,
                    w[1].1 + 1
                ));
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[Vec<NodeId>] {
        &self.sets
    }
}

/// Activation record of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation {
    /// 1-based cascade index.
    pub cascade: usize,
    pub time: f64,
    /// Node that activated this one; `None` for seeds.
    pub parent: Option<NodeId>,
}

/// Per-node activation records; `None` means never activated.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationOutcome {
    pub nodes: Vec<Option<Activation>>,
}

impl ActivationOutcome {
    pub fn count_cascade(&self, cascade: usize) -> usize {
        self.nodes.iter().filter(|a| matches!(a, Some(x) if x.cascade == cascade)).count()
    }

    pub fn activated(&self) -> usize {
        self.nodes.iter().filter(|a| a.is_some()).count()
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    time: f64,
    cascade: u32,
    parent: u32,
    node: u32,
}

impl Entry {
    fn key(&self) -> (f64, u32, u32, u32) {
        (self.time, self.cascade, self.parent, self.node)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap and we want the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)).then(b.3.cmp(&a.3))
    }
}

pub(crate) const NO_PARENT: u32 = u32::MAX;
pub(crate) const UNSET: u32 = 0;

/// Reusable buffers for [`competitive_spread`].
#[derive(Clone, Debug, Default)]
pub(crate) struct SpreadScratch {
    /// 1-based cascade label, 0 when inactive.
    pub cascade: Vec<u32>,
    pub time: Vec<f64>,
    pub parent: Vec<u32>,
    pub touched: Vec<u32>,
    heap: BinaryHeap<Entry>,
}

impl SpreadScratch {
    /// Clears labels from the previous run and makes room for `n` nodes.
    pub fn reset(&mut self, n: usize) {
        for &v in &self.touched {
            self.cascade[v as usize] = UNSET;
        }
        self.touched.clear();
        if self.cascade.len() < n {
            self.cascade.resize(n, UNSET);
            self.time.resize(n, 0.0);
            self.parent.resize(n, NO_PARENT);
        }
        self.heap.clear();
    }
}

/// Multi-source Dijkstra with composite key `(time, cascade, parent id)`.
/// Equal arrival times resolve to the smaller cascade index, remaining ties to
/// the smaller predecessor id. The scratch must have been reset to `n` nodes.
pub(crate) fn competitive_spread<F, I>(
    seeds: impl Iterator<Item = (usize, u32)>,
    out: F,
    s: &mut SpreadScratch,
) where
    F: Fn(usize) -> I,
    I: Iterator<Item = (usize, f64)>,
{
    spread_from_events(seeds.map(|(v, c)| (v, 0.0, c, NO_PARENT)), out, s);
}

/// [`competitive_spread`] started from arbitrary `(node, time, cascade, parent)`
/// arrival events instead of time-zero seeds.
pub(crate) fn spread_from_events<F, I>(
    events: impl Iterator<Item = (usize, f64, u32, u32)>,
    out: F,
    s: &mut SpreadScratch,
) where
    F: Fn(usize) -> I,
    I: Iterator<Item = (usize, f64)>,
{
    for (v, time, cascade, parent) in events {
        s.heap.push(Entry { time, cascade, parent, node: v as u32 });
    }
    while let Some(e) = s.heap.pop() {
        let u = e.node as usize;
        if s.cascade[u] != UNSET {
            continue;
        }
        s.cascade[u] = e.cascade;
        s.time[u] = e.time;
        s.parent[u] = e.parent;
        s.touched.push(e.node);
        for (v, t) in out(u) {
            if s.cascade[v] == UNSET {
                s.heap.push(Entry { time: e.time + t, cascade: e.cascade, parent: e.node, node: v as u32 });
            }
        }
    }
}

/// Runs the competitive diffusion on a fixed realization.
pub fn simulate(r: &Realization, seeds: &CascadeSeeds) -> Result<ActivationOutcome> {
    let n = r.node_count();
    for s in seeds.sets() {
        if let Some(&v) = s.iter().find(|&&v| v >= n) {
            return invalid(format!("seed node {v} out of range"));
        }
    }
    let mut scratch = SpreadScratch::default();
    scratch.reset(n);
    let seed_iter = seeds
        .sets()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&v| (v, i as u32 + 1)));
    competitive_spread(seed_iter, |u| r.live_out(u), &mut scratch);
    let nodes = (0..n)
        .map(|v| {
            (scratch.cascade[v] != UNSET).then(|| Activation {
                cascade: scratch.cascade[v] as usize,
                time: scratch.time[v],
                parent: (scratch.parent[v] != NO_PARENT).then_some(scratch.parent[v] as usize),
            })
        })
        .collect();
    Ok(ActivationOutcome { nodes })
}
