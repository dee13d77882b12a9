//! Incremental weighted bank objectives `Y -> Σ_r w_r f_r(X, Y)` for greedy
//! maximization.
//!
//! For a fixed `X`, only a small part of each realization can influence the
//! kernel: the live ancestors of `X` for DE, and the live ancestors of the
//! negative cascade's reach for DC. Each realization is compressed to that part
//! once, with local ids that preserve the global id order so tie-breaking in
//! the competitive simulation is unchanged.

use std::cell::RefCell;
use std::collections::VecDeque;

use rayon::prelude::*;

use super::{check_bank_ids, live_reach, TaskKind};
use crate::contagion::{
    competitive_spread, spread_from_events, Realization, RealizationBank, SpreadScratch, NO_PARENT, UNSET,
};
use crate::error::{invalid, Result};
use crate::graph::NodeId;
use crate::optimize::ScoreFunction;

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct LocalView {
    /// Global ids, ascending.
    nodes: Vec<NodeId>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    times: Vec<f64>,
    /// DC only: reverse adjacency as `(source, travel time)`.
    in_offsets: Vec<u32>,
    in_edges: Vec<(u32, f64)>,
    is_x: Vec<bool>,
    x_local: Vec<u32>,
}

/// Activation of one local node under the current seeds.
#[derive(Clone, Copy, Debug)]
struct Label {
    cascade: u32,
    time: f64,
}

impl LocalView {
    fn build(r: &Realization, task: TaskKind, x: &[NodeId]) -> Self {
        let n = r.node_count();
        let roots: Vec<NodeId> = match task {
            TaskKind::De => x.to_vec(),
            TaskKind::Dc => {
                let reach = live_reach(r, x);
                (0..n).filter(|&v| reach[v]).collect()
            }
        };
        let mut keep = vec![false; n];
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for &v in &roots {
            if !keep[v] {
                keep[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for u in r.live_in(v) {
                if !keep[u] {
                    keep[u] = true;
                    queue.push_back(u);
                }
            }
        }
        let nodes: Vec<NodeId> = (0..n).filter(|&v| keep[v]).collect();
        let local = |v: NodeId| nodes.binary_search(&v).ok();
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut targets = Vec::new();
        let mut times = Vec::new();
        offsets.push(0);
        for &u in &nodes {
            for (v, t) in r.live_out(u) {
                if let Some(lv) = local(v) {
                    targets.push(lv as u32);
                    if task == TaskKind::Dc {
                        times.push(t);
                    }
                }
            }
            offsets.push(targets.len() as u32);
        }
        let mut is_x = vec![false; nodes.len()];
        let mut x_local = Vec::new();
        for &v in x {
            if let Some(lv) = local(v) {
                if !is_x[lv] {
                    is_x[lv] = true;
                    x_local.push(lv as u32);
                }
            }
        }
        x_local.sort_unstable();
        let (mut in_offsets, mut in_edges) = (Vec::new(), Vec::new());
        if task == TaskKind::Dc {
            let mut deg = vec![0u32; nodes.len() + 1];
            for &v in &targets {
                deg[v as usize + 1] += 1;
            }
            for i in 0..nodes.len() {
                deg[i + 1] += deg[i];
            }
            in_offsets = deg.clone();
            in_edges = vec![(0, 0.0); targets.len()];
            for u in 0..nodes.len() {
                for e in offsets[u] as usize..offsets[u + 1] as usize {
                    let v = targets[e] as usize;
                    in_edges[deg[v] as usize] = (u as u32, times[e]);
                    deg[v] += 1;
                }
            }
        }
        Self { nodes, offsets, targets, times, in_offsets, in_edges, is_x, x_local }
    }

    fn inn(&self, v: usize) -> &[(u32, f64)] {
        &self.in_edges[self.in_offsets[v] as usize..self.in_offsets[v + 1] as usize]
    }

    fn snapshot(&self, s: &SpreadScratch) -> Vec<Label> {
        let mut labels = vec![Label { cascade: UNSET, time: 0.0 }; self.len()];
        for &v in &s.touched {
            let v = v as usize;
            labels[v] = Label { cascade: s.cascade[v], time: s.time[v] };
        }
        labels
    }

    fn local(&self, v: NodeId) -> u32 {
        self.nodes.binary_search(&v).map_or(ABSENT, |i| i as u32)
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn out(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u] as usize..self.offsets[u + 1] as usize;
        let times = &self.times;
        self.targets[range.clone()]
            .iter()
            .zip(range)
            .map(move |(&v, e)| (v as usize, times.get(e).copied().unwrap_or(0.0)))
    }

    /// Number of nodes taken by the negative cascade given positive seeds.
    fn negative_count(&self, positive: &[u32], extra: u32, s: &mut SpreadScratch) -> u32 {
        s.reset(self.len());
        let seeds = self
            .x_local
            .iter()
            .map(|&v| (v as usize, 1u32))
            .chain(positive.iter().map(|&v| (v as usize, 2u32)))
            .chain((extra != ABSENT).then_some((extra as usize, 2u32)));
        competitive_spread(seeds, |u| self.out(u), s);
        s.touched.iter().filter(|&&v| s.cascade[v as usize] == 1).count() as u32
    }
}

#[derive(Default)]
struct Scratch {
    spread: SpreadScratch,
    mark: Vec<u32>,
    stamp: u32,
    stack: Vec<u32>,
    region: Vec<u32>,
    events: Vec<(usize, f64, u32, u32)>,
}

impl Scratch {
    fn next_stamp(&mut self, n: usize) -> u32 {
        if self.mark.len() < n {
            self.mark.resize(n, 0);
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        self.stamp
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Per-realization views of a bank specialized to one query `X`. They depend
/// on `(bank, task, X)` only, so they can be reused across weight vectors.
#[derive(Clone, Debug)]
pub struct BankContexts {
    task: TaskKind,
    node_count: usize,
    views: Vec<LocalView>,
}

impl BankContexts {
    pub fn new(bank: &RealizationBank, task: TaskKind, x: &[NodeId]) -> Result<Self> {
        check_bank_ids(bank, x, &[])?;
        let views = bank.realizations().par_iter().map(|r| LocalView::build(r, task, x)).collect();
        Ok(Self { task, node_count: bank.graph().node_count(), views })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Kernel values of `y` on every realization.
    pub fn features(&self, y: &[NodeId]) -> Result<Vec<f64>> {
        let ones = vec![1.0; self.len()];
        let obj = BankObjective::new(self, &ones)?;
        let mut state = obj.empty();
        for &v in y {
            if v >= self.node_count {
                return invalid(format!("node {v} out of range for {} nodes", self.node_count));
            }
            obj.insert(&mut state, v);
        }
        Ok(obj.kernel_values(&state))
    }
}

/// Greedy state: per-realization counts plus whatever the gain computation
/// needs to resume.
#[derive(Clone, Debug)]
pub struct BankState {
    /// DE: covered members of X. DC: nodes taken by the negative cascade.
    counts: Vec<u32>,
    /// DE only: nodes reached by the current seeds, per view.
    covered: Vec<Vec<bool>>,
    /// DC only: positive seeds present in each view, local ids.
    positive: Vec<Vec<u32>>,
    /// DC only: activation of every view node under the current seeds.
    labels: Vec<Vec<Label>>,
}

/// `Y -> Σ_r w_r f_r(X, Y)` over a fixed bank, with incremental gains.
#[derive(Clone, Copy, Debug)]
pub struct BankObjective<'a> {
    ctx: &'a BankContexts,
    weights: &'a [f64],
}

impl<'a> BankObjective<'a> {
    pub fn new(ctx: &'a BankContexts, weights: &'a [f64]) -> Result<Self> {
        if weights.len() != ctx.len() {
            return invalid(format!("{} weights for a bank of {}", weights.len(), ctx.len()));
        }
        Ok(Self { ctx, weights })
    }

    /// Per-realization kernel values at `state`.
    pub fn kernel_values(&self, state: &BankState) -> Vec<f64> {
        match self.ctx.task {
            TaskKind::De => state.counts.iter().map(|&c| f64::from(c)).collect(),
            TaskKind::Dc => state.counts.iter().map(|&c| (self.ctx.node_count - c as usize) as f64).collect(),
        }
    }

    fn de_spread(view: &LocalView, covered: &[bool], start: u32, s: &mut Scratch, mut visit: impl FnMut(u32)) -> u32 {
        let stamp = s.next_stamp(view.len());
        let mut stack = std::mem::take(&mut s.stack);
        stack.clear();
        stack.push(start);
        s.mark[start as usize] = stamp;
        let mut hits = 0;
        while let Some(u) = stack.pop() {
            if view.is_x[u as usize] {
                hits += 1;
            }
            visit(u);
            for (v, _) in view.out(u as usize) {
                if !covered[v] && s.mark[v] != stamp {
                    s.mark[v] = stamp;
                    stack.push(v as u32);
                }
            }
        }
        s.stack = stack;
        hits
    }

    fn realization_gain(&self, i: usize, state: &BankState, v: NodeId, s: &mut Scratch) -> u32 {
        let view = &self.ctx.views[i];
        let lv = view.local(v);
        if lv == ABSENT {
            return 0;
        }
        match self.ctx.task {
            TaskKind::De => {
                if state.covered[i][lv as usize] {
                    return 0;
                }
                Self::de_spread(view, &state.covered[i], lv, s, |_| {})
            }
            TaskKind::Dc => {
                let pos = &state.positive[i];
                if view.is_x[lv as usize] || pos.contains(&lv) {
                    return 0;
                }
                Self::dc_gain(view, &state.labels[i], pos, lv, s)
            }
        }
    }

    /// Negative-cascade nodes saved by adding positive seed `lv`. Only live
    /// descendants of `lv` can change, so the spread is rerun on that region
    /// alone, fed by arrivals from its unchanged in-neighbours.
    fn dc_gain(view: &LocalView, labels: &[Label], positive: &[u32], lv: u32, s: &mut Scratch) -> u32 {
        let stamp = s.next_stamp(view.len());
        let mut stack = std::mem::take(&mut s.stack);
        let mut region = std::mem::take(&mut s.region);
        stack.clear();
        region.clear();
        stack.push(lv);
        s.mark[lv as usize] = stamp;
        let mut before = 0;
        while let Some(u) = stack.pop() {
            region.push(u);
            before += u32::from(labels[u as usize].cascade == 1);
            for (v, _) in view.out(u as usize) {
                if s.mark[v] != stamp {
                    s.mark[v] = stamp;
                    stack.push(v as u32);
                }
            }
        }
        let mut gain = 0;
        if before > 0 {
            let mut events = std::mem::take(&mut s.events);
            events.clear();
            for &w in &region {
                let wi = w as usize;
                if view.is_x[wi] {
                    events.push((wi, 0.0, 1, NO_PARENT));
                } else if w == lv || positive.contains(&w) {
                    events.push((wi, 0.0, 2, NO_PARENT));
                }
                for &(u, t) in view.inn(wi) {
                    let l = labels[u as usize];
                    if s.mark[u as usize] != stamp && l.cascade != UNSET {
                        events.push((wi, l.time + t, l.cascade, u));
                    }
                }
            }
            s.spread.reset(view.len());
            spread_from_events(events.drain(..), |u| view.out(u), &mut s.spread);
            s.events = events;
            let after = s.spread.touched.iter().filter(|&&v| s.spread.cascade[v as usize] == 1).count() as u32;
            gain = before.saturating_sub(after);
        }
        s.stack = stack;
        s.region = region;
        gain
    }
}

impl ScoreFunction for BankObjective<'_> {
    type State = BankState;

    fn empty(&self) -> BankState {
        let k = self.ctx.len();
        match self.ctx.task {
            TaskKind::De => BankState {
                counts: vec![0; k],
                covered: self.ctx.views.iter().map(|v| vec![false; v.len()]).collect(),
                positive: Vec::new(),
                labels: Vec::new(),
            },
            TaskKind::Dc => SCRATCH.with(|s| {
                let s = &mut s.borrow_mut().spread;
                let mut counts = Vec::with_capacity(k);
                let mut labels = Vec::with_capacity(k);
                for v in &self.ctx.views {
                    counts.push(v.negative_count(&[], ABSENT, s));
                    labels.push(v.snapshot(s));
                }
                BankState { counts, covered: Vec::new(), positive: vec![Vec::new(); k], labels }
            }),
        }
    }

    fn value(&self, state: &BankState) -> f64 {
        self.kernel_values(state).iter().zip(self.weights).map(|(f, w)| w * f).sum()
    }

    fn gain(&self, state: &BankState, v: NodeId) -> f64 {
        SCRATCH.with(|s| {
            let s = &mut s.borrow_mut();
            let mut total = 0.0;
            for (i, &w) in self.weights.iter().enumerate() {
                if w != 0.0 {
                    total += w * f64::from(self.realization_gain(i, state, v, s));
                }
            }
            total
        })
    }

    fn insert(&self, state: &mut BankState, v: NodeId) {
        SCRATCH.with(|s| {
            let s = &mut s.borrow_mut();
            for (i, view) in self.ctx.views.iter().enumerate() {
                let lv = view.local(v);
                if lv == ABSENT {
                    continue;
                }
                match self.ctx.task {
                    TaskKind::De => {
                        if state.covered[i][lv as usize] {
                            continue;
                        }
                        let mut reached = Vec::new();
                        let hits = Self::de_spread(view, &state.covered[i], lv, s, |u| reached.push(u));
                        for u in reached {
                            state.covered[i][u as usize] = true;
                        }
                        state.counts[i] += hits;
                    }
                    TaskKind::Dc => {
                        if view.is_x[lv as usize] || state.positive[i].contains(&lv) {
                            continue;
                        }
                        state.counts[i] = view.negative_count(&state.positive[i], lv, &mut s.spread);
                        state.labels[i] = view.snapshot(&s.spread);
                        state.positive[i].push(lv);
                    }
                }
            }
        })
    }
}
