//! Cardinality-constrained greedy maximization of monotone submodular set
//! functions, an exhaustive oracle, and query-decision pair generation.

mod pairs;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::graph::NodeId;

pub use pairs::{
    decision_budget, generate_pairs, generate_query, query_size, read_pairs, write_pairs, QueryDecisionPair,
    GREEDY_RATIO, PARETO_SHAPE,
};

/// A set function that greedy can grow one element at a time.
pub trait ScoreFunction: Sync {
    type State: Clone + Send + Sync;

    /// State of the empty set.
    fn empty(&self) -> Self::State;

    fn value(&self, state: &Self::State) -> f64;

    /// `f(S ∪ {v}) - f(S)` without modifying the state.
    fn gain(&self, state: &Self::State, v: NodeId) -> f64;

    fn insert(&self, state: &mut Self::State, v: NodeId);

    fn evaluate(&self, set: &[NodeId]) -> f64 {
        let mut s = self.empty();
        for &v in set {
            self.insert(&mut s, v);
        }
        self.value(&s)
    }
}

/// Wraps a plain set function; gains are computed by re-evaluation.
pub struct FnScore<F> {
    f: F,
}

impl<F> FnScore<F>
where
    F: Fn(&[NodeId]) -> f64 + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> ScoreFunction for FnScore<F>
where
    F: Fn(&[NodeId]) -> f64 + Sync,
{
    type State = Vec<NodeId>;

    fn empty(&self) -> Vec<NodeId> {
        Vec::new()
    }

    fn value(&self, state: &Vec<NodeId>) -> f64 {
        (self.f)(state)
    }

    fn gain(&self, state: &Vec<NodeId>, v: NodeId) -> f64 {
        let mut with = state.clone();
        with.push(v);
        (self.f)(&with) - (self.f)(state)
    }

    fn insert(&self, state: &mut Vec<NodeId>, v: NodeId) {
        state.push(v);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GreedyMode {
    /// Recompute every marginal gain each round.
    Plain,
    /// Lazy evaluation with stale upper bounds. Requires submodularity and
    /// returns the same set as [`GreedyMode::Plain`].
    #[default]
    Lazy,
}

/// Outcome of a greedy run: chosen elements in selection order and the final
/// value.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyResult {
    pub selected: Vec<NodeId>,
    pub value: f64,
}

fn prepare_ground(ground: &[NodeId]) -> Vec<NodeId> {
    let mut g = ground.to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

/// `(gain, Reverse(id))` ordering: larger gain first, then smaller id.
fn better(a: (f64, NodeId), b: (f64, NodeId)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Greedy maximization under `|S| ≤ budget`. Always selects exactly
/// `min(budget, |ground|)` elements; ties go to the smallest id.
pub fn greedy_max<S: ScoreFunction>(score: &S, ground: &[NodeId], budget: usize, mode: GreedyMode) -> GreedyResult {
    let ground = prepare_ground(ground);
    let target = budget.min(ground.len());
    let mut state = score.empty();
    let mut selected = Vec::with_capacity(target);
    match mode {
        GreedyMode::Plain => {
            let mut remaining = ground;
            while selected.len() < target {
                let gains: Vec<f64> = remaining.par_iter().map(|&v| score.gain(&state, v)).collect();
                let mut best = 0;
                for i in 1..remaining.len() {
                    if better((gains[i], remaining[i]), (gains[best], remaining[best])) {
                        best = i;
                    }
                }
                let v = remaining.remove(best);
                score.insert(&mut state, v);
                selected.push(v);
            }
        }
        GreedyMode::Lazy => {
            #[derive(PartialEq)]
            struct Item(f64, Reverse<NodeId>, usize);
            impl Eq for Item {}
            impl PartialOrd for Item {
                fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                    Some(self.cmp(other))
                }
            }
            impl Ord for Item {
                fn cmp(&self, other: &Self) -> Ordering {
                    self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
                }
            }
            if target > 0 {
                let gains: Vec<f64> = ground.par_iter().map(|&v| score.gain(&state, v)).collect();
                let mut heap: BinaryHeap<Item> =
                    ground.iter().zip(gains).map(|(&v, g)| Item(g, Reverse(v), 0)).collect();
                while selected.len() < target {
                    let Item(_, Reverse(v), round) = heap.pop().expect("heap holds the remaining ground set");
                    if round == selected.len() {
                        score.insert(&mut state, v);
                        selected.push(v);
                    } else {
                        let fresh = score.gain(&state, v);
                        heap.push(Item(fresh, Reverse(v), selected.len()));
                    }
                }
            }
        }
    }
    GreedyResult { value: score.value(&state), selected }
}

/// Upper limit on the number of subsets [`brute_force_max`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

pub(crate) fn subsets_at_most(n: usize, k: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for i in 0..=k.min(n) {
        total += c;
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    total
}

/// Exact maximizer over subsets of size at most `budget`. Ties go to the
/// lexicographically smallest sorted id list.
pub fn brute_force_max<S: ScoreFunction>(score: &S, ground: &[NodeId], budget: usize) -> Result<GreedyResult> {
    let ground = prepare_ground(ground);
    let count = subsets_at_most(ground.len(), budget);
    if count > BRUTE_FORCE_LIMIT {
        return invalid(format!("{count:.0} subsets exceed the enumeration limit"));
    }
    fn rec<S: ScoreFunction>(
        score: &S,
        ground: &[NodeId],
        start: usize,
        budget: usize,
        current: &mut Vec<NodeId>,
        best: &mut GreedyResult,
    ) {
        let v = score.evaluate(current);
        if v > best.value {
            *best = GreedyResult { selected: current.clone(), value: v };
        }
        if current.len() == budget {
            return;
        }
        for i in start..ground.len() {
            current.push(ground[i]);
            rec(score, ground, i + 1, budget, current, best);
            current.pop();
        }
    }
    let mut best = GreedyResult { selected: Vec::new(), value: score.evaluate(&[]) };
    rec(score, &ground, 0, budget, &mut Vec::new(), &mut best);
    Ok(best)
}
