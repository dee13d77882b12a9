use std::collections::HashMap;

use rand::seq::index;

use crate::error::{invalid, Result};
use crate::graph::{top_degree_nodes, Graph, NodeId};
use crate::optimize::QueryDecisionPair;
use crate::rng;

/// The `k` highest-degree nodes, sorted by id.
pub fn hd_predict(g: &Graph, k: usize) -> Result<Vec<NodeId>> {
    let mut y = top_degree_nodes(g, k)?;
    y.sort_unstable();
    Ok(y)
}

/// A uniform `k`-subset of the nodes, sorted by id.
pub fn random_predict(g: &Graph, k: usize, seed: u64) -> Result<Vec<NodeId>> {
    let n = g.node_count();
    if k > n {
        return invalid(format!("k = {k} exceeds node count {n}"));
    }
    let mut y = index::sample(&mut rng::rng(seed), n, k).into_vec();
    y.sort_unstable();
    Ok(y)
}

/// Bernoulli model of decision membership with add-one smoothing:
/// `Pr[v ∈ Y]` and `Pr[u ∈ X | v ∈ Y]`.
#[derive(Clone, Debug)]
pub struct NaiveBayesModel {
    samples: usize,
    /// Number of pairs with `v ∈ Y`.
    in_decision: Vec<usize>,
    /// `cooccur[u]` lists `(v, count of pairs with u ∈ X and v ∈ Y)`.
    cooccur: Vec<Vec<(NodeId, usize)>>,
}

impl NaiveBayesModel {
    pub fn node_count(&self) -> usize {
        self.in_decision.len()
    }

    pub fn prior(&self, v: NodeId) -> f64 {
        (self.in_decision[v] + 1) as f64 / (self.samples + 2) as f64
    }

    pub fn conditional(&self, u: NodeId, v: NodeId) -> f64 {
        let c = self.cooccur[u].iter().find(|(w, _)| *w == v).map_or(0, |&(_, c)| c);
        (c + 1) as f64 / (self.in_decision[v] + 2) as f64
    }

    /// `ln Pr[v] + Σ_{u ∈ X} ln Pr[u | v]` for every node `v`.
    pub fn log_scores(&self, x: &[NodeId]) -> Vec<f64> {
        let n = self.node_count();
        let mut scores: Vec<f64> = (0..n)
            .map(|v| self.prior(v).ln() - x.len() as f64 * ((self.in_decision[v] + 2) as f64).ln())
            .collect();
        for &u in x {
            for &(v, c) in &self.cooccur[u] {
                scores[v] += ((c + 1) as f64).ln();
            }
        }
        scores
    }
}

/// Counts memberships over `pairs` on a graph with `node_count` nodes.
pub fn nb_train(pairs: &[QueryDecisionPair], node_count: usize) -> Result<NaiveBayesModel> {
    if pairs.is_empty() {
        return invalid("naive Bayes needs at least one pair");
    }
    let mut in_decision = vec![0; node_count];
    let mut counts: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    for p in pairs {
        if let Some(&v) = p.query.iter().chain(&p.decision).find(|&&v| v >= node_count) {
            return invalid(format!("node {v} out of range for {node_count} nodes"));
        }
        for &v in &p.decision {
            in_decision[v] += 1;
            for &u in &p.query {
                *counts.entry((u, v)).or_default() += 1;
            }
        }
    }
    let mut cooccur = vec![Vec::new(); node_count];
    for ((u, v), c) in counts {
        cooccur[u].push((v, c));
    }
    for list in &mut cooccur {
        list.sort_unstable();
    }
    Ok(NaiveBayesModel { samples: pairs.len(), in_decision, cooccur })
}

/// Top `k` nodes by log-score, ties to the smaller id; sorted by id.
pub fn nb_predict(nb: &NaiveBayesModel, x: &[NodeId], k: usize) -> Result<Vec<NodeId>> {
    let n = nb.node_count();
    if let Some(&u) = x.iter().find(|&&u| u >= n) {
        return invalid(format!("node {u} out of range for {n} nodes"));
    }
    let scores = nb.log_scores(x);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k.min(n));
    order.sort_unstable();
    Ok(order)
}
