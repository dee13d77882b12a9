use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::model::{DiffusionModel, ModelDescriptor};
use crate::error::{invalid, Result};
use crate::graph::{Graph, NodeId};
use crate::rng;

/// A sampled live-edge subgraph with one positive travel time per live edge.
#[derive(Clone, Debug)]
pub struct Realization {
    graph: Arc<Graph>,
    /// Live edge indices, ascending.
    live: Vec<u32>,
    times: Vec<f64>,
    /// Live out-adjacency, grouped by source (live edges are already sorted by source).
    out_offsets: Vec<u32>,
    out_targets: Vec<u32>,
    /// Live in-adjacency: sources grouped by target.
    in_offsets: Vec<u32>,
    in_sources: Vec<u32>,
}

impl PartialEq for Realization {
    fn eq(&self, other: &Self) -> bool {
        self.graph.content_hash() == other.graph.content_hash()
            && self.live == other.live
            && self.times.iter().map(|t| t.to_bits()).eq(other.times.iter().map(|t| t.to_bits()))
    }
}

impl Realization {
    /// Builds a realization from `(edge index, travel time)` pairs.
    pub fn from_live_edges(graph: Arc<Graph>, live: Vec<(usize, f64)>) -> Result<Self> {
        let mut live = live;
        live.sort_by_key(|&(e, _)| e);
        for w in live.windows(2) {
            if w[0].0 == w[1].0 {
                return invalid(format!("edge {} listed twice", w[0].0));
            }
        }
        for &(e, t) in &live {
            if e >= graph.edge_count() {
                return invalid(format!("edge index {e} out of range"));
            }
            if !(t > 0.0 && t.is_finite()) {
                return invalid(format!("travel time {t} on edge {e} is not positive"));
            }
        }
        let (idx, times): (Vec<u32>, Vec<f64>) = live.into_iter().map(|(e, t)| (e as u32, t)).unzip();
        Ok(Self::assemble(graph, idx, times))
    }

    fn assemble(graph: Arc<Graph>, live: Vec<u32>, times: Vec<f64>) -> Self {
        let n = graph.node_count();
        let mut out_offsets = vec![0u32; n + 1];
        let mut in_offsets = vec![0u32; n + 1];
        let mut out_targets = Vec::with_capacity(live.len());
        for &e in &live {
            let (u, v) = graph.edge(e as usize);
            out_offsets[u + 1] += 1;
            in_offsets[v + 1] += 1;
            out_targets.push(v as u32);
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0u32; live.len()];
        for &e in &live {
            let (u, v) = graph.edge(e as usize);
            in_sources[cursor[v] as usize] = u as u32;
            cursor[v] += 1;
        }
        Self { graph, live, times, out_offsets, out_targets, in_offsets, in_sources }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live.len()
    }

    /// `(edge index, travel time)` for every live edge, ascending by index.
    pub fn live_edges(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.live.iter().zip(&self.times).map(|(&e, &t)| (e as usize, t))
    }

    pub fn is_live(&self, edge: usize) -> bool {
        self.live.binary_search(&(edge as u32)).is_ok()
    }

    pub fn travel_time(&self, edge: usize) -> Option<f64> {
        self.live.binary_search(&(edge as u32)).ok().map(|i| self.times[i])
    }

    /// Live successors of `u` with their travel times.
    pub fn live_out(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let (a, b) = (self.out_offsets[u] as usize, self.out_offsets[u + 1] as usize);
        self.out_targets[a..b].iter().zip(&self.times[a..b]).map(|(&v, &t)| (v as usize, t))
    }

    /// Live predecessors of `v`.
    pub fn live_in(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let (a, b) = (self.in_offsets[v] as usize, self.in_offsets[v + 1] as usize);
        self.in_sources[a..b].iter().map(|&u| u as usize)
    }
}

/// Inverse-CDF Weibull draw, clamped into the positive finite range.
fn weibull_time(r: &mut impl Rng, shape: f64, scale: f64) -> f64 {
    let u: f64 = r.sample(Open01);
    let t = scale * (-u.ln()).powf(1.0 / shape);
    if t.is_nan() {
        f64::MIN_POSITIVE
    } else {
        t.clamp(f64::MIN_POSITIVE, f64::MAX)
    }
}

/// Draws one realization using the given RNG: per edge in index order, one
/// uniform for liveness and, if live, one for the travel time.
pub fn sample_with(model: &DiffusionModel, r: &mut impl Rng) -> Realization {
    let mut live = Vec::new();
    let mut times = Vec::new();
    for (e, prm) in model.params().iter().enumerate() {
        if r.random::<f64>() < prm.p {
            live.push(e as u32);
            times.push(weibull_time(r, prm.shape, prm.scale));
        }
    }
    Realization::assemble(model.graph().clone(), live, times)
}

/// Samples a realization from the stream `(seed, 0)`.
pub fn sample_realization(model: &DiffusionModel, seed: u64) -> Realization {
    sample_with(model, &mut rng::stream(seed, 0))
}

/// An ordered set of realizations over one graph.
#[derive(Clone, Debug)]
pub struct RealizationBank {
    realizations: Vec<Realization>,
    model: ModelDescriptor,
    model_hash: String,
    seed: u64,
    hash: OnceLock<String>,
}

impl RealizationBank {
    pub fn new(realizations: Vec<Realization>, model: ModelDescriptor, model_hash: String, seed: u64) -> Result<Self> {
        let Some(first) = realizations.first() else {
            return invalid("a realization bank needs at least one realization");
        };
        let g = first.graph().clone();
        if realizations.iter().any(|r| !Arc::ptr_eq(r.graph(), &g) && **r.graph() != *g) {
            return invalid("realizations are over different graphs");
        }
        Ok(Self { realizations, model, model_hash, seed, hash: OnceLock::new() })
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    pub fn realizations(&self) -> &[Realization] {
        &self.realizations
    }

    pub fn graph(&self) -> &Arc<Graph> {
        self.realizations[0].graph()
    }

    pub fn model(&self) -> &ModelDescriptor {
        &self.model
    }

    pub fn model_hash(&self) -> &str {
        &self.model_hash
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The first `k` realizations as a bank of their own.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return invalid(format!("prefix of length {k} from a bank of {}", self.len()));
        }
        Self::new(self.realizations[..k].to_vec(), self.model.clone(), self.model_hash.clone(), self.seed)
    }

    /// Hash over the graph, the generating model and the bit patterns of every
    /// realization. Weight files refer to banks through this value.
    pub fn content_hash(&self) -> &str {
        self.hash.get_or_init(|| self.compute_hash())
    }

    fn compute_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.graph().content_hash().as_bytes());
        h.update(self.model_hash.as_bytes());
        h.update((self.len() as u64).to_le_bytes());
        for r in &self.realizations {
            h.update((r.live_edge_count() as u64).to_le_bytes());
            for (e, t) in r.live_edges() {
                h.update((e as u64).to_le_bytes());
                h.update(t.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Samples `k` realizations; realization `i` comes from stream `(seed, i)`, so a
/// bank is a prefix of any larger bank drawn with the same seed.
pub fn sample_bank(model: &DiffusionModel, k: usize, seed: u64) -> Result<RealizationBank> {
    if k == 0 {
        return invalid("bank size must be at least 1");
    }
    let realizations: Vec<Realization> = (0..k as u64)
        .into_par_iter()
        .map(|i| sample_with(model, &mut rng::stream(seed, i)))
        .collect();
    RealizationBank::new(realizations, model.descriptor().clone(), model.content_hash(), seed)
}
