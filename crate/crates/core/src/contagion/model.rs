use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::rng;

/// Lower bound applied to Weibull shape and scale parameters.
pub const PARAM_FLOOR: f64 = 1e-6;

/// Per-edge parameters: activation probability and Weibull shape/scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub p: f64,
    pub shape: f64,
    pub scale: f64,
}

impl EdgeParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return invalid(format!("activation probability {} outside [0, 1]", self.p));
        }
        if !(self.shape > 0.0 && self.shape.is_finite() && self.scale > 0.0 && self.scale.is_finite()) {
            return invalid(format!("Weibull parameters must be positive, got ({}, {})", self.shape, self.scale));
        }
        Ok(())
    }
}

/// How a model was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDescriptor {
    /// Weighted cascade probabilities with integer Weibull parameters.
    True { seed: u64 },
    /// Parameters redrawn around a parent model.
    Perturbed { q: f64, seed: u64, parent: String },
    /// All parameters uniform on [0, 1].
    Random { seed: u64 },
    /// Parameters supplied directly.
    Explicit,
}

impl ModelDescriptor {
    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelDescriptor::True { seed }
            | ModelDescriptor::Perturbed { seed, .. }
            | ModelDescriptor::Random { seed } => Some(*seed),
            ModelDescriptor::Explicit => None,
        }
    }
}

/// Independent-cascade model with Weibull transmission times.
#[derive(Clone, Debug)]
pub struct DiffusionModel {
    graph: Arc<Graph>,
    params: Vec<EdgeParams>,
    descriptor: ModelDescriptor,
}

impl DiffusionModel {
    /// One parameter triple per edge, in edge-index order.
    pub fn new(graph: Arc<Graph>, params: Vec<EdgeParams>, descriptor: ModelDescriptor) -> Result<Self> {
        if params.len() != graph.edge_count() {
            return invalid(format!(
                "{} parameter triples for {} edges",
                params.len(),
                graph.edge_count()
            ));
        }
        for p in &params {
            p.validate()?;
        }
        Ok(Self { graph, params, descriptor })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn params(&self) -> &[EdgeParams] {
        &self.params
    }

    pub fn descriptor(&self) -> &ModelDescriptor {
        &self.descriptor
    }

    /// Hash over the graph hash and the bit patterns of every parameter.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.graph.content_hash().as_bytes());
        for p in &self.params {
            h.update(p.p.to_bits().to_le_bytes());
            h.update(p.shape.to_bits().to_le_bytes());
            h.update(p.scale.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Weighted-cascade model: `p(v, u) = 1 / indeg(u)`, shape and scale uniform
/// over the integers 1..=10.
pub fn build_true_model(graph: Arc<Graph>, seed: u64) -> Result<DiffusionModel> {
    if graph.edge_count() == 0 {
        return invalid("graph has no edges");
    }
    let mut r = rng::rng(seed);
    let params = graph
        .edges()
        .iter()
        .map(|&(_, v)| EdgeParams {
            p: 1.0 / graph.in_degree(v) as f64,
            shape: f64::from(r.random_range(1..=10u32)),
            scale: f64::from(r.random_range(1..=10u32)),
        })
        .collect();
    DiffusionModel::new(graph, params, ModelDescriptor::True { seed })
}

fn redraw(r: &mut impl Rng, theta: f64, q: f64) -> f64 {
    let lo = theta * (1.0 - q);
    let hi = theta * (1.0 + q);
    if hi > lo {
        r.random_range(lo..hi)
    } else {
        lo
    }
}

/// Redraws every parameter uniformly from `[θ(1 - q), θ(1 + q)]`. Probabilities
/// are clipped to [0, 1], Weibull parameters floored at [`PARAM_FLOOR`].
pub fn perturb_model(model: &DiffusionModel, q: f64, seed: u64) -> Result<DiffusionModel> {
    if q <= 0.0 || !q.is_finite() {
        return invalid(format!("perturbation level must be positive, got {q}"));
    }
    let mut r = rng::rng(seed);
    let params = model
        .params
        .iter()
        .map(|e| EdgeParams {
            p: redraw(&mut r, e.p, q).clamp(0.0, 1.0),
            shape: redraw(&mut r, e.shape, q).max(PARAM_FLOOR),
            scale: redraw(&mut r, e.scale, q).max(PARAM_FLOOR),
        })
        .collect();
    let descriptor = ModelDescriptor::Perturbed { q, seed, parent: model.content_hash() };
    DiffusionModel::new(model.graph.clone(), params, descriptor)
}

/// Every parameter uniform on [0, 1]; Weibull parameters floored at
/// [`PARAM_FLOOR`].
pub fn random_model(graph: Arc<Graph>, seed: u64) -> Result<DiffusionModel> {
    if graph.edge_count() == 0 {
        return invalid("graph has no edges");
    }
    let mut r = rng::rng(seed);
    let params = (0..graph.edge_count())
        .map(|_| EdgeParams {
            p: r.random::<f64>(),
            shape: r.random::<f64>().max(PARAM_FLOOR),
            scale: r.random::<f64>().max(PARAM_FLOOR),
        })
        .collect();
    DiffusionModel::new(graph, params, ModelDescriptor::Random { seed })
}
