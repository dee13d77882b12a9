//! Model files (JSON) and realization-bank files (JSON header plus
//! little-endian binary body).

use std::io::{Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::model::{DiffusionModel, EdgeParams, ModelDescriptor};
use super::realization::{Realization, RealizationBank};
use crate::error::{Error, Result};
use crate::graph::Graph;

const MODEL_FORMAT: &str = "diffusion-model/1";
const BANK_MAGIC: &[u8; 8] = b"RBANK\x00\x01\n";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    graph_hash: String,
    node_count: usize,
    descriptor: ModelDescriptor,
    /// `(u, v, p, shape, scale)` per edge in canonical order.
    edges: Vec<(usize, usize, f64, f64, f64)>,
}

pub fn write_model(model: &DiffusionModel, mut w: impl Write) -> Result<()> {
    let g = model.graph();
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        graph_hash: g.content_hash(),
        node_count: g.node_count(),
        descriptor: model.descriptor().clone(),
        edges: g
            .edges()
            .iter()
            .zip(model.params())
            .map(|(&(u, v), p)| (u, v, p.p, p.shape, p.scale))
            .collect(),
    };
    serde_json::to_writer(&mut w, &file)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_model(r: impl Read) -> Result<DiffusionModel> {
    let file: ModelFile = serde_json::from_reader(r)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unsupported model format {:?}", file.format)));
    }
    let (g, stats) = Graph::from_edges(file.node_count, file.edges.iter().map(|e| (e.0, e.1)))?;
    if stats.duplicates + stats.self_loops > 0 || g.edges().iter().zip(&file.edges).any(|(a, b)| *a != (b.0, b.1)) {
        return Err(Error::Format("model edges are not in canonical order".into()));
    }
    if g.content_hash() != file.graph_hash {
        return Err(Error::Format("model graph hash mismatch".into()));
    }
    let params = file.edges.iter().map(|e| EdgeParams { p: e.2, shape: e.3, scale: e.4 }).collect();
    DiffusionModel::new(Arc::new(g), params, file.descriptor)
}

/// Header of a realization-bank file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankHeader {
    pub k: usize,
    pub graph_hash: String,
    pub model_hash: String,
    pub model: ModelDescriptor,
    pub seed: u64,
    pub bank_hash: String,
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn write_bank(bank: &RealizationBank, mut w: impl Write) -> Result<()> {
    let g = bank.graph();
    let header = BankHeader {
        k: bank.len(),
        graph_hash: g.content_hash(),
        model_hash: bank.model_hash().to_string(),
        model: bank.model().clone(),
        seed: bank.seed(),
        bank_hash: bank.content_hash().to_string(),
        node_count: g.node_count(),
        edges: g.edges().to_vec(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(BANK_MAGIC)?;
    w.write_u64::<LittleEndian>(json.len() as u64)?;
    w.write_all(&json)?;
    for r in bank.realizations() {
        w.write_u64::<LittleEndian>(r.live_edge_count() as u64)?;
        for (e, t) in r.live_edges() {
            w.write_u64::<LittleEndian>(e as u64)?;
            w.write_f64::<LittleEndian>(t)?;
        }
    }
    Ok(())
}

pub fn read_bank(mut r: impl Read) -> Result<RealizationBank> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BANK_MAGIC {
        return Err(Error::Format("not a realization bank file".into()));
    }
    let len = r.read_u64::<LittleEndian>()? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: BankHeader = serde_json::from_slice(&json)?;
    let (g, _) = Graph::from_edges(header.node_count, header.edges.iter().copied())?;
    if g.content_hash() != header.graph_hash {
        return Err(Error::Format("bank graph hash mismatch".into()));
    }
    let g = Arc::new(g);
    let mut realizations = Vec::with_capacity(header.k);
    for _ in 0..header.k {
        let count = r.read_u64::<LittleEndian>()? as usize;
        let mut live = Vec::with_capacity(count);
        for _ in 0..count {
            let e = r.read_u64::<LittleEndian>()? as usize;
            let t = r.read_f64::<LittleEndian>()?;
            live.push((e, t));
        }
        realizations.push(Realization::from_live_edges(g.clone(), live)?);
    }
    let bank = RealizationBank::new(realizations, header.model, header.model_hash, header.seed)?;
    if bank.content_hash() != header.bank_hash {
        return Err(Error::Format("bank content hash mismatch".into()));
    }
    Ok(bank)
}
