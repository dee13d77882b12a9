use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;

use super::{greedy_max, GreedyMode};
use crate::contagion::{sample_bank, DiffusionModel};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId};
use crate::kernels::{BankContexts, BankObjective, TaskKind};
use crate::rng;

/// Tail exponent of the size distribution.
pub const PARETO_SHAPE: f64 = 2.5;
/// Nominal approximation ratio of greedy on monotone submodular objectives.
pub const GREEDY_RATIO: f64 = 1.0 - 1.0 / std::f64::consts::E;
/// Pareto scale that gives unit mean at [`PARETO_SHAPE`].
const PARETO_SCALE: f64 = (PARETO_SHAPE - 1.0) / PARETO_SHAPE;
const MAX_DECISION_BUDGET: usize = 50;

/// A query together with the decision made for it.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryDecisionPair {
    pub task: TaskKind,
    /// Sorted, distinct.
    pub query: Vec<NodeId>,
    /// Sorted, distinct.
    pub decision: Vec<NodeId>,
    pub budget: usize,
    pub ratio_tag: f64,
}

pub(crate) fn unit_pareto(r: &mut impl Rng) -> f64 {
    Pareto::new(PARETO_SCALE, PARETO_SHAPE).expect("valid Pareto parameters").sample(r)
}

/// Query size for a unit-mean power-law draw `s`.
pub fn query_size(task: TaskKind, s: f64, node_count: usize) -> usize {
    let scale = match task {
        TaskKind::De => 40.0,
        TaskKind::Dc => 10.0,
    };
    let hi = (node_count / 2).max(1);
    ((scale * s).round() as usize).clamp(1, hi)
}

/// Decision budget for a unit-mean power-law draw `s`.
pub fn decision_budget(s: f64) -> usize {
    ((10.0 * s).round() as usize).clamp(1, MAX_DECISION_BUDGET)
}

/// Random query with power-law size; members uniform without replacement.
pub fn generate_query(task: TaskKind, g: &Graph, r: &mut impl Rng) -> Result<Vec<NodeId>> {
    let n = g.node_count();
    if n == 0 {
        return invalid("cannot draw a query from an empty graph");
    }
    let size = query_size(task, unit_pareto(r), n);
    let mut q = index::sample(r, n, size).into_vec();
    q.sort_unstable();
    Ok(q)
}

/// Draws `count` queries and solves each with greedy on the bank average of
/// the task kernel, using one bank of `eval_bank_size` realizations from `m`.
pub fn generate_pairs(
    m: &DiffusionModel,
    task: TaskKind,
    count: usize,
    eval_bank_size: usize,
    seed: u64,
) -> Result<Vec<QueryDecisionPair>> {
    if count == 0 {
        return invalid("pair count must be at least 1");
    }
    if eval_bank_size == 0 {
        return invalid("evaluation bank size must be at least 1");
    }
    let bank = sample_bank(m, eval_bank_size, rng::derive_seed(seed, "pair-bank"))?;
    let ones = vec![1.0; eval_bank_size];
    let g = m.graph();
    let ground: Vec<NodeId> = (0..g.node_count()).collect();
    let query_seed = rng::derive_seed(seed, "pair-query");
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(query_seed, i);
            let query = generate_query(task, g, &mut r)?;
            let budget = decision_budget(unit_pareto(&mut r));
            let ctx = BankContexts::new(&bank, task, &query)?;
            let obj = BankObjective::new(&ctx, &ones)?;
            let mut decision = greedy_max(&obj, &ground, budget, GreedyMode::Lazy).selected;
            decision.sort_unstable();
            Ok(QueryDecisionPair { task, query, budget: decision.len(), decision, ratio_tag: GREEDY_RATIO })
        })
        .collect()
}

fn write_ids(w: &mut impl Write, ids: &[NodeId]) -> std::io::Result<()> {
    if ids.is_empty() {
        return w.write_all(b"-");
    }
    for (i, v) in ids.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{v}")?;
    }
    Ok(())
}

/// One pair per line: `task<TAB>budget<TAB>X<TAB>Y`, sets as comma-separated
/// sorted ids, `-` for the empty set.
pub fn write_pairs(pairs: &[QueryDecisionPair], mut w: impl Write) -> Result<()> {
    for p in pairs {
        write!(w, "{}\t{}\t", p.task, p.budget)?;
        write_ids(&mut w, &p.query)?;
        w.write_all(b"\t")?;
        write_ids(&mut w, &p.decision)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_ids(field: &str, line: usize) -> Result<Vec<NodeId>> {
    if field == "-" {
        return Ok(Vec::new());
    }
    let mut ids = field
        .split(',')
        .map(|s| s.trim().parse::<NodeId>().map_err(|e| Error::Parse { line, msg: format!("bad node id {s:?}: {e}") }))
        .collect::<Result<Vec<_>>>()?;
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Reads a pairs file; blank lines and `#` comments are skipped.
pub fn read_pairs(r: impl BufRead) -> Result<Vec<QueryDecisionPair>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line: no, msg: format!("expected 4 fields, found {}", fields.len()) });
        }
        let task = fields[0].parse().map_err(|e: Error| Error::Parse { line: no, msg: e.to_string() })?;
        let budget = fields[1]
            .parse()
            .map_err(|e| Error::Parse { line: no, msg: format!("bad budget {:?}: {e}", fields[1]) })?;
        let query = parse_ids(fields[2], no)?;
        let decision = parse_ids(fields[3], no)?;
        if decision.len() > budget {
            return Err(Error::Parse { line: no, msg: "decision larger than its budget".into() });
        }
        out.push(QueryDecisionPair { task, query, decision, budget, ratio_tag: GREEDY_RATIO });
    }
    Ok(out)
}
