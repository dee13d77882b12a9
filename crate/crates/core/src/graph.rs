//! Directed graphs with dense node ids, edge-list ingestion and an
//! Erdős–Rényi generator.
//!
//! Edges are kept sorted by `(source, target)`, so an edge index is stable for a
//! given edge set and the out-edges of a node form a contiguous index range.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Dense 0-based node identifier.
pub type NodeId = usize;

/// Immutable directed graph without self-loops or parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    out_offsets: Vec<usize>,
    in_offsets: Vec<usize>,
    /// Edge indices grouped by target node.
    in_edges: Vec<usize>,
}

/// What ingestion discarded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    /// Builds a graph from an arbitrary edge iterator. Self-loops and duplicates
    /// are dropped and counted.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<(Self, LoadStats)> {
        let mut stats = LoadStats::default();
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return invalid(format!("edge ({u}, {v}) out of range for {node_count} nodes"));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            list.push((u, v));
        }
        list.sort_unstable();
        let before = list.len();
        list.dedup();
        stats.duplicates = before - list.len();
        Ok((Self::from_canonical(node_count, list), stats))
    }

    fn from_canonical(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_counts = vec![0usize; node_count + 1];
        for &(u, v) in &edges {
            out_offsets[u + 1] += 1;
            in_counts[v + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts.clone();
        let mut cursor = in_counts;
        let mut in_edges = vec![0usize; edges.len()];
        for (idx, &(_, v)) in edges.iter().enumerate() {
            in_edges[cursor[v]] = idx;
            cursor[v] += 1;
        }
        Self { node_count, edges, out_offsets, in_offsets, in_edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonically ordered edge list.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (NodeId, NodeId) {
        self.edges[idx]
    }

    /// Index range of the out-edges of `u`.
    pub fn out_edge_range(&self, u: NodeId) -> std::ops::Range<usize> {
        self.out_offsets[u]..self.out_offsets[u + 1]
    }

    /// Indices of the in-edges of `v`, ordered by source.
    pub fn in_edge_indices(&self, v: NodeId) -> &[usize] {
        &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges[self.out_edge_range(u)].iter().map(|&(_, v)| v)
    }

    pub fn in_neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.in_edge_indices(v).iter().map(move |&e| self.edges[e].0)
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// Index of edge `(u, v)` if present.
    pub fn find_edge(&self, u: NodeId, v: NodeId) -> Option<usize> {
        if u >= self.node_count {
            return None;
        }
        let range = self.out_edge_range(u);
        let start = range.start;
        self.edges[range].binary_search(&(u, v)).ok().map(|i| start + i)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v < self.node_count
    }

    /// SHA-256 over the node count and canonical edge list, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.node_count as u64).to_le_bytes());
        for &(u, v) in &self.edges {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Serializes to the edge-list text format. The node count is recorded in a
    /// comment so trailing isolated nodes survive a round trip.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::with_capacity(self.edges.len() * 10 + 32);
        let _ = writeln!(s, "# nodes {}", self.node_count);
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(i64, i64)> {
    let mut toks = line.split_whitespace();
    let mut next = |what: &str| -> Result<i64> {
        let tok = toks.next().ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("missing {what} node id"),
        })?;
        tok.parse::<i64>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid node id {tok:?}"),
        })
    };
    let u = next("source")?;
    let v = next("target")?;
    if toks.next().is_some() {
        return Err(Error::Parse { line: lineno, msg: "expected exactly two ids".into() });
    }
    if u < 0 || v < 0 {
        return Err(Error::Parse { line: lineno, msg: "negative node id".into() });
    }
    Ok((u, v))
}

type RawEdges = Vec<(u64, u64)>;

/// Scans the edge-list text into raw pairs plus an optional `# nodes N` hint.
fn scan(reader: impl BufRead) -> Result<(RawEdges, Option<usize>)> {
    let mut pairs = Vec::new();
    let mut hint = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("nodes") {
                hint = it.next().and_then(|n| n.parse().ok());
            }
            continue;
        }
        let (u, v) = parse_pair(t, i + 1)?;
        pairs.push((u as u64, v as u64));
    }
    Ok((pairs, hint))
}

/// Parses the edge-list format: one `u v` pair per line, `#` comments ignored.
/// The node count is `1 + max id` (or the `# nodes N` header if larger).
pub fn load_edge_list(reader: impl BufRead) -> Result<(Graph, LoadStats)> {
    let (pairs, hint) = scan(reader)?;
    let max_id = pairs.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    let n = max_id.max(hint.unwrap_or(0));
    let (g, stats) = Graph::from_edges(n, pairs.into_iter().map(|(u, v)| (u as usize, v as usize)))?;
    if stats.duplicates + stats.self_loops > 0 {
        log::info!(
            "edge list: dropped {} duplicate edges and {} self-loops",
            stats.duplicates,
            stats.self_loops
        );
    }
    Ok((g, stats))
}

/// Like [`load_edge_list`] but remaps sparse external ids to dense ones in
/// order of first appearance. Returns the external id of every dense node.
pub fn load_edge_list_remapped(reader: impl BufRead) -> Result<(Graph, LoadStats, Vec<u64>)> {
    let (pairs, _) = scan(reader)?;
    let mut map: HashMap<u64, usize> = HashMap::new();
    let mut external = Vec::new();
    let mut id = |x: u64| {
        *map.entry(x).or_insert_with(|| {
            external.push(x);
            external.len() - 1
        })
    };
    let dense: Vec<(usize, usize)> = pairs.into_iter().map(|(u, v)| (id(u), id(v))).collect();
    let (g, stats) = Graph::from_edges(external.len(), dense)?;
    Ok((g, stats, external))
}

/// Directed G(n, p) with `p = expected_edges / (n (n - 1))`, one Bernoulli draw
/// per ordered pair in row-major order.
pub fn generate_er(n: usize, expected_edges: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return invalid("ER generator needs at least 2 nodes");
    }
    let max = n * (n - 1);
    if expected_edges > max {
        return invalid(format!("{expected_edges} edges requested but at most {max} possible"));
    }
    let p = expected_edges as f64 / max as f64;
    let mut r = rng::rng(seed);
    let mut edges = Vec::with_capacity(expected_edges + expected_edges / 4);
    for u in 0..n {
        for v in 0..n {
            if u != v && r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_canonical(n, edges))
}

/// The `k` nodes of highest total degree, ordered by `(-degree, id)`.
pub fn top_degree_nodes(g: &Graph, k: usize) -> Result<Vec<NodeId>> {
    if k > g.node_count() {
        return invalid(format!("k = {k} exceeds node count {}", g.node_count()));
    }
    let mut nodes: Vec<NodeId> = (0..g.node_count()).collect();
    let deg = |v: NodeId| g.in_degree(v) + g.out_degree(v);
    nodes.sort_by_key(|&v| (std::cmp::Reverse(deg(v)), v));
    nodes.truncate(k);
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(s: &str) -> (Graph, LoadStats) {
        load_edge_list(s.as_bytes()).unwrap()
    }

    #[test]
    fn loads_simple_list() {
        let (g, stats) = load("0 1\n1 2");
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn drops_duplicates_and_self_loops() {
        let (g, stats) = load("0 1\n0 1\n1 1");
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(stats, LoadStats { duplicates: 1, self_loops: 1 });
    }

    #[test]
    fn empty_input() {
        let (g, _) = load("");
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        let (g, _) = load("# only a comment\n\n");
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match load_edge_list("0 1\n# c\n2 x\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match load_edge_list("0 -1\n".as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("negative"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_edge_list("0 1 2\n".as_bytes()).is_err());
        assert!(load_edge_list("7\n".as_bytes()).is_err());
    }

    #[test]
    fn adjacency_is_consistent() {
        let (g, _) = load("2 0\n0 1\n1 2\n0 2\n3 2");
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2), (2, 0), (3, 2)]);
        assert_eq!(g.out_neighbors(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(g.in_neighbors(2).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(g.find_edge(3, 2), Some(4));
        assert_eq!(g.find_edge(2, 3), None);
        for (idx, &(u, v)) in g.edges().iter().enumerate() {
            assert!(g.out_edge_range(u).contains(&idx));
            assert!(g.in_edge_indices(v).contains(&idx));
        }
    }

    #[test]
    fn remapping_densifies_ids() {
        let (g, _, ext) = load_edge_list_remapped("100 7\n7 42\n".as_bytes()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(ext, vec![100, 7, 42]);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn er_edge_count_within_three_sigma() {
        let n = 512;
        let p = 650.0 / (n * (n - 1)) as f64;
        let sigma = (650.0 * (1.0 - p)).sqrt();
        for seed in 0..5 {
            let g = generate_er(n, 650, seed).unwrap();
            let dev = (g.edge_count() as f64 - 650.0).abs();
            assert!(dev <= 3.0 * sigma, "seed {seed}: {} edges", g.edge_count());
        }
    }

    #[test]
    fn er_edge_cases() {
        assert_eq!(generate_er(10, 0, 3).unwrap().edge_count(), 0);
        assert_eq!(generate_er(4, 12, 3).unwrap().edge_count(), 12);
        assert!(generate_er(4, 13, 3).is_err());
        assert!(generate_er(1, 0, 3).is_err());
        assert_eq!(generate_er(64, 100, 9).unwrap(), generate_er(64, 100, 9).unwrap());
    }

    #[test]
    fn top_degree_examples() {
        let (star, _) = load("0 3\n1 3\n2 3\n3 4");
        assert_eq!(top_degree_nodes(&star, 1).unwrap(), vec![3]);
        assert!(top_degree_nodes(&star, 0).unwrap().is_empty());
        let (path, _) = load("0 1\n1 2");
        assert_eq!(top_degree_nodes(&path, 2).unwrap(), vec![1, 0]);
        assert!(top_degree_nodes(&path, 4).is_err());
    }

    proptest! {
        #[test]
        fn edge_list_round_trip(n in 1usize..30, seed in any::<u64>(), m in 0usize..60) {
            let m = m.min(n * n.saturating_sub(1));
            let g = if n >= 2 { generate_er(n, m, seed).unwrap() } else { Graph::from_edges(1, []).unwrap().0 };
            let (back, stats) = load_edge_list(g.to_edge_list().as_bytes()).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(stats, LoadStats::default());
            prop_assert_eq!(back.content_hash(), g.content_hash());
        }

        #[test]
        fn top_degree_is_sorted_prefix(n in 2usize..40, seed in any::<u64>(), k in 0usize..40) {
            let g = generate_er(n, n, seed).unwrap();
            let k = k.min(n);
            let top = top_degree_nodes(&g, k).unwrap();
            let key = |v: NodeId| (std::cmp::Reverse(g.in_degree(v) + g.out_degree(v)), v);
            let mut all: Vec<NodeId> = (0..n).collect();
            all.sort_by_key(|&v| key(v));
            prop_assert_eq!(&top[..], &all[..k]);
            prop_assert!(top.windows(2).all(|w| key(w[0]) < key(w[1])));
        }
    }
}
