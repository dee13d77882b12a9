use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::ratio::RatioOutcome;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Learned hypothesis with the all-ones weights it starts from.
    SiInitial,
    /// Learned hypothesis after training.
    SiFinal,
    Hd,
    Random,
    Nb,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::SiInitial => "si-initial",
            Method::SiFinal => "si-final",
            Method::Hd => "hd",
            Method::Random => "random",
            Method::Nb => "nb",
        }
    }
}

/// Identifies one table cell. Fields that do not apply to a method are `None`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellKey {
    pub method: Method,
    pub empirical: Option<String>,
    pub k: Option<usize>,
    pub m: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecord {
    pub repetition: usize,
    #[serde(flatten)]
    pub key: CellKey,
    /// Index of the query in the target pool.
    pub query: usize,
    /// `None` when degenerate.
    pub ratio: Option<f64>,
}

impl QueryRecord {
    pub fn new(repetition: usize, key: CellKey, query: usize, r: RatioOutcome) -> Self {
        Self { repetition, key, query, ratio: (!r.degenerate).then_some(r.value) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingRecord {
    pub repetition: usize,
    pub empirical: String,
    pub k: usize,
    pub m: usize,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub steps: usize,
}

/// Aggregate over repetitions: mean and sample standard deviation of the
/// per-repetition mean ratios.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub key: CellKey,
    pub mean: f64,
    pub std: f64,
    pub repetition_means: Vec<f64>,
    pub evaluated: usize,
    pub degenerate: usize,
    pub above_one: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub config: ExperimentConfig,
    pub graph_hash: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub true_model_hash: String,
    pub cells: Vec<CellSummary>,
    pub training: Vec<TrainingRecord>,
    pub queries: Vec<QueryRecord>,
    /// Wall-clock seconds per phase; shown in the table only.
    pub timings: Vec<(String, f64)>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

/// Folds per-query records into cells, ordered by key.
pub fn summarize(queries: &[QueryRecord], repetitions: usize) -> Vec<CellSummary> {
    let mut groups: BTreeMap<&CellKey, Vec<&QueryRecord>> = BTreeMap::new();
    for q in queries {
        groups.entry(&q.key).or_default().push(q);
    }
    groups
        .into_iter()
        .map(|(key, recs)| {
            let mut per_rep = vec![Vec::new(); repetitions];
            let mut degenerate = 0;
            let mut above_one = 0;
            for r in &recs {
                match r.ratio {
                    Some(v) => {
                        per_rep[r.repetition].push(v);
                        above_one += usize::from(v > 1.0);
                    }
                    None => degenerate += 1,
                }
            }
            let repetition_means: Vec<f64> =
                per_rep.iter().filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
            let (mean, std) = mean_std(&repetition_means);
            CellSummary {
                key: key.clone(),
                mean,
                std,
                repetition_means,
                evaluated: recs.len() - degenerate,
                degenerate,
                above_one,
            }
        })
        .collect()
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line<'a> {
    Experiment {
        config: &'a ExperimentConfig,
        graph_hash: &'a str,
        node_count: usize,
        edge_count: usize,
        true_model_hash: &'a str,
    },
    Cell(&'a CellSummary),
    Training(&'a TrainingRecord),
    Query(&'a QueryRecord),
}

impl EvaluationReport {
    pub fn cell(&self, method: Method, empirical: Option<&str>, k: Option<usize>, m: Option<usize>) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.key.method == method && c.key.empirical.as_deref() == empirical && c.key.k == k && c.key.m == m
        })
    }

    /// Line-delimited JSON: experiment header, cells, training runs, then
    /// every per-query ratio. Contains no timing, so reruns are identical.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let header = Line::Experiment {
            config: &self.config,
            graph_hash: &self.graph_hash,
            node_count: self.node_count,
            edge_count: self.edge_count,
            true_model_hash: &self.true_model_hash,
        };
        let lines = std::iter::once(header)
            .chain(self.cells.iter().map(Line::Cell))
            .chain(self.training.iter().map(Line::Training))
            .chain(self.queries.iter().map(Line::Query));
        for line in lines {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn render_table(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}-{} on {} ({} nodes, {} edges), {} repetitions, test size {}",
            c.source.tag().to_uppercase(),
            c.target.tag().to_uppercase(),
            c.graph,
            self.node_count,
            self.edge_count,
            c.repetitions,
            c.test_size
        );
        let _ = writeln!(
            s,
            "{:<11} {:<8} {:>4} {:>6} {:>8} {:>8} {:>6} {:>5} {:>5}",
            "method", "dist", "K", "m", "mean", "std", "n", "degen", ">1"
        );
        let opt = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
        for cell in &self.cells {
            let _ = writeln!(
                s,
                "{:<11} {:<8} {:>4} {:>6} {:>8.4} {:>8.4} {:>6} {:>5} {:>5}",
                cell.key.method.label(),
                cell.key.empirical.as_deref().unwrap_or("-"),
                opt(cell.key.k),
                opt(cell.key.m),
                cell.mean,
                cell.std,
                cell.evaluated,
                cell.degenerate,
                cell.above_one
            );
        }
        if !self.timings.is_empty() {
            let _ = writeln!(s, "timing:");
            for (label, secs) in &self.timings {
                let _ = writeln!(s, "  {label:<32} {secs:>9.2}s");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(method: Method) -> CellKey {
        CellKey { method, empirical: None, k: None, m: None }
    }

    #[test]
    fn summary_statistics() {
        let r = |rep, v: Option<f64>| QueryRecord { repetition: rep, key: key(Method::Hd), query: 0, ratio: v };
        let recs = vec![r(0, Some(0.5)), r(0, Some(1.5)), r(1, Some(0.5)), r(1, None), r(2, Some(2.0))];
        let cells = summarize(&recs, 3);
        assert_eq!(cells.len(), 1);
        let c = &cells[0];
        assert_eq!(c.repetition_means, vec![1.0, 0.5, 2.0]);
        assert!((c.mean - 7.0 / 6.0).abs() < 1e-12);
        let var = ((1.0f64 - 7.0 / 6.0).powi(2) + (0.5f64 - 7.0 / 6.0).powi(2) + (2.0f64 - 7.0 / 6.0).powi(2)) / 2.0;
        assert!((c.std - var.sqrt()).abs() < 1e-12);
        assert_eq!((c.evaluated, c.degenerate, c.above_one), (4, 1, 2));
    }
}
