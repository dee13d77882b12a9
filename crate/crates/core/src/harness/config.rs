use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::TaskKind;
use crate::learner::{TrainMethod, TrainerConfig};

/// Where the experiment graph comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    /// Directed Erdős–Rényi graph with `nodes` and about `edges` edges.
    Er { nodes: usize, edges: usize },
    /// Edge-list file.
    File(PathBuf),
}

impl FromStr for GraphSource {
    type Err = Error;

    /// `er:<nodes>:<edges>` or a path, optionally prefixed with `file:`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("er:") {
            let (n, e) = rest.split_once(':').ok_or_else(|| Error::InvalidArgument(format!("bad graph spec {s:?}")))?;
            let parse = |t: &str| t.parse::<usize>().map_err(|e| Error::InvalidArgument(format!("{s:?}: {e}")));
            return Ok(GraphSource::Er { nodes: parse(n)?, edges: parse(e)? });
        }
        Ok(GraphSource::File(PathBuf::from(s.strip_prefix("file:").unwrap_or(s))))
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Er { nodes, edges } => write!(f, "er:{nodes}:{edges}"),
            GraphSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Distribution the training realizations are drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Empirical {
    /// Every true parameter redrawn within a relative band of width `q`.
    Perturbed(f64),
    /// All parameters uniform on [0, 1].
    Random,
}

impl FromStr for Empirical {
    type Err = Error;

    /// `q<value>` or `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "inf" || t == "random" {
            return Ok(Empirical::Random);
        }
        match t.strip_prefix('q').map(str::parse::<f64>) {
            Some(Ok(q)) if q > 0.0 && q.is_finite() => Ok(Empirical::Perturbed(q)),
            _ => invalid(format!("unknown empirical distribution {s:?}, expected q<value> or inf")),
        }
    }
}

impl fmt::Display for Empirical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Empirical::Perturbed(q) => write!(f, "M_{q}"),
            Empirical::Random => f.write_str("M_inf"),
        }
    }
}

fn default_empirical() -> Vec<String> {
    vec!["q0.1".into(), "inf".into()]
}

/// Flat experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// `er:<nodes>:<edges>` or an edge-list path (relative to the config file).
    pub graph: String,
    pub source: TaskKind,
    pub target: TaskKind,
    /// Entries like `q0.1` or `inf`.
    pub empirical: Vec<String>,
    pub k_values: Vec<usize>,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    /// Source-task pairs generated once; training sets are drawn from it.
    pub source_pool: usize,
    /// Target-task pairs generated once; test sets are drawn from it.
    pub target_pool: usize,
    /// Realizations behind the greedy decisions of generated pairs.
    pub pair_eval_bank: usize,
    /// Realizations of the true model used to score decisions.
    pub eval_samples: usize,
    pub repetitions: usize,
    pub baselines: bool,
    pub c: f64,
    pub cstar: f64,
    pub method: TrainMethod,
    pub epochs: usize,
    pub eta0: f64,
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainerConfig::default();
        Self {
            master_seed: 0,
            graph: "er:512:650".into(),
            source: TaskKind::Dc,
            target: TaskKind::De,
            empirical: default_empirical(),
            k_values: vec![15, 30, 60],
            train_sizes: vec![270],
            test_size: 540,
            source_pool: 2700,
            target_pool: 2700,
            pair_eval_bank: 200,
            eval_samples: 200,
            repetitions: 5,
            baselines: true,
            c: t.c,
            cstar: t.cstar,
            method: t.method,
            epochs: t.epochs,
            eta0: t.eta0,
            tolerance: t.tolerance,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative graph paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let GraphSource::File(p) = cfg.graph_source()? {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.graph = format!("file:{}", base.join(p).display());
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn graph_source(&self) -> Result<GraphSource> {
        self.graph.parse()
    }

    pub fn empirical_specs(&self) -> Result<Vec<Empirical>> {
        self.empirical.iter().map(|s| s.parse()).collect()
    }

    pub fn trainer(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            c: self.c,
            cstar: self.cstar,
            method: self.method,
            epochs: self.epochs,
            eta0: self.eta0,
            tolerance: self.tolerance,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph_source()?;
        self.empirical_specs()?;
        self.trainer(0).validate()?;
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return invalid("k_values must be non-empty and positive");
        }
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return invalid("train_sizes must be non-empty and positive");
        }
        let max_m = *self.train_sizes.iter().max().expect("non-empty");
        if max_m > self.source_pool {
            return invalid(format!("training size {max_m} exceeds the source pool of {}", self.source_pool));
        }
        if self.test_size == 0 || self.test_size > self.target_pool {
            return invalid(format!("test size must lie in 1..={}", self.target_pool));
        }
        if self.pair_eval_bank == 0 || self.eval_samples == 0 || self.repetitions == 0 {
            return invalid("bank sizes and repetitions must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(
            "master_seed = 3\ngraph = \"er:100:200\"\nsource = \"de\"\nempirical = [\"q0.5\"]\nk_values = [4]\n\
             train_sizes = [10]\ntest_size = 5\nsource_pool = 20\ntarget_pool = 10\nmethod = \"n_slack\"\n",
        )
        .unwrap();
        assert_eq!(cfg.source, TaskKind::De);
        assert_eq!(cfg.target, TaskKind::De);
        assert_eq!(cfg.method, TrainMethod::NSlack);
        assert_eq!(cfg.graph_source().unwrap(), GraphSource::Er { nodes: 100, edges: 200 });
        assert_eq!(cfg.empirical_specs().unwrap(), vec![Empirical::Perturbed(0.5)]);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("unknown = 1").is_err());
        assert!(ExperimentConfig::from_toml("empirical = [\"q0\"]").is_err());
        assert!(ExperimentConfig::from_toml("train_sizes = [5000]").is_err());
        assert!(ExperimentConfig::from_toml("cstar = 2.0").is_err());
        assert!(ExperimentConfig::from_toml("graph = \"er:10\"").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(Empirical::Perturbed(0.1).to_string(), "M_0.1");
        assert_eq!("inf".parse::<Empirical>().unwrap().to_string(), "M_inf");
        assert_eq!("file:a/b.txt".parse::<GraphSource>().unwrap(), GraphSource::File("a/b.txt".into()));
    }
}
