//! Baselines, performance ratios and the end-to-end experiment runner.

mod baselines;
mod config;
mod experiment;
mod ratio;
mod report;

pub use baselines::{hd_predict, nb_predict, nb_train, random_predict, NaiveBayesModel};
pub use config::{Empirical, ExperimentConfig, GraphSource};
pub use experiment::{build_graph, empirical_model, run_experiment};
pub use ratio::{performance_ratio, QueryEvaluator, RatioOutcome};
pub use report::{summarize, CellKey, CellSummary, EvaluationReport, Method, QueryRecord, TrainingRecord};
