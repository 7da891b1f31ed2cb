//! Experiment orchestration: lead sweeps, pair grids, repeated random
//! splits, fixed-split repetition, and result aggregation.

mod plan;
mod report;
mod runner;
mod stats;

pub use plan::{ExperimentPlan, PlanSplit, TrainOverrides};
pub use report::{summarize, write_reports, ReportPaths};
pub use runner::{run_plan, trial_config, LogRow, PlanResults, RunOptions, SetResults};
pub use stats::{aggregate, rank_leads, top_k, AggregateStats, LeadRanking};

#[derive(Debug, thiserror::Error)]
pub enum AblationError {
    #[error("no results to aggregate")]
    EmptyResults,
    #[error("top-k needs k <= n, got k={k} n={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid plan: {0}")]
    BadPlan(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Trainer(#[from] crate::trainer::TrainerError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
