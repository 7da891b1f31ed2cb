//! Report files: per-trial CSV, summary CSV/table, plot-ready series.
//!
//! Machine outputs keep full precision; the human-readable table rounds to
//! two decimals and prints "n/a" for undefined values.

use std::fs;
use std::path::{Path, PathBuf};

use super::runner::PlanResults;
use super::stats::{aggregate, top_k, AggregateStats};
use super::AblationError;

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub detail_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub summary_txt: PathBuf,
    pub series_csv: PathBuf,
    pub topk_csv: Option<PathBuf>,
}

fn float_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Summary stats per set, in plan order. Sets with zero successes are
/// skipped (they still appear in the detail file via their absence).
pub fn summarize(results: &PlanResults) -> Vec<(String, AggregateStats)> {
    results
        .sets
        .iter()
        .filter_map(|set| {
            let accuracies = set.accuracies();
            aggregate(&accuracies).ok().map(|s| (set.name.clone(), s))
        })
        .collect()
}

pub fn write_reports(
    out_dir: impl AsRef<Path>,
    results: &PlanResults,
) -> Result<ReportPaths, AblationError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;

    // Detail: one row per (set, trial).
    let detail_csv = out_dir.join("detail.csv");
    {
        let mut w = csv::Writer::from_path(&detail_csv)?;
        w.write_record([
            "lead_set",
            "trial",
            "seed",
            "split_digest",
            "accuracy",
            "sensitivity",
            "specificity",
            "precision",
        ])?;
        for set in &results.sets {
            for (trial, result) in set.trials.iter().enumerate() {
                let Some(r) = result else { continue };
                w.write_record([
                    set.name.clone(),
                    trial.to_string(),
                    r.seed.to_string(),
                    r.split_digest.clone(),
                    float_cell(r.test_metrics.accuracy),
                    float_cell(r.test_metrics.sensitivity),
                    float_cell(r.test_metrics.specificity),
                    float_cell(r.test_metrics.precision),
                ])?;
            }
        }
        w.flush()?;
    }

    let summaries = summarize(results);

    let summary_csv = out_dir.join("summary.csv");
    {
        let mut w = csv::Writer::from_path(&summary_csv)?;
        w.write_record(["lead_set", "n", "mean", "std_dev", "median"])?;
        for (name, stats) in &summaries {
            w.write_record([
                name.clone(),
                stats.n.to_string(),
                format!("{}", stats.mean),
                format!("{}", stats.std_dev),
                format!("{}", stats.median),
            ])?;
        }
        w.flush()?;
    }

    // Human-readable table mirroring how the result tables are laid out.
    let summary_txt = out_dir.join("summary.txt");
    {
        let mut text = String::new();
        text.push_str(&format!(
            "{:<16} {:>5} {:>13} {:>14} {:>11}\n",
            "Lead set", "n", "Average (%)", "Std. Dev. (%)", "Median (%)"
        ));
        for (name, stats) in &summaries {
            let std = if stats.degenerate_std {
                "0.00 (n=1)".to_string()
            } else {
                format!("{:.2}", stats.std_dev)
            };
            text.push_str(&format!(
                "{:<16} {:>5} {:>13.2} {:>14} {:>11.2}\n",
                name, stats.n, stats.mean, std, stats.median
            ));
        }
        for set in &results.sets {
            if set.succeeded() == 0 {
                text.push_str(&format!("{:<16} all {} trial(s) failed\n", set.name, set.errors.len()));
            }
        }
        fs::write(&summary_txt, text)?;
    }

    // Plot-ready per-trial accuracy series.
    let series_csv = out_dir.join("accuracy_series.csv");
    {
        let mut w = csv::Writer::from_path(&series_csv)?;
        w.write_record(["lead_set", "trial", "accuracy"])?;
        for set in &results.sets {
            for (trial, result) in set.trials.iter().enumerate() {
                let Some(r) = result else { continue };
                w.write_record([
                    set.name.clone(),
                    trial.to_string(),
                    float_cell(r.test_metrics.accuracy),
                ])?;
            }
        }
        w.flush()?;
    }

    // Best-performing-model statistics for sets with enough trials.
    let mut wrote_topk = false;
    let topk_path = out_dir.join("topk.csv");
    {
        let mut w = csv::Writer::from_path(&topk_path)?;
        w.write_record(["lead_set", "k", "mean", "std_dev", "median"])?;
        for set in &results.sets {
            let accuracies = set.accuracies();
            for k in [20usize, 50] {
                if k <= accuracies.len() {
                    let stats = top_k(&accuracies, k)?;
                    w.write_record([
                        set.name.clone(),
                        k.to_string(),
                        format!("{}", stats.mean),
                        format!("{}", stats.std_dev),
                        format!("{}", stats.median),
                    ])?;
                    wrote_topk = true;
                }
            }
        }
        w.flush()?;
    }
    if !wrote_topk {
        fs::remove_file(&topk_path)?;
    }

    Ok(ReportPaths {
        detail_csv,
        summary_csv,
        summary_txt,
        series_csv,
        topk_csv: wrote_topk.then_some(topk_path),
    })
}
