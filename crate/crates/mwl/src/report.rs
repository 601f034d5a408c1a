//! Report tables built from the train, synth and denoise artifacts.
//!
//! ```text
//! report/<dataset>/metrics_summary.csv          index × metric, mean and sd per learner
//! report/<dataset>/ttest_ratio_direction.csv    at-k against ta-k
//! report/<dataset>/ttest_ratio_vs_constituent.csv
//! report/<dataset>/ttest_cluster_choice.csv
//! report/<dataset>/density.csv                  kernel density of every distribution
//! report/quality.csv                            synthetic quality per index
//! report/removals.csv, removal_summary.csv      ICA removals per recording and condition
//! ```
//!
//! Numeric files carry no timestamps or paths, so identical inputs give
//! identical bytes.

use std::path::{Path, PathBuf};

use mwl_core::learn::Metric;
use mwl_core::montecarlo::{compare_table, density_series, Comparison, ComparisonTable, ExperimentResult};
use mwl_core::stats;
use mwl_core::Condition;

use crate::dataio;
use crate::error::Result;
use crate::pipeline::{dataset_name, read_removals, QualityEntry, RemovalRow, Run};

/// `metrics_summary.csv`: one row per (index, metric) with the mean and
/// sample sd of every learner.
pub fn metrics_summary(result: &ExperimentResult, run: &Run) -> String {
    let learners = run.cfg.learner_families();
    let mut text = String::from("index,metric");
    for l in &learners {
        text.push_str(&format!(",{l}_mean,{l}_sd"));
    }
    text.push('\n');
    for index in run.cfg.indexes() {
        for metric in Metric::ALL {
            text.push_str(&format!("{index},{metric}"));
            for l in &learners {
                match result.get(*index, *l, metric) {
                    Some(d) => text.push_str(&format!(",{},{}", d.mean, d.sd)),
                    None => text.push_str(",,"),
                }
            }
            text.push('\n');
        }
    }
    text
}

pub fn ttest_csv(rows: &[Comparison]) -> String {
    let mut text = String::from(
        "learner,metric,index_a,index_b,mean_a,mean_b,t,df,p,p_bonferroni,comparisons,significant_0.05,significant_0.005\n",
    );
    for c in rows {
        let t = &c.test;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.learner,
            c.metric,
            c.index_a,
            c.index_b,
            c.mean_a,
            c.mean_b,
            t.t,
            t.df,
            t.p,
            t.p_adjusted,
            t.comparisons,
            t.significant_05,
            t.significant_005
        ));
    }
    text
}

pub fn density_csv(result: &ExperimentResult, points: usize) -> String {
    let mut text = String::from("index,learner,metric,x,density\n");
    for d in &result.distributions {
        for (x, y) in density_series(&d.values, points) {
            text.push_str(&format!("{},{},{},{x},{y}\n", d.index_id, d.learner, d.metric));
        }
    }
    text
}

pub fn quality_csv(entries: &[QualityEntry]) -> String {
    let mut text = String::from(
        "index,field_correlation_stability,deep_structure_stability,field_distribution_stability,overall,band\n",
    );
    for q in entries {
        let r = &q.report;
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            q.index, r.field_correlation_stability, r.deep_structure_stability, r.field_distribution_stability, r.overall, r.band
        ));
    }
    text
}

/// Mean, sample sd, min and max of removed components per condition.
pub fn removal_summary_csv(rows: &[RemovalRow]) -> String {
    let mut text = String::from("condition,recordings,mean_removed,sd_removed,min_removed,max_removed\n");
    for cond in Condition::ALL {
        let counts: Vec<f64> = rows.iter().filter(|r| r.condition == cond).map(|r| r.removed_count as f64).collect();
        if counts.is_empty() {
            continue;
        }
        let sd = if counts.len() > 1 { stats::sample_variance(&counts).sqrt() } else { 0.0 };
        let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
        let max = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        text.push_str(&format!("{cond},{},{},{sd},{min},{max}\n", counts.len(), stats::mean(&counts)));
    }
    text
}

/// Writes every report file whose inputs exist. Returns the files written.
pub fn stage_report(run: &Run) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let dir = run.layout.report_dir();
    let mut put = |path: PathBuf, text: String| -> Result<()> {
        dataio::write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    run.log.line("report", "start")?;
    let mut trained = 0;
    for &dataset in &run.cfg.train.datasets {
        let src = run.layout.distributions(dataset);
        if !src.exists() {
            run.log.line("report", &format!("skipping {}: {} not found", dataset_name(dataset), src.display()))?;
            continue;
        }
        trained += 1;
        let result: ExperimentResult = dataio::read_json(&src)?;
        let out = dir.join(dataset_name(dataset));
        put(out.join("metrics_summary.csv"), metrics_summary(&result, run))?;
        for table in ComparisonTable::ALL {
            let mut rows = Vec::new();
            let mut missing = None;
            for metric in Metric::ALL {
                match compare_table(&result, table, metric) {
                    Ok(r) => rows.extend(r),
                    Err(e) => missing = Some(e),
                }
            }
            if let Some(e) = missing {
                run.log.line("report", &format!("{} {}: {e}", dataset_name(dataset), table.as_str()))?;
                continue;
            }
            put(out.join(format!("ttest_{}.csv", table.as_str())), ttest_csv(&rows))?;
        }
        put(out.join("density.csv"), density_csv(&result, run.cfg.report.density_points))?;
    }
    if trained == 0 {
        return Err(crate::error::MwlError::MissingInput {
            path: run.layout.root.join("train"),
            hint: "run `mwl train` first".into(),
        });
    }
    if run.layout.quality().exists() {
        let q: Vec<QualityEntry> = dataio::read_json(&run.layout.quality())?;
        put(dir.join("quality.csv"), quality_csv(&q))?;
    }
    if run.layout.removals().exists() {
        let rows = read_removals(&run.layout.removals())?;
        put(dir.join("removals.csv"), dataio::read_text(&run.layout.removals())?)?;
        put(dir.join("removal_summary.csv"), removal_summary_csv(&rows))?;
    }
    run.log.line("report", &format!("done: {} files", written.len()))?;
    Ok(written)
}

/// Numeric report files under `dir`, sorted, for byte comparisons.
pub fn numeric_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&d) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}
