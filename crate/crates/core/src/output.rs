//! Result files: per-run metrics CSV and JSON summary, EPOS learning curves,
//! grid comparison table and plot-ready figure tables.

use std::fs;
use std::path::Path;

use serde_json::json;

use crate::config::Strategy;
use crate::engine::{ComparisonTable, MetricsReport, RunOutput};
use crate::epos::GlobalResponse;
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `round,metric,value`, then the aggregates under round `all`.
pub fn write_metrics_csv(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["round", "metric", "value"])?;
    for r in &report.rounds {
        let round = r.round.to_string();
        for (k, v) in r.scalar_metrics() {
            w.write_record([round.as_str(), k, &num(v)])?;
        }
    }
    for (k, v) in &report.aggregate {
        w.write_record(["all", k.as_str(), &num(*v)])?;
    }
    if let Some(v) = report.variance_error_normalized {
        w.write_record(["all", "variance_error_normalized", &num(v)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_json(report: &MetricsReport, path: &Path) -> Result<()> {
    let aggregate: serde_json::Map<String, serde_json::Value> = report
        .aggregate
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    let value = json!({
        "strategy": report.strategy,
        "seed": report.seed,
        "valid": report.valid,
        "error": report.error,
        "bridges_added": report.bridges_added,
        "aggregate": aggregate,
        "variance_error_normalized": report.variance_error_normalized,
        "rounds": report.rounds,
    });
    let text = serde_json::to_string_pretty(&value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `iteration,global_cost,local_cost,weighted_cost`.
pub fn write_iteration_csv(history: &[GlobalResponse], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "global_cost", "local_cost", "weighted_cost"])?;
    for h in history {
        w.write_record([
            h.iteration.to_string(),
            num(h.global_cost),
            num(h.local_cost),
            num(h.weighted_cost),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `metrics.csv`, `summary.json` and one `iterations_r{round}.csv`
/// per EPOS round into `dir`.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics_csv(&run.report, &dir.join("metrics.csv"))?;
    write_summary_json(&run.report, &dir.join("summary.json"))?;
    for t in &run.traces {
        write_iteration_csv(
            &t.outcome.history,
            &dir.join(format!("iterations_r{}.csv", t.round)),
        )?;
    }
    Ok(())
}

const COMPARISON_METRICS: [&str; 10] = [
    "variance_overall",
    "variance_cpu",
    "variance_mem",
    "variance_error",
    "avg_fog_utilization",
    "deadline_violation_rate",
    "avg_execution_delay",
    "unhosted",
    "dropped",
    "deployment_bytes",
];

/// Writes per-cell results under `cells/`, `comparison.csv`, and the
/// `figures/` tables.
pub fn write_grid(dir: &Path, table: &ComparisonTable) -> Result<()> {
    let cells_dir = dir.join("cells");
    for cell in &table.cells {
        for r in &cell.results {
            let d = cells_dir.join(cell.config.cell_key()).join(r.strategy.to_string());
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            match &r.outcome {
                Ok(rep) => {
                    write_metrics_csv(rep, &d.join("metrics.csv"))?;
                    write_summary_json(rep, &d.join("summary.json"))?;
                }
                Err(msg) => {
                    let p = d.join("summary.json");
                    let text = serde_json::to_string_pretty(
                        &json!({"strategy": r.strategy, "valid": false, "error": msg}),
                    )?;
                    fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
                }
            }
        }
    }
    write_comparison(&dir.join("comparison.csv"), table)?;
    let fig = dir.join("figures");
    fs::create_dir_all(&fig).map_err(|e| Error::io(&fig, e))?;
    write_difference_figure(&fig.join("fig6_variance_difference.csv"), table, "variance_overall")?;
    write_utilization_figure(&fig.join("fig7_fog_utilization.csv"), table)?;
    write_difference_figure(&fig.join("fig8_delay_difference.csv"), table, "avg_execution_delay")?;
    write_error_figure(&fig.join("fig9_variance_error.csv"), table)?;
    Ok(())
}

const CELL_HEADER: [&str; 5] = ["topology", "nodes", "distribution", "hop_limit", "lambda"];

fn cell_fields(c: &crate::config::RunConfig) -> Vec<String> {
    vec![
        c.topology.kind.to_string(),
        c.topology.nodes.to_string(),
        c.workload.distribution.to_string(),
        c.epos.hop_limit.to_string(),
        num(c.epos.lambda),
    ]
}

fn write_comparison(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<&str> = CELL_HEADER.to_vec();
    header.extend(["strategy", "valid", "error"]);
    header.extend(COMPARISON_METRICS);
    header.extend([
        "variance_error_normalized",
        "variance_diff_vs_first_fit",
        "delay_diff_vs_first_fit",
    ]);
    w.write_record(&header)?;
    for cell in &table.cells {
        for r in &cell.results {
            let mut row = cell_fields(&cell.config);
            row.push(r.strategy.to_string());
            match &r.outcome {
                Ok(rep) => {
                    row.push("true".into());
                    row.push(String::new());
                    for m in COMPARISON_METRICS {
                        row.push(opt(rep.aggregate_value(m)));
                    }
                    row.push(opt(rep.variance_error_normalized));
                }
                Err(msg) => {
                    row.push("false".into());
                    row.push(msg.clone());
                    row.extend(std::iter::repeat_n(String::new(), COMPARISON_METRICS.len() + 1));
                }
            }
            let diff = |m: &str| {
                if r.strategy == Strategy::Epos {
                    opt(cell.difference(m))
                } else {
                    String::new()
                }
            };
            row.push(diff("variance_overall"));
            row.push(diff("avg_execution_delay"));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per profile: EPOS value, First Fit value, and their difference.
fn write_difference_figure(path: &Path, table: &ComparisonTable, metric: &str) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<&str> = CELL_HEADER.to_vec();
    header.extend(["profile", "epos", "first_fit", "difference"]);
    w.write_record(&header)?;
    for cell in &table.cells {
        let (Some(e), Some(f)) = (
            cell.report(Strategy::Epos),
            cell.report(Strategy::FirstFit),
        ) else {
            continue;
        };
        for re in &e.rounds {
            let Some(rf) = f.round_for_profile(re.profile) else {
                continue;
            };
            let pick = |r: &crate::engine::RoundMetrics| {
                r.scalar_metrics()
                    .into_iter()
                    .find(|(k, _)| *k == metric)
                    .map(|(_, v)| v)
            };
            let (Some(ve), Some(vf)) = (pick(re), pick(rf)) else {
                continue;
            };
            let mut row = cell_fields(&cell.config);
            row.extend([re.profile.to_string(), num(ve), num(vf), num(ve - vf)]);
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fog utilization per node, ranked in descending order per scenario.
fn write_utilization_figure(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<&str> = CELL_HEADER.to_vec();
    header.extend(["strategy", "profile", "rank", "utilization"]);
    w.write_record(&header)?;
    for cell in &table.cells {
        for r in &cell.results {
            let Ok(rep) = &r.outcome else { continue };
            for round in &rep.rounds {
                let mut u = round.fog_utilization.clone();
                u.sort_by(|a, b| b.total_cmp(a));
                for (rank, v) in u.iter().enumerate() {
                    let mut row = cell_fields(&cell.config);
                    row.extend([
                        r.strategy.to_string(),
                        round.profile.to_string(),
                        rank.to_string(),
                        num(*v),
                    ]);
                    w.write_record(&row)?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_error_figure(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<&str> = CELL_HEADER.to_vec();
    header.extend(["variance_error", "variance_error_normalized"]);
    w.write_record(&header)?;
    for cell in &table.cells {
        let Some(rep) = cell.report(Strategy::Epos) else {
            continue;
        };
        let mut row = cell_fields(&cell.config);
        row.push(opt(rep.aggregate_value("variance_error")));
        row.push(opt(rep.variance_error_normalized));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
