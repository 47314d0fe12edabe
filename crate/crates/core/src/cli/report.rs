use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::run::CHECKPOINT_INTERVAL;
use crate::tuning::{read_traces, RunTrace};

use super::batch::RunResult;
use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub checkpoint: u64,
    pub mean_bpd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub runs: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
    /// Final BPD -> number of successful runs ending there.
    pub histogram: BTreeMap<u32, usize>,
    pub solved: usize,
    pub curve: Vec<CurvePoint>,
    /// Mean evaluations over solved runs.
    pub mean_nevals_to_solve: Option<f64>,
}

/// Aggregate per-run results. Past the end of its trace a run contributes
/// its final BPD, so a run that solved early carries 0.
pub fn build_report(
    mut runs: Vec<RunResult>,
    traces: Vec<RunTrace>,
    mut failures: Vec<RunFailure>,
) -> BatchReport {
    runs.sort_by_key(|r| r.seed);
    failures.sort_by_key(|f| f.seed);
    let by_id: BTreeMap<u64, &RunTrace> = traces.iter().map(|t| (t.run_id, t)).collect();

    let mut histogram = BTreeMap::new();
    for r in &runs {
        *histogram.entry(r.best_bpd).or_insert(0) += 1;
    }
    let solved = runs.iter().filter(|r| r.solved).count();

    let longest = runs
        .iter()
        .filter_map(|r| by_id.get(&r.seed).map(|t| t.checkpoints.len()))
        .max()
        .unwrap_or(0);
    let curve = (0..longest)
        .map(|c| {
            let total: f64 = runs
                .iter()
                .map(|r| {
                    let cps = by_id
                        .get(&r.seed)
                        .map(|t| t.checkpoints.as_slice())
                        .unwrap_or(&[]);
                    cps.get(c).copied().unwrap_or(r.best_bpd) as f64
                })
                .sum();
            CurvePoint {
                checkpoint: (c as u64 + 1) * CHECKPOINT_INTERVAL,
                mean_bpd: total / runs.len() as f64,
            }
        })
        .collect();

    let mean_nevals_to_solve = (solved > 0).then(|| {
        runs.iter()
            .filter(|r| r.solved)
            .map(|r| r.nevals as f64)
            .sum::<f64>()
            / solved as f64
    });

    BatchReport {
        runs,
        failures,
        histogram,
        solved,
        curve,
        mean_nevals_to_solve,
    }
}

pub fn histogram_csv(report: &BatchReport) -> String {
    let mut out = String::from("bpd,count\n");
    for (bpd, count) in &report.histogram {
        let _ = writeln!(out, "{bpd},{count}");
    }
    out
}

pub fn curve_csv(report: &BatchReport) -> String {
    let mut out = String::from("checkpoint,mean_bpd\n");
    for p in &report.curve {
        let _ = writeln!(out, "{},{}", p.checkpoint, p.mean_bpd);
    }
    out
}

pub fn summary_text(report: &BatchReport) -> String {
    let mut out = String::new();
    if let Some(first) = report.runs.first() {
        let _ = writeln!(
            out,
            "problem {} algorithm {}",
            first.problem_id, first.algorithm
        );
    }
    let total = report.runs.len();
    let _ = writeln!(out, "runs {} (failed {})", total, report.failures.len());
    let _ = writeln!(out, "solved {}/{}", report.solved, total);
    if let Some(&max) = report.histogram.keys().next_back() {
        let mut bpd_row = String::from("BPD  ");
        let mut count_row = String::from("runs ");
        for b in 0..=max {
            let count = report.histogram.get(&b).copied().unwrap_or(0);
            let _ = write!(bpd_row, " {b:>5}");
            let _ = write!(count_row, " {count:>5}");
        }
        let _ = writeln!(out, "{bpd_row}\n{count_row}");
    }
    match report.mean_nevals_to_solve {
        Some(m) => {
            let _ = writeln!(out, "mean evaluations to solve {m:.1}");
        }
        None => {
            let _ = writeln!(out, "mean evaluations to solve -");
        }
    }
    if let Some(last) = report.curve.last() {
        let _ = writeln!(
            out,
            "mean BPD after {} evaluations {:.3}",
            last.checkpoint, last.mean_bpd
        );
    }
    for f in &report.failures {
        let _ = writeln!(out, "run {} failed: {}", f.seed, f.error);
    }
    out
}

/// Write `histogram.csv`, `curve.csv` and `summary.txt` into `dir`.
pub fn write_report(dir: &Path, report: &BatchReport) -> Result<(), CliError> {
    fs::write(dir.join("histogram.csv"), histogram_csv(report))?;
    fs::write(dir.join("curve.csv"), curve_csv(report))?;
    fs::write(dir.join("summary.txt"), summary_text(report))?;
    Ok(())
}

/// Rebuild the report from the run artifacts in `dir` and rewrite its
/// report files.
pub fn report(dir: &Path) -> Result<BatchReport, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifacts(dir.to_path_buf()));
    }
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .collect();
    names.sort();

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for name in &names {
        let path = dir.join(name);
        if let Some(stem) = name
            .strip_prefix("run_")
            .and_then(|n| n.strip_suffix(".error.txt"))
        {
            if let Ok(seed) = stem.parse() {
                let error = fs::read_to_string(&path)?.trim_end().to_string();
                failures.push(RunFailure { seed, error });
            }
        } else if name.starts_with("run_") && name.ends_with(".trace.csv") {
            traces.extend(read_traces(fs::File::open(&path)?)?);
        } else if name.starts_with("run_") && name.ends_with(".json") {
            let result: RunResult = serde_json::from_str(&fs::read_to_string(&path)?)?;
            runs.push(result);
        }
    }
    if runs.is_empty() && failures.is_empty() {
        return Err(CliError::MissingArtifacts(dir.to_path_buf()));
    }
    let report = build_report(runs, traces, failures);
    write_report(dir, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ScoreVector;

    fn result(seed: u64, bpd: u32, nevals: u64) -> RunResult {
        RunResult {
            problem_id: 1,
            algorithm: "mogrls".into(),
            seed,
            level: None,
            nevals,
            solved: bpd == 0,
            best_bpd: bpd,
            best_sequence: "GAAAC".into(),
            score_vector: ScoreVector {
                bpd,
                hamming: 2 * bpd,
                neg_target_probability: 0.0,
                ensemble_energy_gap: 1.0,
                ensemble_defect: 0.0,
                gc_distance: 0.0,
            },
        }
    }

    #[test]
    fn histogram_rows() {
        let runs = vec![result(0, 0, 150), result(1, 0, 250), result(2, 2, 400)];
        let traces = vec![
            RunTrace::new(0, vec![1, 0, 0, 0]),
            RunTrace::new(1, vec![3, 1, 0, 0]),
            RunTrace::new(2, vec![4, 4, 3, 2]),
        ];
        let r = build_report(runs, traces, vec![]);
        assert_eq!(histogram_csv(&r), "bpd,count\n0,2\n2,1\n");
        assert_eq!(r.solved, 2);
        assert_eq!(r.mean_nevals_to_solve, Some(200.0));
    }

    #[test]
    fn curve_carries_forward() {
        // Run 0 solved after 150 evaluations and was recorded with a short
        // trace; its 0 carries to the end.
        let runs = vec![result(0, 0, 150), result(1, 1, 300), result(2, 2, 300)];
        let traces = vec![
            RunTrace::new(0, vec![1]),
            RunTrace::new(1, vec![2, 2, 1]),
            RunTrace::new(2, vec![3, 2, 2]),
        ];
        let r = build_report(runs, traces, vec![]);
        let means: Vec<f64> = r.curve.iter().map(|p| p.mean_bpd).collect();
        assert_eq!(means, vec![2.0, 4.0 / 3.0, 1.0]);
        assert_eq!(curve_csv(&r).lines().nth(1), Some("100,2"));
    }

    #[test]
    fn empty_dir_is_missing_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            report(dir.path()),
            Err(CliError::MissingArtifacts(_))
        ));
        assert!(matches!(
            report(&dir.path().join("nope")),
            Err(CliError::MissingArtifacts(_))
        ));
    }
}
