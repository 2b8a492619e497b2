//! Machine-readable result emission. CSV output is bit-exact and
//! deterministic: `\n` line endings, `.` decimal separator, floats printed
//! with 17 significant digits, rows ordered by the config's estimator order,
//! then seed order, then step. Wall-clock timings stay out of the CSV files
//! so repeated runs of the same config produce byte-identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BenchError, BenchReport};

/// 17 significant digits round-trips every f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), BenchError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| BenchError::Io {
        path: path.clone(),
        source,
    })
}

/// Writes one CSV file per series (`state_error`, `input_error`, `trace_px`,
/// `trace_pd`) with header `step,estimator,seed,value`, plus `summary.csv`
/// with `estimator,metric,median,iqr`.
pub fn emit_csv(report: &BenchReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let series: [(&str, fn(&super::RunReport) -> Option<&Vec<f64>>); 4] = [
        ("state_error.csv", |run| Some(&run.state_error_norms)),
        ("input_error.csv", |run| run.input_error_norms.as_ref()),
        ("trace_px.csv", |run| Some(&run.trace_p_x)),
        ("trace_pd.csv", |run| run.trace_p_d.as_ref()),
    ];
    for (name, select) in series {
        let mut out = String::from("step,estimator,seed,value\n");
        for run in &report.runs {
            if let Some(values) = select(run) {
                for (i, v) in values.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        i + 1,
                        run.estimator,
                        run.seed,
                        format_float(*v)
                    );
                }
            }
        }
        write_file(dir, name, &out)?;
    }

    let mut summary = String::from("estimator,metric,median,iqr\n");
    for row in &report.aggregates {
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            row.estimator,
            row.metric,
            format_float(row.median),
            format_float(row.iqr)
        );
    }
    write_file(dir, "summary.csv", &summary)?;
    Ok(())
}

/// Writes `report.json`: per-run scalar metrics (including wall-clock),
/// failures, and the aggregate table. The per-step series live in the CSVs.
pub fn emit_json(report: &BenchReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| BenchError::InvalidConfig {
        reason: format!("failed to serialize report: {e}"),
    })?;
    fs::write(&path, json).map_err(|source| BenchError::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.1,
            -3.5355339059327373,
            1.0e-300,
            6.02e23,
            f64::MIN_POSITIVE,
            -0.0,
        ] {
            let s = format_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }
}
