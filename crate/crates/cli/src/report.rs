//! Evaluation report serialization: per-system JSON plus a cross-system
//! comparison table (CSV and a plain-text rendering for stdout).

use std::path::{Path, PathBuf};

use chimera_core::eval::{PrecisionReport, PRECISION_KS};

use crate::errors::CliError;

fn percent(value: f64) -> String {
    format!("{:.2}", value * 100.0)
}

/// File-system-safe system id: anything outside `[A-Za-z0-9._-]` becomes `_`.
fn safe_id(system_id: &str) -> String {
    system_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Write one report as pretty JSON to `out_dir/eval_{system}.json`.
pub fn write_report_json(out_dir: &Path, report: &PrecisionReport) -> Result<PathBuf, CliError> {
    let path = out_dir.join(format!("eval_{}.json", safe_id(&report.system_id)));
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::internal(format!("report serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Comparison table as CSV: one row per system, precision columns in
/// percent. Column order mirrors [`PRECISION_KS`].
pub fn comparison_csv(reports: &[PrecisionReport]) -> String {
    let mut out = String::from("system,p_at_10,p_at_100,p_at_1000,n_items,mean_returned\n");
    for report in reports {
        out.push_str(&report.system_id);
        for k in PRECISION_KS {
            out.push(',');
            out.push_str(&percent(report.p_at.get(&k).copied().unwrap_or(0.0)));
        }
        out.push_str(&format!(
            ",{},{:.2}\n",
            report.n_items, report.mean_returned
        ));
    }
    out
}

/// Write the comparison table to `out_dir/eval_comparison.csv`.
pub fn write_comparison_csv(
    out_dir: &Path,
    reports: &[PrecisionReport],
) -> Result<PathBuf, CliError> {
    let path = out_dir.join("eval_comparison.csv");
    std::fs::write(&path, comparison_csv(reports))?;
    Ok(path)
}

/// Fixed-width text rendering of the comparison for terminals.
pub fn comparison_text(reports: &[PrecisionReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>8} {:>8} {:>8} {:>8} {:>14}\n",
        "system", "p@10", "p@100", "p@1000", "items", "mean returned"
    ));
    for report in reports {
        out.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8} {:>14.2}\n",
            report.system_id,
            percent(report.p_at.get(&10).copied().unwrap_or(0.0)),
            percent(report.p_at.get(&100).copied().unwrap_or(0.0)),
            percent(report.p_at.get(&1000).copied().unwrap_or(0.0)),
            report.n_items,
            report.mean_returned,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report(system_id: &str, ps: [f64; 3], n: usize, mean: f64) -> PrecisionReport {
        let mut p_at = BTreeMap::new();
        p_at.insert(10, ps[0]);
        p_at.insert(100, ps[1]);
        p_at.insert(1000, ps[2]);
        PrecisionReport {
            system_id: system_id.to_string(),
            n_items: n,
            requested_k: 1000,
            mean_returned: mean,
            p_at,
        }
    }

    #[test]
    fn csv_layout_is_stable() {
        let reports = vec![
            report("table", [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], 3, 15.0),
            report("fixture-kb", [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 3, 2.0),
        ];
        let expected = "system,p_at_10,p_at_100,p_at_1000,n_items,mean_returned\n\
                        table,33.33,66.67,66.67,3,15.00\n\
                        fixture-kb,33.33,33.33,33.33,3,2.00\n";
        assert_eq!(comparison_csv(&reports), expected);
    }

    #[test]
    fn files_land_in_out_dir() {
        let dir = tempfile::tempdir().unwrap();
        let r = report("table", [0.1, 0.2, 0.3], 10, 5.0);
        let json_path = write_report_json(dir.path(), &r).unwrap();
        assert_eq!(json_path.file_name().unwrap(), "eval_table.json");
        let parsed: PrecisionReport =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed, r);
        let csv_path = write_comparison_csv(dir.path(), &[r]).unwrap();
        assert_eq!(csv_path.file_name().unwrap(), "eval_comparison.csv");
    }

    #[test]
    fn weird_system_ids_stay_on_disk_safe_names() {
        let dir = tempfile::tempdir().unwrap();
        let r = report("bert/base (uncased)", [0.0, 0.0, 0.0], 1, 0.0);
        let path = write_report_json(dir.path(), &r).unwrap();
        assert_eq!(path.file_name().unwrap(), "eval_bert_base__uncased_.json");
    }

    #[test]
    fn text_table_mentions_every_system() {
        let reports = vec![
            report("a", [0.5; 3], 4, 1.0),
            report("b", [0.25; 3], 4, 2.0),
        ];
        let text = comparison_text(&reports);
        assert!(text.contains("a "));
        assert!(text.contains("b "));
        assert!(text.contains("50.00"));
        assert!(text.contains("25.00"));
    }
}
