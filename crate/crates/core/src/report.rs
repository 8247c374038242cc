//! CSV and JSON artifact writers. All formatting is deterministic
//! (fixed row order, shortest-roundtrip float formatting), so identical
//! inputs produce byte-identical files.

use crate::bubble::IdentityTable;
use crate::error::Result;
use crate::solver::SolveTrace;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// One residual-report row: `{quantity, grid, h, norm}`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub quantity: String,
    pub grid: String,
    pub h: f64,
    pub norm: f64,
}

/// Refinement-study row; `ratio` is the previous norm over this one and
/// is absent on the first row.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub h: f64,
    pub norm: f64,
    pub ratio: Option<f64>,
}

/// Build refinement rows from matched `(h, norm)` pairs.
pub fn refinement_rows(pairs: &[(f64, f64)]) -> Vec<RefinementRow> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, &(h, norm))| RefinementRow {
            h,
            norm,
            ratio: if k == 0 {
                None
            } else {
                Some(pairs[k - 1].1 / norm)
            },
        })
        .collect()
}

pub fn trace_to_csv(trace: &SolveTrace) -> String {
    let mut out = String::from("iter,e_map,e_spinor,residual_map,residual_spinor\n");
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.iter, row.e_map, row.e_spinor, row.residual_map, row.residual_spinor
        ));
    }
    out
}

pub fn identity_table_to_csv(table: &IdentityTable) -> String {
    let mut out = String::from(
        "lambda,delta,R,e_disk,e_annulus,e_spinor_disk,e_spinor_annulus,e_total\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.lambda, r.delta, r.r, r.e_disk, r.e_annulus, r.e_spinor_disk,
            r.e_spinor_annulus, r.e_total
        ));
    }
    out
}

pub fn vanishing_report_to_csv(report: &crate::solver::VanishingReport) -> String {
    let mut out = String::from("trial,seed,e_initial,e_map_final,e_spinor_final,vanished\n");
    for t in &report.trials {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.trial, t.seed, t.e_initial, t.e_map_final, t.e_spinor_final, t.vanished
        ));
    }
    out
}

pub fn refinement_to_csv(rows: &[RefinementRow]) -> String {
    let mut out = String::from("h,norm,ratio\n");
    for r in rows {
        match r.ratio {
            Some(q) => out.push_str(&format!("{},{},{}\n", r.h, r.norm, q)),
            None => out.push_str(&format!("{},{},\n", r.h, r.norm)),
        }
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Pretty JSON with a trailing newline for any serializable report.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::DhError::Snapshot(e.to_string()))?;
    write_text(path, &format!("{text}\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TraceRow;

    #[test]
    fn csv_headers_and_determinism() {
        let trace = SolveTrace {
            rows: vec![TraceRow {
                iter: 0,
                e_map: 1.5,
                e_spinor: 0.25,
                residual_map: 1e-3,
                residual_spinor: 2e-4,
            }],
            converged: false,
            monotonicity_warning: false,
            stability_factor: 0.8,
        };
        let a = trace_to_csv(&trace);
        let b = trace_to_csv(&trace);
        assert_eq!(a, b);
        assert!(a.starts_with("iter,e_map,e_spinor,residual_map,residual_spinor\n"));
        assert!(a.contains("0,1.5,0.25,0.001,0.0002\n"));
    }

    #[test]
    fn refinement_ratios() {
        let rows = refinement_rows(&[(0.1, 8.0), (0.05, 2.0), (0.025, 0.5)]);
        assert_eq!(rows[0].ratio, None);
        assert_eq!(rows[1].ratio, Some(4.0));
        assert_eq!(rows[2].ratio, Some(4.0));
        let csv = refinement_to_csv(&rows);
        assert!(csv.starts_with("h,norm,ratio\n"));
        assert!(csv.contains("0.1,8,\n"));
        assert!(csv.contains("0.05,2,4\n"));
    }
}
