//! Evaluation report serialization: CSV, JSON, and a markdown table.

use serde::{Deserialize, Serialize};

use super::DroppedQueries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub dropped_queries: DroppedQueries,
    pub estimator_dropped_pairs: usize,
    pub candidate_universe: usize,
    pub pathways_in_scope: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub setting: String,
    pub context: String,
    pub method: String,
    pub centering: bool,
    pub n_queries: usize,
    pub top1: f64,
    pub top10: f64,
    pub mrr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub diagnostics: RowDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl EvalReport {
    /// Merges rows of several reports (baseline next to estimator runs).
    pub fn merged(reports: Vec<EvalReport>) -> EvalReport {
        EvalReport {
            rows: reports.into_iter().flat_map(|r| r.rows).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,context,method,centering,n_queries,top1,top10,mrr,n_repeats,seeds\n");
        for row in &self.rows {
            let seeds = row
                .seeds
                .as_ref()
                .map(|s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_escape(&row.setting),
                csv_escape(&row.context),
                csv_escape(&row.method),
                row.centering,
                row.n_queries,
                row.top1,
                row.top10,
                row.mrr,
                row.n_repeats.map(|n| n.to_string()).unwrap_or_default(),
                csv_escape(&seeds),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Markdown table with the metric columns in Top1/Top10/MRR order.
    pub fn to_markdown(&self) -> String {
        let mut out =
            String::from("| Setting | Context | Method | Queries | Top1 | Top10 | MRR |\n|---|---|---|---|---|---|---|\n");
        for row in &self.rows {
            let method = if row.method == "random" {
                format!("random x{}", row.n_repeats.unwrap_or(1))
            } else if row.centering {
                format!("{} (centered)", row.method)
            } else {
                row.method.clone()
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {:.3} | {:.3} | {:.3} |\n",
                row.setting, row.context, method, row.n_queries, row.top1, row.top10, row.mrr
            ));
        }
        out
    }
}
