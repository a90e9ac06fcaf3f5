//! Cross-run comparison tables and long-format plot data.

use std::fmt::Write as _;
use std::path::Path;

use super::run::{read_summary, ExperimentResult};
use crate::error::Result;

/// One line of a comparison: a fleet or a tier within one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: String,
    pub method: String,
    pub num_clients: usize,
    pub group: String,
    pub clients: usize,
    pub personalization: f64,
    pub generalization: f64,
    pub bam: f64,
    pub total_mb: f64,
    pub mb_per_round: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

const HEADER: [&str; 10] = [
    "run",
    "method",
    "num_clients",
    "group",
    "clients",
    "personalization",
    "generalization",
    "bam",
    "total_mb",
    "mb_per_round",
];

impl Comparison {
    pub fn add(&mut self, run: impl Into<String>, result: &ExperimentResult) {
        let run = run.into();
        let comm = &result.communication;
        let base = ComparisonRow {
            run: run.clone(),
            method: result.config.method.to_string(),
            num_clients: result.config.num_clients,
            group: "fleet".into(),
            clients: result.evaluation.clients.len(),
            personalization: result.evaluation.mean_personalization,
            generalization: result.evaluation.mean_generalization,
            bam: result.evaluation.mean_bam,
            total_mb: comm.total_mb,
            mb_per_round: comm.mb_per_round,
        };
        self.rows.push(base.clone());
        if result.tiers.len() > 1 {
            for t in &result.tiers {
                self.rows.push(ComparisonRow {
                    group: format!("tier:{}", t.capacity_tier),
                    clients: t.clients,
                    personalization: t.mean_personalization,
                    generalization: t.mean_generalization,
                    bam: t.mean_bam,
                    ..base.clone()
                });
            }
        }
    }

    fn cells(&self) -> Vec<[String; 10]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.run.clone(),
                    r.method.clone(),
                    r.num_clients.to_string(),
                    r.group.clone(),
                    r.clients.to_string(),
                    format!("{:.2}", r.personalization),
                    format!("{:.2}", r.generalization),
                    format!("{:.2}", r.bam),
                    format!("{:.4}", r.total_mb),
                    format!("{:.4}", r.mb_per_round),
                ]
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.run.clone(),
                r.method.clone(),
                r.num_clients.to_string(),
                r.group.clone(),
                r.clients.to_string(),
                format!("{:.16e}", r.personalization),
                format!("{:.16e}", r.generalization),
                format!("{:.16e}", r.bam),
                format!("{:.16e}", r.total_mb),
                format!("{:.16e}", r.mb_per_round),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Serialization(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Column-aligned text; text columns left-aligned, numbers right-aligned.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 || i == 1 || i == 3 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &HEADER.map(String::from));
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for row in &cells {
            line(&mut out, row);
        }
        out
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Serialization(e.to_string())
}

/// Label for a run: its directory name, or the file stem for a bare file.
fn run_label(path: &Path) -> String {
    let p = if path.file_name().is_some_and(|n| n == super::run::SUMMARY) {
        path.parent().unwrap_or(path)
    } else {
        path
    };
    p.file_stem()
        .or_else(|| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Loads each summary (file or run directory) into one comparison.
pub fn compare<P: AsRef<Path>>(paths: &[P]) -> Result<Comparison> {
    let mut cmp = Comparison::default();
    for p in paths {
        let result = read_summary(p)?;
        cmp.add(run_label(p.as_ref()), &result);
    }
    Ok(cmp)
}

/// Tidy `round,client,metric,value` series for external plotting.
///
/// Per-round rows carry losses and bytes; rows for the final round also carry
/// each client's personalization, generalization and BAM. Fleet-wide values
/// use the client name `fleet`.
pub fn plot_data(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["round", "client", "metric", "value"]).map_err(csv_err)?;
    let mut put = |round: usize, client: &str, metric: &str, value: f64| {
        w.write_record([round.to_string(), client.to_string(), metric.to_string(), format!("{value:.16e}")])
            .map_err(csv_err)
    };
    for r in &result.rounds {
        for c in &r.clients {
            let id = c.client_id.to_string();
            if let Some(&l) = c.local_losses.last() {
                put(r.round, &id, "local_loss", l)?;
            }
            if let Some(&l) = c.kd_losses.last() {
                put(r.round, &id, "kd_loss", l)?;
            }
        }
        put(r.round, "fleet", "bytes_up", r.bytes_up as f64)?;
        put(r.round, "fleet", "bytes_down", r.bytes_down as f64)?;
        if let Some(acc) = r.fleet_accuracy {
            put(r.round, "fleet", "personalization", acc.mean_personalization)?;
            put(r.round, "fleet", "generalization", acc.mean_generalization)?;
            put(r.round, "fleet", "bam", acc.mean_bam)?;
        }
    }
    let last = result.rounds.last().map_or(0, |r| r.round);
    for c in &result.evaluation.clients {
        let id = c.client_id.to_string();
        put(last, &id, "final_personalization", c.personalization)?;
        put(last, &id, "final_generalization", c.generalization)?;
        put(last, &id, "final_bam", c.bam)?;
    }
    let e = &result.evaluation;
    put(last, "fleet", "final_personalization", e.mean_personalization)?;
    put(last, "fleet", "final_generalization", e.mean_generalization)?;
    put(last, "fleet", "final_bam", e.mean_bam)?;
    let bytes = w.into_inner().map_err(|e| crate::Error::Serialization(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
