use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    apply_covariate_shift, build_public_dataset, generate_synthetic, load_csv, partition_non_iid, ClientPartition, LabeledDataset,
    ShiftKind,
};
use crate::error::{Error, Result};
use crate::federation::{
    bytes_to_mb, comm_cost, run_fedadas_observed, run_fedavg_observed, run_local_only_observed, CommLedger, CostQuery, Direction,
    Method, PayloadKind, RoundRecord,
};
use crate::metrics::{evaluate_fleet, EvalReport, TierSummary};
use crate::rng::derive_seed;

use super::config::{DatasetConfig, ExperimentConfig};
use super::json;

/// Byte totals pulled from the communication ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommTotals {
    pub total_bytes: u64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub logit_bytes: u64,
    pub parameter_bytes: u64,
    pub index_bytes: u64,
    pub total_mb: f64,
    pub mb_per_round: f64,
}

impl CommTotals {
    pub fn from_ledger(ledger: &CommLedger, rounds: usize) -> Self {
        let q = CostQuery::all();
        let total = comm_cost(ledger, &q);
        CommTotals {
            total_bytes: total,
            uplink_bytes: comm_cost(ledger, &q.direction(Direction::Up)),
            downlink_bytes: comm_cost(ledger, &q.direction(Direction::Down)),
            logit_bytes: comm_cost(ledger, &q.payload(PayloadKind::Logits)),
            parameter_bytes: comm_cost(ledger, &q.payload(PayloadKind::Parameters)),
            index_bytes: comm_cost(ledger, &q.payload(PayloadKind::Indices)),
            total_mb: bytes_to_mb(total),
            mb_per_round: if rounds == 0 { 0.0 } else { bytes_to_mb(total) / rounds as f64 },
        }
    }
}

/// Timing for a run. Kept apart from the summary so identical runs produce
/// identical summaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub parallelism: usize,
    pub total_ms: f64,
    pub round_ms: Vec<f64>,
}

/// Everything needed to audit or re-run an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rounds: Vec<RoundRecord>,
    pub evaluation: EvalReport,
    pub tiers: Vec<TierSummary>,
    pub communication: CommTotals,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub parallelism: usize,
}

/// Loads or generates the full dataset named by the config.
pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    match &config.dataset {
        DatasetConfig::Synthetic {
            num_classes,
            feature_dim,
            samples_per_class,
            class_separation,
            seed,
        } => generate_synthetic(
            *num_classes,
            *feature_dim,
            *samples_per_class,
            seed.unwrap_or_else(|| derive_seed(config.master_seed, "dataset", &[])),
            *class_separation,
        ),
        DatasetConfig::Csv { path, has_header } => load_csv(path, *has_header),
    }
}

/// Partitions the data and applies the configured covariate shift. Every
/// shifted client sees the same transform, as if sharing one camera view.
pub fn prepare_partitions(config: &ExperimentConfig, dataset: &LabeledDataset) -> Result<Vec<ClientPartition>> {
    let mut parts = partition_non_iid(
        dataset,
        config.num_clients,
        config.dirichlet_alpha,
        config.test_fraction,
        derive_seed(config.master_seed, "partition", &[]),
    )?;
    let shift = &config.covariate_shift;
    if shift.kind != ShiftKind::None && shift.magnitude > 0.0 {
        let seed = derive_seed(config.master_seed, "covariate-shift", &[]);
        for p in &mut parts[shift.first_client..shift.end_client] {
            *p = apply_covariate_shift(p, shift.kind, shift.magnitude, seed);
        }
    }
    Ok(parts)
}

/// Runs an experiment in memory. `on_round` sees each record as soon as its
/// round completes.
pub fn execute(
    config: &ExperimentConfig,
    options: &RunOptions,
    mut on_round: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let dataset = load_dataset(config)?;
    let partitions = prepare_partitions(config, &dataset)?;
    let specs = config.client_specs(dataset.feature_dim(), dataset.num_classes());
    let protocol = config.protocol(options.parallelism.max(1));

    let mut round_ms = Vec::with_capacity(config.rounds);
    let mut observe = |r: &RoundRecord| {
        round_ms.push(r.wall_clock.as_secs_f64() * 1e3);
        on_round(r)
    };
    let outcome = match config.method {
        Method::Fedadas => {
            let public = build_public_dataset(
                &partitions,
                config.public_contribution_fraction,
                derive_seed(config.master_seed, "public", &[]),
            )?;
            run_fedadas_observed(&protocol, &partitions, &public, &specs, &mut observe)?
        }
        Method::Fedavg => run_fedavg_observed(&protocol, &partitions, &specs, &mut observe)?,
        Method::LocalOnly => run_local_only_observed(&protocol, &partitions, &specs, &mut observe)?,
    };
    let evaluation = evaluate_fleet(&outcome.clients)?;
    Ok(ExperimentResult {
        config: config.clone(),
        tiers: evaluation.tier_summaries(),
        communication: CommTotals::from_ledger(&outcome.ledger, config.rounds),
        evaluation,
        rounds: outcome.rounds,
        runtime: RuntimeStats {
            parallelism: protocol.parallelism,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            round_ms,
        },
    })
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub const ROUND_LOG: &str = "rounds.jsonl";
pub const SUMMARY: &str = "summary.json";
pub const REPORT: &str = "report.csv";
pub const RUNTIME: &str = "runtime.json";

#[derive(Serialize)]
struct RoundLine<'a> {
    #[serde(flatten)]
    record: &'a RoundRecord,
    wall_clock_ms: f64,
}

/// Runs an experiment and persists it under `out_dir`:
///
/// * `rounds.jsonl`, one line per completed round, flushed as written
/// * `summary.json`, the [`ExperimentResult`], written atomically
/// * `report.csv`, per-client accuracy with a fleet row
/// * `runtime.json`, wall-clock timings
pub fn run_to_dir(config: &ExperimentConfig, options: &RunOptions, out_dir: &Path) -> Result<ExperimentResult> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut log = BufWriter::new(File::create(out_dir.join(ROUND_LOG))?);
    let result = execute(config, options, |record| {
        let line = RoundLine {
            record,
            wall_clock_ms: record.wall_clock.as_secs_f64() * 1e3,
        };
        log.write_all(&json::to_line(&line)?)?;
        log.write_all(b"\n")?;
        log.flush()?;
        Ok(())
    })?;
    write_atomic(&out_dir.join(SUMMARY), &json::to_pretty(&result)?)?;
    write_atomic(&out_dir.join(REPORT), result.evaluation.to_csv().as_bytes())?;
    write_atomic(&out_dir.join(RUNTIME), &json::to_pretty(&result.runtime)?)?;
    Ok(result)
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    let path = path.as_ref();
    let path = if path.is_dir() { path.join(SUMMARY) } else { path.to_path_buf() };
    let bytes = fs::read(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

/// Completed rounds in a (possibly truncated) round log. A partial last line
/// left by a killed run is ignored.
pub fn read_round_log(path: impl AsRef<Path>) -> Result<Vec<RoundRecord>> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let complete = match text.rfind('\n') {
        Some(i) => &text[..i],
        None => "",
    };
    for line in complete.lines().filter(|l| !l.trim().is_empty()) {
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}
