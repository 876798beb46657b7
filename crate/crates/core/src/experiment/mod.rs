//! Batch runs: named scenarios, seeded replicate matrices, CSV output, and
//! stability sweeps over `(k, λ)`.
//!
//! Output layout under the output directory:
//! - one `<scenario>_<policy>_l<λ>_k<k>_s<seed>_r<replicate>.csv` per run,
//! - a matching `.events.csv` for adaptive runs (slots where `k` was raised),
//! - `summary.jsonl`, one record per run in run order,
//! - `manifest.json`, the full configuration of every run and the units used.

mod options;
mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::adaptive::EpochBump;
use crate::error::ExperimentError;
use crate::gf256::MODULUS;
use crate::swarm::{self, LambdaStep, PolicyConfig, RunOutput, SimConfig};

pub use options::RunOptions;
pub use output::{
    csv_header, format_g, growth_window, read_csv, summarize, verdict_of, write_csv, RunSummary,
};

/// Names accepted by [`builtin_scenario`].
pub const SCENARIOS: [&str; 6] = [
    "fig3",
    "fig4",
    "fig4-fountain",
    "fig5",
    "fig6",
    "adaptive-ramp",
];

/// Base configuration of a named scenario. `seed` and `replicate` are left
/// at their defaults.
pub fn builtin_scenario(name: &str) -> Result<SimConfig, ExperimentError> {
    let base = SimConfig {
        k: 5,
        lambda: 2.0,
        max_slots: 10_000,
        pop_threshold: 1_000,
        ..SimConfig::default()
    };
    let cfg = match name {
        "fig3" => SimConfig {
            policy: PolicyConfig::BASELINE,
            ..base
        },
        "fig4" => SimConfig {
            policy: PolicyConfig::PRIORITIZE_ONLY,
            ..base
        },
        "fig4-fountain" => SimConfig {
            policy: PolicyConfig::FOUNTAIN_ONLY,
            ..base
        },
        "fig5" => SimConfig {
            policy: PolicyConfig::PROPOSED,
            ..base
        },
        "fig6" => SimConfig {
            policy: PolicyConfig::PROPOSED,
            lambda: 5.5,
            max_slots: 50_000,
            ..base
        },
        "adaptive-ramp" => SimConfig {
            policy: PolicyConfig::PROPOSED,
            lambda_step: Some(LambdaStep {
                at_slot: 5_000,
                lambda: 6.0,
            }),
            tau: Some(200),
            max_slots: 20_000,
            ..base
        },
        other => return Err(ExperimentError::UnknownScenario(other.to_string())),
    };
    Ok(cfg)
}

/// One run of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub scenario: String,
    pub config: SimConfig,
}

impl RunSpec {
    /// File stem of this run's CSV.
    pub fn stem(&self) -> String {
        let c = &self.config;
        format!(
            "{}_{}_l{}_k{}_s{}_r{}",
            self.scenario,
            c.policy.name(),
            format_g(c.lambda),
            c.k,
            c.seed,
            c.replicate
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub runs: Vec<RunSpec>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    /// `replicates` runs of `base` on streams `0..replicates` of `base.seed`.
    pub fn replicated(
        scenario: &str,
        base: &SimConfig,
        replicates: u64,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        let runs = (0..replicates)
            .map(|r| RunSpec {
                scenario: scenario.to_string(),
                config: SimConfig {
                    replicate: r,
                    ..base.clone()
                },
            })
            .collect();
        ExperimentSpec {
            runs,
            out_dir: out_dir.into(),
        }
    }

    /// Resolve layered options. A named scenario provides the base config;
    /// explicit options override it.
    pub fn from_options(opts: &RunOptions) -> Result<Self, ExperimentError> {
        let (scenario, mut cfg) = match &opts.scenario {
            Some(name) => (name.clone(), builtin_scenario(name)?),
            None => ("custom".to_string(), SimConfig::default()),
        };
        if let Some(p) = opts.policy {
            cfg.policy = p;
        }
        if let Some(l) = opts.lambda {
            cfg.lambda = l;
        }
        if let Some(k) = opts.k {
            cfg.k = k;
        }
        if let Some(pool) = opts.pool_size {
            cfg.pool_size = (pool > 0).then_some(pool);
        }
        if let Some(s) = opts.slots {
            cfg.max_slots = s;
        }
        if let Some(t) = opts.threshold {
            cfg.pop_threshold = t;
        }
        if let Some(s) = opts.seed {
            cfg.seed = s;
        }
        if opts.tau.is_some() {
            cfg.tau = opts.tau;
        }
        cfg.validate()?;
        let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self::replicated(
            &scenario,
            &cfg,
            opts.replicates.unwrap_or(1),
            out,
        ))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))
}

fn events_csv(events: &[EpochBump]) -> String {
    let mut out = String::from("slot,epoch,new_k,window_arrivals\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.slot, e.epoch, e.new_k, e.window_arrivals
        ));
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    field_modulus: String,
    deficit_units: &'static str,
    float_format: &'static str,
    runs: Vec<ManifestEntry<'a>>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    csv: String,
    scenario: &'a str,
    config: &'a SimConfig,
}

/// Simulate every run in parallel. Results come back in run order.
pub fn execute(runs: &[RunSpec]) -> Result<Vec<RunOutput>, ExperimentError> {
    runs.par_iter()
        .map(|r| swarm::run(r.config.clone()))
        .collect()
}

/// Run the matrix, write one CSV per run plus `summary.jsonl` and
/// `manifest.json`, and return the summaries.
pub fn run_matrix(spec: &ExperimentSpec) -> Result<Vec<RunSummary>, ExperimentError> {
    let dir = &spec.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summaries = spec
        .runs
        .par_iter()
        .map(|run| {
            let out = swarm::run(run.config.clone())?;
            let stem = run.stem();
            write_file(&dir.join(format!("{stem}.csv")), &write_csv(&out.records))?;
            if run.config.tau.is_some() {
                write_file(
                    &dir.join(format!("{stem}.events.csv")),
                    &events_csv(&out.events),
                )?;
            }
            let summary = summarize(&run.scenario, &run.config, &out.records);
            debug_assert_eq!(summary.divergence_slot, out.verdict.divergence_slot());
            Ok(summary)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut lines = String::new();
    for s in &summaries {
        lines.push_str(&serde_json::to_string(s).expect("plain data serializes"));
        lines.push('\n');
    }
    write_file(&dir.join("summary.jsonl"), &lines)?;

    let manifest = Manifest {
        field_modulus: format!("0x{MODULUS:X}"),
        deficit_units: "M = sum over peers of (k - chunks held), a count of chunks",
        float_format: "%g with 6 significant digits",
        runs: spec
            .runs
            .iter()
            .map(|r| ManifestEntry {
                csv: format!("{}.csv", r.stem()),
                scenario: &r.scenario,
                config: &r.config,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("plain data serializes");
    write_file(&dir.join("manifest.json"), &(json + "\n"))?;
    Ok(summaries)
}

/// Stability fraction at one `(k, λ)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub k: usize,
    pub lambda: f64,
    pub runs: u64,
    pub stable_runs: u64,
    pub stable_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    pub rows: Vec<BoundaryRow>,
    pub summaries: Vec<RunSummary>,
}

impl BoundaryTable {
    /// Smallest λ in the grid at which fewer than half the runs stayed
    /// stable, for the given `k`.
    pub fn boundary(&self, k: usize) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.k == k && r.stable_fraction < 0.5)
            .map(|r| r.lambda)
            .min_by(f64::total_cmp)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda,runs,stable_runs,stable_fraction\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k,
                format_g(r.lambda),
                r.runs,
                r.stable_runs,
                format_g(r.stable_fraction)
            ));
        }
        out
    }
}

/// Run `replicates` seeds of `base` at every `(k, λ)` in the grid. With an
/// output directory the runs are written as by [`run_matrix`], plus
/// `boundary.csv`.
pub fn sweep_boundary(
    base: &SimConfig,
    k_values: &[usize],
    lambda_grid: &[f64],
    replicates: u64,
    out_dir: Option<&Path>,
) -> Result<BoundaryTable, ExperimentError> {
    let mut runs = Vec::new();
    for &k in k_values {
        for &lambda in lambda_grid {
            let cfg = SimConfig {
                k,
                lambda,
                ..base.clone()
            };
            cfg.validate()?;
            runs.extend(
                ExperimentSpec::replicated("boundary", &cfg, replicates, PathBuf::new()).runs,
            );
        }
    }
    let summaries = match out_dir {
        Some(dir) => run_matrix(&ExperimentSpec {
            runs: runs.clone(),
            out_dir: dir.to_path_buf(),
        })?,
        None => {
            let outputs = execute(&runs)?;
            runs.iter()
                .zip(&outputs)
                .map(|(r, o)| summarize(&r.scenario, &r.config, &o.records))
                .collect()
        }
    };
    let rows = summaries
        .chunks(replicates.max(1) as usize)
        .filter(|c| !c.is_empty())
        .map(|chunk| {
            let stable = chunk.iter().filter(|s| s.is_stable()).count() as u64;
            BoundaryRow {
                k: chunk[0].k,
                lambda: chunk[0].lambda,
                runs: chunk.len() as u64,
                stable_runs: stable,
                stable_fraction: stable as f64 / chunk.len() as f64,
            }
        })
        .collect();
    let table = BoundaryTable { rows, summaries };
    if let Some(dir) = out_dir {
        write_file(&dir.join("boundary.csv"), &table.to_csv())?;
    }
    Ok(table)
}
