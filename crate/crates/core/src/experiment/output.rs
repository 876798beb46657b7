//! CSV time series, per-run summaries, and reading them back.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::metrics::{self, MetricsRecord};
use crate::swarm::{SimConfig, Verdict};

const FIXED_COLUMNS: [&str; 7] = [
    "slot",
    "population",
    "arrivals_cum",
    "departures_cum",
    "M",
    "one_club",
    "server_served_new",
];

/// `printf("%g")`: 6 significant digits, trailing zeros dropped, exponent
/// form outside `1e-4 <= |x| < 1e6`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // the exponent after rounding to 6 digits decides the style
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(alpha_columns: usize) -> String {
    let mut h = FIXED_COLUMNS.join(",");
    for i in 0..alpha_columns {
        write!(h, ",alpha_{i}").expect("string write");
    }
    h
}

/// The whole series as CSV. `k` can grow during an adaptive run; the alpha
/// columns cover the largest `k` and shorter rows are padded with 0.
pub fn write_csv(records: &[MetricsRecord]) -> String {
    let width = records.iter().map(|r| r.alpha.len()).max().unwrap_or(0);
    let mut out = csv_header(width);
    out.push('\n');
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.slot,
            r.population,
            r.arrivals_cum,
            r.departures_cum,
            r.deficit,
            u8::from(r.one_club),
            u8::from(r.server_served_new),
        )
        .expect("string write");
        for i in 0..width {
            let a = r.alpha.get(i).copied().unwrap_or(0.0);
            write!(out, ",{}", format_g(a)).expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Parse a CSV produced by [`write_csv`]. Counts are rebuilt from alpha and
/// the population, which is exact while the population stays below 10^5.
pub fn read_csv(text: &str) -> Result<Vec<MetricsRecord>, ConfigError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ConfigError::Syntax { line: 1 })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < FIXED_COLUMNS.len() || cols[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(ConfigError::Syntax { line: 1 });
    }
    let width = cols.len() - FIXED_COLUMNS.len();
    let mut records = Vec::new();
    for (i, line) in lines {
        let bad = || ConfigError::Syntax { line: i + 1 };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(bad());
        }
        let int = |j: usize| f[j].parse::<u64>().map_err(|_| bad());
        let flag = |j: usize| match f[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad()),
        };
        let population = int(1)? as usize;
        let alpha = f[FIXED_COLUMNS.len()..]
            .iter()
            .map(|a| a.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        let counts = alpha
            .iter()
            .map(|a| (a * population as f64).round() as u64)
            .collect();
        debug_assert_eq!(alpha.len(), width);
        records.push(MetricsRecord {
            slot: int(0)?,
            population,
            counts,
            alpha,
            deficit: int(4)?,
            arrivals_cum: int(2)?,
            departures_cum: int(3)?,
            one_club: flag(5)?,
            server_served_new: flag(6)?,
        });
    }
    Ok(records)
}

/// One line of `summary.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub policy: String,
    pub lambda: f64,
    pub k: usize,
    pub seed: u64,
    pub replicate: u64,
    pub verdict: String,
    pub divergence_slot: Option<u64>,
    pub final_population: usize,
    /// Mean change of `M` per slot over the last 25% of slots.
    pub mean_drift: Option<f64>,
    /// Population slope over the second half of the run.
    pub growth_slope: Option<f64>,
}

impl RunSummary {
    pub fn is_stable(&self) -> bool {
        self.verdict == "stable"
    }
}

/// Window used for the growth slope: the second half of the series. For a
/// diverged run this is the part where the population runs away.
pub fn growth_window(len: usize) -> Range<usize> {
    len / 2..len
}

/// A run diverged iff its last record is over the threshold.
pub fn verdict_of(records: &[MetricsRecord], threshold: usize) -> Verdict {
    match records.last() {
        Some(r) if r.population > threshold => Verdict::Diverged { slot: r.slot },
        _ => Verdict::Stable,
    }
}

/// Summary fields that depend only on the series and the run's config.
pub fn summarize(scenario: &str, cfg: &SimConfig, records: &[MetricsRecord]) -> RunSummary {
    let verdict = verdict_of(records, cfg.pop_threshold);
    let len = records.len();
    RunSummary {
        scenario: scenario.to_string(),
        policy: cfg.policy.name().to_string(),
        lambda: cfg.lambda,
        k: cfg.k,
        seed: cfg.seed,
        replicate: cfg.replicate,
        verdict: if verdict.is_stable() {
            "stable"
        } else {
            "diverged"
        }
        .to_string(),
        divergence_slot: verdict.divergence_slot(),
        final_population: records.last().map_or(0, |r| r.population),
        mean_drift: metrics::empirical_drift(records, metrics::last_quarter(len)).ok(),
        growth_slope: metrics::growth_slope(records, growth_window(len)).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_g_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333"),
            (2.0 / 3.0, "0.666667"),
            (0.001, "0.001"),
            (0.0001234567, "0.000123457"),
            (0.00001, "1e-05"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (-0.25, "-0.25"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x), want, "{x}");
        }
    }

    #[test]
    fn header_is_exact() {
        assert_eq!(
            csv_header(3),
            "slot,population,arrivals_cum,departures_cum,M,one_club,server_served_new,alpha_0,alpha_1,alpha_2"
        );
    }
}
