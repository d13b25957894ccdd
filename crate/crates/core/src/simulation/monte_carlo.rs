//! Replicated simulation runs and their summaries.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{sr_bundle, sr_test_from_bundle};
use crate::error::{EcdmError, Result};
use crate::inference::{correlation_test_from_bundle, kappa_hat, rv_hat};
use crate::kernel::{self, Evaluation, SplitTable};
use crate::normal::{normal_cdf, normal_pdf};
use crate::simulation::generate::Model;
use crate::simulation::oracle::{oracle_for_model, OracleQuantities};
use crate::simulation::scenario::{Coupling, SimScenario};

/// Per-replication outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub t_hat: f64,
    pub w1: f64,
    pub w2: f64,
    pub delta_scale: f64,
    pub statistic: f64,
    pub reject: bool,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub covers: bool,
    pub kappa: Option<f64>,
    pub rv: f64,
    pub delta_sr: f64,
    pub w1_sr: f64,
    pub w2_sr: f64,
    pub sr_statistic: Option<f64>,
    pub sr_reject: bool,
}

pub const RECORD_COLUMNS: [&str; 17] = [
    "replication",
    "t_hat",
    "w1",
    "w2",
    "delta_scale",
    "statistic",
    "reject",
    "ci_lower",
    "ci_upper",
    "covers",
    "kappa",
    "rv",
    "delta_sr",
    "w1_sr",
    "w2_sr",
    "sr_statistic",
    "sr_reject",
];

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

impl ReplicationRecord {
    pub fn csv_row(&self) -> String {
        [
            self.replication.to_string(),
            fmt17(self.t_hat),
            fmt17(self.w1),
            fmt17(self.w2),
            fmt17(self.delta_scale),
            fmt17(self.statistic),
            u8::from(self.reject).to_string(),
            fmt17(self.ci_lower),
            fmt17(self.ci_upper),
            u8::from(self.covers).to_string(),
            fmt_opt(self.kappa),
            fmt17(self.rv),
            fmt17(self.delta_sr),
            fmt17(self.w1_sr),
            fmt17(self.w2_sr),
            fmt_opt(self.sr_statistic),
            u8::from(self.sr_reject).to_string(),
        ]
        .join(",")
    }
}

/// Mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, se: (variance / n).sqrt(), variance }
    }

    /// `|mean - target| <= k se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Proportion with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rate: f64,
    pub se: f64,
    pub count: usize,
}

impl Rate {
    pub fn of(flags: impl Iterator<Item = bool>) -> Self {
        let (hits, total) = flags.fold((0usize, 0usize), |(h, t), f| (h + usize::from(f), t + 1));
        let rate = hits as f64 / total as f64;
        Self { rate, se: (rate * (1.0 - rate) / total as f64).sqrt(), count: total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// N(0,1) density at bin centers.
    pub null_density: Vec<f64>,
    /// N(Δ/δ, 1) density at bin centers.
    pub shifted_density: Vec<f64>,
}

/// Freedman–Diaconis histogram of `values`.
pub fn histogram(values: &[f64], shift: f64) -> Histogram {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = if width > 0.0 && hi > lo {
        (((hi - lo) / width).ceil() as usize).clamp(1, 1000)
    } else {
        1
    };
    let step = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|b| lo + step * b as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in &sorted {
        let b = (((v - lo) / step) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Histogram {
        null_density: centers.iter().map(|&c| normal_pdf(c)).collect(),
        shifted_density: centers.iter().map(|&c| normal_pdf(c - shift)).collect(),
        edges,
        counts,
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

/// One-sample Kolmogorov–Smirnov distance to `N(shift, 1)`.
pub fn ks_distance(values: &[f64], shift: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = normal_cdf(x - shift);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub oracle: OracleQuantities,
    pub replications: usize,
    /// Rejection rate of the cross-data-matrix test: empirical size under
    /// the null coupling, empirical power under the shared coupling.
    pub rejection: Rate,
    /// Rejection rate of the comparison test (failed scale counts as accept).
    pub sr_rejection: Rate,
    /// Replications where the comparison statistic was undefined.
    pub sr_undefined: usize,
    pub size: Option<f64>,
    pub power: Option<f64>,
    pub coverage: Rate,
    pub t_hat: MeanSe,
    pub w1: MeanSe,
    pub w2: MeanSe,
    pub delta_sr: MeanSe,
    pub rv: MeanSe,
    /// `T / Δ` and `Δ_SR / Δ`, shared coupling only.
    pub t_hat_ratio: Option<MeanSe>,
    pub delta_sr_ratio: Option<MeanSe>,
    /// `K² / Δ²`, the asymptotic variance of `T / Δ`.
    pub ratio_variance_pop: Option<f64>,
    pub median_kappa: Option<f64>,
    pub median_inv_kappa: Option<f64>,
    pub ks_null: f64,
    pub ks_shifted: f64,
    pub histogram: Histogram,
}

/// A finished run: the summary plus every replication.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub records: Vec<ReplicationRecord>,
}

impl SimRun {
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", RECORD_COLUMNS.join(","))?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.statistic).collect()
    }
}

fn replicate(model: &Model, oracle: &OracleQuantities, r: u64) -> Result<ReplicationRecord> {
    let alpha = model.scenario.alpha;
    let sample = model.replication(r)?;
    let table = SplitTable::build(&sample);
    let bundle = kernel::raw_bundle(&sample, &table, Evaluation::Sequential);
    let test = correlation_test_from_bundle(&bundle, alpha)?;
    let sr = sr_bundle(&sample);
    let sr_test = match sr_test_from_bundle(&sr, alpha) {
        Ok(t) => Some(t),
        Err(EcdmError::NonpositiveScale(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ReplicationRecord {
        replication: r,
        t_hat: bundle.t_hat,
        w1: bundle.w1,
        w2: bundle.w2,
        delta_scale: bundle.delta_scale,
        statistic: test.statistic,
        reject: test.reject,
        ci_lower: test.ci.lower,
        ci_upper: test.ci.upper,
        covers: test.ci.contains(oracle.delta),
        kappa: kappa_hat(&bundle, bundle.n).ok(),
        rv: rv_hat(&bundle)?,
        delta_sr: sr.delta_sr,
        w1_sr: sr.w1_sr,
        w2_sr: sr.w2_sr,
        sr_statistic: sr_test.map(|t| t.statistic),
        sr_reject: sr_test.is_some_and(|t| t.reject),
    })
}

/// Run all replications on `workers` threads. Replication `r` draws from
/// its own stream, so the result does not depend on `workers`.
pub fn run_monte_carlo(scenario: &SimScenario, workers: usize) -> Result<SimRun> {
    let model = Model::new(scenario)?;
    run_model(&model, workers)
}

pub fn run_model(model: &Model, workers: usize) -> Result<SimRun> {
    let oracle = oracle_for_model(model)?;
    let reps = model.scenario.replications as u64;
    let records: Vec<ReplicationRecord> = if workers <= 1 {
        (0..reps).map(|r| replicate(model, &oracle, r)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EcdmError::InvalidArgument(e.to_string()))?;
        pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|r| replicate(model, &oracle, r))
                .collect::<Result<_>>()
        })?
    };
    let report = summarize(&model.scenario, oracle, &records);
    Ok(SimRun { report, records })
}

fn column(records: &[ReplicationRecord], f: impl Fn(&ReplicationRecord) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

pub fn summarize(scenario: &SimScenario, oracle: OracleQuantities, records: &[ReplicationRecord]) -> SimReport {
    let rejection = Rate::of(records.iter().map(|r| r.reject));
    let shared = scenario.coupling == Coupling::SharedCoordinateCaseB;
    let delta = oracle.delta;
    let stats = column(records, |r| r.statistic);
    let kappas: Vec<f64> = records.iter().filter_map(|r| r.kappa).collect();
    let shift = delta / oracle.delta_scale_pop;
    SimReport {
        scenario: scenario.clone(),
        oracle,
        replications: records.len(),
        rejection,
        sr_rejection: Rate::of(records.iter().map(|r| r.sr_reject)),
        sr_undefined: records.iter().filter(|r| r.sr_statistic.is_none()).count(),
        size: (!shared).then_some(rejection.rate),
        power: shared.then_some(rejection.rate),
        coverage: Rate::of(records.iter().map(|r| r.covers)),
        t_hat: MeanSe::of(&column(records, |r| r.t_hat)),
        w1: MeanSe::of(&column(records, |r| r.w1)),
        w2: MeanSe::of(&column(records, |r| r.w2)),
        delta_sr: MeanSe::of(&column(records, |r| r.delta_sr)),
        rv: MeanSe::of(&column(records, |r| r.rv)),
        t_hat_ratio: shared.then(|| MeanSe::of(&column(records, |r| r.t_hat / delta))),
        delta_sr_ratio: shared.then(|| MeanSe::of(&column(records, |r| r.delta_sr / delta))),
        ratio_variance_pop: if shared { oracle.k_pop.map(|k| (k / delta).powi(2)) } else { None },
        median_kappa: (!kappas.is_empty()).then(|| median(&kappas)),
        median_inv_kappa: (!kappas.is_empty())
            .then(|| median(&kappas.iter().map(|k| 1.0 / k).collect::<Vec<_>>())),
        ks_null: ks_distance(&stats, 0.0),
        ks_shifted: ks_distance(&stats, shift),
        histogram: histogram(&stats, shift),
    }
}
