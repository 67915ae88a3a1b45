//! Study runner: estimates and bounds along an `n` grid, as CSV rows.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::{Estimator, ExperimentConfig};
use crate::mc::{largest_jump_mc, naive_mc, RareEventEstimate};
use crate::rng::derive_seed;
use crate::theory::{certified_lower_bound, certified_upper_bound, lower_epsilon_schedule, predicted_log_prob};
use crate::weights::{limit_sum, realize, WeightVector};

/// CSV header, in column order.
pub const COLUMNS: [&str; 15] = [
    "n",
    "a_max",
    "sum_weights",
    "x",
    "estimator",
    "p_hat",
    "stderr",
    "log_p_hat",
    "normalized_rate",
    "predicted_rate",
    "log_lower_bound",
    "log_upper_bound",
    "samples",
    "elapsed_seconds",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: u64,
    pub a_max: f64,
    pub sum_weights: f64,
    pub x: f64,
    pub estimator: Estimator,
    pub p_hat: f64,
    pub stderr: f64,
    pub log_p_hat: f64,
    pub normalized_rate: f64,
    pub predicted_rate: f64,
    pub log_lower_bound: f64,
    pub log_upper_bound: f64,
    pub samples: u64,
    pub elapsed_seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub last_n: u64,
    /// Largest `|normalized_rate - predicted_rate| / |predicted_rate|` among
    /// the rows at `last_n`.
    pub max_relative_gap: f64,
}

impl std::fmt::Display for StudySummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "n={}: max |normalized_rate - predicted_rate| / |predicted_rate| = {:.4}",
            self.last_n, self.max_relative_gap
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub summary: StudySummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyOptions {
    pub workers: usize,
    /// Record wall-clock time per row; otherwise `elapsed_seconds` is 0 so
    /// reruns produce identical files.
    pub timing: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            workers: 1,
            timing: false,
        }
    }
}

/// Bounds at one grid point, shared by every estimator row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub predicted_log_prob: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

/// Certified bounds for one realized row. Outside the regime of the upper
/// bound the trivial `log 1 = 0` is reported.
pub fn grid_bounds(config: &ExperimentConfig, wv: &WeightVector, d: f64) -> Result<GridBounds> {
    let params = &config.dist;
    let predicted = predicted_log_prob(wv, config.x, params, d)?;
    let eps = lower_epsilon_schedule(wv, params);
    let log_lower = certified_lower_bound(wv, config.x, params, eps)?.log_lower;
    let log_upper = match certified_upper_bound(wv, config.x, params, &config.bound_config) {
        Ok(report) => report.log_upper,
        Err(Error::Domain(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(GridBounds {
        predicted_log_prob: predicted,
        log_lower,
        log_upper,
    })
}

pub fn run_study(config: &ExperimentConfig, options: StudyOptions) -> Result<StudyReport> {
    config.validate()?;
    let params = &config.dist;
    let d = limit_sum(&config.family)?.d;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let wv = realize(&config.family, n, config.truncation_tol)?;
        let bounds = grid_bounds(config, &wv, d)?;
        let scale = wv.a_max().powf(params.r());
        let seed = derive_seed(config.seed, n);
        for &est in config.estimator.estimators() {
            let e: RareEventEstimate = match est {
                Estimator::Naive => naive_mc(&wv, config.x, params, config.samples, seed, options.workers)?,
                Estimator::LargestJump => {
                    largest_jump_mc(&wv, config.x, params, config.samples, seed, options.workers)?
                }
            };
            rows.push(StudyRow {
                n,
                a_max: wv.a_max(),
                sum_weights: wv.sum(),
                x: config.x,
                estimator: est,
                p_hat: e.p_hat,
                stderr: e.stderr,
                log_p_hat: e.log_p_hat,
                normalized_rate: e.normalized_rate,
                predicted_rate: scale * bounds.predicted_log_prob,
                log_lower_bound: bounds.log_lower,
                log_upper_bound: bounds.log_upper,
                samples: e.samples,
                elapsed_seconds: if options.timing { e.elapsed_seconds } else { 0.0 },
                seed,
            });
        }
    }
    let summary = summarize(&rows).ok_or_else(|| Error::config("study produced no rows"))?;
    Ok(StudyReport { rows, summary })
}

pub fn summarize(rows: &[StudyRow]) -> Option<StudySummary> {
    let last_n = rows.iter().map(|r| r.n).max()?;
    let max_relative_gap = rows
        .iter()
        .filter(|r| r.n == last_n)
        .map(|r| ((r.normalized_rate - r.predicted_rate) / r.predicted_rate).abs())
        .fold(f64::NEG_INFINITY, f64::max);
    Some(StudySummary {
        last_n,
        max_relative_gap,
    })
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            float(r.a_max),
            float(r.sum_weights),
            float(r.x),
            r.estimator.as_str().to_string(),
            float(r.p_hat),
            float(r.stderr),
            float(r.log_p_hat),
            float(r.normalized_rate),
            float(r.predicted_rate),
            float(r.log_lower_bound),
            float(r.log_upper_bound),
            r.samples.to_string(),
            float(r.elapsed_seconds),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[StudyRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<StudyRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::config(format!(
            "unexpected CSV header: {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k)
                .ok_or_else(|| Error::config(format!("row {}: missing column {}", i + 1, COLUMNS[k])))
        };
        let num = |k: usize| -> Result<f64> {
            let s = field(k)?;
            s.parse()
                .map_err(|_| Error::config(format!("row {}: bad {} {s:?}", i + 1, COLUMNS[k])))
        };
        let int = |k: usize| -> Result<u64> {
            let s = field(k)?;
            s.parse()
                .map_err(|_| Error::config(format!("row {}: bad {} {s:?}", i + 1, COLUMNS[k])))
        };
        rows.push(StudyRow {
            n: int(0)?,
            a_max: num(1)?,
            sum_weights: num(2)?,
            x: num(3)?,
            estimator: field(4)?.parse()?,
            p_hat: num(5)?,
            stderr: num(6)?,
            log_p_hat: num(7)?,
            normalized_rate: num(8)?,
            predicted_rate: num(9)?,
            log_lower_bound: num(10)?,
            log_upper_bound: num(11)?,
            samples: int(12)?,
            elapsed_seconds: num(13)?,
            seed: int(14)?,
        });
    }
    Ok(rows)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<StudyRow>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(std::io::BufReader::new(file))
}
