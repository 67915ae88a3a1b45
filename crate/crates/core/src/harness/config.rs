//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # Cramer study
//! dist.kappa = 1
//! dist.r = 0.5
//! family.kind = cramer
//! n_grid = 25, 100, 400, 1600
//! x = 3
//! estimator = largest_jump
//! samples = 1000000
//! seed = 20240601
//! ```
//!
//! Recognized keys:
//!
//! | key | default |
//! |-----|---------|
//! | `dist.kappa`, `dist.r` | required |
//! | `family.kind` (`cramer`, `remainder`, `moving_average`, `explicit`) | required |
//! | `family.p` | required for `remainder` and `moving_average` |
//! | `family.norm` (`tail_sum`, `power`) and `family.q` | `tail_sum` |
//! | `family.window` (`sqrt` or a length) | `sqrt` |
//! | `family.offset` (`n` or an index) | `n` |
//! | `family.window_norm` (`window_sum`, `window_length`) | `window_sum` |
//! | `family.weights` (comma list) or `family.weights_file` | one required for `explicit` |
//! | `n_grid`, `x` | required |
//! | `estimator` (`naive`, `largest_jump`, `both`) | `both` |
//! | `samples` | `100000` |
//! | `seed` | `0` |
//! | `workers` | `1` |
//! | `bounds.epsilon` | `0.1` |
//! | `bounds.quad_rel_tol` | `1e-9` |
//! | `bounds.lambda_grid` (`default` or comma list) | `default` |
//! | `truncation_tol` | `1e-6` |
//! | `output_path` | `study.csv` |
//! | `svg_path` | none |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dist::StretchedExpParams;
use crate::error::{Error, Result};
use crate::theory::{BoundConfig, LambdaGrid};
use crate::weights::{limit_sum, load_weight_file, OffsetRule, RemainderNorm, WeightFamily, WindowNorm, WindowRule};

const KNOWN_KEYS: &[&str] = &[
    "dist.kappa",
    "dist.r",
    "family.kind",
    "family.p",
    "family.norm",
    "family.q",
    "family.window",
    "family.offset",
    "family.window_norm",
    "family.weights",
    "family.weights_file",
    "n_grid",
    "x",
    "estimator",
    "samples",
    "seed",
    "workers",
    "bounds.epsilon",
    "bounds.quad_rel_tol",
    "bounds.lambda_grid",
    "truncation_tol",
    "output_path",
    "svg_path",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Naive,
    LargestJump,
    Both,
}

impl EstimatorChoice {
    pub fn estimators(self) -> &'static [Estimator] {
        match self {
            EstimatorChoice::Naive => &[Estimator::Naive],
            EstimatorChoice::LargestJump => &[Estimator::LargestJump],
            EstimatorChoice::Both => &[Estimator::Naive, Estimator::LargestJump],
        }
    }
}

impl FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(EstimatorChoice::Naive),
            "largest_jump" => Ok(EstimatorChoice::LargestJump),
            "both" => Ok(EstimatorChoice::Both),
            _ => Err(Error::config(format!(
                "unknown estimator {s:?}; expected naive, largest_jump or both"
            ))),
        }
    }
}

/// A single estimator, as it appears in the `estimator` CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Naive,
    LargestJump,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Naive => "naive",
            Estimator::LargestJump => "largest_jump",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Estimator::Naive),
            "largest_jump" => Ok(Estimator::LargestJump),
            _ => Err(Error::config(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dist: StretchedExpParams,
    pub family: WeightFamily,
    pub n_grid: Vec<u64>,
    pub x: f64,
    pub estimator: EstimatorChoice,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub bound_config: BoundConfig,
    pub truncation_tol: f64,
    pub output_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for everything but the distribution, family, grid and
    /// threshold.
    pub fn new(dist: StretchedExpParams, family: WeightFamily, n_grid: Vec<u64>, x: f64) -> Self {
        ExperimentConfig {
            bound_config: BoundConfig::for_params(&dist),
            dist,
            family,
            n_grid,
            x,
            estimator: EstimatorChoice::Both,
            samples: 100_000,
            seed: 0,
            workers: 1,
            truncation_tol: 1e-6,
            output_path: PathBuf::from("study.csv"),
            svg_path: None,
        }
    }

    /// Read and validate a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let kv = parse_pairs(text)?;
        let get = |k: &str| kv.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| Error::config(format!("missing required key {k}")));

        let kappa: f64 = parse_value("dist.kappa", need("dist.kappa")?)?;
        let r: f64 = parse_value("dist.r", need("dist.r")?)?;
        let dist = StretchedExpParams::new(kappa, r).map_err(to_config)?;
        let family = parse_family(&kv, base_dir)?;
        let n_grid = parse_list::<u64>("n_grid", need("n_grid")?)?;
        let x: f64 = parse_value("x", need("x")?)?;

        let mut cfg = ExperimentConfig::new(dist, family, n_grid, x);
        if let Some(v) = get("estimator") {
            cfg.estimator = v.parse()?;
        }
        if let Some(v) = get("samples") {
            cfg.samples = parse_value("samples", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse_value("seed", v)?;
        }
        if let Some(v) = get("workers") {
            cfg.workers = parse_value("workers", v)?;
        }
        if let Some(v) = get("bounds.epsilon") {
            cfg.bound_config.epsilon = parse_value("bounds.epsilon", v)?;
        }
        if let Some(v) = get("bounds.quad_rel_tol") {
            cfg.bound_config.quad_rel_tol = parse_value("bounds.quad_rel_tol", v)?;
        }
        if let Some(v) = get("bounds.lambda_grid") {
            cfg.bound_config.lambda_grid = if v == "default" {
                LambdaGrid::Default
            } else {
                LambdaGrid::Explicit(parse_list("bounds.lambda_grid", v)?)
            };
        }
        if let Some(v) = get("truncation_tol") {
            cfg.truncation_tol = parse_value("truncation_tol", v)?;
        }
        if let Some(v) = get("output_path") {
            cfg.output_path = base_dir.join(v);
        }
        if let Some(v) = get("svg_path") {
            cfg.svg_path = Some(base_dir.join(v));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every invariant, including `x > D E[X]`.
    pub fn validate(&self) -> Result<()> {
        self.family.validate().map_err(to_config)?;
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid is empty"));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::config("n_grid entries must be positive"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_grid must be strictly increasing"));
        }
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::config(format!("x must be a positive real, got {}", self.x)));
        }
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol.is_finite()) {
            return Err(Error::config("truncation_tol must be a positive real"));
        }
        self.bound_config.validate(&self.dist).map_err(to_config)?;
        let d = limit_sum(&self.family).map_err(to_config)?.d;
        let drift = d * self.dist.mean();
        if !(self.x > drift) {
            return Err(Error::config(format!(
                "x = {} is not above D * E[X] = {drift}; outside the large-deviation regime",
                self.x
            )));
        }
        Ok(())
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(Error::config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        if v.is_empty() {
            return Err(Error::config(format!("line {}: empty value for {k}", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::config(format!("line {}: duplicate key {k}", i + 1)));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|item| parse_value(key, item.trim())).collect()
}

fn parse_family(kv: &BTreeMap<String, String>, base_dir: &Path) -> Result<WeightFamily> {
    let get = |k: &str| kv.get(k).map(String::as_str);
    let need = |k: &str| get(k).ok_or_else(|| Error::config(format!("missing required key {k}")));
    let kind = need("family.kind")?;
    let family = match kind {
        "cramer" => WeightFamily::Cramer,
        "remainder" => {
            let p: f64 = parse_value("family.p", need("family.p")?)?;
            let norm = match get("family.norm").unwrap_or("tail_sum") {
                "tail_sum" => RemainderNorm::TailSum,
                "power" => RemainderNorm::Power(parse_value("family.q", need("family.q")?)?),
                other => return Err(Error::config(format!("unknown family.norm {other:?}"))),
            };
            WeightFamily::Remainder { p, norm }
        }
        "moving_average" => {
            let p: f64 = parse_value("family.p", need("family.p")?)?;
            let window = match get("family.window").unwrap_or("sqrt") {
                "sqrt" => WindowRule::Sqrt,
                v => WindowRule::Fixed(parse_value("family.window", v)?),
            };
            let offset = match get("family.offset").unwrap_or("n") {
                "n" => OffsetRule::N,
                v => OffsetRule::Fixed(parse_value("family.offset", v)?),
            };
            let norm = match get("family.window_norm").unwrap_or("window_sum") {
                "window_sum" => WindowNorm::WindowSum,
                "window_length" => WindowNorm::WindowLength,
                other => return Err(Error::config(format!("unknown family.window_norm {other:?}"))),
            };
            WeightFamily::MovingAverage {
                p,
                window,
                offset,
                norm,
            }
        }
        "explicit" => {
            let weights = match (get("family.weights"), get("family.weights_file")) {
                (Some(list), None) => parse_list("family.weights", list)?,
                (None, Some(file)) => load_weight_file(base_dir.join(file)).map_err(|e| match e {
                    Error::Io(io) => Error::config(format!("family.weights_file {file}: {io}")),
                    other => other,
                })?,
                _ => {
                    return Err(Error::config(
                        "explicit family needs exactly one of family.weights and family.weights_file",
                    ))
                }
            };
            WeightFamily::explicit(weights)
        }
        other => return Err(Error::config(format!("unknown family.kind {other:?}"))),
    };
    family.validate().map_err(to_config)?;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CRAMER: &str = "dist.kappa = 1\ndist.r = 0.5\nfamily.kind = cramer\nn_grid = 25, 100\nx = 3\n";

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(CRAMER).unwrap();
        assert_eq!(c.family, WeightFamily::Cramer);
        assert_eq!(c.n_grid, vec![25, 100]);
        assert_eq!(c.estimator, EstimatorChoice::Both);
        assert_eq!(c.samples, 100_000);
        assert_eq!(c.bound_config.epsilon, 0.1);
        assert_eq!(c.output_path, PathBuf::from("study.csv"));
        let c = parse(&format!("{CRAMER}output_path = out.csv\n")).unwrap();
        assert_eq!(c.output_path, PathBuf::from("/tmp/out.csv"));
    }

    #[test]
    fn comments_and_overrides() {
        let text = format!(
            "{CRAMER}# trailing comment\nestimator = largest_jump # inline\nseed = 42\nbounds.lambda_grid = 0.5, 1\n"
        );
        let c = parse(&text).unwrap();
        assert_eq!(c.estimator, EstimatorChoice::LargestJump);
        assert_eq!(c.seed, 42);
        assert_eq!(c.bound_config.lambda_grid, LambdaGrid::Explicit(vec![0.5, 1.0]));
    }

    #[test]
    fn family_kinds() {
        let base = "dist.kappa = 1\ndist.r = 0.5\nn_grid = 10\nx = 3\n";
        let c = parse(&format!("{base}family.kind = remainder\nfamily.p = 2\n")).unwrap();
        assert_eq!(c.family, WeightFamily::remainder(2.0));
        let c = parse(&format!(
            "{base}family.kind = moving_average\nfamily.p = 1.5\nfamily.window = 4\n"
        ))
        .unwrap();
        assert!(matches!(
            c.family,
            WeightFamily::MovingAverage {
                window: WindowRule::Fixed(4),
                ..
            }
        ));
        let c = parse(&format!("{base}family.kind = explicit\nfamily.weights = 0.6, 0.4\n")).unwrap();
        assert_eq!(c.family, WeightFamily::explicit(vec![0.6, 0.4]));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            CRAMER.replace("n_grid = 25, 100", "n_grid = "),
            CRAMER.replace("n_grid = 25, 100", "n_grid = 100, 25"),
            CRAMER.replace("n_grid = 25, 100", "n_grid = 25, 25"),
            CRAMER.replace("x = 3", "x = 2"),
            CRAMER.replace("x = 3", "x = 1.5"),
            CRAMER.replace("dist.r = 0.5", "dist.r = 1.5"),
            format!("{CRAMER}colour = red\n"),
            format!("{CRAMER}x = 4\n"),
            format!("{CRAMER}samples = 0\n"),
            format!("{CRAMER}bounds.epsilon = 0.7\n"),
            CRAMER.replace("family.kind = cramer", "family.kind = triangle"),
            "dist.kappa 1\n".to_string(),
        ];
        for text in &bad {
            let err = parse(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn missing_file_is_config_error() {
        let err = ExperimentConfig::load("/nonexistent/study.cfg").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
