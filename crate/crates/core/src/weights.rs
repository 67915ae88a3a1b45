//! Weight arrays `a_i(n)` and their truncated realizations.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::special::{hurwitz_zeta, neumaier_sum};

/// Hard cap on the number of retained terms in a realization.
pub const MAX_TERMS: u64 = 100_000_000;

/// Normalizer `rho_n` for the remainder family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemainderNorm {
    /// `rho_n = sum_{i >= n} sigma_i`, so every row sums to one.
    TailSum,
    /// `rho_n = n^(-q)`; requires `q <= p - 1` for a finite limit.
    Power(f64),
}

/// Window length `phi_n` for moving averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRule {
    /// `ceil(sqrt(n))`
    Sqrt,
    Fixed(u64),
}

/// Window start `m_n` for moving averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetRule {
    /// `m_n = n`
    N,
    Fixed(u64),
}

/// Normalizer applied to the window of a moving average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowNorm {
    /// Divide by the sum of the window's sigmas (rows sum to one).
    WindowSum,
    /// Divide by the window length `phi_n`.
    WindowLength,
}

/// Caller-provided weights.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplicitWeights {
    /// The same array for every `n`.
    Fixed(Vec<f64>),
    /// One array per `n`.
    PerN(BTreeMap<u64, Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `a_i(n) = 1/n` for `i <= n`.
    Cramer,
    /// `a_i(n) = sigma_i / rho_n` for `i >= n`, `sigma_i = i^(-p)`.
    Remainder {
        p: f64,
        norm: RemainderNorm,
    },
    /// `a_i(n) = sigma_i / norm` on the window `m_n <= i < m_n + phi_n`.
    MovingAverage {
        p: f64,
        window: WindowRule,
        offset: OffsetRule,
        norm: WindowNorm,
    },
    Explicit(ExplicitWeights),
}

impl WeightFamily {
    /// Remainder sums with the default normalizer (`D = 1`).
    pub fn remainder(p: f64) -> Self {
        WeightFamily::Remainder {
            p,
            norm: RemainderNorm::TailSum,
        }
    }

    /// Moving averages with the default rules: `phi_n = ceil(sqrt n)`,
    /// `m_n = n`, window-sum normalization.
    pub fn moving_average(p: f64) -> Self {
        WeightFamily::MovingAverage {
            p,
            window: WindowRule::Sqrt,
            offset: OffsetRule::N,
            norm: WindowNorm::WindowSum,
        }
    }

    pub fn explicit(weights: Vec<f64>) -> Self {
        WeightFamily::Explicit(ExplicitWeights::Fixed(weights))
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightFamily::Cramer => "cramer",
            WeightFamily::Remainder { .. } => "remainder",
            WeightFamily::MovingAverage { .. } => "moving_average",
            WeightFamily::Explicit(_) => "explicit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_p = |p: f64| {
            if p > 1.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("decay exponent p must be > 1, got {p}")))
            }
        };
        match self {
            WeightFamily::Cramer => Ok(()),
            WeightFamily::Remainder { p, norm } => {
                check_p(*p)?;
                if let RemainderNorm::Power(q) = norm {
                    if !(q.is_finite() && *q <= p - 1.0) {
                        return Err(Error::domain(format!(
                            "rho_n = n^-q needs q <= p - 1 for a finite row-sum limit, got q={q}, p={p}"
                        )));
                    }
                }
                Ok(())
            }
            WeightFamily::MovingAverage { p, window, offset, .. } => {
                check_p(*p)?;
                if *window == WindowRule::Fixed(0) || *offset == OffsetRule::Fixed(0) {
                    return Err(Error::domain("moving-average window and offset must be positive"));
                }
                Ok(())
            }
            WeightFamily::Explicit(ExplicitWeights::Fixed(w)) => check_explicit(w),
            WeightFamily::Explicit(ExplicitWeights::PerN(rows)) => {
                if rows.is_empty() {
                    return Err(Error::domain("explicit family has no rows"));
                }
                rows.values().try_for_each(|w| check_explicit(w))
            }
        }
    }
}

fn check_explicit(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain("explicit weights must be finite and non-negative"));
    }
    if !w.iter().any(|v| *v > 0.0) {
        return Err(Error::domain("explicit weights need at least one positive entry"));
    }
    Ok(())
}

/// Truncated realization of one row `a_i(n)`.
///
/// `weights[k]` is `a_{offset + k}(n)`; indices outside the stored range are
/// either exactly zero or part of an omitted tail whose total mass is at most
/// `tail_sum_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    n: u64,
    offset: u64,
    weights: Vec<f64>,
    a_max: f64,
    argmax_index: u64,
    sum: f64,
    sum_squares: f64,
    tail_sum_bound: f64,
}

impl WeightVector {
    /// Build from a stored block starting at 1-based index `offset`.
    pub fn from_parts(n: u64, offset: u64, weights: Vec<f64>, tail_sum_bound: f64) -> Result<Self> {
        check_explicit(&weights)?;
        if offset == 0 {
            return Err(Error::domain("weight indices are 1-based"));
        }
        if !(tail_sum_bound >= 0.0) {
            return Err(Error::domain("tail_sum_bound must be non-negative"));
        }
        let mut a_max = 0.0;
        let mut arg = 0usize;
        for (k, &w) in weights.iter().enumerate() {
            if w > a_max {
                a_max = w;
                arg = k;
            }
        }
        let sum = neumaier_sum(weights.iter().copied());
        let sum_squares = neumaier_sum(weights.iter().map(|w| w * w));
        Ok(WeightVector {
            n,
            offset,
            weights,
            a_max,
            argmax_index: offset + arg as u64,
            sum,
            sum_squares,
            tail_sum_bound,
        })
    }

    /// A finite row given directly, starting at index 1.
    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        Self::from_parts(1, 1, weights, 0.0)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// 1-based index of `weights()[0]`.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// Least index attaining `a_max`.
    pub fn argmax_index(&self) -> u64 {
        self.argmax_index
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_squares(&self) -> f64 {
        self.sum_squares
    }

    pub fn tail_sum_bound(&self) -> f64 {
        self.tail_sum_bound
    }

    /// `n * a_max(n)`; diagnostic only.
    pub fn n_times_a_max(&self) -> f64 {
        self.n as f64 * self.a_max
    }

    /// Same row with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain("scale factor must be positive"));
        }
        Self::from_parts(
            self.n,
            self.offset,
            self.weights.iter().map(|w| w * factor).collect(),
            self.tail_sum_bound * factor,
        )
    }
}

/// Row-sum limit `D` of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSum {
    pub d: f64,
    /// `false` when `d` is only the last realized row sum.
    pub analytic: bool,
}

pub fn limit_sum(family: &WeightFamily) -> Result<LimitSum> {
    family.validate()?;
    let analytic = |d| Ok(LimitSum { d, analytic: true });
    match family {
        WeightFamily::Cramer => analytic(1.0),
        WeightFamily::Remainder { p, norm } => match norm {
            RemainderNorm::TailSum => analytic(1.0),
            // rho_n ~ n^(1-p)/(p-1)
            RemainderNorm::Power(q) if *q == p - 1.0 => analytic(1.0 / (p - 1.0)),
            RemainderNorm::Power(_) => analytic(0.0),
        },
        WeightFamily::MovingAverage {
            p,
            window,
            offset,
            norm,
        } => match (norm, window, offset) {
            (WindowNorm::WindowSum, _, _) => analytic(1.0),
            (WindowNorm::WindowLength, WindowRule::Fixed(len), OffsetRule::Fixed(m)) => {
                let s = neumaier_sum((*m..m + len).map(|i| (i as f64).powf(-p)));
                analytic(s / *len as f64)
            }
            // sum over the window is at most zeta(p) and is divided by a
            // growing length, or the window moves off to infinity
            (WindowNorm::WindowLength, _, _) => analytic(0.0),
        },
        WeightFamily::Explicit(ExplicitWeights::Fixed(w)) => Ok(LimitSum {
            d: neumaier_sum(w.iter().copied()),
            analytic: false,
        }),
        WeightFamily::Explicit(ExplicitWeights::PerN(rows)) => {
            let (_, w) = rows.iter().next_back().expect("validated non-empty");
            Ok(LimitSum {
                d: neumaier_sum(w.iter().copied()),
                analytic: false,
            })
        }
    }
}

/// Realize row `n` of `family`, omitting a tail of total mass at most
/// `truncation_tol`.
pub fn realize(family: &WeightFamily, n: u64, truncation_tol: f64) -> Result<WeightVector> {
    family.validate()?;
    if n == 0 {
        return Err(Error::domain("row index n must be positive"));
    }
    if !(truncation_tol >= 0.0) {
        return Err(Error::domain("truncation tolerance must be non-negative"));
    }
    match family {
        WeightFamily::Cramer => {
            check_terms(n)?;
            WeightVector::from_parts(n, 1, vec![1.0 / n as f64; n as usize], 0.0)
        }
        WeightFamily::Remainder { p, norm } => realize_remainder(*p, *norm, n, truncation_tol),
        WeightFamily::MovingAverage {
            p,
            window,
            offset,
            norm,
        } => {
            let len = match window {
                WindowRule::Sqrt => (n as f64).sqrt().ceil() as u64,
                WindowRule::Fixed(l) => *l,
            };
            let start = match offset {
                OffsetRule::N => n,
                OffsetRule::Fixed(m) => *m,
            };
            check_terms(len)?;
            let sigmas: Vec<f64> = (start..start + len).map(|i| (i as f64).powf(-p)).collect();
            let denom = match norm {
                WindowNorm::WindowSum => neumaier_sum(sigmas.iter().copied()),
                WindowNorm::WindowLength => len as f64,
            };
            WeightVector::from_parts(n, start, sigmas.into_iter().map(|s| s / denom).collect(), 0.0)
        }
        WeightFamily::Explicit(ExplicitWeights::Fixed(w)) => WeightVector::from_parts(n, 1, w.clone(), 0.0),
        WeightFamily::Explicit(ExplicitWeights::PerN(rows)) => match rows.get(&n) {
            Some(w) => WeightVector::from_parts(n, 1, w.clone(), 0.0),
            None => Err(Error::domain(format!("explicit family has no row for n={n}"))),
        },
    }
}

fn check_terms(count: u64) -> Result<()> {
    if count > MAX_TERMS {
        Err(Error::Resource(format!("{count} terms exceed the cap of {MAX_TERMS}")))
    } else {
        Ok(())
    }
}

fn realize_remainder(p: f64, norm: RemainderNorm, n: u64, tol: f64) -> Result<WeightVector> {
    let rho = match norm {
        RemainderNorm::TailSum => hurwitz_zeta(p, n),
        RemainderNorm::Power(q) => (n as f64).powf(-q),
    };
    // omitted mass sum_{i > M} i^-p / rho <= M^(1-p) / ((p - 1) rho) <= tol
    let omitted = |m: f64| m.powf(1.0 - p) / ((p - 1.0) * rho);
    if tol == 0.0 {
        return Err(Error::Resource(
            "remainder family has infinite support; tolerance 0 is unreachable".into(),
        ));
    }
    let needed = (tol * (p - 1.0) * rho).powf(-1.0 / (p - 1.0));
    if !needed.is_finite() || needed - n as f64 + 1.0 > MAX_TERMS as f64 {
        return Err(Error::Resource(format!(
            "remainder family (p={p}, n={n}) needs about {needed:.3e} terms to reach tolerance {tol:e}; cap is {MAX_TERMS}"
        )));
    }
    let mut last = (needed.ceil() as u64).max(n);
    // guard against rounding in the closed-form index
    while omitted(last as f64) > tol {
        last += 1;
    }
    check_terms(last - n + 1)?;
    let weights: Vec<f64> = (n..=last).map(|i| (i as f64).powf(-p) / rho).collect();
    WeightVector::from_parts(n, n, weights, omitted(last as f64))
}

/// Read a one-column weight file: one decimal number per line; blank lines
/// and lines starting with `#` are skipped.
pub fn load_weight_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_weight_column(&text).map_err(|e| match e {
        Error::Domain(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_weight_column(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::domain(format!("line {}: not a number: {line:?}", lineno + 1)))?;
        out.push(v);
    }
    check_explicit(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cramer_row_is_exact() {
        let w = realize(&WeightFamily::Cramer, 4, 0.0).unwrap();
        assert_eq!(w.weights(), &[0.25; 4]);
        assert_eq!(w.a_max(), 0.25);
        assert_eq!(w.argmax_index(), 1);
        assert_eq!(w.sum(), 1.0);
        assert_eq!(w.tail_sum_bound(), 0.0);
        assert_eq!(w.n_times_a_max(), 1.0);
    }

    #[test]
    fn remainder_row_sums_to_one() {
        // direct partial sums of i^-2 give rho_10
        let direct: f64 = neumaier_sum((10..2_000_000u64).map(|i| (i as f64).powi(-2))) + 1.0 / 1_999_999.5;
        let w = realize(&WeightFamily::remainder(2.0), 10, 1e-6).unwrap();
        assert!(w.sum() <= 1.0 && w.sum() >= 1.0 - 1e-6, "{}", w.sum());
        assert!(w.tail_sum_bound() <= 1e-6);
        assert!(((w.a_max() - 0.01 / direct) / w.a_max()).abs() < 1e-11);
        assert_eq!(w.argmax_index(), 10);
        assert_eq!(w.offset(), 10);
    }

    #[test]
    fn remainder_tiny_tolerance_hits_term_cap() {
        // p = 2 at tolerance 1e-10 needs ~1e11 terms
        let err = realize(&WeightFamily::remainder(2.0), 10, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
        // p = 3 reaches it easily
        let w = realize(&WeightFamily::remainder(3.0), 10, 1e-10).unwrap();
        assert!(w.sum() >= 1.0 - 1e-10 && w.sum() <= 1.0 + 1e-15);
    }

    #[test]
    fn explicit_read_off() {
        let w = realize(&WeightFamily::explicit(vec![0.5, 0.5]), 1, 1e-9).unwrap();
        assert_eq!(w.a_max(), 0.5);
        assert_eq!(w.argmax_index(), 1);
        assert_eq!(w.sum(), 1.0);
        let l = limit_sum(&WeightFamily::explicit(vec![0.5, 0.5])).unwrap();
        assert_eq!(
            l,
            LimitSum {
                d: 1.0,
                analytic: false
            }
        );
    }

    #[test]
    fn explicit_validation() {
        assert!(realize(&WeightFamily::explicit(vec![0.0, 0.0]), 1, 0.0).is_err());
        assert!(realize(&WeightFamily::explicit(vec![-0.1, 1.0]), 1, 0.0).is_err());
        let mut rows = BTreeMap::new();
        rows.insert(3, vec![0.2, 0.8]);
        let fam = WeightFamily::Explicit(ExplicitWeights::PerN(rows));
        assert_eq!(realize(&fam, 3, 0.0).unwrap().argmax_index(), 2);
        assert!(realize(&fam, 4, 0.0).is_err());
    }

    #[test]
    fn analytic_limits() {
        assert_eq!(
            limit_sum(&WeightFamily::Cramer).unwrap(),
            LimitSum { d: 1.0, analytic: true }
        );
        assert_eq!(limit_sum(&WeightFamily::remainder(2.0)).unwrap().d, 1.0);
        assert_eq!(limit_sum(&WeightFamily::moving_average(2.0)).unwrap().d, 1.0);
        let fam = WeightFamily::Remainder {
            p: 3.0,
            norm: RemainderNorm::Power(2.0),
        };
        assert_eq!(limit_sum(&fam).unwrap().d, 0.5);
        let bad = WeightFamily::Remainder {
            p: 2.0,
            norm: RemainderNorm::Power(1.5),
        };
        assert!(limit_sum(&bad).is_err());
    }

    #[test]
    fn moving_average_defaults() {
        let w = realize(&WeightFamily::moving_average(1.5), 100, 0.0).unwrap();
        assert_eq!(w.len(), 10);
        assert_eq!(w.offset(), 100);
        assert_eq!(w.argmax_index(), 100);
        assert!((w.sum() - 1.0).abs() < 1e-15);
        let w = realize(&WeightFamily::moving_average(1.5), 101, 0.0).unwrap();
        assert_eq!(w.len(), 11);
    }

    #[test]
    fn a_max_vanishes_along_the_grid() {
        let families = [
            WeightFamily::Cramer,
            WeightFamily::remainder(2.0),
            WeightFamily::remainder(3.0),
            WeightFamily::moving_average(2.0),
        ];
        for fam in &families {
            for n in [4u64, 16, 64, 256] {
                let a = realize(fam, n, 1e-4).unwrap().a_max();
                let b = realize(fam, 4 * n, 1e-4).unwrap().a_max();
                assert!(b < a, "{fam:?} n={n}: {b} !< {a}");
            }
        }
    }

    #[test]
    fn remainder_sum_brackets_infinite_sum() {
        // high-precision oracle: compensated partial sums to 1e7 terms plus
        // the integral bracket for the rest
        for n in [10u64, 100] {
            for p in [2.0, 3.0] {
                let w = realize(&WeightFamily::remainder(p), n, 1e-4).unwrap();
                let rho_impl = w.weights()[0].recip() * (n as f64).powf(-p);
                let big = 10_000_000u64;
                let head = neumaier_sum((n..=big).map(|i| (i as f64).powf(-p)));
                let lo = (head + (big as f64 + 1.0).powf(1.0 - p) / (p - 1.0)) / rho_impl;
                let hi = (head + (big as f64).powf(1.0 - p) / (p - 1.0)) / rho_impl;
                assert!(w.sum() <= hi + 1e-12, "n={n} p={p}");
                assert!(w.sum() + w.tail_sum_bound() >= lo - 1e-12, "n={n} p={p}");
                assert!(lo <= 1.0 + 1e-12 && hi >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn weight_file_parsing() {
        let w = parse_weight_column("# comment\n0.5\n\n  0.25\n1e-1\n").unwrap();
        assert_eq!(w, vec![0.5, 0.25, 0.1]);
        assert!(parse_weight_column("0.5\nabc\n").is_err());
        assert!(parse_weight_column("").is_err());
    }

    proptest! {
        #[test]
        fn permutation_keeps_summaries(mut w in proptest::collection::vec(0.0f64..1.0, 1..40), seed in 0u64..1000) {
            w.push(0.5);
            let base = WeightVector::explicit(w.clone()).unwrap();
            // deterministic shuffle
            let mut perm = w.clone();
            let len = perm.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let shuffled = WeightVector::explicit(perm.clone()).unwrap();
            prop_assert_eq!(base.a_max(), shuffled.a_max());
            prop_assert!((base.sum() - shuffled.sum()).abs() <= 1e-15 * base.sum());
            prop_assert!((base.sum_squares() - shuffled.sum_squares()).abs() <= 1e-15 * base.sum_squares());
            let first = perm.iter().position(|&v| v == shuffled.a_max()).unwrap() as u64 + 1;
            prop_assert_eq!(shuffled.argmax_index(), first);
        }

        #[test]
        fn vector_invariants(w in proptest::collection::vec(0.0f64..10.0, 1..50)) {
            prop_assume!(w.iter().any(|&v| v > 0.0));
            let v = WeightVector::explicit(w).unwrap();
            prop_assert!(v.sum() >= v.a_max());
            prop_assert!(v.sum_squares() <= v.a_max() * v.sum() * (1.0 + 1e-15));
        }
    }
}
