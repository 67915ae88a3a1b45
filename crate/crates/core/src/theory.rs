//! Rate function, sup-probabilities and finite-n certified bounds for
//! `P(sum_i a_i X_i > x)`.
//!
//! All bounds are computed for the truncated row held by a [`WeightVector`]
//! and in threshold-normalized units: weights are divided by `x` and the
//! threshold becomes 1. Log-probabilities do not depend on that choice.

use crate::dist::{StretchedExpParams, TailEnvelope};
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::{log_add_exp, log_sum_exp, neumaier_sum};
use crate::weights::WeightVector;

/// Above this many distinct weight values the truncated-MGF factors are
/// bounded on geometric bins instead of value by value.
const EXACT_GROUP_LIMIT: usize = 4096;
/// Width of a geometric bin, `b_hi / b_lo`.
const BIN_RATIO: f64 = 1.001;
/// Largest log-scale used in the direct (unscaled) truncated-MGF integrand.
const DIRECT_EXPONENT_LIMIT: f64 = 600.0;
/// Upper quantile level for the truncation bracket.
const TRUNCATION_QUANTILE_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// 33 points `lambda* 2^(j/4)`, `j = -16..=16`, around the proof's
    /// `lambda* = (kappa - 2 eps) A^(r-1) / a_max^r`.
    Default,
    /// Explicit values of `lambda` in the caller's (unnormalized) units.
    Explicit(Vec<f64>),
}

/// Tuning knobs for the certified bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig {
    /// The proof's epsilon, `0 < epsilon < kappa / 2`.
    pub epsilon: f64,
    pub lambda_grid: LambdaGrid,
    pub quad_rel_tol: f64,
    pub envelope: TailEnvelope,
}

impl BoundConfig {
    /// Defaults: `epsilon = 0.1`, default grid, `quad_rel_tol = 1e-9`, and the
    /// exact envelope of `params`.
    pub fn for_params(params: &StretchedExpParams) -> Self {
        BoundConfig {
            epsilon: 0.1,
            lambda_grid: LambdaGrid::Default,
            quad_rel_tol: 1e-9,
            envelope: params.tail_envelope(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self, params: &StretchedExpParams) -> Result<()> {
        let kappa = params.kappa();
        if !(self.epsilon > 0.0 && self.epsilon < kappa / 2.0) {
            return Err(Error::domain(format!(
                "epsilon must lie in (0, kappa/2) = (0, {}), got {}",
                kappa / 2.0,
                self.epsilon
            )));
        }
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol < 1.0) {
            return Err(Error::domain("quad_rel_tol must lie in (0, 1)"));
        }
        if let LambdaGrid::Explicit(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::domain("lambda grid must be a non-empty list of positive reals"));
            }
        }
        Ok(())
    }
}

/// Breakdown of a bound into its pieces (natural logs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundComponents {
    /// `log P(sup_i a_i X_i > A)`, exact.
    pub log_sup: Option<f64>,
    /// Best truncated exponential-Chebyshev term over the lambda grid.
    pub log_chernoff: Option<f64>,
    /// `1 - Q` from the Chebyshev step of the lower bound (0 when vacuous).
    pub chebyshev_factor: Option<f64>,
}

/// Upper bound on `P(S > x)` for the full (untruncated) sum.
///
/// Uses `P(S > x) <= P(S_T > x - eta) + P(S - S_T > eta)` with
/// `eta = tail_sum_bound * q`, `q` the `1 - 1e-12` quantile of `X`; the second
/// term is bounded by Markov's inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBracket {
    pub eta: f64,
    /// Certified upper bound for the truncated sum at `x - eta`; `0` (log 1)
    /// when `x - eta` leaves the large-deviation regime.
    pub log_upper_shifted: f64,
    /// `E[omitted part] / eta`.
    pub omitted_exceedance_bound: f64,
    pub log_upper_full: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Certified lower bound on `log P(S_T > x)`, possibly `-inf`.
    pub log_lower: f64,
    /// Certified upper bound on `log P(S_T > x)`.
    pub log_upper: f64,
    /// Minimizing `lambda` (caller's units) when a Chernoff term was used.
    pub lambda_used: Option<f64>,
    /// `A = x - sum * E[X]` (caller's units) when used.
    pub a_used: Option<f64>,
    pub components: BoundComponents,
    pub truncation: Option<TruncationBracket>,
}

/// `I(x) = kappa (x - D E[X])^r`.
pub fn rate_function(x: f64, params: &StretchedExpParams, d: f64) -> Result<f64> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::domain(format!(
            "row-sum limit D must be finite and >= 0, got {d}"
        )));
    }
    let typical = d * params.mean();
    if !(x > typical) {
        return Err(Error::domain(format!(
            "not in large-deviation regime: x = {x} <= D * E[X] = {typical}"
        )));
    }
    Ok(params.kappa() * (x - typical).powf(params.r()))
}

/// First-order prediction `log P ~ -I(x) / a_max^r`.
pub fn predicted_log_prob(wv: &WeightVector, x: f64, params: &StretchedExpParams, d: f64) -> Result<f64> {
    Ok(-rate_function(x, params, d)? / wv.a_max().powf(params.r()))
}

fn check_threshold(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("threshold must be positive and finite, got {x}")))
    }
}

/// `sum_i log P(a_i X_i <= x)` over positive weights.
fn log_sup_complement(weights: &[f64], x: f64, params: &StretchedExpParams) -> f64 {
    neumaier_sum(weights.iter().filter(|w| **w > 0.0).map(|w| params.log_cdf(x / w)))
}

fn log_one_minus_exp(s: f64) -> f64 {
    // log(1 - e^s) for s <= 0
    if s > -std::f64::consts::LN_2 {
        (-s.exp_m1()).ln()
    } else {
        (-s.exp()).ln_1p()
    }
}

/// `log P(sup_i a_i X_i > x)`, exact over the truncated support.
pub fn log_sup_exceedance_prob(wv: &WeightVector, x: f64, params: &StretchedExpParams) -> Result<f64> {
    check_threshold(x)?;
    Ok(log_one_minus_exp(log_sup_complement(wv.weights(), x, params)))
}

/// `P(sup_i a_i X_i > x) = 1 - prod_i F(x / a_i)`.
pub fn sup_exceedance_prob(wv: &WeightVector, x: f64, params: &StretchedExpParams) -> Result<f64> {
    check_threshold(x)?;
    let s = log_sup_complement(wv.weights(), x, params);
    Ok((-s.exp_m1()).clamp(0.0, 1.0))
}

/// `log P(X > x / a_max)`: the single largest term.
pub fn sup_lower_bound(wv: &WeightVector, x: f64, params: &StretchedExpParams) -> Result<f64> {
    check_threshold(x)?;
    Ok(params.log_tail(x / wv.a_max()))
}

/// Union bound `log min(1, sum_i P(X > x / a_i))`.
pub fn sup_union_upper_bound(wv: &WeightVector, x: f64, params: &StretchedExpParams) -> Result<f64> {
    check_threshold(x)?;
    let terms: Vec<f64> = wv
        .weights()
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| params.log_tail(x / w))
        .collect();
    Ok(log_sum_exp(&terms).min(0.0))
}

/// Upper bound `k / (1 - b/B') * exp(-(B' - b) a^r)` on
/// `E[(exp(b X^r) - 1) 1{X > a}]` for any `X` under the envelope.
pub fn elementary_bound(a: f64, b: f64, envelope: &TailEnvelope, r: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("a must be positive, got {a}")));
    }
    if !(b >= 0.0) {
        return Err(Error::domain(format!("b must be non-negative, got {b}")));
    }
    if b >= envelope.b_prime {
        return Err(Error::domain(format!(
            "bound diverges for b >= B' ({b} >= {})",
            envelope.b_prime
        )));
    }
    Ok(envelope.k / (1.0 - b / envelope.b_prime) * (-(envelope.b_prime - b) * a.powf(r)).exp())
}

/// Weights (threshold-normalized) sharing one truncated-MGF factor bound:
/// `mult` copies of `E[exp(lambda hi X) 1{X <= A / lo}]`.
#[derive(Debug, Clone, Copy)]
struct FactorGroup {
    hi: f64,
    lo: f64,
    mult: f64,
}

fn factor_groups(weights: &[f64], scale: f64) -> Vec<FactorGroup> {
    let mut runs: Vec<FactorGroup> = Vec::new();
    for &w in weights.iter().filter(|w| **w > 0.0) {
        let b = w / scale;
        match runs.last_mut() {
            Some(g) if g.hi == b => g.mult += 1.0,
            _ => runs.push(FactorGroup {
                hi: b,
                lo: b,
                mult: 1.0,
            }),
        }
    }
    if runs.len() <= EXACT_GROUP_LIMIT {
        return runs;
    }
    let mut values: Vec<f64> = weights.iter().filter(|w| **w > 0.0).map(|w| w / scale).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let mut bins: Vec<FactorGroup> = Vec::new();
    for b in values {
        match bins.last_mut() {
            Some(g) if b * BIN_RATIO >= g.hi => {
                g.lo = b;
                g.mult += 1.0;
            }
            _ => bins.push(FactorGroup {
                hi: b,
                lo: b,
                mult: 1.0,
            }),
        }
    }
    bins
}

/// Upper estimate of `log E[exp(c X) 1{X <= limit}]`, quadrature error
/// added on top of the estimate.
fn log_truncated_mgf(c: f64, limit: f64, params: &StretchedExpParams, rel_tol: f64) -> Result<f64> {
    let (kappa, r) = (params.kappa(), params.r());
    // u = kappa t^r turns dF(t) into exp(-u) du
    let u_end = kappa * limit.powf(r);
    let inv_r = 1.0 / r;
    let g = move |u: f64| c * (u / kappa).powf(inv_r);
    let g_end = c * limit;
    let h_max = (g_end - u_end).max(0.0);
    let mut breaks = vec![0.0];
    let mut b = 1.0;
    while b < u_end {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(u_end);
    let opts = QuadOptions {
        rel_tol,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    if h_max < DIRECT_EXPONENT_LIMIT {
        // E[(e^{cX} - 1) 1{X <= limit}] directly, then add P(X <= limit)
        let integrand = |u: f64| {
            let gu = g(u);
            if gu < 1.0 {
                gu.exp_m1() * (-u).exp()
            } else {
                (gu - u).exp() - (-u).exp()
            }
        };
        let q = integrate_with_breaks(integrand, &breaks, opts)?;
        let j = q.value + q.abs_error.max(rel_tol * q.value.abs());
        Ok((j - (-u_end).exp()).ln_1p())
    } else {
        let q = integrate_with_breaks(|u| (g(u) - u - h_max).exp(), &breaks, opts)?;
        let v = q.value + q.abs_error.max(rel_tol * q.value.abs());
        Ok(h_max + v.ln())
    }
}

/// `log [exp(-lambda) prod_g E[exp(lambda hi X) 1{X <= A/lo}]^mult]`.
fn log_chernoff_term(
    lambda: f64,
    groups: &[FactorGroup],
    a: f64,
    params: &StretchedExpParams,
    rel_tol: f64,
) -> Result<f64> {
    let mut logs = Vec::with_capacity(groups.len());
    for g in groups {
        logs.push(g.mult * log_truncated_mgf(lambda * g.hi, a / g.lo, params, rel_tol)?);
    }
    Ok(-lambda + neumaier_sum(logs))
}

/// Certified upper bound on `log P(sum_i a_i X_i > x)` for the truncated row.
///
/// Splits on `sup_i a_i X_i > A` with `A = x - sum * E[X]`: the sup part is
/// computed exactly, the rest by the truncated exponential-Chebyshev
/// inequality minimized over the lambda grid.
pub fn certified_upper_bound(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    config: &BoundConfig,
) -> Result<BoundReport> {
    let mut report = upper_bound_truncated(wv, x, params, config)?;
    if wv.tail_sum_bound() > 0.0 {
        let q = params.inverse_tail(TRUNCATION_QUANTILE_TAIL);
        let eta = wv.tail_sum_bound() * q;
        let shifted = x - eta;
        let log_upper_shifted = if shifted > wv.sum() * params.mean() {
            upper_bound_truncated(wv, shifted, params, config)?.log_upper
        } else {
            0.0
        };
        let omitted = (wv.tail_sum_bound() * params.mean() / eta).min(1.0);
        report.truncation = Some(TruncationBracket {
            eta,
            log_upper_shifted,
            omitted_exceedance_bound: omitted,
            log_upper_full: log_add_exp(log_upper_shifted, omitted.ln()).min(0.0),
        });
    }
    Ok(report)
}

fn upper_bound_truncated(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    config: &BoundConfig,
) -> Result<BoundReport> {
    check_threshold(x)?;
    config.validate(params)?;
    let (kappa, r) = (params.kappa(), params.r());
    let mean = params.mean();
    let b_max = wv.a_max() / x;
    let a = 1.0 - (wv.sum() / x) * mean;
    if !(a > 0.0) {
        return Err(Error::domain(format!(
            "not in large-deviation regime: x = {x} <= sum * E[X] = {}",
            wv.sum() * mean
        )));
    }
    let normalized: Vec<f64> = wv.weights().iter().map(|w| w / x).collect();
    let log_sup = log_one_minus_exp(log_sup_complement(&normalized, a, params));

    let groups = factor_groups(wv.weights(), x);
    let lambda_star = (kappa - 2.0 * config.epsilon) * a.powf(r - 1.0) / b_max.powf(r);
    let grid: Vec<f64> = match &config.lambda_grid {
        LambdaGrid::Default => (-16..=16).map(|j| lambda_star * 2f64.powf(j as f64 / 4.0)).collect(),
        LambdaGrid::Explicit(values) => values.iter().map(|l| l * x).collect(),
    };
    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in &grid {
        let v = log_chernoff_term(lambda, &groups, a, params, config.quad_rel_tol)?;
        if v < best.0 {
            best = (v, lambda);
        }
    }
    let log_upper = log_add_exp(log_sup, best.0).min(0.0);
    Ok(BoundReport {
        log_lower: params.log_tail(1.0 / b_max),
        log_upper,
        lambda_used: Some(best.1 / x),
        a_used: Some(a * x),
        components: BoundComponents {
            log_sup: Some(log_sup),
            log_chernoff: Some(best.0),
            chebyshev_factor: None,
        },
        truncation: None,
    })
}

/// Certified lower bound from the largest term plus a Chebyshev estimate on
/// the rest of the row.
///
/// With `S_- = sum - a_max` and `Q = Var[X] (sum_sq - a_max^2) / (eps E[X] S_-)^2`:
/// `log_lower = log P(X > (x - S_- E[X] (1 - eps)) / a_max) + log(1 - Q)`,
/// and `-inf` when `Q >= 1`.
pub fn certified_lower_bound(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    epsilon: f64,
) -> Result<BoundReport> {
    check_threshold(x)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mean = params.mean();
    let s_minus = (wv.sum() - wv.a_max()).max(0.0);
    let rest_sq = (wv.sum_squares() - wv.a_max() * wv.a_max()).max(0.0);
    let q = if s_minus > 0.0 {
        params.variance() * rest_sq / (epsilon * mean * s_minus).powi(2)
    } else {
        0.0
    };
    let first = params.log_tail((x - s_minus * mean * (1.0 - epsilon)) / wv.a_max());
    let factor = (1.0 - q).max(0.0);
    let log_lower = if q >= 1.0 {
        f64::NEG_INFINITY
    } else {
        first + (-q).ln_1p()
    };
    Ok(BoundReport {
        log_lower,
        log_upper: 0.0,
        lambda_used: None,
        a_used: None,
        components: BoundComponents {
            log_sup: None,
            log_chernoff: None,
            chebyshev_factor: Some(factor),
        },
        truncation: None,
    })
}

/// Default lower-bound epsilon schedule `a_max^(r/2)`, capped at 1/2 so it
/// stays inside (0, 1) for rows with `a_max` near one.
pub fn lower_epsilon_schedule(wv: &WeightVector, params: &StretchedExpParams) -> f64 {
    wv.a_max().powf(params.r() / 2.0).min(0.5)
}

/// Which steps of the closed-form chain hold at this `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityConditions {
    /// `P(X > t) <= k exp(-(kappa - eps) t^r)` for the exact law (`k >= 1`).
    pub envelope: bool,
    /// `(e^eps - 1) / eps <= 1 + eps`.
    pub linearization: bool,
    /// `e^-u <= u^(-2/r)` at `u = eps (kappa - eps) (A / b_i)^r`, all `i`.
    pub sup_power: bool,
    /// `e^-v <= v^(-1/r)` at `v = K (b_max^r / b_i)^r`, all `i`.
    pub chernoff_power: bool,
    /// `1 - (1 + eps) E[X] sum > 0`.
    pub regime: bool,
}

impl ValidityConditions {
    pub fn all(&self) -> bool {
        self.envelope && self.linearization && self.sup_power && self.chernoff_power && self.regime
    }
}

/// The closed-form upper bound read off the proof chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBound {
    /// Bound on `log P(S_T > x)`; a true bound only when `certified`.
    pub log_value: f64,
    /// `a_max^r * log_value`.
    pub normalized: f64,
    /// The chain's `n -> infinity` value of `a_max^r log P` at this epsilon,
    /// with the realized row sum standing in for `D`.
    pub limit_rate: f64,
    pub lambda: f64,
    pub conditions: ValidityConditions,
    /// `false` means "asymptotic only, not certified at this n".
    pub certified: bool,
}

/// Evaluate the proof's closed-form upper bound with constants
/// `B = kappa - 2 eps`, `B' = kappa - eps`,
/// `K = eps^(1+r) B^(-r) A^(r(1-r)) / 2`, `c_eps = k (kappa - eps) / eps`.
pub fn asymptotic_closed_form_bound(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    config: &BoundConfig,
) -> Result<AsymptoticBound> {
    check_threshold(x)?;
    config.validate(params)?;
    let (kappa, r) = (params.kappa(), params.r());
    let eps = config.epsilon;
    let k = config.envelope.k;
    let mean = params.mean();
    let b_max = wv.a_max() / x;
    let s = wv.sum() / x;
    let a = 1.0 - s * mean;
    if !(a > 0.0) {
        return Err(Error::domain(format!(
            "not in large-deviation regime: x = {x} <= sum * E[X] = {}",
            wv.sum() * mean
        )));
    }
    let big_b = kappa - 2.0 * eps;
    let b_prime = kappa - eps;
    let lambda = big_b * a.powf(r - 1.0) / b_max.powf(r);
    let two_k = eps.powf(1.0 + r) * big_b.powf(-r) * a.powf(r * (1.0 - r));
    let kk = 0.5 * two_k;
    let c_eps = k * b_prime / eps;

    let log_sup = k.ln() - (1.0 - eps) * b_prime * (a / b_max).powf(r) - (2.0 / r) * (eps * b_prime).ln()
        + (b_max * s / (a * a)).ln();
    let drift = 1.0 - (1.0 + eps) * mean * s;
    let remainder = c_eps * kk.powf(-1.0 / r) * (-kk * b_max.powf(-(1.0 - r) * r)).exp() * b_max.powf(-r) * s;
    let log_chernoff = -lambda * drift + remainder;
    let log_value = log_add_exp(log_sup, log_chernoff);

    let mut sup_power = true;
    let mut chernoff_power = true;
    for g in factor_groups(wv.weights(), x) {
        for b in [g.hi, g.lo] {
            let u = eps * b_prime * (a / b).powf(r);
            sup_power &= u >= (2.0 / r) * u.ln();
            let v = kk * (b_max.powf(r) / b).powf(r);
            chernoff_power &= v >= (1.0 / r) * v.ln();
        }
    }
    let conditions = ValidityConditions {
        envelope: k >= 1.0 && config.envelope.b_prime <= kappa,
        linearization: eps.exp_m1() / eps <= 1.0 + eps,
        sup_power,
        chernoff_power,
        regime: drift > 0.0,
    };
    let limit_rate = x.powf(r) * (-(1.0 - eps) * b_prime * a.powf(r)).max(-big_b * a.powf(r - 1.0) * drift);
    Ok(AsymptoticBound {
        log_value,
        normalized: wv.a_max().powf(r) * log_value,
        limit_rate,
        lambda: lambda / x,
        conditions,
        certified: conditions.all(),
    })
}
