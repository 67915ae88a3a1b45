//! The stretched-exponential (Weibull-type) law `P(X > t) = exp(-kappa t^r)`.
//!
//! Only the asymptotic tail shape matters as `a_max -> 0`; this crate
//! pins the exact law so that every constant in the bounds (envelope
//! prefactor `k = 1`, exponent `B' = kappa`) is sharp at finite `n`.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::special::gamma;

/// Tail scale `kappa > 0` and tail exponent `0 < r < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedExpParams {
    kappa: f64,
    r: f64,
}

/// Envelope `P(X > t) <= k * exp(-b_prime * t^r)` for all `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnvelope {
    pub k: f64,
    pub b_prime: f64,
}

impl TailEnvelope {
    pub fn new(k: f64, b_prime: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite() && b_prime > 0.0 && b_prime.is_finite()) {
            return Err(Error::domain(format!(
                "tail envelope needs k > 0 and B' > 0, got k={k}, B'={b_prime}"
            )));
        }
        Ok(TailEnvelope { k, b_prime })
    }

    /// Envelope value at `t` for tail exponent `r`.
    pub fn bound(&self, t: f64, r: f64) -> f64 {
        self.k * (-self.b_prime * t.max(0.0).powf(r)).exp()
    }
}

impl StretchedExpParams {
    pub fn new(kappa: f64, r: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("tail exponent r must lie in (0, 1), got {r}")));
        }
        Ok(StretchedExpParams { kappa, r })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `P(X > t)`. Negative `t` is rejected.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::domain(format!("tail is defined for t >= 0, got {t}")));
        }
        Ok(self.log_tail(t).exp())
    }

    /// `log P(X > t) = -kappa t^r`; saturates at 0 for `t <= 0`.
    #[inline]
    pub fn log_tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -self.kappa * t.powf(self.r)
        }
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        -(self.log_tail(t)).exp_m1()
    }

    /// `log P(X <= t)`, accurate when the tail is tiny.
    pub fn log_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if t.is_infinite() {
            return 0.0;
        }
        let lt = self.log_tail(t);
        if lt > -std::f64::consts::LN_2 {
            (-lt.exp_m1()).ln()
        } else {
            (-lt.exp()).ln_1p()
        }
    }

    /// Density `kappa r t^(r-1) exp(-kappa t^r)` for `t > 0`.
    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.kappa * self.r * t.powf(self.r - 1.0) * self.log_tail(t).exp()
    }

    /// Inverse tail: the `t` with `P(X > t) = u`, i.e. `((-ln u)/kappa)^(1/r)`.
    #[inline]
    pub fn inverse_tail(&self, u: f64) -> f64 {
        self.from_exponential(-u.ln())
    }

    /// Map a standard exponential variate `e` to `(e / kappa)^(1/r)`.
    #[inline]
    pub fn from_exponential(&self, e: f64) -> f64 {
        (e / self.kappa).powf(1.0 / self.r)
    }

    /// One exact draw by inversion.
    #[inline]
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        self.inverse_tail(stream.open_uniform())
    }

    /// `E[X] = kappa^(-1/r) Gamma(1 + 1/r)`.
    pub fn mean(&self) -> f64 {
        self.kappa.powf(-1.0 / self.r) * gamma(1.0 + 1.0 / self.r)
    }

    /// `Var[X] = kappa^(-2/r) Gamma(1 + 2/r) - E[X]^2`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.kappa.powf(-2.0 / self.r) * gamma(1.0 + 2.0 / self.r) - m * m
    }

    /// For the exact law the envelope is the tail itself: `k = 1`, `B' = kappa`.
    pub fn tail_envelope(&self) -> TailEnvelope {
        TailEnvelope {
            k: 1.0,
            b_prime: self.kappa,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_to_infinity, QuadOptions};
    use proptest::prelude::*;

    fn p(kappa: f64, r: f64) -> StretchedExpParams {
        StretchedExpParams::new(kappa, r).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(StretchedExpParams::new(0.0, 0.5).is_err());
        assert!(StretchedExpParams::new(1.0, 1.0).is_err());
        assert!(StretchedExpParams::new(1.0, 0.0).is_err());
        assert!(StretchedExpParams::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn tail_examples() {
        assert_eq!(p(1.0, 0.5).tail(0.0).unwrap(), 1.0);
        assert!((p(1.0, 0.5).tail(4.0).unwrap() - (-2f64).exp()).abs() < 1e-16);
        assert!((p(1.0, 0.5).tail(4.0).unwrap() - 0.135_335).abs() < 1e-6);
        assert!((p(2.0, 0.5).tail(1.0).unwrap() - (-2f64).exp()).abs() < 1e-16);
        assert!(matches!(p(1.0, 0.5).tail(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn inversion_examples() {
        let d = p(1.0, 0.5);
        assert!((d.inverse_tail((-1f64).exp()) - 1.0).abs() < 1e-15);
        assert!((d.inverse_tail((-2f64).exp()) - 4.0).abs() < 1e-14);
        let d = p(3.0, 0.7);
        assert!((d.inverse_tail((-3f64).exp()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments_examples() {
        let d = p(1.0, 0.5);
        assert!((d.mean() - 2.0).abs() < 1e-14);
        assert!((d.variance() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(p(1.0, 0.5).tail_envelope(), TailEnvelope { k: 1.0, b_prime: 1.0 });
        assert_eq!(p(3.0, 0.7).tail_envelope(), TailEnvelope { k: 1.0, b_prime: 3.0 });
        for params in [p(1.0, 0.5), p(3.0, 0.7)] {
            let env = params.tail_envelope();
            let mut t = 0.01;
            while t <= 100.0 {
                assert!(params.tail(t).unwrap() <= env.bound(t, params.r()));
                t *= 1.1;
            }
        }
    }

    #[test]
    fn moments_agree_with_quadrature() {
        for params in [p(1.0, 0.5), p(0.7, 0.3), p(2.5, 0.8)] {
            let opts = QuadOptions::rel(1e-12);
            // integrate in u = kappa t^r so the integrands are smooth
            let (kappa, r) = (params.kappa(), params.r());
            let jac = |u: f64| (1.0 / r) * kappa.powf(-1.0 / r) * u.powf(1.0 / r - 1.0);
            let t_of = |u: f64| (u / kappa).powf(1.0 / r);
            let m = integrate_to_infinity(|u| (-u).exp() * jac(u), 0.0, opts).unwrap().value;
            let m2 = integrate_to_infinity(|u| 2.0 * t_of(u) * (-u).exp() * jac(u), 0.0, opts)
                .unwrap()
                .value;
            assert!(((m - params.mean()) / m).abs() < 1e-9, "{params:?}");
            let v = m2 - m * m;
            assert!(((v - params.variance()) / v).abs() < 1e-9, "{params:?}");
        }
    }

    #[test]
    fn log_cdf_is_stable() {
        let d = p(1.0, 0.5);
        let t = 1e6;
        assert!((d.log_cdf(t) + (-1000f64).exp()).abs() < 1e-300);
        assert!((d.log_cdf(1e-12) - d.cdf(1e-12).ln()).abs() < 1e-9);
        assert_eq!(d.log_cdf(0.0), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn sample_tail_round_trip(u in 1e-300f64..1.0, kappa in 0.1f64..5.0, r in 0.05f64..0.95) {
            let d = p(kappa, r);
            let t = d.inverse_tail(u);
            let back = d.tail(t).unwrap();
            prop_assert!(((back - u) / u).abs() < 1e-12);
        }

        #[test]
        fn tail_is_monotone(a in 0.0f64..1e3, b in 0.0f64..1e3) {
            let d = p(1.3, 0.4);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.tail(lo).unwrap() >= d.tail(hi).unwrap());
        }
    }
}
