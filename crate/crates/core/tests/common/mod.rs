//! Reference computations that share no code with the crate.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Weibull};

/// `exp(-kappa t^r)`, written out directly.
pub fn tail(kappa: f64, r: f64, t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else {
        (-kappa * t.powf(r)).exp()
    }
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `P(a1 X1 + a2 X2 > x)` for i.i.d. `X` with tail `exp(-kappa t^r)`.
///
/// Conditions on `X1` and writes its law through `u = kappa X1^r`, which is
/// standard exponential:
/// `P(a1 X1 > x) + int_0^{kappa (x/a1)^r} e^{-u} P(X2 > (x - a1 t(u)) / a2) du`.
pub fn two_term_exceedance(a1: f64, a2: f64, x: f64, kappa: f64, r: f64) -> f64 {
    let u_max = kappa * (x / a1).powf(r);
    let f = |u: f64| {
        let t = (u / kappa).powf(1.0 / r);
        (-u).exp() * tail(kappa, r, (x - a1 * t) / a2)
    };
    // split where the integrand changes fastest
    let cuts = [0.0, 0.25 * u_max, 0.5 * u_max, 0.9 * u_max, 0.99 * u_max, u_max];
    let body: f64 = cuts.windows(2).map(|w| simpson(&f, w[0], w[1], 1e-14)).sum();
    tail(kappa, r, x / a1) + body
}

/// `E[(exp(b X^r) - 1) 1{X > a}]` by quadrature in `u = kappa X^r`, truncated
/// where `e^{-(1 - b/kappa) u}` falls below `1e-30` of its start.
pub fn truncated_exp_moment(a: f64, b: f64, kappa: f64, r: f64) -> f64 {
    let lo = kappa * a.powf(r);
    let decay = 1.0 - b / kappa;
    let hi = lo + 70.0 / decay;
    let f = |u: f64| ((b / kappa * u).exp() - 1.0) * (-u).exp();
    let mut total = 0.0;
    let pieces = 64;
    for k in 0..pieces {
        let s = lo + (hi - lo) * k as f64 / pieces as f64;
        let e = lo + (hi - lo) * (k + 1) as f64 / pieces as f64;
        total += simpson(&f, s, e, 1e-16);
    }
    total
}

/// Independent simulation of `P(mean of n i.i.d. X > x)` through
/// `rand_distr::Weibull` (scale `kappa^(-1/r)`, shape `r`) on a different
/// generator. Returns `(p_hat, stderr)`.
pub fn weibull_mean_exceedance(n: usize, x: f64, kappa: f64, r: f64, samples: u64, seed: u64) -> (f64, f64) {
    let law = Weibull::new(kappa.powf(-1.0 / r), r).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let threshold = x * n as f64;
    let mut hits = 0u64;
    for _ in 0..samples {
        let s: f64 = (0..n).map(|_| law.sample(&mut rng)).sum();
        if s > threshold {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}
