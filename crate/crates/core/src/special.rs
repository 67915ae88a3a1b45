//! Special functions and compensated summation.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;

#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos series `A_g(z)` evaluated at `z` (already shifted by one).
fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    acc
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

/// Gamma function, Lanczos approximation (g = 7, 9 terms).
///
/// Small positive integers are returned exactly from the factorial table.
pub fn gamma(x: f64) -> f64 {
    if x == x.trunc() && (1.0..=171.0).contains(&x) {
        let mut f = 1.0_f64;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
    }
}

/// Neumaier-compensated sum in iteration order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log(exp(a) + exp(b))` without overflow; `-inf` inputs are allowed.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let lo = a.min(b);
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum_i exp(v_i))` in iteration order.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + neumaier_sum(values.iter().map(|v| (v - hi).exp())).ln()
}

/// Hurwitz zeta `sum_{i >= n} i^(-p)` for `p > 1`, `n >= 1`.
///
/// Direct summation up to a cutoff followed by an Euler-Maclaurin tail with
/// four Bernoulli corrections; relative error is near machine precision.
pub fn hurwitz_zeta(p: f64, n: u64) -> f64 {
    assert!(p > 1.0 && n >= 1, "hurwitz_zeta needs p > 1 and n >= 1");
    let cutoff = n.max(128);
    let head = neumaier_sum((n..cutoff).map(|i| (i as f64).powf(-p)));
    let big = cutoff as f64;
    let f = big.powf(-p);
    let integral = big.powf(1.0 - p) / (p - 1.0);
    let c1 = p * f / (12.0 * big);
    let c2 = p * (p + 1.0) * (p + 2.0) * f / (720.0 * big.powi(3));
    let c3 = p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * f / (30240.0 * big.powi(5));
    let c4 =
        p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * (p + 5.0) * (p + 6.0) * f / (1_209_600.0 * big.powi(7));
    head + (integral + 0.5 * f + c1 - c2 + c3 - c4)
}
