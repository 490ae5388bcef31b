//! Digamma, trigamma and the Airy function on the positive axis.

/// Below this argument the digamma family is shifted upward by recurrence.
const SHIFT_THRESHOLD: f64 = 10.0;

/// Digamma `psi(x) = Gamma'(x) / Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < SHIFT_THRESHOLD {
        shift += 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Bernoulli series through x^-14.
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0
                        - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    x.ln() - 0.5 / x - series - shift
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < SHIFT_THRESHOLD {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0
                    - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    shift + (1.0 + 0.5 / x + series) / x
}

/// `Ai(x)` and `Ai'(x)` for `x >= 5` from the asymptotic expansion, summed
/// until the terms stop decreasing.
pub fn airy_ai_large(x: f64) -> (f64, f64) {
    assert!(x >= 5.0, "asymptotic Airy expansion needs x >= 5");
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let mut u = 1.0;
    let mut sum_u = 1.0;
    let mut sum_v = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        let t = u / zeta.powi(k);
        if t >= last || t < 1e-18 {
            break;
        }
        last = t;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum_u += sign * t;
        sum_v += sign * v / zeta.powi(k);
    }
    let e = (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt());
    let q = x.powf(0.25);
    (e / q * sum_u, -e * q * sum_v)
}

/// Leading-order tail `exp(-2/3 x^{3/2}) / (2 sqrt(pi) x^{1/4})` of the
/// Hastings-McLeod solution.
pub fn hastings_mcleod_leading(x: f64) -> f64 {
    (-2.0 / 3.0 * x.powf(1.5)).exp() / (2.0 * std::f64::consts::PI.sqrt() * x.powf(0.25))
}
