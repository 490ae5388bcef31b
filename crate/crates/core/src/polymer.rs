//! Point-to-point polymer partition functions in log domain, the
//! Moriarty-O'Connell high-temperature regime and its closed-form free energy.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{generate_field, DistSpec, EnvField};
use crate::error::{Error, Result};
use crate::lattice::{check_inside, log_add_exp, log_path_count, sweep_to, LogSumExp};
use crate::lpp::{planar_sweep_value, Endpoint};
use crate::special::{digamma, trigamma};

/// A positive weight stored as its natural logarithm; `-inf` is the zero weight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_log(log_value: f64) -> Self {
        LogWeight(log_value)
    }

    pub fn log_value(self) -> f64 {
        self.0
    }

    /// Sum of the underlying weights.
    pub fn add(self, other: LogWeight) -> LogWeight {
        LogWeight(log_add_exp(self.0, other.0))
    }

    /// Product of the underlying weights.
    pub fn mul(self, other: LogWeight) -> LogWeight {
        LogWeight(self.0 + other.0)
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// The triple `(a, beta, gamma)` of the near-axis scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScalingRegime {
    pub fn new(a: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain {
                what: format!("a = {a}"),
                bound: "0 < a < 1".into(),
            });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                what: format!("beta = {beta}"),
                bound: "beta > 0".into(),
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain {
                what: format!("gamma = {gamma}"),
                bound: "gamma > 0".into(),
            });
        }
        Ok(ScalingRegime { a, beta, gamma })
    }

    /// `beta * N^{(a-1)/2}`.
    pub fn beta_n(&self, n: f64) -> f64 {
        self.beta * n.powf(0.5 * (self.a - 1.0))
    }

    /// `gamma * N^{(1-a)/2}`.
    pub fn h_n(&self, n: f64) -> f64 {
        self.gamma * n.powf(0.5 * (1.0 - self.a))
    }

    /// `N^{(1+a)/2}`, the order of the near-axis energies.
    pub fn energy_scale(&self, n: f64) -> f64 {
        n.powf(0.5 * (1.0 + self.a))
    }

    /// `floor(x * N^a)`.
    pub fn transverse(&self, n: usize, x: f64) -> usize {
        (x * (n as f64).powf(self.a)).floor() as usize
    }
}

fn check_field(field: &EnvField, end: &Endpoint, beta: f64) -> Result<()> {
    check_inside(field, &end.0)?;
    if field.contains_nan() {
        return Err(Error::Data("environment contains NaN".into()));
    }
    if !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite, got {beta}")));
    }
    Ok(())
}

/// Planar `log Z_beta(N, M)`; normalized divides by the number of paths.
pub fn log_partition(field: &EnvField, end: &Endpoint, beta: f64, normalized: bool) -> Result<LogWeight> {
    if field.ndim() != 2 || end.0.len() != 2 {
        return Err(Error::InvalidShape(
            "log_partition works on planar fields; use log_partition_d".into(),
        ));
    }
    check_field(field, end, beta)?;
    let raw = planar_sweep_value(field, end, LogSumExp { beta })?;
    finish(raw, end, normalized)
}

/// `log Z_beta(N, x)` in `d + 1` dimensions.
pub fn log_partition_d(field: &EnvField, end: &Endpoint, beta: f64, normalized: bool) -> Result<LogWeight> {
    if end.0.len() < 2 {
        return Err(Error::invalid("log_partition_d needs at least two coordinates"));
    }
    check_field(field, end, beta)?;
    let raw = sweep_to(field, &end.0, LogSumExp { beta })?;
    finish(raw, end, normalized)
}

fn finish(raw: f64, end: &Endpoint, normalized: bool) -> Result<LogWeight> {
    if raw.is_nan() {
        return Err(Error::Numeric("log partition function evaluated to NaN".into()));
    }
    let value = if normalized { raw - log_path_count(&end.0) } else { raw };
    Ok(LogWeight(value))
}

/// Stationary point `m*` of `m -> -beta^2 m + psi(m)`, i.e. `psi'(m*) = beta^2`.
pub fn mo_stationary_point(beta: f64) -> Result<f64> {
    let target = beta * beta;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain {
            what: format!("beta = {beta}"),
            bound: "beta finite and nonzero".into(),
        });
    }
    // trigamma decreases from +inf (m -> 0) to 0 (m -> inf); bisect in log m.
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    if trigamma(lo.exp()) < target || trigamma(hi.exp()) > target {
        return Err(Error::Numeric(format!("no bracket for trigamma(m) = {target}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if trigamma(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let m = (0.5 * (lo + hi)).exp();
    let rel = (trigamma(m) / target - 1.0).abs();
    if rel > 1e-9 {
        return Err(Error::Numeric(format!(
            "bisection for m* stalled at relative residual {rel:e}"
        )));
    }
    Ok(m)
}

/// Free energy `f(beta)` of the semi-discrete Brownian polymer, taken over the
/// unnormalized (Lebesgue-volume) partition function:
/// `f(beta) = beta^2 m* - psi(m*) - 2 log|beta|`, and `f(0) = 0`.
pub fn mo_free_energy_exact(beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let m = mo_stationary_point(beta)?;
    Ok(beta * beta * m - digamma(m) - 2.0 * beta.abs().ln())
}

/// Limit of `(1/N) log Z(N, N)` for the path-averaged (normalized) partition
/// function. The path volume `N^N / N!` contributes exactly 1 per unit length.
pub fn mo_free_energy_normalized(beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    Ok(mo_free_energy_exact(beta)? - 1.0)
}

/// `log Z_{beta_{n,a}}(n, x) / (beta_{n,a} n^{(1+a)/2})` on a field, the
/// estimator of the Moriarty-O'Connell regime for an arbitrary transverse endpoint.
pub fn mo_estimate_on_field(field: &EnvField, regime: &ScalingRegime, n: usize, transverse: &[usize]) -> Result<f64> {
    let mut coords = Vec::with_capacity(transverse.len() + 1);
    coords.push(n);
    coords.extend_from_slice(transverse);
    let end = Endpoint::new(coords)?;
    let nf = n as f64;
    let beta_n = regime.beta_n(nf);
    let lz = if transverse.len() == 1 {
        log_partition(field, &end, beta_n, true)?
    } else {
        log_partition_d(field, &end, beta_n, true)?
    };
    Ok(lz.log_value() / (beta_n * regime.energy_scale(nf)))
}

/// Fresh-field estimator at endpoint `(n, floor(alpha_i n^a))`.
pub fn mo_regime_estimate(regime: &ScalingRegime, n: usize, alpha: &[f64], dist: DistSpec, seed: u64) -> Result<f64> {
    if alpha.is_empty() || alpha.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("alpha needs d >= 1 strictly positive entries"));
    }
    let transverse: Vec<usize> = alpha.iter().map(|&x| regime.transverse(n, x)).collect();
    if transverse.iter().any(|&t| t == 0) {
        return Err(Error::invalid(format!(
            "n = {n} is too small: floor(alpha n^a) = {transverse:?}"
        )));
    }
    let mut shape = vec![n + 1];
    shape.extend(transverse.iter().map(|t| t + 1));
    let field = generate_field(dist, &shape, seed)?;
    mo_estimate_on_field(&field, regime, n, &transverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::generate_field;
    use crate::lattice::log_sum_exp;
    use crate::lpp::{enumerate_path_energies, passage_time};
    use proptest::prelude::*;

    #[test]
    fn infinite_temperature_is_zero() {
        let f = generate_field(DistSpec::Gaussian, &[12, 7], 3).unwrap();
        let z = log_partition(&f, &Endpoint::planar(11, 6), 0.0, true).unwrap();
        assert!(z.log_value().abs() < 1e-12);
        let f3 = generate_field(DistSpec::Gaussian, &[6, 3, 4], 3).unwrap();
        let z3 = log_partition_d(&f3, &Endpoint(vec![5, 2, 3]), 0.0, true).unwrap();
        assert!(z3.log_value().abs() < 1e-12);
    }

    #[test]
    fn constant_field() {
        let c = EnvField::constant(&[9, 5], 0.7).unwrap();
        let z = log_partition(&c, &Endpoint::planar(8, 4), 1.3, true).unwrap();
        assert!((z.log_value() - 1.3 * 0.7 * 12.0).abs() < 1e-10);
    }

    #[test]
    fn five_value_example() {
        let f = EnvField::from_values(&[3, 2], vec![100.0, 1.0, -2.0, 3.0, 0.0, 5.0]).unwrap();
        let z = log_partition(&f, &Endpoint::planar(2, 1), 1.0, false).unwrap();
        let oracle = log_sum_exp(&[4.0, 6.0, 8.0]);
        assert!((z.log_value() - oracle).abs() < 1e-13);
    }

    #[test]
    fn three_dimensional_enumeration() {
        for seed in 0..10 {
            let f = generate_field(DistSpec::CenteredUniform, &[4, 3, 2], seed).unwrap();
            let end = Endpoint(vec![3, 2, 1]);
            let beta = 0.7;
            let energies: Vec<f64> = enumerate_path_energies(&f, &end)
                .unwrap()
                .into_iter()
                .map(|h| beta * h)
                .collect();
            let oracle = log_sum_exp(&energies) - (energies.len() as f64).ln();
            let z = log_partition_d(&f, &end, beta, true).unwrap().log_value();
            assert!((z - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn planar_and_d_dimensional_agree() {
        let f = generate_field(DistSpec::Gaussian, &[30, 10], 5).unwrap();
        let end = Endpoint::planar(29, 9);
        let a = log_partition(&f, &end, 0.9, true).unwrap();
        let b = log_partition_d(&f, &end, 0.9, true).unwrap();
        assert_eq!(a.log_value().to_bits(), b.log_value().to_bits());
    }

    #[test]
    fn nan_environment_is_a_data_error() {
        let mut v = vec![0.0; 12];
        v[5] = f64::NAN;
        let f = EnvField::from_values(&[4, 3], v).unwrap();
        assert!(matches!(
            log_partition(&f, &Endpoint::planar(3, 2), 1.0, true),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn zero_temperature_limit() {
        let f = generate_field(DistSpec::Gaussian, &[9, 9], 12).unwrap();
        let end = Endpoint::planar(8, 8);
        let t = passage_time(&f, &end).unwrap();
        let beta = 50.0;
        let z = log_partition(&f, &end, beta, false).unwrap().log_value() / beta;
        assert!(z >= t - 1e-12);
        assert!(z - t <= log_path_count(&[8, 8]) / beta + 1e-12);
    }

    #[test]
    fn derivative_at_infinite_temperature() {
        // d/dbeta log Zbar at 0 = sum over sites of eta * P(uniform path visits site).
        for seed in 0..5 {
            let f = generate_field(DistSpec::Gaussian, &[7, 7], seed).unwrap();
            let (n, m) = (6usize, 6usize);
            let end = Endpoint::planar(n, m);
            let total = log_path_count(&[n, m]).exp();
            let mut expected = 0.0;
            for i in 0..=n {
                for j in 0..=m {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let through = log_path_count(&[i, j]).exp() * log_path_count(&[n - i, m - j]).exp();
                    expected += f.value(&[i, j]).unwrap() * through / total;
                }
            }
            let h = 1e-5;
            let zp = log_partition(&f, &end, h, false).unwrap().log_value();
            let zm = log_partition(&f, &end, -h, false).unwrap().log_value();
            let fd = (zp - zm) / (2.0 * h);
            assert!((fd - expected).abs() <= 1e-6 * expected.abs().max(1e-3), "{fd} vs {expected}");
        }
    }

    #[test]
    fn regime_sequences() {
        let r = ScalingRegime::new(0.5, 2.0, 3.0).unwrap();
        assert!((r.beta_n(1e4) - 2.0 * 1e4f64.powf(-0.25)).abs() < 1e-15);
        assert!((r.h_n(1e4) - 3.0 * 10.0).abs() < 1e-12);
        assert_eq!(r.transverse(10_000, 1.0), 100);
        assert!(ScalingRegime::new(1.0, 1.0, 1.0).is_err());
        assert!(ScalingRegime::new(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn free_energy_is_even_and_zero_at_origin() {
        let a = mo_free_energy_exact(1.3).unwrap();
        let b = mo_free_energy_exact(-1.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(mo_free_energy_exact(0.0).unwrap(), 0.0);
        for &beta in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
            assert!(mo_free_energy_exact(beta).unwrap().is_finite());
        }
    }

    #[test]
    fn free_energy_matches_dense_grid_search() {
        // Oracle: maximize -beta^2 m + psi(m) over a log grid on [1e-4, 1e3] and
        // polish with golden section, independently of the trigamma bisection.
        let beta: f64 = 1.0;
        let g = |m: f64| -beta * beta * m + digamma(m);
        let steps = 200_000;
        let (lo, hi) = (1e-4f64.ln(), 1e3f64.ln());
        let mut best = (f64::NEG_INFINITY, 0usize);
        for k in 0..=steps {
            let m = (lo + (hi - lo) * k as f64 / steps as f64).exp();
            let v = g(m);
            if v > best.0 {
                best = (v, k);
            }
        }
        let at = |k: usize| (lo + (hi - lo) * k as f64 / steps as f64).exp();
        let (mut a, mut b) = (at(best.1 - 1), at(best.1 + 1));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let oracle = -g(0.5 * (a + b)) - 2.0 * beta.abs().ln();
        let f = mo_free_energy_exact(beta).unwrap();
        assert!((f - oracle).abs() < 1e-8, "{f} vs {oracle}");
        // Frozen value of the same quantity.
        assert!((f - 1.461_054_326_429_5).abs() < 1e-9, "{f}");
    }

    #[test]
    fn normalized_free_energy_vanishes_at_high_temperature() {
        // f(beta) - 1 = O(beta^2) as beta -> 0, bounded by the annealed value beta^2 / 2.
        for &beta in &[0.05, 0.1, 0.3] {
            let v = mo_free_energy_normalized(beta).unwrap();
            assert!(v > 0.0 && v <= 0.5 * beta * beta + 1e-12, "beta {beta}: {v}");
        }
    }

    #[test]
    fn mo_estimator_slope_vanishes_with_beta() {
        let r1 = ScalingRegime::new(0.5, 1e-3, 1.0).unwrap();
        let r2 = ScalingRegime::new(0.5, 2e-3, 1.0).unwrap();
        let e1 = mo_regime_estimate(&r1, 400, &[1.0], DistSpec::Gaussian, 9).unwrap();
        let e2 = mo_regime_estimate(&r2, 400, &[1.0], DistSpec::Gaussian, 9).unwrap();
        assert!(e1.abs() < 0.05 && e2.abs() < 0.05);
        // log Z is linear in beta near 0, so the estimator is nearly beta-independent.
        assert!((e2 - e1).abs() < 0.01);
    }

    #[test]
    fn mo_estimator_rejects_degenerate_endpoints() {
        let r = ScalingRegime::new(0.2, 1.0, 1.0).unwrap();
        assert!(mo_regime_estimate(&r, 2, &[0.5], DistSpec::Gaussian, 1).is_err());
        assert!(mo_regime_estimate(&r, 100, &[], DistSpec::Gaussian, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sandwich(seed in any::<u64>(), n in 1usize..30, m in 0usize..15, beta in 0.01f64..5.0) {
            let f = generate_field(DistSpec::Gaussian, &[n + 1, m + 1], seed).unwrap();
            let end = Endpoint::planar(n, m);
            let t = passage_time(&f, &end).unwrap();
            let z = log_partition(&f, &end, beta, true).unwrap().log_value();
            prop_assert!(z <= beta * t + 1e-9);
            prop_assert!(z >= beta * t - log_path_count(&[n, m]) - 1e-9);
        }

        #[test]
        fn monotone_in_each_site(seed in any::<u64>(), i in 0usize..6, j in 0usize..5, delta in 0.01f64..2.0, beta in 0.1f64..3.0) {
            let f = generate_field(DistSpec::Gaussian, &[6, 5], seed).unwrap().materialize();
            let end = Endpoint::planar(5, 4);
            let base = log_partition(&f, &end, beta, false).unwrap().log_value();
            let bumped = f.with_value(&[i, j], f.value(&[i, j]).unwrap() + delta).unwrap();
            let z = log_partition(&bumped, &end, beta, false).unwrap().log_value();
            prop_assert!(z >= base - 1e-12);
            prop_assert!(z <= base + beta * delta + 1e-12);
        }
    }
}
