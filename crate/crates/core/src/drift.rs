//! Polymers with a huge transverse drift: the Poissonized partition function
//! `Z^(h) = sum_{1 <= n <= N} Zbar_beta(n, N - n) e^{-h (N - n)}`.
//!
//! Terms are indexed by the transverse excursion `j = N - n`. The sweep visits
//! rows `j = 0, 1, ...` and stops once the terms are past their peak and
//! `TAIL_MARGIN` nats below it, which leaves the sum unchanged in double
//! precision. A hard cap of `N^{(1+a)/2 + 0.1}` rows bounds the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{generate_field, DistSpec, EnvField};
use crate::error::{Error, Result};
use crate::lattice::{log_add_exp, LogSumExp, PlanarSweep};
use crate::polymer::{LogWeight, ScalingRegime};
use crate::seed::replicate_seed;
use crate::stats::linear_fit;

/// Terms this far below the running maximum are negligible.
pub const TAIL_MARGIN: f64 = 40.0;

/// Row budget `min(N - 1, floor(N^{(1+a)/2 + 0.1}))`.
pub fn truncation_width(n_total: usize, a: f64) -> usize {
    let w = (n_total as f64).powf(0.5 * (1.0 + a) + 0.1).floor() as usize;
    w.min(n_total - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftResult {
    pub n_total: usize,
    pub regime: ScalingRegime,
    pub log_z: LogWeight,
    /// Index `n` of the largest term.
    pub argmax_n: usize,
    /// `N f_N(u*)` from [`laplace_predictor`].
    pub predictor: f64,
    /// Number of anti-diagonal terms summed.
    pub terms_used: usize,
}

/// How many rows to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Stop after the peak once terms fall `TAIL_MARGIN` below it.
    Adaptive,
    /// Every row up to `N - 1`.
    Full,
}

/// Log terms `log Zbar_beta(N - j, j) - h j` for the swept rows `j`.
pub fn drift_terms(field: &EnvField, n_total: usize, regime: &ScalingRegime, mode: Truncation) -> Result<Vec<f64>> {
    if n_total < 1 {
        return Err(Error::invalid("drifted partition function needs N >= 1"));
    }
    let shape = field.shape();
    if shape.len() != 2 || shape[0] <= n_total {
        return Err(Error::OutOfBounds {
            end: vec![n_total, 0],
            shape: shape.to_vec(),
        });
    }
    if field.contains_nan() {
        return Err(Error::Data("environment contains NaN".into()));
    }
    let cap = match mode {
        Truncation::Adaptive => truncation_width(n_total, regime.a),
        Truncation::Full => n_total - 1,
    };
    if shape[1] <= cap {
        return Err(Error::OutOfBounds {
            end: vec![n_total - cap, cap],
            shape: shape.to_vec(),
        });
    }
    let h = regime.h_n(n_total as f64);
    let mut sweep = PlanarSweep::new(field, LogSumExp { beta: regime.beta });
    let mut terms = Vec::new();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0usize);
    for j in 0..=cap {
        let row = sweep.advance(n_total - j + 1);
        let t = row[n_total - j] - h * j as f64;
        terms.push(t);
        if t > best {
            best = t;
            arg = j;
        }
        if mode == Truncation::Adaptive && j >= 2 * arg + 10 && t < best - TAIL_MARGIN {
            break;
        }
    }
    Ok(terms)
}

/// `log Z^(h_N)` from one sweep of the unnormalized polymer DP.
pub fn drifted_log_partition(field: &EnvField, n_total: usize, regime: &ScalingRegime) -> Result<DriftResult> {
    drifted_log_partition_with(field, n_total, regime, Truncation::Adaptive)
}

pub fn drifted_log_partition_with(
    field: &EnvField,
    n_total: usize,
    regime: &ScalingRegime,
    mode: Truncation,
) -> Result<DriftResult> {
    let terms = drift_terms(field, n_total, regime, mode)?;
    let mut log_z = f64::NEG_INFINITY;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0usize);
    for (j, &t) in terms.iter().enumerate() {
        log_z = log_add_exp(log_z, t);
        if t > best {
            best = t;
            arg = j;
        }
    }
    Ok(DriftResult {
        n_total,
        regime: *regime,
        log_z: LogWeight::from_log(log_z),
        argmax_n: n_total - arg,
        predictor: laplace_predictor(n_total, regime)?.1,
        terms_used: terms.len(),
    })
}

/// `log Z^(h_N)` on a fresh field of the given law.
pub fn sample_drifted(n_total: usize, regime: &ScalingRegime, dist: DistSpec, seed: u64) -> Result<DriftResult> {
    let rows = truncation_width(n_total, regime.a) + 1;
    let field = generate_field(dist, &[n_total + 1, rows], seed)?;
    drifted_log_partition(&field, n_total, regime)
}

/// Maximizer `u*` and value `N f_N(u*)` of
/// `f_N(u) = 2 beta sqrt(u) / (1 + u) - gamma N^{(1-a)/2} u / (1 + u)`.
pub fn laplace_predictor(n_total: usize, regime: &ScalingRegime) -> Result<(f64, f64)> {
    if regime.beta <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let n = n_total as f64;
    let c = regime.h_n(n);
    let f = |u: f64| (2.0 * regime.beta * u.sqrt() - c * u) / (1.0 + u);
    // Work in t = ln u around the small-u stationary point (beta / c)^2.
    let guess = 2.0 * (regime.beta / c).ln();
    let g = |t: f64| f(t.exp());
    let (mut lo, mut hi) = (guess - 30.0, guess + 30.0);
    let steps = 600;
    let dt = (hi - lo) / steps as f64;
    let k = (0..=steps)
        .map(|i| (i, g(lo + dt * i as f64)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    if k == 0 || k == steps {
        return Err(Error::Numeric("Laplace predictor: maximum on the search boundary".into()));
    }
    let centre = lo + dt * k as f64;
    lo = centre - dt;
    hi = centre + dt;
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        }
    }
    if hi - lo > 1e-8 {
        return Err(Error::Numeric("Laplace predictor: golden section did not converge".into()));
    }
    let u = (0.5 * (lo + hi)).exp();
    Ok((u, n * f(u)))
}

/// `(beta^2 / gamma) N^{(1+a)/2}`, the leading order of `log Z^(h_N)`.
pub fn drift_center(n_total: usize, regime: &ScalingRegime) -> f64 {
    regime.beta * regime.beta / regime.gamma * regime.energy_scale(n_total as f64)
}

/// Replicates of `log Z^(h_N)` with seeds `replicate_seed(seed, r)`.
pub fn drift_samples(n_total: usize, regime: &ScalingRegime, reps: usize, dist: DistSpec, seed: u64) -> Result<Vec<f64>> {
    (0..reps)
        .into_par_iter()
        .map(|r| sample_drifted(n_total, regime, dist, replicate_seed(seed, r as u64)).map(|d| d.log_z.log_value()))
        .collect()
}

/// Log-log regression of the second moment about the leading order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationFit {
    pub n_values: Vec<usize>,
    pub second_moments: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    pub residuals: Vec<f64>,
}

/// Fits `log E[(log Z - center)^2]` against `log N` from precomputed samples.
pub fn fit_fluctuations(regime: &ScalingRegime, n_values: &[usize], samples: &[Vec<f64>]) -> Result<FluctuationFit> {
    if n_values.len() < 2 {
        return Err(Error::invalid("fluctuation fit needs at least two values of N"));
    }
    let second_moments: Vec<f64> = n_values
        .iter()
        .zip(samples)
        .map(|(&n, v)| {
            let c = drift_center(n, regime);
            v.iter().map(|x| (x - c).powi(2)).sum::<f64>() / v.len() as f64
        })
        .collect();
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = second_moments.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - fit.intercept - fit.slope * x)
        .collect();
    Ok(FluctuationFit {
        n_values: n_values.to_vec(),
        second_moments,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_std_err: fit.slope_std_err,
        residuals,
    })
}

/// Fluctuation exponent estimate; the prediction is `1 - a/3`.
pub fn drift_fluctuations(
    regime: &ScalingRegime,
    n_values: &[usize],
    reps: usize,
    dist: DistSpec,
    seed: u64,
) -> Result<FluctuationFit> {
    if n_values.len() < 2 {
        return Err(Error::invalid("fluctuation fit needs at least two values of N"));
    }
    if reps < 2 {
        return Err(Error::invalid("fluctuation fit needs at least two replicates"));
    }
    let samples = n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| drift_samples(n, regime, reps, dist, replicate_seed(seed, 1_000_003 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    fit_fluctuations(regime, n_values, &samples)
}

/// Empirical deviation frequencies around `c = (beta^2/gamma) N^{(1+a)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub n_total: usize,
    pub center: f64,
    pub eps: Vec<f64>,
    /// Fraction of replicates with `log Z >= c (1 + eps)`.
    pub upper: Vec<f64>,
    /// Fraction of replicates with `log Z <= c (1 - eps)`.
    pub lower: Vec<f64>,
    /// `N^a eps^{3/2}`.
    pub upper_scale: Vec<f64>,
    /// `N^{2a} eps^3`.
    pub lower_scale: Vec<f64>,
}

pub fn tail_profile(n_total: usize, regime: &ScalingRegime, samples: &[f64], eps_grid: &[f64]) -> Result<TailProfile> {
    if samples.is_empty() {
        return Err(Error::invalid("tail profile of an empty sample"));
    }
    if eps_grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::invalid("eps values must be non-negative"));
    }
    let c = drift_center(n_total, regime);
    let r = samples.len() as f64;
    let na = (n_total as f64).powf(regime.a);
    let freq = |pred: &dyn Fn(f64) -> bool| samples.iter().filter(|&&x| pred(x)).count() as f64 / r;
    Ok(TailProfile {
        n_total,
        center: c,
        eps: eps_grid.to_vec(),
        upper: eps_grid.iter().map(|e| freq(&|x| x >= c * (1.0 + e))).collect(),
        lower: eps_grid.iter().map(|e| freq(&|x| x <= c * (1.0 - e))).collect(),
        upper_scale: eps_grid.iter().map(|e| na * e.powf(1.5)).collect(),
        lower_scale: eps_grid.iter().map(|e| na * na * e.powi(3)).collect(),
    })
}

pub fn deviation_tail_profile(
    regime: &ScalingRegime,
    n_total: usize,
    reps: usize,
    eps_grid: &[f64],
    dist: DistSpec,
    seed: u64,
) -> Result<TailProfile> {
    let samples = drift_samples(n_total, regime, reps, dist, seed)?;
    tail_profile(n_total, regime, &samples, eps_grid)
}
