use rayon::prelude::*;

use super::{ExperimentConfig, ReportBuilder};
use crate::brownian::{
    grid_bias_correction, log_partition_brownian, log_partition_brownian_unnormalized, sample_grid,
    sample_last_passage, scaling_check,
};
use crate::coupling::{dyadic_coupling, sup_gap};
use crate::drift::{drift_center, drift_samples, fit_fluctuations, tail_profile, truncation_width};
use crate::env::{generate_field, DistSpec};
use crate::error::{Error, Result};
use crate::lattice::{log_binomial, LogSumExp, PlanarSweep};
use crate::lpp::{passage_time, Endpoint};
use crate::polymer::{
    log_partition, mo_estimate_on_field, mo_free_energy_exact, mo_free_energy_normalized, mo_regime_estimate,
    ScalingRegime,
};
use crate::rmt_tw::{sample_gue_top, tw_table, TW_DEFAULT_TOL};
use crate::seed::{derive, replicate_seed};
use crate::stats::{ks_one_sample, ks_two_sample, quantile};

/// Calibrated single-thread cost per lattice cell, nanoseconds.
const MAXPLUS_NS: f64 = 18.0;
const LOGSUMEXP_NS: f64 = 70.0;
/// Per cell of a sweep with two or more transverse coordinates.
const SLAB_NS: f64 = 120.0;
/// Per Brownian grid cell (one normal draw and a running max).
const BROWNIAN_NS: f64 = 18.0;
const BROWNIAN_LSE_NS: f64 = 130.0;
/// Per GUE row: one chi draw plus ~40 Sturm bisection sweeps.
const GUE_ROW_NS: f64 = 200.0;
/// Per coupled step: a normal draw and a quantile search.
const COUPLING_STEP_NS: f64 = 120.0;

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Master seed of a series, from its label and size.
fn series_seed(master: u64, label: &str, n: usize) -> u64 {
    derive(derive(master, fnv1a(label)), n as u64)
}

/// Runs `reps` replicates in parallel, returning `(seed, value)` in replicate order.
fn replicates<T: Send>(reps: usize, series: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<(u64, T)>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = replicate_seed(series, r as u64);
            f(s).map(|v| (s, v))
        })
        .collect()
}

fn scalar(reps: usize, series: u64, f: impl Fn(u64) -> Result<f64> + Sync) -> Result<Vec<(u64, f64)>> {
    replicates(reps, series, f)
}

fn values(rows: &[(u64, f64)]) -> Vec<f64> {
    rows.iter().map(|r| r.1).collect()
}

fn rel_err(observed: f64, target: f64) -> f64 {
    ((observed - target) / target).abs()
}

fn need_positive(what: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(Error::invalid(format!("{what} is zero at this size")))
    } else {
        Ok(v)
    }
}

fn floor_mul(x: f64, n: usize) -> usize {
    (x * n as f64).floor() as usize
}

fn total_reps(c: &ExperimentConfig) -> f64 {
    (c.reps * c.dists().len()) as f64
}

/// Bytes held per worker by a sweep with rows of `len` cells.
fn sweep_bytes(len: f64) -> f64 {
    4.0 * 8.0 * len * rayon::current_num_threads() as f64
}

// glynn_whitt

pub(crate) fn cost_glynn_whitt(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let (a, x) = (c.param("a")?, c.param("x")?);
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        let m = x * (n as f64).powf(a) + 1.0;
        ns += (n as f64 + 1.0) * m * MAXPLUS_NS * total_reps(c);
        bytes = bytes.max(sweep_bytes(n as f64));
    }
    Ok((ns, bytes))
}

pub(crate) fn glynn_whitt(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let (a, x) = (c.param("a")?, c.param("x")?);
    if !(a > 0.0 && a < 1.0 && x > 0.0) {
        return Err(Error::invalid("glynn_whitt needs 0 < a < 1 and x > 0"));
    }
    b.target("2 sqrt(x)", 2.0 * x.sqrt(), "$2\\sqrt{x}$");
    for &n in &c.n_values {
        let m = need_positive("floor(x N^a)", (x * (n as f64).powf(a)).floor() as usize)?;
        let scale = (n as f64).powf(0.5 * (1.0 + a));
        for dist in c.dists() {
            let rows = scalar(c.reps, series_seed(c.seed, dist.name(), n), |s| {
                let f = generate_field(dist, &[n + 1, m + 1], s)?;
                Ok(passage_time(&f, &Endpoint::planar(n, m))? / scale)
            })?;
            let sm = b.series(n, dist.name(), &rows)?;
            b.estimate(format!("mean_ratio/{dist}/{n}"), sm.mean);
            b.within(&format!("ratio/{dist}/{n}"), sm.mean, "ratio_lo", "ratio_hi", x.sqrt())?;
        }
    }
    Ok(())
}

// near_axis

pub(crate) fn cost_near_axis(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let hs = c.param_list("h")?;
    let mut ns = 0.0;
    for &n in &c.n_values {
        for &h in hs {
            ns += (n as f64 + 1.0) * (h * n as f64 + 1.0) * MAXPLUS_NS * total_reps(c);
        }
    }
    let nmax = c.n_values.iter().copied().max().unwrap_or(0) as f64;
    Ok((ns, sweep_bytes(nmax)))
}

pub(crate) fn near_axis(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let hs = c.param_list("h")?;
    for &h in hs {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::invalid(format!("h must lie in (0, 1], got {h}")));
        }
        b.target(&format!("2 sqrt(h), h = {h}"), 2.0 * h.sqrt(), "a very precise asymptotic");
    }
    for &n in &c.n_values {
        for &h in hs {
            let m = need_positive("floor(hN)", floor_mul(h, n))?;
            for dist in c.dists() {
                let label = format!("{dist}/h={h}");
                let rows = scalar(c.reps, series_seed(c.seed, &label, n), |s| {
                    let f = generate_field(dist, &[n + 1, m + 1], s)?;
                    Ok(passage_time(&f, &Endpoint::planar(n, m))? / n as f64)
                })?;
                let sm = b.series(n, &label, &rows)?;
                let err = rel_err(sm.mean, 2.0 * h.sqrt());
                b.estimate(format!("rel_err/{label}/{n}"), err);
                b.at_most(&format!("near_axis/{label}/{n}"), err, "rel_tol")?;
            }
        }
    }
    Ok(())
}

// boundary_continuity

pub(crate) fn cost_boundary_continuity(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let x = c.param("x")?;
    let hmax = c.param_list("h")?.iter().copied().fold(0.0, f64::max);
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        let len = x * n as f64 + 1.0;
        ns += len * (hmax * n as f64 + 1.0) * LOGSUMEXP_NS * c.reps as f64;
        bytes = bytes.max(sweep_bytes(len));
    }
    Ok((ns, bytes))
}

/// `phi(h, x) = h log((x + h) / h) + x log((x + h) / x)`.
fn path_entropy(h: f64, x: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    h * ((x + h) / h).ln() + x * ((x + h) / x).ln()
}

pub(crate) fn boundary_continuity(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let beta = c.param("beta")?;
    let x = c.param("x")?;
    let hs = c.param_list("h")?.to_vec();
    if hs.is_empty() || hs.iter().any(|&h| !(h > 0.0)) || x <= 0.0 {
        return Err(Error::invalid("boundary_continuity needs h > 0 values and x > 0"));
    }
    let hmax = hs.iter().copied().fold(0.0, f64::max);
    let dist = c.dist;
    for &n in &c.n_values {
        let nx = need_positive("floor(xN)", floor_mul(x, n))?;
        let rows_needed: Vec<usize> = hs.iter().map(|&h| floor_mul(h, n)).collect();
        let top = floor_mul(hmax, n);
        // One sweep per replicate: row j of the sweep holds log Z_N(j, .).
        let reps = replicates(c.reps, series_seed(c.seed, "psi", n), |s| {
            let f = generate_field(dist, &[nx + 1, top + 1], s)?;
            let mut sweep = PlanarSweep::new(&f, LogSumExp { beta });
            let mut at = vec![0.0; top + 1];
            for slot in at.iter_mut() {
                *slot = sweep.advance(nx + 1)[nx] / n as f64;
            }
            Ok(rows_needed.iter().map(|&j| (at[j] - at[0]).abs()).collect::<Vec<f64>>())
        })?;
        let mut gaps = Vec::with_capacity(hs.len());
        for (k, &h) in hs.iter().enumerate() {
            let rows: Vec<(u64, f64)> = reps.iter().map(|(s, v)| (*s, v[k])).collect();
            let sm = b.series(n, &format!("gap/h={h}"), &rows)?;
            b.estimate(format!("gap/h={h}/{n}"), sm.mean);
            gaps.push(sm.mean);
        }
        if gaps.len() > 1 {
            let worst = gaps.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
            b.estimate(format!("max_step_ratio/{n}"), worst);
            b.at_most(&format!("monotone/{n}"), worst, "max_step_ratio")?;
        }

        let phi_err = hs
            .iter()
            .map(|&h| {
                let exact = log_binomial(nx as u64, floor_mul(h, n) as u64) / n as f64;
                (exact - path_entropy(h, x)).abs()
            })
            .fold(0.0, f64::max);
        b.estimate(format!("phi_abs_err/{n}"), phi_err);
        b.at_most(&format!("phi/{n}"), phi_err, "phi_abs")?;
    }
    Ok(())
}

// mo_regime

pub(crate) fn cost_mo_regime(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let regime = c.regime()?;
    let alpha = c.param_list("alpha")?;
    if alpha.is_empty() {
        return Err(Error::invalid("alpha must not be empty"));
    }
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        let widths: Vec<f64> = alpha.iter().map(|&x| x * (n as f64).powf(regime.a) + 1.0).collect();
        let cells = widths.iter().product::<f64>() * (n as f64 + 1.0);
        let per_cell = if widths.len() > 1 { SLAB_NS } else { LOGSUMEXP_NS };
        ns += cells * per_cell * total_reps(c);
        // Two slabs spanning every transverse coordinate but the last.
        let slab = widths[..widths.len() - 1].iter().product::<f64>() * (n as f64 + 1.0);
        bytes = bytes.max(sweep_bytes(slab));
    }
    Ok((ns, bytes))
}

pub(crate) fn mo_regime(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    let alpha = c.param_list("alpha")?.to_vec();
    let target = mo_free_energy_normalized(regime.beta)? / regime.beta;
    b.target("(f(beta) - 1) / beta", target, "The Moriarty-O'Connell regime");
    b.estimate("f(beta) / beta", mo_free_energy_exact(regime.beta)? / regime.beta);
    for &n in &c.n_values {
        let mut means = Vec::new();
        for dist in c.dists() {
            let rows = scalar(c.reps, series_seed(c.seed, dist.name(), n), |s| {
                mo_regime_estimate(&regime, n, &alpha, dist, s)
            })?;
            let sm = b.series(n, dist.name(), &rows)?;
            let err = rel_err(sm.mean, target);
            b.estimate(format!("rel_err/{dist}/{n}"), err);
            b.at_most(&format!("free_energy/{dist}/{n}"), err, "rel_tol")?;
            means.push(sm.mean);
        }
        if let [g, r] = means[..] {
            let gap = rel_err(r, g);
            b.estimate(format!("universality_gap/{n}"), gap);
            b.at_most(&format!("universality/{n}"), gap, "universality_rel")?;
        }
    }
    Ok(())
}

// mo_regime_d

pub(crate) fn cost_mo_regime_d(c: &ExperimentConfig) -> Result<(f64, f64)> {
    cost_mo_regime(c)
}

pub(crate) fn mo_regime_d(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    let alpha = c.param_list("alpha")?.to_vec();
    if alpha.len() < 2 {
        return Err(Error::invalid("mo_regime_d needs at least two alpha entries"));
    }
    let mut means = Vec::new();
    for &n in &c.n_values {
        let rows = scalar(c.reps, series_seed(c.seed, c.dist.name(), n), |s| {
            mo_regime_estimate(&regime, n, &alpha, c.dist, s)
        })?;
        let sm = b.series(n, c.dist.name(), &rows)?;
        b.estimate(format!("mean/{n}"), sm.mean);
        means.push(sm.mean);
    }
    if let [.., prev, last] = means[..] {
        let change = rel_err(prev, last);
        b.estimate("last_relative_change", change);
        b.at_most("stabilization", change, "stabilization_rel")?;
    }
    Ok(())
}

// very_asymmetric

pub(crate) fn cost_very_asymmetric(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let regime = c.regime()?;
    let bexp = c.param("b")?;
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        let nf = n as f64;
        let slab = (nf.powf(regime.a) + 1.0) * (nf.powf(bexp) + 1.0);
        ns += (nf + 1.0) * (slab * SLAB_NS + (nf.powf(regime.a) + 1.0) * LOGSUMEXP_NS) * c.reps as f64;
        bytes = bytes.max(sweep_bytes((nf.powf(regime.a) + 1.0) * (nf + 1.0)));
    }
    Ok((ns, bytes))
}

pub(crate) fn very_asymmetric(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    let bexp = c.param("b")?;
    if !(bexp > 0.0 && bexp < regime.a) {
        return Err(Error::invalid("very_asymmetric needs 0 < b < a"));
    }
    for &n in &c.n_values {
        let t1 = need_positive("floor(N^a)", regime.transverse(n, 1.0))?;
        let t2 = need_positive("floor(N^b)", (n as f64).powf(bexp).floor() as usize)?;
        let asym = scalar(c.reps, series_seed(c.seed, "asymmetric", n), |s| {
            let f = generate_field(c.dist, &[n + 1, t1 + 1, t2 + 1], s)?;
            mo_estimate_on_field(&f, &regime, n, &[t1, t2])
        })?;
        let planar = scalar(c.reps, series_seed(c.seed, "planar", n), |s| {
            mo_regime_estimate(&regime, n, &[1.0], c.dist, s)
        })?;
        let sa = b.series(n, "asymmetric", &asym)?;
        let sp = b.series(n, "planar", &planar)?;
        let err = rel_err(sa.mean, sp.mean);
        b.estimate(format!("rel_diff/{n}"), err);
        b.at_most(&format!("matches_planar/{n}"), err, "rel_tol")?;
    }
    Ok(())
}

// brownian_free_energy

pub(crate) fn cost_brownian_free_energy(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let step = c.param("step")?;
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        let cells = (n as f64 + 1.0) * (n as f64 / step).ceil();
        ns += cells * BROWNIAN_LSE_NS * c.reps as f64;
        bytes = bytes.max(16.0 * cells * rayon::current_num_threads() as f64);
    }
    Ok((ns, bytes))
}

pub(crate) fn brownian_free_energy(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let beta = c.param("beta")?;
    let step = c.param("step")?;
    let target = mo_free_energy_exact(beta)?;
    b.target("f(beta)", target, "restriction of the digamma function");
    for &n in &c.n_values {
        let t = n as f64;
        let rows = replicates(c.reps, series_seed(c.seed, "brownian", n), |s| {
            let g = sample_grid(n + 1, t, step, s)?;
            Ok((
                log_partition_brownian_unnormalized(&g, beta)?.log_value() / t,
                log_partition_brownian(&g, beta)?.log_value() / t,
            ))
        })?;
        let raw: Vec<(u64, f64)> = rows.iter().map(|(s, v)| (*s, v.0)).collect();
        let normalized: Vec<f64> = rows.iter().map(|r| r.1 .1).collect();
        let sm = b.series(n, "unnormalized", &raw)?;
        b.estimate(
            format!("normalized_mean/{n}"),
            normalized.iter().sum::<f64>() / normalized.len() as f64,
        );
        let err = rel_err(sm.mean, target);
        b.estimate(format!("rel_err/{n}"), err);
        b.at_most(&format!("free_energy/{n}"), err, "rel_tol")?;
    }
    Ok(())
}

// scaling_identity

pub(crate) fn cost_scaling_identity(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let m = c.param("m_lines")?;
    let ratio = c.param("step_ratio")?;
    let cells = m * (1.0 / ratio).ceil();
    Ok((2.0 * cells * BROWNIAN_NS * c.reps as f64 * c.n_values.len() as f64, sweep_bytes(m)))
}

pub(crate) fn scaling_identity(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let m = c.param("m_lines")? as usize;
    let ratio = c.param("step_ratio")?;
    for &n in &c.n_values {
        let ks = scaling_check(m, n as f64, c.reps, series_seed(c.seed, "scaling", n), ratio)?;
        b.estimate(format!("ks/{n}"), ks);
        b.at_most(&format!("scaling/{n}"), ks, "ks")?;
    }
    Ok(())
}

// gue_link

pub(crate) fn cost_gue_link(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let m = c.param("m_lines")?;
    let g = c.param("gue_n")?;
    let step = c.param("step")?;
    let per = m * (1.0 / step).ceil() * BROWNIAN_NS + g * GUE_ROW_NS;
    Ok((per * c.reps as f64 * c.n_values.len() as f64, sweep_bytes(m)))
}

pub(crate) fn gue_link(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let m = c.param("m_lines")? as usize;
    let g = c.param("gue_n")? as usize;
    let step = c.param("step")?;
    let correction = grid_bias_correction(m, step);
    b.estimate("grid_correction", correction);
    for &n in &c.n_values {
        let raw = scalar(c.reps, series_seed(c.seed, "brownian", n), |s| sample_last_passage(m, 1.0, step, s))?;
        let corrected: Vec<(u64, f64)> = raw.iter().map(|(s, v)| (*s, v + correction)).collect();
        let gue = scalar(c.reps, series_seed(c.seed, "gue", n), |s| sample_gue_top(g, s))?;
        b.series(n, "brownian", &corrected)?;
        b.series(n, "gue", &gue)?;
        let gv = values(&gue);
        let uncorrected = ks_two_sample(&values(&raw), &gv)?;
        let ks = ks_two_sample(&values(&corrected), &gv)?;
        b.estimate(format!("ks_uncorrected/{n}"), uncorrected);
        b.estimate(format!("ks/{n}"), ks);
        b.at_most(&format!("gue_law/{n}"), ks, "ks")?;
    }
    Ok(())
}

// tw_discrete

pub(crate) fn cost_tw_discrete(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let a = c.param("a")?;
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        ns += (n as f64 + 1.0) * ((n as f64).powf(a) + 1.0) * MAXPLUS_NS * c.reps as f64;
        bytes = bytes.max(sweep_bytes(n as f64));
    }
    Ok((ns, bytes))
}

pub(crate) fn tw_discrete(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let a = c.param("a")?;
    if !(a > 0.0 && a < 3.0 / 7.0) {
        return Err(Error::invalid("tw_discrete needs 0 < a < 3/7"));
    }
    let table = tw_table(TW_DEFAULT_TOL)?;
    b.target("mean of F_2", table.mean(), "denotes the Tracy-Widom distribution");
    for &n in &c.n_values {
        let nf = n as f64;
        let m = need_positive("floor(N^a)", nf.powf(a).floor() as usize)?;
        let raw = scalar(c.reps, series_seed(c.seed, c.dist.name(), n), |s| {
            let f = generate_field(c.dist, &[n + 1, m + 1], s)?;
            passage_time(&f, &Endpoint::planar(n, m))
        })?;
        let center = 2.0 * nf.powf(0.5 * (1.0 + a));
        let scale = nf.powf(0.5 - a / 6.0);
        let rescaled: Vec<(u64, f64)> = raw.iter().map(|(s, t)| (*s, (t - center) / scale)).collect();
        b.series(n, "rescaled", &rescaled)?;
        // Same samples centered on the M + 1 crossed lines, the size of the matching GUE.
        let lines = (m + 1) as f64;
        let by_lines: Vec<f64> = raw
            .iter()
            .map(|(_, t)| (t - 2.0 * (nf * lines).sqrt()) / (nf.sqrt() * lines.powf(-1.0 / 6.0)))
            .collect();
        let ks = ks_one_sample(&values(&rescaled), |x| table.cdf_at(x))?;
        b.estimate(format!("ks_line_count_scaling/{n}"), ks_one_sample(&by_lines, |x| table.cdf_at(x))?);
        b.estimate(format!("ks/{n}"), ks);
        b.at_most(&format!("tracy_widom/{n}"), ks, "ks")?;
    }
    Ok(())
}

// drift_free_energy

fn drift_cost(regime: &ScalingRegime, n_values: &[usize], reps: f64) -> (f64, f64) {
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in n_values {
        // Adaptive truncation sweeps about twice the peak row, capped.
        let peak = (n as f64).powf(regime.a) * (regime.beta / regime.gamma).powi(2);
        let rows = (2.0 * peak + 10.0).min(truncation_width(n.max(2), regime.a) as f64 + 1.0);
        ns += (n as f64 + 1.0) * rows * LOGSUMEXP_NS * reps;
        bytes = bytes.max(sweep_bytes(n as f64));
    }
    (ns, bytes)
}

pub(crate) fn cost_drift_free_energy(c: &ExperimentConfig) -> Result<(f64, f64)> {
    Ok(drift_cost(&c.regime()?, &c.n_values, total_reps(c)))
}

pub(crate) fn drift_free_energy(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    b.target("beta^2 / gamma (normalized)", 1.0, "for all environment laws such that");
    for &n in &c.n_values {
        let center = drift_center(n, &regime);
        for dist in c.dists() {
            let seed = series_seed(c.seed, dist.name(), n);
            let samples = drift_samples(n, &regime, c.reps, dist, seed)?;
            let rows: Vec<(u64, f64)> = samples
                .iter()
                .enumerate()
                .map(|(r, v)| (replicate_seed(seed, r as u64), v / center))
                .collect();
            let sm = b.series(n, dist.name(), &rows)?;
            let err = (sm.mean - 1.0).abs();
            b.estimate(format!("rel_err/{dist}/{n}"), err);
            b.at_most(&format!("free_energy/{dist}/{n}"), err, "rel_tol")?;
        }
    }
    Ok(())
}

// drift_fluctuations

pub(crate) fn cost_drift_fluctuations(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let regime = c.regime()?;
    let (mut ns, bytes) = drift_cost(&regime, &c.n_values, c.reps as f64);
    if let Ok(extra) = c.param_list("secondary_a") {
        for &a2 in extra {
            let r2 = ScalingRegime::new(a2, regime.beta, regime.gamma)?;
            ns += drift_cost(&r2, &c.n_values, c.reps as f64).0;
        }
    }
    Ok((ns, bytes))
}

fn fluctuation_fit(
    c: &ExperimentConfig,
    regime: &ScalingRegime,
    label: &str,
    b: &mut ReportBuilder<'_>,
) -> Result<f64> {
    let mut samples = Vec::with_capacity(c.n_values.len());
    for &n in &c.n_values {
        let seed = series_seed(c.seed, label, n);
        let s = drift_samples(n, regime, c.reps, c.dist, seed)?;
        let center = drift_center(n, regime);
        let rows: Vec<(u64, f64)> = s
            .iter()
            .enumerate()
            .map(|(r, v)| (replicate_seed(seed, r as u64), (v - center).powi(2)))
            .collect();
        b.series(n, &format!("{label}/sq_dev"), &rows)?;
        samples.push(s);
    }
    let fit = fit_fluctuations(regime, &c.n_values, &samples)?;
    b.estimate(format!("slope/{label}"), fit.slope);
    b.estimate(format!("slope_std_err/{label}"), fit.slope_std_err);
    Ok(fit.slope)
}

pub(crate) fn drift_fluctuations(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    if c.n_values.len() < 2 || c.reps < 2 {
        return Err(Error::invalid("drift_fluctuations needs two sizes and two replicates"));
    }
    let predicted = 1.0 - regime.a / 3.0;
    b.target("1 - a/3", predicted, "a certain flavor of variance bounds");
    let slope = fluctuation_fit(c, &regime, &format!("a={}", regime.a), b)?;
    b.at_most("exponent", (slope - predicted).abs(), "slope_abs")?;
    if let Ok(extra) = c.param_list("secondary_a") {
        for &a2 in extra {
            let r2 = ScalingRegime::new(a2, regime.beta, regime.gamma)?;
            let s2 = fluctuation_fit(c, &r2, &format!("a={a2}"), b)?;
            b.estimate(format!("slope_minus_prediction/a={a2}"), s2 - (1.0 - a2 / 3.0));
        }
    }
    Ok(())
}

// deviation_tails

pub(crate) fn cost_deviation_tails(c: &ExperimentConfig) -> Result<(f64, f64)> {
    Ok(drift_cost(&c.regime()?, &c.n_values, c.reps as f64))
}

pub(crate) fn deviation_tails(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    let eps = c.param_list("eps")?.to_vec();
    let pair = c.param_list("eps_pair")?;
    let [e1, e2] = pair[..] else {
        return Err(Error::invalid("eps_pair needs exactly two values"));
    };
    for &n in &c.n_values {
        let seed = series_seed(c.seed, c.dist.name(), n);
        let samples = drift_samples(n, &regime, c.reps, c.dist, seed)?;
        let profile = tail_profile(n, &regime, &samples, &eps)?;
        let rows: Vec<(u64, f64)> = samples
            .iter()
            .enumerate()
            .map(|(r, v)| (replicate_seed(seed, r as u64), v / profile.center))
            .collect();
        b.series(n, "normalized", &rows)?;
        for (k, e) in eps.iter().enumerate() {
            b.estimate(format!("upper/eps={e}/{n}"), profile.upper[k]);
            b.estimate(format!("lower/eps={e}/{n}"), profile.lower[k]);
        }
        let rise = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        b.at_most(&format!("upper_nested/{n}"), rise(&profile.upper), "nesting_slack")?;
        b.at_most(&format!("lower_nested/{n}"), rise(&profile.lower), "nesting_slack")?;

        // The two tails together cover every replicate at eps = 0.
        let both = tail_profile(n, &regime, &samples, &[0.0])?;
        b.at_most(
            &format!("zero_eps_cover/{n}"),
            (1.0 - both.upper[0] - both.lower[0]).max(0.0),
            "nesting_slack",
        )?;

        // Decay is asserted on the upper tail. The lower-tail events at small
        // eps sit inside the bulk while the finite-N mean is below the center,
        // so their ratios are reported only.
        let at = |e: f64| {
            eps.iter()
                .position(|&x| x == e)
                .ok_or_else(|| Error::invalid(format!("eps_pair value {e} is not on the eps grid")))
        };
        let (k1, k2) = (at(e1)?, at(e2)?);
        let two_sided = |k: usize| profile.upper[k] + profile.lower[k];
        for (key, hi, lo) in [
            ("upper_ratio", profile.upper[k2], profile.upper[k1]),
            ("lower_ratio", profile.lower[k2], profile.lower[k1]),
            ("two_sided_ratio", two_sided(k2), two_sided(k1)),
        ] {
            if lo > 0.0 {
                b.estimate(format!("{key}/{n}"), hi / lo);
            }
        }
        b.at_most_scaled(&format!("upper_decay/{n}"), profile.upper[k2], "decay_ratio", profile.upper[k1])?;
    }
    Ok(())
}

// coupling_gap

pub(crate) fn cost_coupling_gap(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let steps: f64 = c.n_values.iter().map(|&n| n as f64).sum();
    let nmax = c.n_values.iter().copied().max().unwrap_or(0) as f64;
    Ok((
        2.0 * steps * COUPLING_STEP_NS * c.reps as f64,
        16.0 * nmax * rayon::current_num_threads() as f64,
    ))
}

fn levels_of(n: usize) -> Result<u32> {
    if !n.is_power_of_two() {
        return Err(Error::invalid(format!("coupling sizes must be powers of two, got {n}")));
    }
    Ok(n.trailing_zeros())
}

pub(crate) fn coupling_gap(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    if c.n_values.len() < 2 {
        return Err(Error::invalid("coupling_gap needs two sizes"));
    }
    let mut medians = Vec::new();
    for &n in &c.n_values {
        let l = levels_of(n)?;
        let rows = scalar(c.reps, series_seed(c.seed, "rademacher", n), |s| {
            Ok(sup_gap(&dyadic_coupling(DistSpec::Rademacher, l, s)?))
        })?;
        b.series(n, "rademacher", &rows)?;
        medians.push(quantile(&values(&rows), 0.5)?);
        let gauss = scalar(c.reps, series_seed(c.seed, "gaussian", n), |s| {
            Ok(sup_gap(&dyadic_coupling(DistSpec::Gaussian, l, s)?))
        })?;
        let worst = values(&gauss).into_iter().fold(0.0, f64::max);
        b.estimate(format!("gaussian_max_gap/{n}"), worst);
        b.at_most(&format!("gaussian_exact/{n}"), worst, "gaussian_gap_abs")?;
    }
    let ratio = medians[medians.len() - 1] / medians[0];
    b.estimate("median_ratio", ratio);
    b.at_most("log_growth", ratio, "growth_ratio")?;
    Ok(())
}

// concentration_decay

pub(crate) fn cost_concentration_decay(c: &ExperimentConfig) -> Result<(f64, f64)> {
    let regime = c.regime()?;
    let mut ns = 0.0;
    let mut bytes: f64 = 0.0;
    for &n in &c.n_values {
        ns += (n as f64 + 1.0) * ((n as f64).powf(regime.a) + 1.0) * LOGSUMEXP_NS * c.reps as f64;
        bytes = bytes.max(sweep_bytes(n as f64));
    }
    Ok((ns, bytes))
}

pub(crate) fn concentration_decay(c: &ExperimentConfig, b: &mut ReportBuilder<'_>) -> Result<()> {
    let regime = c.regime()?;
    let mut sds = Vec::new();
    for &n in &c.n_values {
        let nf = n as f64;
        let m = need_positive("floor(N^a)", regime.transverse(n, 1.0))?;
        let beta_n = regime.beta_n(nf);
        let rows = scalar(c.reps, series_seed(c.seed, c.dist.name(), n), |s| {
            let f = generate_field(c.dist, &[n + 1, m + 1], s)?;
            Ok(log_partition(&f, &Endpoint::planar(n, m), beta_n, true)?.log_value() / nf.powf(regime.a))
        })?;
        let sm = b.series(n, c.dist.name(), &rows)?;
        b.estimate(format!("sd/{n}"), sm.std_dev);
        sds.push(sm.std_dev);
    }
    if sds.len() > 1 {
        let worst = sds.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
        b.estimate("max_sd_ratio", worst);
        b.at_most("sd_decreasing", worst, "max_step_ratio")?;
    }
    Ok(())
}
