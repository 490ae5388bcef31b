//! Semi-discrete Brownian environment: Brownian last passage and the
//! Brownian polymer partition function on discretized paths.
//!
//! Jump times are restricted to the grid `0 = t_0 < t_1 < ... < t_K = N`.
//! Consecutive jumps may share a grid point, which is the closure of the
//! continuum constraint `u_i < u_{i+1}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::log_add_exp;
use crate::polymer::LogWeight;
use crate::seed::derive;
use crate::stats::ks_two_sample;

/// `-zeta(1/2) / sqrt(2 pi)`: mean overshoot, in units of `sigma sqrt(dt)`, of
/// the running maximum of a Brownian motion over its values on a grid of mesh `dt`.
pub const GRID_MAX_OVERSHOOT: f64 = 0.582_597_157_939_010_6;

/// Independent Brownian paths `B^(0), ..., B^(M)` sampled on a common grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrownianGrid {
    pub m_lines: usize,
    pub t_horizon: f64,
    pub step: f64,
    /// `increments[i][k] = B^(i)(t_{k+1}) - B^(i)(t_k)`.
    pub increments: Vec<Vec<f64>>,
    /// `cumulative[i][k] = sum_{j <= k} increments[i][j] = B^(i)(t_{k+1})`.
    pub cumulative: Vec<Vec<f64>>,
}

fn grid_len(t_horizon: f64, step: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    if !(t_horizon > 0.0 && t_horizon.is_finite()) || step > t_horizon * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "need 0 < step <= t_horizon, got step {step}, horizon {t_horizon}"
        )));
    }
    // Guard against ratios like 1 / 0.02 landing a hair above an integer.
    let k = (t_horizon / step * (1.0 - 1e-12)).ceil() as usize;
    Ok(k.max(1))
}

/// Durations of the `K` grid cells; all equal to `step` except possibly the last.
fn cell_durations(t_horizon: f64, step: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |j| {
        if j + 1 < k {
            step
        } else {
            t_horizon - step * (k - 1) as f64
        }
    })
}

fn line_rng(seed: u64, line: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, 0xB40_u64));
    rng.set_stream(line as u64);
    rng
}

fn sample_line(seed: u64, line: usize, t_horizon: f64, step: f64, k: usize, out: &mut Vec<f64>) {
    let mut rng = line_rng(seed, line);
    out.clear();
    out.extend(cell_durations(t_horizon, step, k).map(|dt| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * dt.sqrt()
    }));
}

/// Samples `m_lines` independent paths with `ceil(t_horizon / step)` increments each.
pub fn sample_grid(m_lines: usize, t_horizon: f64, step: f64, seed: u64) -> Result<BrownianGrid> {
    if m_lines == 0 {
        return Err(Error::invalid("need at least one Brownian line"));
    }
    let k = grid_len(t_horizon, step)?;
    let mut increments = Vec::with_capacity(m_lines);
    let mut cumulative = Vec::with_capacity(m_lines);
    let mut buf = Vec::with_capacity(k);
    for line in 0..m_lines {
        sample_line(seed, line, t_horizon, step, k, &mut buf);
        let mut acc = 0.0;
        let cum: Vec<f64> = buf
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        increments.push(buf.clone());
        cumulative.push(cum);
    }
    Ok(BrownianGrid {
        m_lines,
        t_horizon,
        step,
        increments,
        cumulative,
    })
}

impl BrownianGrid {
    /// Builds a grid from explicit increments with a uniform step.
    pub fn from_increments(increments: Vec<Vec<f64>>, step: f64) -> Result<Self> {
        if increments.is_empty() || increments[0].is_empty() {
            return Err(Error::invalid("empty Brownian grid"));
        }
        let k = increments[0].len();
        if increments.iter().any(|l| l.len() != k) {
            return Err(Error::invalid("all lines need the same number of increments"));
        }
        let cumulative = increments
            .iter()
            .map(|l| {
                let mut acc = 0.0;
                l.iter()
                    .map(|&x| {
                        acc += x;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(BrownianGrid {
            m_lines: increments.len(),
            t_horizon: step * k as f64,
            step,
            increments,
            cumulative,
        })
    }

    /// Number of grid cells per line.
    pub fn len(&self) -> usize {
        self.increments.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Path values of line `i` at `t_0, ..., t_K`, starting with 0.
    pub fn path(&self, i: usize) -> Vec<f64> {
        std::iter::once(0.0).chain(self.cumulative[i].iter().copied()).collect()
    }

    /// Splits every cell in two with Brownian-bridge midpoints. Coarse grid
    /// values are preserved, so every coarse jump placement stays admissible.
    pub fn refine(&self, seed: u64) -> BrownianGrid {
        let mut increments = Vec::with_capacity(self.m_lines);
        for (i, line) in self.increments.iter().enumerate() {
            let mut rng = line_rng(derive(seed, 0x5EF1), i);
            let k = line.len();
            let mut fine = Vec::with_capacity(2 * k);
            for (dx, dt) in line.iter().zip(cell_durations(self.t_horizon, self.step, k)) {
                let z: f64 = StandardNormal.sample(&mut rng);
                let first = 0.5 * dx + 0.5 * dt.sqrt() * z;
                fine.push(first);
                fine.push(dx - first);
            }
            increments.push(fine);
        }
        let cumulative = increments
            .iter()
            .map(|l: &Vec<f64>| {
                let mut acc = 0.0;
                l.iter()
                    .map(|&x| {
                        acc += x;
                        acc
                    })
                    .collect()
            })
            .collect();
        BrownianGrid {
            m_lines: self.m_lines,
            t_horizon: self.t_horizon,
            step: 0.5 * self.step,
            increments,
            cumulative,
        }
    }
}

/// One step of the Brownian last-passage recursion
/// `D(t, i) = B(t) + max_{s <= t} (D(s, i-1) - B(s))`, in place.
fn lpp_line(prev: &mut [f64], path: &[f64]) {
    let mut run = f64::NEG_INFINITY;
    for (d, &b) in prev.iter_mut().zip(path) {
        run = run.max(*d - b);
        *d = b + run;
    }
}

/// Grid-restricted Brownian last-passage value `L(N, M)`.
pub fn last_passage_brownian(grid: &BrownianGrid) -> Result<f64> {
    if grid.m_lines == 0 || grid.is_empty() {
        return Err(Error::invalid("empty Brownian grid"));
    }
    let mut d = grid.path(0);
    for i in 1..grid.m_lines {
        lpp_line(&mut d, &grid.path(i));
    }
    Ok(*d.last().expect("non-empty"))
}

/// Continuity shift for the grid restriction: each of the `m_lines - 1` jump
/// times maximizes a process with local variance 2, whose grid maximum falls
/// short of the continuum maximum by `GRID_MAX_OVERSHOOT * sqrt(2 step)` on average.
pub fn grid_bias_correction(m_lines: usize, step: f64) -> f64 {
    m_lines.saturating_sub(1) as f64 * GRID_MAX_OVERSHOOT * (2.0 * step).sqrt()
}

/// Grid last-passage value plus [`grid_bias_correction`].
pub fn last_passage_brownian_corrected(grid: &BrownianGrid) -> Result<f64> {
    Ok(last_passage_brownian(grid)? + grid_bias_correction(grid.m_lines, grid.step))
}

/// Samples `L(N, M)` line by line without storing the grid. Identical to
/// `last_passage_brownian(&sample_grid(..))` for the same arguments.
pub fn sample_last_passage(m_lines: usize, t_horizon: f64, step: f64, seed: u64) -> Result<f64> {
    if m_lines == 0 {
        return Err(Error::invalid("need at least one Brownian line"));
    }
    let k = grid_len(t_horizon, step)?;
    let mut inc = Vec::with_capacity(k);
    let mut path = vec![0.0; k + 1];
    let mut d = vec![0.0; k + 1];
    for line in 0..m_lines {
        sample_line(seed, line, t_horizon, step, k, &mut inc);
        let mut acc = 0.0;
        for (p, &x) in path[1..].iter_mut().zip(&inc) {
            acc += x;
            *p = acc;
        }
        if line == 0 {
            d.copy_from_slice(&path);
        } else {
            lpp_line(&mut d, &path);
        }
    }
    Ok(d[k])
}

/// `log |Omega^c_{N,M}| = M log N - log M!`, the volume of jump-time simplices.
pub fn log_simplex_volume(t_horizon: f64, jumps: usize) -> f64 {
    jumps as f64 * t_horizon.ln() - statrs::function::gamma::ln_gamma(jumps as f64 + 1.0)
}

/// Log of the unnormalized Brownian partition function (the integral over the
/// jump-time simplex), by left-endpoint quadrature of
/// `zeta(t, i) = int_0^t zeta(s, i-1) exp(beta (B_i(t) - B_i(s))) ds`.
pub fn log_partition_brownian_unnormalized(grid: &BrownianGrid, beta: f64) -> Result<LogWeight> {
    if grid.m_lines == 0 || grid.is_empty() {
        return Err(Error::invalid("empty Brownian grid"));
    }
    if !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite, got {beta}")));
    }
    let k = grid.len();
    let log_dt: Vec<f64> = cell_durations(grid.t_horizon, grid.step, k).map(f64::ln).collect();
    let mut lz: Vec<f64> = grid.path(0).iter().map(|&b| beta * b).collect();
    let mut next = vec![f64::NEG_INFINITY; k + 1];
    for i in 1..grid.m_lines {
        let path = grid.path(i);
        let mut acc = f64::NEG_INFINITY;
        next[0] = f64::NEG_INFINITY;
        for t in 1..=k {
            acc = log_add_exp(acc, lz[t - 1] - beta * path[t - 1] + log_dt[t - 1]);
            next[t] = beta * path[t] + acc;
        }
        std::mem::swap(&mut lz, &mut next);
    }
    let v = lz[k];
    if v.is_nan() {
        return Err(Error::Numeric("Brownian partition function evaluated to NaN".into()));
    }
    Ok(LogWeight::from_log(v))
}

/// Log of the normalized Brownian partition function: the average of
/// `exp(beta Br(u))` over uniformly distributed jump times.
pub fn log_partition_brownian(grid: &BrownianGrid, beta: f64) -> Result<LogWeight> {
    let raw = log_partition_brownian_unnormalized(grid, beta)?;
    Ok(LogWeight::from_log(
        raw.log_value() - log_simplex_volume(grid.t_horizon, grid.m_lines - 1),
    ))
}

/// Two-sample KS distance between `L(N, M)` sampled directly and
/// `sqrt(N) L(1, M)` sampled independently, both with `K = 1 / step_ratio` cells.
pub fn scaling_check(m_lines: usize, n: f64, reps: usize, seed: u64, step_ratio: f64) -> Result<f64> {
    if reps < 100 {
        return Err(Error::invalid(format!("scaling check needs reps >= 100, got {reps}")));
    }
    if !(step_ratio > 0.0 && step_ratio <= 1.0) {
        return Err(Error::invalid("step ratio must lie in (0, 1]"));
    }
    let direct: Vec<f64> = (0..reps)
        .map(|r| sample_last_passage(m_lines, n, n * step_ratio, derive(seed, 2 * r as u64)))
        .collect::<Result<_>>()?;
    let scaled: Vec<f64> = (0..reps)
        .map(|r| {
            sample_last_passage(m_lines, 1.0, step_ratio, derive(seed, 2 * r as u64 + 1)).map(|l| n.sqrt() * l)
        })
        .collect::<Result<_>>()?;
    ks_two_sample(&direct, &scaled)
}
