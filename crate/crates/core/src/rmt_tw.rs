//! GUE top eigenvalues and the Tracy-Widom `F_2` law.
//!
//! GUE convention: off-diagonal entries have `E|H_ij|^2 = 1` and diagonal
//! entries are `N(0, 1)`, so the spectrum fills `[-2 sqrt(n), 2 sqrt(n)]` and
//! `n^{1/6} (lambda_max - 2 sqrt(n))` converges to `F_2`. The Householder
//! tridiagonal form has diagonal `N(0, 1)` and sub-diagonal `chi_{2k} / sqrt(2)`
//! for `k = n-1, ..., 1`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::airy_ai_large;
use crate::stats::{ks_one_sample, ks_two_sample};

/// Sturm bisection stops once the bracket is this narrow.
pub const EIGEN_TOL: f64 = 1e-10;

/// Symmetric tridiagonal matrix: `diag` of length `n`, `off` of length `n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Tridiagonal GUE model of size `n`.
    pub fn gue(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("GUE size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        // chi_{2k}^2 / 2 ~ Gamma(k, 1).
        let off = (1..n)
            .rev()
            .map(|k| {
                let g = Gamma::new(k as f64, 1.0).expect("positive shape");
                g.sample(&mut rng).sqrt()
            })
            .collect();
        Ok(Tridiagonal { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence sign count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - b2 / d;
            if d == 0.0 {
                d = -f64::EPSILON * (1.0 + x.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Largest eigenvalue by bisection on the Sturm count.
    pub fn largest_eigenvalue(&self) -> Result<f64> {
        let n = self.len();
        if n == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        let (lo, hi) = self.gershgorin();
        let (mut lo, mut hi) = (lo - 1.0, hi + 1.0);
        for _ in 0..200 {
            if hi - lo <= EIGEN_TOL {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) == n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi - lo <= EIGEN_TOL * (1.0 + hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        Err(Error::Numeric(format!("eigenvalue bisection stalled at [{lo}, {hi}]")))
    }
}

/// Largest eigenvalue of an `n x n` GUE matrix; concentrates at `2 sqrt(n)`.
pub fn sample_gue_top(n: usize, seed: u64) -> Result<f64> {
    Tridiagonal::gue(n, seed)?.largest_eigenvalue()
}

/// `n^{1/6} (lambda_max - 2 sqrt(n))`.
pub fn sample_gue_rescaled(n: usize, seed: u64) -> Result<f64> {
    let nf = n as f64;
    Ok(nf.powf(1.0 / 6.0) * (sample_gue_top(n, seed)? - 2.0 * nf.sqrt()))
}

/// Tabulated `F_2(s) = exp(-I(s))` with `I(s) = int_s^inf (x - s) u(x)^2 dx`
/// and `v(s) = -I'(s) = int_s^inf u(x)^2 dx`, `u` the Hastings-McLeod solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwTable {
    pub s_grid: Vec<f64>,
    pub cdf: Vec<f64>,
    /// `I(s) = -log F_2(s)`, kept separately for accurate tails.
    pub log_cdf_neg: Vec<f64>,
    /// `v(s) = -d/ds I(s)`.
    pub v: Vec<f64>,
    pub built_tolerance: f64,
}

/// Seed point of the backward integration.
pub const TW_SEED_POINT: f64 = 8.0;

type State = [f64; 4];

/// `y = (u, u', I, v)` in the variable `s`.
fn painleve_rhs(s: f64, y: &State) -> State {
    [y[1], 2.0 * y[0].powi(3) + s * y[0], -y[3], -y[0] * y[0]]
}

// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince step; returns the 5th-order state and a scaled error norm.
fn dp_step(s: f64, y: &State, h: f64, tol: f64) -> (State, f64) {
    let mut k = [[0.0; 4]; 7];
    for stage in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            for c in 0..4 {
                ys[c] += h * A[stage][j] * kj[c];
            }
        }
        k[stage] = painleve_rhs(s + C[stage] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for c in 0..4 {
        let (mut d5, mut d4) = (0.0, 0.0);
        for stage in 0..7 {
            d5 += B5[stage] * k[stage][c];
            d4 += B4[stage] * k[stage][c];
        }
        y5[c] += h * d5;
        // Mostly relative: the seed values are of order 1e-8.
        let scale = tol * (1e-10 + y[c].abs().max(y5[c].abs()));
        err = err.max((h * (d5 - d4)).abs() / scale);
    }
    (y5, err)
}

/// Below this point the backward integration loses the Hastings-McLeod
/// separatrix (perturbations grow like `exp(2 sqrt(2)/3 |s|^{3/2})`), so the
/// table continues `I` and `v` by integrating the asymptotic expansion of `u`.
pub const TW_SWITCH_POINT: f64 = -7.0;

fn integrate_to(s: &mut f64, y: &mut State, h: &mut f64, target: f64, tol: f64, min_step: f64) -> Result<()> {
    while *s > target {
        let clamped = *h < target - *s;
        let step = if clamped { target - *s } else { *h };
        let (y_new, err) = dp_step(*s, y, step, tol);
        if !err.is_finite() {
            return Err(Error::Numeric(format!("Painleve integration blew up near s = {s}")));
        }
        if err <= 1.0 {
            *s = if clamped { target } else { *s + step };
            *y = y_new;
            if clamped {
                continue;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        *h = (step * factor).min(-min_step);
        if err > 1.0 && step.abs() <= min_step {
            return Err(Error::Numeric(format!("step size underflow at s = {s}")));
        }
    }
    Ok(())
}

/// `u(x)^2 = -(x/2) sum_k c_k x^{-3k}` from
/// `u(x) = sqrt(-x/2) (1 + x^{-3}/8 - 73 x^{-6}/128 + 10657 x^{-9}/1024 + ...)`.
const U2_COEFFS: [f64; 4] = {
    let (a, b, c) = (1.0 / 8.0, -73.0 / 128.0, 10657.0 / 1024.0);
    [1.0, 2.0 * a, a * a + 2.0 * b, 2.0 * a * b + 2.0 * c]
};

/// Antiderivatives of `u^2` and `x u^2` for `x < 0`.
fn u2_antiderivatives(x: f64) -> (f64, f64) {
    let (mut g1, mut g2) = (0.0, 0.0);
    for (k, c) in U2_COEFFS.iter().enumerate() {
        let p1 = 2.0 - 3.0 * k as f64;
        let p2 = 3.0 - 3.0 * k as f64;
        g1 += -0.5 * c * x.powf(p1) / p1;
        g2 += if k == 1 { -0.5 * c * x.abs().ln() } else { -0.5 * c * x.powf(p2) / p2 };
    }
    (g1, g2)
}

/// `(I(s), v(s))` for `s < s0` from their values at `s0`.
fn continue_asymptotically(s0: f64, i0: f64, v0: f64, s: f64) -> (f64, f64) {
    let (g1a, g2a) = u2_antiderivatives(s0);
    let (g1b, g2b) = u2_antiderivatives(s);
    let int_u2 = g1a - g1b;
    let int_xu2 = g2a - g2b;
    (i0 + (s0 - s) * v0 + int_xu2 - s * int_u2, v0 + int_u2)
}

impl TwTable {
    /// Integrates Painleve II backward from `s = 8` and records `F_2` on
    /// `points` equally spaced abscissae covering `[s_min, s_max]`.
    pub fn build(s_min: f64, s_max: f64, points: usize, tol: f64) -> Result<Self> {
        if !(s_min < s_max) || s_max > TW_SEED_POINT || s_min < -20.0 {
            return Err(Error::invalid(format!(
                "table range must satisfy -20 <= s_min < s_max <= {TW_SEED_POINT}"
            )));
        }
        if points < 2 {
            return Err(Error::invalid("table needs at least two points"));
        }
        if !(tol >= 1e-14 && tol <= 1e-3) {
            return Err(Error::invalid(format!("tolerance {tol} outside [1e-14, 1e-3]")));
        }
        let (ai, aip) = airy_ai_large(TW_SEED_POINT);
        let x0 = TW_SEED_POINT;
        // Closed forms for the Airy tail: int Ai^2 = Ai'^2 - x Ai^2, int (t - x) Ai^2 = -Ai Ai'.
        let mut y: State = [ai, aip, -ai * aip, aip * aip - x0 * ai * ai];
        let mut s = x0;
        let spacing = (s_max - s_min) / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).rev().map(|i| s_min + spacing * i as f64).collect();
        let mut out_i = Vec::with_capacity(points);
        let mut out_v = Vec::with_capacity(points);
        let mut h: f64 = -0.01;
        let min_step = 1e-12;
        let mut anchor: Option<(f64, f64, f64)> = None;
        for &target in &grid {
            if target < TW_SWITCH_POINT {
                if s > TW_SWITCH_POINT {
                    integrate_to(&mut s, &mut y, &mut h, TW_SWITCH_POINT, tol, min_step)?;
                }
                let (s0, i0, v0) = *anchor.get_or_insert((s, y[2], y[3]));
                let (i, v) = continue_asymptotically(s0, i0, v0, target);
                out_i.push(i);
                out_v.push(v);
                continue;
            }
            integrate_to(&mut s, &mut y, &mut h, target, tol, min_step)?;
            out_i.push(y[2]);
            out_v.push(y[3]);
        }
        let s_grid: Vec<f64> = grid.into_iter().rev().collect();
        out_i.reverse();
        out_v.reverse();
        let cdf: Vec<f64> = out_i.iter().map(|i| (-i).exp()).collect();
        let table = TwTable {
            s_grid,
            cdf,
            log_cdf_neg: out_i,
            v: out_v,
            built_tolerance: tol,
        };
        table.check()?;
        Ok(table)
    }

    /// Monotone and bounded in `[0, 1]`.
    fn check(&self) -> Result<()> {
        if self.cdf.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Numeric("Tracy-Widom table left [0, 1]".into()));
        }
        if self.cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Numeric("Tracy-Widom table is not monotone".into()));
        }
        Ok(())
    }

    pub fn s_min(&self) -> f64 {
        self.s_grid[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.s_grid.last().expect("non-empty table")
    }

    /// `-log F_2(s)` by cubic Hermite interpolation using `I' = -v`.
    pub fn neg_log_cdf(&self, s: f64) -> Result<f64> {
        if !(s >= self.s_min() && s <= self.s_max()) {
            return Err(Error::Domain {
                what: format!("s = {s}"),
                bound: format!("table covers [{}, {}]", self.s_min(), self.s_max()),
            });
        }
        let n = self.s_grid.len();
        let h = (self.s_max() - self.s_min()) / (n - 1) as f64;
        let k = (((s - self.s_min()) / h).floor() as usize).min(n - 2);
        let t = (s - self.s_grid[k]) / h;
        let (p0, p1) = (self.log_cdf_neg[k], self.log_cdf_neg[k + 1]);
        let (m0, m1) = (-self.v[k] * h, -self.v[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1)
    }

    /// `F_2(s)`, clamped to 0 below and 1 above the table.
    pub fn cdf_at(&self, s: f64) -> f64 {
        if s <= self.s_min() {
            return if s == self.s_min() { self.cdf[0] } else { 0.0 };
        }
        if s >= self.s_max() {
            return 1.0;
        }
        (-self.neg_log_cdf(s).expect("inside table")).exp()
    }

    /// `1 - F_2(s)` without cancellation.
    pub fn survival(&self, s: f64) -> Result<f64> {
        Ok(-(-self.neg_log_cdf(s)?).exp_m1())
    }

    /// Inverse CDF by bisection on the interpolant, for `p` inside the table.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > self.cdf[0] && p < *self.cdf.last().expect("non-empty")) {
            return Err(Error::invalid(format!("probability {p} outside the tabulated range")));
        }
        let (mut lo, mut hi) = (self.s_min(), self.s_max());
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_at(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `E[X] = s_max F(s_max) - s_min F(s_min) - int F`, by Simpson's rule
    /// on a refinement of the table.
    pub fn mean(&self) -> f64 {
        let (a, b) = (self.s_min(), self.s_max());
        let n = 2 * 4 * (self.s_grid.len() - 1);
        let h = (b - a) / n as f64;
        let mut acc = self.cdf_at(a) + self.cdf_at(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.cdf_at(a + h * i as f64);
        }
        b * self.cdf_at(b) - a * self.cdf_at(a) - acc * h / 3.0
    }

    /// Two-column CSV `s,cdf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,cdf\n");
        for (s, c) in self.s_grid.iter().zip(&self.cdf) {
            out.push_str(&format!("{s},{c:e}\n"));
        }
        out
    }
}

pub const TW_DEFAULT_RANGE: (f64, f64) = (-10.0, 6.0);
pub const TW_DEFAULT_POINTS: usize = 1601;
pub const TW_DEFAULT_TOL: f64 = 1e-10;

fn table_cache() -> &'static Mutex<HashMap<u64, Arc<TwTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<TwTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Default table over `[-10, 6]` at tolerance `tol`, built once per tolerance.
pub fn tw_table(tol: f64) -> Result<Arc<TwTable>> {
    if let Some(t) = table_cache().lock().expect("cache lock").get(&tol.to_bits()) {
        return Ok(Arc::clone(t));
    }
    let (a, b) = TW_DEFAULT_RANGE;
    let table = Arc::new(TwTable::build(a, b, TW_DEFAULT_POINTS, tol)?);
    table_cache()
        .lock()
        .expect("cache lock")
        .insert(tol.to_bits(), Arc::clone(&table));
    Ok(table)
}

/// `F_2(s)` for `s` in `[-10, 6]`.
pub fn tw_cdf(s: f64, tol: f64) -> Result<f64> {
    if tol < 1e-8 {
        return Err(Error::invalid(format!("tolerance must be at least 1e-8, got {tol}")));
    }
    let table = tw_table(tol)?;
    Ok((-table.neg_log_cdf(s)?).exp())
}

/// Leading right-tail asymptotic `1 - F_2(t) ~ exp(-4/3 t^{3/2}) / (16 pi t^{3/2})`.
pub fn tw_right_tail_asymptotic(t: f64) -> f64 {
    let t32 = t.powf(1.5);
    (-4.0 / 3.0 * t32).exp() / (16.0 * std::f64::consts::PI * t32)
}

/// Provenance of a sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub source: String,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

/// A non-empty sample of reals with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Vec<f64>,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn new(values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a sample must be non-empty"));
        }
        Ok(Sample { values, meta })
    }
}

/// What a sample is compared against.
pub enum Reference<'a> {
    Table(&'a TwTable),
    Sample(&'a Sample),
}

/// One-sample KS distance against a table, or two-sample against a sample.
pub fn ks_distance(sample: &Sample, reference: Reference<'_>) -> Result<f64> {
    match reference {
        Reference::Table(t) => ks_one_sample(&sample.values, |x| t.cdf_at(x)),
        Reference::Sample(other) => ks_two_sample(&sample.values, &other.values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::replicate_seed;
    use crate::stats::ks_critical_two_sample;
    use statrs::distribution::{ContinuousCDF, Normal};

    /// Largest root of the characteristic polynomial by Newton iteration from
    /// above; the polynomial and its derivative come from the three-term recurrence.
    fn dense_top_root(m: &Tridiagonal) -> f64 {
        let (_, hi) = m.gershgorin();
        let mut x = hi + 1.0;
        for _ in 0..500 {
            let (mut p0, mut p1) = (1.0, m.diag[0] - x);
            let (mut d0, mut d1) = (0.0, -1.0);
            for i in 1..m.len() {
                let b2 = m.off[i - 1] * m.off[i - 1];
                let p2 = (m.diag[i] - x) * p1 - b2 * p0;
                let d2 = (m.diag[i] - x) * d1 - p1 - b2 * d0;
                // Rescale to keep the recurrence in range.
                let s = p2.abs().max(1e-300);
                p0 = p1 / s;
                p1 = p2 / s;
                d0 = d1 / s;
                d1 = d2 / s;
            }
            let dx = p1 / d1;
            x -= dx;
            if dx.abs() < 1e-14 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }

    #[test]
    fn sturm_matches_newton_on_characteristic_polynomial() {
        for seed in 0..20 {
            let m = Tridiagonal::gue(50, seed).unwrap();
            let a = m.largest_eigenvalue().unwrap();
            let b = dense_top_root(&m);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn count_below_known_matrix() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let m = Tridiagonal {
            diag: vec![2.0, 2.0],
            off: vec![1.0],
        };
        assert_eq!(m.count_below(0.5), 0);
        assert_eq!(m.count_below(2.0), 1);
        assert_eq!(m.count_below(3.5), 2);
        assert!((m.largest_eigenvalue().unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn one_by_one_is_standard_normal() {
        let xs: Vec<f64> = (0..10_000).map(|i| sample_gue_top(1, replicate_seed(5, i)).unwrap()).collect();
        let normal = Normal::standard();
        let d = ks_one_sample(&xs, |x| normal.cdf(x)).unwrap();
        assert!(d < 0.02, "{d}");
        assert!(sample_gue_top(0, 1).is_err());
    }

    #[test]
    fn edge_location() {
        let n = 2000;
        let mean = (0..200).map(|i| sample_gue_top(n, replicate_seed(11, i)).unwrap()).sum::<f64>() / 200.0;
        let r = mean / (n as f64).sqrt();
        assert!((1.93..=2.01).contains(&r), "{r}");
    }

    #[test]
    fn table_shape() {
        let t = tw_table(1e-10).unwrap();
        assert!(t.cdf[0] < 1e-6);
        assert!(*t.cdf.last().unwrap() > 1.0 - 1e-4);
        assert!(t.cdf.windows(2).all(|w| w[0] <= w[1]));
        let f6 = tw_cdf(6.0, 1e-8).unwrap();
        assert!((1.0 - 1e-4..=1.0).contains(&f6));
        assert!(tw_cdf(7.0, 1e-8).is_err());
        assert!(tw_cdf(0.0, 1e-9 / 10.0).is_err());
    }

    #[test]
    fn known_values() {
        // Airy-kernel Fredholm determinant, 80-node Gauss-Legendre on [s, s + 16].
        let t = tw_table(1e-10).unwrap();
        assert!((t.cdf_at(-2.0) - 0.413_224_142_505_114_5).abs() < 1e-9, "{}", t.cdf_at(-2.0));
        assert!((t.cdf_at(0.0) - 0.969_372_828_355_261_3).abs() < 1e-9, "{}", t.cdf_at(0.0));
        assert!((t.survival(3.0).unwrap() / 2.994_043_392_656_742e-6 - 1.0).abs() < 1e-5);
        assert!((t.survival(4.0).unwrap() / 4.957_912_158_598_532e-8 - 1.0).abs() < 1e-4);
        let mean = t.mean();
        assert!(mean < 0.0);
        assert!((mean + 1.771_086_807_4).abs() < 1e-6, "{mean}");
    }

    #[test]
    fn tolerance_halving_is_stable() {
        let a = TwTable::build(-10.0, 6.0, 161, 1e-8).unwrap();
        let b = TwTable::build(-10.0, 6.0, 161, 5e-9).unwrap();
        for (x, y) in a.cdf.iter().zip(&b.cdf) {
            assert!((x - y).abs() < 10.0 * 1e-8);
        }
    }

    #[test]
    fn left_tail_rate() {
        let r = tw_table(1e-10).unwrap().neg_log_cdf(-8.0).unwrap() / 512.0 * 12.0;
        assert!((0.85..=1.3).contains(&r), "{r}");
    }

    #[test]
    fn right_tail_with_prefactor() {
        let t = tw_table(1e-10).unwrap();
        for s in [3.0, 4.0, 5.0] {
            let r = t.survival(s).unwrap() / tw_right_tail_asymptotic(s);
            assert!((0.7..1.1).contains(&r), "s = {s}: {r}");
        }
    }

    #[test]
    fn table_quantiles_reproduce_the_law() {
        use rand::Rng;
        let t = tw_table(1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|_| t.quantile(rng.random_range(1e-6..0.9999)).unwrap()).collect();
        let sample = Sample::new(xs, SampleMeta::default()).unwrap();
        let d = ks_distance(&sample, Reference::Table(&t)).unwrap();
        assert!(d < 1.5 / (n as f64).sqrt(), "{d}");
    }

    #[test]
    fn halves_of_one_sample_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| sample_gue_rescaled(100, replicate_seed(9, i)).unwrap()).collect();
        let a = Sample::new(xs[..500].to_vec(), SampleMeta::default()).unwrap();
        let b = Sample::new(xs[500..].to_vec(), SampleMeta::default()).unwrap();
        let d = ks_distance(&a, Reference::Sample(&b)).unwrap();
        assert!(d < ks_critical_two_sample(500, 500, 0.01));
        assert!(Sample::new(vec![], SampleMeta::default()).is_err());
    }

    #[test]
    fn gue_edge_is_tracy_widom() {
        let t = tw_table(1e-10).unwrap();
        let xs: Vec<f64> = (0..2000).map(|i| sample_gue_rescaled(1000, replicate_seed(21, i)).unwrap()).collect();
        let d = ks_one_sample(&xs, |x| t.cdf_at(x)).unwrap();
        assert!(d < 0.05, "{d}");
    }
}
