//! Directed-path dynamic programs over an environment field.
//!
//! Both last-passage times and log partition functions obey
//! `V(x) = w(eta(x)) (+) V(x - e_k)` over the incoming directions, with the
//! origin fixed at 0 and its own environment value ignored. They differ only in
//! the reduction: `max` for passage times, log-sum-exp for partition functions.

use crate::env::EnvField;
use crate::error::{Error, Result};

/// Reduction and site weight of a path DP.
pub trait PathSemiring: Copy {
    /// Combines two predecessor values.
    fn plus(self, a: f64, b: f64) -> f64;
    /// Contribution of a site with environment value `eta`.
    fn weight(self, eta: f64) -> f64;
}

/// Max-plus: last-passage times.
#[derive(Debug, Clone, Copy)]
pub struct MaxPlus;

impl PathSemiring for MaxPlus {
    #[inline(always)]
    fn plus(self, a: f64, b: f64) -> f64 {
        a.max(b)
    }
    #[inline(always)]
    fn weight(self, eta: f64) -> f64 {
        eta
    }
}

/// Log-sum-exp at inverse temperature `beta`: unnormalized log partition functions.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    pub beta: f64,
}

impl PathSemiring for LogSumExp {
    #[inline(always)]
    fn plus(self, a: f64, b: f64) -> f64 {
        log_add_exp(a, b)
    }
    #[inline(always)]
    fn weight(self, eta: f64) -> f64 {
        self.beta * eta
    }
}

/// `log(e^a + e^b)`, exact for infinite arguments and never NaN for finite ones.
#[inline(always)]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum e^x)` over a slice; `-inf` when empty.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

pub(crate) fn check_inside(field: &EnvField, end: &[usize]) -> Result<()> {
    let shape = field.shape();
    if end.len() != shape.len() || end.iter().zip(shape).any(|(e, s)| e >= s) {
        return Err(Error::OutOfBounds {
            end: end.to_vec(),
            shape: shape.to_vec(),
        });
    }
    Ok(())
}

/// Row-by-row sweep of a planar DP. Row `j` holds `V(i, j)` for `i < len`.
///
/// Rows may shrink as the sweep advances, which the anti-diagonal profiles use.
pub struct PlanarSweep<'a, S: PathSemiring> {
    field: &'a EnvField,
    ring: S,
    prev: Vec<f64>,
    cur: Vec<f64>,
    eta: Vec<f64>,
    next_row: usize,
}

impl<'a, S: PathSemiring> PlanarSweep<'a, S> {
    pub fn new(field: &'a EnvField, ring: S) -> Self {
        PlanarSweep {
            field,
            ring,
            prev: Vec::new(),
            cur: Vec::new(),
            eta: Vec::new(),
            next_row: 0,
        }
    }

    /// Index of the row the next call to [`advance`](Self::advance) computes.
    pub fn next_row(&self) -> usize {
        self.next_row
    }

    /// Computes the next row over `len` sites; `len` may not exceed the field
    /// width or the previous row's length.
    pub fn advance(&mut self, len: usize) -> &[f64] {
        let j = self.next_row;
        debug_assert!(j < self.field.shape()[1]);
        debug_assert!(len >= 1 && len <= self.field.row_len());
        debug_assert!(j == 0 || len <= self.cur.len());
        let ring = self.ring;
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.eta.resize(len, 0.0);
        self.field.fill_row(&[j], &mut self.eta);
        self.cur.clear();
        self.cur.reserve(len);
        if j == 0 {
            let mut acc = 0.0;
            self.cur.push(acc);
            for &e in &self.eta[1..] {
                acc += ring.weight(e);
                self.cur.push(acc);
            }
        } else {
            let mut left = ring.weight(self.eta[0]) + self.prev[0];
            self.cur.push(left);
            for i in 1..len {
                left = ring.weight(self.eta[i]) + ring.plus(left, self.prev[i]);
                self.cur.push(left);
            }
        }
        self.next_row += 1;
        &self.cur
    }

    pub fn current(&self) -> &[f64] {
        &self.cur
    }
}

/// Value of the DP at `end` in any dimension `end.len() >= 1`.
///
/// Transverse coordinates are visited in lexicographic order; only the slabs
/// with the last coordinate equal to `c` and `c - 1` are kept.
pub fn sweep_to<S: PathSemiring>(field: &EnvField, end: &[usize], ring: S) -> Result<f64> {
    check_inside(field, end)?;
    let len = end[0] + 1;
    let trans = &end[1..];
    if trans.is_empty() {
        let mut eta = vec![0.0; len];
        field.fill_row(&[], &mut eta);
        return Ok(eta[1..].iter().map(|&e| ring.weight(e)).sum());
    }
    let k = trans.len();
    // Slab: all coordinates except the last transverse one.
    let slab_dims: Vec<usize> = trans[..k - 1].iter().map(|&e| e + 1).collect();
    let slab_rows: usize = slab_dims.iter().product();
    let mut strides = vec![1usize; k - 1];
    for a in 1..k.saturating_sub(1) {
        strides[a] = strides[a - 1] * slab_dims[a - 1];
    }
    let mut prev_slab = vec![f64::NEG_INFINITY; slab_rows * len];
    let mut cur_slab = vec![f64::NEG_INFINITY; slab_rows * len];
    let mut eta = vec![0.0; len];
    let mut rest = vec![0usize; k];
    for last in 0..=trans[k - 1] {
        rest[k - 1] = last;
        for r in 0..slab_rows {
            // Decode r into the leading transverse coordinates.
            let mut rem = r;
            for a in 0..k - 1 {
                rest[a] = rem % slab_dims[a];
                rem /= slab_dims[a];
            }
            field.fill_row(&rest, &mut eta);
            let (before, tail) = cur_slab.split_at_mut(r * len);
            let row = &mut tail[..len];
            let at_origin = rest.iter().all(|&c| c == 0);
            for i in 0..len {
                let mut acc = if i > 0 { row[i - 1] } else { f64::NEG_INFINITY };
                for a in 0..k - 1 {
                    if rest[a] > 0 {
                        let p = (r - strides[a]) * len + i;
                        acc = ring.plus(acc, before[p]);
                    }
                }
                if last > 0 {
                    acc = ring.plus(acc, prev_slab[r * len + i]);
                }
                row[i] = if i == 0 && at_origin {
                    0.0
                } else {
                    ring.weight(eta[i]) + acc
                };
            }
        }
        std::mem::swap(&mut prev_slab, &mut cur_slab);
    }
    let mut idx = 0;
    let mut stride = 1;
    for a in 0..k - 1 {
        idx += trans[a] * stride;
        stride *= slab_dims[a];
    }
    Ok(prev_slab[idx * len + end[0]])
}

/// `log C(n + m, m)`.
pub fn log_binomial(n: u64, m: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma((n + m) as f64 + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma(m as f64 + 1.0)
}

/// Log of the number of directed lattice paths from the origin to `end`.
pub fn log_path_count(end: &[usize]) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let total: usize = end.iter().sum();
    ln_gamma(total as f64 + 1.0) - end.iter().map(|&e| ln_gamma(e as f64 + 1.0)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_edges() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(log_add_exp(3.0, f64::NEG_INFINITY), 3.0);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((log_add_exp(1000.0, 1000.0) - 1000.0 - 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_add_exp(-1e300, 1e300), 1e300);
        assert!(log_add_exp(-800.0, -801.0).is_finite());
    }

    #[test]
    fn log_sum_exp_matches_pairwise() {
        let xs = [0.3, -2.0, 5.5, 1.0];
        let pair = xs[1..].iter().fold(xs[0], |a, &b| log_add_exp(a, b));
        assert!((log_sum_exp(&xs) - pair).abs() < 1e-13);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn path_counts() {
        assert!((log_binomial(2, 1) - 3f64.ln()).abs() < 1e-12);
        assert!((log_path_count(&[2, 1, 1]) - 12f64.ln()).abs() < 1e-12);
        assert!((log_path_count(&[8, 8]) - 12870f64.ln()).abs() < 1e-10);
        assert!(log_binomial(100_000, 100_000).is_finite());
    }
}
