//! Dyadic quantile coupling of a random walk with Gaussian partial sums.
//!
//! The Gaussian path is built top-down by Brownian-bridge midpoints. Every
//! midpoint is driven by one uniform `U = Phi(Z)`; the walk uses the same `U`
//! in the exact conditional quantile function of its half-block sum given the
//! block sum. Marginals are therefore exact for both paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::env::DistSpec;
use crate::error::{Error, Result};

pub const MAX_LEVELS: u32 = 22;

/// Coupled partial sums `S_k` (walk) and `T_k` (Gaussian), `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPaths {
    pub n: usize,
    pub walk: Vec<f64>,
    pub brownian: Vec<f64>,
    pub dist: DistSpec,
}

/// Smallest `k` in a unimodal discrete law with `P(X <= k) >= u`. The law is
/// given by its mode, support and successive ratio `p(k+1) / p(k)`; the pmf is
/// built outward from the mode until the terms are negligible.
fn unimodal_quantile(mode: i64, lo: i64, hi: i64, ratio: impl Fn(i64) -> f64, u: f64) -> i64 {
    const NEGLIGIBLE: f64 = 1e-20;
    let mut right = vec![1.0];
    let mut p = 1.0;
    let mut k = mode;
    while k < hi {
        p *= ratio(k);
        if p < NEGLIGIBLE {
            break;
        }
        right.push(p);
        k += 1;
    }
    let mut left = Vec::new();
    let mut p = 1.0;
    let mut k = mode;
    while k > lo {
        p /= ratio(k - 1);
        if p < NEGLIGIBLE {
            break;
        }
        left.push(p);
        k -= 1;
    }
    let total: f64 = left.iter().sum::<f64>() + right.iter().sum::<f64>();
    let start = mode - left.len() as i64;
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in left.iter().rev().chain(right.iter()).enumerate() {
        acc += w;
        if acc >= target {
            return start + i as i64;
        }
    }
    mode + right.len() as i64 - 1
}

/// Quantile of Binomial(n, 1/2).
fn binomial_half_quantile(n: i64, u: f64) -> i64 {
    unimodal_quantile(n / 2, 0, n, |k| (n - k) as f64 / (k + 1) as f64, u)
}

/// Quantile of the number of successes among `m` draws without replacement
/// from `2m` items containing `k` successes.
fn hypergeometric_half_quantile(m: i64, k: i64, u: f64) -> i64 {
    let lo = (k - m).max(0);
    let hi = k.min(m);
    let mode = (((m + 1) * (k + 1)) / (2 * m + 2)).clamp(lo, hi);
    unimodal_quantile(
        mode,
        lo,
        hi,
        |x| ((k - x) * (m - x)) as f64 / ((x + 1) * (m - k + x + 1)) as f64,
        u,
    )
}

/// Couples `n = 2^l_levels` steps of the environment law with Gaussian steps.
pub fn dyadic_coupling(dist: DistSpec, l_levels: u32, seed: u64) -> Result<CoupledPaths> {
    if !matches!(dist, DistSpec::Gaussian | DistSpec::Rademacher) {
        return Err(Error::Unsupported(format!(
            "dyadic coupling needs an exact conditional quantile; {dist} has none"
        )));
    }
    if l_levels > MAX_LEVELS {
        return Err(Error::invalid(format!("at most {MAX_LEVELS} levels, got {l_levels}")));
    }
    let n = 1usize << l_levels;
    let normal = Normal::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    let rademacher = dist == DistSpec::Rademacher;

    let z: f64 = StandardNormal.sample(&mut rng);
    t[n] = (n as f64).sqrt() * z;
    s[n] = if rademacher {
        (2 * binomial_half_quantile(n as i64, normal.cdf(z)) - n as i64) as f64
    } else {
        t[n]
    };

    let mut block = n;
    while block > 1 {
        let m = block / 2;
        let half_sd = (m as f64 / 2.0).sqrt();
        for a in (0..n).step_by(block) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let tb = t[a + block] - t[a];
            t[a + m] = t[a] + 0.5 * tb + half_sd * z;
            s[a + m] = if rademacher {
                let sb = (s[a + block] - s[a]) as i64;
                let ups = (sb + block as i64) / 2;
                let first = hypergeometric_half_quantile(m as i64, ups, normal.cdf(z));
                s[a] + (2 * first - m as i64) as f64
            } else {
                t[a + m]
            };
        }
        block = m;
    }
    Ok(CoupledPaths {
        n,
        walk: s,
        brownian: t,
        dist,
    })
}

/// `max_{k <= n} |S_k - T_k|`.
pub fn sup_gap(paths: &CoupledPaths) -> f64 {
    paths
        .walk
        .iter()
        .zip(&paths.brownian)
        .fold(0.0, |m, (s, t)| m.max((s - t).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::replicate_seed;
    use crate::stats::ks_one_sample;
    use statrs::distribution::{Binomial, DiscreteCDF, Hypergeometric};

    #[test]
    fn gaussian_coupling_is_the_identity() {
        let p = dyadic_coupling(DistSpec::Gaussian, 12, 4).unwrap();
        assert_eq!(p.walk, p.brownian);
        assert_eq!(sup_gap(&p), 0.0);
    }

    #[test]
    fn unsupported_laws_and_sizes() {
        assert!(matches!(
            dyadic_coupling(DistSpec::CenteredExponential, 4, 1),
            Err(Error::Unsupported(_))
        ));
        assert!(dyadic_coupling(DistSpec::Rademacher, 23, 1).is_err());
        let one = dyadic_coupling(DistSpec::Rademacher, 0, 1).unwrap();
        assert_eq!(one.walk.len(), 2);
        assert!(one.walk[1].abs() == 1.0);
    }

    #[test]
    fn rademacher_steps_and_parity() {
        let p = dyadic_coupling(DistSpec::Rademacher, 10, 9).unwrap();
        assert_eq!(p.walk[0], 0.0);
        assert_eq!(p.brownian[0], 0.0);
        for (k, w) in p.walk.windows(2).enumerate() {
            assert_eq!((w[1] - w[0]).abs(), 1.0, "step {k}");
        }
        for (k, s) in p.walk.iter().enumerate() {
            assert_eq!(s.fract(), 0.0);
            assert_eq!((*s as i64 - k as i64).rem_euclid(2), 0);
        }
        assert!(sup_gap(&p) >= (p.walk[p.n] - p.brownian[p.n]).abs());
    }

    #[test]
    fn block_sums_refine_exactly() {
        let p = dyadic_coupling(DistSpec::Rademacher, 8, 2).unwrap();
        let mut size = p.n;
        while size > 1 {
            for a in (0..p.n).step_by(size) {
                let whole = p.walk[a + size] - p.walk[a];
                let halves = (p.walk[a + size / 2] - p.walk[a]) + (p.walk[a + size] - p.walk[a + size / 2]);
                assert_eq!(whole, halves);
            }
            size /= 2;
        }
    }

    fn discrete_ks(samples: &[i64], cdf: impl Fn(i64) -> f64) -> f64 {
        let mut v = samples.to_vec();
        v.sort_unstable();
        let n = v.len() as f64;
        let mut d = 0.0f64;
        let mut i = 0;
        while i < v.len() {
            let x = v[i];
            let before = i as f64 / n;
            while i < v.len() && v[i] == x {
                i += 1;
            }
            let after = i as f64 / n;
            d = d.max((after - cdf(x)).abs()).max((before - cdf(x - 1)).abs());
        }
        d
    }

    #[test]
    fn quantiles_match_statrs() {
        let bin = Binomial::new(0.5, 40).unwrap();
        for i in 1..200 {
            let u = i as f64 / 200.0;
            let k = binomial_half_quantile(40, u);
            assert!(bin.cdf(k as u64) >= u - 1e-12);
            assert!(k == 0 || bin.cdf(k as u64 - 1) < u + 1e-12);
            let h = Hypergeometric::new(30, 11, 15).unwrap();
            let x = hypergeometric_half_quantile(15, 11, u);
            assert!(h.cdf(x as u64) >= u - 1e-12);
            assert!(x == 0 || h.cdf(x as u64 - 1) < u + 1e-12);
        }
    }

    #[test]
    fn endpoint_law_is_binomial() {
        // Critical value of the one-sample KS test at alpha = 0.01 is 1.63 / sqrt(n).
        let l = 10;
        let n = 1 << l;
        let ends: Vec<i64> = (0..10_000)
            .map(|i| {
                let p = dyadic_coupling(DistSpec::Rademacher, l, replicate_seed(3, i)).unwrap();
                ((p.walk[n] as i64) + n as i64) / 2
            })
            .collect();
        let bin = Binomial::new(0.5, n as u64).unwrap();
        let d = discrete_ks(&ends, |k| if k < 0 { 0.0 } else { bin.cdf(k as u64) });
        assert!(d < 1.63 / 100.0, "{d}");
    }

    #[test]
    fn increments_have_exact_marginals() {
        let normal = Normal::standard();
        let p = dyadic_coupling(DistSpec::Rademacher, 14, 5).unwrap();
        let gauss: Vec<f64> = p.brownian.windows(2).map(|w| w[1] - w[0]).collect();
        let d = ks_one_sample(&gauss, |x| normal.cdf(x)).unwrap();
        assert!(d < 1.63 / (gauss.len() as f64).sqrt(), "{d}");
        let ups = p.walk.windows(2).filter(|w| w[1] > w[0]).count() as f64;
        let n = gauss.len() as f64;
        assert!((ups / n - 0.5).abs() < 3.0 * 0.5 / n.sqrt());
    }

    #[test]
    fn gap_is_much_smaller_than_the_walk() {
        let p = dyadic_coupling(DistSpec::Rademacher, 16, 1).unwrap();
        let gap = sup_gap(&p);
        assert!(gap < 0.1 * (p.n as f64).sqrt(), "{gap}");
    }
}
