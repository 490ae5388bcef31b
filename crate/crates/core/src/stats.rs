//! Summary statistics, Kolmogorov-Smirnov distances and least squares.

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::error::{Error, Result};

/// Mean, standard deviation and extremes of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::invalid("summary of an empty sample"));
        }
        if xs.iter().any(|x| x.is_nan()) {
            return Err(Error::Data("sample contains NaN".into()));
        }
        Ok(Summary {
            count: xs.len(),
            mean: xs.mean(),
            std_dev: if xs.len() > 1 { xs.std_dev() } else { 0.0 },
            min: xs.min(),
            max: xs.max(),
        })
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        self.std_dev / (self.count as f64).sqrt()
    }
}

/// Empirical quantile (type 8, median-unbiased) for `p` in `[0, 1]`.
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("quantile needs a non-empty sample and p in [0, 1]"));
    }
    Ok(Data::new(xs.to_vec()).quantile(p))
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample"));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Data("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_n(x) - F(x)|` against a continuous reference CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(xs)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// `sup_x |F_n(x) - G_m(x)|` between two empirical CDFs, ties handled jointly.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let a = sorted(xs)?;
    let b = sorted(ys)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic critical value `sqrt(-ln(alpha/2) / 2) * sqrt((n+m)/(nm))`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Asymptotic one-sample critical value `sqrt(-ln(alpha/2) / (2n))`.
pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / (2.0 * n as f64)).sqrt()
}

/// Ordinary least squares fit `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when there are only two points.
    pub slope_std_err: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("regression inputs differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("regression needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * (1.0 + mx * mx) * n {
        return Err(Error::invalid("regression abscissae are degenerate"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_err = if xs.len() > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert!(Summary::of(&[]).is_err());
        assert!(Summary::of(&[f64::NAN]).is_err());
        assert_eq!(Summary::of(&[7.0]).unwrap().std_dev, 0.0);
    }

    #[test]
    fn quantile_median() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        // Points (i + 0.5) / n against U(0, 1): distance exactly 1 / (2n).
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ks_two_sample_known() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn critical_values() {
        // c(0.05) = 1.3581
        assert!((ks_critical_two_sample(100, 100, 0.05) - 1.358_1 * 0.141_421).abs() < 1e-3);
        assert!((ks_critical_one_sample(100, 0.05) - 0.135_81).abs() < 1e-4);
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!(f.slope_std_err < 1e-12);
    }

    #[test]
    fn regression_refusals() {
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn ks_is_a_symmetric_distance(
            a in prop::collection::vec(-10.0f64..10.0, 1..40),
            b in prop::collection::vec(-10.0f64..10.0, 1..40),
        ) {
            let d = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
            prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        }
    }
}
