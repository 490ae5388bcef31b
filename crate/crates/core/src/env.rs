//! Centered, unit-variance i.i.d. environments.
//!
//! A generated field never stores its values. Every line along axis 0 (a "row")
//! is an independent ChaCha8 stream keyed by the field seed and the remaining
//! coordinates, so a row can be regenerated on demand and a DP sweep only keeps
//! the rows it is currently combining.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive, splitmix64};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Law of a single environment variable. Every kind has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistSpec {
    Gaussian,
    Rademacher,
    /// `Exp(1) - 1`.
    CenteredExponential,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    CenteredUniform,
}

impl DistSpec {
    pub const ALL: [DistSpec; 4] = [
        DistSpec::Gaussian,
        DistSpec::Rademacher,
        DistSpec::CenteredExponential,
        DistSpec::CenteredUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistSpec::Gaussian => "gaussian",
            DistSpec::Rademacher => "rademacher",
            DistSpec::CenteredExponential => "centered_exponential",
            DistSpec::CenteredUniform => "centered_uniform",
        }
    }

    fn tag(self) -> u64 {
        match self {
            DistSpec::Gaussian => 1,
            DistSpec::Rademacher => 2,
            DistSpec::CenteredExponential => 3,
            DistSpec::CenteredUniform => 4,
        }
    }

    /// Open interval of inverse temperatures with a finite exponential moment.
    pub fn beta_range(self) -> (f64, f64) {
        match self {
            DistSpec::CenteredExponential => (f64::NEG_INFINITY, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Draws one value from the law.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DistSpec::Gaussian => rng.sample(StandardNormal),
            DistSpec::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistSpec::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            DistSpec::CenteredUniform => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistSpec::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown distribution `{s}`")))
    }
}

/// `lambda(beta) = log E[exp(beta * eta)]` in closed form.
pub fn log_mgf(dist: DistSpec, beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::Domain {
            what: format!("beta = {beta}"),
            bound: "beta must be finite".into(),
        });
    }
    let (lo, hi) = dist.beta_range();
    if beta <= lo || beta >= hi {
        return Err(Error::Domain {
            what: format!("beta = {beta} for {dist}"),
            bound: format!("beta < {hi}"),
        });
    }
    Ok(match dist {
        DistSpec::Gaussian => 0.5 * beta * beta,
        DistSpec::Rademacher => {
            let b = beta.abs();
            b + (-2.0 * b).exp().ln_1p() - std::f64::consts::LN_2
        }
        DistSpec::CenteredExponential => -beta - (-beta).ln_1p(),
        DistSpec::CenteredUniform => {
            let x = (beta * SQRT3).abs();
            if x < 1e-4 {
                // sinh(x)/x = 1 + x^2/6 + x^4/120
                let x2 = x * x;
                (x2 / 6.0 + x2 * x2 / 120.0).ln_1p()
            } else if x < 1.0 {
                (x.sinh() / x).ln()
            } else {
                x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2 - x.ln()
            }
        }
    })
}

#[derive(Debug, Clone)]
enum Source {
    Random { dist: DistSpec, seed: u64 },
    Explicit(Arc<[f64]>),
}

/// An i.i.d. field on the lattice box `[0, shape[0]) x ... x [0, shape[k])`.
///
/// Axis 0 is the long ("time") axis. Values are addressed by row: the row with
/// transverse coordinates `rest` holds the values at `(0, rest), (1, rest), ...`.
#[derive(Debug, Clone)]
pub struct EnvField {
    shape: Vec<usize>,
    source: Source,
}

/// Generates a field whose value at each site is a pure function of
/// `(dist, seed, site)`.
pub fn generate_field(dist: DistSpec, shape: &[usize], seed: u64) -> Result<EnvField> {
    check_shape(shape)?;
    Ok(EnvField {
        shape: shape.to_vec(),
        source: Source::Random { dist, seed },
    })
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("shape needs at least one axis".into()));
    }
    if shape.iter().any(|&e| e == 0) {
        return Err(Error::InvalidShape(format!(
            "every extent must be >= 1, got {shape:?}"
        )));
    }
    Ok(())
}

impl EnvField {
    /// Field with explicitly given values, stored with axis 0 fastest.
    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(EnvField {
            shape: shape.to_vec(),
            source: Source::Explicit(values.into()),
        })
    }

    /// Field with every value equal to `c`.
    pub fn constant(shape: &[usize], c: f64) -> Result<Self> {
        let len: usize = shape.iter().product();
        Self::from_values(shape, vec![c; len])
    }

    /// Planar field from a closure `(i, j) -> value`.
    pub fn from_fn_2d(n0: usize, n1: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n0 * n1);
        for j in 0..n1 {
            for i in 0..n0 {
                values.push(f(i, j));
            }
        }
        Self::from_values(&[n0, n1], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn dist(&self) -> Option<DistSpec> {
        match self.source {
            Source::Random { dist, .. } => Some(dist),
            Source::Explicit(_) => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            Source::Random { seed, .. } => Some(seed),
            Source::Explicit(_) => None,
        }
    }

    /// True when an explicit field holds a NaN. Generated fields never do.
    pub fn contains_nan(&self) -> bool {
        match &self.source {
            Source::Random { .. } => false,
            Source::Explicit(values) => values.iter().any(|v| v.is_nan()),
        }
    }

    /// Number of sites along axis 0.
    pub fn row_len(&self) -> usize {
        self.shape[0]
    }

    /// Fills `buf` with the first `buf.len()` values of the row at transverse
    /// coordinates `rest`.
    pub fn fill_row(&self, rest: &[usize], buf: &mut [f64]) {
        debug_assert_eq!(rest.len() + 1, self.shape.len());
        debug_assert!(buf.len() <= self.shape[0]);
        match &self.source {
            Source::Random { dist, seed } => {
                let mut rng = row_rng(*dist, *seed, rest);
                for v in buf.iter_mut() {
                    *v = dist.sample(&mut rng);
                }
            }
            Source::Explicit(values) => {
                let mut offset = 0;
                let mut stride = self.shape[0];
                for (k, &c) in rest.iter().enumerate() {
                    offset += c * stride;
                    stride *= self.shape[k + 1];
                }
                buf.copy_from_slice(&values[offset..offset + buf.len()]);
            }
        }
    }

    /// The full row at transverse coordinates `rest`.
    pub fn row(&self, rest: &[usize]) -> Vec<f64> {
        let mut buf = vec![0.0; self.shape[0]];
        self.fill_row(rest, &mut buf);
        buf
    }

    /// Value at a lattice site. Regenerates the row prefix, so use rows in loops.
    pub fn value(&self, coord: &[usize]) -> Result<f64> {
        if coord.len() != self.shape.len() || coord.iter().zip(&self.shape).any(|(c, s)| c >= s) {
            return Err(Error::OutOfBounds {
                end: coord.to_vec(),
                shape: self.shape.clone(),
            });
        }
        if let Source::Explicit(values) = &self.source {
            let mut offset = 0;
            let mut stride = 1;
            for (k, &c) in coord.iter().enumerate() {
                offset += c * stride;
                stride *= self.shape[k];
            }
            return Ok(values[offset]);
        }
        let mut buf = vec![0.0; coord[0] + 1];
        self.fill_row(&coord[1..], &mut buf);
        Ok(buf[coord[0]])
    }

    /// Copies every value into an explicit field.
    pub fn materialize(&self) -> EnvField {
        let n0 = self.shape[0];
        let rows: usize = self.shape[1..].iter().product();
        let mut values = vec![0.0; n0 * rows];
        let mut rest = vec![0usize; self.shape.len() - 1];
        for r in 0..rows {
            self.fill_row(&rest, &mut values[r * n0..(r + 1) * n0]);
            for (k, c) in rest.iter_mut().enumerate() {
                *c += 1;
                if *c < self.shape[k + 1] {
                    break;
                }
                *c = 0;
            }
        }
        EnvField {
            shape: self.shape.clone(),
            source: Source::Explicit(values.into()),
        }
    }

    /// Planar field with the two axes swapped.
    pub fn transposed(&self) -> Result<EnvField> {
        if self.ndim() != 2 {
            return Err(Error::InvalidShape("transpose needs a planar field".into()));
        }
        let (n0, n1) = (self.shape[0], self.shape[1]);
        let dense = self.materialize();
        EnvField::from_fn_2d(n1, n0, |i, j| dense.value(&[j, i]).expect("in range"))
    }

    /// Copy of a planar field with one site changed.
    pub fn with_value(&self, coord: &[usize], v: f64) -> Result<EnvField> {
        let dense = self.materialize();
        dense.value(coord)?;
        let Source::Explicit(values) = &dense.source else {
            unreachable!()
        };
        let mut values = values.to_vec();
        let mut offset = 0;
        let mut stride = 1;
        for (k, &c) in coord.iter().enumerate() {
            offset += c * stride;
            stride *= self.shape[k];
        }
        values[offset] = v;
        EnvField::from_values(&self.shape, values)
    }
}

fn row_rng(dist: DistSpec, seed: u64, rest: &[usize]) -> ChaCha8Rng {
    let mut key = 0x6A09_E667_F3BC_C908u64;
    for &c in rest {
        key = splitmix64(key ^ c as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, dist.tag()));
    rng.set_stream(key);
    rng
}
