//! Last-passage percolation: the maximal path energy over directed lattice
//! paths, excluding the environment at the origin.

use serde::{Deserialize, Serialize};

use crate::env::EnvField;
use crate::error::{Error, Result};
use crate::lattice::{check_inside, log_path_count, sweep_to, MaxPlus, PathSemiring, PlanarSweep};

/// Target lattice site; axis 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint(pub Vec<usize>);

impl Endpoint {
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("endpoint needs at least one coordinate"));
        }
        Ok(Endpoint(coords))
    }

    pub fn planar(n: usize, m: usize) -> Self {
        Endpoint(vec![n, m])
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Path length (number of non-origin sites on any directed path).
    pub fn length(&self) -> usize {
        self.0.iter().sum()
    }

    /// Field shape that just contains this endpoint.
    pub fn box_shape(&self) -> Vec<usize> {
        self.0.iter().map(|&c| c + 1).collect()
    }
}

/// Passage times `T(n, N - n)` for `n = 1..=N`, all on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageProfile {
    pub n_total: usize,
    /// `values[n - 1] = T(n, N - n)`.
    pub values: Vec<f64>,
}

impl PassageProfile {
    pub fn at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }
}

/// Planar passage time `T(N, M)` by a two-row sweep.
pub fn passage_time(field: &EnvField, end: &Endpoint) -> Result<f64> {
    if field.ndim() != 2 || end.0.len() != 2 {
        return Err(Error::InvalidShape(
            "passage_time works on planar fields; use passage_time_d".into(),
        ));
    }
    check_inside(field, &end.0)?;
    planar_sweep_value(field, end, MaxPlus)
}

pub(crate) fn planar_sweep_value<S: PathSemiring>(
    field: &EnvField,
    end: &Endpoint,
    ring: S,
) -> Result<f64> {
    let (n, m) = (end.0[0], end.0[1]);
    let mut sweep = PlanarSweep::new(field, ring);
    for _ in 0..=m {
        sweep.advance(n + 1);
    }
    Ok(sweep.current()[n])
}

/// Passage time in `d + 1` dimensions.
pub fn passage_time_d(field: &EnvField, end: &Endpoint) -> Result<f64> {
    if end.0.len() < 2 {
        return Err(Error::invalid("passage_time_d needs at least two coordinates"));
    }
    sweep_to(field, &end.0, MaxPlus)
}

/// All anti-diagonal passage times `T(n, N - n)` from one sweep.
pub fn passage_profile(field: &EnvField, n_total: usize) -> Result<PassageProfile> {
    let values = anti_diagonal(field, n_total, MaxPlus)?;
    Ok(PassageProfile { n_total, values })
}

/// `V(n, N - n)` for `n = 1..=N` under any path semiring.
pub(crate) fn anti_diagonal<S: PathSemiring>(
    field: &EnvField,
    n_total: usize,
    ring: S,
) -> Result<Vec<f64>> {
    if n_total == 0 {
        return Err(Error::invalid("anti-diagonal needs N >= 1"));
    }
    let shape = field.shape();
    if shape.len() != 2 || shape[0] <= n_total || shape[1] < n_total {
        return Err(Error::OutOfBounds {
            end: vec![n_total, n_total - 1],
            shape: shape.to_vec(),
        });
    }
    let mut values = vec![0.0; n_total];
    let mut sweep = PlanarSweep::new(field, ring);
    for j in 0..n_total {
        let row = sweep.advance(n_total - j + 1);
        values[n_total - j - 1] = row[n_total - j];
    }
    Ok(values)
}

/// Upper bound on the number of paths the exhaustive oracle will enumerate.
pub const BRUTEFORCE_PATH_BUDGET: f64 = 1e6;

/// Energies of every directed path from the origin to `end`, in enumeration order.
pub fn enumerate_path_energies(field: &EnvField, end: &Endpoint) -> Result<Vec<f64>> {
    check_inside(field, &end.0)?;
    let count = log_path_count(&end.0).exp();
    if count > BRUTEFORCE_PATH_BUDGET * (1.0 + 1e-9) {
        return Err(Error::Refused(format!(
            "{count:.0} directed paths exceed the enumeration budget of {BRUTEFORCE_PATH_BUDGET:.0}"
        )));
    }
    let dense = field.materialize();
    let mut out = Vec::with_capacity(count.round() as usize);
    let mut pos = vec![0usize; end.0.len()];
    walk(&dense, &end.0, &mut pos, 0.0, &mut out);
    Ok(out)
}

fn walk(field: &EnvField, end: &[usize], pos: &mut [usize], energy: f64, out: &mut Vec<f64>) {
    if pos == end {
        out.push(energy);
        return;
    }
    for k in 0..end.len() {
        if pos[k] < end[k] {
            pos[k] += 1;
            let e = field.value(pos).expect("inside box");
            walk(field, end, pos, energy + e, out);
            pos[k] -= 1;
        }
    }
}

/// Exhaustive maximum over explicitly enumerated paths. Test oracle.
pub fn passage_time_bruteforce(field: &EnvField, end: &Endpoint) -> Result<f64> {
    let energies = enumerate_path_energies(field, end)?;
    Ok(energies.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
