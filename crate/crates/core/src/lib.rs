//! Simulation and numerics for directed last-passage percolation and directed
//! polymers near an axis: discrete and Brownian environments, the
//! Moriarty-O'Connell regime, polymers with a huge drift, GUE and Tracy-Widom
//! reference laws, and a catalog of reproducible Monte Carlo experiments.

pub mod brownian;
pub mod coupling;
pub mod drift;
pub mod env;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod lpp;
pub mod polymer;
pub mod rmt_tw;
pub mod seed;
pub mod special;
pub mod stats;

pub use env::{generate_field, log_mgf, DistSpec, EnvField};
pub use error::{Error, Result};
pub use lpp::{passage_profile, passage_time, passage_time_bruteforce, passage_time_d, Endpoint, PassageProfile};
pub use polymer::{
    log_partition, log_partition_d, mo_free_energy_exact, mo_free_energy_normalized, mo_regime_estimate,
    LogWeight, ScalingRegime,
};
pub use experiments::{catalog, run_experiment, ExperimentConfig, McReport};
