use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::runners as r;
use super::{ExperimentConfig, ReportBuilder};
use crate::env::DistSpec;
use crate::error::Result;
use crate::polymer::ScalingRegime;

type RunFn = fn(&ExperimentConfig, &mut ReportBuilder<'_>) -> Result<()>;
type CostFn = fn(&ExperimentConfig) -> Result<(f64, f64)>;

/// A registered experiment.
pub struct CatalogEntry {
    pub name: &'static str,
    /// Phrase locating the claim being checked.
    pub anchor: &'static str,
    pub description: &'static str,
    pub defaults: fn() -> ExperimentConfig,
    /// Projected `(nanoseconds, bytes)` on one worker.
    pub(crate) cost: CostFn,
    pub(crate) run: RunFn,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("name", &self.name).finish()
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    name: &str,
    regime: Option<(f64, f64, f64)>,
    n_values: &[usize],
    reps: usize,
    dist: DistSpec,
    compare_dist: Option<DistSpec>,
    tolerances: &[(&str, f64)],
    params: &[(&str, &[f64])],
) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        regime: regime.map(|(a, b, g)| ScalingRegime::new(a, b, g).expect("valid default regime")),
        n_values: n_values.to_vec(),
        reps,
        dist,
        compare_dist,
        seed: 1,
        tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_vec()))
            .collect::<BTreeMap<_, _>>(),
        budget_seconds: None,
    }
}

use DistSpec::*;

// Tolerance defaults are finite-size allowances; the limits themselves are
// asymptotic and carry no rate.
fn glynn_whitt() -> ExperimentConfig {
    // Mean ratio T / N^{(1+a)/2} over 2 sqrt(x) sits a few percent low at N = 1e5.
    config(
        "glynn_whitt",
        None,
        &[100_000],
        20,
        Gaussian,
        Some(Rademacher),
        &[("ratio_lo", 1.90), ("ratio_hi", 2.05)],
        &[("a", &[0.4]), ("x", &[1.0])],
    )
}

fn near_axis() -> ExperimentConfig {
    // The near-axis expansion is only leading order in h.
    config(
        "near_axis",
        None,
        &[100_000],
        10,
        Gaussian,
        None,
        &[("rel_tol", 0.15)],
        &[("h", &[0.01, 0.04])],
    )
}

fn boundary_continuity() -> ExperimentConfig {
    // Strict decrease is required; Stirling error of the log-binomial is O(log N / N).
    config(
        "boundary_continuity",
        None,
        &[20_000],
        2,
        Gaussian,
        None,
        &[("max_step_ratio", 0.999_999), ("phi_abs", 2e-3)],
        &[("beta", &[1.0]), ("x", &[1.0]), ("h", &[0.2, 0.1, 0.05, 0.02])],
    )
}

fn mo_regime() -> ExperimentConfig {
    // Relative bias at N = 1e5 is a few percent; universality gap is smaller.
    config(
        "mo_regime",
        Some((0.5, 1.0, 1.0)),
        &[100_000],
        20,
        Gaussian,
        Some(Rademacher),
        &[("rel_tol", 0.10), ("universality_rel", 0.05)],
        &[("alpha", &[1.0])],
    )
}

fn mo_regime_d() -> ExperimentConfig {
    // No closed form: successive estimates along N x4 must settle.
    config(
        "mo_regime_d",
        Some((0.5, 1.0, 1.0)),
        &[1_000, 4_000, 16_000],
        5,
        Gaussian,
        None,
        &[("stabilization_rel", 0.10)],
        &[("alpha", &[1.0, 1.0])],
    )
}

fn very_asymmetric() -> ExperimentConfig {
    // The short coordinate N^b with b < a is invisible at the N^a scale.
    config(
        "very_asymmetric",
        Some((0.5, 1.0, 1.0)),
        &[16_000],
        10,
        Gaussian,
        None,
        &[("rel_tol", 0.15)],
        &[("b", &[0.25])],
    )
}

fn brownian_free_energy() -> ExperimentConfig {
    // N = 150 lines; finite-N and quadrature bias both push the estimate low.
    config(
        "brownian_free_energy",
        None,
        &[150],
        20,
        Gaussian,
        None,
        &[("rel_tol", 0.10)],
        &[("beta", &[1.0]), ("step", &[0.02])],
    )
}

fn scaling_identity() -> ExperimentConfig {
    // Identity is exact in law; 0.06 covers two-sample KS noise at 2000 + 2000.
    config(
        "scaling_identity",
        None,
        &[25],
        2000,
        Gaussian,
        None,
        &[("ks", 0.06)],
        &[("m_lines", &[10.0]), ("step_ratio", &[1.0 / 400.0])],
    )
}

fn gue_link() -> ExperimentConfig {
    // Grid-restricted jumps bias L low by ~0.58 sqrt(2 step) per jump; corrected.
    config(
        "gue_link",
        None,
        &[1],
        1000,
        Gaussian,
        None,
        &[("ks", 0.08)],
        &[("m_lines", &[50.0]), ("gue_n", &[50.0]), ("step", &[1e-4])],
    )
}

fn tw_discrete() -> ExperimentConfig {
    // Lattice corrections decay like N^{7a/6 - 1/2}, still visible at N = 1e5.
    config(
        "tw_discrete",
        None,
        &[100_000],
        500,
        Gaussian,
        None,
        &[("ks", 0.10)],
        &[("a", &[0.3])],
    )
}

fn drift_free_energy() -> ExperimentConfig {
    // (1/N^{(1+a)/2}) log Z converges slowly from below.
    config(
        "drift_free_energy",
        Some((0.25, 1.0, 1.0)),
        &[100_000],
        20,
        Gaussian,
        Some(CenteredExponential),
        &[("rel_tol", 0.10)],
        &[],
    )
}

fn drift_fluctuations() -> ExperimentConfig {
    // Exponent only; the constant is not reproducible.
    config(
        "drift_fluctuations",
        Some((0.25, 1.0, 1.0)),
        &[1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16, 1 << 17],
        50,
        Gaussian,
        None,
        &[("slope_abs", 0.25)],
        &[("secondary_a", &[0.4])],
    )
}

fn deviation_tails() -> ExperimentConfig {
    config(
        "deviation_tails",
        Some((0.25, 1.0, 1.0)),
        &[10_000],
        10_000,
        Gaussian,
        None,
        &[("nesting_slack", 1e-12), ("decay_ratio", 0.5)],
        &[("eps", &[0.0, 0.05, 0.1, 0.15, 0.2, 0.3]), ("eps_pair", &[0.1, 0.2])],
    )
}

fn coupling_gap() -> ExperimentConfig {
    // 2 x log-ratio 16/10 for levels 10 and 16.
    config(
        "coupling_gap",
        None,
        &[1 << 10, 1 << 16],
        200,
        Rademacher,
        None,
        &[("growth_ratio", 3.2), ("gaussian_gap_abs", 1e-12)],
        &[],
    )
}

fn concentration_decay() -> ExperimentConfig {
    config(
        "concentration_decay",
        Some((0.5, 1.0, 1.0)),
        &[1_000, 10_000, 100_000],
        50,
        Gaussian,
        None,
        &[("max_step_ratio", 0.999_999)],
        &[],
    )
}

pub fn catalog() -> &'static [CatalogEntry] {
    static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        vec![
            CatalogEntry {
                name: "glynn_whitt",
                anchor: "as a summary of the previous discussion",
                description: "T(N, floor(x N^a)) / N^{(1+a)/2} -> 2 sqrt(x)",
                defaults: glynn_whitt,
                cost: r::cost_glynn_whitt,
                run: r::glynn_whitt,
            },
            CatalogEntry {
                name: "near_axis",
                anchor: "a very precise asymptotic for the last-passage percolation",
                description: "T(N, floor(hN)) / N vs 2 sqrt(h) for small h",
                defaults: near_axis,
                cost: r::cost_near_axis,
                run: r::near_axis,
            },
            CatalogEntry {
                name: "boundary_continuity",
                anchor: "Only the continuity at the boundary",
                description: "psi(h, x) -> psi(0, x) as h -> 0, and the path-count entropy phi",
                defaults: boundary_continuity,
                cost: r::cost_boundary_continuity,
                run: r::boundary_continuity,
            },
            CatalogEntry {
                name: "mo_regime",
                anchor: "The Moriarty-O'Connell regime",
                description: "near-axis polymer at beta N^{(a-1)/2} vs the digamma free energy",
                defaults: mo_regime,
                cost: r::cost_mo_regime,
                run: r::mo_regime,
            },
            CatalogEntry {
                name: "mo_regime_d",
                anchor: "free energy of the continuous-time directed polymer",
                description: "d = 2 transverse directions: stabilization in N",
                defaults: mo_regime_d,
                cost: r::cost_mo_regime_d,
                run: r::mo_regime_d,
            },
            CatalogEntry {
                name: "very_asymmetric",
                anchor: "which coordinates are those of $\\alpha$",
                description: "endpoint (N, N^a, N^b), b < a, against the d = 1 estimate",
                defaults: very_asymmetric,
                cost: r::cost_very_asymmetric,
                run: r::very_asymmetric,
            },
            CatalogEntry {
                name: "brownian_free_energy",
                anchor: "restriction of the digamma function",
                description: "(1/N) log Z^Br(N, N) vs the closed-form free energy",
                defaults: brownian_free_energy,
                cost: r::cost_brownian_free_energy,
                run: r::brownian_free_energy,
            },
            CatalogEntry {
                name: "scaling_identity",
                anchor: "due to the scaling properties of Brownian motions",
                description: "L(N, M) vs sqrt(N) L(1, M) in law",
                defaults: scaling_identity,
                cost: r::cost_scaling_identity,
                run: r::scaling_identity,
            },
            CatalogEntry {
                name: "gue_link",
                anchor: "the larger eigenvalue of a Gaussian Unitary",
                description: "Brownian last passage over M lines vs the GUE top eigenvalue",
                defaults: gue_link,
                cost: r::cost_gue_link,
                run: r::gue_link,
            },
            CatalogEntry {
                name: "tw_discrete",
                anchor: "for $M=N^a$ with $0<a<3/7$",
                description: "rescaled T(N, N^a) vs Tracy-Widom F_2",
                defaults: tw_discrete,
                cost: r::cost_tw_discrete,
                run: r::tw_discrete,
            },
            CatalogEntry {
                name: "drift_free_energy",
                anchor: "for all environment laws such that",
                description: "log Z^(h_N) / N^{(1+a)/2} -> beta^2 / gamma",
                defaults: drift_free_energy,
                cost: r::cost_drift_free_energy,
                run: r::drift_free_energy,
            },
            CatalogEntry {
                name: "drift_fluctuations",
                anchor: "a certain flavor of variance bounds",
                description: "second moment of log Z^(h_N) grows like N^{1 - a/3}",
                defaults: drift_fluctuations,
                cost: r::cost_drift_fluctuations,
                run: r::drift_fluctuations,
            },
            CatalogEntry {
                name: "deviation_tails",
                anchor: "the two following deviation inequalities",
                description: "upper and lower deviation frequencies of log Z^(h_N)",
                defaults: deviation_tails,
                cost: r::cost_deviation_tails,
                run: r::deviation_tails,
            },
            CatalogEntry {
                name: "coupling_gap",
                anchor: "can be constructed in such a way",
                description: "sup gap of the dyadic walk/Gaussian coupling grows logarithmically",
                defaults: coupling_gap,
                cost: r::cost_coupling_gap,
                run: r::coupling_gap,
            },
            CatalogEntry {
                name: "concentration_decay",
                anchor: "Lipschitz continuous with Lipschitz constant",
                description: "sd of (1/N^a) log Z_{beta_N}(N, N^a) decreases in N",
                defaults: concentration_decay,
                cost: r::cost_concentration_decay,
                run: r::concentration_decay,
            },
        ]
    })
}
