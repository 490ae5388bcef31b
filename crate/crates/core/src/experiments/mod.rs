//! Named, reproducible Monte Carlo experiments and their reports.
//!
//! Replicate `r` of a series runs with `replicate_seed(derive(seed, series), r)`,
//! so results do not depend on the number of worker threads. Reports are plain
//! structs (stable key order) and round-trip through JSON losslessly.

mod catalog;
mod runners;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::DistSpec;
use crate::error::{Error, Result};
use crate::polymer::ScalingRegime;
use crate::stats::{quantile, Summary};

pub use catalog::{catalog, CatalogEntry};

pub const SCHEMA_VERSION: &str = "1";

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "POLYLAB_THREADS";

/// Memory ceiling for any single run, in bytes.
pub const MEMORY_BUDGET_BYTES: f64 = 4.0e9;

/// Everything an experiment needs; catalog defaults can be overridden field by field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub regime: Option<ScalingRegime>,
    pub n_values: Vec<usize>,
    pub reps: usize,
    pub dist: DistSpec,
    /// Second environment law for universality comparisons.
    pub compare_dist: Option<DistSpec>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    /// Experiment-specific numeric parameters; scalars are one-element lists.
    pub params: BTreeMap<String, Vec<f64>>,
    /// Refuse to start when the projected run time exceeds this.
    pub budget_seconds: Option<f64>,
}

impl ExperimentConfig {
    /// Catalog defaults for `name`.
    pub fn defaults(name: &str) -> Result<Self> {
        Ok((find_entry(name)?.defaults)())
    }

    pub fn validate(&self) -> Result<()> {
        find_entry(&self.name)?;
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values must not be empty"));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::invalid(format!("tolerance `{k}` must be positive, got {v}")));
        }
        if let Some(b) = self.budget_seconds {
            if !(b > 0.0) {
                return Err(Error::invalid("budget must be positive"));
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Result<ScalingRegime> {
        self.regime
            .ok_or_else(|| Error::invalid(format!("experiment `{}` needs a scaling regime", self.name)))
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        match self.params.get(key).map(Vec::as_slice) {
            Some([v]) => Ok(*v),
            Some(_) => Err(Error::invalid(format!("parameter `{key}` must be a single value"))),
            None => Err(Error::invalid(format!("missing parameter `{key}`"))),
        }
    }

    pub fn param_list(&self, key: &str) -> Result<&[f64]> {
        self.params
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("missing parameter `{key}`")))
    }

    pub fn tolerance(&self, key: &str) -> Result<f64> {
        self.tolerances
            .get(key)
            .copied()
            .ok_or_else(|| Error::invalid(format!("missing tolerance `{key}`")))
    }

    /// The primary law followed by the comparison law, if any.
    pub fn dists(&self) -> Vec<DistSpec> {
        let mut v = vec![self.dist];
        if let Some(d) = self.compare_dist.filter(|d| *d != self.dist) {
            v.push(d);
        }
        v
    }
}

/// Replicate statistics of one series at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub n: usize,
    pub series: String,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// A reference value with its textual anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub value: f64,
    pub anchor: String,
}

/// Pass/fail outcome of one check; `lower`/`upper` come from the named tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub tolerance_keys: Vec<String>,
    pub observed: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

/// One replicate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub series: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema_version: String,
    pub experiment: String,
    pub anchor: String,
    pub config: ExperimentConfig,
    pub stats: Vec<SeriesStats>,
    pub estimates: BTreeMap<String, f64>,
    pub targets: Vec<Target>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub wall_time_seconds: f64,
    pub raw: Vec<RawRow>,
}

impl McReport {
    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Raw replicate values as CSV with header `experiment,n,rep,seed,value`.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("experiment,n,rep,seed,value\n");
        for r in &self.raw {
            let _ = writeln!(out, "{},{},{},{},{:?}", self.experiment, r.n, r.rep, r.seed, r.value);
        }
        out
    }
}

/// Accumulates the pieces of a report while an experiment runs.
#[derive(Debug)]
pub(crate) struct ReportBuilder<'a> {
    config: &'a ExperimentConfig,
    stats: Vec<SeriesStats>,
    estimates: BTreeMap<String, f64>,
    targets: Vec<Target>,
    verdicts: Vec<Verdict>,
    raw: Vec<RawRow>,
}

impl<'a> ReportBuilder<'a> {
    fn new(config: &'a ExperimentConfig) -> Self {
        ReportBuilder {
            config,
            stats: Vec::new(),
            estimates: BTreeMap::new(),
            targets: Vec::new(),
            verdicts: Vec::new(),
            raw: Vec::new(),
        }
    }

    /// Records replicate values `(seed, value)` and returns their summary.
    pub(crate) fn series(&mut self, n: usize, series: &str, values: &[(u64, f64)]) -> Result<Summary> {
        let xs: Vec<f64> = values.iter().map(|v| v.1).collect();
        let summary = Summary::of(&xs)?;
        self.stats.push(SeriesStats {
            n,
            series: series.to_string(),
            count: xs.len(),
            mean: summary.mean,
            sd: summary.std_dev,
            q05: quantile(&xs, 0.05)?,
            q50: quantile(&xs, 0.5)?,
            q95: quantile(&xs, 0.95)?,
        });
        self.raw.extend(values.iter().enumerate().map(|(rep, &(seed, value))| RawRow {
            series: series.to_string(),
            n,
            rep,
            seed,
            value,
        }));
        Ok(summary)
    }

    pub(crate) fn estimate(&mut self, key: impl Into<String>, value: f64) {
        self.estimates.insert(key.into(), value);
    }

    pub(crate) fn target(&mut self, name: &str, value: f64, anchor: &str) {
        self.targets.push(Target {
            name: name.to_string(),
            value,
            anchor: anchor.to_string(),
        });
    }

    /// `observed <= tolerance[key]`.
    pub(crate) fn at_most(&mut self, criterion: &str, observed: f64, key: &str) -> Result<bool> {
        let upper = self.config.tolerance(key)?;
        self.push(criterion, vec![key], observed, None, Some(upper), observed <= upper)
    }

    /// `tolerance[lo] <= observed <= tolerance[hi]`, both scaled by `scale`.
    pub(crate) fn within(&mut self, criterion: &str, observed: f64, lo: &str, hi: &str, scale: f64) -> Result<bool> {
        let l = self.config.tolerance(lo)? * scale;
        let u = self.config.tolerance(hi)? * scale;
        let ok = observed >= l && observed <= u;
        self.push(criterion, vec![lo, hi], observed, Some(l), Some(u), ok)
    }

    /// `observed <= tolerance[key] * scale`.
    pub(crate) fn at_most_scaled(&mut self, criterion: &str, observed: f64, key: &str, scale: f64) -> Result<bool> {
        let upper = self.config.tolerance(key)? * scale;
        self.push(criterion, vec![key], observed, None, Some(upper), observed <= upper)
    }

    fn push(
        &mut self,
        criterion: &str,
        keys: Vec<&str>,
        observed: f64,
        lower: Option<f64>,
        upper: Option<f64>,
        passed: bool,
    ) -> Result<bool> {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            tolerance_keys: keys.into_iter().map(String::from).collect(),
            observed,
            lower,
            upper,
            passed,
        });
        Ok(passed)
    }
}

fn find_entry(name: &str) -> Result<&'static CatalogEntry> {
    catalog().iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownExperiment {
        name: name.to_string(),
        valid: catalog().iter().map(|e| e.name.to_string()).collect(),
    })
}

/// Worker count from `POLYLAB_THREADS`, if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Projected cost of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub seconds: f64,
    pub bytes: f64,
}

pub fn project(config: &ExperimentConfig) -> Result<Projection> {
    config.validate()?;
    let entry = find_entry(&config.name)?;
    let threads = configured_threads().unwrap_or_else(rayon::current_num_threads).max(1) as f64;
    let (ns, bytes) = (entry.cost)(config)?;
    Ok(Projection {
        seconds: ns * 1e-9 / threads,
        bytes,
    })
}

/// Runs a catalog experiment. Refuses, before doing any work, when the
/// projection exceeds the configured time budget or the memory ceiling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McReport> {
    let projection = project(config)?;
    if let Some(budget) = config.budget_seconds {
        if projection.seconds > budget {
            return Err(Error::Refused(format!(
                "`{}` is projected to take {:.0} s, over the {:.0} s budget",
                config.name, projection.seconds, budget
            )));
        }
    }
    if projection.bytes > MEMORY_BUDGET_BYTES {
        return Err(Error::Refused(format!(
            "`{}` is projected to need {:.1} GB of memory",
            config.name,
            projection.bytes / 1e9
        )));
    }
    let entry = find_entry(&config.name)?;
    let start = Instant::now();
    let mut builder = ReportBuilder::new(config);
    match configured_threads() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| (entry.run)(config, &mut builder))?;
        }
        None => (entry.run)(config, &mut builder)?,
    }
    let passed = builder.verdicts.iter().all(|v| v.passed);
    Ok(McReport {
        schema_version: SCHEMA_VERSION.to_string(),
        experiment: config.name.clone(),
        anchor: entry.anchor.to_string(),
        config: config.clone(),
        stats: builder.stats,
        estimates: builder.estimates,
        targets: builder.targets,
        verdicts: builder.verdicts,
        passed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        raw: builder.raw,
    })
}
