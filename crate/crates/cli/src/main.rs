use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use polylab::brownian::{last_passage_brownian, log_partition_brownian, sample_grid};
use polylab::coupling::{dyadic_coupling, sup_gap};
use polylab::drift::sample_drifted;
use polylab::experiments::{catalog, project, run_experiment, ExperimentConfig};
use polylab::rmt_tw::{sample_gue_rescaled, sample_gue_top, TwTable, TW_DEFAULT_POINTS, TW_DEFAULT_TOL};
use polylab::seed::replicate_seed;
use polylab::{
    generate_field, log_partition, log_partition_d, passage_time, passage_time_bruteforce, passage_time_d, DistSpec,
    Endpoint, Error, ScalingRegime,
};

const EXIT_VERDICT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_REFUSED: u8 = 3;

/// Per-cell cost used by the budget guard of single computations, nanoseconds.
const CELL_NS: f64 = 30.0;

#[derive(Parser, Debug)]
#[command(name = "polylab", version, about = "Last-passage percolation, directed polymers and Tracy-Widom numerics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Environment law.
    #[arg(long, global = true)]
    dist: Option<DistSpec>,
    /// Output path, `-` for stdout.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    /// Output format; json unless stated otherwise per subcommand.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Number of replicates.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Longitudinal size N; experiments accept a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// Transverse exponent.
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Refuse runs projected to take longer than this.
    #[arg(long, global = true)]
    budget_seconds: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Last-passage time T(N, M) on a fresh field.
    Lpp {
        /// Transverse coordinates; more than one gives a higher-dimensional lattice.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Evaluate by enumerating every path instead of dynamic programming.
        #[arg(long)]
        brute_force: bool,
    },
    /// log Z_beta(N, M) on a fresh field.
    Polymer {
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Divide Z by the number of paths.
        #[arg(long)]
        normalized: bool,
    },
    /// Brownian last passage and, with --beta, the normalized log partition function.
    Brownian {
        /// Number of Brownian lines.
        #[arg(long)]
        lines: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Top eigenvalues of GUE matrices of size --n.
    Gue {
        /// Report n^{1/6} (lambda - 2 sqrt n) instead.
        #[arg(long)]
        rescaled: bool,
    },
    /// Tracy-Widom tables.
    Tw {
        #[command(subcommand)]
        action: TwAction,
    },
    /// Dyadic coupling of a random walk with Gaussian partial sums.
    Couple {
        #[arg(long)]
        levels: u32,
        /// Emit the coupled paths instead of the sup gap.
        #[arg(long)]
        paths: bool,
    },
    /// log Z of the polymer with a huge drift.
    Drift,
    /// Run a catalog experiment.
    Experiment {
        name: String,
        /// Override a parameter: key=v1,v2,...
        #[arg(long = "param", value_parser = parse_list_override)]
        params: Vec<(String, Vec<f64>)>,
        /// Override a tolerance: key=value.
        #[arg(long = "tol", value_parser = parse_scalar_override)]
        tolerances: Vec<(String, f64)>,
        /// Second law to compare against; `none` drops it.
        #[arg(long)]
        compare_dist: Option<String>,
        /// Print the projected cost and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// List the experiment catalog.
    Catalog,
}

#[derive(Subcommand, Debug)]
enum TwAction {
    /// CSV table of F_2 on a uniform grid.
    Table {
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        smin: f64,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        smax: f64,
        #[arg(long, default_value_t = TW_DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = TW_DEFAULT_TOL)]
        tol: f64,
    },
}

fn parse_list_override(s: &str) -> Result<(String, Vec<f64>), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=v1,v2,...")?;
    let vals = v
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((k.to_string(), vals))
}

fn parse_scalar_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    Ok((k.to_string(), v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"))?))
}

enum Failure {
    Usage(String),
    Refused(String),
    Verdict,
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_refusal() => Failure::Refused(e.to_string()),
            Error::InvalidArgument(_)
            | Error::InvalidShape(_)
            | Error::Domain { .. }
            | Error::OutOfBounds { .. }
            | Error::Unsupported(_)
            | Error::UnknownExperiment { .. } => Failure::Usage(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit(out: &str, body: &str) -> std::io::Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(body.as_bytes())?;
        if !body.ends_with('\n') {
            stdout.write_all(b"\n")?;
        }
        stdout.flush()
    } else {
        let mut text = body.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        fs::write(Path::new(out), text)
    }
}

fn single_n(common: &Common) -> Result<usize, Failure> {
    match common.n[..] {
        [n] => Ok(n),
        [] => Err(Failure::Usage("--n is required".into())),
        _ => Err(Failure::Usage("--n takes a single value here".into())),
    }
}

fn guard(common: &Common, cells: f64) -> Outcome {
    if let Some(budget) = common.budget_seconds {
        let seconds = cells * CELL_NS * 1e-9;
        if seconds > budget {
            return Err(Failure::Refused(format!(
                "projected {seconds:.1} s exceeds the {budget} s budget"
            )));
        }
    }
    Ok(())
}

fn scalar_output(common: &Common, key: &str, value: f64, extra: serde_json::Value) -> Outcome {
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut obj = extra;
            obj[key] = json!(value);
            serde_json::to_string_pretty(&obj)?
        }
        Format::Csv => format!("{key}\n{value}\n"),
    };
    emit(&common.out, &body)?;
    Ok(())
}

fn list_output(common: &Common, key: &str, rows: &[(u64, f64)]) -> Outcome {
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&json!({
            key: rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            "seeds": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        }))?,
        Format::Csv => {
            let mut s = format!("rep,seed,{key}\n");
            for (i, (seed, v)) in rows.iter().enumerate() {
                s.push_str(&format!("{i},{seed},{v}\n"));
            }
            s
        }
    };
    emit(&common.out, &body)?;
    Ok(())
}

fn endpoint(n: usize, m: &[usize]) -> Endpoint {
    let mut coords = vec![n];
    coords.extend_from_slice(m);
    Endpoint(coords)
}

fn run(cli: Cli) -> Outcome {
    let c = &cli.common;
    let seed = c.seed.unwrap_or(0);
    let dist = c.dist.unwrap_or(DistSpec::Gaussian);
    match cli.command {
        Command::Lpp { m, brute_force } => {
            let n = single_n(c)?;
            let end = endpoint(n, &m);
            guard(c, end.box_shape().iter().map(|&x| x as f64).product())?;
            let field = generate_field(dist, &end.box_shape(), seed)?;
            let t = if brute_force {
                passage_time_bruteforce(&field, &end)?
            } else if m.len() == 1 {
                passage_time(&field, &end)?
            } else {
                passage_time_d(&field, &end)?
            };
            scalar_output(c, "passage_time", t, json!({"endpoint": end.0, "dist": dist, "seed": seed}))
        }
        Command::Polymer { m, normalized } => {
            let n = single_n(c)?;
            let beta = c.beta.ok_or_else(|| Failure::Usage("--beta is required".into()))?;
            let end = endpoint(n, &m);
            guard(c, end.box_shape().iter().map(|&x| x as f64).product())?;
            let field = generate_field(dist, &end.box_shape(), seed)?;
            let lz = if m.len() == 1 {
                log_partition(&field, &end, beta, normalized)?
            } else {
                log_partition_d(&field, &end, beta, normalized)?
            };
            scalar_output(
                c,
                "log_partition",
                lz.log_value(),
                json!({"endpoint": end.0, "beta": beta, "normalized": normalized, "dist": dist, "seed": seed}),
            )
        }
        Command::Brownian { lines, horizon, step } => {
            guard(c, lines as f64 * (horizon / step).ceil())?;
            let grid = sample_grid(lines, horizon, step, seed)?;
            let l = last_passage_brownian(&grid)?;
            let mut extra = json!({"lines": lines, "horizon": horizon, "step": step, "seed": seed});
            if let Some(beta) = c.beta {
                extra["log_partition_normalized"] = json!(log_partition_brownian(&grid, beta)?.log_value());
            }
            scalar_output(c, "last_passage", l, extra)
        }
        Command::Gue { rescaled } => {
            let n = single_n(c)?;
            let reps = c.reps.unwrap_or(1);
            guard(c, (n * reps) as f64 * 10.0)?;
            let rows = (0..reps)
                .map(|r| {
                    let s = replicate_seed(seed, r as u64);
                    let v = if rescaled { sample_gue_rescaled(n, s) } else { sample_gue_top(n, s) };
                    v.map(|v| (s, v))
                })
                .collect::<polylab::Result<Vec<_>>>()?;
            list_output(c, "lambda_max", &rows)
        }
        Command::Tw {
            action: TwAction::Table { smin, smax, points, tol },
        } => {
            let table = TwTable::build(smin, smax, points, tol)?;
            let body = match c.format.unwrap_or(Format::Csv) {
                Format::Csv => table.to_csv(),
                Format::Json => serde_json::to_string_pretty(&json!({
                    "s": table.s_grid,
                    "cdf": table.cdf,
                    "tolerance": tol,
                }))?,
            };
            emit(&c.out, &body)?;
            Ok(())
        }
        Command::Couple { levels, paths } => {
            let p = dyadic_coupling(dist, levels, seed)?;
            if paths {
                let body = match c.format.unwrap_or(Format::Json) {
                    Format::Json => serde_json::to_string_pretty(&p)?,
                    Format::Csv => {
                        let mut s = String::from("k,walk,brownian\n");
                        for (k, (w, b)) in p.walk.iter().zip(&p.brownian).enumerate() {
                            s.push_str(&format!("{k},{w},{b}\n"));
                        }
                        s
                    }
                };
                emit(&c.out, &body)?;
                Ok(())
            } else {
                scalar_output(c, "sup_gap", sup_gap(&p), json!({"n": p.n, "dist": dist, "seed": seed}))
            }
        }
        Command::Drift => {
            let n = single_n(c)?;
            let regime = ScalingRegime::new(c.a.unwrap_or(0.25), c.beta.unwrap_or(1.0), c.gamma.unwrap_or(1.0))?;
            guard(c, n as f64 * (n as f64).powf(0.5 * (1.0 + regime.a) + 0.1))?;
            let r = sample_drifted(n, &regime, dist, seed)?;
            let body = match c.format.unwrap_or(Format::Json) {
                Format::Json => serde_json::to_string_pretty(&r)?,
                Format::Csv => format!(
                    "log_z,argmax_n,predictor,terms_used\n{},{},{},{}\n",
                    r.log_z.log_value(),
                    r.argmax_n,
                    r.predictor,
                    r.terms_used
                ),
            };
            emit(&c.out, &body)?;
            Ok(())
        }
        Command::Experiment {
            name,
            params,
            tolerances,
            compare_dist,
            dry_run,
        } => {
            let mut cfg = ExperimentConfig::defaults(&name)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            if let Some(d) = c.dist {
                cfg.dist = d;
            }
            if let Some(r) = c.reps {
                cfg.reps = r;
            }
            if !c.n.is_empty() {
                cfg.n_values = c.n.clone();
            }
            if c.a.is_some() || c.beta.is_some() || c.gamma.is_some() {
                match cfg.regime {
                    Some(r) => {
                        cfg.regime = Some(ScalingRegime::new(
                            c.a.unwrap_or(r.a),
                            c.beta.unwrap_or(r.beta),
                            c.gamma.unwrap_or(r.gamma),
                        )?);
                    }
                    None => {
                        for (key, v) in [("a", c.a), ("beta", c.beta), ("gamma", c.gamma)] {
                            if let Some(v) = v {
                                if !cfg.params.contains_key(key) {
                                    return Err(Failure::Usage(format!("`{name}` has no parameter `{key}`")));
                                }
                                cfg.params.insert(key.to_string(), vec![v]);
                            }
                        }
                    }
                }
            }
            if let Some(cd) = compare_dist {
                cfg.compare_dist = if cd == "none" {
                    None
                } else {
                    Some(cd.parse::<DistSpec>().map_err(|e| Failure::Usage(e.to_string()))?)
                };
            }
            for (k, v) in params {
                cfg.params.insert(k, v);
            }
            for (k, v) in tolerances {
                cfg.tolerances.insert(k, v);
            }
            cfg.budget_seconds = c.budget_seconds;
            if dry_run {
                let p = project(&cfg)?;
                emit(&c.out, &serde_json::to_string_pretty(&json!({"config": cfg, "projection": p}))?)?;
                return Ok(());
            }
            let report = run_experiment(&cfg)?;
            let body = match c.format.unwrap_or(Format::Json) {
                Format::Json => report.to_json()?,
                Format::Csv => report.raw_csv(),
            };
            emit(&c.out, &body)?;
            for v in report.verdicts.iter().filter(|v| !v.passed) {
                eprintln!(
                    "verdict failed: {} observed {} (bounds {:?}..{:?})",
                    v.criterion, v.observed, v.lower, v.upper
                );
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Verdict)
            }
        }
        Command::Catalog => {
            let body = match c.format {
                Some(Format::Json) => serde_json::to_string_pretty(
                    &catalog()
                        .iter()
                        .map(|e| json!({"name": e.name, "anchor": e.anchor, "description": e.description}))
                        .collect::<Vec<_>>(),
                )?,
                _ => catalog()
                    .iter()
                    .map(|e| format!("{}\t\"{}\"\t{}\n", e.name, e.anchor, e.description))
                    .collect(),
            };
            emit(&c.out, &body)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(EXIT_VERDICT),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Refused(msg)) => {
            eprintln!("refused: {msg}");
            ExitCode::from(EXIT_REFUSED)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VERDICT)
        }
    }
}
