//! Command-line front end of the `plap` binary.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict or a certified
//! bound fails, 2 for configuration errors, 3 when a solve does not converge.
//! `PLAP_THREADS` sets the worker count.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{self, Comparison};
use crate::eigensolve::{self, Solution};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentResult, RunOptions};
use crate::geometry::Domain;
use crate::scenario::{ExperimentSpec, ModeSpec, Resolved, Scenario, SolveMethod};
use crate::weights::Weight;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "Eigenvalue lower bounds for the weighted Dirichlet p-Laplacian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every applicable bound for a scenario, optionally against a solve.
    Bound(Common),
    /// Compute the first eigenvalue and eigenfunction of a scenario.
    Solve(Common),
    /// Run an experiment.
    Exp {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Print the scenario JSON schema.
    Schema {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    ThinRect,
    SpikeSturm,
    Optimality,
    DistCoeff,
}

impl Which {
    fn default_spec(self) -> ExperimentSpec {
        match self {
            Which::ThinRect => ExperimentSpec::ThinRect {
                p: None,
                radii: None,
                h: None,
            },
            Which::SpikeSturm => ExperimentSpec::SpikeSturm {
                p: None,
                points: None,
                calibration: None,
                h: None,
            },
            Which::Optimality => ExperimentSpec::Optimality {
                p: None,
                n: None,
                alpha: None,
                radii: None,
                betas: None,
                nodes: None,
            },
            Which::DistCoeff => ExperimentSpec::DistCoeff {
                p: None,
                n: None,
                gammas: None,
                radii: None,
                nodes: None,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; tables go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver seed, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid spacing, overriding the scenario.
    #[arg(long)]
    h: Option<f64>,
    /// Constant mode, overriding the scenario.
    #[arg(long, value_parser = ["scaling", "exact", "calibrated"])]
    mode: Option<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Tables go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    configure_threads();
    let res = match cli.command {
        Command::Bound(c) => cmd_bound(&c, out, err),
        Command::Solve(c) => cmd_solve(&c, out, err),
        Command::Exp { which, common } => cmd_exp(which, &common, out, err),
        Command::Schema { out: dir } => cmd_schema(dir.as_deref(), out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::IterationLimit { .. } => EXIT_NONCONVERGED,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PLAP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn load(c: &Common) -> Result<(Scenario, PathBuf)> {
    let (mut sc, base) = match &c.config {
        Some(p) => Scenario::load(p)?,
        None => (Scenario::from_json("{}")?, PathBuf::from(".")),
    };
    if let Some(s) = c.seed {
        sc.solve.seed = s;
    }
    if let Some(h) = c.h {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("--h must be finite and > 0, got {h}")));
        }
        sc.h = Some(h);
    }
    if let Some(m) = &c.mode {
        sc.mode = m.parse::<ModeSpec>()?;
    }
    Ok((sc, base))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn cmd_schema(dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let s = crate::scenario::schema_json();
    writeln!(out, "{s}")?;
    if let Some(d) = dir {
        write_file(d, "schema.json", &s)?;
    }
    Ok(EXIT_OK)
}

fn radial_weight(w: &Weight) -> bool {
    match w {
        Weight::Constant(_) | Weight::SpikeRadial { .. } | Weight::DistPower { .. } => true,
        Weight::RadialPower { center, .. } => center.iter().all(|&c| c == 0.0),
        Weight::GridSampled { .. } => false,
    }
}

/// Solves with the scenario's method. The last iterate is returned even when
/// the iteration limit is hit.
pub fn solve_scenario(sc: &Scenario, r: &Resolved) -> Result<Solution> {
    let opts = eigensolve::SolveOptions {
        fail_on_limit: false,
        ..sc.solve.options()
    };
    let p = r.params.p;
    let nodes = sc.solve.nodes;
    let origin_ball = match &r.domain {
        Domain::Ball { center, radius } if center.iter().all(|&c| c == 0.0) => Some(*radius),
        _ => None,
    };
    let coef_gamma = match &r.coefficient {
        None => Some(0.0),
        Some(Weight::DistPower { gamma }) => Some(*gamma),
        Some(_) => None,
    };
    let radial_ok = origin_ball.is_some() && radial_weight(&r.weight) && coef_gamma.is_some();
    let interval = match &r.domain {
        Domain::Box { origin, lengths } if lengths.len() == 1 && origin[0] == 0.0 && r.coefficient.is_none() => {
            Some(lengths[0])
        }
        _ => None,
    };
    let n = r.params.n;
    match sc.solve.method {
        SolveMethod::Radial if !radial_ok => Err(Error::Config(
            "method `radial` needs a ball centered at the origin, a radial weight and at most a distance coefficient"
                .into(),
        )),
        SolveMethod::Auto if interval.is_some() => {
            eigensolve::lambda1_1d(interval.unwrap(), &r.weight, p, nodes, &opts)
        }
        SolveMethod::Auto | SolveMethod::Radial if radial_ok => {
            let radius = origin_ball.unwrap();
            let gamma = coef_gamma.unwrap();
            if gamma != 0.0 {
                match r.weight {
                    Weight::Constant(c) if c > 0.0 => {
                        let mut s = eigensolve::lambda1_radial_coeff(n, radius, p, gamma, nodes, &opts)?;
                        s.lambda /= c;
                        Ok(s)
                    }
                    _ => Err(Error::Config(
                        "radial solves with a distance coefficient need a constant weight".into(),
                    )),
                }
            } else {
                eigensolve::lambda1_radial(n, radius, p, &r.weight, (n - 1) as f64, nodes, &opts)
            }
        }
        _ => eigensolve::lambda1_grid_coeff(&r.domain, r.h, r.coefficient.as_ref(), &r.weight, p, &opts),
    }
}

fn field_dat(sol: &Solution) -> String {
    let mut s = String::from("# position value\n");
    for (x, v) in sol.field.positions().iter().zip(&sol.field.values) {
        let xs: Vec<String> = x.iter().map(|c| format!("{c:.12e}")).collect();
        s.push_str(&format!("{} {v:.12e}\n", xs.join(" ")));
    }
    s
}

fn cmd_solve(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (sc, base) = load(c)?;
    let r = sc.resolve(&base)?;
    let sol = solve_scenario(&sc, &r)?;
    let mut side = eigensolve::sidecar_json(&sol, sc.solve.seed);
    side["converged"] = json!(sol.converged);
    side["scenario_hash"] = json!(sc.hash());
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    writeln!(out, "{text}")?;
    if let Some(d) = &c.out {
        write_file(d, "field.grid", &sol.field.to_grid_string()?)?;
        write_file(d, "field.json", &text)?;
        write_file(d, "field.dat", &field_dat(&sol))?;
    }
    if sol.converged {
        Ok(EXIT_OK)
    } else {
        writeln!(err, "solver did not converge (residual {:e})", sol.residual)?;
        Ok(EXIT_NONCONVERGED)
    }
}

/// Comparison table for a scenario, with the numeric eigenvalue when the
/// scenario asks for a solve.
pub fn bound_scenario(sc: &Scenario, base: &Path) -> Result<(Comparison, Option<Solution>)> {
    let r = sc.resolve(base)?;
    let sol = if sc.solve.enabled {
        Some(solve_scenario(sc, &r)?)
    } else {
        None
    };
    let lambda = sol.as_ref().filter(|s| s.converged).map(|s| s.lambda);
    let cmp =
        bounds::compare_all(&sc.bound_scenario(&r), lambda, sc.slack).map_err(|e| Error::Config(e.to_string()))?;
    Ok((cmp, sol))
}

fn cmd_bound(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (sc, base) = load(c)?;
    let (cmp, sol) = bound_scenario(&sc, &base)?;
    let csv = bounds::to_csv(&cmp.reports);
    write!(out, "{csv}")?;
    let report = json!({
        "scenario_hash": sc.hash(),
        "seed": sc.solve.seed,
        "h": sc.h,
        "lambda_numeric": sol.as_ref().map(|s| eigensolve::sidecar_json(s, sc.solve.seed)),
        "comparison": cmp,
    });
    if let Some(d) = &c.out {
        write_file(d, "bounds.csv", &csv)?;
        write_file(
            d,
            "bounds.json",
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    if let Some(s) = &sol {
        writeln!(
            err,
            "numeric lambda {:.10e} (residual {:e}, {} iterations)",
            s.lambda, s.residual, s.iterations
        )?;
    }
    for v in &cmp.violations {
        writeln!(err, "violation: {v}")?;
    }
    if sol.as_ref().is_some_and(|s| !s.converged) {
        writeln!(err, "solver did not converge; certified bounds were not checked")?;
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(if cmp.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    })
}

/// Runs an experiment as the `exp` command would.
pub fn run_experiment(spec: &ExperimentSpec, h: Option<f64>, sc: &Scenario) -> Result<ExperimentResult> {
    let opts = RunOptions {
        solve: sc.solve.options(),
    };
    experiments::run_spec(spec, h, &opts)
}

fn cmd_exp(which: Which, c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (sc, _) = load(c)?;
    let default = which.default_spec();
    let spec = match &sc.experiment {
        Some(s) if s.kind() == default.kind() => s.clone(),
        Some(s) => {
            return Err(Error::Config(format!(
                "config describes experiment `{}`, command asked for `{}`",
                s.kind(),
                default.kind()
            )))
        }
        None => default,
    };
    let res = run_experiment(&spec, c.h, &sc)?;
    let csv = res.to_csv();
    write!(out, "{csv}")?;
    if let Some(d) = &c.out {
        let name = res.experiment.clone();
        write_file(d, &format!("{name}.csv"), &csv)?;
        write_file(d, &format!("{name}.json"), &res.to_json())?;
        let (x, y) = res.plot_columns();
        if let Some(dat) = res.dat(x, y) {
            write_file(d, &format!("{name}.dat"), &dat)?;
        }
    }
    for v in &res.verdicts {
        writeln!(
            err,
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        )?;
    }
    if res.nonconverged() > 0 {
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(if res.passed() { EXIT_OK } else { EXIT_VERDICT })
}
