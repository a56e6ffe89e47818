//! Parameter scans that compare bounds with numeric eigenvalues.
//!
//! Every result carries its per-point rows, the fitted slopes and the verdicts.
//! Verdicts are a pure function of the parameters and rows, so
//! [`ExperimentResult::recompute_verdicts`] reproduces them from the emitted
//! data alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BallSolve, ConstantMode, ProblemParams};
use crate::eigensolve::{self, Solution, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{self, Domain, RasterMask};
use crate::scenario::{ExperimentSpec, Scenario};
use crate::specfun::{self, QuadratureSpec};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario_hash: String,
    pub seed: u64,
    pub h: f64,
}

/// One parameter point. `values` follows the result's `columns`; `None` marks
/// a quantity lost to a solver failure, described in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Option<f64>>,
    pub status: String,
    pub provenance: Provenance,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub name: String,
    pub x: String,
    pub y: String,
    /// Least-squares slope of `ln y` against `ln x`.
    pub slope: f64,
    pub intercept: f64,
    pub band: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub parameters: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub fits: Vec<Fit>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Rows whose solve hit the iteration limit.
    pub fn nonconverged(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status.starts_with("nonconverged"))
            .count()
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// CSV with the value columns followed by `status,scenario_hash,seed,h`.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push_str(",status,scenario_hash,seed,h\n");
        for r in &self.rows {
            let vals: Vec<String> = r
                .values
                .iter()
                .map(|v| v.map(|x| format!("{x:.12e}")).unwrap_or_default())
                .collect();
            s.push_str(&vals.join(","));
            s.push_str(&format!(
                ",{},{},{},{:e}\n",
                r.status.replace(',', ";"),
                r.provenance.scenario_hash,
                r.provenance.seed,
                r.provenance.h
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Two-column whitespace-separated extract for plotting.
    pub fn dat(&self, x: &str, y: &str) -> Option<String> {
        let xs = self.column(x)?;
        let ys = self.column(y)?;
        let mut s = format!("# {x} {y}\n");
        for (a, b) in xs.iter().zip(&ys) {
            if let (Some(a), Some(b)) = (a, b) {
                s.push_str(&format!("{a:.12e} {b:.12e}\n"));
            }
        }
        Some(s)
    }

    /// The `(x, y)` columns plotted for this experiment.
    pub fn plot_columns(&self) -> (&'static str, &'static str) {
        match self.experiment.as_str() {
            "thin-rect" => ("R", "lambda"),
            "spike-sturm" => ("MR2", "ratio"),
            "optimality" => ("R", "lambda_w1"),
            _ => ("R", "scaled"),
        }
    }

    /// Verdicts and fits recomputed from `parameters` and `rows`.
    pub fn recompute_verdicts(&self) -> Result<(Vec<Fit>, Vec<Verdict>)> {
        let bad = |e: serde_json::Error| Error::Config(e.to_string());
        let t = Table {
            columns: &self.columns,
            rows: &self.rows,
        };
        match self.experiment.as_str() {
            "thin-rect" => Ok(thin_rect_verdicts(
                &serde_json::from_value(self.parameters.clone()).map_err(bad)?,
                &t,
            )),
            "spike-sturm" => Ok(spike_verdicts(
                &serde_json::from_value(self.parameters.clone()).map_err(bad)?,
                &t,
            )),
            "optimality" => Ok(optimality_verdicts(
                &serde_json::from_value(self.parameters.clone()).map_err(bad)?,
                &t,
            )),
            "dist-coeff" => Ok(dist_coeff_verdicts(
                &serde_json::from_value(self.parameters.clone()).map_err(bad)?,
                &t,
            )),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

struct Table<'a> {
    columns: &'a [String],
    rows: &'a [Row],
}

impl Table<'_> {
    fn col(&self, name: &str) -> Vec<Option<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r.values[k]).collect()
    }

    fn all_ok(&self) -> Option<String> {
        let bad: Vec<String> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.ok())
            .map(|(i, r)| format!("row {i}: {}", r.status))
            .collect();
        if bad.is_empty() {
            None
        } else {
            Some(bad.join("; "))
        }
    }
}

/// Ordinary least squares of `ln y` on `ln x`: `(slope, intercept)`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi / lo - 1.0
}

fn verdict(name: &str, passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn unwrap_all(v: &[Option<f64>]) -> Vec<f64> {
    v.iter().map(|x| x.unwrap_or(f64::NAN)).collect()
}

fn fit(name: &str, x: &str, y: &str, xs: &[f64], ys: &[f64], band: [f64; 2]) -> Fit {
    let (slope, intercept) = log_log_fit(xs, ys);
    Fit {
        name: name.into(),
        x: x.into(),
        y: y.into(),
        slope,
        intercept,
        band,
    }
}

fn slope_verdict(f: &Fit) -> Verdict {
    verdict(
        &format!("{}-slope", f.name),
        f.slope >= f.band[0] && f.slope <= f.band[1],
        format!("slope {:.4} vs band [{:.3}, {:.3}]", f.slope, f.band[0], f.band[1]),
    )
}

/// Settings shared by every experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub solve: SolveOptions,
}

fn status_of(res: &Result<Solution>) -> String {
    match res {
        Ok(s) if s.converged => "ok".into(),
        Ok(s) => format!("nonconverged: residual {:e}", s.residual),
        Err(Error::IterationLimit { residual, .. }) => format!("nonconverged: residual {residual:e}"),
        Err(e) => format!("error: {e}"),
    }
}

fn provenance_hash(spec: ExperimentSpec, opts: &RunOptions) -> String {
    let sc = Scenario {
        domain: None,
        weight: None,
        coefficient: None,
        params: Default::default(),
        mode: Default::default(),
        calibrated_constant: None,
        sobolev_constant: None,
        h: None,
        cuesta_alternate: false,
        lambda1_unit: None,
        slack: 1e-3,
        solve: crate::scenario::SolveSpec {
            enabled: true,
            tol: opts.solve.tol,
            max_iter: opts.solve.max_iter,
            seed: opts.solve.seed,
            ..Default::default()
        },
        experiment: Some(spec),
    };
    sc.hash()
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn pi_p_pow(p: f64) -> Result<f64> {
    Ok(specfun::pi_p(p, &QuadratureSpec::default())?.powf(p))
}

// ---------------------------------------------------------------------------
// thin rectangles

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinRectParams {
    pub p: f64,
    pub radii: Vec<f64>,
    /// Base lattice spacing; each rectangle uses `min(h, R/16)`.
    pub h: f64,
    /// Radial nodes of the ball solve.
    pub ball_nodes: usize,
}

impl Default for ThinRectParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            radii: vec![1.0, 0.5, 0.25, 0.125],
            h: 1.0 / 64.0,
            ball_nodes: 2000,
        }
    }
}

impl ThinRectParams {
    fn spacing(&self, r: f64) -> f64 {
        self.h.min(r / 16.0)
    }
}

const THIN_COLUMNS: [&str; 8] = [
    "R",
    "lambda",
    "pseudo",
    "sandwich_lo",
    "sandwich_hi",
    "faber_krahn",
    "lyapunov",
    "ratio",
];

/// Rectangles `[0,R] × [0,1/R]`: numeric λ against the pseudo p-Laplacian
/// sandwich, the Faber–Krahn value and the Lyapunov functional `1/(r^{p-2}‖1‖_1)`.
pub fn thin_rect(params: &ThinRectParams, opts: &RunOptions) -> Result<ExperimentResult> {
    let p = params.p;
    if !(p > 2.0 && p <= 10.0) {
        return Err(cfg(format!("thin-rect needs 2 < p <= 10, got {p}")));
    }
    if params.radii.len() < 2 || params.radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(cfg("thin-rect needs at least two radii in (0, 1]"));
    }
    if !(params.h > 0.0 && params.h <= 0.25) {
        return Err(cfg(format!("thin-rect needs 0 < h <= 1/4, got {}", params.h)));
    }
    let hash = provenance_hash(
        ExperimentSpec::ThinRect {
            p: Some(p),
            radii: Some(params.radii.clone()),
            h: Some(params.h),
        },
        opts,
    );
    let pp = ProblemParams::new(p, 2)?;
    let ball = BallSolve {
        nodes: params.ball_nodes,
        opts: opts.solve,
    };
    let one = Weight::Constant(1.0);
    let rows: Vec<Row> = params
        .radii
        .par_iter()
        .map(|&r| -> Result<Row> {
            let h = params.spacing(r);
            let d = Domain::unit_corner_box(&[r, 1.0 / r])?;
            let hat = specfun::pseudo_lambda1_box(&[r, 1.0 / r], p)?.lambda_hat;
            let (lo, hi) = specfun::sandwich_from_pseudo(hat, p, 2);
            let fk = bounds::faber_krahn_bound(&d, &one, &pp, &ball)?.value;
            let ly = bounds::lyapunov_pgtn(&d, &one, &pp, &ConstantMode::Scaling, h)?.value;
            let sol = eigensolve::lambda1_grid(&d, h, &one, p, &opts.solve);
            let status = status_of(&sol);
            let lambda = sol.ok().filter(|s| s.converged).map(|s| s.lambda);
            let ratio = match (ly, fk) {
                (Some(a), Some(b)) => Some(a / b),
                _ => None,
            };
            Ok(Row {
                values: vec![Some(r), lambda, Some(hat), Some(lo), Some(hi), fk, ly, ratio],
                status,
                provenance: Provenance {
                    scenario_hash: hash.clone(),
                    seed: opts.solve.seed,
                    h,
                },
            })
        })
        .collect::<Result<_>>()?;
    finish("thin-rect", params, &THIN_COLUMNS, rows, thin_rect_verdicts)
}

type VerdictFn<P> = fn(&P, &Table<'_>) -> (Vec<Fit>, Vec<Verdict>);

fn finish<P: Serialize>(
    name: &str,
    params: &P,
    columns: &[&str],
    rows: Vec<Row>,
    verdicts: VerdictFn<P>,
) -> Result<ExperimentResult> {
    let columns: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
    let (fits, verdicts) = verdicts(
        params,
        &Table {
            columns: &columns,
            rows: &rows,
        },
    );
    Ok(ExperimentResult {
        experiment: name.into(),
        parameters: serde_json::to_value(params).expect("parameters serialize"),
        columns,
        rows,
        fits,
        verdicts,
    })
}

fn thin_rect_verdicts(params: &ThinRectParams, t: &Table<'_>) -> (Vec<Fit>, Vec<Verdict>) {
    let p = params.p;
    let rs = unwrap_all(&t.col("R"));
    let lam = unwrap_all(&t.col("lambda"));
    let lo = unwrap_all(&t.col("sandwich_lo"));
    let hi = unwrap_all(&t.col("sandwich_hi"));
    let fk = unwrap_all(&t.col("faber_krahn"));
    let ratio = unwrap_all(&t.col("ratio"));
    let mut out = Vec::new();
    let failed = t.all_ok();
    if let Some(f) = &failed {
        out.push(verdict("solves", false, f.clone()));
    }
    let inside: Vec<String> = (0..rs.len())
        .filter(|&i| !(lam[i] >= 0.98 * lo[i] && lam[i] <= 1.02 * hi[i]))
        .map(|i| format!("R = {}: {} not in [{}, {}]", rs[i], lam[i], lo[i], hi[i]))
        .collect();
    out.push(verdict(
        "sandwich",
        inside.is_empty(),
        if inside.is_empty() {
            "every λ within [0.98 lo, 1.02 hi]".into()
        } else {
            inside.join("; ")
        },
    ));
    let f = fit("lambda", "R", "lambda", &rs, &lam, [-p - 0.15, -p + 0.15]);
    out.push(slope_verdict(&f));
    let s = spread(&fk);
    out.push(verdict(
        "faber-krahn-constant",
        s.abs() <= 1e-9,
        format!("relative spread {s:e}"),
    ));
    let mut order: Vec<usize> = (0..rs.len()).collect();
    order.sort_by(|&a, &b| rs[b].total_cmp(&rs[a]));
    let grows = order.windows(2).all(|w| ratio[w[1]] > ratio[w[0]]);
    out.push(verdict(
        "ratio-growth",
        grows,
        format!(
            "lyapunov/faber-krahn from {:.4} at R = {} to {:.4} at R = {}",
            ratio[order[0]],
            rs[order[0]],
            ratio[*order.last().unwrap()],
            rs[*order.last().unwrap()]
        ),
    ));
    (vec![f], out)
}

// ---------------------------------------------------------------------------
// square spikes and the comparison bound

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSturmParams {
    pub p: f64,
    /// Reported `(R, M)` points.
    pub points: Vec<[f64; 2]>,
    /// Calibration `(R, M)` points, disjoint from `points`.
    pub calibration: Vec<[f64; 2]>,
    /// Largest lattice spacing; `None` picks `min(side/8, R/64)`. Rounded
    /// down so that it divides R.
    pub h: Option<f64>,
}

impl Default for SpikeSturmParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            points: vec![[4.0, 1.0], [8.0, 1.0], [4.0, 4.0]],
            calibration: vec![[2.0, 32.0], [3.0, 16.0], [2.0, 64.0]],
            h: None,
        }
    }
}

impl SpikeSturmParams {
    /// Largest divisor of R not above the requested spacing.
    fn spacing(&self, r: f64, m: f64) -> f64 {
        let side = 1.0 / m.sqrt();
        let target = self.h.unwrap_or((side / 8.0).min(r / 64.0));
        r / (r / target).ceil()
    }
}

const SPIKE_COLUMNS: [&str; 10] = [
    "role",
    "R",
    "M",
    "MR2",
    "mass",
    "lambda",
    "sturm",
    "lyapunov",
    "lyapunov_cal",
    "ratio",
];

/// `M` times the indicator of the centered square of side `1/√M` in `[0,R]^2`,
/// sampled on cells of side `h` with exact fractional coverage.
pub fn square_spike(r: f64, m: f64, h: f64) -> Result<Weight> {
    let k = (r / h).round() as usize;
    if k < 4 || ((k as f64) * h - r).abs() > 1e-9 * r {
        return Err(cfg(format!("R = {r} must be a multiple of h = {h}")));
    }
    let side = 1.0 / m.sqrt();
    let (a, b) = (0.5 * (r - side), 0.5 * (r + side));
    let cover = |i: usize| {
        let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
        (hi.min(b) - lo.max(a)).max(0.0) / h
    };
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            values[i * k + j] = m * cover(i) * cover(j);
        }
    }
    let mask = RasterMask::new(vec![k, k], h, vec![0.5 * h, 0.5 * h], vec![true; k * k])?;
    Ok(Weight::GridSampled { mask, values })
}

/// Unit-mass spikes of height `M` on `[0,R]^2`: the comparison bound
/// `λ_1(1)/M` against the Lyapunov functional with a constant calibrated on
/// a disjoint set of points.
pub fn spike_sturm(params: &SpikeSturmParams, opts: &RunOptions) -> Result<ExperimentResult> {
    let p = params.p;
    if !(p > 2.0 && p <= 10.0) {
        return Err(cfg(format!("spike-sturm needs 2 < p <= 10, got {p}")));
    }
    if params.points.is_empty() || params.calibration.is_empty() {
        return Err(cfg("spike-sturm needs reported and calibration points"));
    }
    for &[r, m] in params.points.iter().chain(&params.calibration) {
        if !(r >= 1.0 && m > 0.0 && m * r * r >= 1.0) {
            return Err(cfg(format!(
                "infeasible spike (R = {r}, M = {m}): need R >= 1 and M R^2 >= 1"
            )));
        }
        let h = params.spacing(r, m);
        if !(h > 0.0 && h <= 0.25 / m.sqrt() && h < 0.5 * r) {
            return Err(cfg(format!("h = {h} does not resolve the spike at (R = {r}, M = {m})")));
        }
    }
    if params.points.iter().any(|q| params.calibration.contains(q)) {
        return Err(cfg("calibration points must be disjoint from reported points"));
    }
    let hash = provenance_hash(
        ExperimentSpec::SpikeSturm {
            p: Some(p),
            points: Some(params.points.clone()),
            calibration: Some(params.calibration.clone()),
            h: params.h,
        },
        opts,
    );
    let pp = ProblemParams::new(p, 2)?;
    let pts: Vec<(f64, [f64; 2])> = params
        .calibration
        .iter()
        .map(|&q| (0.0, q))
        .chain(params.points.iter().map(|&q| (1.0, q)))
        .collect();
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|&(role, [r, m])| -> Result<Row> {
            let h = params.spacing(r, m);
            let d = Domain::unit_corner_box(&[r, r])?;
            let w = square_spike(r, m, h)?;
            let mass = match &w {
                Weight::GridSampled { values, .. } => values.iter().sum::<f64>() * h * h,
                _ => unreachable!(),
            };
            let hat = specfun::pseudo_lambda1_box(&[r, r], p)?.lambda_hat;
            let (lo, _) = specfun::sandwich_from_pseudo(hat, p, 2);
            let sturm = bounds::sturm_bound(m, lo)?.value;
            let ly = bounds::lyapunov_pgtn(&d, &w, &pp, &ConstantMode::Scaling, h)?.value;
            let sol = eigensolve::lambda1_grid(&d, h, &w, p, &opts.solve);
            let status = status_of(&sol);
            let lambda = sol.ok().filter(|s| s.converged).map(|s| s.lambda);
            Ok(Row {
                values: vec![
                    Some(role),
                    Some(r),
                    Some(m),
                    Some(m * r * r),
                    Some(mass),
                    lambda,
                    sturm,
                    ly,
                    None,
                    None,
                ],
                status,
                provenance: Provenance {
                    scenario_hash: hash.clone(),
                    seed: opts.solve.seed,
                    h,
                },
            })
        })
        .collect::<Result<_>>()?;
    let mut rows = rows;
    // the calibrated columns depend only on the calibration rows
    let c = calibration_constant(&rows);
    for row in rows.iter_mut() {
        let (ly, st) = (row.values[7], row.values[6]);
        row.values[8] = c.and_then(|c| ly.map(|l| c * l));
        row.values[9] = match (row.values[8], st) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        };
    }
    finish("spike-sturm", params, &SPIKE_COLUMNS, rows, spike_verdicts)
}

fn calibration_constant(rows: &[Row]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.values[0] == Some(0.0))
        .filter_map(|r| Some((r.values[7]?, r.values[5]?)))
        .collect();
    bounds::calibrate_constant(&pairs).ok()
}

fn spike_verdicts(_params: &SpikeSturmParams, t: &Table<'_>) -> (Vec<Fit>, Vec<Verdict>) {
    let role = unwrap_all(&t.col("role"));
    let rs = unwrap_all(&t.col("R"));
    let ms = unwrap_all(&t.col("M"));
    let mass = unwrap_all(&t.col("mass"));
    let lam = unwrap_all(&t.col("lambda"));
    let sturm = unwrap_all(&t.col("sturm"));
    let lyc = unwrap_all(&t.col("lyapunov_cal"));
    let ratio = unwrap_all(&t.col("ratio"));
    let mut out = Vec::new();
    if let Some(f) = t.all_ok() {
        out.push(verdict("solves", false, f));
    }
    let c = calibration_constant(t.rows);
    out.push(verdict(
        "calibration",
        c.is_some(),
        format!(
            "constant {}",
            c.map(|c| format!("{c:.6}")).unwrap_or("unavailable".into())
        ),
    ));
    let m_err = mass.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    out.push(verdict(
        "unit-mass",
        m_err <= 1e-12,
        format!("max |∫w - 1| = {m_err:e}"),
    ));
    let bad: Vec<String> = (0..rs.len())
        .filter(|&i| !(sturm[i] <= lam[i] * (1.0 + 1e-6)))
        .map(|i| format!("(R = {}, M = {}): {} > {}", rs[i], ms[i], sturm[i], lam[i]))
        .collect();
    out.push(verdict(
        "comparison-below-lambda",
        bad.is_empty(),
        if bad.is_empty() {
            "all points".into()
        } else {
            bad.join("; ")
        },
    ));
    let rep: Vec<usize> = (0..rs.len()).filter(|&i| role[i] == 1.0).collect();
    let bad: Vec<String> = rep
        .iter()
        .filter(|&&i| !(lyc[i] <= lam[i] * (1.0 + 1e-6)))
        .map(|&i| format!("(R = {}, M = {}): {} > {}", rs[i], ms[i], lyc[i], lam[i]))
        .collect();
    out.push(verdict(
        "calibrated-lyapunov-below-lambda",
        bad.is_empty(),
        if bad.is_empty() {
            "all reported points".into()
        } else {
            bad.join("; ")
        },
    ));
    // ratio / (M R^2) must not depend on the point
    let norm: Vec<f64> = rep.iter().map(|&i| ratio[i] / (ms[i] * rs[i] * rs[i])).collect();
    let s = if norm.is_empty() { f64::NAN } else { spread(&norm) };
    out.push(verdict(
        "ratio-scales-with-MR2",
        s <= 0.15,
        format!("spread of ratio/(M R^2) over reported points {s:e}"),
    ));
    (Vec::new(), out)
}

// ---------------------------------------------------------------------------
// radial spikes on growing balls

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityParams {
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub radii: Vec<f64>,
    pub betas: Vec<f64>,
    pub nodes: usize,
}

impl Default for OptimalityParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            n: 2,
            alpha: 0.9,
            radii: vec![2.0, 4.0, 8.0, 16.0],
            betas: vec![0.5],
            nodes: 4000,
        }
    }
}

fn optimality_columns(betas: &[f64]) -> Vec<String> {
    let mut c: Vec<String> = ["R", "eps", "lambda", "w1", "lambda_w1", "test_bound"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    c.extend(betas.iter().map(|b| format!("product_beta_{b}")));
    c
}

/// `w = χ_{|x| < ε} |x|^{1-N}` with `ε = R^α` on `B(0,R)`: the products
/// `λ ‖w‖_1 R^β` for `β < α(p-N)` decay, so no bound `C/R^β` can hold.
pub fn optimality(params: &OptimalityParams, opts: &RunOptions) -> Result<ExperimentResult> {
    let (p, n, alpha) = (params.p, params.n, params.alpha);
    let nf = n as f64;
    if !(p > nf && p <= 10.0 && n >= 1) {
        return Err(cfg(format!("optimality needs N < p <= 10, got p = {p}, N = {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(cfg(format!("optimality needs 0 < α < 1, got {alpha}")));
    }
    if params.radii.len() < 2 || params.radii.iter().any(|&r| !(r > 1.0)) {
        return Err(cfg("optimality needs at least two radii > 1"));
    }
    if let Some(b) = params.betas.iter().find(|&&b| !(b < alpha * (p - nf))) {
        return Err(cfg(format!("β = {b} must be below α(p-N) = {}", alpha * (p - nf))));
    }
    if params.nodes < 16 {
        return Err(cfg("optimality needs at least 16 radial nodes"));
    }
    let hash = provenance_hash(
        ExperimentSpec::Optimality {
            p: Some(p),
            n: Some(n),
            alpha: Some(alpha),
            radii: Some(params.radii.clone()),
            betas: Some(params.betas.clone()),
            nodes: Some(params.nodes),
        },
        opts,
    );
    let pipp = pi_p_pow(p)?;
    let omega = geometry::surface_measure_unit_sphere(n);
    let rows: Vec<Row> = params
        .radii
        .par_iter()
        .map(|&r| -> Result<Row> {
            let eps = r.powf(alpha);
            let h = r / (params.nodes as f64 + 0.5);
            let w = Weight::SpikeRadial { eps, n };
            let w1 = omega * eps;
            let test = eps.powf(nf - 1.0) * pipp / eps.powf(p);
            let sol = eigensolve::lambda1_radial(n, r, p, &w, nf - 1.0, params.nodes, &opts.solve);
            let status = status_of(&sol);
            let lambda = sol.ok().filter(|s| s.converged).map(|s| s.lambda);
            let mut values = vec![Some(r), Some(eps), lambda, Some(w1), lambda.map(|l| l * w1), Some(test)];
            values.extend(params.betas.iter().map(|b| lambda.map(|l| l * w1 * r.powf(*b))));
            Ok(Row {
                values,
                status,
                provenance: Provenance {
                    scenario_hash: hash.clone(),
                    seed: opts.solve.seed,
                    h,
                },
            })
        })
        .collect::<Result<_>>()?;
    let columns = optimality_columns(&params.betas);
    let cols: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    finish("optimality", params, &cols, rows, optimality_verdicts)
}

fn optimality_verdicts(params: &OptimalityParams, t: &Table<'_>) -> (Vec<Fit>, Vec<Verdict>) {
    let target = -params.alpha * (params.p - params.n as f64);
    let rs = unwrap_all(&t.col("R"));
    let lam = unwrap_all(&t.col("lambda"));
    let lw = unwrap_all(&t.col("lambda_w1"));
    let test = unwrap_all(&t.col("test_bound"));
    let mut out = Vec::new();
    if let Some(f) = t.all_ok() {
        out.push(verdict("solves", false, f));
    }
    let f = fit("lambda_w1", "R", "lambda_w1", &rs, &lw, [target - 0.1, target + 0.15]);
    out.push(slope_verdict(&f));
    let bad: Vec<String> = (0..rs.len())
        .filter(|&i| !(lam[i] <= test[i]))
        .map(|i| format!("R = {}: {} > {}", rs[i], lam[i], test[i]))
        .collect();
    out.push(verdict(
        "test-function-bound",
        bad.is_empty(),
        if bad.is_empty() {
            "every point".into()
        } else {
            bad.join("; ")
        },
    ));
    let mut order: Vec<usize> = (0..rs.len()).collect();
    order.sort_by(|&a, &b| rs[a].total_cmp(&rs[b]));
    for b in &params.betas {
        let prod = unwrap_all(&t.col(&format!("product_beta_{b}")));
        let dec = order.windows(2).all(|w| prod[w[1]] < prod[w[0]]);
        let drop = prod[order[0]] / prod[*order.last().unwrap()];
        out.push(verdict(
            &format!("product-decreasing-beta-{b}"),
            dec && drop >= 1.5,
            format!("strictly decreasing: {dec}; first/last = {drop:.4}"),
        ));
    }
    (vec![f], out)
}

// ---------------------------------------------------------------------------
// distance coefficients on balls

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistCoeffParams {
    pub p: f64,
    pub n: usize,
    pub gammas: Vec<f64>,
    pub radii: Vec<f64>,
    pub nodes: usize,
}

impl Default for DistCoeffParams {
    fn default() -> Self {
        Self {
            p: 3.0,
            n: 2,
            gammas: vec![-0.5, 0.0, 0.4],
            radii: vec![0.5, 1.0, 2.0],
            nodes: 2000,
        }
    }
}

const DIST_COLUMNS: [&str; 5] = ["gamma", "R", "lambda", "scaled", "functional"];

/// `-div(d^γ |∇u|^{p-2} ∇u) = λ |u|^{p-2} u` on balls: exact scaling in `R`
/// and the scale-free functional `λ R^{p-N-γ} |B_R|`.
pub fn dist_coeff(params: &DistCoeffParams, opts: &RunOptions) -> Result<ExperimentResult> {
    let (p, n) = (params.p, params.n);
    let nf = n as f64;
    if !(p > nf && p <= 10.0 && n >= 1) {
        return Err(cfg(format!("dist-coeff needs N < p <= 10, got p = {p}, N = {n}")));
    }
    if let Some(g) = params.gammas.iter().find(|&&g| !(g > -1.0 && g < p / nf - 1.0)) {
        return Err(cfg(format!("γ = {g} outside (-1, p/N - 1 = {})", p / nf - 1.0)));
    }
    if !params.gammas.iter().any(|&g| g < 0.0) || !params.gammas.iter().any(|&g| g > 0.0) {
        return Err(cfg("dist-coeff needs both negative and positive γ"));
    }
    if params.radii.len() < 2 || params.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(cfg("dist-coeff needs at least two positive radii"));
    }
    if params.nodes < 16 {
        return Err(cfg("dist-coeff needs at least 16 radial nodes"));
    }
    let hash = provenance_hash(
        ExperimentSpec::DistCoeff {
            p: Some(p),
            n: Some(n),
            gammas: Some(params.gammas.clone()),
            radii: Some(params.radii.clone()),
            nodes: Some(params.nodes),
        },
        opts,
    );
    let pts: Vec<(f64, f64)> = params
        .gammas
        .iter()
        .flat_map(|&g| params.radii.iter().map(move |&r| (g, r)))
        .collect();
    let vol = geometry::unit_ball_volume(n);
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|&(g, r)| -> Result<Row> {
            let h = r / (params.nodes as f64 + 0.5);
            let sol = eigensolve::lambda1_radial_coeff(n, r, p, g, params.nodes, &opts.solve);
            let status = status_of(&sol);
            let lambda = sol.ok().filter(|s| s.converged).map(|s| s.lambda);
            Ok(Row {
                values: vec![
                    Some(g),
                    Some(r),
                    lambda,
                    lambda.map(|l| l * r.powf(p - g)),
                    lambda.map(|l| l * r.powf(p - nf - g) * vol * r.powf(nf)),
                ],
                status,
                provenance: Provenance {
                    scenario_hash: hash.clone(),
                    seed: opts.solve.seed,
                    h,
                },
            })
        })
        .collect::<Result<_>>()?;
    finish("dist-coeff", params, &DIST_COLUMNS, rows, dist_coeff_verdicts)
}

fn dist_coeff_verdicts(params: &DistCoeffParams, t: &Table<'_>) -> (Vec<Fit>, Vec<Verdict>) {
    let gs = unwrap_all(&t.col("gamma"));
    let rs = unwrap_all(&t.col("R"));
    let lam = unwrap_all(&t.col("lambda"));
    let scaled = unwrap_all(&t.col("scaled"));
    let func = unwrap_all(&t.col("functional"));
    let mut out = Vec::new();
    let mut fits = Vec::new();
    if let Some(f) = t.all_ok() {
        out.push(verdict("solves", false, f));
    }
    for &g in &params.gammas {
        let idx: Vec<usize> = (0..gs.len()).filter(|&i| gs[i] == g).collect();
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let s1 = spread(&pick(&scaled));
        out.push(verdict(
            &format!("scaling-gamma-{g}"),
            s1 <= 0.015,
            format!("spread of λ R^(p-γ) {s1:e}"),
        ));
        let s2 = spread(&pick(&func));
        out.push(verdict(
            &format!("scale-free-gamma-{g}"),
            s2 <= 0.02,
            format!("spread of λ R^(p-N-γ)|B_R| {s2:e}"),
        ));
        let e = g - params.p;
        fits.push(fit(
            &format!("lambda-gamma-{g}"),
            "R",
            "lambda",
            &pick(&rs),
            &pick(&lam),
            [e - 0.05, e + 0.05],
        ));
    }
    (fits, out)
}

/// Runs a scenario's experiment block with defaults for omitted fields.
/// `h` replaces the spacing (lattice experiments) or sets `nodes = ⌈1/h⌉`
/// (radial experiments).
pub fn run_spec(spec: &ExperimentSpec, h: Option<f64>, opts: &RunOptions) -> Result<ExperimentResult> {
    if let Some(h) = h {
        if !(h.is_finite() && h > 0.0) {
            return Err(cfg(format!("h must be finite and > 0, got {h}")));
        }
    }
    let nodes = |h: Option<f64>, given: Option<usize>, def: usize| {
        h.map(|h| (1.0 / h).ceil() as usize).or(given).unwrap_or(def)
    };
    match spec.clone() {
        ExperimentSpec::ThinRect { p, radii, h: hh } => {
            let d = ThinRectParams::default();
            thin_rect(
                &ThinRectParams {
                    p: p.unwrap_or(d.p),
                    radii: radii.unwrap_or(d.radii),
                    h: h.or(hh).unwrap_or(d.h),
                    ..d
                },
                opts,
            )
        }
        ExperimentSpec::SpikeSturm {
            p,
            points,
            calibration,
            h: hh,
        } => {
            let d = SpikeSturmParams::default();
            spike_sturm(
                &SpikeSturmParams {
                    p: p.unwrap_or(d.p),
                    points: points.unwrap_or(d.points),
                    calibration: calibration.unwrap_or(d.calibration),
                    h: h.or(hh),
                },
                opts,
            )
        }
        ExperimentSpec::Optimality {
            p,
            n,
            alpha,
            radii,
            betas,
            nodes: nd,
        } => {
            let d = OptimalityParams::default();
            optimality(
                &OptimalityParams {
                    p: p.unwrap_or(d.p),
                    n: n.unwrap_or(d.n),
                    alpha: alpha.unwrap_or(d.alpha),
                    radii: radii.unwrap_or(d.radii),
                    betas: betas.unwrap_or(d.betas),
                    nodes: nodes(h, nd, d.nodes),
                },
                opts,
            )
        }
        ExperimentSpec::DistCoeff {
            p,
            n,
            gammas,
            radii,
            nodes: nd,
        } => {
            let d = DistCoeffParams::default();
            dist_coeff(
                &DistCoeffParams {
                    p: p.unwrap_or(d.p),
                    n: n.unwrap_or(d.n),
                    gammas: gammas.unwrap_or(d.gammas),
                    radii: radii.unwrap_or(d.radii),
                    nodes: nodes(h, nd, d.nodes),
                },
                opts,
            )
        }
    }
}
