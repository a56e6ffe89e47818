//! Lower bounds for the first eigenvalue, each returned with the hypotheses
//! it was checked against.
//!
//! Most inequalities carry a universal constant with no known value. Those are
//! reported under [`ConstantMode::Scaling`] as functionals (constant set to 1)
//! and are never asserted against numeric eigenvalues; only bounds with exact
//! constants are marked `certified`.

use serde::Serialize;

use crate::eigensolve::{self, SolveOptions};
use crate::error::{check_exponent, check_positive, Error, Result};
use crate::geometry::{self, Domain};
use crate::specfun;
use crate::weights::{self, AtSampling, Weight};

/// Exponents of an eigenvalue problem. `s`, `t` and `gamma` are only needed by
/// the bounds that use them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub p: f64,
    pub n: usize,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub gamma: Option<f64>,
}

impl ProblemParams {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        check_exponent("p", p)?;
        if n < 1 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: "dimension must be >= 1".into(),
            });
        }
        Ok(Self {
            p,
            n,
            s: None,
            t: None,
            gamma: None,
        })
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// Exponents of the Hardy–Sobolev interpolation used when `p < N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub p_star: f64,
    pub s_prime: f64,
    pub q: f64,
    pub alpha: f64,
}

impl ExponentSet {
    /// Requires `p < N` and `s > N/p`.
    pub fn new(p: f64, n: usize, s: f64) -> Result<Self> {
        check_exponent("p", p)?;
        let nf = n as f64;
        if p >= nf {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("needs p < N, got p = {p}, N = {n}"),
            });
        }
        if !(s > nf / p && s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("needs N/p < s < ∞, got s = {s}"),
            });
        }
        let p_star = nf * p / (nf - p);
        let s_prime = s / (s - 1.0);
        let q = p * s_prime;
        let alpha = (p_star - q) / (p_star - p);
        Ok(Self {
            p_star,
            s_prime,
            q,
            alpha,
        })
    }

    /// `α p / s'`, the power of the inner radius.
    pub fn radius_exponent(&self, p: f64) -> f64 {
        self.alpha * p / self.s_prime
    }
}

/// How the unknown constant of an inequality is filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ConstantMode {
    /// Constant set to 1; the value is a functional, not a bound.
    Scaling,
    Explicit(f64),
    /// The sharp one-dimensional constant.
    OneDimExact,
    /// Hardy constant `(p/(N-p))^p` for convex domains combined with a
    /// user-supplied Sobolev constant.
    ConvexHardy {
        sobolev: f64,
    },
    /// A constant fitted from solved scenarios (see [`calibrate_constant`]).
    Calibrated(f64),
}

impl ConstantMode {
    pub fn label(&self) -> &'static str {
        match self {
            ConstantMode::Scaling => "scaling",
            ConstantMode::Explicit(_) => "explicit",
            ConstantMode::OneDimExact => "exact-1d",
            ConstantMode::ConvexHardy { .. } => "convex-hardy",
            ConstantMode::Calibrated(_) => "calibrated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConstantMode::Explicit(c) | ConstantMode::Calibrated(c) => check_positive("constant", c),
            ConstantMode::ConvexHardy { sobolev } => check_positive("sobolev", sobolev),
            _ => Ok(()),
        }
    }

    /// Plain multiplicative constant; `None` for modes that need context.
    fn plain(&self) -> Option<f64> {
        match *self {
            ConstantMode::Scaling => Some(1.0),
            ConstantMode::Explicit(c) | ConstantMode::Calibrated(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl HypothesisCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    /// Lower bound for `λ_1` (or the functional, under scaling); absent when a
    /// hypothesis fails.
    pub value: Option<f64>,
    pub mode: String,
    /// Holds with a known constant, so it may be checked against numerics.
    pub certified: bool,
    pub functional_only: bool,
    pub hypotheses: Vec<HypothesisCheck>,
    /// Short description of where the constant comes from.
    pub tag: String,
}

impl BoundReport {
    fn new(name: &str, mode: &ConstantMode, tag: &str) -> Self {
        Self {
            name: name.into(),
            value: None,
            mode: mode.label().into(),
            certified: false,
            functional_only: matches!(mode, ConstantMode::Scaling),
            hypotheses: Vec::new(),
            tag: tag.into(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.hypotheses.push(HypothesisCheck::new(name, passed, detail));
        passed
    }

    pub fn hypotheses_pass(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }

    fn set(&mut self, value: f64) {
        if self.hypotheses_pass() {
            self.value = Some(value);
        }
    }

    fn inapplicable(name: &str, mode: &ConstantMode, tag: &str, why: String) -> Self {
        let mut r = Self::new(name, mode, tag);
        r.check("applicable", false, why);
        r
    }
}

/// Exponents closer than this to zero are flagged as near-degenerate.
const NEAR_DEGENERATE: f64 = 1e-3;

fn positive_norm(norm: f64, what: &str) -> Result<f64> {
    if norm > 0.0 && norm.is_finite() {
        Ok(norm)
    } else {
        Err(Error::DegenerateWeight(format!("{what} = {norm}")))
    }
}

/// `λ_1 ≥ 2^p / (L^{p-1} ‖w‖_1)` on `(0, L)`, with the sharp constant.
pub fn lyapunov_1d(l: f64, w: &Weight, p: f64) -> Result<BoundReport> {
    check_positive("L", l)?;
    check_exponent("p", p)?;
    let d = Domain::unit_corner_box(&[l])?;
    let norm = positive_norm(weights::ls_norm(w, &d, 1.0, l / 8192.0)?, "‖w‖_1")?;
    let mut r = BoundReport::new("lyapunov-1d", &ConstantMode::OneDimExact, "sharp constant 2^p");
    r.check("w >= 0", true, "weights are nonnegative by construction");
    r.certified = true;
    r.set(2f64.powf(p) / (l.powf(p - 1.0) * norm));
    Ok(r)
}

/// `λ_1 ≥ C / (r_Ω^{p-N} ‖w‖_1)` for `p > N`.
pub fn lyapunov_pgtn(d: &Domain, w: &Weight, pp: &ProblemParams, mode: &ConstantMode, h: f64) -> Result<BoundReport> {
    mode.validate()?;
    let mut r = BoundReport::new("lyapunov-p>N", mode, "morrey constant");
    let (p, nf) = (pp.p, pp.nf());
    r.check("p > N", p > nf, format!("p = {p}, N = {}", pp.n));
    r.check("w >= 0", true, "weights are nonnegative by construction");
    let c = match mode {
        ConstantMode::OneDimExact => {
            // 2^p / L^{p-1} = 2 / r^{p-1} with r = L/2
            r.check("N = 1", pp.n == 1, "the sharp constant is one-dimensional");
            r.certified = pp.n == 1 && matches!(d, Domain::Box { .. });
            2.0
        }
        ConstantMode::ConvexHardy { .. } => {
            r.check("mode", false, "the Hardy constant applies to p < N only");
            1.0
        }
        m => m.plain().unwrap_or(1.0),
    };
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let norm = positive_norm(weights::ls_norm(w, d, 1.0, h)?, "‖w‖_1")?;
    let rad = d.inner_radius();
    r.set(c / (rad.powf(p - nf) * norm));
    Ok(r)
}

/// `λ_1 ≥ C / (r_Ω^{(sp-N)/s} ‖w‖_s)` for `p < N`, `s > N/p`.
pub fn lyapunov_pltn(d: &Domain, w: &Weight, pp: &ProblemParams, mode: &ConstantMode, h: f64) -> Result<BoundReport> {
    mode.validate()?;
    let mut r = BoundReport::new("lyapunov-p<N", mode, "hardy-sobolev constant");
    let (p, nf) = (pp.p, pp.nf());
    r.check("p < N", p < nf, format!("p = {p}, N = {}", pp.n));
    let Some(s) = pp.s else {
        r.check("s given", false, "the weight exponent s is required");
        return Ok(r);
    };
    r.check("s > N/p", s > nf / p, format!("s = {s}, N/p = {}", nf / p));
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let ex = ExponentSet::new(p, pp.n, s)?;
    let e = ex.radius_exponent(p);
    let direct = (s * p - nf) / s;
    r.check(
        "αp/s' = (sp-N)/s",
        (e - direct).abs() <= 1e-12 * direct.abs().max(1.0),
        format!("{e} vs {direct}"),
    );
    r.check(
        "exponent not degenerate",
        direct > NEAR_DEGENERATE,
        format!("(sp-N)/s = {direct}"),
    );
    if !matches!(mode, ConstantMode::Scaling) {
        r.check(
            "convex domain",
            d.is_convex(),
            "non-convex domains depend on the exterior capacity; use scaling",
        );
    }
    let c = match mode {
        ConstantMode::ConvexHardy { sobolev } => {
            let ch = (p / (nf - p)).powf(p);
            let chs = ch.powf(ex.alpha) * sobolev.powf(1.0 - ex.alpha);
            chs.powf(-1.0 / ex.s_prime)
        }
        ConstantMode::OneDimExact => {
            r.check("mode", false, "the sharp constant is one-dimensional");
            1.0
        }
        m => m.plain().unwrap_or(1.0),
    };
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let norm = positive_norm(weights::ls_norm(w, d, s, h)?, "‖w‖_s")?;
    r.set(c / (d.inner_radius().powf(direct) * norm));
    Ok(r)
}

/// `λ_1 ≥ [C r_Ω^{p-tN} g(r_Ω)^{t-1} ‖w‖_1]^{-1}` for a degenerate coefficient
/// `v ∈ A_t`, `1 < t < p/N`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_degenerate(
    d: &Domain,
    v: &Weight,
    w: &Weight,
    pp: &ProblemParams,
    mode: &ConstantMode,
    h: f64,
    sampling: &AtSampling,
) -> Result<BoundReport> {
    mode.validate()?;
    let mut r = BoundReport::new("lyapunov-degenerate", mode, "morrey constant for A_t coefficients");
    let (p, nf) = (pp.p, pp.nf());
    r.check("p > N", p > nf, format!("p = {p}, N = {}", pp.n));
    let Some(t) = pp.t else {
        r.check("t given", false, "the Muckenhoupt exponent t is required");
        return Ok(r);
    };
    r.check(
        "1 < t < p/N",
        t > 1.0 && t < p / nf,
        format!("t = {t}, p/N = {}", p / nf),
    );
    if let Some(c) = mode.plain() {
        let _ = c;
    } else {
        r.check("mode", false, "only scaling, explicit or calibrated constants apply");
    }
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let at = weights::muckenhoupt_constant(v, d, t, sampling)?;
    r.check(
        "v in A_t",
        !at.diverged,
        format!("sampled constant {} over {} balls", at.constant, at.balls_sampled),
    );
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let g = weights::g_function(v, d, t, h)?;
    let norm = positive_norm(weights::ls_norm(w, d, 1.0, h)?, "‖w‖_1")?;
    let c = mode.plain().unwrap_or(1.0);
    let rad = d.inner_radius();
    r.set(1.0 / (c * rad.powf(p - t * nf) * g.powf(t - 1.0) * norm));
    Ok(r)
}

/// `λ_1 ≥ [C r_Ω^{p-N-γ} ‖w‖_1]^{-1}` for the coefficient `d_Ω^γ`.
pub fn lyapunov_distance_coeff(
    d: &Domain,
    gamma: f64,
    w: &Weight,
    pp: &ProblemParams,
    mode: &ConstantMode,
    h: f64,
) -> Result<BoundReport> {
    mode.validate()?;
    let mut r = BoundReport::new("lyapunov-distance", mode, "morrey constant for distance coefficients");
    let (p, nf) = (pp.p, pp.nf());
    r.check("p > N", p > nf, format!("p = {p}, N = {}", pp.n));
    r.check(
        "-1 < γ < p/N - 1",
        gamma > -1.0 && gamma < p / nf - 1.0,
        format!("γ = {gamma}, p/N - 1 = {}", p / nf - 1.0),
    );
    if mode.plain().is_none() {
        r.check("mode", false, "only scaling, explicit or calibrated constants apply");
    }
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let norm = positive_norm(weights::ls_norm(w, d, 1.0, h)?, "‖w‖_1")?;
    let c = mode.plain().unwrap_or(1.0);
    r.set(1.0 / (c * d.inner_radius().powf(p - nf - gamma) * norm));
    Ok(r)
}

/// `σ` in `λ ≥ C / (|Ω|^σ ‖w‖_∞)`: `p/N` for `p ≤ N`, otherwise `1/2`.
pub fn anane_sigma(p: f64, n: usize) -> f64 {
    if p <= n as f64 {
        p / n as f64
    } else {
        0.5
    }
}

/// `λ_1 ≥ C / (|Ω|^σ ‖w‖_∞)`; unbounded weights are inapplicable.
pub fn anane_bound(d: &Domain, w: &Weight, pp: &ProblemParams, mode: &ConstantMode) -> Result<BoundReport> {
    mode.validate()?;
    let sup = w.sup_norm(d)?;
    let mut r = BoundReport::new("anane", mode, "measure and sup-norm constant");
    let sup = positive_norm(sup, "‖w‖_∞")?;
    if mode.plain().is_none() {
        r.check("mode", false, "only scaling, explicit or calibrated constants apply");
        return Ok(r);
    }
    r.check("w bounded", true, format!("‖w‖_∞ = {sup}"));
    let sigma = anane_sigma(pp.p, pp.n);
    r.set(mode.plain().unwrap() / (d.measure().powf(sigma) * sup));
    Ok(r)
}

/// Measure exponent of the L^s bound: `(p-N)/(sN)`, or `(sp-N)/(sN)` when
/// `alternate` is set.
pub fn cuesta_exponent(p: f64, n: usize, s: f64, alternate: bool) -> f64 {
    let nf = n as f64;
    if alternate {
        (s * p - nf) / (s * nf)
    } else {
        (p - nf) / (s * nf)
    }
}

/// `λ_1 ≥ C / (|Ω|^e ‖w‖_s)` with `s > N/p` when `p ≤ N` and `s = 1` when
/// `p > N`.
pub fn cuesta_bound(
    d: &Domain,
    w: &Weight,
    pp: &ProblemParams,
    mode: &ConstantMode,
    h: f64,
    alternate: bool,
) -> Result<BoundReport> {
    mode.validate()?;
    let name = if alternate { "cuesta-alt" } else { "cuesta" };
    let mut r = BoundReport::new(name, mode, "measure and L^s constant");
    let (p, nf) = (pp.p, pp.nf());
    let s = match pp.s {
        Some(s) => s,
        None if p > nf => 1.0,
        None => {
            r.check("s given", false, "p <= N needs an exponent s > N/p");
            return Ok(r);
        }
    };
    if p <= nf {
        r.check("s > N/p", s > nf / p, format!("s = {s}, N/p = {}", nf / p));
    } else {
        r.check("s = 1", s == 1.0, format!("s = {s}"));
    }
    if mode.plain().is_none() {
        r.check("mode", false, "only scaling, explicit or calibrated constants apply");
    }
    if !r.hypotheses_pass() {
        return Ok(r);
    }
    let norm = positive_norm(weights::ls_norm(w, d, s, h)?, "‖w‖_s")?;
    let e = cuesta_exponent(p, pp.n, s, alternate);
    r.set(mode.plain().unwrap() / (d.measure().powf(e) * norm));
    Ok(r)
}

/// `λ_1(w) ≥ λ_1(1) / M` for `0 ≤ w ≤ M`.
pub fn sturm_bound(m: f64, lambda1_unit: f64) -> Result<BoundReport> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::DegenerateWeight(format!("sup bound M = {m}")));
    }
    check_positive("lambda1_unit", lambda1_unit)?;
    let mut r = BoundReport::new(
        "sturm",
        &ConstantMode::Explicit(1.0),
        "comparison with the constant majorant",
    );
    r.mode = "exact".into();
    r.certified = true;
    r.check("0 <= w <= M", true, format!("M = {m}"));
    r.set(lambda1_unit / m);
    Ok(r)
}

/// Radial resolution and solver settings used to compute ball eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSolve {
    pub nodes: usize,
    pub opts: SolveOptions,
}

impl Default for BallSolve {
    fn default() -> Self {
        Self {
            nodes: 2000,
            opts: SolveOptions::default(),
        }
    }
}

/// `λ_1(B) ≤ λ_1(Ω)` with `|B| = |Ω|`, `λ_1(B)` from the radial solver. A
/// constant weight `c` divides the value by `c`.
pub fn faber_krahn_bound(d: &Domain, w: &Weight, pp: &ProblemParams, ball: &BallSolve) -> Result<BoundReport> {
    let mut r = BoundReport::new("faber-krahn", &ConstantMode::Explicit(1.0), "numeric ball eigenvalue");
    r.mode = "exact".into();
    let c = match w {
        Weight::Constant(c) => *c,
        _ => 0.0,
    };
    if !r.check("constant weight", c > 0.0, "only constant weights compare with balls") {
        return Ok(r);
    }
    r.certified = true;
    let rho = ball_radius(d.measure(), pp.n);
    let sol = eigensolve::lambda1_radial(
        pp.n,
        rho,
        pp.p,
        &Weight::Constant(1.0),
        (pp.n - 1) as f64,
        ball.nodes,
        &ball.opts,
    )?;
    r.set(sol.lambda / c);
    Ok(r)
}

/// Radius of the ball of measure `m` in `R^N`.
pub fn ball_radius(m: f64, n: usize) -> f64 {
    (m / geometry::unit_ball_volume(n)).powf(1.0 / n as f64)
}

/// `λ_1(B)(1 + A^{2+p}/C)` from a Faber–Krahn value and an asymmetry index.
pub fn fk_improved_bound(
    fk: &BoundReport,
    asymmetry: f64,
    pp: &ProblemParams,
    mode: &ConstantMode,
) -> Result<BoundReport> {
    mode.validate()?;
    let mut r = BoundReport::new("faber-krahn-stable", mode, "quantitative isoperimetric constant");
    r.check(
        "0 <= A <= 2",
        (0.0..=2.0).contains(&asymmetry),
        format!("A = {asymmetry}"),
    );
    r.check(
        "faber-krahn available",
        fk.value.is_some(),
        "needs the plain ball value",
    );
    let Some(c) = mode.plain() else {
        r.check("mode", false, "only scaling, explicit or calibrated constants apply");
        return Ok(r);
    };
    if let Some(base) = fk.value {
        r.set(base * (1.0 + asymmetry.powf(2.0 + pp.p) / c));
    }
    Ok(r)
}

/// `λ_1 ≥ 1 / (k² r_Ω²)` for planar domains of connectivity `k ≥ 2`, `p = 2`.
pub fn osserman_bound(inner_radius: f64, k: usize, pp: &ProblemParams) -> Result<BoundReport> {
    if pp.p != 2.0 || pp.n != 2 {
        return Err(Error::Inapplicable(format!(
            "needs p = N = 2, got p = {}, N = {}",
            pp.p, pp.n
        )));
    }
    check_positive("inner radius", inner_radius)?;
    let mut r = BoundReport::new("osserman", &ConstantMode::Explicit(1.0), "sharp planar constant");
    r.mode = "exact".into();
    r.check("k >= 2", k >= 2, format!("k = {k}"));
    r.certified = true;
    let kf = k as f64;
    r.set(1.0 / (kf * kf * inner_radius * inner_radius));
    Ok(r)
}

/// Lower member of the pseudo p-Laplacian sandwich on a box with constant
/// weight `c`.
pub fn pseudo_box_bound(d: &Domain, w: &Weight, pp: &ProblemParams) -> Result<BoundReport> {
    let mut r = BoundReport::new("pseudo-box", &ConstantMode::Explicit(1.0), "norm equivalence on R^N");
    r.mode = "exact".into();
    let lengths = match d {
        Domain::Box { lengths, .. } => Some(lengths.clone()),
        _ => None,
    };
    r.check("box domain", lengths.is_some(), "explicit only on boxes");
    let c = match w {
        Weight::Constant(c) => *c,
        _ => 0.0,
    };
    r.check("constant weight", c > 0.0, "explicit only for constant weights");
    let Some(lengths) = lengths.filter(|_| c > 0.0) else {
        return Ok(r);
    };
    r.certified = true;
    let hat = specfun::pseudo_lambda1_box(&lengths, pp.p)?;
    let (lo, _) = specfun::sandwich_from_pseudo(hat.lambda_hat, pp.p, pp.n);
    r.set(lo / c);
    Ok(r)
}

/// Largest constant `C` with `C · functional ≤ λ` over every pair; reported as
/// an empirical constant.
pub fn calibrate_constant(pairs: &[(f64, f64)]) -> Result<f64> {
    let c = pairs
        .iter()
        .filter(|(f, l)| *f > 0.0 && f.is_finite() && l.is_finite())
        .map(|(f, l)| l / f)
        .fold(f64::INFINITY, f64::min);
    if c.is_finite() && c > 0.0 {
        Ok(c)
    } else {
        Err(Error::InvalidParameter {
            name: "pairs",
            reason: "need at least one positive functional with a finite eigenvalue".into(),
        })
    }
}

/// Everything [`compare_all`] needs to evaluate the applicable bounds.
#[derive(Debug, Clone)]
pub struct BoundScenario {
    pub domain: Domain,
    pub weight: Weight,
    /// Degenerate coefficient `v`, if any.
    pub coefficient: Option<Weight>,
    pub params: ProblemParams,
    pub mode: ConstantMode,
    pub h: f64,
    pub cuesta_alternate: bool,
    pub ball: BallSolve,
    pub sampling: AtSampling,
    /// `λ_1` of the domain with unit weight, for the comparison bound.
    pub lambda1_unit: Option<f64>,
}

impl BoundScenario {
    pub fn new(domain: Domain, weight: Weight, params: ProblemParams) -> Self {
        let h = domain.inner_radius() / 32.0;
        Self {
            domain,
            weight,
            coefficient: None,
            params,
            mode: ConstantMode::Scaling,
            h,
            cuesta_alternate: false,
            ball: BallSolve::default(),
            sampling: AtSampling::default(),
            lambda1_unit: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub reports: Vec<BoundReport>,
    /// Certified bounds exceeding the numeric eigenvalue.
    pub violations: Vec<String>,
    /// `|Ω|^{1/N} / r_Ω`, at least the ball value `ω_N^{1/N}`.
    pub measure_radius_ratio: f64,
    pub ball_ratio: f64,
}

fn or_report(name: &str, mode: &ConstantMode, res: Result<BoundReport>) -> BoundReport {
    match res {
        Ok(r) => r,
        Err(e) => BoundReport::inapplicable(name, mode, "", e.to_string()),
    }
}

/// Grid spacing for the asymmetry index, coarsened so the raster stays below a
/// quarter of a million cells.
fn asymmetry_spacing(d: &Domain, h: f64) -> f64 {
    let (lo, hi) = d.bounding_box();
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    h.max((vol / 2.5e5).powf(1.0 / d.dim() as f64))
}

/// Evaluates every bound, sorted by name and then (stably) by value, and checks
/// certified ones against `lambda1_numeric · (1 + slack)`.
pub fn compare_all(sc: &BoundScenario, lambda1_numeric: Option<f64>, slack: f64) -> Result<Comparison> {
    let d = &sc.domain;
    let w = &sc.weight;
    let pp = &sc.params;
    let mode = &sc.mode;
    if d.dim() != pp.n {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: format!("domain has dimension {}, parameters say {}", d.dim(), pp.n),
        });
    }
    let mut out = Vec::new();
    if pp.n == 1 {
        if let Domain::Box { lengths, .. } = d {
            out.push(or_report("lyapunov-1d", mode, lyapunov_1d(lengths[0], w, pp.p)));
        }
    }
    out.push(or_report("lyapunov-p>N", mode, lyapunov_pgtn(d, w, pp, mode, sc.h)));
    out.push(or_report("lyapunov-p<N", mode, lyapunov_pltn(d, w, pp, mode, sc.h)));
    if let Some(g) = pp.gamma {
        out.push(or_report(
            "lyapunov-distance",
            mode,
            lyapunov_distance_coeff(d, g, w, pp, mode, sc.h),
        ));
    }
    if let Some(v) = &sc.coefficient {
        out.push(or_report(
            "lyapunov-degenerate",
            mode,
            lyapunov_degenerate(d, v, w, pp, mode, sc.h, &sc.sampling),
        ));
    }
    out.push(or_report("anane", mode, anane_bound(d, w, pp, mode)));
    out.push(or_report(
        "cuesta",
        mode,
        cuesta_bound(d, w, pp, mode, sc.h, sc.cuesta_alternate),
    ));
    if let Some(l1) = sc.lambda1_unit {
        let m = w.sup_norm(d);
        out.push(or_report("sturm", mode, m.and_then(|m| sturm_bound(m, l1))));
    }
    out.push(or_report("pseudo-box", mode, pseudo_box_bound(d, w, pp)));
    let fk = or_report("faber-krahn", mode, faber_krahn_bound(d, w, pp, &sc.ball));
    if fk.value.is_some() {
        let a = match d {
            Domain::Raster(m) => Ok(geometry::fraenkel_asymmetry(m)),
            _ => geometry::rasterize(d, asymmetry_spacing(d, sc.h)).map(|m| geometry::fraenkel_asymmetry(&m)),
        };
        out.push(or_report(
            "faber-krahn-stable",
            mode,
            a.and_then(|a| fk_improved_bound(&fk, a, pp, mode)),
        ));
    }
    out.push(fk);
    if pp.n == 2 && pp.p == 2.0 {
        let k = match d {
            Domain::Annulus { .. } => Ok(2),
            Domain::Raster(m) => Ok(geometry::connectivity(m)),
            _ => geometry::rasterize(d, sc.h).map(|m| geometry::connectivity(&m)),
        };
        let mut r = or_report(
            "osserman",
            mode,
            k.and_then(|k| osserman_bound(d.inner_radius(), k, pp)),
        );
        match w {
            Weight::Constant(c) if *c > 0.0 => r.value = r.value.map(|v| v / c),
            _ => {
                r.check("constant weight", false, "the planar bound is for constant weights");
                r.value = None;
            }
        }
        out.push(r);
    }
    // only the two coefficient bounds apply to energies with a coefficient
    if sc.coefficient.is_some() || pp.gamma.is_some() {
        for r in out.iter_mut() {
            if r.name != "lyapunov-distance" && r.name != "lyapunov-degenerate" {
                r.check("no coefficient", false, "bound is for the plain p-energy");
                r.value = None;
            }
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out.sort_by(|a, b| {
        let va = a.value.unwrap_or(f64::INFINITY);
        let vb = b.value.unwrap_or(f64::INFINITY);
        va.total_cmp(&vb)
    });
    let mut violations = Vec::new();
    if let Some(l) = lambda1_numeric {
        for r in &out {
            if let (true, Some(v)) = (r.certified && r.hypotheses_pass(), r.value) {
                if v > l * (1.0 + slack) {
                    violations.push(format!("{}: {v} > {l}", r.name));
                }
            }
        }
    }
    let nf = pp.n as f64;
    Ok(Comparison {
        reports: out,
        violations,
        measure_radius_ratio: d.measure().powf(1.0 / nf) / d.inner_radius(),
        ball_ratio: geometry::unit_ball_volume(pp.n).powf(1.0 / nf),
    })
}

/// Comparison table with columns `bound,value,mode,hypotheses_pass,tag`.
pub fn to_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from("bound,value,mode,hypotheses_pass,tag\n");
    for r in reports {
        let v = r.value.map(|v| format!("{v:.12e}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name,
            v,
            r.mode,
            r.hypotheses_pass(),
            r.tag.replace(',', ";")
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{pi_p, QuadratureSpec};
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn one_dimensional_bound() {
        let r = lyapunov_1d(1.0, &Weight::Constant(1.0), 2.0).unwrap();
        assert!(close(r.value.unwrap(), 4.0, 1e-12) && r.certified);
        let r = lyapunov_1d(2.0, &Weight::Constant(1.0), 3.0).unwrap();
        assert!(close(r.value.unwrap(), 1.0, 1e-12));
        // eigen-weight: the inequality reduces to π_p ≥ 2
        for p in [1.2, 1.5, 2.0, 3.0, 5.0, 9.0] {
            let l = 1.7;
            let lam = specfun::lambda1_interval(l, p).unwrap();
            let r = lyapunov_1d(l, &Weight::Constant(lam), p).unwrap();
            assert!(r.value.unwrap() <= 1.0 + 1e-12, "{p}");
            assert!(pi_p(p, &QuadratureSpec::default()).unwrap() >= 2.0);
        }
        assert!(matches!(
            lyapunov_1d(1.0, &Weight::Constant(0.0), 2.0),
            Err(Error::DegenerateWeight(_))
        ));
    }

    #[test]
    fn morrey_functionals() {
        let pp = ProblemParams::new(4.0, 2).unwrap();
        for r in [1.0, 0.5, 0.25] {
            let d = Domain::unit_corner_box(&[r, 1.0 / r]).unwrap();
            let rep = lyapunov_pgtn(&d, &Weight::Constant(1.0), &pp, &ConstantMode::Scaling, r / 16.0).unwrap();
            assert!(close(rep.value.unwrap(), 4.0 / (r * r), 1e-12) && rep.functional_only);
        }
        let disk = Domain::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let pp3 = ProblemParams::new(3.0, 2).unwrap();
        let rep = lyapunov_pgtn(&disk, &Weight::Constant(1.0), &pp3, &ConstantMode::Scaling, 0.05).unwrap();
        assert!(close(rep.value.unwrap(), 1.0 / PI, 1e-12));
        let (big, eps) = (3.0, 0.5);
        let ball = Domain::new_ball(vec![0.0, 0.0], big).unwrap();
        let spike = Weight::SpikeRadial { eps, n: 2 };
        let rep = lyapunov_pgtn(&ball, &spike, &pp3, &ConstantMode::Scaling, 0.05).unwrap();
        assert!(close(rep.value.unwrap(), 1.0 / (big * 2.0 * PI * eps), 1e-12));
        let pp2 = ProblemParams::new(2.0, 2).unwrap();
        let rep = lyapunov_pgtn(&disk, &Weight::Constant(1.0), &pp2, &ConstantMode::Scaling, 0.05).unwrap();
        assert!(rep.value.is_none() && !rep.hypotheses_pass());
        // the sharp 1D constant through the general formula
        let seg = Domain::unit_corner_box(&[2.0]).unwrap();
        let pp1 = ProblemParams::new(3.0, 1).unwrap();
        let rep = lyapunov_pgtn(&seg, &Weight::Constant(1.0), &pp1, &ConstantMode::OneDimExact, 0.01).unwrap();
        assert!(close(rep.value.unwrap(), 1.0, 1e-12) && rep.certified);
    }

    #[test]
    fn exponent_set_identity() {
        let ex = ExponentSet::new(2.0, 3, 2.0).unwrap();
        assert!(close(ex.alpha, 0.5, 1e-14) && close(ex.q, 4.0, 1e-14));
        assert!(close(ex.radius_exponent(2.0), 0.5, 1e-14));
        assert!(ExponentSet::new(2.0, 3, 1.5).is_err());
        assert!(ExponentSet::new(3.0, 2, 2.0).is_err());
    }

    #[test]
    fn hardy_sobolev_bound() {
        let ball = Domain::new_ball(vec![0.0; 3], 1.0).unwrap();
        let pp = ProblemParams::new(2.0, 3).unwrap().with_s(2.0);
        let rep = lyapunov_pltn(&ball, &Weight::Constant(1.0), &pp, &ConstantMode::Scaling, 0.05).unwrap();
        let expect = 1.0 / (4.0 * PI / 3.0).sqrt();
        assert!(close(rep.value.unwrap(), expect, 1e-12));
        let bad = ProblemParams::new(2.0, 3).unwrap().with_s(1.4);
        let rep = lyapunov_pltn(&ball, &Weight::Constant(1.0), &bad, &ConstantMode::Scaling, 0.05).unwrap();
        assert!(rep.value.is_none());
        let near = ProblemParams::new(2.0, 3).unwrap().with_s(1.5 + 1e-5);
        let rep = lyapunov_pltn(&ball, &Weight::Constant(1.0), &near, &ConstantMode::Scaling, 0.05).unwrap();
        assert!(rep
            .hypotheses
            .iter()
            .any(|h| h.name == "exponent not degenerate" && !h.passed));
        let hardy = ConstantMode::ConvexHardy { sobolev: 1.0 };
        let rep = lyapunov_pltn(&ball, &Weight::Constant(1.0), &pp, &hardy, 0.05).unwrap();
        // C_h = 4, α = 1/2, s' = 2: constant 4^{-1/4}
        assert!(close(rep.value.unwrap(), expect * 4f64.powf(-0.25), 1e-12));
        let ann = Domain::new_annulus(vec![0.0; 3], 0.5, 1.0).unwrap();
        let rep = lyapunov_pltn(&ann, &Weight::Constant(1.0), &pp, &hardy, 0.05).unwrap();
        assert!(rep.value.is_none());
    }

    #[test]
    fn degenerate_and_distance() {
        let disk = Domain::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let h = 1.0 / 64.0;
        let pp = ProblemParams::new(5.0, 2).unwrap().with_t(1.0 + 1e-9);
        let s = AtSampling::default();
        let w = Weight::Constant(1.0);
        let deg = lyapunov_degenerate(&disk, &Weight::Constant(1.0), &w, &pp, &ConstantMode::Scaling, h, &s).unwrap();
        let plain = lyapunov_pgtn(&disk, &w, &pp, &ConstantMode::Scaling, h).unwrap();
        assert!(close(deg.value.unwrap(), plain.value.unwrap(), 1e-3));
        // v = c: the bound is linear in c
        let pp2 = ProblemParams::new(5.0, 2).unwrap().with_t(2.0);
        let a = lyapunov_degenerate(&disk, &Weight::Constant(1.0), &w, &pp2, &ConstantMode::Scaling, h, &s).unwrap();
        let b = lyapunov_degenerate(&disk, &Weight::Constant(3.0), &w, &pp2, &ConstantMode::Scaling, h, &s).unwrap();
        assert!(close(b.value.unwrap() / a.value.unwrap(), 3.0, 1e-9));
        let bad = ProblemParams::new(5.0, 2).unwrap().with_t(2.6);
        let r = lyapunov_degenerate(&disk, &Weight::Constant(1.0), &w, &bad, &ConstantMode::Scaling, h, &s).unwrap();
        assert!(r.value.is_none());

        let pp3 = ProblemParams::new(3.0, 2).unwrap();
        let d0 = lyapunov_distance_coeff(&disk, 0.0, &w, &pp3, &ConstantMode::Scaling, h).unwrap();
        let p0 = lyapunov_pgtn(&disk, &w, &pp3, &ConstantMode::Scaling, h).unwrap();
        assert_eq!(d0.value, p0.value);
        let gamma = 0.3;
        let vals: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&r| {
                let b = Domain::new_ball(vec![0.0, 0.0], r).unwrap();
                lyapunov_distance_coeff(&b, gamma, &w, &pp3, &ConstantMode::Scaling, h)
                    .unwrap()
                    .value
                    .unwrap()
            })
            .collect();
        assert!(close(vals[1] / vals[0], 2f64.powf(-(3.0 - gamma)), 1e-12));
        assert!(close(vals[2] / vals[1], 2f64.powf(-(3.0 - gamma)), 1e-12));
        let r = lyapunov_distance_coeff(&disk, 0.6, &w, &pp3, &ConstantMode::Scaling, h).unwrap();
        assert!(r.value.is_none());
    }

    #[test]
    fn measure_bounds() {
        let sq = Domain::unit_corner_box(&[1.0, 1.0]).unwrap();
        let pp = ProblemParams::new(2.0, 2).unwrap();
        let r = anane_bound(&sq, &Weight::Constant(1.0), &pp, &ConstantMode::Scaling).unwrap();
        assert!(close(r.value.unwrap(), 1.0, 1e-14));
        assert_eq!(anane_sigma(3.0, 2), 0.5);
        let r4 = anane_bound(&sq, &Weight::Constant(4.0), &pp, &ConstantMode::Scaling).unwrap();
        assert!(close(r4.value.unwrap(), 0.25, 1e-14));
        let spike = Weight::SpikeRadial { eps: 0.3, n: 2 };
        assert!(matches!(
            anane_bound(&sq, &spike, &pp, &ConstantMode::Scaling),
            Err(Error::Inapplicable(_))
        ));

        let pp4 = ProblemParams::new(4.0, 2).unwrap();
        let r = cuesta_bound(&sq, &Weight::Constant(2.0), &pp4, &ConstantMode::Scaling, 0.05, false).unwrap();
        assert!(close(r.value.unwrap(), 0.5, 1e-14));
        assert_eq!(cuesta_exponent(2.0, 2, 3.0, false), 0.0);
        let s = 3.0;
        assert!(close(
            cuesta_exponent(2.0, 2, s, true),
            (2.0 * s - 2.0) / (2.0 * s),
            1e-15
        ));
        let big = Domain::unit_corner_box(&[2.0, 2.0]).unwrap();
        let pp2s = ProblemParams::new(2.0, 2).unwrap().with_s(s);
        let r = cuesta_bound(&big, &Weight::Constant(1.0), &pp2s, &ConstantMode::Scaling, 0.05, false).unwrap();
        assert!(close(r.value.unwrap(), 1.0 / 4f64.powf(1.0 / s), 1e-12));
        let bad = ProblemParams::new(2.0, 2).unwrap().with_s(0.9);
        assert!(
            cuesta_bound(&big, &Weight::Constant(1.0), &bad, &ConstantMode::Scaling, 0.05, false)
                .unwrap()
                .value
                .is_none()
        );
    }

    #[test]
    fn comparison_bounds() {
        let r = sturm_bound(1.0, 7.5).unwrap();
        assert_eq!(r.value, Some(7.5));
        assert_eq!(sturm_bound(2.0, 7.5).unwrap().value, Some(3.75));
        assert!(sturm_bound(0.0, 1.0).is_err());

        let pp = ProblemParams::new(2.0, 2).unwrap();
        let ann = Domain::new_annulus(vec![0.0, 0.0], 1.0, 3.0).unwrap();
        assert!(close(
            osserman_bound(ann.inner_radius(), 2, &pp).unwrap().value.unwrap(),
            0.25,
            1e-15
        ));
        assert!(close(osserman_bound(0.5, 2, &pp).unwrap().value.unwrap(), 1.0, 1e-15));
        let pp3 = ProblemParams::new(3.0, 2).unwrap();
        assert!(osserman_bound(1.0, 2, &pp3).is_err());
        assert!(osserman_bound(1.0, 1, &pp).unwrap().value.is_none());
    }

    #[test]
    fn faber_krahn_on_disk_and_boxes() {
        let pp = ProblemParams::new(2.0, 2).unwrap();
        let disk = Domain::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let fk = faber_krahn_bound(&disk, &Weight::Constant(1.0), &pp, &BallSolve::default()).unwrap();
        let j01: f64 = 2.404_825_557_695_773;
        assert!(close(fk.value.unwrap(), j01 * j01, 1e-2));
        let fk_vals: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&r| {
                let d = Domain::unit_corner_box(&[r, 1.0 / r]).unwrap();
                faber_krahn_bound(&d, &Weight::Constant(1.0), &pp, &BallSolve::default())
                    .unwrap()
                    .value
                    .unwrap()
            })
            .collect();
        assert!(fk_vals.iter().all(|v| close(*v, fk_vals[0], 1e-12)));
        let same = fk_improved_bound(&fk, 0.0, &pp, &ConstantMode::Scaling).unwrap();
        assert_eq!(same.value, fk.value);
        let most = fk_improved_bound(&fk, 2.0, &pp, &ConstantMode::Explicit(10.0)).unwrap();
        assert!(most.value.unwrap() <= fk.value.unwrap() * (1.0 + 2f64.powf(4.0) / 10.0) * (1.0 + 1e-14));
        let thin = geometry::rasterize(&Domain::unit_corner_box(&[0.25, 4.0]).unwrap(), 1.0 / 64.0).unwrap();
        let a = geometry::fraenkel_asymmetry(&thin);
        let imp = fk_improved_bound(&fk, a, &pp, &ConstantMode::Scaling).unwrap();
        assert!(imp.value.unwrap() > fk.value.unwrap());
    }

    #[test]
    fn calibration_takes_the_tightest_ratio() {
        let c = calibrate_constant(&[(1.0, 5.0), (2.0, 6.0), (0.5, 4.0)]).unwrap();
        assert_eq!(c, 3.0);
        assert!(calibrate_constant(&[]).is_err());
    }

    #[test]
    fn comparison_table() {
        let pp = ProblemParams::new(3.0, 2).unwrap();
        let sc = BoundScenario::new(
            Domain::unit_corner_box(&[1.0 / 256.0, 256.0]).unwrap(),
            Weight::Constant(1.0),
            pp,
        );
        let cmp = compare_all(&sc, None, 0.01).unwrap();
        let get = |n: &str| cmp.reports.iter().find(|r| r.name == n).unwrap().value.unwrap();
        assert!(get("lyapunov-p>N") > get("faber-krahn"));
        assert!(cmp.measure_radius_ratio >= cmp.ball_ratio);
        let vals: Vec<f64> = cmp.reports.iter().filter_map(|r| r.value).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let csv = to_csv(&cmp.reports);
        assert!(csv.starts_with("bound,value,mode,hypotheses_pass,tag\n"));
        assert_eq!(csv.lines().count(), cmp.reports.len() + 1);

        let disk = Domain::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let sc = BoundScenario::new(disk, Weight::Constant(1.0), ProblemParams::new(2.0, 2).unwrap());
        let cmp = compare_all(&sc, Some(5.0), 0.01).unwrap();
        assert!(cmp.violations.iter().any(|v| v.starts_with("faber-krahn")));
    }
}
