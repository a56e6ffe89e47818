//! JSON scenario files: one document describing a domain, weights, exponents,
//! constant mode, grid spacing and solver settings, or an experiment.

use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{BallSolve, BoundScenario, ConstantMode, ProblemParams};
use crate::eigensolve::SolveOptions;
use crate::error::{Error, Result};
use crate::geometry::{Domain, RasterMask};
use crate::weights::{AtSampling, Weight};

/// A complete run description. `domain` and `weight` are required by the
/// `bound` and `solve` commands; experiment runs only read `experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// The domain Ω.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// The weight w on the right-hand side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    /// Optional degenerate coefficient v in the energy ∫ v |∇u|^p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<WeightSpec>,
    /// Exponents of the problem.
    #[serde(default)]
    pub params: ParamsSpec,
    /// How unknown constants are filled in.
    #[serde(default)]
    pub mode: ModeSpec,
    /// Constant used by `calibrated` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrated_constant: Option<f64>,
    /// Sobolev constant used by `exact` mode when p < N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_constant: Option<f64>,
    /// Grid spacing for norms and the lattice solver. Defaults to r_Ω/32.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Use the alternate measure exponent (sp-N)/(sN) in the Cuesta bound.
    #[serde(default)]
    pub cuesta_alternate: bool,
    /// First eigenvalue of the domain with unit weight; enables the comparison
    /// bound λ_1(1)/‖w‖_∞.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1_unit: Option<f64>,
    /// Relative slack allowed when checking certified bounds against λ.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Eigenvalue solver settings.
    #[serde(default)]
    pub solve: SolveSpec,
    /// Experiment to run with the `exp` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
}

fn default_slack() -> f64 {
    1e-3
}

/// Domain descriptor, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Axis-aligned box `origin + [0, lengths]`.
    Box {
        /// Lower corner; defaults to the origin.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<f64>>,
        /// Side lengths, one per axis.
        lengths: Vec<f64>,
    },
    /// Open ball.
    Ball {
        /// Center; its length sets the dimension.
        center: Vec<f64>,
        radius: f64,
    },
    /// Spherical shell `r_in < |x - center| < r_out`.
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    /// Occupancy mask from a grid file, relative to the scenario file.
    GridFile { path: PathBuf },
}

/// Weight descriptor, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `w ≡ value`.
    Constant { value: f64 },
    /// `|x - center|^a`.
    RadialPower { center: Vec<f64>, a: f64 },
    /// `d_Ω(x)^gamma`.
    DistPower { gamma: f64 },
    /// `|x|^{1-N}` on the ball of radius `eps` around the origin, zero outside.
    SpikeRadial { eps: f64 },
    /// Piecewise constant values read from a grid file with a values block,
    /// relative to the scenario file.
    GridSampled { path: PathBuf },
}

/// Problem exponents. N comes from the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    /// Exponent of the p-Laplacian, p > 1.
    pub p: f64,
    /// Integrability exponent of the weight, used when p ≤ N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Muckenhoupt exponent of the coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Power of the distance coefficient `d_Ω^gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            p: 2.0,
            s: None,
            t: None,
            gamma: None,
        }
    }
}

/// `scaling` reports functionals with the constant set to 1; `exact` uses the
/// sharp one-dimensional constant (N = 1) or the convex Hardy constant with
/// `sobolev_constant` (p < N); `calibrated` uses `calibrated_constant`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    #[default]
    Scaling,
    Exact,
    Calibrated,
}

impl std::str::FromStr for ModeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(ModeSpec::Scaling),
            "exact" => Ok(ModeSpec::Exact),
            "calibrated" => Ok(ModeSpec::Calibrated),
            other => Err(Error::Config(format!(
                "unknown mode `{other}`, expected scaling, exact or calibrated"
            ))),
        }
    }
}

/// Which discretization `solve` uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Interval solver for 1D boxes, radial solver for balls with radial
    /// weights, lattice solver otherwise.
    #[default]
    Auto,
    /// Always the lattice solver on a raster of the domain.
    Grid,
    /// The radial solver; needs a ball and a radial weight.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    /// Solve for λ_1 and check certified bounds against it.
    #[serde(default)]
    pub enabled: bool,
    /// Relative tolerance of the stopping rule.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Seed of the start-vector perturbation.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: SolveMethod,
    /// Nodes of the interval and radial solvers, and of the ball solves behind
    /// the Faber–Krahn bound.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_tol() -> f64 {
    SolveOptions::default().tol
}
fn default_max_iter() -> usize {
    SolveOptions::default().max_iter
}
fn default_nodes() -> usize {
    2000
}

impl Default for SolveSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
            method: SolveMethod::Auto,
            nodes: default_nodes(),
        }
    }
}

impl SolveSpec {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            ..SolveOptions::default()
        }
    }
}

/// Experiment descriptor, tagged by `kind`. Omitted fields take the defaults
/// of the corresponding `exp` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// Rectangles `[0,R] × [0,1/R]` of unit area.
    ThinRect {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        /// Values of R in (0, 1].
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        /// Lattice spacing; refined to R/16 on thin rectangles.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
    /// Unit-mass square spikes of height M in `[0,R]^2`.
    SpikeSturm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        /// Reported `(R, M)` points.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<[f64; 2]>>,
        /// Points used only to calibrate the constant; must be disjoint from
        /// `points`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration: Option<Vec<[f64; 2]>>,
        /// Largest lattice spacing, rounded down to divide R; defaults to the
        /// smaller of a spike side over 8 and R/64.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
    /// Radial spikes `ε = R^α` on balls `B(0,R)`.
    Optimality {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        /// Values of R > 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        /// Exponents β < α(p-N) whose products λ‖w‖_1 R^β must decrease.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        betas: Option<Vec<f64>>,
        /// Radial nodes; the spacing is R/(nodes + 1/2).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
    /// Distance coefficients `d^γ` on balls.
    DistCoeff {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gammas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::ThinRect { .. } => "thin-rect",
            ExperimentSpec::SpikeSturm { .. } => "spike-sturm",
            ExperimentSpec::Optimality { .. } => "optimality",
            ExperimentSpec::DistCoeff { .. } => "dist-coeff",
        }
    }
}

/// JSON schema of the scenario format, pretty-printed.
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(Scenario);
    serde_json::to_string_pretty(&schema).expect("schema serializes")
}

impl Scenario {
    /// Parses a scenario; unknown fields are rejected by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.check_values()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let sc = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((sc, base))
    }

    /// Hex SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checks that do not need files on disk.
    fn check_values(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be finite and > 0, got {v}")))
            }
        };
        if !(self.params.p.is_finite() && self.params.p > 1.0) {
            return Err(Error::Config(format!("`params.p` must be > 1, got {}", self.params.p)));
        }
        if let Some(h) = self.h {
            pos("h", h)?;
        }
        pos("solve.tol", self.solve.tol)?;
        if self.slack < 0.0 || !self.slack.is_finite() {
            return Err(Error::Config(format!("`slack` must be >= 0, got {}", self.slack)));
        }
        if self.solve.max_iter == 0 {
            return Err(Error::Config("`solve.max_iter` must be >= 1".into()));
        }
        if let Some(c) = self.calibrated_constant {
            pos("calibrated_constant", c)?;
        }
        if let Some(c) = self.sobolev_constant {
            pos("sobolev_constant", c)?;
        }
        Ok(())
    }

    /// Builds the domain, resolving grid files against `base`.
    pub fn build_domain(&self, base: &Path) -> Result<Domain> {
        let spec = self
            .domain
            .as_ref()
            .ok_or_else(|| Error::Config("missing field `domain`".into()))?;
        let cfg = |e: Error| Error::Config(format!("domain: {e}"));
        match spec {
            DomainSpec::Box { origin, lengths } => {
                let origin = origin.clone().unwrap_or_else(|| vec![0.0; lengths.len()]);
                Domain::new_box(origin, lengths.clone()).map_err(cfg)
            }
            DomainSpec::Ball { center, radius } => Domain::new_ball(center.clone(), *radius).map_err(cfg),
            DomainSpec::Annulus { center, r_in, r_out } => {
                Domain::new_annulus(center.clone(), *r_in, *r_out).map_err(cfg)
            }
            DomainSpec::GridFile { path } => {
                let (mask, _) = read_grid(&base.join(path))?;
                Ok(Domain::Raster(mask))
            }
        }
    }

    fn build_weight(spec: &WeightSpec, n: usize, base: &Path, what: &str) -> Result<Weight> {
        let w = match spec {
            WeightSpec::Constant { value } => Weight::Constant(*value),
            WeightSpec::RadialPower { center, a } => Weight::RadialPower {
                center: center.clone(),
                a: *a,
            },
            WeightSpec::DistPower { gamma } => Weight::DistPower { gamma: *gamma },
            WeightSpec::SpikeRadial { eps } => Weight::SpikeRadial { eps: *eps, n },
            WeightSpec::GridSampled { path } => {
                let (mask, values) = read_grid(&base.join(path))?;
                let values = values.ok_or_else(|| {
                    Error::Config(format!("{what}: grid file {} has no values block", path.display()))
                })?;
                Weight::GridSampled { mask, values }
            }
        };
        w.validate().map_err(|e| Error::Config(format!("{what}: {e}")))?;
        if let Weight::RadialPower { center, .. } = &w {
            if center.len() != n {
                return Err(Error::Config(format!(
                    "{what}: center has {} coordinates, domain dimension is {n}",
                    center.len()
                )));
            }
        }
        if let Weight::GridSampled { mask, .. } = &w {
            if mask.dim() != n {
                return Err(Error::Config(format!(
                    "{what}: grid has dimension {}, domain dimension is {n}",
                    mask.dim()
                )));
            }
        }
        Ok(w)
    }

    /// Domain, weight and coefficient with consistent dimensions and a grid
    /// spacing below the inner radius.
    pub fn resolve(&self, base: &Path) -> Result<Resolved> {
        let domain = self.build_domain(base)?;
        let n = domain.dim();
        let wspec = self
            .weight
            .as_ref()
            .ok_or_else(|| Error::Config("missing field `weight`".into()))?;
        let weight = Self::build_weight(wspec, n, base, "weight")?;
        let coefficient = self
            .coefficient
            .as_ref()
            .map(|c| Self::build_weight(c, n, base, "coefficient"))
            .transpose()?;
        let r = domain.inner_radius();
        let h = self.h.unwrap_or(r / 32.0);
        if h >= r {
            return Err(Error::Config(format!("h = {h} must be below the inner radius {r}")));
        }
        let mut params = ProblemParams::new(self.params.p, n).map_err(|e| Error::Config(e.to_string()))?;
        params.s = self.params.s;
        params.t = self.params.t;
        params.gamma = self.params.gamma;
        let mode = self.constant_mode(n)?;
        Ok(Resolved {
            domain,
            weight,
            coefficient,
            params,
            mode,
            h,
        })
    }

    pub fn constant_mode(&self, n: usize) -> Result<ConstantMode> {
        match self.mode {
            ModeSpec::Scaling => Ok(ConstantMode::Scaling),
            ModeSpec::Calibrated => self
                .calibrated_constant
                .map(ConstantMode::Calibrated)
                .ok_or_else(|| Error::Config("mode `calibrated` needs `calibrated_constant`".into())),
            ModeSpec::Exact if n == 1 => Ok(ConstantMode::OneDimExact),
            ModeSpec::Exact => self
                .sobolev_constant
                .map(|sobolev| ConstantMode::ConvexHardy { sobolev })
                .ok_or_else(|| Error::Config("mode `exact` needs N = 1 or `sobolev_constant`".into())),
        }
    }

    pub fn bound_scenario(&self, r: &Resolved) -> BoundScenario {
        let mut sc = BoundScenario::new(r.domain.clone(), r.weight.clone(), r.params);
        sc.coefficient = r.coefficient.clone();
        sc.mode = r.mode;
        sc.h = r.h;
        sc.cuesta_alternate = self.cuesta_alternate;
        sc.ball = BallSolve {
            nodes: self.solve.nodes,
            opts: self.solve.options(),
        };
        sc.sampling = AtSampling::default();
        sc.lambda1_unit = self.lambda1_unit;
        sc
    }
}

/// Library objects built from a [`Scenario`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub domain: Domain,
    pub weight: Weight,
    pub coefficient: Option<Weight>,
    pub params: ProblemParams,
    pub mode: ConstantMode,
    pub h: f64,
}

fn read_grid(path: &Path) -> Result<(RasterMask, Option<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RasterMask::from_grid_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_named() {
        let e = Scenario::from_json(r#"{"domain":{"kind":"ball","center":[0,0],"radius":1},"wieght":1}"#).unwrap_err();
        assert!(e.to_string().contains("wieght"), "{e}");
        let e = Scenario::from_json(r#"{"weight":{"kind":"constant","value":1,"scale":2}}"#).unwrap_err();
        assert!(e.to_string().contains("scale"), "{e}");
        let e = Scenario::from_json(r#"{"solve":{"enabled":true,"tolerance":1e-6}}"#).unwrap_err();
        assert!(e.to_string().contains("tolerance"), "{e}");
    }

    #[test]
    fn schema_lists_every_weight_kind() {
        let s = schema_json();
        for k in ["constant", "radial-power", "dist-power", "spike-radial", "grid-sampled"] {
            assert!(s.contains(&format!("\"{k}\"")), "{k}");
        }
        assert!(s.contains("Occupancy mask from a grid file"));
    }

    #[test]
    fn round_trip_and_hash() {
        let text = r#"{"domain":{"kind":"box","lengths":[1,2]},"weight":{"kind":"constant","value":1},
            "params":{"p":3},"solve":{"enabled":true}}"#;
        let a = Scenario::from_json(text).unwrap();
        let b = Scenario::from_json(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.solve.seed = 1;
        assert_ne!(a.hash(), c.hash());
        let r = a.resolve(Path::new(".")).unwrap();
        assert_eq!(r.params.n, 2);
        assert!((r.h - 0.5 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn semantic_errors() {
        let bad = [r#"{"params":{"p":1}}"#, r#"{"h":-1}"#, r#"{"solve":{"tol":0}}"#];
        for b in bad {
            assert!(matches!(Scenario::from_json(b), Err(Error::Config(_))), "{b}");
        }
        let sc = Scenario::from_json(
            r#"{"domain":{"kind":"ball","center":[0,0],"radius":1},
                "weight":{"kind":"radial-power","center":[0,0,0],"a":1}}"#,
        )
        .unwrap();
        assert!(sc.resolve(Path::new(".")).is_err());
        let sc = Scenario::from_json(
            r#"{"domain":{"kind":"ball","center":[0,0],"radius":1},
                "weight":{"kind":"constant","value":1},"h":2}"#,
        )
        .unwrap();
        assert!(sc.resolve(Path::new(".")).is_err());
        let sc = Scenario::from_json(
            r#"{"domain":{"kind":"ball","center":[0,0],"radius":1},
                "weight":{"kind":"constant","value":1},"mode":"calibrated"}"#,
        )
        .unwrap();
        assert!(sc.resolve(Path::new(".")).is_err());
    }
}
