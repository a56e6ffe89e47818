//! Generalized trigonometric functions and closed-form one-dimensional and
//! box eigenvalues of the p-Laplacian.
//!
//! `sin_p` is the inverse of
//! `F_p(y) = ∫_0^y ((p-1)/(1-t^p))^{1/p} dt` on `[0, 1]`, and `π_p = 2 F_p(1)`.
//! The integrand blows up like `(1-t)^{-1/p}` at `t = 1`; on `[1/2, 1]` the
//! substitution `t = 1 - u^{p/(p-1)}` turns it into a bounded function of `u`.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, check_positive, Error, Result};
use crate::quad;

/// Tolerance and depth limit for the singular integrals behind `π_p` and `sin_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            max_depth: 40,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, max_depth: usize) -> Result<Self> {
        let spec = Self { rel_tol, max_depth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                reason: format!("must lie in (0, 1e-2], got {}", self.rel_tol),
            });
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

const SPLIT: f64 = 0.5;

/// Evaluator for `sin_p` with `π_p` and the split-point integral cached.
#[derive(Debug, Clone)]
pub struct GeneralizedSine {
    p: f64,
    quad: QuadratureSpec,
    pi_p: f64,
    left: f64,
    u_split: f64,
    scale: f64,
    m: f64,
}

impl GeneralizedSine {
    pub fn new(p: f64, quad: QuadratureSpec) -> Result<Self> {
        check_exponent("p", p)?;
        quad.validate()?;
        let m = p / (p - 1.0);
        let scale = (p - 1.0).powf(1.0 / p);
        let mut s = Self {
            p,
            quad,
            pi_p: 0.0,
            left: 0.0,
            u_split: (1.0 - SPLIT).powf(1.0 / m),
            scale,
            m,
        };
        s.left = s.integrate_direct(0.0, SPLIT)?;
        let right = s.integrate_substituted(0.0, s.u_split)?;
        s.pi_p = 2.0 * (s.left + right);
        Ok(s)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pi_p(&self) -> f64 {
        self.pi_p
    }

    fn integrate_direct(&self, a: f64, b: f64) -> Result<f64> {
        let p = self.p;
        let scale = self.scale;
        quad::adaptive(
            |t: f64| scale * (1.0 - t.powf(p)).powf(-1.0 / p),
            a,
            b,
            self.quad.rel_tol,
            1e-300,
            self.quad.max_depth,
        )
    }

    /// Integral of the substituted integrand over `u ∈ [ua, ub]`.
    fn integrate_substituted(&self, ua: f64, ub: f64) -> Result<f64> {
        let p = self.p;
        let m = self.m;
        let scale = self.scale;
        let limit = scale * p.powf(-1.0 / p) * m;
        quad::adaptive(
            move |u: f64| {
                if u <= 0.0 {
                    return limit;
                }
                let x = u.powf(m);
                // 1 - (1-x)^p without cancellation
                let one_minus_tp = -(p * (-x).ln_1p()).exp_m1();
                scale * one_minus_tp.powf(-1.0 / p) * m * u.powf(m - 1.0)
            },
            ua,
            ub,
            self.quad.rel_tol,
            1e-300,
            self.quad.max_depth,
        )
    }

    /// `F_p(y)` for `y ∈ [0, 1]`.
    pub fn arc(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("F_p argument {y} outside [0, 1]")));
        }
        if y <= SPLIT {
            self.integrate_direct(0.0, y)
        } else {
            let uy = (1.0 - y).powf(1.0 / self.m);
            Ok(self.left + self.integrate_substituted(uy, self.u_split)?)
        }
    }

    /// `sin_p(x)` for `x ∈ [0, π_p]`, using `sin_p(π_p - x) = sin_p(x)` on the
    /// descending half.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let tol = 1e-12 * self.pi_p;
        if !(x >= -tol && x <= self.pi_p + tol) {
            return Err(Error::Domain(format!(
                "sin_p argument {x} outside [0, π_p = {}]",
                self.pi_p
            )));
        }
        let half = 0.5 * self.pi_p;
        let x = x.clamp(0.0, self.pi_p);
        let x = if x > half { self.pi_p - x } else { x };
        if x == 0.0 {
            return Ok(0.0);
        }
        if (half - x).abs() <= 1e-15 * half {
            return Ok(1.0);
        }
        self.invert_arc(x)
    }

    /// Illinois-style regula falsi on `F_p(y) - x`, falling back to bisection
    /// whenever the secant step stalls.
    fn invert_arc(&self, x: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let (mut flo, mut fhi) = (-x, 0.5 * self.pi_p - x);
        let mut side = 0i8;
        let ytol = 1e-15;
        for _ in 0..200 {
            let width = hi - lo;
            if width <= ytol {
                break;
            }
            let mut y = hi - fhi * (hi - lo) / (fhi - flo);
            if !(y > lo + 0.01 * width && y < hi - 0.01 * width) || !y.is_finite() {
                y = 0.5 * (lo + hi);
            }
            let fy = self.arc(y)? - x;
            if fy == 0.0 {
                return Ok(y);
            }
            if fy < 0.0 {
                lo = y;
                flo = fy;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = y;
                fhi = fy;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `π_p = 2 ∫_0^1 ((p-1)/(1-t^p))^{1/p} dt`.
pub fn pi_p(p: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(GeneralizedSine::new(p, *quad)?.pi_p())
}

/// Generalized sine on its first arch `[0, π_p]`.
pub fn sin_p(x: f64, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    GeneralizedSine::new(p, *quad)?.eval(x)
}

/// First Dirichlet eigenvalue of the 1D p-Laplacian on an interval of length `l`.
pub fn lambda1_interval(l: f64, p: f64) -> Result<f64> {
    check_positive("L", l)?;
    let pp = pi_p(p, &QuadratureSpec::default())?;
    Ok((pp / l).powf(p))
}

/// First eigenvalue on `(0, l)` with `u'(0) = 0`, `u(l) = 0`.
///
/// The mixed problem is the symmetric half of the Dirichlet problem on an
/// interval of length `2l`, so the value is `π_p^p / (2l)^p`.
pub fn lambda1_mixed(l: f64, p: f64) -> Result<f64> {
    check_positive("L", l)?;
    let pp = pi_p(p, &QuadratureSpec::default())?;
    Ok((pp / (2.0 * l)).powf(p))
}

/// First eigenpair of the pseudo p-Laplacian on `Π_j [0, L_j]`.
#[derive(Debug, Clone)]
pub struct PseudoBoxEigen {
    pub lambda_hat: f64,
    pub lengths: Vec<f64>,
    sine: GeneralizedSine,
}

impl PseudoBoxEigen {
    pub fn p(&self) -> f64 {
        self.sine.p()
    }

    pub fn pi_p(&self) -> f64 {
        self.sine.pi_p()
    }

    /// `û(x) = Π_j sin_p(π_p x_j / L_j)` with `x` measured from the box corner;
    /// zero outside the box.
    pub fn eigenfunction(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.lengths.len() {
            return Err(Error::InvalidParameter {
                name: "x",
                reason: format!("expected {} coordinates", self.lengths.len()),
            });
        }
        let mut v = 1.0;
        for (xj, lj) in x.iter().zip(&self.lengths) {
            if *xj <= 0.0 || *xj >= *lj {
                return Ok(0.0);
            }
            v *= self.sine.eval(self.sine.pi_p() * xj / lj)?;
        }
        Ok(v)
    }

    /// Evaluates one factor `sin_p(π_p t / L_axis)`.
    pub fn factor(&self, axis: usize, t: f64) -> Result<f64> {
        let l = self.lengths[axis];
        if t <= 0.0 || t >= l {
            return Ok(0.0);
        }
        self.sine.eval(self.sine.pi_p() * t / l)
    }
}

/// `λ̂_1 = Σ_j π_p^p / L_j^p` together with its product eigenfunction.
pub fn pseudo_lambda1_box(lengths: &[f64], p: f64) -> Result<PseudoBoxEigen> {
    if lengths.is_empty() {
        return Err(Error::InvalidParameter {
            name: "lengths",
            reason: "need at least one side".into(),
        });
    }
    for &l in lengths {
        check_positive("L_j", l)?;
    }
    let sine = GeneralizedSine::new(p, QuadratureSpec::default())?;
    let pp = sine.pi_p().powf(p);
    let lambda_hat = lengths.iter().map(|l| pp / l.powf(p)).sum();
    Ok(PseudoBoxEigen {
        lambda_hat,
        lengths: lengths.to_vec(),
        sine,
    })
}

/// Two-sided bracket on `λ_1` from the pseudo p-Laplacian eigenvalue, using
/// the equivalence of the 2-norm and the p-norm on `R^N`.
pub fn sandwich_from_pseudo(lambda_hat: f64, p: f64, n: usize) -> (f64, f64) {
    let factor = (n as f64).powf((p - 2.0) / 2.0);
    if p > 2.0 {
        (lambda_hat, factor * lambda_hat)
    } else if p < 2.0 {
        (factor * lambda_hat, lambda_hat)
    } else {
        (lambda_hat, lambda_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_2_is_pi() {
        let v = pi_p(2.0, &QuadratureSpec::default()).unwrap();
        assert!((v - PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn sin_p_endpoints_and_circular_case() {
        let q = QuadratureSpec::default();
        for p in [1.5, 2.0, 3.0, 6.0] {
            let s = GeneralizedSine::new(p, q).unwrap();
            assert_eq!(s.eval(0.0).unwrap(), 0.0);
            assert!((s.eval(0.5 * s.pi_p()).unwrap() - 1.0).abs() < 1e-12);
            assert!(s.eval(s.pi_p()).unwrap().abs() < 1e-12);
        }
        let v = sin_p(1.0, 2.0, &q).unwrap();
        assert!((v - 1.0f64.sin()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn sin_p_rejects_arguments_beyond_first_arch() {
        let s = GeneralizedSine::new(3.0, QuadratureSpec::default()).unwrap();
        assert!(matches!(s.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(s.eval(s.pi_p() + 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn interval_and_mixed_eigenvalues() {
        assert!((lambda1_interval(PI, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambda1_interval(2.0, 2.0).unwrap() - PI * PI / 4.0).abs() < 1e-12);
        let p3 = pi_p(3.0, &QuadratureSpec::default()).unwrap();
        assert!((lambda1_interval(1.0, 3.0).unwrap() - p3.powi(3)).abs() < 1e-10);
        // mixed problem on (0, L) equals Dirichlet on (0, 2L)
        assert!((lambda1_mixed(PI, 2.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((lambda1_mixed(1.0, 2.0).unwrap() - PI * PI / 4.0).abs() < 1e-12);
        assert!((lambda1_mixed(2.0, 3.0).unwrap() - p3.powi(3) / 64.0).abs() < 1e-10);
        assert!(lambda1_interval(0.0, 2.0).is_err());
        assert!(lambda1_interval(1.0, 1.0).is_err());
    }

    #[test]
    fn pseudo_box_values() {
        let q = QuadratureSpec::default();
        for p in [1.5, 2.5, 4.0] {
            let pp = pi_p(p, &q).unwrap().powf(p);
            let cube = pseudo_lambda1_box(&[0.7, 0.7, 0.7], p).unwrap();
            assert!((cube.lambda_hat - 3.0 * pp / 0.7f64.powf(p)).abs() < 1e-9 * cube.lambda_hat);
            let seg = pseudo_lambda1_box(&[1.0], p).unwrap();
            assert!((seg.lambda_hat - lambda1_interval(1.0, p).unwrap()).abs() < 1e-10);
            let r = 0.3;
            let thin = pseudo_lambda1_box(&[r, 1.0 / r], p).unwrap();
            let expect = pp * (r.powf(-p) + r.powf(p));
            assert!((thin.lambda_hat - expect).abs() < 1e-10 * expect);
        }
        let b = pseudo_lambda1_box(&[1.0, 2.0], 2.0).unwrap();
        let v = b.eigenfunction(&[0.5, 1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = b.eigenfunction(&[0.25, 0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(b.eigenfunction(&[1.5, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn sandwich_branches() {
        assert_eq!(sandwich_from_pseudo(3.0, 2.0, 5), (3.0, 3.0));
        let (lo, hi) = sandwich_from_pseudo(1.0, 4.0, 2);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        let (lo, hi) = sandwich_from_pseudo(1.0, 1.5, 2);
        assert!((lo - 2f64.powf(-0.25)).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(0.0, 10).is_err());
        assert!(QuadratureSpec::new(0.1, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 0).is_err());
        assert!(QuadratureSpec::new(1e-2, 1).is_ok());
    }
}
