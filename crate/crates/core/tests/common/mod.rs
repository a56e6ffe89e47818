#![allow(dead_code)]

use plap_bounds::bounds::ExponentSet;
use plap_bounds::eigensolve::{self, SolveOptions};
use plap_bounds::geometry::{Domain, RasterMask};
use plap_bounds::weights::Weight;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const TOL: f64 = 1e-7;

pub fn opts() -> SolveOptions {
    SolveOptions {
        tol: TOL,
        ..SolveOptions::default()
    }
}

/// Piecewise constant weight on `(0, l)` with equal pieces.
pub fn pieces(l: f64, values: &[f64]) -> Weight {
    let k = values.len();
    let h = l / k as f64;
    let mask = RasterMask::new(vec![k], h, vec![0.5 * h], vec![true; k]).unwrap();
    Weight::GridSampled {
        mask,
        values: values.to_vec(),
    }
}

pub fn piece_values(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, 1..=max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn lambda_1d(l: f64, w: &Weight, p: f64, n: usize) -> Result<f64, TestCaseError> {
    eigensolve::lambda1_1d(l, w, p, n, &opts())
        .map(|s| s.lambda)
        .map_err(|e| TestCaseError::fail(e.to_string()))
}

/// `λ(c w) = λ(w) / c`.
pub fn weight_homogeneity(p: f64, l: f64, vals: Vec<f64>, c: f64) -> Result<(), TestCaseError> {
    let a = lambda_1d(l, &pieces(l, &vals), p, 200)?;
    let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
    let b = lambda_1d(l, &pieces(l, &scaled), p, 200)?;
    prop_assert!(rel(b * c, a) < 1e-5, "λ(cw) c = {} vs λ(w) = {a}", b * c);
    Ok(())
}

/// `λ(tΩ, w(·/t)) = t^{-p} λ(Ω, w)`, in one dimension and on rectangles.
pub fn dilation(p: f64, t: f64, vals: Vec<f64>, two_d: bool) -> Result<(), TestCaseError> {
    if two_d {
        let one = Weight::Constant(1.0);
        let a = eigensolve::lambda1_grid(
            &Domain::unit_corner_box(&[1.0, 0.75]).unwrap(),
            1.0 / 24.0,
            &one,
            p,
            &opts(),
        )
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let b = eigensolve::lambda1_grid(
            &Domain::unit_corner_box(&[t, 0.75 * t]).unwrap(),
            t / 24.0,
            &one,
            p,
            &opts(),
        )
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(rel(b.lambda * t.powf(p), a.lambda) < 1e-2);
        return Ok(());
    }
    let a = lambda_1d(1.0, &pieces(1.0, &vals), p, 200)?;
    let b = lambda_1d(t, &pieces(t, &vals), p, 200)?;
    prop_assert!(rel(b * t.powf(p), a) < 1e-5, "{} vs {a}", b * t.powf(p));
    Ok(())
}

/// `(0, L1) ⊂ (0, L2)` on a common grid gives `λ(L2) ≤ λ(L1)`.
pub fn domain_monotonicity(p: f64, n1: usize, extra: usize, c: f64, a: f64) -> Result<(), TestCaseError> {
    let h = 1.0 / 64.0;
    let n2 = n1 + extra;
    let l1 = (n1 + 1) as f64 * h;
    let l2 = (n2 + 1) as f64 * h;
    let w = Weight::RadialPower {
        center: vec![c * l1],
        a,
    };
    let s = lambda_1d(l1, &w, p, n1)?;
    let b = lambda_1d(l2, &w, p, n2)?;
    prop_assert!(b <= s * (1.0 + 2.0 * TOL), "λ(L2) = {b} > λ(L1) = {s}");
    Ok(())
}

/// `w1 ≤ w2` gives `λ(w2) ≤ λ(w1)`.
pub fn sturm_monotonicity(p: f64, vals: Vec<f64>, extra: Vec<f64>) -> Result<(), TestCaseError> {
    let k = vals.len();
    let w2: Vec<f64> = vals.iter().zip(extra.iter().cycle()).map(|(a, b)| a + b).collect();
    let l = 1.3;
    let a = lambda_1d(l, &pieces(l, &vals), p, 240)?;
    let b = lambda_1d(l, &pieces(l, &w2[..k]), p, 240)?;
    prop_assert!(b <= a * (1.0 + 2.0 * TOL), "λ(w2) = {b} > λ(w1) = {a}");
    Ok(())
}

/// The converged first eigenfield keeps one sign at every unknown.
pub fn positivity(p: f64, vals: Vec<f64>, lx: f64, two_d: bool) -> Result<(), TestCaseError> {
    let sol = if two_d {
        let d = Domain::unit_corner_box(&[lx, 1.0]).unwrap();
        let w = Weight::RadialPower {
            center: vec![0.3 * lx, 0.6],
            a: vals[0] - 1.0,
        };
        eigensolve::lambda1_grid(&d, 1.0 / 16.0, &w, p, &opts())
    } else {
        eigensolve::lambda1_1d(lx, &pieces(lx, &vals), p, 200, &opts())
    }
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let pos = sol.field.values.iter().all(|&v| v > 0.0);
    let neg = sol.field.values.iter().all(|&v| v < 0.0);
    prop_assert!(pos || neg, "eigenfield changes sign");
    Ok(())
}

/// `αp/s' = (sp - N)/s`.
pub fn exponent_identity(p: f64, n: usize, ds: f64) -> Result<(), TestCaseError> {
    let nf = n as f64;
    let s = nf / p + ds;
    let ex = ExponentSet::new(p, n, s).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let direct = (s * p - nf) / s;
    let got = ex.radius_exponent(p);
    prop_assert!(
        (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
        "{got} vs {direct}"
    );
    Ok(())
}

/// `p < N` for the exponent set.
pub fn exponent_triple() -> impl Strategy<Value = (f64, usize, f64)> {
    (2usize..=6).prop_flat_map(|n| (1.05f64..(n as f64 - 0.05), Just(n), 1e-3f64..20.0))
}

/// Runs `test` over `cases` generated inputs; `Err` holds the first failure.
pub fn run_cases<S, F>(cases: u32, strategy: S, test: F) -> Result<u32, String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map(|_| cases).map_err(|e| e.to_string())
}
