//! Adaptive Gauss-Kronrod (7/15) integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod evaluation: (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let result = kronrod * hl;
    let err = ((kronrod - gauss) * hl).abs();
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed error
/// drops below `rel_tol * |I| + abs_floor`. A panel that would need splitting
/// beyond `max_depth` bisections aborts with [`Error::QuadratureFailure`].
pub(crate) fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    max_depth: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        err,
        depth: 0,
    });
    let mut total = value;
    let mut total_err = err;
    loop {
        if total_err <= rel_tol * total.abs() + abs_floor {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap never empties");
        if worst.depth >= max_depth || (worst.b - worst.a).abs() < 1e-300 {
            return Err(Error::QuadratureFailure {
                tolerance: rel_tol,
                depth: max_depth,
                estimate: total,
                error: total_err,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        // guard against the running error sum drifting negative through cancellation
        if total_err < 0.0 {
            total_err = heap.iter().map(|p| p.err).sum::<f64>() + e1 + e2;
        }
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
            depth: worst.depth + 1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
            depth: worst.depth + 1,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_smooth_functions() {
        let v = adaptive(|x| x * x, 0.0, 3.0, 1e-14, 0.0, 30).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = adaptive(f64::sin, 0.0, std::f64::consts::PI, 1e-14, 0.0, 30).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn handles_integrable_endpoint_singularity() {
        let v = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 60).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn reports_failure_when_depth_exhausted() {
        let r = adaptive(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12, 0.0, 3);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
