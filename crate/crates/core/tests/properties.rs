mod common;

use common::*;
use plap_bounds::bounds::{self, ConstantMode, ProblemParams};
use plap_bounds::eigensolve::{self, GridField};
use plap_bounds::geometry::{self, fraenkel_asymmetry, Domain, RasterMask};
use plap_bounds::specfun::{self, QuadratureSpec};
use plap_bounds::weights::{self, AtSampling, Weight};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 50,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn lambda_scales_inversely_with_weight(
        p in 1.4f64..6.0, l in 0.3f64..3.0, vals in piece_values(8), c in 0.1f64..10.0,
    ) {
        weight_homogeneity(p, l, vals, c)?;
    }

    #[test]
    fn lambda_scales_under_dilation(
        p in 1.4f64..5.0, t in 0.25f64..4.0, vals in piece_values(8), two_d in prop::bool::weighted(0.2),
    ) {
        dilation(p, t, vals, two_d)?;
    }

    #[test]
    fn lambda_decreases_on_larger_intervals(
        p in 1.4f64..5.0, n1 in 20usize..120, extra in 1usize..80, c in 0.05f64..0.95, a in -0.5f64..2.0,
    ) {
        domain_monotonicity(p, n1, extra, c, a)?;
    }

    #[test]
    fn lambda_decreases_with_larger_weight(
        p in 1.4f64..5.0, vals in piece_values(6), extra in prop::collection::vec(0.0f64..3.0, 6),
    ) {
        sturm_monotonicity(p, vals, extra)?;
    }

    #[test]
    fn lambda_decreases_on_nested_rectangles(
        p in 1.5f64..4.0, nx in 6usize..14, ny in 6usize..14, ex in 0usize..6, ey in 0usize..6,
    ) {
        let h = 1.0 / 16.0;
        let small = Domain::unit_corner_box(&[nx as f64 * h, ny as f64 * h]).unwrap();
        let big = Domain::unit_corner_box(&[(nx + ex) as f64 * h, (ny + ey) as f64 * h]).unwrap();
        let one = Weight::Constant(1.0);
        let a = eigensolve::lambda1_grid(&small, h, &one, p, &opts()).unwrap().lambda;
        let b = eigensolve::lambda1_grid(&big, h, &one, p, &opts()).unwrap().lambda;
        prop_assert!(b <= a * (1.0 + 2.0 * TOL), "{b} > {a}");
    }

    #[test]
    fn first_eigenfield_has_one_sign(
        p in 1.4f64..5.0, vals in piece_values(6), lx in 0.5f64..2.0, two_d in prop::bool::weighted(0.25),
    ) {
        positivity(p, vals, lx, two_d)?;
    }

    #[test]
    fn radius_exponent_matches_closed_form((p, n, ds) in exponent_triple()) {
        exponent_identity(p, n, ds)?;
    }

    #[test]
    fn sin_2_is_sine(x in 0.0f64..std::f64::consts::PI) {
        let s = specfun::sin_p(x, 2.0, &QuadratureSpec::default()).unwrap();
        prop_assert!((s - x.sin()).abs() < 1e-9, "{s} vs {}", x.sin());
    }

    #[test]
    fn pi_p_decreases_beyond_two(p in 2.0f64..10.0, dq in 0.05f64..5.0) {
        let q = QuadratureSpec::default();
        let a = specfun::pi_p(p, &q).unwrap();
        let b = specfun::pi_p(p + dq, &q).unwrap();
        prop_assert!(b < a);
        prop_assert!(b > 2.0);
    }

    #[test]
    fn sin_p_rises_to_one(p in 1.1f64..10.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let q = QuadratureSpec::default();
        let half = 0.5 * specfun::pi_p(p, &q).unwrap();
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let a = specfun::sin_p(lo * half, p, &q).unwrap();
        let b = specfun::sin_p(hi * half, p, &q).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!((specfun::sin_p(half, p, &q).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interval_eigenvalue_scaling(p in 1.1f64..10.0, l in 0.1f64..10.0, t in 0.1f64..10.0) {
        let a = specfun::lambda1_interval(l, p).unwrap();
        let b = specfun::lambda1_interval(t * l, p).unwrap();
        prop_assert!((b * t.powf(p) / a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ls_norm_is_homogeneous(
        s in 1.0f64..4.0, c in 0.1f64..10.0, a in -0.4f64..2.0, lx in 0.5f64..2.0, ly in 0.5f64..2.0,
    ) {
        let d = Domain::unit_corner_box(&[lx, ly]).unwrap();
        let w = Weight::RadialPower { center: vec![0.3 * lx, 0.4 * ly], a };
        let h = lx.min(ly) / 32.0;
        let n1 = weights::ls_norm(&w, &d, s, h).unwrap();
        let vals: Vec<f64> = (0..40).map(|k| 0.5 + (k % 7) as f64).collect();
        let g = pieces(lx, &vals);
        let d1 = Domain::unit_corner_box(&[lx]).unwrap();
        let scaled = Weight::GridSampled {
            mask: match &g { Weight::GridSampled { mask, .. } => mask.clone(), _ => unreachable!() },
            values: vals.iter().map(|v| c * v).collect(),
        };
        let a1 = weights::ls_norm(&g, &d1, s, h).unwrap();
        let a2 = weights::ls_norm(&scaled, &d1, s, h).unwrap();
        prop_assert!((a2 / (c * a1) - 1.0).abs() < 1e-12);
        let n2 = weights::ls_norm(&Weight::Constant(c), &d, s, h).unwrap();
        prop_assert!((n2 / (c * (lx * ly).powf(1.0 / s)) - 1.0).abs() < 1e-9);
        prop_assert!(n1.is_finite() && n1 > 0.0);
    }

    #[test]
    fn muckenhoupt_constant_at_least_one(a in -0.8f64..0.8, c in -1.0f64..1.0, t in 1.5f64..4.0) {
        prop_assume!(weights::is_at_admissible(a, t));
        let d = Domain::new_box(vec![-1.0], vec![2.0]).unwrap();
        let v = Weight::RadialPower { center: vec![0.5 * c], a };
        let est = weights::muckenhoupt_constant(&v, &d, t, &AtSampling::default()).unwrap();
        prop_assert!(est.constant >= 1.0 - 1e-12, "{}", est.constant);
    }

    #[test]
    fn inner_radius_within_half_box(
        lx in 0.2f64..3.0, ly in 0.2f64..3.0, px in -2.0f64..2.0, py in -2.0f64..2.0, x in 0.0f64..1.0, y in 0.0f64..1.0,
    ) {
        let d = Domain::new_box(vec![px, py], vec![lx, ly]).unwrap();
        let r = geometry::inner_radius(&d);
        prop_assert!(r <= 0.5 * lx.min(ly) + 1e-12);
        let h = lx.min(ly) / 32.0;
        let m = geometry::rasterize(&d, h).unwrap();
        prop_assert!(m.inner_radius() <= 0.5 * lx.min(ly) + h);
        let q = [px + x * lx, py + y * ly];
        let dist = geometry::distance_to_boundary(&d, &q);
        prop_assert!(dist >= 0.0 && dist <= r + 1e-12);
    }

    #[test]
    fn asymmetry_translation_invariant(
        seed in any::<u64>(), sx in 0usize..6, sy in 0usize..6,
    ) {
        // random union of rectangles on a 12x12 patch, placed at two offsets
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut patch = [false; 144];
        for _ in 0..3 {
            let (x0, y0) = (rng.gen_range(0..8), rng.gen_range(0..8));
            let (w, h) = (rng.gen_range(2..5), rng.gen_range(2..5));
            for i in x0..(x0 + w) {
                for j in y0..(y0 + h) {
                    patch[i * 12 + j] = true;
                }
            }
        }
        let place = |ox: usize, oy: usize| {
            let mut cells = vec![false; 20 * 20];
            for i in 0..12 {
                for j in 0..12 {
                    cells[(i + ox) * 20 + j + oy] = patch[i * 12 + j];
                }
            }
            RasterMask::new(vec![20, 20], 0.1, vec![0.05, 0.05], cells).unwrap()
        };
        let a = fraenkel_asymmetry(&place(1, 1));
        let b = fraenkel_asymmetry(&place(1 + sx, 1 + sy));
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        prop_assert!((0.0..=2.0).contains(&a));
    }

    #[test]
    fn distance_coefficient_bound_reduces_at_zero(
        p in 2.1f64..8.0, lx in 0.3f64..3.0, ly in 0.3f64..3.0, a in -0.5f64..1.5,
    ) {
        let d = Domain::unit_corner_box(&[lx, ly]).unwrap();
        let w = Weight::RadialPower { center: vec![0.5 * lx, 0.5 * ly], a };
        let pp = ProblemParams::new(p, 2).unwrap();
        let h = lx.min(ly) / 32.0;
        let m = ConstantMode::Scaling;
        let x = bounds::lyapunov_distance_coeff(&d, 0.0, &w, &pp, &m, h).unwrap().value.unwrap();
        let y = bounds::lyapunov_pgtn(&d, &w, &pp, &m, h).unwrap().value.unwrap();
        prop_assert!((x / y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_bound_below_eigenvalue(p in 1.4f64..6.0, l in 0.3f64..3.0, vals in piece_values(8)) {
        let w = pieces(l, &vals);
        let b = bounds::lyapunov_1d(l, &w, p).unwrap();
        let lam = eigensolve::lambda1_1d(l, &w, p, 400, &opts()).unwrap().lambda;
        prop_assert!(b.certified);
        prop_assert!(b.value.unwrap() <= lam * 1.001, "{} > {lam}", b.value.unwrap());
    }

    #[test]
    fn bound_values_scale_with_weight(p in 1.4f64..6.0, l in 0.3f64..3.0, vals in piece_values(8), c in 0.1f64..10.0) {
        let a = bounds::lyapunov_1d(l, &pieces(l, &vals), p).unwrap().value.unwrap();
        let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
        let b = bounds::lyapunov_1d(l, &pieces(l, &scaled), p).unwrap().value.unwrap();
        prop_assert!((b * c / a - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trial_quotients_exceed_eigenvalue(p in 1.4f64..5.0, vals in piece_values(6), seed in any::<u64>()) {
        let w = pieces(1.0, &vals);
        let sol = eigensolve::lambda1_1d(1.0, &w, p, 150, &opts()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trial = GridField {
            values: sol.field.values.iter().map(|v| v.abs() * rng.gen_range(0.5..1.5) + rng.gen_range(0.0..0.1)).collect(),
            ..sol.field.clone()
        };
        let q = eigensolve::rayleigh_quotient(&trial, &w, p).unwrap();
        prop_assert!(q >= sol.lambda * (1.0 - 2.0 * TOL), "{q} < {}", sol.lambda);
    }

    #[test]
    fn radial_coefficient_zero_is_plain(p in 1.4f64..6.0, n in 2usize..4, r in 0.3f64..3.0) {
        let o = opts();
        let a = eigensolve::lambda1_radial_coeff(n, r, p, 0.0, 300, &o).unwrap().lambda;
        let b = eigensolve::lambda1_radial(n, r, p, &Weight::Constant(1.0), (n - 1) as f64, 300, &o).unwrap().lambda;
        prop_assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn solves_are_deterministic(p in 1.4f64..5.0, vals in piece_values(6), seed in any::<u64>()) {
        let w = pieces(1.0, &vals);
        let o = eigensolve::SolveOptions { seed, ..opts() };
        let a = eigensolve::lambda1_1d(1.0, &w, p, 100, &o).unwrap();
        let b = eigensolve::lambda1_1d(1.0, &w, p, 100, &o).unwrap();
        prop_assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        prop_assert_eq!(a.field.values, b.field.values);
    }
}
