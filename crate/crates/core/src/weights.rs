//! Weight functions, their `L^s` norms, Muckenhoupt `A_t` estimates and the
//! `g(r_Ω)` functional of the degenerate-coefficient bound.
//!
//! The `A_t` condition is usually written against `|B|^t`; here it is used in
//! the equivalent normalized form `avg_B v · (avg_B v^{-1/(t-1)})^{t-1}`.
//! `g` integrates `v^{-1/(t-1)}`, which is the same as `v^{-s/p}` with
//! `s = p/(t-1)`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{check_positive, Error, Result};
use crate::geometry::{self, dist, Domain, RasterMask};

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    /// `|x - center|^a`
    RadialPower {
        center: Vec<f64>,
        a: f64,
    },
    /// `d_Ω(x)^γ`, extended to the whole space by the unsigned boundary distance.
    DistPower {
        gamma: f64,
    },
    /// `χ_{[0,ε]}(|x|) |x|^{1-N}`
    SpikeRadial {
        eps: f64,
        n: usize,
    },
    /// Piecewise constant on the cells of `mask`, one value per array cell;
    /// zero beyond the array.
    GridSampled {
        mask: RasterMask,
        values: Vec<f64>,
    },
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::Constant(c) => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "c",
                        reason: format!("constant weight must be finite and >= 0, got {c}"),
                    });
                }
            }
            Weight::RadialPower { center, a } => {
                if center.is_empty() || !a.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "a",
                        reason: "need a center and a finite exponent".into(),
                    });
                }
            }
            Weight::DistPower { gamma } => {
                if !gamma.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "gamma",
                        reason: "must be finite".into(),
                    });
                }
            }
            Weight::SpikeRadial { eps, n } => {
                check_positive("eps", *eps)?;
                if *n == 0 {
                    return Err(Error::InvalidParameter {
                        name: "n",
                        reason: "dimension must be >= 1".into(),
                    });
                }
            }
            Weight::GridSampled { mask, values } => {
                if values.len() != mask.len() {
                    return Err(Error::InvalidParameter {
                        name: "values",
                        reason: format!("expected {} values, got {}", mask.len(), values.len()),
                    });
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidParameter {
                        name: "values",
                        reason: "sampled weight values must be finite and >= 0".into(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let wd = match self {
            Weight::RadialPower { center, .. } => Some(center.len()),
            Weight::SpikeRadial { n, .. } => Some(*n),
            Weight::GridSampled { mask, .. } => Some(mask.dim()),
            _ => None,
        };
        match wd {
            Some(k) if k != n => Err(Error::InvalidParameter {
                name: "weight",
                reason: format!("weight lives in dimension {k}, domain in {n}"),
            }),
            _ => Ok(()),
        }
    }

    /// Pointwise value.
    pub fn eval(&self, x: &[f64], domain: &Domain) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::RadialPower { center, a } => dist(x, center).powf(*a),
            Weight::DistPower { gamma } => domain.unsigned_boundary_distance(x).powf(*gamma),
            Weight::SpikeRadial { eps, n } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r <= *eps {
                    r.powf(1.0 - *n as f64)
                } else {
                    0.0
                }
            }
            Weight::GridSampled { mask, values } => mask.locate(x).map(|i| values[i]).unwrap_or(0.0),
        }
    }

    /// Mean of `w^s` over the axis-aligned cube of side `h` centered at `x`.
    ///
    /// Closed forms take over near singular sets: an equal-volume ball for the
    /// cell holding a radial singularity, and the one-dimensional profile
    /// integral across the boundary for distance powers. Returns `+∞` when the
    /// cell integral diverges.
    pub fn cell_mean_pow(&self, x: &[f64], h: f64, s: f64, domain: &Domain) -> f64 {
        let nd = x.len();
        match self {
            Weight::Constant(c) => pow_mean_const(*c, s),
            Weight::RadialPower { center, a } => {
                let b = a * s;
                radial_cell_mean(x, center, h, b, None)
            }
            Weight::SpikeRadial { eps, n } => {
                let b = (1.0 - *n as f64) * s;
                let origin = vec![0.0; nd];
                radial_cell_mean(x, &origin, h, b, Some(*eps))
            }
            Weight::DistPower { gamma } => {
                let b = gamma * s;
                let d = domain.unsigned_boundary_distance(x);
                profile_mean(d, h, b)
            }
            Weight::GridSampled { mask, values } => grid_overlap_mean(mask, values, x, h, s),
        }
    }

    /// `‖w‖_∞` on the domain; exact for analytic variants.
    pub fn sup_norm(&self, domain: &Domain) -> Result<f64> {
        self.check_dim(domain.dim())?;
        match self {
            Weight::Constant(c) => Ok(*c),
            Weight::RadialPower { center, a } => {
                if *a < 0.0 {
                    return Err(Error::Inapplicable(format!("|x|^{a} is unbounded near its center")));
                }
                let (lo, hi) = domain.bounding_box();
                let far: f64 = center
                    .iter()
                    .zip(lo.iter().zip(&hi))
                    .map(|(c, (l, u))| (c - l).abs().max((u - c).abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                Ok(far.powf(*a))
            }
            Weight::DistPower { gamma } => {
                if *gamma < 0.0 {
                    return Err(Error::Inapplicable(format!("d^{gamma} is unbounded near the boundary")));
                }
                Ok(domain.inner_radius().powf(*gamma))
            }
            Weight::SpikeRadial { n, .. } => {
                if *n > 1 {
                    Err(Error::Inapplicable(
                        "the radial spike is unbounded at the origin".into(),
                    ))
                } else {
                    Ok(1.0)
                }
            }
            Weight::GridSampled { values, .. } => Ok(values.iter().cloned().fold(0.0, f64::max)),
        }
    }
}

fn pow_mean_const(c: f64, s: f64) -> f64 {
    if c == 0.0 {
        if s > 0.0 {
            0.0
        } else if s == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        c.powf(s)
    }
}

/// Mean of `|y|^b` over the ball of radius `rho` centered at the singularity.
fn ball_mean(nd: usize, rho: f64, b: f64) -> f64 {
    let n = nd as f64;
    if b <= -n {
        f64::INFINITY
    } else {
        n * rho.powf(b) / (n + b)
    }
}

/// Mean of `|y - c|^b` (times `χ_{|y-c| <= cut}` when given) over the cube.
fn radial_cell_mean(x: &[f64], c: &[f64], h: f64, b: f64, cut: Option<f64>) -> f64 {
    let nd = x.len();
    let r = dist(x, c);
    let half_diag = 0.5 * h * (nd as f64).sqrt();
    let near_center = r <= 2.0 * half_diag;
    let near_cut = cut.map(|e| (r - e).abs() <= half_diag).unwrap_or(false);
    let beyond = cut.map(|e| r - half_diag > e).unwrap_or(false);
    if beyond {
        return 0.0;
    }
    if !near_center && !near_cut {
        return if b == 0.0 { 1.0 } else { r.powf(b) };
    }
    let k = 8usize;
    let hs = h / k as f64;
    let total = k.pow(nd as u32);
    let rho = (hs.powi(nd as i32) / geometry::unit_ball_volume(nd)).powf(1.0 / nd as f64);
    let mut sum = 0.0;
    let mut y = vec![0.0; nd];
    for mut f in 0..total {
        let mut holds = true;
        for a in (0..nd).rev() {
            let i = f % k;
            f /= k;
            y[a] = x[a] - 0.5 * h + (i as f64 + 0.5) * hs;
            if (y[a] - c[a]).abs() > 0.5 * hs {
                holds = false;
            }
        }
        let ry = dist(&y, c);
        if let Some(e) = cut {
            if ry > e {
                continue;
            }
        }
        sum += if holds {
            ball_mean(nd, rho, b)
        } else if b == 0.0 {
            1.0
        } else {
            ry.powf(b)
        };
    }
    sum / total as f64
}

/// Mean of `|u|^b` for `u` uniform on `[d - h/2, d + h/2]`.
fn profile_mean(d: f64, h: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    let lo = d - 0.5 * h;
    let hi = d + 0.5 * h;
    if lo > 0.0 {
        if lo > 4.0 * h {
            return d.powf(b);
        }
        if (b + 1.0).abs() < 1e-12 {
            return (hi / lo).ln() / h;
        }
        return (hi.powf(b + 1.0) - lo.powf(b + 1.0)) / ((b + 1.0) * h);
    }
    if b <= -1.0 {
        return f64::INFINITY;
    }
    (hi.powf(b + 1.0) + (-lo).powf(b + 1.0)) / ((b + 1.0) * h)
}

fn grid_overlap_mean(mask: &RasterMask, values: &[f64], x: &[f64], h: f64, s: f64) -> f64 {
    let nd = mask.dim();
    let g = mask.h();
    let dims = mask.dims();
    let anchor = mask.anchor();
    // per-axis overlapping sample indices and their overlap lengths
    let mut ranges: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nd);
    let mut outside_len = vec![0.0; nd];
    for a in 0..nd {
        let lo = x[a] - 0.5 * h;
        let hi = x[a] + 0.5 * h;
        let first = ((lo - anchor[a]) / g + 0.5).floor() as i64;
        let last = ((hi - anchor[a]) / g + 0.5).floor() as i64;
        let mut r = Vec::new();
        let mut covered = 0.0;
        for k in first..=last {
            let clo = anchor[a] + (k as f64 - 0.5) * g;
            let chi = clo + g;
            let ov = hi.min(chi) - lo.max(clo);
            if ov <= 0.0 {
                continue;
            }
            if k >= 0 && (k as usize) < dims[a] {
                r.push((k as usize, ov));
                covered += ov;
            }
        }
        outside_len[a] = (h - covered).max(0.0);
        ranges.push(r);
    }
    let vol = h.powi(nd as i32);
    let mut inside_vol = 0.0;
    let mut sum = 0.0;
    let counts: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
    let total: usize = counts.iter().product();
    for mut f in 0..total {
        let mut w = 1.0;
        let mut flat = 0usize;
        for a in (0..nd).rev() {
            let (k, ov) = ranges[a][f % counts[a]];
            f /= counts[a];
            w *= ov;
            flat += k * geometry_stride(dims, a);
        }
        inside_vol += w;
        sum += w * pow_mean_const(values[flat], s);
    }
    let outside = (vol - inside_vol).max(0.0);
    if outside > 1e-14 * vol {
        sum += outside * pow_mean_const(0.0, s);
    }
    sum / vol
}

fn geometry_stride(dims: &[usize], a: usize) -> usize {
    dims[a + 1..].iter().product()
}

/// The grid of cells used to integrate over `d` at spacing `h`.
pub(crate) fn integration_mask(d: &Domain, h: f64) -> Result<std::borrow::Cow<'_, RasterMask>> {
    match d {
        Domain::Raster(m) => Ok(std::borrow::Cow::Borrowed(m)),
        _ => Ok(std::borrow::Cow::Owned(geometry::rasterize(d, h)?)),
    }
}

fn divergence_check(w: &Weight, d: &Domain, s: f64) -> Result<()> {
    let nd = d.dim() as f64;
    match w {
        Weight::RadialPower { center, a } => {
            if a * s <= -nd && d.unsigned_boundary_distance(center).is_finite() {
                let (lo, hi) = d.bounding_box();
                let inside_box = center
                    .iter()
                    .zip(lo.iter().zip(&hi))
                    .all(|(c, (l, u))| *c >= *l && *c <= *u);
                if inside_box {
                    return Err(Error::Divergence(format!(
                        "|x|^{a} is not in L^{s} near its center (need a s > -{nd})"
                    )));
                }
            }
        }
        Weight::DistPower { gamma } => {
            if gamma * s <= -1.0 {
                return Err(Error::Divergence(format!(
                    "d^{gamma} is not in L^{s} (need gamma s > -1)"
                )));
            }
        }
        Weight::SpikeRadial { n, .. } if *n > 1 && s >= nd / (nd - 1.0) => {
            return Err(Error::Divergence(format!(
                "the radial spike is not in L^{s} (need s < N/(N-1))"
            )));
        }
        _ => {}
    }
    Ok(())
}

/// `‖w‖_{L^s(Ω)} = (∫_Ω |w|^s)^{1/s}` by cell quadrature at spacing `h`, with
/// closed forms for constant weights and for a radial spike inside `Ω`.
pub fn ls_norm(w: &Weight, d: &Domain, s: f64, h: f64) -> Result<f64> {
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be finite and >= 1, got {s}"),
        });
    }
    w.validate()?;
    w.check_dim(d.dim())?;
    divergence_check(w, d, s)?;
    match w {
        Weight::Constant(c) => return Ok(c * d.measure().powf(1.0 / s)),
        Weight::SpikeRadial { eps, n } => {
            let origin = vec![0.0; *n];
            if d.distance_to_boundary(&origin) >= *eps && !matches!(d, Domain::Raster(_)) {
                let nn = *n as f64;
                let e = (nn - 1.0) * (1.0 - s) + 1.0;
                let integral = geometry::surface_measure_unit_sphere(*n) * eps.powf(e) / e;
                return Ok(integral.powf(1.0 / s));
            }
        }
        _ => {}
    }
    if !matches!(d, Domain::Raster(_)) {
        check_positive("h", h)?;
    }
    let mask = integration_mask(d, h)?;
    let g = mask.h();
    let cells: Vec<usize> = (0..mask.len()).filter(|&i| mask.is_occupied(i)).collect();
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|&i| w.cell_mean_pow(&mask.center(i), g, s, d))
        .collect();
    let total: f64 = parts.iter().sum::<f64>() * g.powi(d.dim() as i32);
    if !total.is_finite() {
        return Err(Error::Divergence("weight integral is infinite on the grid".into()));
    }
    Ok(total.powf(1.0 / s))
}

/// `-1 < γ < t - 1`, the range in which `d_Ω^γ` belongs to `A_t`.
pub fn is_at_admissible(gamma: f64, t: f64) -> bool {
    t > 1.0 && gamma > -1.0 && gamma < t - 1.0
}

/// Ball family used for `A_t` estimates: centres on a grid of spacing
/// `h = side / 2^max_level` over the region's bounding box (coarsened to
/// `2^{12/N}` cells per axis when `N ≥ 3`), radii `h 2^k`, balls inside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtSampling {
    pub max_level: usize,
    /// Sub-cells per ball diameter used for averages in dimension > 1.
    pub resolution: usize,
}

impl Default for AtSampling {
    fn default() -> Self {
        Self {
            max_level: 6,
            resolution: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtEstimate {
    /// `sup_B avg_B v · (avg_B v^{-1/(t-1)})^{t-1}` over the sampled balls;
    /// a lower estimate of the true constant, `+∞` when an average diverges.
    pub constant: f64,
    pub balls_sampled: usize,
    pub max_radius: f64,
    pub diverged: bool,
}

/// Boundary points of a one-dimensional region.
fn boundary_points_1d(region: &Domain) -> Vec<f64> {
    match region {
        Domain::Box { origin, lengths } => vec![origin[0], origin[0] + lengths[0]],
        Domain::Ball { center, radius } => vec![center[0] - radius, center[0] + radius],
        Domain::Annulus { center, r_in, r_out } => {
            vec![center[0] - r_out, center[0] - r_in, center[0] + r_in, center[0] + r_out]
        }
        Domain::Raster(m) => {
            let mut pts = Vec::new();
            let h = m.h();
            for k in 0..=m.len() {
                let left = k > 0 && m.is_occupied(k - 1);
                let right = k < m.len() && m.is_occupied(k);
                if left != right {
                    pts.push(m.anchor()[0] + (k as f64 - 0.5) * h);
                }
            }
            pts
        }
    }
}

/// Mean of `|x - p|^b` over `[a, c]`.
fn power_mean(a: f64, c: f64, p: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    let (u, v) = (a - p, c - p);
    let touches = u <= 0.0 && v >= 0.0;
    if b <= -1.0 {
        if touches {
            return f64::INFINITY;
        }
        if (b + 1.0).abs() < 1e-12 {
            return (v.abs().ln() - u.abs().ln()).abs() / (c - a);
        }
    }
    let prim = |y: f64| y.signum() * y.abs().powf(b + 1.0) / (b + 1.0);
    (prim(v) - prim(u)) / (c - a)
}

/// Exact average of `w^s` over `[a, c]` for a one-dimensional weight.
fn interval_mean(v: &Weight, region: &Domain, a: f64, c: f64, s: f64) -> f64 {
    match v {
        Weight::Constant(k) => pow_mean_const(*k, s),
        Weight::RadialPower { center, a: e } => power_mean(a, c, center[0], e * s),
        Weight::SpikeRadial { eps, .. } => {
            let inside = (c.min(*eps) - a.max(-eps)).max(0.0);
            let frac = inside / (c - a);
            if frac < 1.0 && s < 0.0 {
                f64::INFINITY
            } else {
                frac
            }
        }
        Weight::DistPower { gamma } => {
            let b = gamma * s;
            let mut pts = boundary_points_1d(region);
            pts.sort_by(|x, y| x.total_cmp(y));
            // pieces on which one boundary point is nearest
            let mut cuts = vec![a];
            for w in pts.windows(2) {
                let m = 0.5 * (w[0] + w[1]);
                if m > a && m < c {
                    cuts.push(m);
                }
            }
            cuts.push(c);
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let p = pts
                    .iter()
                    .cloned()
                    .min_by(|x, y| (x - mid).abs().total_cmp(&(y - mid).abs()))
                    .unwrap_or(f64::NEG_INFINITY);
                total += power_mean(w[0], w[1], p, b) * (w[1] - w[0]);
            }
            total / (c - a)
        }
        Weight::GridSampled { mask, values } => {
            let g = mask.h();
            let x0 = mask.anchor()[0] - 0.5 * g;
            let mut total = 0.0;
            let mut covered = 0.0;
            for (k, val) in values.iter().enumerate() {
                let lo = x0 + k as f64 * g;
                let ov = (c.min(lo + g) - a.max(lo)).max(0.0);
                if ov > 0.0 {
                    total += ov * pow_mean_const(*val, s);
                    covered += ov;
                }
            }
            let rest = (c - a) - covered;
            if rest > 1e-14 * (c - a) {
                total += rest * pow_mean_const(0.0, s);
            }
            total / (c - a)
        }
    }
}

/// Sub-cell average of `w^s` over the ball `B(c, rho)`.
fn ball_mean_pow(v: &Weight, region: &Domain, c: &[f64], rho: f64, s: f64, res: usize) -> f64 {
    let nd = c.len();
    let hs = 2.0 * rho / res as f64;
    let total = res.pow(nd as u32);
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut y = vec![0.0; nd];
    for mut f in 0..total {
        for a in (0..nd).rev() {
            y[a] = c[a] - rho + ((f % res) as f64 + 0.5) * hs;
            f /= res;
        }
        if dist(&y, c) < rho {
            sum += v.cell_mean_pow(&y, hs, s, region);
            count += 1;
        }
    }
    sum / count.max(1) as f64
}

/// Estimates the `A_t` constant of `v` from balls centred on a grid over the
/// bounding box of `region`.
pub fn muckenhoupt_constant(v: &Weight, region: &Domain, t: f64, sampling: &AtSampling) -> Result<AtEstimate> {
    if !(t.is_finite() && t > 1.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be > 1, got {t}"),
        });
    }
    v.validate()?;
    v.check_dim(region.dim())?;
    let nd = region.dim();
    let (lo, hi) = region.bounding_box();
    let side = lo.iter().zip(&hi).map(|(l, u)| u - l).fold(0.0, f64::max);
    let dual = -1.0 / (t - 1.0);

    if let Weight::Constant(c) = v {
        if *c == 0.0 {
            return Ok(AtEstimate {
                constant: f64::INFINITY,
                balls_sampled: 1,
                max_radius: 0.5 * side,
                diverged: true,
            });
        }
        return Ok(AtEstimate {
            constant: 1.0,
            balls_sampled: 1,
            max_radius: 0.5 * side,
            diverged: false,
        });
    }

    // centres on the evaluation grid, radii h 2^k, balls inside the bounding box
    let level = sampling.max_level.min(12 / nd).max(1);
    let per_axis = 1usize << level;
    let h = side / per_axis as f64;
    let total = (per_axis + 1).pow(nd as u32);
    let mut balls: Vec<(Vec<f64>, f64)> = Vec::new();
    for mut f in 0..total {
        let mut c = vec![0.0; nd];
        for a in (0..nd).rev() {
            c[a] = lo[a] + (f % (per_axis + 1)) as f64 * h;
            f /= per_axis + 1;
        }
        let mut rho = h;
        while rho <= 0.5 * side * (1.0 + 1e-12) {
            let inside = (0..nd).all(|a| c[a] - rho >= lo[a] - 1e-12 * side && c[a] + rho <= hi[a] + 1e-12 * side);
            if inside {
                balls.push((c.clone(), rho));
            }
            rho *= 2.0;
        }
    }
    let values: Vec<f64> = balls
        .par_iter()
        .map(|(c, rho)| {
            let (m1, m2) = if nd == 1 {
                (
                    interval_mean(v, region, c[0] - rho, c[0] + rho, 1.0),
                    interval_mean(v, region, c[0] - rho, c[0] + rho, dual),
                )
            } else {
                (
                    ball_mean_pow(v, region, c, *rho, 1.0, sampling.resolution),
                    ball_mean_pow(v, region, c, *rho, dual, sampling.resolution),
                )
            };
            let val = m1 * m2.powf(t - 1.0);
            if val.is_nan() {
                f64::INFINITY
            } else {
                val
            }
        })
        .collect();
    let constant = values.iter().cloned().fold(1.0, f64::max);
    Ok(AtEstimate {
        constant,
        balls_sampled: balls.len(),
        max_radius: 0.5 * side,
        diverged: !constant.is_finite(),
    })
}

fn fft_nd(data: &mut [Complex<f64>], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let nd = dims.len();
    let total = data.len();
    let mut line = Vec::new();
    for axis in 0..nd {
        let n = dims[axis];
        let stride: usize = dims[axis + 1..].iter().product();
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            line.clear();
            line.extend((0..n).map(|i| data[start + i * stride]));
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// `g(r_Ω) = sup_{x ∈ Ω} ∫_{B(x, r_Ω)} v^{-1/(t-1)}`.
///
/// `v^{-1/(t-1)}` is cell-averaged on a grid covering `Ω` enlarged by `r_Ω`,
/// so every ball is integrated in full, and convolved with the ball's
/// fractional-coverage kernel by FFT. The maximum runs over cell centers of `Ω`.
pub fn g_function(v: &Weight, d: &Domain, t: f64, h: f64) -> Result<f64> {
    if !(t.is_finite() && t > 1.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be > 1, got {t}"),
        });
    }
    v.validate()?;
    v.check_dim(d.dim())?;
    let nd = d.dim();
    let e = -1.0 / (t - 1.0);
    match v {
        Weight::DistPower { gamma } if gamma * e <= -1.0 => {
            return Err(Error::Divergence(format!(
                "d^{{-{gamma}/(t-1)}} is not locally integrable (need gamma < t - 1)"
            )))
        }
        Weight::RadialPower { a, .. } if a * e <= -(nd as f64) => {
            return Err(Error::Divergence(format!(
                "|x|^{{-{a}/(t-1)}} is not locally integrable"
            )))
        }
        Weight::SpikeRadial { .. } => {
            return Err(Error::Divergence(
                "the radial spike vanishes on an open set, so v^{-1/(t-1)} is infinite".into(),
            ))
        }
        Weight::Constant(c) if *c == 0.0 => return Err(Error::Divergence("v = 0 gives an infinite integrand".into())),
        _ => {}
    }
    let mask = integration_mask(d, h)?;
    let h = mask.h();
    let r = d.inner_radius();
    let k = (r / h).ceil() as usize + 1;
    let dims: Vec<usize> = mask.dims().iter().map(|n| n + 2 * k).collect();
    let anchor: Vec<f64> = mask.anchor().iter().map(|a| a - k as f64 * h).collect();
    let total: usize = dims.iter().product();

    let field: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|f| {
            let idx = geometry::unflat(f, &dims);
            let x: Vec<f64> = idx.iter().zip(&anchor).map(|(&i, &a)| a + i as f64 * h).collect();
            v.cell_mean_pow(&x, h, e, d)
        })
        .collect();
    if field.iter().any(|x| !x.is_finite()) {
        return Err(Error::Divergence("v^{-1/(t-1)} is infinite on part of the grid".into()));
    }

    // kernel: fraction of each offset cell inside B(0, r), sub-sampled near the sphere
    let kdim = 2 * k + 1;
    let ktotal = kdim.pow(nd as u32);
    let sub = 8usize;
    let kernel: Vec<f64> = (0..ktotal)
        .map(|f| {
            let idx = geometry::unflat(f, &vec![kdim; nd]);
            let c: Vec<f64> = idx.iter().map(|&i| (i as f64 - k as f64) * h).collect();
            let rc = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let half_diag = 0.5 * h * (nd as f64).sqrt();
            if rc + half_diag <= r {
                1.0
            } else if rc - half_diag >= r {
                0.0
            } else {
                let st = sub.pow(nd as u32);
                let inside = (0..st)
                    .filter(|&g| {
                        let sidx = geometry::unflat(g, &vec![sub; nd]);
                        let rr: f64 = sidx
                            .iter()
                            .zip(&c)
                            .map(|(&i, &cc)| {
                                let y = cc - 0.5 * h + (i as f64 + 0.5) * h / sub as f64;
                                y * y
                            })
                            .sum::<f64>();
                        rr < r * r
                    })
                    .count();
                inside as f64 / st as f64
            }
        })
        .collect();

    // zero-padded circular convolution
    let pdims: Vec<usize> = dims.iter().map(|n| (n + kdim).next_power_of_two()).collect();
    let ptotal: usize = pdims.iter().product();
    let mut a = vec![Complex::new(0.0, 0.0); ptotal];
    let mut b = vec![Complex::new(0.0, 0.0); ptotal];
    for (f, val) in field.iter().enumerate() {
        let idx = geometry::unflat(f, &dims);
        let pf = flat_of(&idx, &pdims);
        a[pf] = Complex::new(*val, 0.0);
    }
    for (f, val) in kernel.iter().enumerate() {
        let idx = geometry::unflat(f, &vec![kdim; nd]);
        // offset o = idx - k, stored at -o mod n so the product computes Σ_o K(o) f(x+o)
        let pidx: Vec<usize> = idx
            .iter()
            .zip(&pdims)
            .map(|(&i, &n)| ((k as i64 - i as i64).rem_euclid(n as i64)) as usize)
            .collect();
        b[flat_of(&pidx, &pdims)] = Complex::new(*val, 0.0);
    }
    fft_nd(&mut a, &pdims, false);
    fft_nd(&mut b, &pdims, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, &pdims, true);
    let scale = 1.0 / ptotal as f64;
    let cell_vol = h.powi(nd as i32);
    let mut best: f64 = 0.0;
    for f in 0..mask.len() {
        if !mask.is_occupied(f) {
            continue;
        }
        let idx: Vec<usize> = mask.multi(f).iter().map(|i| i + k).collect();
        let val = a[flat_of(&idx, &pdims)].re * scale * cell_vol;
        best = best.max(val);
    }
    Ok(best)
}

fn flat_of(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}
