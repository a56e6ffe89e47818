//! Domains, inner radius, measure, distance to the boundary, rasterization and
//! Fraenkel asymmetry.

mod asymmetry;
mod edt;
mod raster;

pub use asymmetry::fraenkel_asymmetry;
pub use raster::RasterMask;

#[cfg(test)]
pub(crate) use asymmetry::brute_force_asymmetry;

pub(crate) use raster::{dist, strides, unflat};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An open set in `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Box { origin: Vec<f64>, lengths: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    Raster(RasterMask),
}

fn check_len(v: &[f64], what: &'static str) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: what,
            reason: "need at least one finite coordinate".into(),
        });
    }
    Ok(())
}

impl Domain {
    pub fn new_box(origin: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        check_len(&lengths, "lengths")?;
        if origin.len() != lengths.len() {
            return Err(Error::InvalidParameter {
                name: "origin",
                reason: "dimension differs from lengths".into(),
            });
        }
        check_len(&origin, "origin")?;
        if lengths.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lengths",
                reason: "side lengths must be > 0".into(),
            });
        }
        Ok(Domain::Box { origin, lengths })
    }

    /// Box with one corner at the origin.
    pub fn unit_corner_box(lengths: &[f64]) -> Result<Self> {
        Self::new_box(vec![0.0; lengths.len()], lengths.to_vec())
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_len(&center, "center")?;
        crate::error::check_positive("radius", radius)?;
        Ok(Domain::Ball { center, radius })
    }

    pub fn new_annulus(center: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        check_len(&center, "center")?;
        crate::error::check_positive("r_in", r_in)?;
        crate::error::check_positive("r_out", r_out)?;
        if r_in >= r_out {
            return Err(Error::InvalidParameter {
                name: "r_in",
                reason: format!("must be < r_out ({r_in} >= {r_out})"),
            });
        }
        Ok(Domain::Annulus { center, r_in, r_out })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lengths, .. } => lengths.len(),
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center.len(),
            Domain::Raster(m) => m.dim(),
        }
    }

    pub fn inner_radius(&self) -> f64 {
        match self {
            Domain::Box { lengths, .. } => 0.5 * lengths.iter().cloned().fold(f64::INFINITY, f64::min),
            Domain::Ball { radius, .. } => *radius,
            Domain::Annulus { r_in, r_out, .. } => 0.5 * (r_out - r_in),
            Domain::Raster(m) => m.inner_radius(),
        }
    }

    pub fn measure(&self) -> f64 {
        let n = self.dim();
        match self {
            Domain::Box { lengths, .. } => lengths.iter().product(),
            Domain::Ball { radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
            Domain::Annulus { r_in, r_out, .. } => unit_ball_volume(n) * (r_out.powi(n as i32) - r_in.powi(n as i32)),
            Domain::Raster(m) => m.measure(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { origin, lengths } => x
                .iter()
                .zip(origin.iter().zip(lengths))
                .all(|(xi, (o, l))| *xi > *o && *xi < o + l),
            Domain::Ball { center, radius } => dist(x, center) < *radius,
            Domain::Annulus { center, r_in, r_out } => {
                let r = dist(x, center);
                r > *r_in && r < *r_out
            }
            Domain::Raster(m) => m.contains(x),
        }
    }

    /// `d_Ω(x)`; 0 for points outside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            Domain::Raster(m) => m.distance_to_boundary(x),
            _ => self.unsigned_boundary_distance(x),
        }
    }

    /// Distance from `x` to `∂Ω` on either side of the boundary.
    pub fn unsigned_boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { origin, lengths } => {
                if self.contains(x) {
                    x.iter()
                        .zip(origin.iter().zip(lengths))
                        .map(|(xi, (o, l))| (xi - o).min(o + l - xi))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    x.iter()
                        .zip(origin.iter().zip(lengths))
                        .map(|(xi, (o, l))| {
                            let d = (o - xi).max(xi - (o + l)).max(0.0);
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                }
            }
            Domain::Ball { center, radius } => (dist(x, center) - radius).abs(),
            Domain::Annulus { center, r_in, r_out } => {
                let r = dist(x, center);
                (r - r_in).abs().min((r - r_out).abs())
            }
            Domain::Raster(m) => m.unsigned_boundary_distance(x),
        }
    }

    /// Closed axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { origin, lengths } => {
                (origin.clone(), origin.iter().zip(lengths).map(|(o, l)| o + l).collect())
            }
            Domain::Ball { center, radius: r } | Domain::Annulus { center, r_out: r, .. } => (
                center.iter().map(|c| c - r).collect(),
                center.iter().map(|c| c + r).collect(),
            ),
            Domain::Raster(m) => m.occupied_bounds(),
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Domain::Box { .. } | Domain::Ball { .. })
    }

    /// Radial center for balls and annuli.
    pub fn radial_center(&self) -> Option<&[f64]> {
        match self {
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => Some(center),
            _ => None,
        }
    }
}

pub fn inner_radius(d: &Domain) -> f64 {
    d.inner_radius()
}

pub fn distance_to_boundary(d: &Domain, x: &[f64]) -> f64 {
    d.distance_to_boundary(x)
}

pub fn measure(d: &Domain) -> f64 {
    d.measure()
}

/// Lanczos approximation (g = 7, n = 9), accurate to roughly 1e-15 relative.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `ω_{N-1} = 2 π^{N/2} / Γ(N/2)`, the surface measure of the unit sphere.
pub fn surface_measure_unit_sphere(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(0.5 * n as f64) / gamma(0.5 * n as f64),
    }
}

/// Volume of the unit ball, `ω_{N-1} / N`.
pub fn unit_ball_volume(n: usize) -> f64 {
    surface_measure_unit_sphere(n) / n as f64
}

/// Cells whose centers lie in `Ω`, on a grid with one empty layer around the
/// bounding box. Cell `k` along an axis has center `lo + (k - 1/2) h`.
pub fn rasterize(d: &Domain, h: f64) -> Result<RasterMask> {
    crate::error::check_positive("h", h)?;
    if let Domain::Raster(m) = d {
        return Err(Error::Inapplicable(format!(
            "domain is already a raster (h = {})",
            m.h()
        )));
    }
    let r = d.inner_radius();
    if h > r {
        return Err(Error::TooCoarse { h, inner_radius: r });
    }
    let (lo, hi) = d.bounding_box();
    let dims: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(l, u)| ((u - l) / h - 1e-9).ceil().max(1.0) as usize + 2)
        .collect();
    let anchor: Vec<f64> = lo.iter().map(|l| l - 0.5 * h).collect();
    let total: usize = dims.iter().product();
    let mut cells = vec![false; total];
    let mut x = vec![0.0; dims.len()];
    for (flat, c) in cells.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dims.len()).rev() {
            x[a] = anchor[a] + (rem % dims[a]) as f64 * h;
            rem /= dims[a];
        }
        *c = d.contains(&x);
    }
    RasterMask::new(dims, h, anchor, cells).map_err(|_| Error::TooCoarse { h, inner_radius: r })
}

/// Connectivity of a planar raster: number of complement components, the
/// unbounded one included (a disk gives 1, an annulus 2).
pub fn connectivity(m: &RasterMask) -> usize {
    m.complement_components()
}
