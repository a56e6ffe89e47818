//! First Dirichlet eigenvalue of the weighted p-Laplacian by minimizing the
//! discrete Rayleigh quotient `∫ c |∇u|^p / ∫ w |u|^p`.
//!
//! Unknowns live on lattice nodes; nodes touching a cell outside the set are
//! pinned to zero, so the Dirichlet condition sits on the cell boundary. The
//! energy is piecewise linear on the two corner simplices of every cell (the
//! usual two-triangle split in the plane), and the denominator uses the value
//! at each simplex centroid. By convexity of `|·|^p` the discrete quotient of
//! any field is at least the continuous quotient of its interpolant.
//!
//! Descent directions are preconditioned by the frozen-coefficient operator
//! `Σ c (|∇u|² + δ²)^{(p-2)/2} |∇·|²`; a unit step is one step of inverse
//! iteration. Steps are accepted by Armijo backtracking on the quotient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_positive, Error, Result};
use crate::geometry::{self, Domain, RasterMask};
use crate::quad;
use crate::weights::Weight;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative change in λ regarded as stagnation.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Rebuild the preconditioner every this many iterations.
    pub refresh_every: usize,
    pub seed: u64,
    /// Return the last iterate instead of an error when `max_iter` runs out.
    pub fail_on_limit: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 2000,
            armijo: 1e-4,
            max_backtracks: 40,
            refresh_every: 2,
            seed: 0,
            fail_on_limit: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must lie in (0, 1e-2], got {}", self.tol),
            });
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::InvalidParameter {
                name: "armijo",
                reason: "must lie in (0, 1/2)".into(),
            });
        }
        Ok(())
    }
}

/// Where the values of a [`GridField`] live.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Lattice {
    /// `n` interior nodes `x_i = i h` on `(0, L)`, `h = L / (n + 1)`.
    Interval { length: f64 },
    /// Nodes `r_i = (i + 1/2) h` on `[0, R)`, `h = R / (n + 1/2)`; the quotient
    /// is `∫ r^{N-1} (R-r)^γ |u'|^p dr / ∫ r^{denom} w(r) |u|^p dr`.
    Radial {
        dim: usize,
        radius: f64,
        denom_power: f64,
        coef_gamma: f64,
    },
    /// Active nodes of `nodes` (cell corners of a raster of `domain`), with
    /// an optional coefficient `v` in the energy `∫ v |∇u|^p`.
    Nodes {
        nodes: RasterMask,
        domain: Domain,
        coefficient: Option<Weight>,
    },
}

/// Samples of a function on a lattice; unlisted nodes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub lattice: Lattice,
    pub h: f64,
    /// One value per unknown: interval/radial nodes in order, or active
    /// lattice nodes in flat order.
    pub values: Vec<f64>,
}

impl GridField {
    /// Values over the whole node array (zeros at pinned nodes).
    pub fn full_values(&self) -> Vec<f64> {
        match &self.lattice {
            Lattice::Nodes { nodes, .. } => {
                let mut out = vec![0.0; nodes.len()];
                let mut k = 0;
                for (f, o) in out.iter_mut().enumerate() {
                    if nodes.is_occupied(f) {
                        *o = self.values[k];
                        k += 1;
                    }
                }
                out
            }
            _ => self.values.clone(),
        }
    }

    /// Node mask and full values in the portable grid format.
    pub fn to_grid_string(&self) -> Result<String> {
        match &self.lattice {
            Lattice::Nodes { nodes, .. } => nodes.to_grid_string(Some(&self.full_values())),
            Lattice::Interval { .. } | Lattice::Radial { .. } => {
                let n = self.values.len();
                let anchor = match self.lattice {
                    Lattice::Interval { .. } => self.h,
                    _ => 0.5 * self.h,
                };
                let mask = RasterMask::new(vec![n], self.h, vec![anchor], vec![true; n])?;
                mask.to_grid_string(Some(&self.values))
            }
        }
    }

    /// Node positions matching `values`.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        match &self.lattice {
            Lattice::Interval { .. } => (0..self.values.len()).map(|i| vec![(i + 1) as f64 * self.h]).collect(),
            Lattice::Radial { .. } => (0..self.values.len())
                .map(|i| vec![(i as f64 + 0.5) * self.h])
                .collect(),
            Lattice::Nodes { nodes, .. } => (0..nodes.len())
                .filter(|&f| nodes.is_occupied(f))
                .map(|f| nodes.center(f))
                .collect(),
        }
    }
}

/// A converged (or, with `fail_on_limit = false`, the last) iterate.
#[derive(Debug, Clone)]
pub struct Solution {
    pub lambda: f64,
    pub field: GridField,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Discrete quotient data. Energy elements carry `comps` gradient components,
/// each a two-term difference; mass elements average `m_k` nodes.
struct Problem {
    p: f64,
    n: usize,
    comps: usize,
    e_w: Vec<f64>,
    e_idx: Vec<[u32; 2]>,
    e_c: Vec<[f64; 2]>,
    m_k: usize,
    m_w: Vec<f64>,
    m_idx: Vec<u32>,
    bandwidth: usize,
}

impl Problem {
    fn grad_comp(&self, u: &[f64], j: usize) -> f64 {
        let [i1, i2] = self.e_idx[j];
        let [c1, c2] = self.e_c[j];
        let mut g = 0.0;
        if i1 != NONE {
            g += c1 * u[i1 as usize];
        }
        if i2 != NONE {
            g += c2 * u[i2 as usize];
        }
        g
    }

    fn energy(&self, u: &[f64], pseudo: bool) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        for (el, w) in self.e_w.iter().enumerate() {
            let base = el * self.comps;
            if pseudo {
                let s: f64 = (0..self.comps).map(|k| self.grad_comp(u, base + k).abs().powf(p)).sum();
                e += w * s;
            } else {
                let g2: f64 = (0..self.comps).map(|k| self.grad_comp(u, base + k).powi(2)).sum();
                if g2 > 0.0 {
                    e += w * g2.powf(0.5 * p);
                }
            }
        }
        e
    }

    /// Energy and its gradient.
    fn energy_grad(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.p;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut e = 0.0;
        let mut gs = vec![0.0; self.comps];
        for (el, w) in self.e_w.iter().enumerate() {
            let base = el * self.comps;
            let mut g2 = 0.0;
            for (k, gk) in gs.iter_mut().enumerate() {
                *gk = self.grad_comp(u, base + k);
                g2 += *gk * *gk;
            }
            if g2 == 0.0 {
                continue;
            }
            let gn = g2.sqrt();
            e += w * gn.powf(p);
            let f = w * p * gn.powf(p - 2.0);
            for (k, gk) in gs.iter().enumerate() {
                let [i1, i2] = self.e_idx[base + k];
                let [c1, c2] = self.e_c[base + k];
                if i1 != NONE {
                    grad[i1 as usize] += f * gk * c1;
                }
                if i2 != NONE {
                    grad[i2 as usize] += f * gk * c2;
                }
            }
        }
        e
    }

    fn mean_value(&self, u: &[f64], el: usize) -> f64 {
        let inv = 1.0 / self.m_k as f64;
        self.m_idx[el * self.m_k..(el + 1) * self.m_k]
            .iter()
            .filter(|&&i| i != NONE)
            .map(|&i| u[i as usize])
            .sum::<f64>()
            * inv
    }

    fn mass(&self, u: &[f64]) -> f64 {
        self.m_w
            .iter()
            .enumerate()
            .map(|(el, w)| w * self.mean_value(u, el).abs().powf(self.p))
            .sum()
    }

    fn mass_grad(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.p;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let inv = 1.0 / self.m_k as f64;
        let mut d = 0.0;
        for (el, w) in self.m_w.iter().enumerate() {
            let ub = self.mean_value(u, el);
            let a = ub.abs();
            if a == 0.0 {
                continue;
            }
            d += w * a.powf(p);
            let f = w * p * a.powf(p - 1.0) * ub.signum() * inv;
            for &i in &self.m_idx[el * self.m_k..(el + 1) * self.m_k] {
                if i != NONE {
                    grad[i as usize] += f;
                }
            }
        }
        d
    }

    fn quotient(&self, u: &[f64]) -> Result<f64> {
        let d = self.mass(u);
        if !(d > 0.0) {
            return Err(Error::DegenerateField(
                "the weighted p-norm of the field vanishes".into(),
            ));
        }
        Ok(self.energy(u, false) / d)
    }

    /// Banded frozen-coefficient operator `Σ w a |G u|²` (without the factor p).
    fn preconditioner(&self, u: &[f64]) -> Band {
        let p = self.p;
        let mut gmax: f64 = 0.0;
        let nel = self.e_w.len();
        let mut g2s = vec![0.0; nel];
        for (el, g2o) in g2s.iter_mut().enumerate() {
            let base = el * self.comps;
            let g2: f64 = (0..self.comps).map(|k| self.grad_comp(u, base + k).powi(2)).sum();
            *g2o = g2;
            gmax = gmax.max(g2.sqrt());
        }
        // for p < 2 the flux is singular where ∇u vanishes; a loose δ would
        // cap the stiffness there and stall the iteration
        let rel = if p < 2.0 { 1e-10 } else { 2e-2 };
        let delta = (rel * gmax).max(1e-300);
        let mut band = Band::new(self.n, self.bandwidth);
        for (el, w) in self.e_w.iter().enumerate() {
            let a = w * (g2s[el] + delta * delta).powf(0.5 * (p - 2.0));
            for k in 0..self.comps {
                let [i1, i2] = self.e_idx[el * self.comps + k];
                let [c1, c2] = self.e_c[el * self.comps + k];
                if i1 != NONE {
                    band.add(i1 as usize, i1 as usize, a * c1 * c1);
                }
                if i2 != NONE {
                    band.add(i2 as usize, i2 as usize, a * c2 * c2);
                }
                if i1 != NONE && i2 != NONE {
                    band.add(i1 as usize, i2 as usize, a * c1 * c2);
                }
            }
        }
        band
    }
}

/// Symmetric positive definite band matrix with lower storage and in-place
/// Cholesky factorization.
struct Band {
    n: usize,
    bw: usize,
    /// Row `i` holds entries `(i, i - bw ..= i)`.
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (self.bw + j - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.at(i, j);
        self.data[k] += v;
    }

    fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.at(i, j)];
                for k in k0..j {
                    s -= self.data[self.at(i, k)] * self.data[self.at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::DegenerateField(
                            "preconditioner lost positive definiteness".into(),
                        ));
                    }
                    let idx = self.at(i, i);
                    self.data[idx] = s.sqrt();
                } else {
                    let idx = self.at(i, j);
                    self.data[idx] = s / self.data[self.at(j, j)];
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &mut [f64]) {
        let bw = self.bw;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.at(i, k)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(self.n) {
                s -= self.data[self.at(k, i)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
    }
}

fn check_solver_exponent(p: f64) -> Result<()> {
    if !(1.1..=10.0).contains(&p) {
        return Err(Error::UnsupportedExponent(p));
    }
    Ok(())
}

/// `∫_a^b r^d (R - r)^g dr` for integer `d >= 0`, by expanding `r^d` in
/// powers of `R - r`. Requires `g > -1` when `b = R`.
fn int_pow_dist(a: f64, b: f64, radius: f64, d: u32, g: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    let (ua, ub) = ((radius - a).max(0.0), (radius - b).max(0.0));
    for k in 0..=d {
        if k > 0 {
            binom *= (d - k + 1) as f64 / k as f64;
        }
        let e = g + k as f64 + 1.0;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = (ua.powf(e) - ub.powf(e)) / e;
        total += sign * binom * radius.powi((d - k) as i32) * term;
    }
    total
}

/// `∫_a^b r^d w(r) dr` for a radial weight about the origin.
fn radial_mass(w: &Weight, a: f64, b: f64, d: f64, radius: f64, dim: usize) -> Result<f64> {
    let pow_int = |lo: f64, hi: f64, e: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        if e <= -1.0 && lo == 0.0 {
            return Err(Error::Divergence(format!("r^{e} is not integrable at the origin")));
        }
        if (e + 1.0).abs() < 1e-12 {
            return Ok((hi / lo).ln());
        }
        Ok((hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0))
    };
    match w {
        Weight::Constant(c) => Ok(c * pow_int(a, b, d)?),
        Weight::RadialPower { center, a: e } if center.iter().all(|&c| c == 0.0) => pow_int(a, b, d + e),
        Weight::SpikeRadial { eps, n } => pow_int(a, b.min(*eps), d + 1.0 - *n as f64),
        Weight::DistPower { gamma } => {
            if d >= 0.0 && d.fract() == 0.0 {
                Ok(int_pow_dist(a, b, radius, d as u32, *gamma))
            } else {
                quad::adaptive(|r| r.powf(d) * (radius - r).powf(*gamma), a, b, 1e-12, 1e-300, 50)
            }
        }
        other => {
            let dom = Domain::new_ball(vec![0.0; dim], radius)?;
            let f = |r: f64| {
                let mut x = vec![0.0; dim];
                x[0] = r;
                r.powf(d) * other.eval(&x, &dom)
            };
            match other {
                Weight::GridSampled { .. } | Weight::RadialPower { .. } => Err(Error::Inapplicable(
                    "radial solves need a weight that is radial about the origin".into(),
                )),
                _ => quad::adaptive(f, a, b, 1e-12, 1e-300, 50),
            }
        }
    }
}

fn interval_problem(l: f64, w: &Weight, p: f64, n: usize) -> Result<(Problem, f64, Domain)> {
    let h = l / (n + 1) as f64;
    let dom = Domain::unit_corner_box(&[l])?;
    let mut pb = Problem {
        p,
        n,
        comps: 1,
        e_w: Vec::with_capacity(n + 1),
        e_idx: Vec::with_capacity(n + 1),
        e_c: Vec::with_capacity(n + 1),
        m_k: 2,
        m_w: Vec::with_capacity(n + 1),
        m_idx: Vec::with_capacity(2 * n + 2),
        bandwidth: 1,
    };
    for e in 0..=n {
        // element between node e-1 and node e (unknown indices), ends pinned
        let left = if e == 0 { NONE } else { (e - 1) as u32 };
        let right = if e == n { NONE } else { e as u32 };
        pb.e_w.push(h);
        pb.e_idx.push([left, right]);
        pb.e_c.push([-1.0 / h, 1.0 / h]);
        let mid = (e as f64 + 0.5) * h;
        pb.m_w.push(h * w.cell_mean_pow(&[mid], h, 1.0, &dom));
        pb.m_idx.push(left);
        pb.m_idx.push(right);
    }
    Ok((pb, h, dom))
}

#[allow(clippy::too_many_arguments)]
fn radial_problem(
    dim: usize,
    radius: f64,
    p: f64,
    w: &Weight,
    denom: f64,
    gamma: f64,
    n: usize,
) -> Result<(Problem, f64)> {
    let h = radius / (n as f64 + 0.5);
    let mut pb = Problem {
        p,
        n,
        comps: 1,
        e_w: Vec::with_capacity(n),
        e_idx: Vec::with_capacity(n),
        e_c: Vec::with_capacity(n),
        m_k: 2,
        m_w: Vec::with_capacity(n + 1),
        m_idx: Vec::with_capacity(2 * n + 2),
        bandwidth: 1,
    };
    let d = (dim - 1) as u32;
    // [0, r_0]: u is constant there, no energy
    pb.m_w.push(radial_mass(w, 0.0, 0.5 * h, denom, radius, dim)?);
    pb.m_idx.push(0);
    pb.m_idx.push(0);
    for i in 0..n {
        let a = (i as f64 + 0.5) * h;
        let b = if i + 1 == n { radius } else { a + h };
        let right = if i + 1 == n { NONE } else { (i + 1) as u32 };
        let coef = int_pow_dist(a, b, radius, d, gamma);
        pb.e_w.push(coef);
        pb.e_idx.push([i as u32, right]);
        pb.e_c.push([-1.0 / h, 1.0 / h]);
        pb.m_w.push(radial_mass(w, a, b, denom, radius, dim)?);
        pb.m_idx.push(i as u32);
        pb.m_idx.push(right);
    }
    Ok((pb, h))
}

/// Node lattice of a cell mask: corners, active when all adjacent cells are in
/// the mask.
fn node_mask(cells: &RasterMask) -> Result<RasterMask> {
    let nd = cells.dim();
    let h = cells.h();
    let ndims: Vec<usize> = cells.dims().iter().map(|n| n + 1).collect();
    let anchor: Vec<f64> = cells.anchor().iter().map(|a| a - 0.5 * h).collect();
    let total: usize = ndims.iter().product();
    let cdims = cells.dims();
    let mut active = vec![false; total];
    for (f, act) in active.iter_mut().enumerate() {
        let idx = geometry::unflat(f, &ndims);
        let mut all = true;
        for corner in 0..(1usize << nd) {
            let mut cf = 0usize;
            for a in 0..nd {
                let off = (corner >> a) & 1;
                if idx[a] < off || idx[a] - off >= cdims[a] {
                    all = false;
                    break;
                }
                cf = cf * cdims[a] + (idx[a] - off);
            }
            if !all || !cells.is_occupied(cf) {
                all = false;
                break;
            }
        }
        *act = all;
    }
    if !active.iter().any(|&a| a) {
        return Err(Error::TooCoarse {
            h,
            inner_radius: cells.inner_radius(),
        });
    }
    RasterMask::new(ndims, h, anchor, active)
}

struct LatticeProblem {
    pb: Problem,
    nodes: RasterMask,
    /// unknown index -> node flat index
    order: Vec<usize>,
}

fn lattice_problem(
    cells: &RasterMask,
    domain: &Domain,
    w: &Weight,
    coef: Option<&Weight>,
    p: f64,
) -> Result<LatticeProblem> {
    let nd = cells.dim();
    let h = cells.h();
    let nodes = node_mask(cells)?;
    let ndims = nodes.dims().to_vec();
    let nstr = geometry::strides(&ndims);
    // longest axis outermost keeps the band narrow
    let mut perm: Vec<usize> = (0..nd).collect();
    perm.sort_by(|&a, &b| ndims[b].cmp(&ndims[a]).then(a.cmp(&b)));
    let total = nodes.len();
    let mut number = vec![NONE; total];
    let mut order = Vec::new();
    let pdims: Vec<usize> = perm.iter().map(|&a| ndims[a]).collect();
    for t in 0..total {
        let pidx = geometry::unflat(t, &pdims);
        let mut f = 0usize;
        for (k, &a) in perm.iter().enumerate() {
            f += pidx[k] * nstr[a];
        }
        if nodes.is_occupied(f) {
            number[f] = order.len() as u32;
            order.push(f);
        }
    }
    let n = order.len();
    let vol = h.powi(nd as i32);
    let mut pb = Problem {
        p,
        n,
        comps: nd,
        e_w: Vec::new(),
        e_idx: Vec::new(),
        e_c: Vec::new(),
        m_k: nd + 1,
        m_w: Vec::new(),
        m_idx: Vec::new(),
        bandwidth: 0,
    };
    let elements_per_cell = if nd == 1 { 1 } else { 2 };
    let share = vol / elements_per_cell as f64;
    for cf in 0..cells.len() {
        if !cells.is_occupied(cf) {
            continue;
        }
        let cidx = cells.multi(cf);
        // cell cf spans nodes cidx .. cidx + 1
        let node_at = |off: &[usize]| -> u32 {
            let mut f = 0;
            for a in 0..nd {
                f += (cidx[a] + off[a]) * nstr[a];
            }
            number[f]
        };
        let lo = vec![0usize; nd];
        let hi = vec![1usize; nd];
        let corners = [node_at(&lo), node_at(&hi)];
        let mut touched = corners.iter().any(|&c| c != NONE);
        let mut fwd = Vec::with_capacity(nd);
        let mut bwd = Vec::with_capacity(nd);
        for a in 0..nd {
            let mut e = lo.clone();
            e[a] = 1;
            fwd.push(node_at(&e));
            let mut e = hi.clone();
            e[a] = 0;
            bwd.push(node_at(&e));
        }
        touched |= fwd.iter().chain(&bwd).any(|&c| c != NONE);
        if !touched {
            continue;
        }
        let center = cells.center(cf);
        let wbar = w.cell_mean_pow(&center, h, 1.0, domain);
        let vbar = coef.map_or(1.0, |v| v.cell_mean_pow(&center, h, 1.0, domain));
        if !vbar.is_finite() {
            return Err(Error::Divergence("coefficient is not integrable on a cell".into()));
        }
        // forward simplex from the min corner
        pb.e_w.push(share * vbar);
        for &f in &fwd {
            pb.e_idx.push([corners[0], f]);
            pb.e_c.push([-1.0 / h, 1.0 / h]);
        }
        pb.m_w.push(share * wbar);
        pb.m_idx.push(corners[0]);
        pb.m_idx.extend(fwd.iter().cloned());
        if elements_per_cell == 2 {
            pb.e_w.push(share * vbar);
            for &b in &bwd {
                pb.e_idx.push([b, corners[1]]);
                pb.e_c.push([-1.0 / h, 1.0 / h]);
            }
            pb.m_w.push(share * wbar);
            pb.m_idx.push(corners[1]);
            pb.m_idx.extend(bwd.iter().cloned());
        }
    }
    let mut bw = 0usize;
    for [i1, i2] in &pb.e_idx {
        if *i1 != NONE && *i2 != NONE {
            bw = bw.max((*i1 as i64 - *i2 as i64).unsigned_abs() as usize);
        }
    }
    pb.bandwidth = bw;
    Ok(LatticeProblem { pb, nodes, order })
}

/// Weak-form mismatch `Σ_j |⟨E'(u) - λ D'(u), φ_j⟩| / Σ_j |⟨λ D'(u), φ_j⟩|`
/// over the nodal hats `φ_j`.
///
/// A sum rather than a max: where `∇u` vanishes the flux `|∇u|^{p-2}∇u` has
/// a round-off floor of order `(ε/h)^{p-1}` at a single node, which a
/// pointwise measure cannot resolve for `p < 2`.
fn residual_from(ge: &[f64], gd: &[f64], lambda: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (e, d) in ge.iter().zip(gd) {
        num += (e - lambda * d).abs();
        den += (lambda * d).abs();
    }
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn residual_of(pb: &Problem, u: &[f64], lambda: f64) -> f64 {
    let mut ge = vec![0.0; pb.n];
    let mut gd = vec![0.0; pb.n];
    pb.energy_grad(u, &mut ge);
    pb.mass_grad(u, &mut gd);
    residual_from(&ge, &gd, lambda)
}

fn normalize(pb: &Problem, u: &mut [f64]) -> Result<f64> {
    let d = pb.mass(u);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::DegenerateField(
            "the weighted p-norm of the field vanishes".into(),
        ));
    }
    let s = d.powf(-1.0 / pb.p);
    u.iter_mut().for_each(|x| *x *= s);
    Ok(s)
}

struct Run {
    u: Vec<f64>,
    lambda: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Quotient `Q = E / D` and its gradient `(∇E - Q ∇D) / D`.
fn quotient_grad(pb: &Problem, u: &[f64], ge: &mut [f64], gd: &mut [f64], g: &mut [f64]) -> Option<f64> {
    let e = pb.energy_grad(u, ge);
    let d = pb.mass_grad(u, gd);
    if !(d > 0.0) || !e.is_finite() {
        return None;
    }
    let q = e / d;
    for j in 0..g.len() {
        g[j] = (ge[j] - q * gd[j]) / d;
    }
    Some(q)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Scratch {
    trial: Vec<f64>,
    ge: Vec<f64>,
    gd: Vec<f64>,
    g: Vec<f64>,
}

/// Step along `dir` satisfying a sufficient-decrease test, found by expansion
/// and secant steps on the directional derivative.
#[allow(clippy::too_many_arguments)]
fn line_search(
    pb: &Problem,
    u: &[f64],
    dir: &[f64],
    q0: f64,
    slope0: f64,
    alpha0: f64,
    opts: &SolveOptions,
    sc: &mut Scratch,
) -> Option<(f64, f64)> {
    let slack = 8.0 * f64::EPSILON * q0.abs();
    let eval = |a: f64, sc: &mut Scratch| -> Option<(f64, f64)> {
        for j in 0..u.len() {
            sc.trial[j] = u[j] + a * dir[j];
        }
        let q = quotient_grad(pb, &sc.trial, &mut sc.ge, &mut sc.gd, &mut sc.g)?;
        Some((q, dot(&sc.g, dir)))
    };
    let ok = |a: f64, q: f64| q <= q0 + opts.armijo * a * slope0 + slack;
    let mut best: Option<(f64, f64)> = None;
    let note = |a: f64, q: f64, best: &mut Option<(f64, f64)>| {
        if ok(a, q) && best.is_none_or(|(_, bq)| q < bq) {
            *best = Some((a, q));
        }
    };
    let (mut lo_a, mut lo_d) = (0.0, slope0);
    let mut hi: Option<(f64, f64)> = None;
    let mut a = alpha0;
    for _ in 0..12 {
        match eval(a, sc) {
            None => {
                hi = Some((a, f64::NAN));
                break;
            }
            Some((q, d)) => {
                note(a, q, &mut best);
                if d >= 0.0 || !ok(a, q) {
                    hi = Some((a, if ok(a, q) { d } else { f64::NAN }));
                    break;
                }
                lo_a = a;
                lo_d = d;
                a *= 2.0;
            }
        }
    }
    let Some((mut hi_a, mut hi_d)) = hi else {
        return best;
    };
    for _ in 0..opts.max_backtracks.min(30) {
        let w = hi_a - lo_a;
        let mut t = if hi_d.is_finite() && hi_d > lo_d {
            lo_a - lo_d * w / (hi_d - lo_d)
        } else {
            lo_a + 0.5 * w
        };
        t = t.clamp(lo_a + 0.1 * w, hi_a - 0.1 * w);
        match eval(t, sc) {
            None => {
                hi_a = t;
                hi_d = f64::NAN;
            }
            Some((q, d)) => {
                note(t, q, &mut best);
                if !ok(t, q) {
                    hi_a = t;
                    hi_d = f64::NAN;
                } else if d.abs() <= 0.1 * slope0.abs() {
                    return best;
                } else if d < 0.0 {
                    lo_a = t;
                    lo_d = d;
                } else {
                    hi_a = t;
                    hi_d = d;
                }
            }
        }
        if best.is_some() && w < 1e-3 * hi_a {
            break;
        }
    }
    best
}

fn minimize(pb: &Problem, mut u: Vec<f64>, opts: &SolveOptions) -> Result<Run> {
    opts.validate()?;
    let n = pb.n;
    normalize(pb, &mut u)?;
    let mut ge = vec![0.0; n];
    let mut gd = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut sc = Scratch {
        trial: vec![0.0; n],
        ge: vec![0.0; n],
        gd: vec![0.0; n],
        g: vec![0.0; n],
    };
    let degenerate = || Error::DegenerateField("the weighted p-norm of the field vanishes".into());
    let mut lambda = quotient_grad(pb, &u, &mut ge, &mut gd, &mut g).ok_or_else(degenerate)?;
    let mut band: Option<Band> = None;
    let mut since_refresh = usize::MAX;
    let mut restart = true;
    let mut rz_prev = 0.0;
    let mut quiet = 0usize;
    let mut failures = 0usize;
    for it in 1..=opts.max_iter {
        let residual = residual_from(&ge, &gd, lambda);
        if quiet >= 10 && residual < 100.0 * opts.tol {
            return Ok(Run {
                u,
                lambda,
                iterations: it - 1,
                residual,
                converged: true,
            });
        }
        if band.is_none() || since_refresh >= opts.refresh_every {
            let mut b = pb.preconditioner(&u);
            b.factor()?;
            band = Some(b);
            since_refresh = 0;
        }
        since_refresh += 1;
        z.copy_from_slice(&g);
        band.as_ref().unwrap().solve(&mut z);
        let rz = dot(&g, &z);
        let beta = if restart || rz_prev <= 0.0 {
            0.0
        } else {
            let num: f64 = z
                .iter()
                .zip(g.iter().zip(&g_prev))
                .map(|(zi, (a, b))| zi * (a - b))
                .sum();
            (num / rz_prev).max(0.0)
        };
        for j in 0..n {
            dir[j] = -z[j] + beta * dir[j];
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            for j in 0..n {
                dir[j] = -z[j];
            }
            slope = -rz;
        }
        if !(slope < 0.0) {
            // gradient vanishes to working precision
            return Ok(Run {
                u,
                lambda,
                iterations: it,
                residual,
                converged: residual < 100.0 * opts.tol,
            });
        }
        // keep the first trial within the current amplitude
        let umax = u.iter().fold(0f64, |m, x| m.max(x.abs()));
        let dmax = dir.iter().fold(0f64, |m, x| m.max(x.abs()));
        let alpha0 = if dmax > umax { umax / dmax } else { 1.0 };
        let Some((alpha, _)) = line_search(pb, &u, &dir, lambda, slope, alpha0, opts, &mut sc) else {
            failures += 1;
            quiet += 1;
            if failures > 20 {
                return Ok(Run {
                    u,
                    lambda,
                    iterations: it,
                    residual,
                    converged: residual < 100.0 * opts.tol,
                });
            }
            restart = true;
            since_refresh = usize::MAX;
            continue;
        };
        failures = 0;
        restart = false;
        g_prev.copy_from_slice(&g);
        rz_prev = rz;
        for j in 0..n {
            u[j] = (u[j] + alpha * dir[j]).abs();
        }
        let scale = normalize(pb, &mut u)?;
        dir.iter_mut().for_each(|x| *x *= scale);
        let new_lambda = quotient_grad(pb, &u, &mut ge, &mut gd, &mut g).ok_or_else(degenerate)?;
        if ((lambda - new_lambda) / lambda).abs() < opts.tol {
            quiet += 1;
        } else {
            quiet = 0;
        }
        lambda = new_lambda;
    }
    let residual = residual_from(&ge, &gd, lambda);
    Ok(Run {
        u,
        lambda,
        iterations: opts.max_iter,
        converged: quiet >= 10 && residual < 100.0 * opts.tol,
        residual,
    })
}

fn finish(run: Run, lattice: Lattice, h: f64, opts: &SolveOptions) -> Result<Solution> {
    if !run.converged && opts.fail_on_limit {
        return Err(Error::IterationLimit {
            iterations: run.iterations,
            lambda: run.lambda,
            residual: run.residual,
        });
    }
    Ok(Solution {
        lambda: run.lambda,
        field: GridField {
            lattice,
            h,
            values: run.u,
        },
        iterations: run.iterations,
        residual: run.residual,
        converged: run.converged,
    })
}

/// Smooth seeded perturbation: a random tilt of a few percent, so the start is
/// not exactly symmetric but carries no grid-scale oscillation.
fn jitter(opts: &SolveOptions, u: &mut [f64], pos: &[Vec<f64>]) {
    let Some(first) = pos.first() else { return };
    let nd = first.len();
    let mut lo = vec![f64::INFINITY; nd];
    let mut hi = vec![f64::NEG_INFINITY; nd];
    for x in pos {
        for a in 0..nd {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tilt: Vec<f64> = (0..nd).map(|_| rng.gen_range(-0.02..0.02)).collect();
    for (v, x) in u.iter_mut().zip(pos) {
        let mut f = 1.0;
        for a in 0..nd {
            let ext = (hi[a] - lo[a]).max(f64::MIN_POSITIVE);
            f += tilt[a] * ((x[a] - lo[a]) / ext - 0.5);
        }
        *v *= f;
    }
}

/// `λ_1` of `-(|u'|^{p-2} u')' = λ w |u|^{p-2} u` on `(0, L)` with `n` interior nodes.
pub fn lambda1_1d(l: f64, w: &Weight, p: f64, n: usize, opts: &SolveOptions) -> Result<Solution> {
    check_positive("L", l)?;
    check_solver_exponent(p)?;
    w.validate()?;
    if n < 8 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 8 interior nodes, got {n}"),
        });
    }
    let (pb, h, _) = interval_problem(l, w, p, n)?;
    let mut u: Vec<f64> = (1..=n)
        .map(|i| {
            let x = i as f64 * h;
            x * (l - x)
        })
        .collect();
    let pos: Vec<Vec<f64>> = (1..=n).map(|i| vec![i as f64 * h]).collect();
    jitter(opts, &mut u, &pos);
    let run = minimize(&pb, u, opts)?;
    finish(run, Lattice::Interval { length: l }, h, opts)
}

/// `λ_1` of the radial quotient on `[0, R)` with `u(R) = 0` and a free end at
/// the origin. The denominator density is `r^{denom} w(r)` with the full
/// weight (use `denom = N - 1` for the usual radial reduction).
#[allow(clippy::too_many_arguments)]
pub fn lambda1_radial(
    dim: usize,
    radius: f64,
    p: f64,
    w: &Weight,
    denom_power: f64,
    n: usize,
    opts: &SolveOptions,
) -> Result<Solution> {
    radial_solve(dim, radius, p, w, denom_power, 0.0, n, opts)
}

/// `λ_1` for the coefficient `(R - r)^γ = d_{B_R}^γ` on the ball, `w ≡ 1`.
pub fn lambda1_radial_coeff(
    dim: usize,
    radius: f64,
    p: f64,
    gamma: f64,
    n: usize,
    opts: &SolveOptions,
) -> Result<Solution> {
    if gamma <= -1.0 {
        return Err(Error::Divergence(format!(
            "(R - r)^{gamma} is not integrable at the boundary"
        )));
    }
    radial_solve(dim, radius, p, &Weight::Constant(1.0), (dim - 1) as f64, gamma, n, opts)
}

#[allow(clippy::too_many_arguments)]
fn radial_solve(
    dim: usize,
    radius: f64,
    p: f64,
    w: &Weight,
    denom: f64,
    gamma: f64,
    n: usize,
    opts: &SolveOptions,
) -> Result<Solution> {
    check_positive("R", radius)?;
    check_solver_exponent(p)?;
    w.validate()?;
    if dim < 1 {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: "dimension must be >= 1".into(),
        });
    }
    if n < 16 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 16 radial nodes, got {n}"),
        });
    }
    let (pb, h) = radial_problem(dim, radius, p, w, denom, gamma, n)?;
    let mut u: Vec<f64> = (0..n).map(|i| radius - (i as f64 + 0.5) * h).collect();
    let pos: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) * h]).collect();
    jitter(opts, &mut u, &pos);
    let run = minimize(&pb, u, opts)?;
    finish(
        run,
        Lattice::Radial {
            dim,
            radius,
            denom_power: denom,
            coef_gamma: gamma,
        },
        h,
        opts,
    )
}

/// `λ_1` on a raster mask (any dimension; the weight sees `Ω` as the raster).
pub fn lambda1_2d_fd(mask: &RasterMask, w: &Weight, p: f64, opts: &SolveOptions) -> Result<Solution> {
    let domain = Domain::Raster(mask.clone());
    lattice_solve(mask, &domain, None, w, p, opts)
}

/// `λ_1` on a domain rasterized at spacing `h`; the weight is evaluated
/// against the original domain.
pub fn lambda1_grid(domain: &Domain, h: f64, w: &Weight, p: f64, opts: &SolveOptions) -> Result<Solution> {
    lambda1_grid_coeff(domain, h, None, w, p, opts)
}

/// As [`lambda1_grid`] with the energy `∫ v |∇u|^p`.
pub fn lambda1_grid_coeff(
    domain: &Domain,
    h: f64,
    v: Option<&Weight>,
    w: &Weight,
    p: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let mask = match domain {
        Domain::Raster(m) => m.clone(),
        _ => geometry::rasterize(domain, h)?,
    };
    lattice_solve(&mask, domain, v, w, p, opts)
}

fn lattice_solve(
    mask: &RasterMask,
    domain: &Domain,
    v: Option<&Weight>,
    w: &Weight,
    p: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    check_solver_exponent(p)?;
    w.validate()?;
    if let Some(v) = v {
        v.validate()?;
    }
    if mask.occupied_count() < 16 {
        return Err(Error::TooCoarse {
            h: mask.h(),
            inner_radius: mask.inner_radius(),
        });
    }
    let lp = lattice_problem(mask, domain, w, v, p)?;
    let mut u: Vec<f64> = lp
        .order
        .iter()
        .map(|&f| {
            let x = lp.nodes.center(f);
            let d = domain.distance_to_boundary(&x);
            if d > 0.0 {
                d
            } else {
                0.5 * mask.h()
            }
        })
        .collect();
    let pos: Vec<Vec<f64>> = lp.order.iter().map(|&f| lp.nodes.center(f)).collect();
    jitter(opts, &mut u, &pos);
    let run = minimize(&lp.pb, u, opts)?;
    // back to flat node order
    let mut by_flat: Vec<(usize, f64)> = lp.order.iter().cloned().zip(run.u.iter().cloned()).collect();
    by_flat.sort_by_key(|(f, _)| *f);
    let run = Run {
        u: by_flat.into_iter().map(|(_, v)| v).collect(),
        ..run
    };
    finish(
        run,
        Lattice::Nodes {
            nodes: lp.nodes,
            domain: domain.clone(),
            coefficient: v.cloned(),
        },
        mask.h(),
        opts,
    )
}

/// Rebuilds the discrete quotient for a field, with unknowns in field order.
fn problem_for(u: &GridField, w: &Weight, p: f64) -> Result<Problem> {
    match &u.lattice {
        Lattice::Interval { length } => Ok(interval_problem(*length, w, p, u.values.len())?.0),
        Lattice::Radial {
            dim,
            radius,
            denom_power,
            coef_gamma,
        } => Ok(radial_problem(*dim, *radius, p, w, *denom_power, *coef_gamma, u.values.len())?.0),
        Lattice::Nodes {
            nodes,
            domain,
            coefficient,
        } => {
            let cells = cells_of_nodes(nodes)?;
            let lp = lattice_problem(&cells, domain, w, coefficient.as_ref(), p)?;
            // renumber unknowns to flat order
            let mut rank = vec![0u32; lp.order.len()];
            let mut sorted: Vec<(usize, usize)> = lp.order.iter().enumerate().map(|(k, &f)| (f, k)).collect();
            sorted.sort();
            for (new, (_, old)) in sorted.iter().enumerate() {
                rank[*old] = new as u32;
            }
            let mut pb = lp.pb;
            for pair in pb.e_idx.iter_mut() {
                for i in pair.iter_mut() {
                    if *i != NONE {
                        *i = rank[*i as usize];
                    }
                }
            }
            for i in pb.m_idx.iter_mut() {
                if *i != NONE {
                    *i = rank[*i as usize];
                }
            }
            pb.bandwidth = pb.n.saturating_sub(1);
            Ok(pb)
        }
    }
}

/// Cell mask whose node lattice is `nodes`: a cell is kept when any of its
/// corners is active, which reproduces the energy support.
fn cells_of_nodes(nodes: &RasterMask) -> Result<RasterMask> {
    let nd = nodes.dim();
    let h = nodes.h();
    let cdims: Vec<usize> = nodes.dims().iter().map(|n| n - 1).collect();
    let anchor: Vec<f64> = nodes.anchor().iter().map(|a| a + 0.5 * h).collect();
    let total: usize = cdims.iter().product();
    let ndims = nodes.dims();
    let cells: Vec<bool> = (0..total)
        .map(|cf| {
            let idx = geometry::unflat(cf, &cdims);
            (0..(1usize << nd)).any(|corner| {
                let mut f = 0;
                for a in 0..nd {
                    f = f * ndims[a] + idx[a] + ((corner >> a) & 1);
                }
                nodes.is_occupied(f)
            })
        })
        .collect();
    RasterMask::new(cdims, h, anchor, cells)
}

fn check_field(u: &GridField, pb: &Problem) -> Result<()> {
    if u.values.len() != pb.n || u.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateField(
            "field values do not match the lattice or are not finite".into(),
        ));
    }
    Ok(())
}

/// Discrete Rayleigh quotient of a field.
pub fn rayleigh_quotient(u: &GridField, w: &Weight, p: f64) -> Result<f64> {
    let pb = problem_for(u, w, p)?;
    check_field(u, &pb)?;
    pb.quotient(&u.values)
}

/// Quotient of the pseudo p-energy `Σ_i ∫ |∂_i u|^p` over `∫ w |u|^p`.
pub fn pseudo_rayleigh_quotient(u: &GridField, w: &Weight, p: f64) -> Result<f64> {
    let pb = problem_for(u, w, p)?;
    check_field(u, &pb)?;
    let d = pb.mass(&u.values);
    if !(d > 0.0) {
        return Err(Error::DegenerateField(
            "the weighted p-norm of the field vanishes".into(),
        ));
    }
    Ok(pb.energy(&u.values, true) / d)
}

/// Largest weak-form mismatch over nodal hat test functions, relative to the
/// largest right-hand-side entry.
pub fn weak_residual(u: &GridField, lambda: f64, w: &Weight, p: f64) -> Result<f64> {
    let pb = problem_for(u, w, p)?;
    check_field(u, &pb)?;
    Ok(residual_of(&pb, &u.values, lambda))
}

/// JSON sidecar written next to a dumped field.
pub fn sidecar_json(sol: &Solution, seed: u64) -> serde_json::Value {
    serde_json::json!({
        "lambda": sol.lambda,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "seed": seed,
        "h": sol.field.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{lambda1_mixed, pi_p, QuadratureSpec};
    use std::f64::consts::PI;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn band_cholesky_solves() {
        let n = 7;
        let mut b = Band::new(n, 2);
        for i in 0..n {
            b.add(i, i, 6.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i > 1 {
                b.add(i, i - 2, -0.5);
            }
        }
        let dense = |i: usize, j: usize| -> f64 {
            let d = (i as i64 - j as i64).abs();
            match d {
                0 => 6.0,
                1 => -1.0,
                2 => -0.5,
                _ => 0.0,
            }
        };
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut rhs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense(i, j) * x[j]).sum()).collect();
        b.factor().unwrap();
        b.solve(&mut rhs);
        for (a, e) in rhs.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_eigenvalues() {
        let sol = lambda1_1d(1.0, &Weight::Constant(1.0), 2.0, 2000, &opts()).unwrap();
        assert!((sol.lambda / (PI * PI) - 1.0).abs() < 1e-3, "{}", sol.lambda);
        assert!(sol.field.values.iter().all(|&v| v > 0.0));
        let p3 = pi_p(3.0, &QuadratureSpec::default()).unwrap().powi(3);
        let sol = lambda1_1d(1.0, &Weight::Constant(1.0), 3.0, 2000, &opts()).unwrap();
        assert!((sol.lambda / p3 - 1.0).abs() < 1e-2, "{} vs {p3}", sol.lambda);
        let a = lambda1_1d(1.0, &Weight::Constant(1.0), 2.5, 1000, &opts()).unwrap();
        let b = lambda1_1d(2.0, &Weight::Constant(1.0), 2.5, 1000, &opts()).unwrap();
        assert!((b.lambda / a.lambda / 2f64.powf(-2.5) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn hat_function_quotient_and_homogeneity() {
        let u = GridField {
            lattice: Lattice::Interval { length: 1.0 },
            h: 1.0 / 3.0,
            values: vec![1.0, 1.0],
        };
        let q = rayleigh_quotient(&u, &Weight::Constant(1.0), 2.0).unwrap();
        assert!((q - 12.0).abs() < 1e-12, "{q}");
        assert!(q > PI * PI);
        let v = GridField {
            values: vec![-3.5, -3.5],
            ..u.clone()
        };
        assert!((rayleigh_quotient(&v, &Weight::Constant(1.0), 2.0).unwrap() - q).abs() < 1e-12);
        let z = GridField {
            values: vec![0.0, 0.0],
            ..u
        };
        assert!(matches!(
            rayleigh_quotient(&z, &Weight::Constant(1.0), 2.0),
            Err(Error::DegenerateField(_))
        ));
    }

    #[test]
    fn residual_discriminates() {
        let n = 199;
        let h = 1.0 / (n + 1) as f64;
        let sine = GridField {
            lattice: Lattice::Interval { length: 1.0 },
            h,
            values: (1..=n).map(|i| (PI * i as f64 * h).sin()).collect(),
        };
        let r1 = weak_residual(&sine, PI * PI, &Weight::Constant(1.0), 2.0).unwrap();
        let n2 = 399;
        let h2 = 1.0 / (n2 + 1) as f64;
        let fine = GridField {
            lattice: Lattice::Interval { length: 1.0 },
            h: h2,
            values: (1..=n2).map(|i| (PI * i as f64 * h2).sin()).collect(),
        };
        let r2 = weak_residual(&fine, PI * PI, &Weight::Constant(1.0), 2.0).unwrap();
        assert!(r1 < 1e-3 && r1 / r2 > 3.5, "{r1} {r2}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = GridField {
            values: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
            ..sine
        };
        let q = rayleigh_quotient(&noise, &Weight::Constant(1.0), 2.0).unwrap();
        assert!(weak_residual(&noise, q, &Weight::Constant(1.0), 2.0).unwrap() > 0.1);
    }

    #[test]
    fn radial_solver_matches_mixed_and_bessel() {
        for p in [2.0, 3.0] {
            let sol = lambda1_radial(1, 1.0, p, &Weight::Constant(1.0), 0.0, 2000, &opts()).unwrap();
            let exact = lambda1_mixed(1.0, p).unwrap();
            assert!(
                (sol.lambda / exact - 1.0).abs() < 1e-2,
                "{p}: {} vs {exact}",
                sol.lambda
            );
        }
        let j01: f64 = 2.404_825_557_695_773;
        let sol = lambda1_radial(2, 1.0, 2.0, &Weight::Constant(1.0), 1.0, 2000, &opts()).unwrap();
        assert!((sol.lambda / (j01 * j01) - 1.0).abs() < 1e-3, "{}", sol.lambda);
        let c = lambda1_radial_coeff(2, 1.0, 2.0, 0.0, 2000, &opts()).unwrap();
        assert!((c.lambda - sol.lambda).abs() < 1e-6 * sol.lambda);
    }

    #[test]
    fn radial_coefficient_scaling() {
        let n = 800;
        for gamma in [-0.5, 0.4] {
            let l1 = lambda1_radial_coeff(2, 1.0, 3.0, gamma, n, &opts()).unwrap().lambda;
            let l2 = lambda1_radial_coeff(2, 2.0, 3.0, gamma, n, &opts()).unwrap().lambda;
            assert!((l2 / l1 / 2f64.powf(gamma - 3.0) - 1.0).abs() < 1e-6);
        }
        // (1 - r)^γ shrinks as γ grows, and so does λ
        let lams: Vec<f64> = [-0.9, -0.5, 0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&g| lambda1_radial_coeff(2, 1.0, 3.0, g, n, &opts()).unwrap().lambda)
            .collect();
        assert!(lams.windows(2).all(|w| w[1] < w[0]), "{lams:?}");
    }

    #[test]
    fn unit_square_p2() {
        let sq = Domain::unit_corner_box(&[1.0, 1.0]).unwrap();
        let sol = lambda1_grid(&sq, 1.0 / 32.0, &Weight::Constant(1.0), 2.0, &opts()).unwrap();
        let exact = 2.0 * PI * PI;
        assert!(sol.lambda >= exact && sol.lambda < 1.01 * exact, "{}", sol.lambda);
        assert!(sol.field.values.iter().all(|&v| v > 0.0));
        let q = rayleigh_quotient(&sol.field, &Weight::Constant(1.0), 2.0).unwrap();
        assert!((q - sol.lambda).abs() < 1e-10 * q);
        let res = weak_residual(&sol.field, sol.lambda, &Weight::Constant(1.0), 2.0).unwrap();
        assert!(res < 10.0 * opts().tol, "{res}");
        let text = sol.field.to_grid_string().unwrap();
        let (m, v) = RasterMask::from_grid_str(&text).unwrap();
        assert_eq!(m.occupied_count(), sol.field.values.len());
        assert_eq!(v.unwrap().len(), m.len());
    }

    #[test]
    fn exponent_range_enforced() {
        let w = Weight::Constant(1.0);
        assert!(matches!(
            lambda1_1d(1.0, &w, 1.05, 100, &opts()),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(matches!(
            lambda1_1d(1.0, &w, 11.0, 100, &opts()),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(lambda1_1d(1.0, &w, 2.0, 4, &opts()).is_err());
    }

    #[test]
    fn iteration_limit_reports_last_iterate() {
        let w = Weight::Constant(1.0);
        let o = SolveOptions { max_iter: 2, ..opts() };
        assert!(matches!(
            lambda1_1d(1.0, &w, 3.0, 200, &o),
            Err(Error::IterationLimit { .. })
        ));
        let o = SolveOptions {
            fail_on_limit: false,
            ..o
        };
        let sol = lambda1_1d(1.0, &w, 3.0, 200, &o).unwrap();
        assert!(!sol.converged && sol.lambda.is_finite());
    }
}
