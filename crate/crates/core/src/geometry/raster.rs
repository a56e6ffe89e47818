use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};

use super::edt;

/// Boolean occupancy on a uniform N-dimensional grid.
///
/// Cell `k` (multi-index) has center `anchor + k h`. Cells are stored in
/// C order (last axis fastest). Everything beyond the array counts as
/// outside the set.
#[derive(Debug, Clone)]
pub struct RasterMask {
    dims: Vec<usize>,
    h: f64,
    anchor: Vec<f64>,
    cells: Vec<bool>,
    interior_dist: OnceLock<Vec<f64>>,
    exterior_dist: OnceLock<Vec<f64>>,
}

impl PartialEq for RasterMask {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.h.to_bits() == other.h.to_bits()
            && self.anchor.len() == other.anchor.len()
            && self
                .anchor
                .iter()
                .zip(&other.anchor)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.cells == other.cells
    }
}

impl RasterMask {
    pub fn new(dims: Vec<usize>, h: f64, anchor: Vec<f64>, cells: Vec<bool>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: "need at least one axis".into(),
            });
        }
        if anchor.len() != dims.len() {
            return Err(Error::InvalidParameter {
                name: "anchor",
                reason: format!("expected {} coordinates, got {}", dims.len(), anchor.len()),
            });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("must be finite and > 0, got {h}"),
            });
        }
        let total: usize = dims.iter().product();
        if total != cells.len() {
            return Err(Error::InvalidParameter {
                name: "cells",
                reason: format!("expected {total} cells, got {}", cells.len()),
            });
        }
        if !cells.iter().any(|&c| c) {
            return Err(Error::InvalidParameter {
                name: "cells",
                reason: "mask has no occupied cell".into(),
            });
        }
        Ok(Self {
            dims,
            h,
            anchor,
            cells,
            interior_dist: OnceLock::new(),
            exterior_dist: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
    pub fn len(&self) -> usize {
        self.cells.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn measure(&self) -> f64 {
        self.occupied_count() as f64 * self.h.powi(self.dim() as i32)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .zip(&self.anchor)
            .map(|(&i, &a)| a + i as f64 * self.h)
            .collect()
    }

    pub fn is_occupied(&self, flat: usize) -> bool {
        self.cells[flat]
    }

    /// Cell containing `x`, if it lies within the array.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut flat = 0usize;
        for ((xi, a), &n) in x.iter().zip(&self.anchor).zip(&self.dims) {
            let k = ((xi - a) / self.h + 0.5).floor();
            if !(k >= 0.0 && k < n as f64) {
                return None;
            }
            flat = flat * n + k as usize;
        }
        Some(flat)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.locate(x).map(|i| self.cells[i]).unwrap_or(false)
    }

    /// Per-cell distance from the cell center to the nearest center of a cell
    /// outside the set (array border counts as outside). Zero off the set.
    pub fn distance_field(&self) -> &[f64] {
        self.interior_dist.get_or_init(|| self.padded_distance(false))
    }

    /// Per-cell distance from the cell center to the nearest occupied center.
    /// Zero on the set.
    pub fn exterior_distance_field(&self) -> &[f64] {
        self.exterior_dist.get_or_init(|| self.padded_distance(true))
    }

    fn padded_distance(&self, to_occupied: bool) -> Vec<f64> {
        let pdims: Vec<usize> = self.dims.iter().map(|n| n + 2).collect();
        let total: usize = pdims.iter().product();
        let mut feature = vec![!to_occupied; total];
        let pstrides = strides(&pdims);
        for (flat, &c) in self.cells.iter().enumerate() {
            let idx = self.multi(flat);
            let pf: usize = idx.iter().zip(&pstrides).map(|(i, s)| (i + 1) * s).sum();
            feature[pf] = if to_occupied { c } else { !c };
        }
        let sq = edt::squared_distance(&pdims, &feature);
        let mut out = vec![0.0; self.cells.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            let idx = self.multi(flat);
            let pf: usize = idx.iter().zip(&pstrides).map(|(i, s)| (i + 1) * s).sum();
            *o = sq[pf].sqrt() * self.h;
        }
        out
    }

    /// Largest distance-transform value minus half a cell: the radius of the
    /// largest ball centered at a cell center that avoids every outside cell.
    pub fn inner_radius(&self) -> f64 {
        let m = self.distance_field().iter().cloned().fold(0.0, f64::max);
        (m - 0.5 * self.h).max(0.0)
    }

    /// Distance to the boundary at `x` by nearest-cell lookup; 0 off the set.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self.locate(x) {
            Some(i) if self.cells[i] => (self.distance_field()[i] - 0.5 * self.h).max(0.0),
            _ => 0.0,
        }
    }

    /// Unsigned distance to the boundary, valid on both sides.
    pub fn unsigned_boundary_distance(&self, x: &[f64]) -> f64 {
        match self.locate(x) {
            Some(i) if self.cells[i] => (self.distance_field()[i] - 0.5 * self.h).max(0.0),
            Some(i) => (self.exterior_distance_field()[i] - 0.5 * self.h).max(0.0),
            None => {
                // beyond the array: distance to the nearest occupied center
                let mut best = f64::INFINITY;
                for (j, &c) in self.cells.iter().enumerate() {
                    if c {
                        let d = dist(&self.center(j), x);
                        best = best.min(d);
                    }
                }
                (best - 0.5 * self.h).max(0.0)
            }
        }
    }

    /// Axis-aligned box `[lo, hi]` covering all occupied cells.
    pub fn occupied_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let nd = self.dim();
        let mut lo = vec![usize::MAX; nd];
        let mut hi = vec![0usize; nd];
        for (flat, &c) in self.cells.iter().enumerate() {
            if c {
                for (a, i) in self.multi(flat).into_iter().enumerate() {
                    lo[a] = lo[a].min(i);
                    hi[a] = hi[a].max(i);
                }
            }
        }
        let lo_x = (0..nd)
            .map(|a| self.anchor[a] + (lo[a] as f64 - 0.5) * self.h)
            .collect();
        let hi_x = (0..nd)
            .map(|a| self.anchor[a] + (hi[a] as f64 + 0.5) * self.h)
            .collect();
        (lo_x, hi_x)
    }

    /// Number of connected components of the complement (including the
    /// unbounded one), using the full `3^N - 1` neighbourhood.
    pub fn complement_components(&self) -> usize {
        let pdims: Vec<usize> = self.dims.iter().map(|n| n + 2).collect();
        let total: usize = pdims.iter().product();
        let pstrides = strides(&pdims);
        let mut free = vec![true; total];
        for (flat, &c) in self.cells.iter().enumerate() {
            if c {
                let pf: usize = self.multi(flat).iter().zip(&pstrides).map(|(i, s)| (i + 1) * s).sum();
                free[pf] = false;
            }
        }
        let nd = pdims.len();
        let offsets: Vec<Vec<i64>> = (0..3usize.pow(nd as u32))
            .map(|mut k| {
                let mut o = vec![0i64; nd];
                for a in (0..nd).rev() {
                    o[a] = (k % 3) as i64 - 1;
                    k /= 3;
                }
                o
            })
            .filter(|o| o.iter().any(|&x| x != 0))
            .collect();
        let mut seen = vec![false; total];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..total {
            if !free[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(cur) = stack.pop() {
                let idx = unflat(cur, &pdims);
                'next: for o in &offsets {
                    let mut nf = 0usize;
                    for a in 0..nd {
                        let j = idx[a] as i64 + o[a];
                        if j < 0 || j >= pdims[a] as i64 {
                            continue 'next;
                        }
                        nf += j as usize * pstrides[a];
                    }
                    if free[nf] && !seen[nf] {
                        seen[nf] = true;
                        stack.push(nf);
                    }
                }
            }
        }
        count
    }

    /// Serializes to the text grid format, optionally with one value per array cell.
    pub fn to_grid_string(&self, values: Option<&[f64]>) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "plap-grid 1");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "dims {}", join(self.dims.iter()));
        let _ = writeln!(s, "h {}", self.h);
        let _ = writeln!(s, "anchor {}", join(self.anchor.iter()));
        let mut runs = Vec::new();
        let mut cur = self.cells[0];
        let mut len = 0usize;
        for &c in &self.cells {
            if c == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = c;
                len = 1;
            }
        }
        runs.push(len);
        let _ = writeln!(s, "rle {} {}", u8::from(self.cells[0]), runs.len());
        for chunk in runs.chunks(24) {
            let _ = writeln!(s, "{}", join(chunk.iter()));
        }
        if let Some(v) = values {
            if v.len() != self.cells.len() {
                return Err(Error::GridFormat(format!(
                    "expected {} values, got {}",
                    self.cells.len(),
                    v.len()
                )));
            }
            let _ = writeln!(s, "values {}", v.len());
            for chunk in v.chunks(8) {
                let _ = writeln!(s, "{}", join(chunk.iter()));
            }
        }
        let _ = writeln!(s, "end");
        Ok(s)
    }

    /// Parses the text grid format written by [`RasterMask::to_grid_string`].
    pub fn from_grid_str(text: &str) -> Result<(Self, Option<Vec<f64>>)> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::GridFormat(format!("unexpected end of input, wanted {what}")))
        };
        expect(next("magic")?, "plap-grid")?;
        expect(next("version")?, "1")?;
        expect(next("dim")?, "dim")?;
        let nd: usize = parse(next("dimension")?)?;
        if nd == 0 {
            return Err(Error::GridFormat("dimension must be >= 1".into()));
        }
        expect(next("dims")?, "dims")?;
        let mut dims = Vec::with_capacity(nd);
        for _ in 0..nd {
            dims.push(parse::<usize>(next("axis size")?)?);
        }
        expect(next("h")?, "h")?;
        let h: f64 = parse(next("spacing")?)?;
        expect(next("anchor")?, "anchor")?;
        let mut anchor = Vec::with_capacity(nd);
        for _ in 0..nd {
            anchor.push(parse::<f64>(next("anchor coordinate")?)?);
        }
        expect(next("rle")?, "rle")?;
        let mut bit = match next("start bit")? {
            "0" => false,
            "1" => true,
            other => return Err(Error::GridFormat(format!("bad start bit `{other}`"))),
        };
        let nruns: usize = parse(next("run count")?)?;
        let total: usize = dims.iter().product();
        let mut cells = Vec::with_capacity(total);
        for _ in 0..nruns {
            let r: usize = parse(next("run length")?)?;
            if cells.len() + r > total {
                return Err(Error::GridFormat("runs exceed the cell count".into()));
            }
            cells.extend(std::iter::repeat_n(bit, r));
            bit = !bit;
        }
        if cells.len() != total {
            return Err(Error::GridFormat(format!(
                "runs cover {} cells, expected {total}",
                cells.len()
            )));
        }
        let mut values = None;
        match next("values or end")? {
            "end" => {}
            "values" => {
                let n: usize = parse(next("value count")?)?;
                if n != total {
                    return Err(Error::GridFormat(format!("expected {total} values, got {n}")));
                }
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(parse::<f64>(next("value")?)?);
                }
                expect(next("end")?, "end")?;
                values = Some(v);
            }
            other => return Err(Error::GridFormat(format!("unexpected token `{other}`"))),
        }
        let mask = RasterMask::new(dims, h, anchor, cells).map_err(|e| Error::GridFormat(e.to_string()))?;
        Ok((mask, values))
    }
}

fn join<T: std::fmt::Display>(it: impl Iterator<Item = T>) -> String {
    let v: Vec<String> = it.map(|x| x.to_string()).collect();
    v.join(" ")
}

fn expect(tok: &str, want: &str) -> Result<()> {
    if tok == want {
        Ok(())
    } else {
        Err(Error::GridFormat(format!("expected `{want}`, found `{tok}`")))
    }
}

fn parse<T: std::str::FromStr>(tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::GridFormat(format!("cannot parse `{tok}`")))
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

pub(crate) fn unflat(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        idx[a] = flat % dims[a];
        flat /= dims[a];
    }
    idx
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
