use rayon::prelude::*;

use super::raster::RasterMask;
use super::unit_ball_volume;

/// Integer cell offsets whose centers fall inside a ball of radius `r_cells`
/// (in cell units) around a cell center.
fn ball_offsets(nd: usize, r_cells: f64) -> Vec<Vec<i64>> {
    let m = r_cells.floor() as i64 + 1;
    let side = (2 * m + 1) as usize;
    let total = side.pow(nd as u32);
    let mut out = Vec::new();
    for mut k in 0..total {
        let mut o = vec![0i64; nd];
        for a in (0..nd).rev() {
            o[a] = (k % side) as i64 - m;
            k /= side;
        }
        let d2: i64 = o.iter().map(|x| x * x).sum();
        if (d2 as f64) < r_cells * r_cells {
            out.push(o);
        }
    }
    out
}

struct Scorer<'a> {
    mask: &'a RasterMask,
    offsets: Vec<Vec<i64>>,
}

impl Scorer<'_> {
    /// Occupied cells whose centers fall in the ball around cell `c`.
    fn overlap(&self, c: &[i64]) -> usize {
        let dims = self.mask.dims();
        let cells = self.mask.cells();
        let mut n = 0;
        'off: for o in &self.offsets {
            let mut flat = 0usize;
            for a in 0..dims.len() {
                let j = c[a] + o[a];
                if j < 0 || j >= dims[a] as i64 {
                    continue 'off;
                }
                flat = flat * dims[a] + j as usize;
            }
            if cells[flat] {
                n += 1;
            }
        }
        n
    }
}

/// Fraenkel asymmetry `A(E) = |E Δ B| / |E|` minimized over equal-measure
/// balls `B` centered at cell centers.
///
/// Cells count as inside a ball when their centers are. Candidates come from a
/// strided scan over the occupied bounding box, each refined by coordinate
/// descent. The optimum over all centers is not guaranteed, so the result is an
/// upper bound for the grid-resolved asymmetry.
pub fn fraenkel_asymmetry(mask: &RasterMask) -> f64 {
    let nd = mask.dim();
    let count = mask.occupied_count();
    let h = mask.h();
    let r = (mask.measure() / unit_ball_volume(nd)).powf(1.0 / nd as f64);
    let scorer = Scorer {
        mask,
        offsets: ball_offsets(nd, r / h),
    };
    let (lo, hi) = occupied_index_bounds(mask);
    let strides: Vec<i64> = (0..nd)
        .map(|a| (((hi[a] - lo[a] + 1) as f64 / 24.0).ceil() as i64).max(1))
        .collect();

    let mut candidates = Vec::new();
    let counts: Vec<i64> = (0..nd).map(|a| (hi[a] - lo[a]) / strides[a] + 1).collect();
    let total: i64 = counts.iter().product();
    for mut k in 0..total {
        let mut c = vec![0i64; nd];
        for a in (0..nd).rev() {
            c[a] = lo[a] + (k % counts[a]) * strides[a];
            k /= counts[a];
        }
        candidates.push(c);
    }
    let scores: Vec<usize> = candidates.par_iter().map(|c| scorer.overlap(c)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[j].cmp(&scores[i]).then(i.cmp(&j)));

    let starts: Vec<Vec<i64>> = order.iter().take(6).map(|&i| candidates[i].clone()).collect();
    let refined: Vec<usize> = starts
        .par_iter()
        .map(|s| descend(&scorer, s.clone(), &strides))
        .collect();
    let best = refined.into_iter().max().unwrap_or(0);
    2.0 * (count - best.min(count)) as f64 / count as f64
}

fn descend(scorer: &Scorer<'_>, mut c: Vec<i64>, strides: &[i64]) -> usize {
    let nd = c.len();
    let mut best = scorer.overlap(&c);
    let mut step: Vec<i64> = strides.to_vec();
    loop {
        let mut improved = false;
        for a in 0..nd {
            for dir in [-1i64, 1] {
                loop {
                    let mut t = c.clone();
                    t[a] += dir * step[a];
                    let v = scorer.overlap(&t);
                    if v > best {
                        best = v;
                        c = t;
                        improved = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !improved {
            if step.iter().all(|&s| s == 1) {
                break;
            }
            for s in step.iter_mut() {
                *s = (*s / 2).max(1);
            }
        }
    }
    best
}

fn occupied_index_bounds(mask: &RasterMask) -> (Vec<i64>, Vec<i64>) {
    let nd = mask.dim();
    let mut lo = vec![i64::MAX; nd];
    let mut hi = vec![i64::MIN; nd];
    for (flat, &c) in mask.cells().iter().enumerate() {
        if c {
            for (a, i) in mask.multi(flat).into_iter().enumerate() {
                lo[a] = lo[a].min(i as i64);
                hi[a] = hi[a].max(i as i64);
            }
        }
    }
    (lo, hi)
}

#[cfg(test)]
pub(crate) fn brute_force_asymmetry(mask: &RasterMask) -> f64 {
    let nd = mask.dim();
    let count = mask.occupied_count();
    let r = (mask.measure() / unit_ball_volume(nd)).powf(1.0 / nd as f64);
    let scorer = Scorer {
        mask,
        offsets: ball_offsets(nd, r / mask.h()),
    };
    let best = (0..mask.len())
        .map(|f| {
            let c: Vec<i64> = mask.multi(f).into_iter().map(|x| x as i64).collect();
            scorer.overlap(&c)
        })
        .max()
        .unwrap();
    2.0 * (count - best) as f64 / count as f64
}
