//! Exact Euclidean distance transform by separable lower envelopes of parabolas.

/// One-dimensional squared distance transform of `f` (unit spacing), in place.
///
/// `f[i]` is 0 at feature cells and `f64::INFINITY` elsewhere on the first
/// pass; later passes feed in the partial squared distances.
fn transform_line(f: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>, out: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    out.clear();
    out.resize(n, f64::INFINITY);
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => return,
    };
    v.push(first);
    z.push(f64::NEG_INFINITY);
    z.push(f64::INFINITY);
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let r = *v.last().unwrap();
            let rf = r as f64;
            let s = ((f[q] + qf * qf) - (f[r] + rf * rf)) / (2.0 * (qf - rf));
            if s <= z[v.len() - 1] {
                v.pop();
                z.pop();
                if v.is_empty() {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    z.push(f64::INFINITY);
                    break;
                }
            } else {
                v.push(q);
                *z.last_mut().unwrap() = s;
                z.push(f64::INFINITY);
                break;
            }
        }
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
    f.copy_from_slice(out);
}

/// Squared Euclidean distance (in index units) from every cell to the nearest
/// cell where `feature` is true. Arrays are C-ordered with shape `dims`.
pub(crate) fn squared_distance(dims: &[usize], feature: &[bool]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    debug_assert_eq!(total, feature.len());
    let mut g: Vec<f64> = feature.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let nd = dims.len();
    let mut strides = vec![1usize; nd];
    for a in (0..nd.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let (mut v, mut z, mut out, mut line) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for axis in 0..nd {
        let n = dims[axis];
        let stride = strides[axis];
        // enumerate line starts: all flat indices whose coordinate along `axis` is 0
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            line.clear();
            line.extend((0..n).map(|i| g[start + i * stride]));
            transform_line(&mut line, &mut v, &mut z, &mut out);
            for (i, val) in line.iter().enumerate() {
                g[start + i * stride] = *val;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(dims: &[usize], feature: &[bool]) -> Vec<f64> {
        let nd = dims.len();
        let coords = |mut i: usize| {
            let mut c = vec![0usize; nd];
            for a in (0..nd).rev() {
                c[a] = i % dims[a];
                i /= dims[a];
            }
            c
        };
        (0..feature.len())
            .map(|i| {
                let ci = coords(i);
                (0..feature.len())
                    .filter(|&j| feature[j])
                    .map(|j| {
                        let cj = coords(j);
                        ci.iter()
                            .zip(&cj)
                            .map(|(a, b)| (*a as f64 - *b as f64).powi(2))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_in_1d_2d_3d() {
        let mut state = 12345u64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33).is_multiple_of(7)
        };
        for dims in [vec![17], vec![9, 13], vec![5, 6, 7]] {
            let total: usize = dims.iter().product();
            let mut feat: Vec<bool> = (0..total).map(|_| rnd()).collect();
            feat[0] = true;
            let fast = squared_distance(&dims, &feat);
            let slow = brute(&dims, &feat);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn no_features_gives_infinity() {
        let d = squared_distance(&[3, 3], &[false; 9]);
        assert!(d.iter().all(|x| x.is_infinite()));
    }
}
