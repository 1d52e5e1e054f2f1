use std::collections::HashMap;

use super::Trajectory;
use crate::scalar::{wrap_angle, Cplx, Real};

/// Pairs `(i, j)`, `i < j`, of trajectory pieces that meet in both position and
/// momentum phase.
///
/// Piece `k` is the chord between samples `k` and `k + 1`. Two chords qualify
/// when they come within `x_tol` of each other and the phases interpolated at
/// the closest points differ by at most `phase_tol` modulo `2 pi` (equal
/// phase modulo `2 pi` means equal momentum, hence the same sheet). Chords
/// joined by less than `2 x_tol` of path are neighbours, not intersections.
pub fn same_sheet_intersections<T: Real>(traj: &Trajectory<T>, x_tol: T, phase_tol: T) -> Vec<(usize, usize)> {
    let s = &traj.samples;
    if s.len() < 2 {
        return Vec::new();
    }
    let n_seg = s.len() - 1;
    // cumulative arc length at each sample
    let mut arc = Vec::with_capacity(s.len());
    arc.push(T::zero());
    for k in 0..n_seg {
        let prev = arc[k];
        arc.push(prev + (s[k + 1].x - s[k].x).norm());
    }
    let mut lens: Vec<f64> = (0..n_seg).map(|k| (arc[k + 1] - arc[k]).as_f64()).collect();
    lens.sort_by(|a, b| a.total_cmp(b));
    let cell = lens[lens.len() / 2].max(x_tol.as_f64()).max(1e-12);

    let key = |v: f64| (v / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let pad = x_tol.as_f64();
    for k in 0..n_seg {
        let (a, b) = (s[k].x, s[k + 1].x);
        let (x0, x1) = minmax(a.re.as_f64(), b.re.as_f64());
        let (y0, y1) = minmax(a.im.as_f64(), b.im.as_f64());
        let (cx0, cx1) = (key(x0 - pad), key(x1 + pad));
        let (cy0, cy1) = (key(y0 - pad), key(y1 + pad));
        // long chords (escape legs) are skipped rather than smeared over many cells
        if (cx1 - cx0 + 1) * (cy1 - cy0 + 1) > 4096 {
            continue;
        }
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                grid.entry((cx, cy)).or_default().push(k);
            }
        }
    }

    let gap = x_tol + x_tol;
    let mut found = std::collections::BTreeSet::new();
    for bucket in grid.values() {
        for (ai, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ai + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                if arc[j] - arc[i + 1] <= gap || found.contains(&(i, j)) {
                    continue;
                }
                let (d, u, v) = segment_distance(s[i].x, s[i + 1].x, s[j].x, s[j + 1].x);
                if d > x_tol {
                    continue;
                }
                let pi = s[i].phase + (s[i + 1].phase - s[i].phase) * u;
                let pj = s[j].phase + (s[j + 1].phase - s[j].phase) * v;
                if wrap_angle(pi - pj).abs() <= phase_tol {
                    found.insert((i, j));
                }
            }
        }
    }
    found.into_iter().collect()
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Distance between segments `[a0, a1]` and `[b0, b1]` with the parameters of
/// the closest points.
fn segment_distance<T: Real>(a0: Cplx<T>, a1: Cplx<T>, b0: Cplx<T>, b1: Cplx<T>) -> (T, T, T) {
    let da = a1 - a0;
    let db = b1 - b0;
    let cross = |u: Cplx<T>, v: Cplx<T>| u.re * v.im - u.im * v.re;
    let denom = cross(da, db);
    if denom != T::zero() {
        let w = b0 - a0;
        let u = cross(w, db) / denom;
        let v = cross(w, da) / denom;
        if (T::zero()..=T::one()).contains(&u) && (T::zero()..=T::one()).contains(&v) {
            return (T::zero(), u, v);
        }
    }
    let project = |p: Cplx<T>, o: Cplx<T>, d: Cplx<T>| {
        let l2 = d.norm_sqr();
        if l2 == T::zero() {
            T::zero()
        } else {
            ((p - o).re * d.re + (p - o).im * d.im) / l2
        }
        .max(T::zero())
        .min(T::one())
    };
    let candidates = [
        {
            let v = project(a0, b0, db);
            ((a0 - (b0 + db * v)).norm(), T::zero(), v)
        },
        {
            let v = project(a1, b0, db);
            ((a1 - (b0 + db * v)).norm(), T::one(), v)
        },
        {
            let u = project(b0, a0, da);
            ((b0 - (a0 + da * u)).norm(), u, T::zero())
        },
        {
            let u = project(b1, a0, da);
            ((b1 - (a0 + da * u)).norm(), u, T::one())
        },
    ];
    candidates.into_iter().fold(candidates[0], |best, c| if c.0 < best.0 { c } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::clit;

    #[test]
    fn crossing_segments() {
        let (d, u, v) = segment_distance(clit::<f64>(-1.0, 0.0), clit(1.0, 0.0), clit(0.0, -1.0), clit(0.0, 3.0));
        assert_eq!(d, 0.0);
        assert!((u - 0.5).abs() < 1e-15 && (v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn parallel_segments() {
        let (d, _, _) = segment_distance(clit::<f64>(0.0, 0.0), clit(1.0, 0.0), clit(0.5, 0.2), clit(2.0, 0.2));
        assert!((d - 0.2).abs() < 1e-15);
    }
}
