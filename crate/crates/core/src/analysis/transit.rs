use rayon::prelude::*;

use super::separatrix::order;
use super::AnalysisError;
use crate::integrator::{integrate_from, DenseSegment, IntegratorConfig, StepMonitor, Trajectory};
use crate::model::{Hamiltonian, Region};
use crate::scalar::{cplx, Cplx, Real};

/// Which way round the upper pole a transit went.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchSide {
    BelowSeparatrix,
    AboveSeparatrix,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitResult<T: Real> {
    pub start: Cplx<T>,
    /// `-conj(start)`.
    pub mirror_target: Cplx<T>,
    /// `None` when the target was never approached within [`TRANSIT_TOL`].
    pub transit_time: Option<T>,
    pub closest_approach: T,
    pub branch_side: BranchSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discontinuity<T: Real> {
    pub location: Cplx<T>,
    /// Time just after the crossing minus time just before, in scan direction.
    pub jump: T,
    pub time_before: T,
    pub time_after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScanResult<T: Real> {
    pub region: Region<T>,
    pub resolution: (usize, usize),
    /// Row-major, `ny` rows of `nx` pixels; row 0 is the lowest `Im x`.
    pub times: Vec<Option<T>>,
    pub boundary_estimate: Vec<Cplx<T>>,
}

impl<T: Real> GridScanResult<T> {
    pub fn at(&self, i: usize, j: usize) -> Option<T> {
        self.times[j * self.resolution.0 + i]
    }

    pub fn pixel_centre(&self, i: usize, j: usize) -> Cplx<T> {
        pixel_centre(&self.region, self.resolution, i, j)
    }
}

/// A transit counts only if it reaches this close to the mirror point.
pub const TRANSIT_TOL: f64 = 1e-4;
/// Neighbouring pixels whose times differ by more than this straddle the boundary.
pub const BOUNDARY_JUMP: f64 = 0.5;
const SCAN_WIDTH: f64 = 1e-6;
const SIDE_OFFSET: f64 = 1e-4;
const CROSSING_POLE_RADIUS: f64 = 1e-9;
const PROBES_PER_STEP: usize = 16;

struct Approach<T: Real> {
    target: Cplx<T>,
    best: (T, T),
    hit: Option<(T, T)>,
}

impl<T: Real> Approach<T> {
    fn distance(&self, seg: &DenseSegment<T>, t: T) -> T {
        (seg.eval(t)[0] - self.target).norm()
    }

    /// Golden-section minimisation of the distance on `[a, b]`.
    fn refine(&self, seg: &DenseSegment<T>, mut a: T, mut b: T) -> (T, T) {
        let g = T::lit(0.618_033_988_749_894_8);
        let mut c = b - (b - a) * g;
        let mut d = a + (b - a) * g;
        let (mut fc, mut fd) = (self.distance(seg, c), self.distance(seg, d));
        for _ in 0..100 {
            if (b - a).abs() <= T::lit(1e-13) * T::one().max(b.abs()) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * g;
                fc = self.distance(seg, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * g;
                fd = self.distance(seg, d);
            }
        }
        let t = (a + b) * T::lit(0.5);
        (t, self.distance(seg, t))
    }
}

impl<T: Real> StepMonitor<T> for Approach<T> {
    fn on_step(&mut self, _: &Hamiltonian<T>, seg: &DenseSegment<T>) -> Option<T> {
        let k = PROBES_PER_STEP;
        let ts: Vec<T> = (0..=k).map(|j| seg.t0 + seg.h * T::lit(j as f64 / k as f64)).collect();
        let ds: Vec<T> = ts.iter().map(|&t| self.distance(seg, t)).collect();
        let (jmin, _) = ds.iter().enumerate().min_by(|a, b| order(a.1, b.1)).expect("probes");
        let lo = ts[jmin.saturating_sub(1)];
        let hi = ts[(jmin + 1).min(k)];
        let (t, d) = self.refine(seg, lo, hi);
        let (t, d) = if d <= ds[jmin] { (t, d) } else { (ts[jmin], ds[jmin]) };
        if d < self.best.1 {
            self.best = (t, d);
        }
        if d <= T::lit(TRANSIT_TOL) {
            self.hit = Some((t, d));
            return Some(t);
        }
        None
    }
}

/// Time for the westward trajectory from `x0` to reach its mirror image
/// `-conj(x0)`. Only `n = 2` has the time-reversal structure this relies on.
pub fn transit_time<T: Real>(
    h: &Hamiltonian<T>,
    x0: Cplx<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<TransitResult<T>, AnalysisError> {
    if h.power() != 2 {
        return Err(AnalysisError::UnsupportedPower(h.power()));
    }
    if !(x0.re > T::zero()) {
        return Err(AnalysisError::LeftHalfPlane);
    }
    let target = -x0.conj();
    let branch = h.branch_along(x0, cplx(-T::one(), T::zero()))?;
    let p0 = h.momentum_branches(x0)?.values[branch];
    let mut mon = Approach {
        target,
        best: (T::zero(), (x0 - target).norm()),
        hit: None,
    };
    let traj = integrate_from(h, x0, p0, cfg, &mut mon)?;
    let (transit_time, closest_approach) = match mon.hit {
        Some((t, d)) => (Some(t), d),
        None => (None, mon.best.1),
    };
    let branch_side = side_of(h, &traj)?;
    Ok(TransitResult {
        start: x0,
        mirror_target: target,
        transit_time,
        closest_approach,
        branch_side,
    })
}

fn side_of<T: Real>(h: &Hamiltonian<T>, traj: &Trajectory<T>) -> Result<BranchSide, AnalysisError> {
    let upper = h
        .potential()
        .poles()?
        .into_iter()
        .map(|p| p.location.im)
        .filter(|im| *im > T::zero())
        .max_by(order);
    let Some(pole_im) = upper else {
        return Ok(BranchSide::Unknown);
    };
    let max_im = traj.positions().map(|x| x.im).fold(T::neg_infinity(), T::max);
    Ok(if max_im > pole_im {
        BranchSide::AboveSeparatrix
    } else {
        BranchSide::BelowSeparatrix
    })
}

/// Locates where the transit time jumps along the segment `from -> to` by
/// bisecting on the side of the upper pole the transit passes.
pub fn transit_discontinuity<T: Real>(
    h: &Hamiltonian<T>,
    from: Cplx<T>,
    to: Cplx<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Discontinuity<T>, AnalysisError> {
    // starts near the crossing graze the pole
    let cfg = &cfg.with_pole_radius(cfg.pole_radius.min(T::lit(CROSSING_POLE_RADIUS)));
    let side = |x: Cplx<T>| -> Result<BranchSide, AnalysisError> { Ok(transit_time(h, x, cfg)?.branch_side) };
    let s_from = side(from)?;
    let s_to = side(to)?;
    if s_from == s_to || s_from == BranchSide::Unknown || s_to == BranchSide::Unknown {
        return Err(AnalysisError::NoBracket);
    }
    let len = (to - from).norm();
    let (mut lo, mut hi) = (T::zero(), T::one());
    while (hi - lo) * len > T::lit(SCAN_WIDTH) {
        let mid = (lo + hi) * T::lit(0.5);
        if side(from + (to - from).scale(mid))? == s_from {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let location = from + (to - from).scale((lo + hi) * T::lit(0.5));
    let dir = (to - from).unscale(len);
    let reached = |x: Cplx<T>| -> Result<T, AnalysisError> {
        transit_time(h, x, cfg)?.transit_time.ok_or(AnalysisError::TransitUnreached)
    };
    let time_before = reached(location - dir.scale(T::lit(SIDE_OFFSET)))?;
    let time_after = reached(location + dir.scale(T::lit(SIDE_OFFSET)))?;
    Ok(Discontinuity {
        location,
        jump: time_after - time_before,
        time_before,
        time_after,
    })
}

fn pixel_centre<T: Real>(region: &Region<T>, (nx, ny): (usize, usize), i: usize, j: usize) -> Cplx<T> {
    let fx = (T::lit(i as f64) + T::lit(0.5)) / T::lit(nx as f64);
    let fy = (T::lit(j as f64) + T::lit(0.5)) / T::lit(ny as f64);
    cplx(
        region.re_min + (region.re_max - region.re_min) * fx,
        region.im_min + (region.im_max - region.im_min) * fy,
    )
}

/// Transit time at every pixel centre of `region`. Rows run in parallel; the
/// result does not depend on scheduling.
pub fn transit_grid<T: Real>(
    h: &Hamiltonian<T>,
    region: &Region<T>,
    resolution: (usize, usize),
    cfg: &IntegratorConfig<T>,
) -> Result<GridScanResult<T>, AnalysisError> {
    let (nx, ny) = resolution;
    if nx == 0 || ny == 0 {
        return Err(AnalysisError::InvalidArgument("grid resolution must be positive".into()));
    }
    if region.re_min < T::zero() || !(region.re_max > region.re_min) || !(region.im_max > region.im_min) {
        return Err(AnalysisError::InvalidArgument("region must be a nonempty box in Re x >= 0".into()));
    }
    if h.power() != 2 {
        return Err(AnalysisError::UnsupportedPower(h.power()));
    }
    let rows: Vec<Vec<Option<T>>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| {
                    let x0 = pixel_centre(region, resolution, i, j);
                    transit_time(h, x0, cfg).ok().and_then(|r| r.transit_time)
                })
                .collect()
        })
        .collect();
    let times: Vec<Option<T>> = rows.into_iter().flatten().collect();
    let result = GridScanResult {
        region: *region,
        resolution,
        times,
        boundary_estimate: Vec::new(),
    };
    let boundary_estimate = boundary(&result);
    Ok(GridScanResult { boundary_estimate, ..result })
}

fn boundary<T: Real>(g: &GridScanResult<T>) -> Vec<Cplx<T>> {
    let (nx, ny) = g.resolution;
    let jump = T::lit(BOUNDARY_JUMP);
    let half = T::lit(0.5);
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let here = g.at(i, j);
            let neighbours = [(i + 1 < nx).then(|| (i + 1, j)), (j + 1 < ny).then(|| (i, j + 1))];
            for (ni, nj) in neighbours.into_iter().flatten() {
                if let (Some(a), Some(b)) = (here, g.at(ni, nj)) {
                    if (a - b).abs() > jump {
                        out.push((g.pixel_centre(i, j) + g.pixel_centre(ni, nj)).scale(half));
                    }
                }
            }
        }
    }
    out
}
