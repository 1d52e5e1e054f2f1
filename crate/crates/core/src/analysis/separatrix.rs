use num_complex::Complex;

use super::AnalysisError;
use crate::integrator::{integrate_from, IntegratorConfig, NoMonitor, Trajectory};
use crate::model::{Hamiltonian, PoleInfo, PoleOrder};
use crate::scalar::{wrap_angle, Cplx, Real};

/// Initial data for a separatrix leaving a pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixSeed<T: Real> {
    pub pole: Cplx<T>,
    /// Radians.
    pub direction_angle: T,
    /// Initial distance from the pole.
    pub offset: T,
    /// Time after leaving the pole at which the local law reaches `offset`.
    pub time_scale: T,
}

impl<T: Real> SeparatrixSeed<T> {
    pub fn start(&self) -> Cplx<T> {
        self.pole + Complex::from_polar(self.offset, self.direction_angle)
    }

    pub fn with_offset(mut self, offset: T, residue_abs: T) -> Self {
        self.offset = offset;
        self.time_scale = seed_time(offset, residue_abs);
        self
    }
}

pub const DEFAULT_OFFSET: f64 = 1e-4;

fn seed_time<T: Real>(offset: T, residue_abs: T) -> T {
    (offset.powi(3) / (T::lit(9.0) * residue_abs)).sqrt()
}

/// The three separatrix directions at a simple pole for `n = 2`.
///
/// Near a pole with residue `r`, `V ~ r/eps` and `eps'^2 ~ -4r/eps`, so
/// `eps(t) = (9|r| t^2)^(1/3) exp(i (arg(-r) + 2 pi k)/3)`.
pub fn pole_separatrix_seeds<T: Real>(
    h: &Hamiltonian<T>,
    pole: &PoleInfo<T>,
) -> Result<Vec<SeparatrixSeed<T>>, AnalysisError> {
    let residue = match (pole.order, pole.residue) {
        (PoleOrder::Finite(1), Some(r)) => r,
        (order, _) => return Err(AnalysisError::UnsupportedOrder(format!("{order:?}"))),
    };
    if h.power() != 2 {
        return Err(AnalysisError::UnsupportedPower(h.power()));
    }
    let offset = T::lit(DEFAULT_OFFSET);
    let base = (-residue).arg();
    Ok((0..3)
        .map(|k| SeparatrixSeed {
            pole: pole.location,
            direction_angle: wrap_angle((base + T::TAU() * T::lit(k as f64)) / T::lit(3.0)),
            offset,
            time_scale: seed_time(offset, residue.norm()),
        })
        .collect())
}

/// Integrates outward from `seed`, on the branch whose velocity points most
/// directly away from the pole.
pub fn trace_separatrix<T: Real>(
    h: &Hamiltonian<T>,
    seed: &SeparatrixSeed<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, AnalysisError> {
    if !(seed.offset >= T::lit(1e-8) && seed.offset <= T::lit(1e-2)) {
        return Err(AnalysisError::InvalidOffset(seed.offset.as_f64()));
    }
    let x0 = seed.start();
    let p0 = outward_momentum(h, x0, seed.pole)?;
    let mut cfg = *cfg;
    cfg.pole_radius = cfg.pole_radius.min(seed.offset * T::lit(0.1));
    Ok(integrate_from(h, x0, p0, &cfg, &mut NoMonitor)?)
}

fn outward_momentum<T: Real>(h: &Hamiltonian<T>, x: Cplx<T>, pole: Cplx<T>) -> Result<Cplx<T>, AnalysisError> {
    let b = h.momentum_branches(x)?;
    let radial = x - pole;
    let best = b
        .values
        .iter()
        .copied()
        .max_by(|a, c| {
            let fa = (h.velocity(*a).conj() * radial).re;
            let fc = (h.velocity(*c).conj() * radial).re;
            order(&fa, &fc)
        })
        .expect("at least two branches");
    Ok(best)
}

pub(crate) fn order<T: Real>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Angles (radians) on the circle `|x - pole| = radius` at which some branch
/// moves exactly radially outward, found by scanning `samples` angles and
/// bisecting each sign change. Works for any power `n`.
pub fn radial_directions<T: Real>(
    h: &Hamiltonian<T>,
    pole: Cplx<T>,
    radius: T,
    samples: usize,
) -> Result<Vec<T>, AnalysisError> {
    if samples < 8 {
        return Err(AnalysisError::InvalidArgument("at least 8 scan samples are needed".into()));
    }
    // For each branch k, g_k(theta) = Im(xdot e^{-i theta}); the branch label is
    // carried continuously around the circle by nearest-value matching.
    let point = |theta: T| pole + Complex::from_polar(radius, theta);
    let n = h.power();
    let step = T::TAU() / T::lit(samples as f64);
    let mut prev: Vec<Cplx<T>> = h.momentum_branches(point(T::zero()))?.values;
    let mut found = Vec::new();
    for i in 1..=samples {
        let th0 = step * T::lit((i - 1) as f64);
        let th1 = step * T::lit(i as f64);
        let cur = h.momentum_branches(point(th1))?.values;
        let matched: Vec<Cplx<T>> = prev
            .iter()
            .map(|p| *cur.iter().min_by(|a, b| order(&(*a - p).norm(), &(*b - p).norm())).unwrap())
            .collect();
        for k in 0..n {
            let g = |p: Cplx<T>, th: T| (h.velocity(p) * Complex::from_polar(T::one(), -th)).im;
            let (g0, g1) = (g(prev[k], th0), g(matched[k], th1));
            if g0 == T::zero() || g0.signum() != g1.signum() {
                let (mut lo, mut hi, mut plo) = (th0, th1, prev[k]);
                let mut glo = g0;
                for _ in 0..60 {
                    let mid = (lo + hi) * T::lit(0.5);
                    let bm = h.momentum_branches(point(mid))?.values;
                    let pm = *bm.iter().min_by(|a, b| order(&(*a - plo).norm(), &(*b - plo).norm())).unwrap();
                    let gm = g(pm, mid);
                    if gm.signum() == glo.signum() && gm != T::zero() {
                        lo = mid;
                        glo = gm;
                        plo = pm;
                    } else {
                        hi = mid;
                    }
                }
                let th = (lo + hi) * T::lit(0.5);
                let radial = (h.velocity(plo) * Complex::from_polar(T::one(), -th)).re;
                if radial > T::zero() {
                    found.push(wrap_angle(th));
                }
            }
        }
        prev = matched;
    }
    found.sort_by(order);
    found.dedup_by(|a, b| (*a - *b).abs() < step);
    Ok(found)
}
