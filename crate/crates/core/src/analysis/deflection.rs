use super::AnalysisError;
use crate::integrator::{integrate_from, IntegratorConfig, NoMonitor};
use crate::model::{Hamiltonian, TurningPoint};
use crate::scalar::{cplx, ipow, wrap_angle, Real};

/// Geometry of a probe trajectory past a turning point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionProbe<T: Real> {
    /// Target closest approach to the turning point.
    pub impact: T,
    /// Radius of the measuring circle.
    pub radius: T,
    /// Pass on one side (`+1`) or the other (`-1`) of the turning point.
    pub side: T,
}

impl<T: Real> Default for DeflectionProbe<T> {
    fn default() -> Self {
        Self {
            impact: T::lit(0.02),
            radius: T::lit(0.5),
            side: T::one(),
        }
    }
}

/// Sub-samples per accepted step when unwrapping angles.
const SUBSTEPS: usize = 32;
const MAX_APPROACH: f64 = 0.05;

/// Deflection in degrees produced by a simple turning point, normalised to one
/// full turn of the position around it.
///
/// Near a simple turning point `E - V ~ c (x - x_t)`, and the motion is exactly
/// `x - x_t = c^(n-1) tau^n`, `p = c tau` with `tau = t - t_0` complex. The
/// velocity `n p^(n-1)` therefore turns `(n-1)/n` as fast as the position
/// angle, which makes `360 (n-1)/n` degrees per revolution. The probe is
/// launched on that local solution with imaginary time offset chosen to give
/// closest approach `impact`; both angles are unwrapped along the part of the
/// path inside the measuring circle.
pub fn deflection_angle<T: Real>(
    h: &Hamiltonian<T>,
    tp: &TurningPoint<T>,
    probe: &DeflectionProbe<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<T, AnalysisError> {
    if tp.multiplicity != 1 {
        return Err(AnalysisError::InvalidArgument("deflection needs a simple turning point".into()));
    }
    if !(probe.impact > T::zero() && probe.impact < probe.radius) {
        return Err(AnalysisError::InvalidArgument("impact must lie in (0, radius)".into()));
    }
    let n = h.power();
    let (_, dv) = h.potential().eval(tp.location)?;
    let c = -dv;
    let c_abs = c.norm();
    let scale = c_abs.powi(n as i32 - 1);
    let inv_n = T::one() / T::lit(n as f64);
    let b = (probe.impact / scale).powf(inv_n) * probe.side.signum();
    let tau_abs = (T::lit(2.0) * probe.radius / scale).powf(inv_n);
    let s0 = (tau_abs * tau_abs - b * b).sqrt();
    let tau0 = cplx(-s0, b);
    let x0 = tp.location + ipow(c, n - 1) * ipow(tau0, n);
    let guess = c * tau0;
    let branches = h.momentum_branches(x0)?;
    let p0 = *branches
        .values
        .iter()
        .min_by(|u, v| super::separatrix::order(&(**u - guess).norm(), &(**v - guess).norm()))
        .expect("n >= 2 branches");

    let cfg = cfg.with_t_max(T::lit(3.0) * s0);
    let traj = integrate_from(h, x0, p0, &cfg, &mut NoMonitor)?;

    let mut pos_prev: Option<T> = None;
    let mut vel_prev: Option<T> = None;
    let (mut d_pos, mut d_vel) = (T::zero(), T::zero());
    let mut entered = false;
    let mut closest = T::infinity();
    'outer: for seg in &traj.dense {
        for j in 1..=SUBSTEPS {
            let t = seg.t0 + seg.h * T::lit(j as f64 / SUBSTEPS as f64);
            if t > traj.end_time() {
                break 'outer;
            }
            let y = seg.eval(t);
            let r = y[0] - tp.location;
            closest = closest.min(r.norm());
            if r.norm() > probe.radius {
                if entered {
                    break 'outer;
                }
                continue;
            }
            entered = true;
            let pos = r.arg();
            let vel = h.velocity(y[1]).arg();
            if let (Some(pp), Some(vp)) = (pos_prev, vel_prev) {
                d_pos = d_pos + wrap_angle(pos - pp);
                d_vel = d_vel + wrap_angle(vel - vp);
            }
            pos_prev = Some(pos);
            vel_prev = Some(vel);
        }
    }
    if !entered || closest > T::lit(MAX_APPROACH) || d_pos == T::zero() {
        return Err(AnalysisError::ProbeMiss);
    }
    Ok(T::lit(360.0) * (d_vel / d_pos).abs())
}
