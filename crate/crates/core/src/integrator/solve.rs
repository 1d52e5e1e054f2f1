use super::dopri::{initial_step, rhs, trial_step, DenseSegment, Pair};
use super::{
    IntegrationError, IntegratorConfig, Termination, Trajectory, TrajectoryOrigin, TrajectorySample, ZENO_RADIUS,
};
use crate::model::{Hamiltonian, ModelError, TurningPointSearch};
use crate::scalar::{ipow, wrap_angle, Cplx, Real};

/// Hook run after every accepted step. Returning `Some(t)` stops the
/// integration at `t`, which must lie within the step.
pub trait StepMonitor<T: Real> {
    fn on_step(&mut self, ham: &Hamiltonian<T>, seg: &DenseSegment<T>) -> Option<T>;
}

/// Monitor that never stops.
pub struct NoMonitor;

impl<T: Real> StepMonitor<T> for NoMonitor {
    fn on_step(&mut self, _: &Hamiltonian<T>, _: &DenseSegment<T>) -> Option<T> {
        None
    }
}

impl<T: Real, F: FnMut(&Hamiltonian<T>, &DenseSegment<T>) -> Option<T>> StepMonitor<T> for F {
    fn on_step(&mut self, ham: &Hamiltonian<T>, seg: &DenseSegment<T>) -> Option<T> {
        self(ham, seg)
    }
}

/// Integrates from `x0` on momentum branch `branch`.
pub fn integrate<T: Real>(
    ham: &Hamiltonian<T>,
    x0: Cplx<T>,
    branch: usize,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, IntegrationError> {
    integrate_monitored(ham, x0, branch, cfg, &mut NoMonitor)
}

pub fn integrate_monitored<T: Real, M: StepMonitor<T>>(
    ham: &Hamiltonian<T>,
    x0: Cplx<T>,
    branch: usize,
    cfg: &IntegratorConfig<T>,
    monitor: &mut M,
) -> Result<Trajectory<T>, IntegrationError> {
    let branches = ham.momentum_branches(x0)?;
    let p0 = *branches.values.get(branch).ok_or(IntegrationError::BranchOutOfRange {
        branch,
        power: ham.power(),
    })?;
    run(ham, x0, p0, Some(branch), cfg, monitor)
}

/// Integrates from an explicit `(x0, p0)`; `p0` need not come from a branch
/// evaluation (time reversal, mirrored starts).
pub fn integrate_from<T: Real, M: StepMonitor<T>>(
    ham: &Hamiltonian<T>,
    x0: Cplx<T>,
    p0: Cplx<T>,
    cfg: &IntegratorConfig<T>,
    monitor: &mut M,
) -> Result<Trajectory<T>, IntegrationError> {
    run(ham, x0, p0, None, cfg, monitor)
}

struct Landmarks<T: Real> {
    poles: Vec<Cplx<T>>,
    /// Only multiple turning points: a simple one is reached in finite time and
    /// passed through, so it cannot capture.
    zeno_points: Vec<Cplx<T>>,
}

impl<T: Real> Landmarks<T> {
    fn new(ham: &Hamiltonian<T>) -> Result<Self, ModelError> {
        let poles = ham.potential().poles()?.into_iter().map(|p| p.location).collect();
        let search = TurningPointSearch { region: None, max_count: 8 };
        let turning_points = match ham.turning_points(&search) {
            Ok(tps) => tps.into_iter().filter(|tp| tp.multiplicity > 1).map(|tp| tp.location).collect(),
            Err(ModelError::DegenerateEnergy) => Vec::new(),
            Err(e) => return Err(e),
        };
        Ok(Self { poles, zeno_points: turning_points })
    }

    fn nearest_pole(&self, x: Cplx<T>) -> Option<(Cplx<T>, T)> {
        nearest(&self.poles, x)
    }

    fn nearest_zeno_point(&self, x: Cplx<T>) -> Option<(Cplx<T>, T)> {
        nearest(&self.zeno_points, x)
    }
}

fn nearest<T: Real>(pts: &[Cplx<T>], x: Cplx<T>) -> Option<(Cplx<T>, T)> {
    pts.iter().map(|&p| (p, (x - p).norm())).fold(None, |best, cur| match best {
        Some(b) if b.1 <= cur.1 => Some(b),
        _ => Some(cur),
    })
}

struct Recorder<'a, T: Real> {
    ham: &'a Hamiltonian<T>,
    samples: Vec<TrajectorySample<T>>,
}

impl<T: Real> Recorder<'_, T> {
    fn push(&mut self, t: T, x: Cplx<T>, p: Cplx<T>) {
        let phase = match self.samples.last() {
            None => p.arg(),
            Some(prev) if p.norm() == T::zero() || prev.p.norm() == T::zero() => prev.phase,
            Some(prev) => prev.phase + wrap_angle(p.arg() - prev.p.arg()),
        };
        let energy_error = self.ham.energy_error(x, p).unwrap_or(T::infinity());
        let speed = self.ham.velocity(p).norm();
        self.samples.push(TrajectorySample {
            t,
            x,
            p,
            phase,
            energy_error,
            speed_inverse: T::one() / speed,
        });
    }
}

/// Per-step energy drift allowed, relative to `rtol max(1, |E|)`.
const ENERGY_STEP_FACTOR: f64 = 1e-2;

/// Change of `H` over a step divided by its allowance. The allowance never
/// drops below the rounding noise of evaluating `H`, which near a pole is far
/// above `eps |V|`. `None` if `H` cannot be evaluated.
fn energy_drift_ratio<T: Real>(ham: &Hamiltonian<T>, y: &Pair<T>, y_new: &Pair<T>, rtol: T) -> Option<T> {
    let v_new = ham.potential().value(y_new[0]).ok()?;
    let v_old = ham.potential().value(y[0]).ok()?;
    let kin_new = ipow(y_new[1], ham.power());
    let kin_old = ipow(y[1], ham.power());
    let drift = ((kin_new + v_new) - (kin_old + v_old)).norm();
    let e = ham.energy().norm().max(T::one());
    let n = T::lit(ham.power() as f64);
    let pot = ham.potential();
    let noise = pot.rounding_scale(y_new[0]) + pot.rounding_scale(y[0]) + n * (kin_new.norm() + kin_old.norm()) + e;
    let allowance = (T::lit(ENERGY_STEP_FACTOR) * rtol * e).max(T::lit(2.0) * T::epsilon() * noise);
    let r = drift / allowance;
    r.is_finite().then_some(r)
}

/// Time tolerance for event localisation.
const EVENT_TIME_TOL: f64 = 1e-10;
/// Steps below this (relative to `max(1, |t|)`) count as a collapse.
const MIN_STEP: f64 = 1e-14;
/// Step collapse within this distance of a pole is a pole encounter.
const POLE_COLLAPSE_RADIUS: f64 = 0.1;

/// Bisects for the first time in `(lo, hi]` at which `inside` holds, given
/// it fails at `lo` and holds at `hi`. Returns the `inside` end.
fn bisect<T: Real>(mut lo: T, mut hi: T, mut inside: impl FnMut(T) -> bool) -> T {
    let tol = T::lit(EVENT_TIME_TOL);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

struct Closure<T: Real> {
    x0: Cplx<T>,
    p0: Cplx<T>,
    armed: bool,
    g_prev: T,
}

impl<T: Real> Closure<T> {
    fn dist(&self, y: &Pair<T>) -> T {
        let dx = y[0] - self.x0;
        let dp = y[1] - self.p0;
        (dx.norm_sqr() + dp.norm_sqr()).sqrt()
    }

    /// Half the time derivative of the squared distance to the start.
    fn slope(&self, y: &Pair<T>, f: &Pair<T>) -> T {
        ((y[0] - self.x0).conj() * f[0] + (y[1] - self.p0).conj() * f[1]).re
    }
}

fn run<T: Real, M: StepMonitor<T>>(
    ham: &Hamiltonian<T>,
    x0: Cplx<T>,
    p0: Cplx<T>,
    branch: Option<usize>,
    cfg: &IntegratorConfig<T>,
    monitor: &mut M,
) -> Result<Trajectory<T>, IntegrationError> {
    cfg.validate()?;
    let marks = Landmarks::new(ham)?;
    if let Some((_, d)) = marks.nearest_pole(x0) {
        if d <= cfg.pole_radius {
            return Err(IntegrationError::PoleProximity { x: (x0.re.as_f64(), x0.im.as_f64()) });
        }
    }
    let origin = TrajectoryOrigin { hamiltonian: ham.clone(), x0, p0, branch };
    let mut rec = Recorder { ham, samples: Vec::new() };
    rec.push(T::zero(), x0, p0);
    let mut dense: Vec<DenseSegment<T>> = Vec::new();

    let mut t = T::zero();
    let mut y: Pair<T> = [x0, p0];
    let mut k1 = rhs(ham, &y)?;
    let mut h = initial_step(ham, &y, &k1, cfg.rtol, cfg.atol, cfg.t_max);
    let mut closure = Closure {
        x0,
        p0,
        armed: false,
        g_prev: T::zero(),
    };
    let arm_distance = (cfg.closure_tol * T::lit(100.0)).max(T::lit(1e-3));
    let half_pi = T::FRAC_PI_2();
    let mut steps = 0usize;
    let mut last_rejected = false;

    let termination = loop {
        if steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        let remaining = cfg.t_max - t;
        if remaining <= T::zero() {
            break Termination::MaxTime;
        }
        let last_step = h >= remaining;
        if last_step {
            h = remaining;
        }
        let h_floor = T::lit(MIN_STEP) * t.abs().max(T::one());
        if h < h_floor {
            match marks.nearest_pole(y[0]) {
                Some((pole, d)) if d <= T::lit(POLE_COLLAPSE_RADIUS) => break Termination::PoleEncounter { pole },
                _ => {
                    return Err(IntegrationError::StepSizeCollapse { t: t.as_f64(), h: h.as_f64() });
                }
            }
        }
        steps += 1;

        let trial = match trial_step(ham, t, &y, &k1, h, cfg.rtol, cfg.atol) {
            Ok(tr) if tr.err.is_finite() => tr,
            _ => {
                h = h * T::lit(0.25);
                last_rejected = true;
                continue;
            }
        };
        let err = match energy_drift_ratio(ham, &y, &trial.y_new, cfg.rtol) {
            Some(r) => trial.err.max(r),
            None => T::infinity(),
        };
        if err > T::one() {
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).clamp(T::lit(0.2), T::one());
            h = h * fac;
            last_rejected = true;
            continue;
        }
        let jump = if trial.y_new[1].norm() > T::zero() && y[1].norm() > T::zero() {
            wrap_angle(trial.y_new[1].arg() - y[1].arg()).abs()
        } else {
            T::zero()
        };
        if jump > half_pi && h * T::lit(0.5) >= h_floor {
            h = h * T::lit(0.5);
            last_rejected = true;
            continue;
        }

        // accepted
        let seg = trial.dense;
        let t_new = if last_step { cfg.t_max } else { t + h };
        let y_new = trial.y_new;
        let k_new = trial.k_new;
        let mut event: Option<(T, Termination<T>)> = None;
        let consider = |te: T, term: Termination<T>, event: &mut Option<(T, Termination<T>)>| {
            if event.as_ref().is_none_or(|(tb, _)| te < *tb) {
                *event = Some((te, term));
            }
        };

        // escape
        if y_new[0].norm() >= cfg.escape_radius {
            let te = bisect(t, t_new, |s| seg.eval(s)[0].norm() >= cfg.escape_radius);
            let xe = seg.eval(te)[0];
            consider(te, Termination::Escape { direction: xe / xe.norm() }, &mut event);
        }

        // pole proximity, probed at interior points of the step as well
        if !marks.poles.is_empty() {
            let probes = [0.25, 0.5, 0.75, 1.0];
            let mut prev_s = t;
            for &q in &probes {
                let s = if q == 1.0 { t_new } else { t + h * T::lit(q) };
                let xs = if q == 1.0 { y_new[0] } else { seg.eval(s)[0] };
                if let Some((_, d)) = marks.nearest_pole(xs) {
                    if d <= cfg.pole_radius {
                        let te = bisect(prev_s, s, |u| {
                            marks.nearest_pole(seg.eval(u)[0]).is_some_and(|(_, d)| d <= cfg.pole_radius)
                        });
                        let pole = marks.nearest_pole(seg.eval(te)[0]).map(|(p, _)| p).unwrap_or(xs);
                        consider(te, Termination::PoleEncounter { pole }, &mut event);
                        break;
                    }
                }
                prev_s = s;
            }
        }

        // Zeno capture. With energy error d the double point splits by about
        // d^(1/n) and the speed cannot fall below about d^((n-1)/n); the
        // threshold is raised to stay above that floor.
        let speed_new = ham.velocity(y_new[1]).norm();
        let drift = ham.energy_error(y_new[0], y_new[1]).unwrap_or(T::zero());
        let floor = T::lit(10.0) * drift.powf(T::lit((ham.power() - 1) as f64 / ham.power() as f64));
        let zeno_speed = cfg.zeno_speed.max(floor);
        if speed_new <= zeno_speed {
            if let Some((tp, d)) = marks.nearest_zeno_point(y_new[0]) {
                if d <= T::lit(ZENO_RADIUS) {
                    let te = bisect(t, t_new, |s| ham.velocity(seg.eval(s)[1]).norm() <= zeno_speed);
                    consider(te, Termination::ZenoCapture { turning_point: tp }, &mut event);
                }
            }
        }

        // closure of a periodic orbit: a local minimum of the distance to the start
        let g_new = closure.slope(&y_new, &k_new);
        if closure.armed && closure.g_prev < T::zero() && g_new >= T::zero() {
            let tm = bisect(t, t_new, |s| {
                let ys = seg.eval(s);
                rhs(ham, &ys).map(|f| closure.slope(&ys, &f) >= T::zero()).unwrap_or(true)
            });
            if closure.dist(&seg.eval(tm)) <= cfg.closure_tol {
                consider(tm, Termination::Periodic { period: tm }, &mut event);
            }
        }
        if !closure.armed && closure.dist(&y_new) > arm_distance {
            closure.armed = true;
        }
        closure.g_prev = g_new;

        if let Some(ts) = monitor.on_step(ham, &seg) {
            let ts = ts.max(t).min(t_new);
            consider(ts, Termination::Stopped, &mut event);
        }

        if let Some((te, term)) = event {
            let ye = if te >= t_new { y_new } else { seg.eval(te) };
            dense.push(seg);
            if te > t {
                rec.push(te, ye[0], ye[1]);
            }
            break term;
        }

        dense.push(seg);
        rec.push(t_new, y_new[0], y_new[1]);
        t = t_new;
        y = y_new;
        k1 = k_new;

        if last_step {
            break Termination::MaxTime;
        }
        let fac = if err == T::zero() {
            T::lit(10.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).clamp(T::lit(0.2), T::lit(10.0))
        };
        let fac = if last_rejected { fac.min(T::one()) } else { fac };
        last_rejected = false;
        h = h * fac;
    };

    Ok(Trajectory {
        samples: rec.samples,
        termination,
        origin,
        dense,
    })
}
