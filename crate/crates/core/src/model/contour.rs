use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use super::hamiltonian::Hamiltonian;
use super::ModelError;
use crate::quadrature::{integrate_endpoint_singular, QuadConfig};
use crate::scalar::{unit_scale, wrap_angle, Cplx, Real};

type ParamFn<T> = Arc<dyn Fn(T) -> Cplx<T> + Send + Sync>;

/// One piece of a contour, parameterised by `s` in `[0, 1]`.
#[derive(Clone)]
pub enum PathPiece<T: Real> {
    Segment { from: Cplx<T>, to: Cplx<T> },
    /// `from + direction * s/(1-s)`, reaching infinity at `s = 1`.
    Ray { from: Cplx<T>, direction: Cplx<T> },
    Arc { centre: Cplx<T>, radius: T, start_angle: T, sweep: T },
    /// Arbitrary curve given by its point and tangent maps.
    Custom { point: ParamFn<T>, tangent: ParamFn<T> },
}

impl<T: Real> fmt::Debug for PathPiece<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathPiece::Segment { from, to } => write!(f, "Segment({from} -> {to})"),
            PathPiece::Ray { from, direction } => write!(f, "Ray({from} along {direction})"),
            PathPiece::Arc { centre, radius, start_angle, sweep } => {
                write!(f, "Arc(c={centre}, r={radius}, from {start_angle} by {sweep})")
            }
            PathPiece::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl<T: Real> PathPiece<T> {
    pub fn point(&self, s: T) -> Cplx<T> {
        match self {
            PathPiece::Segment { from, to } => *from + (*to - *from) * s,
            PathPiece::Ray { from, direction } => *from + *direction * (s / (T::one() - s)),
            PathPiece::Arc { centre, radius, start_angle, sweep } => {
                *centre + Complex::from_polar(*radius, *start_angle + *sweep * s)
            }
            PathPiece::Custom { point, .. } => point(s),
        }
    }

    pub fn tangent(&self, s: T) -> Cplx<T> {
        match self {
            PathPiece::Segment { from, to } => *to - *from,
            PathPiece::Ray { direction, .. } => {
                let d = T::one() - s;
                *direction / (d * d)
            }
            PathPiece::Arc { radius, start_angle, sweep, .. } => {
                Complex::from_polar(*radius * *sweep, *start_angle + *sweep * s) * Complex::i()
            }
            PathPiece::Custom { tangent, .. } => tangent(s),
        }
    }

    fn start(&self) -> Cplx<T> {
        self.point(T::zero())
    }
}

/// A piecewise path in the complex plane.
#[derive(Debug, Clone)]
pub struct Contour<T: Real> {
    pub pieces: Vec<PathPiece<T>>,
}

impl<T: Real> Contour<T> {
    pub fn segment(from: Cplx<T>, to: Cplx<T>) -> Self {
        Self { pieces: vec![PathPiece::Segment { from, to }] }
    }

    pub fn polyline(points: &[Cplx<T>]) -> Self {
        Self {
            pieces: points.windows(2).map(|w| PathPiece::Segment { from: w[0], to: w[1] }).collect(),
        }
    }

    pub fn ray(from: Cplx<T>, direction: Cplx<T>) -> Self {
        Self { pieces: vec![PathPiece::Ray { from, direction }] }
    }

    /// Full counter-clockwise circle starting on the positive real side of `centre`.
    pub fn circle(centre: Cplx<T>, radius: T) -> Self {
        Self {
            pieces: vec![PathPiece::Arc { centre, radius, start_angle: T::zero(), sweep: T::TAU() }],
        }
    }

    pub fn custom(
        point: impl Fn(T) -> Cplx<T> + Send + Sync + 'static,
        tangent: impl Fn(T) -> Cplx<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            pieces: vec![PathPiece::Custom { point: Arc::new(point), tangent: Arc::new(tangent) }],
        }
    }

    pub fn then(mut self, piece: PathPiece<T>) -> Self {
        self.pieces.push(piece);
        self
    }
}

/// How the momentum branch is fixed at the start of the contour. After that the
/// branch follows by continuity, except at vertices sitting on a turning point,
/// where the branch moving along the path is selected afresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRule {
    Index(usize),
    AlongPath,
}

/// Phase jumps above this (after refinement) are a branch discontinuity.
const MAX_JUMP: f64 = std::f64::consts::FRAC_PI_2;
const BASE_SAMPLES: usize = 64;
const ENDPOINT_LEVELS: i32 = 30;
const MAX_DEPTH: usize = 40;

/// Momentum branch tracked continuously along one path piece.
struct BranchTrack<T: Real> {
    s: Vec<T>,
    p: Vec<Cplx<T>>,
}

impl<T: Real> BranchTrack<T> {
    fn build(h: &Hamiltonian<T>, piece: &PathPiece<T>, start: StartChoice<T>) -> Result<Self, ModelError> {
        let n = BASE_SAMPLES;
        let first = T::lit(0.5 / n as f64);
        let mut grid: Vec<T> = (1..=ENDPOINT_LEVELS).rev().map(|k| first * T::lit(0.5f64.powi(k))).collect();
        grid.extend((0..n).map(|j| T::lit((j as f64 + 0.5) / n as f64)));
        grid.extend((1..=ENDPOINT_LEVELS).map(|k| T::one() - first * T::lit(0.5f64.powi(k))));

        let s0 = grid[0];
        let x0 = piece.point(s0);
        let b0 = h.momentum_branches(x0)?;
        if b0.degenerate {
            return Err(ModelError::DegenerateBranch { x: (x0.re.as_f64(), x0.im.as_f64()) });
        }
        let p0 = match start {
            StartChoice::Index(k) => *b0.values.get(k).ok_or(ModelError::DomainError(format!(
                "branch index {k} out of range for power {}",
                h.power()
            )))?,
            StartChoice::Along => {
                let dir = piece.tangent(s0);
                let k = h.branch_along(x0, dir)?;
                b0.values[k]
            }
            StartChoice::Continue(prev) => nearest(&b0.values, prev),
        };
        let thr = T::lit((MAX_JUMP / 2.0).min(std::f64::consts::PI / (2.0 * h.power() as f64)));
        let mut track = Self { s: vec![s0], p: vec![p0] };
        for &sb in &grid[1..] {
            let sa = *track.s.last().unwrap();
            let pa = *track.p.last().unwrap();
            track.advance(h, piece, sa, pa, sb, thr, 0)?;
        }
        Ok(track)
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        h: &Hamiltonian<T>,
        piece: &PathPiece<T>,
        sa: T,
        pa: Cplx<T>,
        sb: T,
        thr: T,
        depth: usize,
    ) -> Result<Cplx<T>, ModelError> {
        let xb = piece.point(sb);
        let bb = h.momentum_branches(xb)?;
        if bb.degenerate {
            return Err(ModelError::DegenerateBranch { x: (xb.re.as_f64(), xb.im.as_f64()) });
        }
        let pb = nearest(&bb.values, pa);
        let jump = wrap_angle(pb.arg() - pa.arg()).abs();
        if jump > thr && depth < MAX_DEPTH {
            let mid = (sa + sb) * T::lit(0.5);
            let pm = self.advance(h, piece, sa, pa, mid, thr, depth + 1)?;
            return self.advance(h, piece, mid, pm, sb, thr, depth + 1);
        }
        if jump > T::lit(MAX_JUMP) {
            return Err(ModelError::BranchDiscontinuity { s: sb.as_f64(), jump: jump.as_f64() });
        }
        self.s.push(sb);
        self.p.push(pb);
        Ok(pb)
    }

    fn pick(&self, h: &Hamiltonian<T>, x: Cplx<T>, s: T) -> Result<Cplx<T>, ModelError> {
        let i = self.s.partition_point(|&v| v < s);
        let idx = if i == 0 {
            0
        } else if i >= self.s.len() {
            self.s.len() - 1
        } else if (s - self.s[i - 1]) <= (self.s[i] - s) {
            i - 1
        } else {
            i
        };
        let b = h.momentum_branches(x)?;
        Ok(nearest(&b.values, self.p[idx]))
    }

    fn last(&self) -> Cplx<T> {
        *self.p.last().unwrap()
    }
}

#[derive(Clone, Copy)]
enum StartChoice<T: Real> {
    Index(usize),
    Along,
    Continue(Cplx<T>),
}

fn nearest<T: Real>(values: &[Cplx<T>], target: Cplx<T>) -> Cplx<T> {
    let mut best = values[0];
    let mut best_d = T::infinity();
    for &v in values {
        let d = (v - target).norm();
        if d < best_d {
            best_d = d;
            best = v;
        }
    }
    best
}

fn is_turning_point<T: Real>(h: &Hamiltonian<T>, x: Cplx<T>) -> bool {
    match h.potential().value(x) {
        Ok(v) => (h.energy() - v).norm() <= T::lit(1e-8) * unit_scale(h.energy()),
        Err(_) => false,
    }
}

/// `sum over pieces of int F(x, p) dx` with the momentum tracked along the path.
fn contour_integral<T, F>(
    h: &Hamiltonian<T>,
    contour: &Contour<T>,
    rule: BranchRule,
    integrand: F,
) -> Result<Cplx<T>, ModelError>
where
    T: Real,
    F: Fn(Cplx<T>, Cplx<T>) -> Cplx<T>,
{
    let cfg = QuadConfig::default();
    let mut total = Complex::new(T::zero(), T::zero());
    let mut prev: Option<Cplx<T>> = None;
    for (i, piece) in contour.pieces.iter().enumerate() {
        let start = match (i, prev) {
            (0, _) => match rule {
                BranchRule::Index(k) => StartChoice::Index(k),
                BranchRule::AlongPath => StartChoice::Along,
            },
            (_, Some(p)) if !is_turning_point(h, piece.start()) => StartChoice::Continue(p),
            _ => StartChoice::Along,
        };
        let track = BranchTrack::build(h, piece, start)?;
        let r = integrate_endpoint_singular::<T, ModelError, _>(
            |s| {
                let x = piece.point(s);
                let p = track.pick(h, x, s)?;
                Ok(integrand(x, p) * piece.tangent(s))
            },
            T::zero(),
            T::one(),
            &cfg,
        )?;
        total = total + r.value;
        prev = Some(track.last());
    }
    Ok(total)
}

/// Travel time `int dx / xdot` along the contour, `xdot = n p^(n-1)`.
pub fn contour_travel_time<T: Real>(
    h: &Hamiltonian<T>,
    contour: &Contour<T>,
    rule: BranchRule,
) -> Result<Cplx<T>, ModelError> {
    contour_integral(h, contour, rule, |_, p| h.velocity(p).inv())
}

/// Action `int p dx` along the contour; for `n = 2` this is `int sqrt(E - V) dx`,
/// the quantity entering the Bohr-Sommerfeld condition.
pub fn wkb_action<T: Real>(h: &Hamiltonian<T>, contour: &Contour<T>, rule: BranchRule) -> Result<Cplx<T>, ModelError> {
    contour_integral(h, contour, rule, |_, p| p)
}
