use num_complex::Complex;

use super::potential::{modulus_then_arg, Potential};
use super::ModelError;
use crate::poly::Poly;
use crate::scalar::{cplx, ipow, unit_scale, Cplx, Real};

/// `H = p^n + V(x)` at fixed energy `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T: Real> {
    power: usize,
    potential: Potential<T>,
    energy: Cplx<T>,
}

/// A zero of `E - V(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint<T: Real> {
    pub location: Cplx<T>,
    pub multiplicity: usize,
}

/// Axis-aligned box in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T: Real> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
}

impl<T: Real> Region<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Self {
        Self { re_min, re_max, im_min, im_max }
    }

    pub fn contains(&self, z: Cplx<T>) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn centre(&self) -> Cplx<T> {
        let half = T::lit(0.5);
        cplx((self.re_min + self.re_max) * half, (self.im_min + self.im_max) * half)
    }
}

/// Search limits for [`Hamiltonian::turning_points`]. `max_count` bounds the
/// family index `|k|` for the essential potential; `region` filters any result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPointSearch<T: Real> {
    pub region: Option<Region<T>>,
    pub max_count: usize,
}

impl<T: Real> Default for TurningPointSearch<T> {
    fn default() -> Self {
        Self { region: None, max_count: 3 }
    }
}

/// The `n` momentum roots at a point. At a turning point every branch is zero
/// and `degenerate` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Branches<T: Real> {
    pub values: Vec<Cplx<T>>,
    pub degenerate: bool,
}

impl<T: Real> Hamiltonian<T> {
    pub fn new(power: usize, potential: Potential<T>, energy: Cplx<T>) -> Result<Self, ModelError> {
        if power < 2 {
            return Err(ModelError::InvalidPower(power));
        }
        if !(energy.re.is_finite() && energy.im.is_finite()) {
            return Err(ModelError::DomainError("energy must be finite".into()));
        }
        Ok(Self { power, potential, energy })
    }

    pub fn power(&self) -> usize {
        self.power
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }

    pub fn energy(&self) -> Cplx<T> {
        self.energy
    }

    /// `p^n + V(x)`.
    pub fn value(&self, x: Cplx<T>, p: Cplx<T>) -> Result<Cplx<T>, ModelError> {
        Ok(ipow(p, self.power) + self.potential.value(x)?)
    }

    /// `|p^n + V(x) - E|`.
    pub fn energy_error(&self, x: Cplx<T>, p: Cplx<T>) -> Result<T, ModelError> {
        Ok((self.value(x, p)? - self.energy).norm())
    }

    /// `dx/dt = n p^(n-1)`.
    pub fn velocity(&self, p: Cplx<T>) -> Cplx<T> {
        ipow(p, self.power - 1) * T::lit(self.power as f64)
    }

    /// Branch `k` is `|w|^(1/n) exp(i (Arg w + 2 pi k)/n)` with `w = E - V(x)`.
    pub fn momentum_branches(&self, x: Cplx<T>) -> Result<Branches<T>, ModelError> {
        let w = self.energy - self.potential.value(x)?;
        Ok(roots_of(w, self.power))
    }

    /// Index of the branch closest to `target`.
    pub fn nearest_branch(&self, x: Cplx<T>, target: Cplx<T>) -> Result<usize, ModelError> {
        let b = self.momentum_branches(x)?;
        Ok(argmin(b.values.iter().map(|&p| (p - target).norm())))
    }

    /// Index of the branch whose velocity points most nearly along `dir`.
    pub fn branch_along(&self, x: Cplx<T>, dir: Cplx<T>) -> Result<usize, ModelError> {
        let b = self.momentum_branches(x)?;
        if b.degenerate {
            return Err(ModelError::DegenerateBranch { x: super::potential::to_pair(x) });
        }
        Ok(argmin(b.values.iter().map(|&p| {
            let v = self.velocity(p);
            -(v.conj() * dir).re / v.norm().max(T::min_positive_value())
        })))
    }

    /// Zeros of `E - V(x)` with multiplicity, sorted by modulus then argument.
    pub fn turning_points(&self, search: &TurningPointSearch<T>) -> Result<Vec<TurningPoint<T>>, ModelError> {
        let mut tps = match &self.potential {
            Potential::Rational(r) => {
                let poly = &r.denominator().scale(self.energy) - r.numerator();
                let scale = r.denominator().max_coeff().max(r.numerator().max_coeff());
                let poly = poly.trim(T::epsilon() * T::lit(16.0) * scale * unit_scale(self.energy));
                if poly.is_zero() {
                    return Err(ModelError::DegenerateEnergy);
                }
                poly.roots()?
                    .into_iter()
                    .map(|r| TurningPoint { location: r.value, multiplicity: r.multiplicity })
                    .collect::<Vec<_>>()
            }
            Potential::EssentialExp => self.essential_family(search.max_count)?,
        };
        if let Some(region) = &search.region {
            tps.retain(|tp| region.contains(tp.location));
        }
        tps.sort_by(|a, b| modulus_then_arg(a.location, b.location));
        Ok(tps)
    }

    /// `x_k = 1/(log E - 2 pi i k)`, `|k| <= max_count`; for `E = e` this is
    /// `r_k e^{i theta_k}` with `theta_k = arctan(2 pi k)` and `r_k = cos theta_k`.
    fn essential_family(&self, max_count: usize) -> Result<Vec<TurningPoint<T>>, ModelError> {
        if self.energy.norm() == T::zero() {
            return Err(ModelError::DegenerateEnergy);
        }
        let log_e = self.energy.ln();
        let m = max_count as i64;
        Ok((-m..=m)
            .filter_map(|k| {
                let denom = log_e - cplx(T::zero(), T::TAU() * T::lit(k as f64));
                (denom.norm() > T::zero()).then(|| TurningPoint { location: denom.inv(), multiplicity: 1 })
            })
            .collect())
    }

    /// Rational potentials: `deg(E Q - P)`, the number of turning points with multiplicity.
    pub fn turning_point_count(&self) -> Option<usize> {
        let r = self.potential.as_rational()?;
        let poly: Poly<T> = &r.denominator().scale(self.energy) - r.numerator();
        poly.degree()
    }
}

/// The `n` roots `w^(1/n)` in branch order.
pub fn roots_of<T: Real>(w: Cplx<T>, n: usize) -> Branches<T> {
    if w.re == T::zero() && w.im == T::zero() {
        return Branches {
            values: vec![Complex::new(T::zero(), T::zero()); n],
            degenerate: true,
        };
    }
    let nf = T::lit(n as f64);
    let modulus = w.norm().powf(T::one() / nf);
    let arg = w.arg();
    let values = (0..n)
        .map(|k| Complex::from_polar(modulus, (arg + T::TAU() * T::lit(k as f64)) / nf))
        .collect();
    Branches { values, degenerate: false }
}

fn argmin<T: Real>(it: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_v = T::infinity();
    for (i, v) in it.enumerate() {
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    best
}
