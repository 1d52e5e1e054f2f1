use std::cmp::Ordering;

use num_complex::Complex;

use super::ModelError;
use crate::poly::Poly;
use crate::scalar::{cplx, is_finite, Cplx, Real};

/// Below this denominator modulus the potential is treated as sitting on a pole.
pub const POLE_GUARD: f64 = 1e-300;
/// Relative tolerance of the Euclidean GCD used to bring rational potentials to lowest terms.
pub const REDUCE_TOL: f64 = 1e-12;

/// A potential `V(x)`: either a rational function `P(x)/Q(x)` in lowest terms
/// with monic `Q`, or the fixed essential form `exp(1/x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T: Real> {
    Rational(RationalPotential<T>),
    EssentialExp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalPotential<T: Real> {
    numerator: Poly<T>,
    denominator: Poly<T>,
}

impl<T: Real> RationalPotential<T> {
    pub fn numerator(&self) -> &Poly<T> {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly<T> {
        &self.denominator
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleOrder {
    Finite(usize),
    Essential,
}

/// A singularity of `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleInfo<T: Real> {
    pub location: Cplx<T>,
    pub order: PoleOrder,
    /// `P(x0)/Q'(x0)`; present for simple poles only.
    pub residue: Option<Cplx<T>>,
}

impl<T: Real> PoleInfo<T> {
    pub fn is_simple(&self) -> bool {
        self.order == PoleOrder::Finite(1)
    }
}

impl<T: Real> Potential<T> {
    /// Builds `P/Q` from ascending coefficients, cancelling common factors and
    /// normalising `Q` to be monic.
    pub fn rational(numerator: Vec<Cplx<T>>, denominator: Vec<Cplx<T>>) -> Result<Self, ModelError> {
        Self::from_polys(Poly::new(numerator), Poly::new(denominator))
    }

    pub fn from_polys(numerator: Poly<T>, denominator: Poly<T>) -> Result<Self, ModelError> {
        if denominator.is_zero() {
            return Err(ModelError::ZeroDenominator);
        }
        if numerator.coeffs().iter().chain(denominator.coeffs()).any(|&c| !is_finite(c)) {
            return Err(ModelError::MalformedPotential("non-finite coefficient".into()));
        }
        if numerator.is_zero() {
            return Ok(Potential::Rational(RationalPotential {
                numerator,
                denominator: Poly::one(),
            }));
        }
        let mut num = numerator;
        let mut den = denominator;
        if den.degree() > Some(0) && num.degree() > Some(0) {
            let g = Poly::gcd(&num, &den, T::lit(REDUCE_TOL));
            if g.degree().unwrap_or(0) > 0 {
                num = num.div_rem(&g).map_err(|_| ModelError::ZeroDenominator)?.0;
                den = den.div_rem(&g).map_err(|_| ModelError::ZeroDenominator)?.0;
            }
        }
        let lead = den.leading().ok_or(ModelError::ZeroDenominator)?;
        let inv = lead.inv();
        Ok(Potential::Rational(RationalPotential {
            numerator: num.scale(inv),
            denominator: den.scale(inv),
        }))
    }

    fn real(num: &[f64], den: &[f64]) -> Self {
        Self::from_polys(Poly::from_real(num), Poly::from_real(den)).expect("catalog potential is well formed")
    }

    /// `V = 0`.
    pub fn free() -> Self {
        Self::real(&[], &[1.0])
    }

    /// `V1 = x/(x^2+1)`.
    pub fn v1() -> Self {
        Self::real(&[0.0, 1.0], &[1.0, 0.0, 1.0])
    }

    /// `V2 = ix/(x^2+1)`, PT-symmetric.
    pub fn v2() -> Self {
        Self::rational(
            vec![cplx(T::zero(), T::zero()), cplx(T::zero(), T::one())],
            Poly::from_real(&[1.0, 0.0, 1.0]).coeffs().to_vec(),
        )
        .expect("catalog potential is well formed")
    }

    /// `sign * x^(-m)`, a pole of order `m` at the origin.
    pub fn inverse_power(sign: f64, m: usize) -> Self {
        let mut den = vec![0.0; m + 1];
        den[m] = 1.0;
        Self::real(&[sign], &den)
    }

    /// `-x^4`, the upside-down quartic.
    pub fn neg_quartic() -> Self {
        Self::real(&[0.0, 0.0, 0.0, 0.0, -1.0], &[1.0])
    }

    /// `x^2`.
    pub fn harmonic() -> Self {
        Self::real(&[0.0, 0.0, 1.0], &[1.0])
    }

    /// `V = x`.
    pub fn linear() -> Self {
        Self::real(&[0.0, 1.0], &[1.0])
    }

    pub fn essential_exp() -> Self {
        Potential::EssentialExp
    }

    pub fn as_rational(&self) -> Option<&RationalPotential<T>> {
        match self {
            Potential::Rational(r) => Some(r),
            Potential::EssentialExp => None,
        }
    }

    /// `(V(x), V'(x))`.
    pub fn eval(&self, x: Cplx<T>) -> Result<(Cplx<T>, Cplx<T>), ModelError> {
        let (v, dv) = match self {
            Potential::Rational(r) => {
                let (q, dq) = r.denominator.eval_with_derivative(x);
                if q.norm() < T::lit(POLE_GUARD) {
                    return Err(ModelError::PoleEvaluation { x: to_pair(x) });
                }
                let (p, dp) = r.numerator.eval_with_derivative(x);
                let v = p / q;
                // quotient rule written to avoid forming q^2
                let dv = (dp - v * dq) / q;
                (v, dv)
            }
            Potential::EssentialExp => {
                if x.norm() < T::lit(POLE_GUARD) {
                    return Err(ModelError::PoleEvaluation { x: to_pair(x) });
                }
                let inv = x.inv();
                let v = inv.exp();
                (v, -v * inv * inv)
            }
        };
        if !is_finite(v) || !is_finite(dv) {
            return Err(ModelError::NonFinite { x: to_pair(x) });
        }
        Ok((v, dv))
    }

    pub fn value(&self, x: Cplx<T>) -> Result<Cplx<T>, ModelError> {
        self.eval(x).map(|(v, _)| v)
    }

    /// First-order bound on the rounding error of [`Potential::value`] at `x`,
    /// in units of machine epsilon. Near a pole the denominator cancels and
    /// this grows like `|V| / |x - pole|`.
    pub fn rounding_scale(&self, x: Cplx<T>) -> T {
        match self {
            Potential::Rational(r) => {
                let q = r.denominator.eval(x).norm();
                let v = r.numerator.eval(x).norm() / q;
                (r.numerator.abs_eval(x) + v * r.denominator.abs_eval(x)) / q
            }
            Potential::EssentialExp => {
                let inv = x.inv();
                inv.exp().norm() * (T::one() + inv.norm())
            }
        }
    }

    /// Poles with order and, for simple poles, residue. The essential form
    /// reports a single essential record at the origin.
    pub fn poles(&self) -> Result<Vec<PoleInfo<T>>, ModelError> {
        match self {
            Potential::EssentialExp => Ok(vec![PoleInfo {
                location: Complex::new(T::zero(), T::zero()),
                order: PoleOrder::Essential,
                residue: None,
            }]),
            Potential::Rational(r) => {
                let roots = r.denominator.roots()?;
                let dq = r.denominator.derivative();
                let mut out: Vec<PoleInfo<T>> = roots
                    .into_iter()
                    .map(|root| PoleInfo {
                        location: root.value,
                        order: PoleOrder::Finite(root.multiplicity),
                        residue: (root.multiplicity == 1)
                            .then(|| r.numerator.eval(root.value) / dq.eval(root.value)),
                    })
                    .collect();
                out.sort_by(|a, b| modulus_then_arg(a.location, b.location));
                Ok(out)
            }
        }
    }
}

pub(crate) fn to_pair<T: Real>(z: Cplx<T>) -> (f64, f64) {
    (z.re.as_f64(), z.im.as_f64())
}

/// Ordering by modulus (quantised to 1e-9 so symmetric root sets sort stably),
/// ties broken by argument.
pub fn modulus_then_arg<T: Real>(a: Cplx<T>, b: Cplx<T>) -> Ordering {
    let key = |z: Cplx<T>| (z.norm().as_f64() * 1e9).round() as i64;
    key(a)
        .cmp(&key(b))
        .then_with(|| a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::clit;

    type V = Potential<f64>;

    #[test]
    fn v1_stationary_at_one() {
        let (v, dv) = V::v1().eval(clit(1.0, 0.0)).unwrap();
        assert!((v - clit(0.5, 0.0)).norm() < 1e-15);
        assert!(dv.norm() < 1e-15);
    }

    #[test]
    fn v2_equals_energy_at_upper_turning_point() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let v = V::v2().value(clit(0.0, phi)).unwrap();
        assert!((v - clit(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn essential_modulus_e_at_first_family_member() {
        let x = Complex::from_polar(0.157177, 1.412965);
        let v = V::essential_exp().value(x).unwrap();
        assert!((v.norm() - std::f64::consts::E).abs() < 1e-5);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for pot in [V::v1(), V::v2(), V::inverse_power(-1.0, 3), V::essential_exp(), V::neg_quartic()] {
            let x = clit(0.7, 0.4);
            let (_, dv) = pot.eval(x).unwrap();
            let fd = (pot.value(x + clit(h, 0.0)).unwrap() - pot.value(x - clit(h, 0.0)).unwrap()) / (2.0 * h);
            assert!((dv - fd).norm() < 1e-6 * dv.norm().max(1.0), "{pot:?}");
        }
    }

    #[test]
    fn pole_evaluation_is_an_error() {
        assert!(matches!(V::inverse_power(1.0, 2).eval(clit(0.0, 0.0)), Err(ModelError::PoleEvaluation { .. })));
        assert!(matches!(V::essential_exp().eval(clit(0.0, 0.0)), Err(ModelError::PoleEvaluation { .. })));
        // exp(1/x) overflows just to the right of the origin
        assert!(matches!(V::essential_exp().eval(clit(1e-3, 0.0)), Err(ModelError::NonFinite { .. })));
    }

    #[test]
    fn reduction_cancels_common_factor() {
        // (x^2 - 1)/(x - 1) = x + 1
        let p = V::rational(
            vec![clit(-1.0, 0.0), clit(0.0, 0.0), clit(1.0, 0.0)],
            vec![clit(-1.0, 0.0), clit(1.0, 0.0)],
        )
        .unwrap();
        let r = p.as_rational().unwrap();
        assert_eq!(r.denominator().degree(), Some(0));
        assert_eq!(r.numerator().degree(), Some(1));
        assert!(p.poles().unwrap().is_empty());
        assert!(matches!(V::rational(vec![clit(1.0, 0.0)], vec![]), Err(ModelError::ZeroDenominator)));
    }

    #[test]
    fn poles_of_catalog() {
        let poles = V::v1().poles().unwrap();
        assert_eq!(poles.len(), 2);
        for p in &poles {
            assert!((p.location.norm() - 1.0).abs() < 1e-14 && p.location.re.abs() < 1e-14);
            assert_eq!(p.order, PoleOrder::Finite(1));
            assert!((p.residue.unwrap() - clit(0.5, 0.0)).norm() < 1e-14);
        }
        let double = V::inverse_power(1.0, 2).poles().unwrap();
        assert_eq!(double.len(), 1);
        assert_eq!(double[0].order, PoleOrder::Finite(2));
        assert!(double[0].residue.is_none());
        assert!(V::free().poles().unwrap().is_empty());
        assert_eq!(V::essential_exp().poles().unwrap()[0].order, PoleOrder::Essential);
    }

    /// Residue oracle: `(x - x0) V(x)` sampled on four approach directions.
    #[test]
    fn residue_limit_along_four_directions() {
        for pot in [V::v1(), V::v2(), V::inverse_power(-1.0, 1)] {
            for pole in pot.poles().unwrap().into_iter().filter(PoleInfo::is_simple) {
                for k in 0..4 {
                    let d = Complex::from_polar(1e-5, 0.3 + k as f64 * std::f64::consts::FRAC_PI_2);
                    let lim = d * pot.value(pole.location + d).unwrap();
                    assert!((lim - pole.residue.unwrap()).norm() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn ordering_is_modulus_then_arg() {
        let mut pts = vec![clit::<f64>(0.0, -1.0), clit(2.0, 0.0), clit(0.0, 1.0), clit(-1.0, 0.0)];
        pts.sort_by(|a, b| modulus_then_arg(*a, *b));
        assert_eq!(pts, vec![clit(0.0, -1.0), clit(0.0, 1.0), clit(-1.0, 0.0), clit(2.0, 0.0)]);
    }

    #[test]
    fn rounding_grows_near_pole() {
        let v = V::v1();
        let far = v.rounding_scale(clit(2.0, 0.0));
        let near = v.rounding_scale(clit(0.0, 1.0 + 1e-6));
        assert!(far < 10.0);
        // |V| ~ 5e5 there and the denominator loses six digits
        assert!(near > 1e11, "{near}");
    }
}
