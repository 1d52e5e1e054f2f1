//! Large-time behaviour of `H = p^2 + V1` at `E = 1/2`.
//!
//! Energy conservation gives `int sqrt(1+x^2)/(x-1) dx = t sqrt 2 + C`, and the
//! integral is elementary:
//!
//! `F(x) = sqrt(1+x^2) + sqrt 2 log((x-1)/(x+1+sqrt(2+2x^2))) + log(x + sqrt(1+x^2))`.
//!
//! Inverting for large `t` gives
//! `x ~ t sqrt 2 - log t + sqrt 2 log(1+sqrt 2) - (3/2) log 2 + K` with `K = F(x0)`.
//! All logarithms and roots are principal.

use super::AnalysisError;
use crate::scalar::{cplx, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixAsymptotics<T: Real> {
    pub x0: Cplx<T>,
    pub k: Cplx<T>,
    pub t: T,
    pub x_asym: Cplx<T>,
}

/// The arguments of every principal root and log in `F`.
fn cut_arguments<T: Real>(x: Cplx<T>) -> [Cplx<T>; 4] {
    let one = cplx(T::one(), T::zero());
    let s = (one + x * x).sqrt();
    let two = T::lit(2.0);
    [
        one + x * x,
        (x - one) / (x + one + (one + x * x).scale(two).sqrt()),
        x + s,
        (one + x * x).scale(two),
    ]
}

fn implicit_lhs<T: Real>(x: Cplx<T>) -> Cplx<T> {
    let [w, ratio, sum, _] = cut_arguments(x);
    w.sqrt() + ratio.ln().scale(T::SQRT_2()) + sum.ln()
}

pub fn separatrix_asymptotics<T: Real>(x0: Cplx<T>, t: T) -> Result<SeparatrixAsymptotics<T>, AnalysisError> {
    let one = cplx(T::one(), T::zero());
    if (x0 - one).norm() == T::zero() {
        return Err(AnalysisError::InvalidArgument("x0 = 1 is a logarithmic singularity".into()));
    }
    if !(t > T::zero()) {
        return Err(AnalysisError::InvalidArgument("t must be positive".into()));
    }
    let k = implicit_lhs(x0);
    let sqrt2 = T::SQRT_2();
    let c = sqrt2 * (T::one() + sqrt2).ln() - T::lit(1.5) * T::LN_2();
    let x_asym = k + cplx(t * sqrt2 - t.ln() + c, T::zero());
    Ok(SeparatrixAsymptotics { x0, k, t, x_asym })
}

impl<T: Real> SeparatrixAsymptotics<T> {
    /// `F(x) - t sqrt 2 - F(x0)`; zero along the exact trajectory as long as no
    /// branch cut is crossed.
    pub fn implicit_residual(&self, x: Cplx<T>, t: T) -> Cplx<T> {
        implicit_lhs(x) - self.k - cplx(t * T::SQRT_2(), T::zero())
    }

    /// Residuals along a sampled path `(x_i, t_i)`. Fails if some cut argument
    /// crosses the negative real axis between consecutive samples; the caller
    /// then splits the path there.
    pub fn residual_along(&self, xs: &[Cplx<T>], ts: &[T]) -> Result<Vec<Cplx<T>>, AnalysisError> {
        if xs.len() != ts.len() {
            return Err(AnalysisError::InvalidArgument("positions and times differ in length".into()));
        }
        for (i, w) in xs.windows(2).enumerate() {
            let a = cut_arguments(w[0]);
            let b = cut_arguments(w[1]);
            if a.iter().zip(&b).any(|(u, v)| crosses_cut(*u, *v)) {
                return Err(AnalysisError::BranchAmbiguity(i, i + 1));
            }
        }
        Ok(xs.iter().zip(ts).map(|(&x, &t)| self.implicit_residual(x, t)).collect())
    }
}

/// Whether the chord from `u` to `v` passes through the negative real axis.
fn crosses_cut<T: Real>(u: Cplx<T>, v: Cplx<T>) -> bool {
    if u.im.signum() == v.im.signum() && u.im != T::zero() && v.im != T::zero() {
        return false;
    }
    let dy = v.im - u.im;
    if dy == T::zero() {
        return u.im == T::zero() && (u.re < T::zero() || v.re < T::zero());
    }
    let s = -u.im / dy;
    u.re + (v.re - u.re) * s < T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::clit;

    #[test]
    fn closed_form_at_500() {
        let a = separatrix_asymptotics(clit::<f64>(0.0, 1.1), 500.0).unwrap();
        assert!((a.x_asym - clit(701.113, 3.8073)).norm() < 1e-3, "{}", a.x_asym);
    }

    #[test]
    fn lhs_derivative_matches_integrand() {
        // dF/dx = sqrt(1+x^2)/(x-1), checked by central differences off the cuts
        for x in [clit::<f64>(0.3, 0.7), clit(2.0, -0.5), clit(-1.5, 1.2)] {
            let h = 1e-6;
            let num = (implicit_lhs(x + clit(h, 0.0)) - implicit_lhs(x - clit(h, 0.0))) / (2.0 * h);
            let exact = (clit::<f64>(1.0, 0.0) + x * x).sqrt() / (x - clit(1.0, 0.0));
            assert!((num - exact).norm() < 1e-7, "{x}: {num} vs {exact}");
        }
    }

    #[test]
    fn cut_crossing() {
        assert!(crosses_cut(clit::<f64>(-1.0, 0.1), clit(-1.0, -0.1)));
        assert!(!crosses_cut(clit::<f64>(1.0, 0.1), clit(1.0, -0.1)));
        assert!(!crosses_cut(clit::<f64>(-1.0, 0.1), clit(-2.0, 0.3)));
    }

    #[test]
    fn singular_start_rejected() {
        assert!(separatrix_asymptotics(clit::<f64>(1.0, 0.0), 1.0).is_err());
    }
}
