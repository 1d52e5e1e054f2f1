//! Dormand-Prince 5(4) step with Hairer's continuous extension, specialised to the
//! complex pair `(x, p)`. The system is autonomous, so stage times are not needed.

use num_complex::Complex;

use crate::model::{Hamiltonian, ModelError};
use crate::scalar::{Cplx, Real};

/// `(x, p)`.
pub type Pair<T> = [Cplx<T>; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of Hamilton's equations: `xdot = n p^(n-1)`, `pdot = -V'(x)`.
pub fn rhs<T: Real>(h: &Hamiltonian<T>, y: &Pair<T>) -> Result<Pair<T>, ModelError> {
    let (_, dv) = h.potential().eval(y[0])?;
    Ok([h.velocity(y[1]), -dv])
}

#[inline]
fn comb<T: Real>(y: &Pair<T>, h: T, terms: &[(f64, &Pair<T>)]) -> Pair<T> {
    let mut out = *y;
    for (c, k) in terms {
        let w = h * T::lit(*c);
        out[0] = out[0] + k[0] * w;
        out[1] = out[1] + k[1] * w;
    }
    out
}

/// Result of one trial step.
pub struct Trial<T: Real> {
    pub y_new: Pair<T>,
    pub k_new: Pair<T>,
    pub err: T,
    pub dense: DenseSegment<T>,
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<T: Real> {
    pub t0: T,
    pub h: T,
    r: [Pair<T>; 5],
}

impl<T: Real> DenseSegment<T> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    /// State at `t` (meaningful for `t` within the step).
    pub fn eval(&self, t: T) -> Pair<T> {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let mut out = [Complex::new(T::zero(), T::zero()); 2];
        for (c, o) in out.iter_mut().enumerate() {
            let r = |i: usize| self.r[i][c];
            *o = r(0) + (r(1) + (r(2) + (r(3) + r(4) * th1) * th) * th1) * th;
        }
        out
    }
}

/// Weighted RMS of the error over the two complex components.
pub fn error_norm<T: Real>(err: &Pair<T>, y0: &Pair<T>, y1: &Pair<T>, rtol: T, atol: T) -> T {
    let mut acc = T::zero();
    for c in 0..2 {
        let sc = atol + rtol * y0[c].norm().max(y1[c].norm());
        let e = err[c].norm() / sc;
        acc = acc + e * e;
    }
    (acc / T::lit(2.0)).sqrt()
}

/// One Dormand-Prince trial step from `(t, y)` with `k1 = f(y)`.
pub fn trial_step<T: Real>(
    ham: &Hamiltonian<T>,
    t: T,
    y: &Pair<T>,
    k1: &Pair<T>,
    h: T,
    rtol: T,
    atol: T,
) -> Result<Trial<T>, ModelError> {
    let k2 = rhs(ham, &comb(y, h, &[(A21, k1)]))?;
    let k3 = rhs(ham, &comb(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs(ham, &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(ham, &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs(ham, &comb(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = comb(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(ham, &y_new)?;
    let zero = [Complex::new(T::zero(), T::zero()); 2];
    let e = comb(&zero, h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
    let err = error_norm(&e, y, &y_new, rtol, atol);

    let mut r = [zero; 5];
    for c in 0..2 {
        let ydiff = y_new[c] - y[c];
        let bspl = k1[c] * h - ydiff;
        r[0][c] = y[c];
        r[1][c] = ydiff;
        r[2][c] = bspl;
        r[3][c] = ydiff - k7[c] * h - bspl;
        r[4][c] = (k1[c] * T::lit(D1)
            + k3[c] * T::lit(D3)
            + k4[c] * T::lit(D4)
            + k5[c] * T::lit(D5)
            + k6[c] * T::lit(D6)
            + k7[c] * T::lit(D7))
            * h;
    }
    Ok(Trial {
        y_new,
        k_new: k7,
        err,
        dense: DenseSegment { t0: t, h, r },
    })
}

/// Hairer's starting step heuristic for a method of order 5.
pub fn initial_step<T: Real>(ham: &Hamiltonian<T>, y0: &Pair<T>, f0: &Pair<T>, rtol: T, atol: T, span: T) -> T {
    let d0 = error_norm(y0, y0, y0, rtol, atol);
    let d1 = error_norm(f0, y0, y0, rtol, atol);
    let mut h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(span);
    let y1 = comb(y0, h0, &[(1.0, f0)]);
    let h1 = match rhs(ham, &y1) {
        Ok(f1) => {
            let diff = [f1[0] - f0[0], f1[1] - f0[1]];
            let d2 = error_norm(&diff, y0, y0, rtol, atol) / h0;
            let m = d1.max(d2);
            if m <= T::lit(1e-15) {
                (h0 * T::lit(1e-3)).max(T::lit(1e-6))
            } else {
                (T::lit(0.01) / m).powf(T::lit(0.2))
            }
        }
        Err(_) => h0 * T::lit(1e-3),
    };
    (h0 * T::lit(100.0)).min(h1).min(span)
}
