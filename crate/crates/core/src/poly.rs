//! Dense polynomials with complex coefficients in ascending-degree order.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cplx, Cplx, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("root finder did not converge (degree {degree}, worst residual {residual:e})")]
    NoConvergence { degree: usize, residual: f64 },
    #[error("division by the zero polynomial")]
    DivisionByZero,
}

/// `c[0] + c[1] x + ... + c[d] x^d`. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Real> {
    coeffs: Vec<Cplx<T>>,
}

/// A root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T: Real> {
    pub value: Cplx<T>,
    pub multiplicity: usize,
}

/// Roots closer than this are merged into one multiple root.
pub const CLUSTER_RADIUS: f64 = 1e-7;
/// Newton polishing stops once the update is below this (relative to `max(1,|z|)`).
pub const POLISH_TOL: f64 = 1e-13;

impl<T: Real> Poly<T> {
    pub fn new(mut coeffs: Vec<Cplx<T>>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == T::zero() && c.im == T::zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| cplx(T::lit(c), T::zero())).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Cplx<T>) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(cplx(T::one(), T::zero()))
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![Complex::new(T::zero(), T::zero()), cplx(T::one(), T::zero())])
    }

    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Cplx<T>> {
        self.coeffs.last().copied()
    }

    /// Largest coefficient modulus (0 for the zero polynomial).
    pub fn max_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn eval(&self, x: Cplx<T>) -> Cplx<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `sum |c_k| |x|^k`, the scale against which a residual `|p(x)|` is judged.
    pub fn abs_eval(&self, x: Cplx<T>) -> T {
        let r = x.norm();
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::lit(k as f64))
                .collect(),
        )
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Divides through by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(l.inv()),
            None => self.clone(),
        }
    }

    /// Drops trailing coefficients whose modulus is below `tol`.
    pub fn trim(&self, tol: T) -> Self {
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|v| v.norm() <= tol) {
            c.pop();
        }
        Self::new(c)
    }

    /// Euclidean division, `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        let dd = divisor.degree().ok_or(PolyError::DivisionByZero)?;
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if nd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![Complex::new(T::zero(), T::zero()); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j] - q * dc;
            }
            rem[k + dd] = Complex::new(T::zero(), T::zero());
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Monic greatest common divisor by the Euclidean algorithm. Remainders whose
    /// coefficients all fall below `rel_tol` times the input scale count as zero.
    pub fn gcd(a: &Self, b: &Self, rel_tol: T) -> Self {
        let scale = a.max_coeff().max(b.max_coeff()).max(T::min_positive_value());
        let tol = rel_tol * scale;
        let (mut u, mut v) = if a.degree() >= b.degree() {
            (a.monic(), b.monic())
        } else {
            (b.monic(), a.monic())
        };
        while !v.trim(tol).is_zero() {
            let v_m = v.trim(tol).monic();
            let (_, r) = match u.div_rem(&v_m) {
                Ok(qr) => qr,
                Err(_) => break,
            };
            u = v_m;
            v = r.trim(tol);
            if !v.is_zero() {
                // rescale so the tolerance stays meaningful across iterations
                let m = v.max_coeff();
                if m <= tol {
                    v = Self::zero();
                } else {
                    v = v.scale(cplx(T::one() / m, T::zero()));
                }
            }
        }
        u.monic()
    }

    /// Multiplicity of the root at exactly zero (number of vanishing low-order coefficients).
    fn zero_root_count(&self) -> usize {
        self.coeffs
            .iter()
            .take_while(|c| c.re == T::zero() && c.im == T::zero())
            .count()
    }

    /// All roots with multiplicity: simultaneous (Aberth-Ehrlich) iteration,
    /// clustering within [`CLUSTER_RADIUS`], then Newton polishing of each cluster
    /// centre on the derivative of matching order.
    pub fn roots(&self) -> Result<Vec<Root<T>>, PolyError> {
        let Some(deg) = self.degree() else {
            return Ok(Vec::new());
        };
        let zeros = self.zero_root_count();
        let mut out = Vec::new();
        if zeros > 0 {
            out.push(Root {
                value: Complex::new(T::zero(), T::zero()),
                multiplicity: zeros,
            });
        }
        let reduced = Self::new(self.coeffs[zeros..].to_vec());
        let rdeg = deg - zeros;
        if rdeg == 0 {
            return Ok(out);
        }
        let approx = reduced.aberth();
        let clusters = cluster(&approx, T::lit(CLUSTER_RADIUS));
        let mut worst = T::zero();
        for members in clusters {
            let m = members.len();
            let centre = members.iter().fold(Complex::new(T::zero(), T::zero()), |a, &z| a + z)
                / T::lit(m as f64);
            let polished = reduced.polish(centre, m);
            let resid = reduced.eval(polished).norm() / reduced.abs_eval(polished).max(T::min_positive_value());
            worst = worst.max(resid);
            out.push(Root {
                value: polished,
                multiplicity: m,
            });
        }
        // relative backward error; a double root polished on p' leaves ~eps residual in p
        if !(worst <= T::lit(1e-9).max(T::epsilon() * T::lit(1e3))) {
            return Err(PolyError::NoConvergence {
                degree: deg,
                residual: worst.as_f64(),
            });
        }
        Ok(out)
    }

    fn aberth(&self) -> Vec<Cplx<T>> {
        let deg = self.degree().unwrap_or(0);
        let lead = self.coeffs[deg];
        if deg == 1 {
            return vec![-self.coeffs[0] / lead];
        }
        // Fujiwara-style radius estimate for the initial circle
        let mut radius = T::zero();
        for k in 0..deg {
            let ratio = (self.coeffs[k] / lead).norm();
            if ratio > T::zero() {
                radius = radius.max(ratio.powf(T::one() / T::lit((deg - k) as f64)));
            }
        }
        if radius == T::zero() {
            radius = T::one();
        }
        let offset = T::lit(0.4);
        let mut z: Vec<Cplx<T>> = (0..deg)
            .map(|k| {
                let ang = T::TAU() * T::lit(k as f64) / T::lit(deg as f64) + offset;
                Complex::from_polar(radius, ang)
            })
            .collect();
        let deriv = self.derivative();
        let tiny = T::epsilon() * T::lit(4.0);
        for _ in 0..500 {
            let mut max_rel = T::zero();
            for k in 0..deg {
                let pz = self.eval(z[k]);
                if pz.norm() == T::zero() {
                    continue;
                }
                let ratio = pz / deriv.eval(z[k]);
                let mut repulsion = Complex::new(T::zero(), T::zero());
                for j in 0..deg {
                    if j != k {
                        let d = z[k] - z[j];
                        if d.norm() > T::zero() {
                            repulsion = repulsion + d.inv();
                        }
                    }
                }
                let denom = Complex::new(T::one(), T::zero()) - ratio * repulsion;
                let w = if is_usable(denom) && is_usable(ratio) {
                    ratio / denom
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                if is_usable(w) {
                    z[k] = z[k] - w;
                    max_rel = max_rel.max(w.norm() / z[k].norm().max(T::one()));
                }
            }
            if max_rel <= tiny {
                break;
            }
        }
        z
    }

    /// Newton on the `(m-1)`-th derivative, where the `m`-fold root is simple.
    fn polish(&self, start: Cplx<T>, m: usize) -> Cplx<T> {
        let mut f = self.clone();
        for _ in 1..m {
            f = f.derivative();
        }
        let mut z = start;
        let tol = T::lit(POLISH_TOL);
        for _ in 0..60 {
            let (v, dv) = f.eval_with_derivative(z);
            if v.norm() == T::zero() || !is_usable(dv) || dv.norm() == T::zero() {
                break;
            }
            let step = v / dv;
            if !is_usable(step) {
                break;
            }
            // refuse steps that would leave the cluster basin
            if step.norm() > T::lit(1e-2) * z.norm().max(T::one()) {
                break;
            }
            z = z - step;
            if step.norm() <= tol * z.norm().max(T::one()) {
                break;
            }
        }
        z
    }
}

fn is_usable<T: Real>(z: Cplx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Single-linkage clustering; returns members per cluster in input order.
fn cluster<T: Real>(points: &[Cplx<T>], radius: T) -> Vec<Vec<Cplx<T>>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Cplx<T>>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, v)) => v.push(points[i]),
            None => groups.push((r, vec![points[i]])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

impl<T: Real> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Self) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Complex::new(T::zero(), T::zero());
        Poly::new(
            (0..n)
                .map(|k| *self.coeffs.get(k).unwrap_or(&zero) + *rhs.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl<T: Real> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<T: Real> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Self) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Real> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Self) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }
}
