//! Adaptive Gauss-Kronrod (7/15) quadrature of complex-valued integrands over a
//! real interval, with an endpoint-singularity variant.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature hit the subdivision limit ({intervals} intervals, error estimate {error:e})")]
    SubdivisionLimit { intervals: usize, error: f64 },
    #[error("integrand is not finite near {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-13),
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T: Real> {
    pub value: Cplx<T>,
    pub error: T,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel<T: Real> {
    a: T,
    b: T,
    value: Cplx<T>,
    error: T,
}

fn gk15<T: Real, E, F>(f: &mut F, a: T, b: T) -> Result<(Cplx<T>, T), E>
where
    F: FnMut(T) -> Result<Cplx<T>, E>,
    E: From<QuadError>,
{
    let half = T::lit(0.5);
    let centre = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(centre)?;
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * radius;
    let err = ((kronrod - gauss) * radius).norm();
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(QuadError::NonFinite { at: centre.as_f64() }.into());
    }
    Ok((value, err))
}

/// Globally adaptive bisection on `[a, b]`, always splitting the panel with the
/// largest error estimate.
pub fn integrate<T, E, F>(mut f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>, E>
where
    T: Real,
    F: FnMut(T) -> Result<Cplx<T>, E>,
    E: From<QuadError>,
{
    let (v, e) = gk15(&mut f, a, b)?;
    let mut panels = vec![Panel { a, b, value: v, error: e }];
    let mut evaluations = 15;
    loop {
        let total: Cplx<T> = panels.iter().fold(Complex::new(T::zero(), T::zero()), |s, p| s + p.value);
        let err: T = panels.iter().fold(T::zero(), |s, p| s + p.error);
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.norm()) {
            return Ok(QuadResult { value: total, error: err, evaluations });
        }
        if panels.len() >= cfg.max_intervals {
            return Err(QuadError::SubdivisionLimit { intervals: panels.len(), error: err.as_f64() }.into());
        }
        let worst = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) })
            .0;
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = (a + b) * T::lit(0.5);
        if !(mid > a && mid < b) {
            // interval exhausted at machine resolution
            return Err(QuadError::SubdivisionLimit { intervals: panels.len() + 1, error: err.as_f64() }.into());
        }
        let (lv, le) = gk15(&mut f, a, mid)?;
        let (rv, re) = gk15(&mut f, mid, b)?;
        evaluations += 30;
        panels.push(Panel { a, b: mid, value: lv, error: le });
        panels.push(Panel { a: mid, b, value: rv, error: re });
    }
}

/// Integral over `[a, b]` of an integrand that may carry an inverse-square-root
/// singularity at either end. Each half is mapped by `s = end +/- u^2`, which
/// turns `(s - end)^{-1/2}` into a smooth integrand in `u`.
pub fn integrate_endpoint_singular<T, E, F>(mut f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>, E>
where
    T: Real,
    F: FnMut(T) -> Result<Cplx<T>, E>,
    E: From<QuadError>,
{
    let two = T::lit(2.0);
    let mid = (a + b) * T::lit(0.5);
    let left_len = (mid - a).sqrt();
    let right_len = (b - mid).sqrt();
    let left = integrate(|u: T| Ok::<_, E>(f(a + u * u)? * (two * u)), T::zero(), left_len, cfg)?;
    let right = integrate(|u: T| Ok::<_, E>(f(b - u * u)? * (two * u)), T::zero(), right_len, cfg)?;
    Ok(QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
        evaluations: left.evaluations + right.evaluations,
    })
}
