//! Named contour quadratures.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use cplxdyn_core::model::{
    classical_probability, contour_travel_time, quartic_half_line_time, wkb_action, BranchRule, TurningPointSearch,
    GAMMA_QUARTER,
};
use cplxdyn_core::quadrature::{integrate, QuadConfig};
use cplxdyn_core::{clit, Contour64, Hamiltonian64, ModelError, Potential64, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `p^2 + i x/(1+x^2)`: travel time from the pole at `i` up the imaginary
    /// axis to the turning point and back.
    Eq14,
    /// `p^2 - x^4`: time of flight along the positive real axis to infinity.
    TofQuartic,
    /// `p^2 - x^4`: `int p dx` between the two upper turning points through 0.
    Wkb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOutcome {
    pub value: C64,
    /// Closed form, where one is known.
    pub reference: Option<C64>,
}

pub fn evaluate(preset: Preset, energy: C64) -> Result<QuadratureOutcome, ModelError> {
    match preset {
        Preset::Eq14 => {
            let h = Hamiltonian64::new(2, Potential64::v2(), energy)?;
            let pole = clit(0.0, 1.0);
            // the turning point on the pole's side of the imaginary axis, beyond it
            let tp = h
                .turning_points(&TurningPointSearch::default())?
                .into_iter()
                .map(|tp| tp.location)
                .max_by(|a, b| a.im.total_cmp(&b.im))
                .ok_or_else(|| ModelError::DomainError("no turning points".into()))?;
            let path = Contour64::polyline(&[pole, tp, pole]);
            let value = contour_travel_time(&h, &path, BranchRule::AlongPath)?;
            Ok(QuadratureOutcome { value, reference: None })
        }
        Preset::TofQuartic => {
            let h = Hamiltonian64::new(2, Potential64::neg_quartic(), energy)?;
            let ray = Contour64::ray(clit(0.0, 0.0), clit(1.0, 0.0));
            let value = contour_travel_time(&h, &ray, BranchRule::AlongPath)?;
            let reference = if energy.im == 0.0 && energy.re > 0.0 {
                Some(clit(quartic_half_line_time(energy.re)?, 0.0))
            } else {
                None
            };
            Ok(QuadratureOutcome { value, reference })
        }
        Preset::Wkb => {
            let h = Hamiltonian64::new(2, Potential64::neg_quartic(), energy)?;
            let r = energy.powf(0.25);
            let left = r * C64::from_polar(1.0, 3.0 * FRAC_PI_4);
            let right = r * C64::from_polar(1.0, FRAC_PI_4);
            let path = Contour64::polyline(&[left, clit(0.0, 0.0), right]);
            let value = wkb_action(&h, &path, BranchRule::Index(0))?;
            // along each ray E + x^4 = E - r^4, so the action is
            // sqrt 2 E^{3/4} int_0^1 sqrt(1-u^4) du = Gamma(1/4)^2 E^{3/4} / (6 sqrt pi)
            let g = GAMMA_QUARTER;
            let magnitude = energy.powf(0.75) * (g * g / (6.0 * PI.sqrt()));
            let reference = if (value - magnitude).norm() <= (value + magnitude).norm() { magnitude } else { -magnitude };
            Ok(QuadratureOutcome { value, reference: Some(reference) })
        }
    }
}

/// `2 int_0^inf P(E, x) dx` for the normalised density of `p^2 - x^4`.
pub fn probability_normalization(energy: f64) -> Result<f64, ModelError> {
    let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..QuadConfig::default() };
    let r = integrate(
        |u: f64| -> Result<C64, ModelError> {
            let w = 1.0 - u;
            Ok(clit(classical_probability(energy, u / w)? / (w * w), 0.0))
        },
        0.0,
        1.0,
        &cfg,
    )?;
    Ok(2.0 * r.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_time_at_unit_energy() {
        let q = evaluate(Preset::Eq14, clit(1.0, 0.0)).unwrap();
        assert!((q.value.re - 1.05659994).abs() < 1e-6, "{:?}", q.value);
        assert!(q.value.im.abs() < 1e-9);
    }

    #[test]
    fn quartic_time_of_flight_matches_closed_form() {
        for e in [0.5, 1.0, 2.0] {
            let q = evaluate(Preset::TofQuartic, clit(e, 0.0)).unwrap();
            let r = q.reference.unwrap();
            assert!((q.value - r).norm() < 1e-8, "{e}: {:?} vs {r}", q.value);
        }
        assert!(evaluate(Preset::TofQuartic, clit(1.0, 0.5)).unwrap().reference.is_none());
    }

    #[test]
    fn wkb_action_matches_midpoint_rule() {
        // int_0^1 sqrt(1-u^4) du with u = 1 - s^2 to remove the endpoint root
        let n = 200_000;
        let b: f64 = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) / n as f64;
                let u = 1.0 - s * s;
                (1.0 - u.powi(4)).sqrt() * 2.0 * s / n as f64
            })
            .sum();
        for e in [1.0, 2.0] {
            let q = evaluate(Preset::Wkb, clit(e, 0.0)).unwrap();
            let expect = 2f64.sqrt() * b * e.powf(0.75);
            assert!((q.value.norm() - expect).abs() < 1e-8, "{:?} vs {expect}", q.value);
            assert!((q.value - q.reference.unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn density_is_normalised() {
        for e in [0.5, 1.0, 2.0] {
            assert!((probability_normalization(e).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(probability_normalization(-1.0).is_err());
    }
}
