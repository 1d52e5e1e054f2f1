use super::ModelError;
use crate::scalar::Real;

/// `Gamma(1/4)`.
pub const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;

/// Normalised classical density `2 E^{1/4} sqrt(pi) / (Gamma(1/4)^2 sqrt(E + x^4))`
/// of `H = p^2 - x^4` on the real axis.
pub fn classical_probability<T: Real>(energy: T, x: T) -> Result<T, ModelError> {
    if !(energy > T::zero()) {
        return Err(ModelError::DomainError(format!("energy must be positive, got {energy}")));
    }
    let g = T::lit(GAMMA_QUARTER);
    let x2 = x * x;
    Ok(T::lit(2.0) * energy.powf(T::lit(0.25)) * T::PI().sqrt() / (g * g * (energy + x2 * x2).sqrt()))
}

/// Closed-form time of flight from 0 to infinity for `H = p^2 - x^4`:
/// `Gamma(1/4)^2 / (8 sqrt(pi) E^{1/4})`.
pub fn quartic_half_line_time<T: Real>(energy: T) -> Result<T, ModelError> {
    if !(energy > T::zero()) {
        return Err(ModelError::DomainError(format!("energy must be positive, got {energy}")));
    }
    let g = T::lit(GAMMA_QUARTER);
    Ok(g * g / (T::lit(8.0) * T::PI().sqrt() * energy.powf(T::lit(0.25))))
}
