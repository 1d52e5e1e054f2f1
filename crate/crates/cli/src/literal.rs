//! Command-line literals: complex numbers in `a+bi` form, plot regions and grid
//! resolutions.

use thiserror::Error;

use cplxdyn_core::{clit, Region64, C64};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {what} from '{text}': {reason}")]
pub struct LiteralError {
    pub what: &'static str,
    pub text: String,
    pub reason: String,
}

fn err(what: &'static str, text: &str, reason: impl Into<String>) -> LiteralError {
    LiteralError { what, text: text.to_string(), reason: reason.into() }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`; exponents like `1e-3` are allowed
/// in either part.
pub fn parse_complex(text: &str) -> Result<C64, LiteralError> {
    let what = "complex number";
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(err(what, text, "empty"));
    }
    let real = |part: &str| -> Result<f64, LiteralError> {
        let v: f64 = part.parse().map_err(|_| err(what, text, format!("'{part}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(what, text, "not finite"))
        }
    };
    let imag = |part: &str| -> Result<f64, LiteralError> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => real(part),
        }
    };
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match (s.strip_suffix('i'), split) {
        (Some(body), Some(k)) => Ok(clit(real(&s[..k])?, imag(&body[k..])?)),
        (Some(body), None) => Ok(clit(0.0, imag(body)?)),
        (None, None) => Ok(clit(real(&s)?, 0.0)),
        (None, Some(_)) => Err(err(what, text, "imaginary part needs a trailing 'i'")),
    }
}

fn numbers(what: &'static str, text: &str, count: usize) -> Result<Vec<f64>, LiteralError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != count {
        return Err(err(what, text, format!("expected {count} comma-separated values")));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err(what, text, format!("'{p}' is not a finite number"))),
        })
        .collect()
}

/// `re_min,re_max,im_min,im_max`.
pub fn parse_region(text: &str) -> Result<Region64, LiteralError> {
    let v = numbers("region", text, 4)?;
    region_from(&[v[0], v[1], v[2], v[3]]).map_err(|reason| err("region", text, reason))
}

pub fn region_from(v: &[f64; 4]) -> Result<Region64, String> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err("bounds must be finite".into());
    }
    if !(v[0] < v[1] && v[2] < v[3]) {
        return Err("bounds must satisfy re_min < re_max and im_min < im_max".into());
    }
    Ok(Region64::new(v[0], v[1], v[2], v[3]))
}

/// `NX,NY`.
pub fn parse_resolution(text: &str) -> Result<(usize, usize), LiteralError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let dims: Vec<usize> = parts.iter().filter_map(|p| p.parse().ok()).filter(|&n| n > 0).collect();
    match dims.as_slice() {
        [nx, ny] if parts.len() == 2 => Ok((*nx, *ny)),
        _ => Err(err("resolution", text, "expected two positive integers NX,NY")),
    }
}
