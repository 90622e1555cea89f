//! Reference solutions by eigenfunction expansion.

mod ou;

pub use ou::{ee_ou_fpt, ou_spectrum, OuEigenSystem, SpectrumEntry};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::laplace::{SeriesValue, Status, SERIES_WARN_TOL};
use crate::processes::check_interior;

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be positive, got {t}")))
    }
}

fn with_status(value: f64, omitted_bound: f64, m: usize) -> SeriesValue {
    let status = if omitted_bound > SERIES_WARN_TOL {
        Status::Warning(format!("first omitted mode is {omitted_bound:.3e}; {m} modes are too few"))
    } else {
        Status::Ok
    };
    SeriesValue { value, omitted_bound, status }
}

/// `(2Dπ/L²) Σ_{m≤M} m sin(mπx0/L) exp(-(mπ/L)² D t)`: free diffusion, arrival at `x = 0`.
pub fn ee_free(t: f64, x0: f64, l: f64, d: f64, m: usize) -> Result<SeriesValue> {
    check_interior(x0, l)?;
    check_time(t)?;
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("D must be positive, got {d}")));
    }
    if m == 0 {
        return Err(Error::domain("mode count must be at least 1"));
    }
    let k = PI / l;
    let pref = 2.0 * d * PI / (l * l);
    let mut acc = 0.0;
    for j in 1..=m {
        let kj = k * j as f64;
        let decay = (-kj * kj * d * t).exp();
        if decay == 0.0 {
            break;
        }
        acc += j as f64 * (kj * x0).sin() * decay;
    }
    let next = (m + 1) as f64;
    let omitted = pref * next * (-(k * next).powi(2) * d * t).exp();
    Ok(with_status(pref * acc, omitted, m))
}

/// Biased diffusion with drift `v`: the free expansion times `exp(-x0 v/2D - v² t/4D)`.
pub fn ee_biased(t: f64, x0: f64, l: f64, d: f64, v: f64, m: usize) -> Result<SeriesValue> {
    if !v.is_finite() {
        return Err(Error::domain(format!("v must be finite, got {v}")));
    }
    let free = ee_free(t, x0, l, d, m)?;
    let g = (-x0 * v / (2.0 * d) - v * v * t / (4.0 * d)).exp();
    Ok(with_status(g * free.value, g * free.omitted_bound, m))
}
