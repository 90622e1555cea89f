//! Special functions behind the Ornstein-Uhlenbeck kernels and eigenfunctions.
//!
//! `D_ν(z)` is evaluated from its even/odd ₁F₁ decomposition whenever that
//! series certifies its own accuracy. Otherwise (large `|ν|`, or `z` far on
//! the decaying side) the recessive solution of Weber's equation is obtained
//! by Taylor continuation from large `z` and normalised with the closed-form
//! values of `D_ν(0)` and `D_ν'(0)`.

mod gamma;
mod kummer;
pub mod weber;

use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

pub use gamma::{ln_gamma, recip_gamma};
pub use kummer::{kummer_1f1, kummer_1f1_with, KUMMER_REL_TOL, KUMMER_TERM_CAP};
pub use weber::{ScaledState, WeberOde, WeberPath};

use crate::error::{Error, Result};
use crate::processes::ProcessSpec;

/// Largest `|z|` accepted by the parabolic cylinder routines.
pub const PCF_MAX_ABS_Z: f64 = 50.0;

/// Accuracy target for `D_ν`; the series route is used only below it.
const PCF_REL_TOL: f64 = 1e-12;

/// A special-function value with its truncation/rounding error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecfunResult {
    pub value: Complex64,
    pub est_error: f64,
    pub terms_used: usize,
}

impl SpecfunResult {
    pub fn rel_error(&self) -> f64 {
        self.est_error / self.value.norm().max(f64::MIN_POSITIVE)
    }
}

/// Direction of the `u_s^±` solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// Regular as `y → +∞`.
    Plus,
    /// Regular as `y → -∞`.
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn pcf_error(nu: Complex64, z: f64, reason: impl Into<String>) -> Error {
    Error::SpecialFunction {
        func: "D_nu",
        nu: format!("{nu}"),
        z: format!("{z}"),
        reason: reason.into(),
    }
}

/// `e^{z²/4} D_ν(z)` from the ₁F₁ decomposition, with its error estimate.
fn pcf_scaled_series(nu: Complex64, z: f64) -> Result<SpecfunResult> {
    let w = Complex64::new(0.5 * z * z, 0.0);
    let even = kummer::kummer_series(-nu * 0.5, Complex64::new(0.5, 0.0), w, KUMMER_TERM_CAP)?;
    let odd = kummer::kummer_series((1.0 - nu) * 0.5, Complex64::new(1.5, 0.0), w, KUMMER_TERM_CAP)?;
    let pref = (nu * (0.5 * LN_2)).exp() * PI.sqrt();
    let ce = pref * recip_gamma((1.0 - nu) * 0.5);
    let co = pref * recip_gamma(-nu * 0.5) * (2.0f64.sqrt() * z);
    let te = ce * even.value;
    let to = co * odd.value;
    let value = te - to;
    let est_error = ce.norm() * even.est_error
        + co.norm() * odd.est_error
        + 4.0 * f64::EPSILON * (te.norm() + to.norm());
    if !(value.re.is_finite() && value.im.is_finite() && est_error.is_finite()) {
        return Err(pcf_error(nu, z, "series coefficients overflowed"));
    }
    Ok(SpecfunResult {
        value,
        est_error,
        terms_used: even.terms_used + odd.terms_used,
    })
}

/// `ln(e^{z²/4} D_ν(z))` by continuation of the recessive Weber solution.
fn pcf_scaled_log_continuation(nu: Complex64, z: f64) -> Result<(Complex64, usize)> {
    let ode = WeberOde::new(nu);
    let states = ode.recessive(&[z, 0.0]);
    let (at_z, at_0) = (states[0], states[1]);
    let ln_two = Complex64::new(LN_2, 0.0);
    let half_ln_pi = 0.5 * PI.ln();
    let r = at_0.log_derivative();
    let ln_c = if r.norm() <= 1.0 {
        // D_ν(0) = 2^{ν/2} √π / Γ((1-ν)/2)
        let ln_d0 = nu * 0.5 * ln_two + half_ln_pi - ln_gamma((1.0 - nu) * 0.5);
        ln_d0 - at_0.ln_w()
    } else {
        // D_ν'(0) = -2^{(ν+1)/2} √π / Γ(-ν/2)
        let ln_d1 = (nu + 1.0) * 0.5 * ln_two + half_ln_pi + Complex64::new(0.0, PI) - ln_gamma(-nu * 0.5);
        ln_d1 - at_0.ln_w() - r.ln()
    };
    let out = ln_c + at_z.ln_w() + 0.25 * z * z;
    if !(out.re.is_finite() || out.re == f64::NEG_INFINITY) || out.im.is_nan() {
        return Err(pcf_error(nu, z, "continuation produced a non-finite value"));
    }
    Ok((out, ode.steps_between(z.min(0.0), z.max(0.0) + 8.0)))
}

/// `e^{z²/4} D_ν(z)`; the Gaussian factors are combined before exponentiation.
pub fn parabolic_cylinder_scaled(nu: Complex64, z: f64) -> Result<SpecfunResult> {
    if !z.is_finite() || z.abs() > PCF_MAX_ABS_Z {
        return Err(Error::domain(format!("|z| = {z} outside the supported range ±{PCF_MAX_ABS_Z}")));
    }
    if let Ok(r) = pcf_scaled_series(nu, z) {
        if r.rel_error() <= PCF_REL_TOL {
            return Ok(r);
        }
    }
    let (ln_v, steps) = pcf_scaled_log_continuation(nu, z)?;
    let value = ln_v.exp();
    Ok(SpecfunResult {
        value,
        est_error: 16.0 * f64::EPSILON * (steps as f64 + 10.0) * value.norm(),
        terms_used: steps,
    })
}

/// Parabolic cylinder function `D_ν(z)` for complex order and real argument.
pub fn parabolic_cylinder_d(nu: Complex64, z: f64) -> Result<SpecfunResult> {
    let scaled = parabolic_cylinder_scaled(nu, z)?;
    let g = (-0.25 * z * z).exp();
    Ok(SpecfunResult {
        value: scaled.value * g,
        est_error: scaled.est_error * g,
        terms_used: scaled.terms_used,
    })
}

/// `u_s^±(y0) = e^{y0²/4b²} D_{-τs}(± y0/b)` for an OU process.
pub fn u_pm(p: &ProcessSpec, sign: Sign, s: Complex64, y0: f64) -> Result<SpecfunResult> {
    let (tau, b) = ou_scales(p)?;
    if s == Complex64::new(0.0, 0.0) {
        // D_0(z) = e^{-z²/4}
        return Ok(SpecfunResult {
            value: Complex64::new(1.0, 0.0),
            est_error: 0.0,
            terms_used: 0,
        });
    }
    parabolic_cylinder_scaled(-s * tau, sign.factor() * y0 / b)
}

fn ou_scales(p: &ProcessSpec) -> Result<(f64, f64)> {
    match p {
        ProcessSpec::Ou(ou) => Ok((ou.tau(), ou.b())),
        _ => Err(Error::domain("u_s^± is defined for the Ornstein-Uhlenbeck process only")),
    }
}

/// `ln[u_s^±(y_a) / u_s^±(y_b)]` for several `y_a` against one `y_b`,
/// without ever forming the individual (possibly overflowing) values.
pub fn u_pm_log_ratios(p: &ProcessSpec, sign: Sign, s: Complex64, ys: &[f64], y_ref: f64) -> Result<Vec<Complex64>> {
    let (tau, b) = ou_scales(p)?;
    if s == Complex64::new(0.0, 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); ys.len()]);
    }
    let f = sign.factor() / b;
    let mut zs: Vec<f64> = ys.iter().map(|y| y * f).collect();
    let z_ref = y_ref * f;
    if let Some(z) = zs.iter().chain(std::iter::once(&z_ref)).find(|z| !z.is_finite() || z.abs() > PCF_MAX_ABS_Z) {
        return Err(Error::domain(format!("|z| = {z} outside the supported range ±{PCF_MAX_ABS_Z}")));
    }
    zs.push(z_ref);
    let nu = -s * tau;
    let states = WeberOde::new(nu).recessive(&zs);
    let (reference, rest) = states.split_last().expect("non-empty");
    let ln_ref = reference.ln_w() + 0.25 * z_ref * z_ref;
    let out: Vec<Complex64> = rest
        .iter()
        .zip(&zs)
        .map(|(st, z)| st.ln_w() + 0.25 * z * z - ln_ref)
        .collect();
    if out.iter().any(|v| v.re.is_nan() || v.im.is_nan()) {
        return Err(pcf_error(nu, z_ref, "continuation produced NaN"));
    }
    Ok(out)
}
