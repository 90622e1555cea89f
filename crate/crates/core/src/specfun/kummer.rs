//! Kummer's confluent hypergeometric function by direct power series.

use num_complex::Complex64;

use super::SpecfunResult;
use crate::error::{Error, Result};

/// Default cap on series terms.
pub const KUMMER_TERM_CAP: usize = 4000;

/// Relative accuracy the series must certify.
pub const KUMMER_REL_TOL: f64 = 1e-12;

fn is_pole(b: Complex64) -> bool {
    b.im == 0.0 && b.re <= 0.0 && b.re.fract() == 0.0
}

/// `₁F₁(a; b; z) = Σ (a)_k z^k / ((b)_k k!)`.
///
/// Summation stops once two successive terms are negligible and the term
/// ratio is contracting. The error estimate accounts for rounding in the
/// largest partial term, so cancellation (large |z| on the oscillating side,
/// or large |a|) shows up as a large `est_error`. In that case Kummer's
/// transformation `e^z ₁F₁(b−a; b; −z)` is tried as well and the better
/// certified of the two is kept; if neither meets `rel_tol` it is an error.
pub fn kummer_1f1(a: Complex64, b: Complex64, z: Complex64) -> Result<SpecfunResult> {
    kummer_1f1_with(a, b, z, KUMMER_TERM_CAP, KUMMER_REL_TOL)
}

pub fn kummer_1f1_with(a: Complex64, b: Complex64, z: Complex64, cap: usize, rel_tol: f64) -> Result<SpecfunResult> {
    let mut raw = kummer_series(a, b, z, cap)?;
    let rel = |r: &SpecfunResult| r.est_error / r.value.norm().max(f64::MIN_POSITIVE);
    if rel(&raw) > rel_tol {
        if let Ok(t) = kummer_series(b - a, b, -z, cap) {
            let ez = z.exp();
            let alt = SpecfunResult { value: t.value * ez, est_error: t.est_error * ez.norm(), terms_used: t.terms_used };
            if rel(&alt) < rel(&raw) {
                raw = alt;
            }
        }
    }
    let scale = raw.value.norm().max(f64::MIN_POSITIVE);
    if raw.est_error > rel_tol * scale {
        return Err(Error::SpecialFunction {
            func: "1F1",
            nu: format!("a = {a}, b = {b}"),
            z: format!("{z}"),
            reason: format!(
                "cancellation: relative error estimate {:.1e} exceeds {rel_tol:.0e}",
                raw.est_error / scale
            ),
        });
    }
    Ok(raw)
}

/// The series itself, with an honest error estimate but no accuracy gate.
pub(crate) fn kummer_series(a: Complex64, b: Complex64, z: Complex64, cap: usize) -> Result<SpecfunResult> {
    if is_pole(b) {
        return Err(Error::domain(format!("1F1 lower parameter b = {b} is a non-positive integer")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut abs_sum = 1.0f64;
    let mut max_term = 1.0f64;
    let mut quiet = 0;
    for k in 0..cap {
        let kf = k as f64;
        let ratio = (a + kf) * z / ((b + kf) * (kf + 1.0));
        term *= ratio;
        sum += term;
        let m = term.norm();
        abs_sum += m;
        max_term = max_term.max(m);
        if term == Complex64::new(0.0, 0.0) {
            // a is a non-positive integer: the series terminated exactly
            return Ok(SpecfunResult {
                value: sum,
                est_error: f64::EPSILON * abs_sum,
                terms_used: k + 1,
            });
        }
        let contracting = ratio.norm() < 0.5;
        if contracting && m <= f64::EPSILON * 0.25 * sum.norm() {
            quiet += 1;
            if quiet >= 2 {
                let tail = m * ratio.norm() / (1.0 - ratio.norm());
                return Ok(SpecfunResult {
                    value: sum,
                    est_error: 2.0 * f64::EPSILON * (abs_sum + max_term) + tail,
                    terms_used: k + 1,
                });
            }
        } else {
            quiet = 0;
        }
        if !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(Error::SpecialFunction {
                func: "1F1",
                nu: format!("a = {a}, b = {b}"),
                z: format!("{z}"),
                reason: "series overflowed".into(),
            });
        }
    }
    Err(Error::SpecialFunction {
        func: "1F1",
        nu: format!("a = {a}, b = {b}"),
        z: format!("{z}"),
        reason: format!("no convergence within {cap} terms"),
    })
}
