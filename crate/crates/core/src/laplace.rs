//! Numerical inverse Laplace transforms and the sinh-ratio residue series.

use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::quad::{integrate_log, QuadResult};

pub const TALBOT_DEFAULT_NODES: usize = 32;

/// Imaginary residue allowed relative to the returned value.
pub const TALBOT_RESIDUE_TOL: f64 = 1e-8;

pub const STEHFEST_DEFAULT_ORDER: usize = 14;

/// Relative disagreement between orders `n` and `n - 2` that triggers a warning.
pub const STEHFEST_AGREEMENT_TOL: f64 = 1e-3;

/// First-omitted-term size above which a truncated series is flagged.
pub const SERIES_WARN_TOL: f64 = 1e-12;

/// Size of the first omitted exponential factor targeted by [`auto_mode_count`].
pub const MODE_CUTOFF: f64 = 1e-14;

/// Outcome flag carried alongside numerical results.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Status {
    #[default]
    Ok,
    Warning(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }
}

/// A transform that can be evaluated at complex frequency.
///
/// Implementations must be safe to call from several threads at once.
pub trait Transform: Sync {
    fn eval(&self, s: Complex64) -> Result<Complex64>;

    /// Largest real part of any singularity.
    fn singularity_bound(&self) -> f64 {
        0.0
    }
}

impl<F> Transform for F
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        self(s)
    }
}

/// An evaluator with an explicit bound on its singularities.
pub struct LaplaceKernel<F> {
    evaluator: F,
    singularity_bound: f64,
}

impl<F> LaplaceKernel<F>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    pub fn new(evaluator: F, singularity_bound: f64) -> Self {
        Self { evaluator, singularity_bound }
    }
}

impl<F> Transform for LaplaceKernel<F>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        (self.evaluator)(s)
    }

    fn singularity_bound(&self) -> f64 {
        self.singularity_bound
    }
}

/// A real-time value recovered from a transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub value: f64,
    /// Magnitude of the imaginary part left by the two-sided contour sum.
    pub imag_residue: f64,
    pub status: Status,
}

/// Node `s_k` and weight `w_k` of the two-sided fixed-Talbot rule, so that
/// `f(t) ≈ Σ_k w_k F(s_k)` with `k = -(M-1) .. M-1`.
pub fn talbot_nodes(t: f64, m: usize) -> Result<Vec<(Complex64, Complex64)>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    if m < 2 {
        return Err(Error::domain("Talbot inversion needs at least 2 nodes"));
    }
    let r = 2.0 * m as f64 / (5.0 * t);
    let mf = m as f64;
    let half = (m - 1) as isize;
    let mut out = Vec::with_capacity(2 * m - 1);
    for k in -half..=half {
        if k == 0 {
            out.push((Complex64::new(r, 0.0), Complex64::new(r / mf * 0.5 * (r * t).exp(), 0.0)));
            continue;
        }
        let theta = k as f64 * PI / mf;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let w = (s * t).exp() * Complex64::new(1.0, sigma) * (r / (2.0 * mf));
        out.push((s, w));
    }
    Ok(out)
}

/// Fixed-Talbot inversion with `m` nodes.
pub fn invert_talbot<K: Transform + ?Sized>(k: &K, t: f64, m: usize) -> Result<Inversion> {
    let shift = k.singularity_bound().max(0.0);
    let mut v = invert_talbot_many(|s| Ok(vec![k.eval(s + shift)?]), t, m)?;
    let mut out = v.pop().expect("one component");
    if shift > 0.0 {
        let g = (shift * t).exp();
        out.value *= g;
        out.imag_residue *= g;
    }
    Ok(out)
}

/// Fixed-Talbot inversion of several transforms that share their evaluation work.
pub fn invert_talbot_many<F>(f: F, t: f64, m: usize) -> Result<Vec<Inversion>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>>,
{
    let nodes = talbot_nodes(t, m)?;
    let mut sums: Vec<Complex64> = Vec::new();
    let mut scale: Vec<f64> = Vec::new();
    for (s, w) in nodes {
        let vals = f(s)?;
        if sums.is_empty() {
            sums = vec![Complex64::new(0.0, 0.0); vals.len()];
            scale = vec![0.0; vals.len()];
        } else if vals.len() != sums.len() {
            return Err(Error::numeric("transform changed its component count between nodes"));
        }
        for (j, v) in vals.into_iter().enumerate() {
            let term = w * v;
            if !(term.re.is_finite() && term.im.is_finite()) {
                return Err(Error::numeric(format!("Talbot node s = {s} gave a non-finite term")));
            }
            sums[j] += term;
            scale[j] += term.norm();
        }
    }
    Ok(sums
        .into_iter()
        .zip(scale)
        .map(|(sum, sc)| {
            let value = sum.re;
            let imag_residue = sum.im.abs();
            let floor = 64.0 * f64::EPSILON * sc;
            let status = if imag_residue > TALBOT_RESIDUE_TOL * value.abs() && imag_residue > floor {
                Status::Warning(format!(
                    "imaginary residue {imag_residue:.3e} exceeds {TALBOT_RESIDUE_TOL:e} x |{value:.6e}|"
                ))
            } else {
                Status::Ok
            };
            Inversion { value, imag_residue, status }
        })
        .collect())
}

/// Gaver-Stehfest result with the order `n - 2` value kept as a cross-check.
#[derive(Debug, Clone, PartialEq)]
pub struct StehfestResult {
    pub value: f64,
    pub lower_order_value: Option<f64>,
    pub status: Status,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Stehfest weights `V_1 .. V_n`.
pub fn stehfest_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::domain(format!("Stehfest order must be even and >= 2, got {n}")));
    }
    let half = n / 2;
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut acc = 0.0;
        for j in (k + 1) / 2..=k.min(half) {
            acc += (j as f64).powi(half as i32) * factorial(2 * j)
                / (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
        }
        let sign = if (k + half) % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * acc);
    }
    Ok(out)
}

fn stehfest_sum<F: Fn(f64) -> Result<f64>>(f: &F, t: f64, n: usize) -> Result<f64> {
    let a = LN_2 / t;
    let mut acc = 0.0;
    for (i, v) in stehfest_weights(n)?.into_iter().enumerate() {
        acc += v * f(a * (i + 1) as f64)?;
    }
    Ok(a * acc)
}

/// Gaver-Stehfest inversion from real-axis samples. Intended as a cross-check.
pub fn invert_gaver_stehfest<F: Fn(f64) -> Result<f64>>(f: F, t: f64, order: usize) -> Result<StehfestResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    let value = stehfest_sum(&f, t, order)?;
    if !value.is_finite() {
        return Err(Error::numeric("Gaver-Stehfest sum is not finite"));
    }
    let lower_order_value = if order >= 4 { Some(stehfest_sum(&f, t, order - 2)?) } else { None };
    let status = match lower_order_value {
        Some(lo) if (value - lo).abs() > STEHFEST_AGREEMENT_TOL * value.abs().max(1e-300) => Status::Warning(format!(
            "orders {order} and {} disagree: {value:.6e} vs {lo:.6e}",
            order - 2
        )),
        _ => Status::Ok,
    };
    Ok(StehfestResult { value, lower_order_value, status })
}

/// A truncated series value with the size of its first omitted term.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub omitted_bound: f64,
    pub status: Status,
}

/// Smallest mode count whose first omitted factor `exp(-(Mπ/A)² t_min)` is below [`MODE_CUTOFF`].
pub fn auto_mode_count(a_len: f64, t_min: f64) -> Result<usize> {
    if !(a_len > 0.0 && t_min > 0.0) {
        return Err(Error::domain("mode count needs positive length and time"));
    }
    let m = (a_len / PI * (-MODE_CUTOFF.ln() / t_min).sqrt()).floor() as usize + 1;
    Ok(m.max(1))
}

/// Residue series for the inverse transform of `sinh(B√s) / sinh(A√s)`:
/// `Σ 2 (-1)^{n+1} (nπ/A²) sin(nπB/A) exp(-(nπ/A)² t)`.
pub fn sinh_ratio_series(b_len: f64, a_len: f64, t: f64, m: usize) -> Result<SeriesValue> {
    if !(b_len > 0.0 && b_len < a_len) || !a_len.is_finite() {
        return Err(Error::domain(format!("need 0 < B < A, got B = {b_len}, A = {a_len}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    if m == 0 {
        return Err(Error::domain("mode count must be at least 1"));
    }
    let k = PI / a_len;
    let mut acc = 0.0;
    for n in 1..=m {
        let kn = k * n as f64;
        let decay = (-kn * kn * t).exp();
        if decay == 0.0 {
            break;
        }
        let sign = if n % 2 == 1 { 2.0 } else { -2.0 };
        acc += sign * kn / a_len * (kn * b_len).sin() * decay;
    }
    let kn = k * (m + 1) as f64;
    let omitted_bound = 2.0 * kn / a_len * (-kn * kn * t).exp();
    let status = if omitted_bound > SERIES_WARN_TOL {
        Status::Warning(format!("first omitted term is {omitted_bound:.3e}; raise the mode count above {m}"))
    } else {
        Status::Ok
    };
    Ok(SeriesValue { value: acc, omitted_bound, status })
}

/// Time integral of [`sinh_ratio_series`] over the span where `m` modes are adequate.
///
/// Starts where the first omitted factor reaches [`MODE_CUTOFF`]; whatever mass
/// lies before that point is not captured, so `m` must resolve the short-time peak.
pub fn sinh_ratio_integral(b_len: f64, a_len: f64, m: usize) -> Result<QuadResult> {
    let k = PI / a_len;
    let t_lo = -MODE_CUTOFF.ln() / (k * m as f64).powi(2);
    let t_hi = 40.0 / (k * k);
    let f = |t: f64| sinh_ratio_series(b_len, a_len, t, m).map(|v| v.value).unwrap_or(f64::NAN);
    sinh_ratio_series(b_len, a_len, t_hi, m)?;
    integrate_log(f, t_lo, t_hi, 1e-12, 1e-11)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn talbot_textbook_pairs() {
        let r = invert_talbot(&|s: Complex64| Ok(1.0 / (s + 1.0)), 1.0, TALBOT_DEFAULT_NODES).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-9);
        assert!(r.status.is_ok());
        let r = invert_talbot(&|s: Complex64| Ok(1.0 / (s * s)), 3.0, TALBOT_DEFAULT_NODES).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn talbot_shifted_contour() {
        let k = LaplaceKernel::new(|s: Complex64| Ok(1.0 / (s - 0.5)), 0.5);
        let r = invert_talbot(&k, 2.0, TALBOT_DEFAULT_NODES).unwrap();
        assert!((r.value - 1.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn talbot_rejects_bad_time() {
        assert!(invert_talbot(&|s: Complex64| Ok(1.0 / s), 0.0, 32).is_err());
    }

    #[test]
    fn stehfest_pairs() {
        let r = invert_gaver_stehfest(|s| Ok(1.0 / (s + 1.0)), 1.0, STEHFEST_DEFAULT_ORDER).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-6);
        for t in [0.1, 1.0, 7.0] {
            let r = invert_gaver_stehfest(|s| Ok(1.0 / s), t, STEHFEST_DEFAULT_ORDER).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8);
        }
        assert!(invert_gaver_stehfest(|s| Ok(1.0 / s), 1.0, 7).is_err());
    }

    #[test]
    fn stehfest_weights_sum_to_zero() {
        let w = stehfest_weights(14).unwrap();
        assert!(w.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn auto_modes_meet_cutoff() {
        let m = auto_mode_count(8.0, 0.5).unwrap();
        let k = PI / 8.0;
        assert!((-(k * m as f64).powi(2) * 0.5).exp() < MODE_CUTOFF);
        assert!((-(k * (m - 1) as f64).powi(2) * 0.5).exp() >= MODE_CUTOFF);
    }

    #[test]
    fn sinh_series_flags_short_truncation() {
        let v = sinh_ratio_series(3.0, 8.0, 0.01, 5).unwrap();
        assert!(!v.status.is_ok());
        let v = sinh_ratio_series(3.0, 8.0, 10.0, 60).unwrap();
        assert!(v.status.is_ok());
    }

    #[test]
    fn sinh_series_matches_talbot() {
        let (b, a) = (3.0, 8.0);
        let k = |s: Complex64| {
            let r = s.sqrt();
            Ok((-(r * (a - b))).exp() * (1.0 - (-2.0 * b * r).exp()) / (1.0 - (-2.0 * a * r).exp()))
        };
        let t = 10.0;
        let series = sinh_ratio_series(b, a, t, auto_mode_count(a, t).unwrap()).unwrap();
        let talbot = invert_talbot(&k, t, TALBOT_DEFAULT_NODES).unwrap();
        assert!((series.value - talbot.value).abs() < 1e-8);
    }

    #[test]
    fn sinh_series_integral_is_the_ratio() {
        let q = sinh_ratio_integral(3.0, 8.0, 400).unwrap();
        assert!((q.value - 0.375).abs() < 1e-8, "{}", q.value);
    }
}
