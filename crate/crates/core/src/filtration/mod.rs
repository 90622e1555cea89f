//! Two-boundary densities from one-boundary kernels by repeated filtering.
//!
//! The density of first arrival at the lower boundary is the alternating sum
//! `Σ (-1)^n f^(n)`, where `f^(n)` is the one-boundary density of paths that
//! touch the boundaries `n + 1` times in alternation, ending on the target.
//! In the Laplace domain each term is a product of one-boundary transforms,
//! and the finite sum closes into a geometric form that is exact for every
//! even truncation order.

mod moving;

pub use moving::{ftwo_moving, MovingResult, MAX_MOVING_ORDER};

use num_complex::Complex64;

use crate::curve::{DensityCurve, Method, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::laplace::{invert_talbot, invert_talbot_many, TALBOT_DEFAULT_NODES};
use crate::processes::{characteristic_time, check_interior, image_distance, IntervalKernels, ProcessSpec};

/// Default tolerance on the size of the first omitted term.
pub const DEFAULT_CONV_TOL: f64 = 1e-8;

/// Largest order considered by automatic truncation.
pub const MAX_AUTO_ORDER: usize = 64;

/// Terms below this size are ignored by the ratio test.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Which absorbing boundary the density refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Target {
    #[default]
    Lower,
    Upper,
}

impl Target {
    pub fn other(self) -> Self {
        match self {
            Target::Lower => Target::Upper,
            Target::Upper => Target::Lower,
        }
    }
}

/// Truncation order of the filtration series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Fixed(usize),
    Auto,
}

/// Transforms of the first `n_terms` filtration terms.
fn laplace_terms(k: &IntervalKernels, n_terms: usize) -> Vec<Complex64> {
    let p = k.round_trip();
    let odd_head = k.x0_to_upper * k.upper_to_lower;
    let mut even = k.x0_to_lower;
    let mut odd = odd_head;
    let mut out = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        if n % 2 == 0 {
            out.push(even);
            even *= p;
        } else {
            out.push(odd);
            odd *= p;
        }
    }
    out
}

fn oriented_kernels(p: &ProcessSpec, target: Target, x0: f64, l: f64, s: Complex64) -> Result<IntervalKernels> {
    let k = IntervalKernels::evaluate(p, x0, l, s)?;
    Ok(match target {
        Target::Lower => k,
        Target::Upper => k.swapped(),
    })
}

/// Transform of the `n`-th filtration term for arrival at `x = 0`.
pub fn f_n_laplace(p: &ProcessSpec, n: usize, x0: f64, l: f64, s: Complex64) -> Result<Complex64> {
    f_n_laplace_to(p, Target::Lower, n, x0, l, s)
}

pub fn f_n_laplace_to(p: &ProcessSpec, target: Target, n: usize, x0: f64, l: f64, s: Complex64) -> Result<Complex64> {
    check_interior(x0, l)?;
    let k = oriented_kernels(p, target, x0, l, s)?;
    Ok(laplace_terms(&k, n + 1)[n])
}

/// Two-boundary transform `F̃_II(s; x0⇒0)` from the closed truncation of even order `order`.
pub fn ftwo_laplace(p: &ProcessSpec, x0: f64, l: f64, s: Complex64, order: usize) -> Result<Complex64> {
    ftwo_laplace_to(p, Target::Lower, x0, l, s, order)
}

pub fn ftwo_laplace_to(p: &ProcessSpec, target: Target, x0: f64, l: f64, s: Complex64, order: usize) -> Result<Complex64> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::domain(format!("closed-form order must be even and >= 2, got {order}")));
    }
    check_interior(x0, l)?;
    let k = oriented_kernels(p, target, x0, l, s)?;
    Ok(ftwo_from_kernels(&k, order)?)
}

fn ftwo_from_kernels(k: &IntervalKernels, order: usize) -> Result<Complex64> {
    let terms = laplace_terms(k, order);
    let num: Complex64 = terms
        .iter()
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { *v } else { -*v })
        .sum();
    let den = 1.0 - k.round_trip().powu((order / 2) as u32);
    if den.norm() < 1e-300 {
        return Err(Error::domain("closed-form denominator vanishes"));
    }
    Ok(num / den)
}

/// Unsigned terms `f^(0)(t), ..., f^(n_terms-1)(t)` for arrival at `target`.
pub fn filtration_terms(p: &ProcessSpec, target: Target, x0: f64, l: f64, t: f64, n_terms: usize) -> Result<Vec<f64>> {
    check_interior(x0, l)?;
    p.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(vec![0.0; n_terms]);
    }
    let (q, y0) = match target {
        Target::Lower => (*p, x0),
        Target::Upper => (p.mirrored(l), l - x0),
    };
    match q {
        ProcessSpec::Free { d } => Ok(image_terms(d, 0.0, y0, l, t, n_terms)),
        ProcessSpec::Biased { d, v } => Ok(image_terms(d, v, y0, l, t, n_terms)),
        ProcessSpec::Ou(_) => {
            let inv = invert_talbot_many(
                |s| Ok(laplace_terms(&IntervalKernels::evaluate(&q, y0, l, s)?, n_terms)),
                t,
                TALBOT_DEFAULT_NODES,
            )?;
            Ok(inv.into_iter().map(|r| r.value).collect())
        }
    }
}

/// Image-path closed forms for free (`v = 0`) and biased diffusion:
/// even `n` starts at `nL + x0` with weight `exp(nLv/2D)`, odd `n` at
/// `-((n+1)L - x0)` with weight `exp(-(n+1)Lv/2D)`.
fn image_terms(d: f64, v: f64, x0: f64, l: f64, t: f64, n_terms: usize) -> Vec<f64> {
    (0..n_terms)
        .map(|n| {
            let dist = image_distance(n, x0, l);
            let (offset, log_w) = if n % 2 == 0 {
                (dist, n as f64 * l * v / (2.0 * d))
            } else {
                (-dist, -((n + 1) as f64) * l * v / (2.0 * d))
            };
            let e = offset + v * t;
            let log_g = log_w - e * e / (4.0 * d * t);
            dist / (4.0 * std::f64::consts::PI * d * t * t * t).sqrt() * log_g.exp()
        })
        .collect()
}

#[cfg(test)]
fn image_term_direct(d: f64, v: f64, x0: f64, l: f64, t: f64, n: usize) -> f64 {
    let dist = image_distance(n, x0, l);
    if n % 2 == 0 {
        (n as f64 * l * v / (2.0 * d)).exp() * crate::processes::drifted_kernel(d, v, dist, t)
    } else {
        (-((n + 1) as f64) * l * v / (2.0 * d)).exp() * crate::processes::drifted_kernel(d, v, -dist, t)
    }
}

fn alternating_sum(terms: &[f64]) -> f64 {
    terms
        .iter()
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { *v } else { -*v })
        .sum()
}

fn check_ratio(terms: &[f64], t: f64) -> Result<()> {
    if terms.len() < 2 {
        return Ok(());
    }
    let last = terms[terms.len() - 1].abs();
    let prev = terms[terms.len() - 2].abs();
    if last > RATIO_FLOOR && last >= prev {
        return Err(Error::Convergence(format!(
            "term {} is not smaller than term {} at t = {t} ({last:.3e} vs {prev:.3e})",
            terms.len() - 1,
            terms.len() - 2
        )));
    }
    Ok(())
}

/// Partial sum `Σ_{n<order} (-1)^n f^(n)(t)` for arrival at `x = 0`.
pub fn ftwo_series_time(p: &ProcessSpec, x0: f64, l: f64, t: f64, order: usize) -> Result<f64> {
    ftwo_series_time_to(p, Target::Lower, x0, l, t, order)
}

pub fn ftwo_series_time_to(p: &ProcessSpec, target: Target, x0: f64, l: f64, t: f64, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::domain("series order must be at least 1"));
    }
    let terms = filtration_terms(p, target, x0, l, t, order)?;
    check_ratio(&terms, t)?;
    Ok(alternating_sum(&terms))
}

/// Ratio-test summary for the series truncated after term `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport {
    pub n: usize,
    /// `max_t |f^(n+1)(t) / f^(n)(t)|`.
    pub max_ratio: f64,
    /// `max_t |f^(n+1)(t)|`.
    pub first_omitted_sup: f64,
}

/// Ratio of consecutive terms `n + 1` and `n` over a set of times.
pub fn ratio_diagnostic(p: &ProcessSpec, target: Target, x0: f64, l: f64, times: &[f64], n: usize) -> Result<RatioReport> {
    let mut max_ratio: f64 = 0.0;
    let mut first_omitted_sup: f64 = 0.0;
    for &t in times {
        let terms = filtration_terms(p, target, x0, l, t, n + 2)?;
        let (num, den) = (terms[n + 1].abs(), terms[n].abs());
        first_omitted_sup = first_omitted_sup.max(num);
        let r = if num < 1e-300 {
            0.0
        } else if den < 1e-300 {
            f64::INFINITY
        } else {
            num / den
        };
        max_ratio = max_ratio.max(r);
    }
    Ok(RatioReport { n, max_ratio, first_omitted_sup })
}

/// Automatic truncation order.
///
/// Free and biased diffusion: the smallest order whose last term peaks after
/// `t_max`. OU: the smallest order whose first omitted term stays below
/// `conv_tol` on `times`.
pub fn auto_order(p: &ProcessSpec, target: Target, x0: f64, l: f64, times: &[f64], conv_tol: f64) -> Result<usize> {
    check_interior(x0, l)?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let (q, y0) = match target {
        Target::Lower => (*p, x0),
        Target::Upper => (p.mirrored(l), l - x0),
    };
    match q {
        ProcessSpec::Ou(_) => {
            let mut sup = vec![0.0f64; MAX_AUTO_ORDER + 1];
            for &t in times {
                for (s, v) in sup.iter_mut().zip(filtration_terms(p, target, x0, l, t, MAX_AUTO_ORDER + 1)?) {
                    *s = s.max(v.abs());
                }
            }
            (2..=MAX_AUTO_ORDER)
                .find(|&n| sup[n] < conv_tol)
                .ok_or_else(|| Error::Convergence(format!("no order up to {MAX_AUTO_ORDER} reaches tolerance {conv_tol:e}")))
        }
        _ => {
            for n in 2..=MAX_AUTO_ORDER {
                if characteristic_time(&q, n - 1, y0, l)? > t_max {
                    return Ok(n);
                }
            }
            Err(Error::Convergence(format!("t_max = {t_max} needs more than {MAX_AUTO_ORDER} terms")))
        }
    }
}

fn resolve_order(p: &ProcessSpec, target: Target, x0: f64, l: f64, times: &[f64], order: Order) -> Result<usize> {
    match order {
        Order::Fixed(0) => Err(Error::domain("series order must be at least 1")),
        Order::Fixed(n) => Ok(n),
        Order::Auto => auto_order(p, target, x0, l, times, DEFAULT_CONV_TOL),
    }
}

/// The truncated series sampled on a grid.
pub fn series_curve(
    p: &ProcessSpec,
    target: Target,
    x0: f64,
    l: f64,
    grid: &TimeGrid,
    order: Order,
    exec: Execution,
) -> Result<DensityCurve> {
    let times = grid.times();
    let n = resolve_order(p, target, x0, l, &times, order)?;
    let values = try_map_indexed(exec, times.len(), |i| ftwo_series_time_to(p, target, x0, l, times[i], n))?;
    DensityCurve::new(times, values, Method::Series, n)
}

/// Signed terms `(-1)^n f^(n)(t)` on a grid, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct TermsTable {
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl TermsTable {
    pub fn order(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, n: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[n]).collect()
    }
}

pub fn terms_table(
    p: &ProcessSpec,
    target: Target,
    x0: f64,
    l: f64,
    grid: &TimeGrid,
    order: Order,
    exec: Execution,
) -> Result<TermsTable> {
    let times = grid.times();
    let n = resolve_order(p, target, x0, l, &times, order)?;
    let rows = try_map_indexed(exec, times.len(), |i| {
        let mut terms = filtration_terms(p, target, x0, l, times[i], n)?;
        for (k, v) in terms.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
        Ok::<_, Error>(terms)
    })?;
    Ok(TermsTable { times, rows })
}

/// Talbot inversion of the closed even-order transform, sampled on a grid.
#[allow(clippy::too_many_arguments)]
pub fn laplace_curve(
    p: &ProcessSpec,
    target: Target,
    x0: f64,
    l: f64,
    grid: &TimeGrid,
    order: usize,
    nodes: usize,
    exec: Execution,
) -> Result<DensityCurve> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::domain(format!("closed-form order must be even and >= 2, got {order}")));
    }
    check_interior(x0, l)?;
    let times = grid.times();
    let values = try_map_indexed(exec, times.len(), |i| {
        let t = times[i];
        if t == 0.0 {
            return Ok(0.0);
        }
        let kernel = |s: Complex64| ftwo_laplace_to(p, target, x0, l, s, order);
        invert_talbot(&kernel, t, nodes).map(|r| r.value)
    })?;
    DensityCurve::new(times, values, Method::Laplace, order)
}

/// Small frequency at which the splitting probability is read off.
pub const SPLITTING_S0: f64 = 1e-7;

/// Probability of reaching `x = 0` before `x = L`, from the transform at `s → 0⁺`.
pub fn splitting_probability(p: &ProcessSpec, x0: f64, l: f64) -> Result<f64> {
    splitting_probability_to(p, Target::Lower, x0, l)
}

pub fn splitting_probability_to(p: &ProcessSpec, target: Target, x0: f64, l: f64) -> Result<f64> {
    let at = |s: f64| ftwo_laplace_to(p, target, x0, l, Complex64::new(s, 0.0), 2).map(|v| v.re);
    let a = at(SPLITTING_S0)?;
    let b = at(0.5 * SPLITTING_S0)?;
    Ok(2.0 * b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free() -> ProcessSpec {
        ProcessSpec::free(1.0).unwrap()
    }

    #[test]
    fn zeroth_term_is_the_one_boundary_kernel() {
        let p = ProcessSpec::biased(1.0, 0.2).unwrap();
        let s = Complex64::new(0.3, 0.1);
        let a = f_n_laplace(&p, 0, 3.0, 8.0, s).unwrap();
        let b = crate::processes::fpt_one_boundary_laplace(&p, 3.0, 0.0, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn free_terms_are_image_kernels() {
        let p = free();
        let s = Complex64::new(0.07, 0.3);
        for n in 0..7 {
            let got = f_n_laplace(&p, n, 5.0, 8.0, s).unwrap();
            let dist = image_distance(n, 5.0, 8.0);
            let want = crate::processes::fpt_one_boundary_laplace(&p, dist, 0.0, s).unwrap();
            assert!((got - want).norm() < 1e-12 * want.norm(), "n = {n}");
        }
    }

    #[test]
    fn biased_even_term_against_direct_product() {
        let (x0, l, v) = (6.0, 10.0, -0.3);
        let p = ProcessSpec::biased(1.0, v).unwrap();
        let s = Complex64::new(0.1, 0.0);
        let k = |a, b| crate::processes::fpt_one_boundary_laplace(&p, a, b, s).unwrap();
        let direct = k(x0, 0.0) * k(0.0, l) * k(l, 0.0);
        let got = f_n_laplace(&p, 2, x0, l, s).unwrap();
        assert!((got - direct).norm() < 1e-14);
        // image form: weight exp(2Lv/2D) times the kernel from 2L + x0
        let image = (2.0 * l * v / 2.0f64).exp() * k(2.0 * l + x0, 0.0);
        assert!((got - image).norm() < 1e-13 * got.norm());
    }

    #[test]
    fn closed_form_independent_of_order() {
        let p = free();
        let s = Complex64::new(0.05, 0.0);
        let a = ftwo_laplace(&p, 5.0, 8.0, s, 2).unwrap();
        let b = ftwo_laplace(&p, 5.0, 8.0, s, 4).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert!(ftwo_laplace(&p, 5.0, 8.0, s, 3).is_err());
    }

    #[test]
    fn starting_next_to_target() {
        let p = free();
        for s in [0.01, 0.5, 3.0] {
            let v = ftwo_laplace(&p, 1e-9, 8.0, Complex64::new(s, 0.0), 2).unwrap();
            assert!((v.re - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn free_splitting() {
        let v = splitting_probability(&free(), 5.0, 8.0).unwrap();
        assert!((v - 0.375).abs() < 1e-8, "{v}");
        assert!((splitting_probability(&free(), 1e-6, 8.0).unwrap() - 1.0).abs() < 1e-5);
        assert!(splitting_probability(&free(), 8.0 - 1e-6, 8.0).unwrap().abs() < 1e-5);
    }

    #[test]
    fn image_closed_form_matches_direct_kernels() {
        for v in [0.0, -0.3, 0.25] {
            let terms = image_terms(1.0, v, 6.0, 10.0, 7.5, 6);
            for (n, got) in terms.iter().enumerate() {
                let want = image_term_direct(1.0, v, 6.0, 10.0, 7.5, n);
                assert!((got - want).abs() <= 1e-14 * want.abs().max(1e-300), "v={v} n={n}");
            }
        }
    }

    #[test]
    fn ratio_reports() {
        let times: Vec<f64> = (0..=400).map(|i| 0.5 + i as f64 * (199.5 / 400.0)).collect();
        let r = ratio_diagnostic(&free(), Target::Lower, 5.0, 8.0, &times, 3).unwrap();
        assert!(r.max_ratio < 1.0);
        let r0 = ratio_diagnostic(&free(), Target::Lower, 5.0, 8.0, &[1e-3], 0).unwrap();
        assert_eq!(r0.max_ratio, 0.0);
    }

    #[test]
    fn symmetric_start_mirrors_terms() {
        for t in [0.7, 20.0, 500.0] {
            let lo = filtration_terms(&free(), Target::Lower, 4.0, 8.0, t, 6).unwrap();
            let up = filtration_terms(&free(), Target::Upper, 4.0, 8.0, t, 6).unwrap();
            assert_eq!(lo, up);
        }
    }

    #[test]
    fn auto_order_follows_peak_times() {
        let times = [0.5, 200.0];
        assert_eq!(auto_order(&free(), Target::Lower, 5.0, 8.0, &times, DEFAULT_CONV_TOL).unwrap(), 5);
        assert_eq!(auto_order(&free(), Target::Lower, 5.0, 8.0, &[5.0], DEFAULT_CONV_TOL).unwrap(), 2);
    }

    #[test]
    fn upper_target_by_reflection() {
        let p = ProcessSpec::biased(1.0, 0.2).unwrap();
        let m = p.mirrored(10.0);
        let a = ftwo_series_time_to(&p, Target::Upper, 6.0, 10.0, 3.0, 8).unwrap();
        let b = ftwo_series_time(&m, 4.0, 10.0, 3.0, 8).unwrap();
        assert_eq!(a, b);
    }
}
