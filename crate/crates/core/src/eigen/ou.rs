//! Eigenfunction expansion for the Ornstein-Uhlenbeck process on `[0, L]`.
//!
//! With `z = (x - a)/b` and `P = exp(-(x-a)²/4b²) ψ`, the forward equation
//! separates into `ψ'' + (1/2 - z²/4 + s) ψ = 0` with decay `exp(-s t/τ)`.
//! Even and odd solutions about `z = 0` are integrated by Taylor continuation;
//! their Dirichlet determinant is scanned for sign changes and bisected.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::curve::{DensityCurve, Method, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::filtration::Target;
use crate::laplace::SeriesValue;
use crate::processes::{check_interior, OuParams, ProcessSpec};
use crate::quad::integrate;
use crate::specfun::{WeberOde, WeberPath};

/// Scan step as a fraction of the local eigenvalue gap.
const SCAN_FRACTION: f64 = 0.05;
const SCAN_RETRIES: usize = 3;
const BISECT_MAX: usize = 200;

/// One eigenvalue with its eigenfunction data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    /// 1-based mode index.
    pub index: usize,
    /// Dimensionless eigenvalue; the mode decays as `exp(-s t/τ)`.
    pub s: f64,
    /// `A` in `Y = Y_even + A Y_odd` (infinite when `Y_odd(L) = 0`).
    pub a_coef: f64,
    /// `√(∫₀^L Ŷ² dx)` for the unnormalised shooting solution `Ŷ`.
    pub norm: f64,
    /// Determinant at `s`, divided by the size of its two products.
    pub residual: f64,
}

struct Mode {
    entry: SpectrumEntry,
    /// Coefficients of `Y_even` and `Y_odd` in the normalised eigenfunction.
    ce: f64,
    co: f64,
    pos: [WeberPath; 2],
    neg: [WeberPath; 2],
}

impl Mode {
    fn eval_z(&self, z: f64) -> Result<(f64, f64)> {
        let paths = if z >= 0.0 { &self.pos } else { &self.neg };
        let (e, de) = paths[0].eval(z).ok_or_else(|| Error::numeric(format!("z = {z} is off the eigenfunction path")))?;
        let (o, dox) = paths[1].eval(z).ok_or_else(|| Error::numeric(format!("z = {z} is off the eigenfunction path")))?;
        Ok((self.ce * e.re + self.co * o.re, self.ce * de.re + self.co * dox.re))
    }
}

/// The first `M` modes of the OU generator on `[0, L]` with Dirichlet conditions.
pub struct OuEigenSystem {
    p: OuParams,
    l: f64,
    z0: f64,
    zl: f64,
    modes: Vec<Mode>,
}

struct Edge {
    ye0: f64,
    yo0: f64,
    yel: f64,
    yol: f64,
}

impl Edge {
    fn det(&self) -> f64 {
        self.ye0 * self.yol - self.yel * self.yo0
    }

    fn scaled_det(&self) -> f64 {
        let scale = (self.ye0 * self.yol).abs() + (self.yel * self.yo0).abs();
        if scale == 0.0 {
            0.0
        } else {
            self.det() / scale
        }
    }
}

fn real_value(st: &crate::specfun::ScaledState) -> f64 {
    st.w.re * st.log_scale.exp()
}

fn edges(s: f64, z0: f64, zl: f64) -> Edge {
    let ode = WeberOde::new(Complex64::new(s, 0.0));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let at = |w0, dw0, z: f64| real_value(&ode.propagate(0.0, w0, dw0, &[z])[0]);
    Edge {
        ye0: at(one, zero, z0),
        yo0: at(zero, one, z0),
        yel: at(one, zero, zl),
        yol: at(zero, one, zl),
    }
}

impl OuEigenSystem {
    pub fn new(p: &ProcessSpec, l: f64, m: usize) -> Result<Self> {
        let o = match p {
            ProcessSpec::Ou(o) => *o,
            _ => return Err(Error::domain("eigen system requires an Ornstein-Uhlenbeck process")),
        };
        p.validate()?;
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::domain(format!("L must be positive, got {l}")));
        }
        if m == 0 {
            return Err(Error::domain("mode count must be at least 1"));
        }
        let b = o.b();
        let z0 = -o.a() / b;
        let zl = (l - o.a()) / b;
        let mut fraction = SCAN_FRACTION;
        let mut last_err = None;
        for _ in 0..=SCAN_RETRIES {
            match scan(z0, zl, m, fraction) {
                Ok(roots) => {
                    let modes = roots
                        .into_iter()
                        .enumerate()
                        .map(|(i, s)| build_mode(i + 1, s, z0, zl, b))
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(Self { p: o, l, z0, zl, modes });
                }
                Err(e @ Error::MissedRoot(_)) => {
                    last_err = Some(e);
                    fraction *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn entries(&self) -> Vec<SpectrumEntry> {
        self.modes.iter().map(|m| m.entry).collect()
    }

    /// Decay rate `s_n / τ` of mode `n` (0-based).
    pub fn rate(&self, n: usize) -> f64 {
        self.modes[n].entry.s / self.p.tau()
    }

    fn to_z(&self, x: f64) -> Result<f64> {
        if !(0.0..=self.l).contains(&x) {
            return Err(Error::domain(format!("x = {x} outside [0, {}]", self.l)));
        }
        Ok(((x - self.p.a()) / self.p.b()).clamp(self.z0.min(self.zl), self.z0.max(self.zl)))
    }

    /// Normalised eigenfunction `ψ_n(x)` and its derivative in `x` (0-based `n`).
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<(f64, f64)> {
        let mode = self.modes.get(n).ok_or_else(|| Error::domain(format!("mode {n} not computed")))?;
        let (y, dy) = mode.eval_z(self.to_z(x)?)?;
        Ok((y, dy / self.p.b()))
    }

    /// Flux weights `c_n` so that the density is `Σ c_n exp(-s_n t/τ)`.
    fn weights(&self, target: Target, x0: f64) -> Result<Vec<f64>> {
        check_interior(x0, self.l)?;
        let (a, b2, d) = (self.p.a(), self.p.b2(), self.p.d());
        let (edge, sign) = match target {
            Target::Lower => (0.0, 1.0),
            Target::Upper => (self.l, -1.0),
        };
        let g = (-((edge - a).powi(2) - (x0 - a).powi(2)) / (4.0 * b2)).exp();
        (0..self.modes.len())
            .map(|n| {
                let (y0, _) = self.eigenfunction(n, x0)?;
                let (_, dy) = self.eigenfunction(n, edge)?;
                Ok(sign * d * g * y0 * dy)
            })
            .collect()
    }

    /// First-passage density at `target` from the truncated expansion.
    pub fn fpt(&self, target: Target, x0: f64, t: f64) -> Result<SeriesValue> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        let c = self.weights(target, x0)?;
        Ok(self.sum(&c, t))
    }

    fn sum(&self, c: &[f64], t: f64) -> SeriesValue {
        let value = c.iter().enumerate().map(|(n, cn)| cn * (-self.rate(n) * t).exp()).sum();
        let last = self.modes.len() - 1;
        // the next mode sits roughly one gap further out
        let gap = self.rate(last) - if last > 0 { self.rate(last - 1) } else { 0.0 };
        let omitted = c[last].abs() * (-(self.rate(last) + gap) * t).exp();
        let status = if omitted > crate::laplace::SERIES_WARN_TOL {
            crate::laplace::Status::Warning(format!("first omitted mode is about {omitted:.3e}"))
        } else {
            crate::laplace::Status::Ok
        };
        SeriesValue { value, omitted_bound: omitted, status }
    }

    pub fn fpt_curve(&self, target: Target, x0: f64, grid: &TimeGrid, exec: Execution) -> Result<DensityCurve> {
        let c = self.weights(target, x0)?;
        let times = grid.times();
        let values = try_map_indexed(exec, times.len(), |i| {
            let t = times[i];
            if t == 0.0 {
                Ok(0.0)
            } else if t > 0.0 {
                Ok(self.sum(&c, t).value)
            } else {
                Err(Error::domain(format!("t must be non-negative, got {t}")))
            }
        })?;
        DensityCurve::new(times, values, Method::Eigen, self.modes.len())
    }

    /// Total probability absorbed at `target`.
    ///
    /// Integrates the expansion analytically from `t_lo = 30 τ / s_M`, where
    /// every retained mode is still resolved; the mass before `t_lo` is that of
    /// a passage shorter than thirty times the fastest retained mode, which is
    /// negligible for interior starting points.
    pub fn mass(&self, target: Target, x0: f64) -> Result<f64> {
        let c = self.weights(target, x0)?;
        let t_lo = 30.0 / self.rate(self.modes.len() - 1);
        Ok(c.iter()
            .enumerate()
            .map(|(n, cn)| cn / self.rate(n) * (-self.rate(n) * t_lo).exp())
            .sum())
    }
}

/// Sign-change scan in `s` with bisection; checks each root's index by counting nodes.
fn scan(z0: f64, zl: f64, m: usize, fraction: f64) -> Result<Vec<f64>> {
    let len = (zl - z0).abs();
    let unit = (PI / len).powi(2);
    let mut roots = Vec::with_capacity(m);
    let mut sa = -0.5;
    let mut da = edges(sa, z0, zl).det();
    let s_cap = 0.25 * z0.abs().max(zl.abs()).powi(2) + unit * ((m + 2) as f64).powi(2) * 4.0 + 10.0;
    while roots.len() < m {
        let step = fraction * (2 * roots.len() + 1) as f64 * unit;
        let sb = sa + step;
        if sb > s_cap {
            return Err(Error::MissedRoot(format!(
                "only {} of {m} eigenvalues found below s = {s_cap:.3e}",
                roots.len()
            )));
        }
        let db = edges(sb, z0, zl).det();
        if da == 0.0 || da.signum() != db.signum() {
            let s = if da == 0.0 { sa } else { bisect(sa, sb, da, z0, zl) };
            let nodes = count_nodes(s, z0, zl);
            if nodes != roots.len() {
                return Err(Error::MissedRoot(format!(
                    "eigenfunction at s = {s:.6e} has {nodes} interior zeros; expected {}",
                    roots.len()
                )));
            }
            roots.push(s);
            if da == 0.0 {
                sa = sb;
                da = db;
                continue;
            }
        }
        sa = sb;
        da = db;
    }
    Ok(roots)
}

fn bisect(mut lo: f64, mut hi: f64, mut dlo: f64, z0: f64, zl: f64) -> f64 {
    for _ in 0..BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        let dm = edges(mid, z0, zl).det();
        if dm == 0.0 {
            return mid;
        }
        if dm.signum() == dlo.signum() {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    let dl = edges(lo, z0, zl).scaled_det().abs();
    let dh = edges(hi, z0, zl).scaled_det().abs();
    if dl <= dh {
        lo
    } else {
        hi
    }
}

fn paths(s: f64, z_end: f64) -> [WeberPath; 2] {
    let ode = WeberOde::new(Complex64::new(s, 0.0));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [ode.path(0.0, one, zero, z_end), ode.path(0.0, zero, one, z_end)]
}

/// Samples of the shooting solution at the continuation nodes strictly inside the interval.
fn shooting_samples(s: f64, z0: f64, zl: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = (z0.min(zl), z0.max(zl));
    let pos = paths(s, hi.max(0.0));
    let neg = paths(s, lo.min(0.0));
    let (yel, yol) = {
        let p = if zl >= 0.0 { &pos } else { &neg };
        (p[0].eval(zl).expect("on path").0.re, p[1].eval(zl).expect("on path").0.re)
    };
    let mut pts: Vec<f64> = pos[0]
        .segments()
        .iter()
        .chain(neg[0].segments())
        .map(|s| s.z0)
        .filter(|z| *z > lo && *z < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.into_iter()
        .map(|z| {
            let p = if z >= 0.0 { &pos } else { &neg };
            let e = p[0].eval(z).expect("on path").0.re;
            let o = p[1].eval(z).expect("on path").0.re;
            (z, yol * e - yel * o)
        })
        .collect()
}

fn count_nodes(s: f64, z0: f64, zl: f64) -> usize {
    let samples = shooting_samples(s, z0, zl);
    let peak = samples.iter().fold(0.0f64, |m, (_, y)| m.max(y.abs()));
    let mut last_sign = 0.0;
    let mut count = 0;
    for (_, y) in samples {
        if y.abs() <= 1e-8 * peak {
            continue;
        }
        let sg = y.signum();
        if last_sign != 0.0 && sg != last_sign {
            count += 1;
        }
        last_sign = sg;
    }
    count
}

fn build_mode(index: usize, s: f64, z0: f64, zl: f64, b: f64) -> Result<Mode> {
    let (lo, hi) = (z0.min(zl), z0.max(zl));
    let pos = paths(s, hi.max(0.0));
    let neg = paths(s, lo.min(0.0));
    let pick = |z: f64| if z >= 0.0 { &pos } else { &neg };
    let yel = pick(zl)[0].eval(zl).expect("on path").0.re;
    let yol = pick(zl)[1].eval(zl).expect("on path").0.re;
    let shoot = |z: f64| -> f64 {
        let p = pick(z);
        yol * p[0].eval(z).expect("on path").0.re - yel * p[1].eval(z).expect("on path").0.re
    };
    let sq = |z: f64| shoot(z).powi(2);
    let mut integral = 0.0;
    for (a, c) in [(lo, hi.min(0.0)), (lo.max(0.0), hi)] {
        if c > a {
            integral += integrate(sq, a, c, 0.0, 1e-13)?.value;
        }
    }
    let norm = (integral * b).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::numeric(format!("eigenfunction {index} has degenerate norm")));
    }
    let residual = edges(s, z0, zl).scaled_det();
    Ok(Mode {
        entry: SpectrumEntry {
            index,
            s,
            a_coef: -yel / yol,
            norm,
            residual,
        },
        ce: yol / norm,
        co: -yel / norm,
        pos,
        neg,
    })
}

/// The first `m` eigenvalues and eigenfunction constants.
pub fn ou_spectrum(p: &ProcessSpec, l: f64, m: usize) -> Result<Vec<SpectrumEntry>> {
    Ok(OuEigenSystem::new(p, l, m)?.entries())
}

/// Density of arrival at `x = 0` from an `m`-mode expansion.
///
/// Builds the spectrum on every call; use [`OuEigenSystem`] for sweeps.
pub fn ee_ou_fpt(t: f64, p: &ProcessSpec, x0: f64, l: f64, m: usize) -> Result<SeriesValue> {
    OuEigenSystem::new(p, l, m)?.fpt(Target::Lower, x0, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> ProcessSpec {
        ProcessSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn residuals_and_ordering() {
        let sys = OuEigenSystem::new(&fig4(), 3.0, 30).unwrap();
        let e = sys.entries();
        assert!(e[0].s > 0.0);
        for w in e.windows(2) {
            assert!(w[1].s > w[0].s);
        }
        for x in &e {
            assert!(x.residual.abs() < 1e-10, "mode {} residual {}", x.index, x.residual);
        }
    }

    #[test]
    fn orthonormal_modes() {
        let sys = OuEigenSystem::new(&fig4(), 3.0, 10).unwrap();
        for m in 0..10 {
            for n in m..10 {
                let q = integrate(
                    |x| sys.eigenfunction(m, x).unwrap().0 * sys.eigenfunction(n, x).unwrap().0,
                    0.0,
                    3.0,
                    1e-13,
                    1e-12,
                )
                .unwrap();
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((q.value - want).abs() < 1e-8, "({m},{n}) -> {}", q.value);
            }
        }
    }

    #[test]
    fn symmetric_minimum_factorises() {
        // with a = L/2 the modes alternate between even and odd about the centre
        let p = ProcessSpec::ou(1.0, 1.0, 1.0, 1.5).unwrap();
        let sys = OuEigenSystem::new(&p, 3.0, 6).unwrap();
        let zl = 1.5;
        for (i, e) in sys.entries().iter().enumerate() {
            let edge = edges(e.s, -zl, zl);
            let factor = if i % 2 == 0 { edge.yel } else { edge.yol };
            let scale = edge.yel.abs().max(edge.yol.abs());
            assert!(factor.abs() < 1e-9 * scale, "mode {i}: {factor}");
        }
    }

    #[test]
    fn longer_interval_lowers_spectrum() {
        let p = fig4();
        let a = ou_spectrum(&p, 2.5, 5).unwrap();
        let b = ou_spectrum(&p, 3.0, 5).unwrap();
        let c = ou_spectrum(&p, 3.5, 5).unwrap();
        for i in 0..5 {
            assert!(a[i].s > b[i].s && b[i].s > c[i].s);
        }
    }

    #[test]
    fn flux_vanishes_at_short_times() {
        let v = ee_ou_fpt(0.02, &fig4(), 1.5, 3.0, 30).unwrap();
        assert!(v.value.abs() < 1e-6, "{}", v.value);
    }

    #[test]
    fn rejects_other_processes() {
        assert!(OuEigenSystem::new(&ProcessSpec::free(1.0).unwrap(), 3.0, 5).is_err());
    }
}
