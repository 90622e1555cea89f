//! Stochastic models and their one-boundary first-passage kernels.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::laplace::{invert_talbot, TALBOT_DEFAULT_NODES};
use crate::specfun::{u_pm_log_ratios, Sign};

/// Parameters of an Ornstein-Uhlenbeck process with potential `U = k (x - a)² / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    d: f64,
    gamma: f64,
    k: f64,
    a: f64,
}

impl OuParams {
    pub fn new(d: f64, gamma: f64, k: f64, a: f64) -> Result<Self> {
        check_positive("D", d)?;
        check_positive("gamma", gamma)?;
        check_positive("k", k)?;
        check_finite("a", a)?;
        Ok(Self { d, gamma, k, a })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Position of the potential minimum.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Relaxation time `γ/k`.
    pub fn tau(&self) -> f64 {
        self.gamma / self.k
    }

    /// Squared stationary width `D τ`.
    pub fn b2(&self) -> f64 {
        self.d * self.tau()
    }

    pub fn b(&self) -> f64 {
        self.b2().sqrt()
    }
}

/// The three supported models.
///
/// `Biased` stores the drift `v` directly. Use [`ProcessSpec::biased_from_slope`]
/// to build it from a potential `U(x) = -α x` and friction `γ` (`v = α/γ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessSpec {
    Free { d: f64 },
    Biased { d: f64, v: f64 },
    Ou(OuParams),
}

impl ProcessSpec {
    pub fn free(d: f64) -> Result<Self> {
        check_positive("D", d)?;
        Ok(ProcessSpec::Free { d })
    }

    pub fn biased(d: f64, v: f64) -> Result<Self> {
        check_positive("D", d)?;
        check_finite("v", v)?;
        Ok(ProcessSpec::Biased { d, v })
    }

    /// Drift `v = α/γ` for the potential `U(x) = -α x`.
    pub fn biased_from_slope(d: f64, gamma: f64, alpha: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_finite("alpha", alpha)?;
        Self::biased(d, alpha / gamma)
    }

    pub fn ou(d: f64, gamma: f64, k: f64, a: f64) -> Result<Self> {
        Ok(ProcessSpec::Ou(OuParams::new(d, gamma, k, a)?))
    }

    /// Re-check the invariants; useful for specs built from public variants.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessSpec::Free { d } => Self::free(d).map(|_| ()),
            ProcessSpec::Biased { d, v } => Self::biased(d, v).map(|_| ()),
            ProcessSpec::Ou(p) => OuParams::new(p.d, p.gamma, p.k, p.a).map(|_| ()),
        }
    }

    pub fn d(&self) -> f64 {
        match self {
            ProcessSpec::Free { d } | ProcessSpec::Biased { d, .. } => *d,
            ProcessSpec::Ou(p) => p.d,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::Free { .. } => "free",
            ProcessSpec::Biased { .. } => "biased",
            ProcessSpec::Ou(_) => "ou",
        }
    }

    /// Deterministic velocity `-U'(x)/γ`.
    pub fn drift(&self, x: f64) -> f64 {
        match self {
            ProcessSpec::Free { .. } => 0.0,
            ProcessSpec::Biased { v, .. } => *v,
            ProcessSpec::Ou(p) => -(x - p.a) / p.tau(),
        }
    }

    /// The same model seen through `x ↦ L - x`.
    pub fn mirrored(&self, l: f64) -> Self {
        match *self {
            ProcessSpec::Free { d } => ProcessSpec::Free { d },
            ProcessSpec::Biased { d, v } => ProcessSpec::Biased { d, v: -v },
            ProcessSpec::Ou(p) => ProcessSpec::Ou(OuParams { a: l - p.a, ..p }),
        }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {x}")))
    }
}

/// The interval `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticBoundaries {
    l: f64,
}

impl StaticBoundaries {
    pub fn new(l: f64) -> Result<Self> {
        check_positive("L", l)?;
        Ok(Self { l })
    }

    pub fn length(&self) -> f64 {
        self.l
    }

    pub fn check_start(&self, x0: f64) -> Result<()> {
        check_interior(x0, self.l)
    }
}

pub(crate) fn check_interior(x0: f64, l: f64) -> Result<()> {
    check_positive("L", l)?;
    if x0.is_finite() && x0 > 0.0 && x0 < l {
        Ok(())
    } else {
        Err(Error::domain(format!("x0 = {x0} must lie strictly inside (0, {l})")))
    }
}

/// A boundary moving as `B(t) = start + velocity · t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTrajectory {
    pub start: f64,
    pub velocity: f64,
}

impl LinearTrajectory {
    pub fn fixed(at: f64) -> Self {
        Self { start: at, velocity: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.start + self.velocity * t
    }
}

/// Lower boundary `v0 · t`, upper boundary `L + vL · t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingBoundaries {
    l: f64,
    v0: f64,
    vl: f64,
}

impl MovingBoundaries {
    pub fn new(l: f64, v0: f64, vl: f64) -> Result<Self> {
        check_positive("L", l)?;
        check_finite("v0", v0)?;
        check_finite("vL", vl)?;
        Ok(Self { l, v0, vl })
    }

    pub fn length(&self) -> f64 {
        self.l
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn vl(&self) -> f64 {
        self.vl
    }

    pub fn lower(&self) -> LinearTrajectory {
        LinearTrajectory { start: 0.0, velocity: self.v0 }
    }

    pub fn upper(&self) -> LinearTrajectory {
        LinearTrajectory { start: self.l, velocity: self.vl }
    }

    pub fn gap(&self, t: f64) -> f64 {
        self.l + (self.vl - self.v0) * t
    }

    /// Time at which the boundaries meet, if they approach each other.
    pub fn collapse_time(&self) -> Option<f64> {
        let closing = self.v0 - self.vl;
        (closing > 0.0).then(|| self.l / closing)
    }

    /// Fail unless the gap stays positive on `[0, t_end]`.
    pub fn check_horizon(&self, t_end: f64) -> Result<()> {
        if self.gap(t_end) > 0.0 && self.gap(0.0) > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "boundaries meet before t = {t_end} (collapse at {:?})",
                self.collapse_time()
            )))
        }
    }
}

/// Free-space transition density `P(x, t | x0, t0)`.
pub fn transition_density(p: &ProcessSpec, x: f64, t: f64, x0: f64, t0: f64) -> Result<f64> {
    p.validate()?;
    let dt = t - t0;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("elapsed time must be positive, got {dt}")));
    }
    let (mean, var) = match *p {
        ProcessSpec::Free { d } => (x0, 2.0 * d * dt),
        ProcessSpec::Biased { d, v } => (x0 + v * dt, 2.0 * d * dt),
        ProcessSpec::Ou(o) => {
            let decay = (-dt / o.tau()).exp();
            (o.a + (x0 - o.a) * decay, o.b2() * (1.0 - decay * decay))
        }
    };
    Ok((-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// Laplace transform `F̃_I(s; A⇒B)` of the one-boundary first-passage density.
pub fn fpt_one_boundary_laplace(p: &ProcessSpec, a: f64, b: f64, s: Complex64) -> Result<Complex64> {
    p.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("kernel endpoints must be finite"));
    }
    if a == b {
        return Ok(Complex64::new(1.0, 0.0));
    }
    match *p {
        ProcessSpec::Free { d } => Ok((-(s / d).sqrt() * (b - a).abs()).exp()),
        ProcessSpec::Biased { d, v } => {
            let root = (s * (4.0 * d) + v * v).sqrt();
            Ok((-(root * (b - a).abs() - (b - a) * v) / (2.0 * d)).exp())
        }
        ProcessSpec::Ou(o) => {
            let sign = if a <= b { Sign::Minus } else { Sign::Plus };
            let lr = u_pm_log_ratios(p, sign, s, &[a - o.a], b - o.a)?;
            Ok(lr[0].exp())
        }
    }
}

/// One-boundary first-passage density `F_I(t; A⇒B)`.
///
/// Closed form for free and biased diffusion; fixed-Talbot inversion for OU.
pub fn fpt_one_boundary_time(p: &ProcessSpec, a: f64, b: f64, t: f64) -> Result<f64> {
    p.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    match *p {
        ProcessSpec::Free { d } => Ok(drifted_kernel(d, 0.0, a - b, t)),
        ProcessSpec::Biased { d, v } => Ok(drifted_kernel(d, v, a - b, t)),
        ProcessSpec::Ou(_) => {
            let r = invert_talbot(&|s| fpt_one_boundary_laplace(p, a, b, s), t, TALBOT_DEFAULT_NODES)?;
            Ok(r.value)
        }
    }
}

/// `|A-B| / √(4πDt³) · exp(-(A-B+vt)² / 4Dt)`.
pub(crate) fn drifted_kernel(d: f64, v: f64, a_minus_b: f64, t: f64) -> f64 {
    if a_minus_b == 0.0 {
        return 0.0;
    }
    let e = a_minus_b + v * t;
    a_minus_b.abs() / (4.0 * PI * d * t * t * t).sqrt() * (-e * e / (4.0 * d * t)).exp()
}

/// First-passage density from `A` at time `t0` to a linearly moving boundary.
///
/// The prefactor uses the distance at `t0`, the exponent the position at `t`.
pub fn moving_boundary_kernel(t0: f64, a: f64, t: f64, target: &LinearTrajectory, d: f64) -> Result<f64> {
    check_positive("D", d)?;
    let start_gap = target.at(t0) - a;
    if start_gap == 0.0 {
        return Err(Error::domain(format!("start point {a} lies on the boundary at t0 = {t0}")));
    }
    let dt = t - t0;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("elapsed time must be positive, got {dt}")));
    }
    Ok(moving_kernel_unchecked(start_gap.abs(), target.at(t) - a, dt, d))
}

#[inline]
pub(crate) fn moving_kernel_unchecked(start_gap: f64, end_offset: f64, dt: f64, d: f64) -> f64 {
    start_gap / (4.0 * PI * d * dt * dt * dt).sqrt() * (-end_offset * end_offset / (4.0 * d * dt)).exp()
}

/// Peak time of the `n`-th filtration term for the lower target.
pub fn characteristic_time(p: &ProcessSpec, n: usize, x0: f64, l: f64) -> Result<f64> {
    check_interior(x0, l)?;
    let dist = image_distance(n, x0, l);
    match *p {
        ProcessSpec::Free { d } => Ok(dist * dist / (6.0 * d)),
        ProcessSpec::Biased { d, v } => Ok(dist * dist / (3.0 * d + (9.0 * d * d + v * v * dist * dist).sqrt())),
        ProcessSpec::Ou(_) => Err(Error::domain("no closed-form characteristic time for the OU process")),
    }
}

/// Distance travelled by the `n`-th image path: `nL + x0` or `(n+1)L - x0`.
pub(crate) fn image_distance(n: usize, x0: f64, l: f64) -> f64 {
    if n % 2 == 0 {
        n as f64 * l + x0
    } else {
        (n + 1) as f64 * l - x0
    }
}

/// Default multiplier applied to the slowest relaxation time.
pub const NORMALIZATION_HORIZON_FACTOR: f64 = 20.0;

/// Time span `factor · L² / (π² D)` over which densities are integrated in mass checks.
pub fn normalization_horizon(p: &ProcessSpec, l: f64, factor: f64) -> f64 {
    factor * l * l / (PI * PI * p.d())
}

/// The four one-boundary transforms that make up every interval quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalKernels {
    pub x0_to_lower: Complex64,
    pub x0_to_upper: Complex64,
    pub lower_to_upper: Complex64,
    pub upper_to_lower: Complex64,
}

impl IntervalKernels {
    pub fn evaluate(p: &ProcessSpec, x0: f64, l: f64, s: Complex64) -> Result<Self> {
        match *p {
            ProcessSpec::Ou(o) => {
                p.validate()?;
                let a = o.a;
                let up = u_pm_log_ratios(p, Sign::Minus, s, &[x0 - a, -a], l - a)?;
                let down = u_pm_log_ratios(p, Sign::Plus, s, &[x0 - a, l - a], -a)?;
                Ok(Self {
                    x0_to_lower: down[0].exp(),
                    x0_to_upper: up[0].exp(),
                    lower_to_upper: up[1].exp(),
                    upper_to_lower: down[1].exp(),
                })
            }
            _ => Ok(Self {
                x0_to_lower: fpt_one_boundary_laplace(p, x0, 0.0, s)?,
                x0_to_upper: fpt_one_boundary_laplace(p, x0, l, s)?,
                lower_to_upper: fpt_one_boundary_laplace(p, 0.0, l, s)?,
                upper_to_lower: fpt_one_boundary_laplace(p, l, 0.0, s)?,
            }),
        }
    }

    /// Round-trip factor `F̃(0⇒L) F̃(L⇒0)`.
    pub fn round_trip(&self) -> Complex64 {
        self.lower_to_upper * self.upper_to_lower
    }

    /// Swap the roles of the two boundaries.
    pub fn swapped(&self) -> Self {
        Self {
            x0_to_lower: self.x0_to_upper,
            x0_to_upper: self.x0_to_lower,
            lower_to_upper: self.upper_to_lower,
            upper_to_lower: self.lower_to_upper,
        }
    }
}
