//! Taylor-series continuation for Weber's equation `w'' = (z²/4 - ν - 1/2) w`.
//!
//! The coefficient is a quadratic polynomial in `z`, so the local Taylor
//! coefficients obey a four-term recurrence and each step is accurate to
//! rounding. Steps are kept short enough (`|q| h² <= 0.64`) that the local
//! series never cancels, which is what makes this usable where the global
//! ₁F₁ series is not: large complex orders and eigenvalues in the hundreds.

use num_complex::Complex64;

const MAX_STEP: f64 = 0.25;
const MAX_TERMS: usize = 90;
const RESCALE_HI: f64 = 1e100;
const RESCALE_LO: f64 = 1e-100;
/// `∫ Re √q dz` that the recessive start is placed beyond the last point;
/// contamination by the dominant solution shrinks like `exp(-2 × this)`.
const RECESSIVE_MARGIN: f64 = 22.0;

/// One Taylor step, stored as `terms[k] = c_k h^k` about `z0`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub z0: f64,
    pub h: f64,
    terms: Vec<Complex64>,
}

impl Segment {
    /// Value and derivative at `z0 + u`, `u` between 0 and `h`.
    pub fn eval(&self, z: f64) -> (Complex64, Complex64) {
        let x = (z - self.z0) / self.h;
        let mut w = Complex64::new(0.0, 0.0);
        let mut dw = Complex64::new(0.0, 0.0);
        for (k, a) in self.terms.iter().enumerate().rev() {
            w = w * x + a;
            if k > 0 {
                dw = dw * x + a * k as f64;
            }
        }
        (w, dw / self.h)
    }

    fn contains(&self, z: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 {
            (self.z0, self.z0 + self.h)
        } else {
            (self.z0 + self.h, self.z0)
        };
        z >= lo - 1e-14 && z <= hi + 1e-14
    }
}

/// A solution known at a point, as `exp(log_scale) * (w, w')`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledState {
    pub log_scale: f64,
    pub w: Complex64,
    pub dw: Complex64,
}

impl ScaledState {
    /// Complex logarithm of `w` (modulo 2πi).
    pub fn ln_w(&self) -> Complex64 {
        self.w.ln() + self.log_scale
    }

    /// Logarithmic derivative `w'/w`.
    pub fn log_derivative(&self) -> Complex64 {
        self.dw / self.w
    }
}

/// Weber's equation for a fixed order `ν`.
#[derive(Debug, Clone, Copy)]
pub struct WeberOde {
    c: Complex64,
}

impl WeberOde {
    pub fn new(nu: Complex64) -> Self {
        Self { c: nu + 0.5 }
    }

    pub fn q(&self, z: f64) -> Complex64 {
        Complex64::new(0.25 * z * z, 0.0) - self.c
    }

    fn step_size(&self, z: f64) -> f64 {
        let qmax = self.q(z).norm() + 0.5 * z.abs() * MAX_STEP + 0.25 * MAX_STEP * MAX_STEP;
        MAX_STEP.min(0.8 / qmax.sqrt())
    }

    /// Advance `(w, w')` from `z0` by `h`, returning the new state and the segment.
    pub fn step(&self, z0: f64, w: Complex64, dw: Complex64, h: f64) -> (Complex64, Complex64, Segment) {
        let q0 = self.q(z0);
        let q1 = 0.5 * z0 * h;
        let q2 = 0.25 * h * h;
        let h2 = h * h;
        let mut terms = Vec::with_capacity(32);
        terms.push(w);
        terms.push(dw * h);
        let mut scale = w.norm().max(dw.norm() * h.abs());
        let mut quiet = 0;
        for k in 0..MAX_TERMS {
            let ak = terms[k];
            let akm1 = if k >= 1 { terms[k - 1] } else { Complex64::new(0.0, 0.0) };
            let akm2 = if k >= 2 { terms[k - 2] } else { Complex64::new(0.0, 0.0) };
            let next = (q0 * ak + akm1 * q1 + akm2 * q2) * (h2 / ((k + 2) as f64 * (k + 1) as f64));
            let m = next.norm();
            terms.push(next);
            scale = scale.max(m);
            if k >= 3 && m <= 1e-18 * scale {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let seg = Segment { z0, h, terms };
        let (w1, dw1) = seg.eval(z0 + h);
        (w1, dw1, seg)
    }

    /// Integrate from `z_start` through `targets` (monotone in the direction
    /// of travel), returning the rescaled state at each target.
    pub fn propagate(&self, z_start: f64, w0: Complex64, dw0: Complex64, targets: &[f64]) -> Vec<ScaledState> {
        let mut out = Vec::with_capacity(targets.len());
        let mut z = z_start;
        let mut w = w0;
        let mut dw = dw0;
        let mut log_scale = 0.0;
        for &target in targets {
            let dir = if target >= z { 1.0 } else { -1.0 };
            while (target - z) * dir > 0.0 {
                let h = self.step_size(z).min((target - z).abs()) * dir;
                let (w1, dw1, _) = self.step(z, w, dw, h);
                z = if ((target - z) - h).abs() < 1e-15 { target } else { z + h };
                w = w1;
                dw = dw1;
                let n = w.norm().max(dw.norm());
                if n > RESCALE_HI || (n < RESCALE_LO && n > 0.0) {
                    w /= n;
                    dw /= n;
                    log_scale += n.ln();
                }
            }
            out.push(ScaledState { log_scale, w, dw });
        }
        out
    }

    /// Dense solution over `[z_start, z_end]` without rescaling.
    pub fn path(&self, z_start: f64, w0: Complex64, dw0: Complex64, z_end: f64) -> WeberPath {
        let dir = if z_end >= z_start { 1.0 } else { -1.0 };
        let mut segments = Vec::new();
        let mut z = z_start;
        let mut w = w0;
        let mut dw = dw0;
        while (z_end - z) * dir > 0.0 {
            let h = self.step_size(z).min((z_end - z).abs()) * dir;
            let (w1, dw1, seg) = self.step(z, w, dw, h);
            segments.push(seg);
            z = if ((z_end - z) - h).abs() < 1e-15 { z_end } else { z + h };
            w = w1;
            dw = dw1;
        }
        WeberPath {
            start: z_start,
            end: z_end,
            start_state: (w0, dw0),
            segments,
        }
    }

    /// The solution recessive as `z → +∞`, up to an arbitrary constant,
    /// evaluated at `points`. Results are in the order of `points`.
    pub fn recessive(&self, points: &[f64]) -> Vec<ScaledState> {
        if points.is_empty() {
            return Vec::new();
        }
        let top = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z_max = top;
        let mut acc = 0.0;
        let dz = 0.05;
        while acc < RECESSIVE_MARGIN || z_max < top + 1.0 {
            acc += self.q(z_max + 0.5 * dz).sqrt().re * dz;
            z_max += dz;
            if z_max > top + 400.0 {
                break;
            }
        }
        let q = self.q(z_max);
        let root = q.sqrt();
        let slope = if q.norm() > 1.0 {
            -root - Complex64::new(0.5 * z_max, 0.0) / (4.0 * q)
        } else {
            -root
        };
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| points[j].total_cmp(&points[i]));
        let sorted: Vec<f64> = order.iter().map(|&i| points[i]).collect();
        let states = self.propagate(z_max, Complex64::new(1.0, 0.0), slope, &sorted);
        let mut out = vec![states[0]; points.len()];
        for (k, &i) in order.iter().enumerate() {
            out[i] = states[k];
        }
        out
    }

    /// Steps the continuation would take between two points; used for error budgets.
    pub fn steps_between(&self, a: f64, b: f64) -> usize {
        let mut z = a.min(b);
        let end = a.max(b);
        let mut n = 0;
        while z < end {
            z += self.step_size(z);
            n += 1;
        }
        n
    }
}

/// Dense output of [`WeberOde::path`].
#[derive(Debug, Clone)]
pub struct WeberPath {
    start: f64,
    end: f64,
    start_state: (Complex64, Complex64),
    segments: Vec<Segment>,
}

impl WeberPath {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Value and derivative at `z`, which must lie on the path.
    pub fn eval(&self, z: f64) -> Option<(Complex64, Complex64)> {
        if self.segments.is_empty() {
            return (z == self.start).then_some(self.start_state);
        }
        // segments are ordered along the direction of travel
        let idx = if self.end >= self.start {
            self.segments.partition_point(|s| s.z0 + s.h < z)
        } else {
            self.segments.partition_point(|s| s.z0 + s.h > z)
        };
        let seg = self.segments.get(idx.min(self.segments.len() - 1))?;
        seg.contains(z).then(|| seg.eval(z))
    }

    /// Final state.
    pub fn last(&self) -> (Complex64, Complex64) {
        match self.segments.last() {
            Some(s) => s.eval(s.z0 + s.h),
            None => self.start_state,
        }
    }
}
