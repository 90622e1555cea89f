//! Time grids and sampled densities.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance below which negative density samples count as truncation noise.
pub const NEGATIVE_NOISE: f64 = 1e-9;

/// A uniform time grid `start, start + step, ..., end` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    points: usize,
}

impl TimeGrid {
    pub fn uniform(start: f64, end: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::domain("time grid is empty"));
        }
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::domain("time grid bounds must be finite"));
        }
        if points == 1 && start != end {
            return Err(Error::domain("a single-point grid needs start == end"));
        }
        if points > 1 && end <= start {
            return Err(Error::domain(format!(
                "time grid end {end} must exceed start {start}"
            )));
        }
        Ok(Self { start, end, points })
    }

    /// Grid `0, dt, 2 dt, ..., n_steps dt`.
    pub fn from_step(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::domain("time grid needs at least one step"));
        }
        Self::uniform(0.0, dt * n_steps as f64, n_steps + 1)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn step(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.end - self.start) / (self.points - 1) as f64
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.end
        } else {
            self.start + self.step() * i as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.at(i)).collect()
    }
}

/// Which construction produced a [`DensityCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Numerical inversion of the closed Laplace-domain form.
    Laplace,
    /// Alternating partial sum of filtration terms.
    Series,
    /// Time-domain filtration with moving boundaries.
    Moving,
    /// Eigenfunction expansion.
    Eigen,
    /// Monte Carlo histogram.
    MonteCarlo,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Laplace => "laplace",
            Method::Series => "series",
            Method::Moving => "moving",
            Method::Eigen => "eigen",
            Method::MonteCarlo => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A first-passage density sampled on strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    method: Method,
    trunc_order: usize,
}

impl DensityCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>, method: Method, trunc_order: usize) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::domain("density curve is empty"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("curve times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("{method} curve contains non-finite values")));
        }
        Ok(Self {
            times,
            values,
            method,
            trunc_order,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn trunc_order(&self) -> usize {
        self.trunc_order
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices of samples more negative than [`NEGATIVE_NOISE`].
    pub fn flagged_negatives(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < -NEGATIVE_NOISE)
            .map(|(i, _)| i)
            .collect()
    }

    /// Linear interpolation; zero outside the sampled range.
    pub fn interpolate(&self, t: f64) -> f64 {
        let ts = &self.times;
        if t < ts[0] || t > ts[ts.len() - 1] {
            return 0.0;
        }
        let j = ts.partition_point(|&x| x <= t);
        if j == 0 {
            return self.values[0];
        }
        if j >= ts.len() {
            return self.values[ts.len() - 1];
        }
        let (t0, t1) = (ts[j - 1], ts[j]);
        let w = (t - t0) / (t1 - t0);
        self.values[j - 1] * (1.0 - w) + self.values[j] * w
    }

    /// Trapezoid integral over `[a, b]` of the piecewise-linear interpolant.
    pub fn integrate_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let ts = &self.times;
        let lo = a.max(ts[0]);
        let hi = b.min(ts[ts.len() - 1]);
        if hi <= lo {
            return 0.0;
        }
        let mut knots = vec![lo];
        knots.extend(ts.iter().copied().filter(|&t| t > lo && t < hi));
        knots.push(hi);
        knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.interpolate(w[0]) + self.interpolate(w[1])))
            .sum()
    }

    /// Trapezoid integral over the whole sampled range.
    pub fn integral(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Largest absolute pointwise difference between two curves on the same grid.
pub fn sup_distance(a: &DensityCurve, b: &DensityCurve) -> Result<f64> {
    check_same_grid(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Trapezoid L1 distance between two curves on the same grid.
pub fn l1_distance(a: &DensityCurve, b: &DensityCurve) -> Result<f64> {
    check_same_grid(a, b)?;
    let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    Ok(a.times
        .windows(2)
        .zip(d.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum())
}

fn check_same_grid(a: &DensityCurve, b: &DensityCurve) -> Result<()> {
    let same = a.len() == b.len()
        && a.times
            .iter()
            .zip(&b.times)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if same {
        Ok(())
    } else {
        Err(Error::domain("curves are sampled on different grids"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = TimeGrid::uniform(0.5, 200.0, 400).unwrap();
        assert_eq!(g.at(0), 0.5);
        assert_eq!(g.at(399), 200.0);
        assert_eq!(g.times().len(), 400);
        assert!(TimeGrid::uniform(1.0, 2.0, 0).is_err());
        assert!(TimeGrid::uniform(2.0, 1.0, 5).is_err());
    }

    #[test]
    fn step_grid_starts_at_zero() {
        let g = TimeGrid::from_step(0.25, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.end(), 2.0);
        assert!((g.step() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn curve_rejects_unsorted_times() {
        let r = DensityCurve::new(vec![0.0, 1.0, 1.0], vec![0.0; 3], Method::Eigen, 1);
        assert!(r.is_err());
    }

    #[test]
    fn partial_integrals_add_up() {
        let ts: Vec<f64> = (0..101).map(|i| i as f64 * 0.01).collect();
        let vs: Vec<f64> = ts.iter().map(|t| 3.0 * t * t).collect();
        let c = DensityCurve::new(ts, vs, Method::Series, 2).unwrap();
        let whole = c.integral();
        let split = c.integrate_between(0.0, 0.333) + c.integrate_between(0.333, 1.0);
        assert!((whole - split).abs() < 1e-12);
        assert!((whole - 1.0).abs() < 1e-3);
    }

    #[test]
    fn small_negatives_are_not_flagged() {
        let c = DensityCurve::new(vec![0.0, 1.0, 2.0], vec![-1e-12, -1e-6, 0.5], Method::Series, 3).unwrap();
        assert_eq!(c.flagged_negatives(), vec![1]);
    }
}
