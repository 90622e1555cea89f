//! Filtration with linearly moving boundaries, in the time domain.
//!
//! Two chains are propagated level by level. `lower[n]` is the density of the
//! `(n+1)`-th alternating boundary contact when that contact is on the lower
//! boundary, `upper[n]` likewise for the upper one. Each level is a Volterra
//! convolution of the previous level of the opposite chain with the moving
//! boundary kernel, evaluated with the trapezoid rule on a uniform grid.

use super::Order;
use crate::curve::{DensityCurve, Method, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::processes::{moving_kernel_unchecked, LinearTrajectory, MovingBoundaries, ProcessSpec};

/// Largest number of levels computed before giving up on convergence.
pub const MAX_MOVING_ORDER: usize = 200;

/// Densities at both boundaries plus truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingResult {
    pub lower: DensityCurve,
    pub upper: DensityCurve,
    pub order: usize,
    /// Largest sample of the last included term over both chains.
    pub last_term_sup: f64,
}

fn convolve(
    src: LinearTrajectory,
    dst: LinearTrajectory,
    prev: &[f64],
    times: &[f64],
    dt: f64,
    d: f64,
    exec: Execution,
) -> Vec<f64> {
    map_indexed(exec, times.len(), |i| {
        let t = times[i];
        let target = dst.at(t);
        let mut acc = 0.0;
        // end points carry no weight: prev[0] = 0 and the kernel vanishes at τ = t
        for j in 1..i {
            let w = prev[j];
            if w == 0.0 {
                continue;
            }
            let tau = times[j];
            let from = src.at(tau);
            let start_gap = (dst.at(tau) - from).abs();
            acc += moving_kernel_unchecked(start_gap, target - from, t - tau, d) * w;
        }
        acc * dt
    })
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-boundary densities for free diffusion between linearly moving boundaries.
///
/// `grid` must start at `t = 0`. The truncation error check compares the largest
/// sample of the last included level against `conv_tol`.
pub fn ftwo_moving(
    p: &ProcessSpec,
    x0: f64,
    mb: &MovingBoundaries,
    grid: &TimeGrid,
    order: Order,
    conv_tol: f64,
    exec: Execution,
) -> Result<MovingResult> {
    let d = match *p {
        ProcessSpec::Free { d } => {
            p.validate()?;
            d
        }
        _ => return Err(Error::domain("moving boundaries are supported for free diffusion only")),
    };
    if !(x0 > 0.0 && x0 < mb.length()) {
        return Err(Error::domain(format!("x0 = {x0} must lie strictly inside (0, {})", mb.length())));
    }
    if grid.start() != 0.0 || grid.len() < 2 {
        return Err(Error::domain("the moving-boundary grid must start at t = 0 and have at least two points"));
    }
    mb.check_horizon(grid.end())?;
    let max_levels = match order {
        Order::Fixed(0) => return Err(Error::domain("series order must be at least 1")),
        Order::Fixed(n) => n,
        Order::Auto => MAX_MOVING_ORDER,
    };

    let times = grid.times();
    let dt = grid.step();
    let (lo, up) = (mb.lower(), mb.upper());
    let first = |b: LinearTrajectory| -> Vec<f64> {
        let start_gap = (b.at(0.0) - x0).abs();
        times
            .iter()
            .map(|&t| if t == 0.0 { 0.0 } else { moving_kernel_unchecked(start_gap, b.at(t) - x0, t, d) })
            .collect()
    };

    let mut a = first(lo);
    let mut b = first(up);
    let mut sum_lower = a.clone();
    let mut sum_upper = b.clone();
    let mut last = sup_abs(&a).max(sup_abs(&b));
    let mut levels = 1;
    while levels < max_levels && !(order == Order::Auto && last < conv_tol) {
        let next_a = convolve(up, lo, &b, &times, dt, d, exec);
        let next_b = convolve(lo, up, &a, &times, dt, d, exec);
        let sign = if levels % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..times.len() {
            sum_lower[i] += sign * next_a[i];
            sum_upper[i] += sign * next_b[i];
        }
        last = sup_abs(&next_a).max(sup_abs(&next_b));
        a = next_a;
        b = next_b;
        levels += 1;
    }
    if last >= conv_tol {
        return Err(Error::Convergence(format!(
            "moving-boundary series not settled after {levels} terms: last term reaches {last:.3e} (tolerance {conv_tol:e})"
        )));
    }
    Ok(MovingResult {
        lower: DensityCurve::new(times.clone(), sum_lower, Method::Moving, levels)?,
        upper: DensityCurve::new(times, sum_upper, Method::Moving, levels)?,
        order: levels,
        last_term_sup: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{series_curve, Target};

    #[test]
    fn static_limit_matches_series() {
        let p = ProcessSpec::free(1.0).unwrap();
        let mb = MovingBoundaries::new(3.0, 0.0, 0.0).unwrap();
        let grid = TimeGrid::from_step(1e-3 * 9.0, 1000).unwrap();
        let r = ftwo_moving(&p, 2.0, &mb, &grid, Order::Auto, 1e-8, Execution::Parallel).unwrap();
        let s = series_curve(&p, Target::Lower, 2.0, 3.0, &grid, Order::Fixed(20), Execution::Parallel).unwrap();
        let u = series_curve(&p, Target::Upper, 2.0, 3.0, &grid, Order::Fixed(20), Execution::Parallel).unwrap();
        let dl = crate::curve::sup_distance(&r.lower, &s).unwrap();
        let du = crate::curve::sup_distance(&r.upper, &u).unwrap();
        assert!(dl < 1e-4 && du < 1e-4, "{dl} {du}");
    }

    #[test]
    fn rejects_collapse_inside_grid() {
        let p = ProcessSpec::free(1.0).unwrap();
        let mb = MovingBoundaries::new(3.0, 0.2, -0.1).unwrap();
        let grid = TimeGrid::from_step(0.01, 1100).unwrap();
        assert!(ftwo_moving(&p, 2.0, &mb, &grid, Order::Auto, 1e-8, Execution::Sequential).is_err());
    }

    #[test]
    fn fixed_order_too_short_reports_convergence() {
        let p = ProcessSpec::free(1.0).unwrap();
        let mb = MovingBoundaries::new(3.0, -0.2, 0.1).unwrap();
        let grid = TimeGrid::from_step(0.01, 500).unwrap();
        let e = ftwo_moving(&p, 2.0, &mb, &grid, Order::Fixed(1), 1e-8, Execution::Sequential).unwrap_err();
        assert!(matches!(e, Error::Convergence(_)));
    }
}
