//! Euler-Maruyama simulation with absorbing boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::curve::{DensityCurve, Method};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::filtration::Target;
use crate::processes::{LinearTrajectory, MovingBoundaries, ProcessSpec, StaticBoundaries};

/// Default step as a fraction of `L²/D`.
pub const DEFAULT_DT_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Test for excursions across a boundary between steps.
    pub bridge_correction: bool,
    /// Trajectories still alive at this time are censored.
    pub max_time: f64,
}

impl McConfig {
    pub fn new(dt: f64, n_traj: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            dt,
            n_traj,
            seed,
            bridge_correction: true,
            max_time: f64::INFINITY,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `dt = 1e-4 L²/D`.
    pub fn default_dt(l: f64, d: f64) -> f64 {
        DEFAULT_DT_FRACTION * l * l / d
    }

    pub fn with_bridge(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_traj == 0 {
            return Err(Error::domain("n_traj must be at least 1"));
        }
        if !(self.max_time > 0.0) {
            return Err(Error::domain(format!("max_time must be positive, got {}", self.max_time)));
        }
        Ok(())
    }
}

/// Where the absorbing boundaries are.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Static(StaticBoundaries),
    Moving(MovingBoundaries),
}

impl Domain {
    fn edges(&self) -> (LinearTrajectory, LinearTrajectory) {
        match self {
            Domain::Static(s) => (LinearTrajectory::fixed(0.0), LinearTrajectory::fixed(s.length())),
            Domain::Moving(m) => (m.lower(), m.upper()),
        }
    }

    fn length(&self) -> f64 {
        match self {
            Domain::Static(s) => s.length(),
            Domain::Moving(m) => m.length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptSample {
    pub hit_time: f64,
    pub which_boundary: Target,
}

/// All absorbed samples, in trajectory order, plus the censored count.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub samples: Vec<FptSample>,
    pub censored: usize,
    pub n_traj: usize,
}

impl McRun {
    pub fn count(&self, target: Target) -> usize {
        self.samples.iter().filter(|s| s.which_boundary == target).count()
    }

    pub fn fraction(&self, target: Target) -> f64 {
        self.count(target) as f64 / self.n_traj as f64
    }

    /// Binomial standard error of [`McRun::fraction`].
    pub fn fraction_sigma(&self, target: Target) -> f64 {
        let p = self.fraction(target);
        (p * (1.0 - p) / self.n_traj as f64).sqrt()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_traj as f64
    }
}

/// Simulate `cfg.n_traj` independent trajectories from `x0`.
///
/// Trajectory `i` draws from its own ChaCha8 stream `(seed, i)`, so results do
/// not depend on the execution mode.
pub fn simulate(p: &ProcessSpec, domain: &Domain, x0: f64, cfg: &McConfig, exec: Execution) -> Result<McRun> {
    p.validate()?;
    cfg.validate()?;
    if !(x0 > 0.0 && x0 < domain.length()) {
        return Err(Error::domain(format!("x0 = {x0} must lie strictly inside (0, {})", domain.length())));
    }
    if let Domain::Moving(m) = domain {
        if m.collapse_time().is_none() && m.vl() - m.v0() > 0.0 && cfg.max_time.is_infinite() {
            return Err(Error::domain("an expanding cage needs a finite max_time"));
        }
    }
    let (lo, up) = domain.edges();
    let d = p.d();
    let dt = cfg.dt;
    let noise = (2.0 * d * dt).sqrt();
    let bridge_scale = 1.0 / (d * dt);

    let outcomes = map_indexed(exec, cfg.n_traj, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut x = x0;
        let mut step: u64 = 0;
        loop {
            let t = step as f64 * dt;
            if t >= cfg.max_time {
                return None;
            }
            let t1 = (step + 1) as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            let x1 = x + p.drift(x) * dt + noise * z;
            let (l0, l1) = (lo.at(t), lo.at(t1));
            let (u0, u1) = (up.at(t), up.at(t1));
            if x1 <= l1 {
                return Some(FptSample { hit_time: t1, which_boundary: Target::Lower });
            }
            if x1 >= u1 {
                return Some(FptSample { hit_time: t1, which_boundary: Target::Upper });
            }
            if cfg.bridge_correction {
                let pl = (-(x - l0) * (x1 - l1) * bridge_scale).exp();
                if rng.random::<f64>() < pl {
                    return Some(FptSample { hit_time: t1, which_boundary: Target::Lower });
                }
                let pu = (-(u0 - x) * (u1 - x1) * bridge_scale).exp();
                if rng.random::<f64>() < pu {
                    return Some(FptSample { hit_time: t1, which_boundary: Target::Upper });
                }
            }
            x = x1;
            step += 1;
        }
    });
    let censored = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(McRun {
        samples: outcomes.into_iter().flatten().collect(),
        censored,
        n_traj: cfg.n_traj,
    })
}

/// Hit-time histogram normalised by the total number of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub n_total: usize,
}

impl Histogram {
    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn density(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.counts[i] as f64 / (self.n_total as f64 * self.width(i)))
            .collect()
    }

    /// `Σ density × width`, i.e. the binned fraction of all trajectories.
    pub fn integral(&self) -> f64 {
        self.density().iter().enumerate().map(|(i, v)| v * self.width(i)).sum()
    }

    /// The density sampled at bin centres.
    pub fn curve(&self) -> Result<DensityCurve> {
        let centres = self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        DensityCurve::new(centres, self.density(), Method::MonteCarlo, self.n_total)
    }
}

/// Bin hit times on `[0, t_end]` (default: the largest hit time) into `bins` equal bins.
pub fn histogram(run: &McRun, bins: usize, t_end: Option<f64>, filter: Option<Target>) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::domain("histogram needs at least one bin"));
    }
    let times: Vec<f64> = run
        .samples
        .iter()
        .filter(|s| filter.is_none_or(|f| s.which_boundary == f))
        .map(|s| s.hit_time)
        .collect();
    if times.is_empty() {
        return Err(Error::domain("no samples left after filtering"));
    }
    let end = t_end.unwrap_or_else(|| times.iter().copied().fold(0.0, f64::max));
    if !(end > 0.0) || !end.is_finite() {
        return Err(Error::domain(format!("histogram end must be positive, got {end}")));
    }
    let w = end / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { end } else { i as f64 * w }).collect();
    let mut counts = vec![0usize; bins];
    for t in times {
        if t <= end {
            let i = ((t / w) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    Ok(Histogram { edges, counts, n_total: run.n_traj })
}

/// One histogram bin compared with a predicted density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinScore {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub expected: f64,
    pub z: f64,
}

/// Binomial z-scores of every bin holding at least `min_count` samples.
pub fn bin_z_scores(hist: &Histogram, curve: &DensityCurve, min_count: usize) -> Vec<BinScore> {
    let n = hist.n_total as f64;
    (0..hist.counts.len())
        .filter(|&i| hist.counts[i] >= min_count)
        .map(|i| {
            let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
            let p = curve.integrate_between(lo, hi).clamp(0.0, 1.0);
            let expected = n * p;
            let sigma = (n * p * (1.0 - p)).sqrt().max(1e-300);
            BinScore {
                lo,
                hi,
                count: hist.counts[i],
                expected,
                z: (hist.counts[i] as f64 - expected) / sigma,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_run(exec: Execution, n: usize) -> McRun {
        let p = ProcessSpec::free(1.0).unwrap();
        let dom = Domain::Static(StaticBoundaries::new(8.0).unwrap());
        let cfg = McConfig::new(McConfig::default_dt(8.0, 1.0) * 10.0, n, 7).unwrap();
        simulate(&p, &dom, 5.0, &cfg, exec).unwrap()
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let a = free_run(Execution::Sequential, 300);
        let b = free_run(Execution::Parallel, 300);
        assert_eq!(a, b);
        assert_eq!(a, free_run(Execution::Parallel, 300));
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(McConfig::new(0.0, 10, 1).is_err());
        assert!(McConfig::new(0.1, 0, 1).is_err());
        assert!(ProcessSpec::free(0.0).is_err());
        let p = ProcessSpec::free(1.0).unwrap();
        let mb = MovingBoundaries::new(3.0, -0.2, 0.1).unwrap();
        let cfg = McConfig::new(0.01, 10, 1).unwrap();
        assert!(simulate(&p, &Domain::Moving(mb), 2.0, &cfg, Execution::Sequential).is_err());
        let dom = Domain::Static(StaticBoundaries::new(3.0).unwrap());
        assert!(simulate(&p, &dom, 3.0, &cfg, Execution::Sequential).is_err());
    }

    #[test]
    fn histogram_normalisation() {
        let run = free_run(Execution::Parallel, 2000);
        let all = histogram(&run, 40, None, None).unwrap();
        assert!((all.integral() - (1.0 - run.censored_fraction())).abs() < 1e-12);
        let lower = histogram(&run, 40, None, Some(Target::Lower)).unwrap();
        assert!((lower.integral() - run.fraction(Target::Lower)).abs() < 1e-12);
        let end = Some(all.edges[40]);
        let fine = histogram(&run, 80, end, None).unwrap();
        assert!((fine.integral() - all.integral()).abs() < 1e-12);
    }

    #[test]
    fn censoring_is_reported() {
        let p = ProcessSpec::free(1.0).unwrap();
        let dom = Domain::Static(StaticBoundaries::new(8.0).unwrap());
        let cfg = McConfig::new(0.01, 200, 3).unwrap().with_max_time(0.5);
        let run = simulate(&p, &dom, 4.0, &cfg, Execution::Parallel).unwrap();
        assert!(run.censored > 150);
        assert_eq!(run.censored + run.samples.len(), 200);
    }

    #[test]
    fn empty_filter_is_an_error() {
        let run = McRun { samples: vec![FptSample { hit_time: 1.0, which_boundary: Target::Lower }], censored: 0, n_traj: 1 };
        assert!(histogram(&run, 4, None, Some(Target::Upper)).is_err());
    }
}
