use fptfilter::eigen::OuEigenSystem;
use fptfilter::mc::{bin_z_scores, histogram, simulate, Domain, McConfig, McRun};
use fptfilter::*;

const SEED: u64 = 7;

fn free() -> ProcessSpec {
    ProcessSpec::free(1.0).unwrap()
}

fn static_run(p: &ProcessSpec, x0: f64, l: f64, cfg: &McConfig) -> McRun {
    let dom = Domain::Static(StaticBoundaries::new(l).unwrap());
    simulate(p, &dom, x0, cfg, Execution::Parallel).unwrap()
}

fn mean_and_sigma(run: &McRun) -> (f64, f64) {
    let n = run.samples.len() as f64;
    let mean = run.samples.iter().map(|s| s.hit_time).sum::<f64>() / n;
    let var = run.samples.iter().map(|s| (s.hit_time - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn free_splitting_fraction() {
    let cfg = McConfig::new(McConfig::default_dt(8.0, 1.0), 20_000, SEED).unwrap();
    let run = static_run(&free(), 5.0, 8.0, &cfg);
    let z = (run.fraction(Target::Lower) - 0.375) / run.fraction_sigma(Target::Lower);
    assert!(z.abs() < 4.0, "z = {z}");
    assert_eq!(run.censored, 0);
    assert_eq!(run.count(Target::Lower) + run.count(Target::Upper), 20_000);
}

#[test]
fn bridge_removes_the_coarse_step_bias() {
    // mean exit time from (0, L) is x0 (L - x0) / 2D
    let exact = 7.5;
    let coarse = 0.05;
    let with = static_run(&free(), 5.0, 8.0, &McConfig::new(coarse, 20_000, SEED).unwrap());
    let without = static_run(&free(), 5.0, 8.0, &McConfig::new(coarse, 20_000, SEED).unwrap().with_bridge(false));
    let (m_with, s_with) = mean_and_sigma(&with);
    let (m_without, s_without) = mean_and_sigma(&without);
    // hits are stamped at step ends, which adds about dt/2
    assert!((m_with - exact - coarse / 2.0).abs() < 4.0 * s_with, "{m_with} ± {s_with}");
    assert!(m_without - exact > 10.0 * s_without, "{m_without} ± {s_without}");
}

#[test]
fn plain_euler_bias_shrinks_with_the_step() {
    let exact = 7.5;
    let bias = |dt: f64| {
        let run = static_run(&free(), 5.0, 8.0, &McConfig::new(dt, 20_000, SEED).unwrap().with_bridge(false));
        mean_and_sigma(&run).0 - exact
    };
    let (b1, b2) = (bias(0.08), bias(0.005));
    // the overshoot bias scales like sqrt(dt): a factor 4 between these steps
    assert!(b1 > 0.0 && b2 < b1 / 2.0, "{b1} {b2}");
}

#[test]
fn free_histogram_follows_eigen_expansion() {
    let cfg = McConfig::new(McConfig::default_dt(8.0, 1.0), 20_000, SEED).unwrap();
    let run = static_run(&free(), 5.0, 8.0, &cfg);
    let h = histogram(&run, 30, Some(24.0), Some(Target::Lower)).unwrap();
    let g = TimeGrid::uniform(1e-3, 24.0, 4801).unwrap();
    let vals = g.times().iter().map(|&t| ee_free(t, 5.0, 8.0, 1.0, 200).unwrap().value).collect();
    let curve = DensityCurve::new(g.times(), vals, Method::Eigen, 200).unwrap();
    let scores = bin_z_scores(&h, &curve, 50);
    assert!(scores.len() >= 20, "{} bins", scores.len());
    let chi2 = scores.iter().map(|b| b.z * b.z).sum::<f64>() / scores.len() as f64;
    assert!(chi2 < 2.0, "chi2 per bin {chi2}");
}

#[test]
fn ou_survival_tail_decays_at_the_lowest_rate() {
    let p = ProcessSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    let rate = OuEigenSystem::new(&p, 3.0, 10).unwrap().rate(0);
    let cfg = McConfig::new(McConfig::default_dt(3.0, 1.0), 40_000, SEED).unwrap();
    let run = static_run(&p, 1.5, 3.0, &cfg);
    let surv = |t: f64| run.samples.iter().filter(|s| s.hit_time > t).count() as f64;
    let (t1, t2) = (2.0, 5.0);
    let (n1, n2) = (surv(t1), surv(t2));
    let slope = (n2 / n1).ln() / (t2 - t1);
    let sigma = (1.0 / n2 - 1.0 / n1).abs().sqrt() / (t2 - t1);
    assert!((slope + rate).abs() < 4.0 * sigma + 0.01, "{slope} vs {} (σ {sigma})", -rate);
}

#[test]
fn expanding_cage_needs_a_horizon() {
    let mb = MovingBoundaries::new(3.0, -0.2, 0.1).unwrap();
    let cfg = McConfig::new(1e-3, 100, SEED).unwrap();
    assert!(simulate(&free(), &Domain::Moving(mb), 2.0, &cfg, Execution::Sequential).is_err());
    let run = simulate(&free(), &Domain::Moving(mb), 2.0, &cfg.with_max_time(5.0), Execution::Sequential).unwrap();
    assert!(run.samples.iter().all(|s| s.hit_time <= 5.0 + 1e-12));
}

#[test]
fn sequential_and_parallel_runs_coincide() {
    let cfg = McConfig::new(0.01, 500, SEED).unwrap();
    let dom = Domain::Static(StaticBoundaries::new(8.0).unwrap());
    let a = simulate(&free(), &dom, 5.0, &cfg, Execution::Sequential).unwrap();
    let b = simulate(&free(), &dom, 5.0, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
