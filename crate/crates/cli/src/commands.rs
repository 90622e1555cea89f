//! Subcommand bodies. Each returns the CSV text plus a short human summary;
//! the caller decides where they go.

use fptfilter::eigen::OuEigenSystem;
use fptfilter::mc::{bin_z_scores, histogram, simulate, Domain};
use fptfilter::{
    ee_biased, ee_free, ftwo_moving, l1_distance, laplace_curve, series_curve, sup_distance, terms_table, DensityCurve,
    Execution, Histogram, McRun, Method, ProcessSpec, Target,
};

use crate::config::{Experiment, Geometry, MethodChoice, MethodKind};
use crate::csv;
use crate::error::CliError;

pub struct Output {
    pub csv: String,
    pub summary: String,
}

fn static_length(e: &Experiment, what: &str) -> Result<f64, CliError> {
    match e.geometry {
        Geometry::Static(b) => Ok(b.length()),
        Geometry::Moving(_) => Err(CliError::Validation(format!("{what} needs static boundaries"))),
    }
}

fn eigen_curve(e: &Experiment, modes: usize, exec: Execution) -> Result<DensityCurve, CliError> {
    let l = static_length(e, "eigen")?;
    if let ProcessSpec::Ou(_) = e.process {
        let sys = OuEigenSystem::new(&e.process, l, modes)?;
        return Ok(sys.fpt_curve(e.target, e.x0, &e.grid, exec)?);
    }
    // the upper target is the lower one seen through x -> L - x
    let (x0, flip) = match e.target {
        Target::Lower => (e.x0, 1.0),
        Target::Upper => (l - e.x0, -1.0),
    };
    let mut values = Vec::with_capacity(e.grid.len());
    for t in e.grid.times() {
        let v = match e.process {
            ProcessSpec::Free { d } => ee_free(t, x0, l, d, modes)?,
            ProcessSpec::Biased { d, v } => ee_biased(t, x0, l, d, flip * v, modes)?,
            ProcessSpec::Ou(_) => unreachable!(),
        };
        values.push(v.value);
    }
    Ok(DensityCurve::new(e.grid.times(), values, Method::Eigen, modes)?)
}

fn domain(e: &Experiment) -> Domain {
    match e.geometry {
        Geometry::Static(b) => Domain::Static(b),
        Geometry::Moving(b) => Domain::Moving(b),
    }
}

pub fn run_mc(e: &Experiment, exec: Execution) -> Result<McRun, CliError> {
    Ok(simulate(&e.process, &domain(e), e.x0, &e.mc, exec)?)
}

fn mc_histogram(e: &Experiment, exec: Execution) -> Result<Histogram, CliError> {
    let run = run_mc(e, exec)?;
    Ok(histogram(&run, e.bins, Some(e.grid.end()), Some(e.target))?)
}

/// The density an experiment describes: a curve on its grid, or an MC histogram.
pub fn density_curve(e: &Experiment, exec: Execution) -> Result<DensityCurve, CliError> {
    let p = &e.process;
    match (e.method, e.geometry) {
        (MethodChoice::Series { order, .. }, Geometry::Static(b)) => {
            Ok(series_curve(p, e.target, e.x0, b.length(), &e.grid, order, exec)?)
        }
        (MethodChoice::Series { order, conv_tol }, Geometry::Moving(mb)) => {
            let r = ftwo_moving(p, e.x0, &mb, &e.grid, order, conv_tol, exec)?;
            Ok(match e.target {
                Target::Lower => r.lower,
                Target::Upper => r.upper,
            })
        }
        (MethodChoice::Laplace { order, nodes }, _) => {
            let l = static_length(e, "filtration-laplace")?;
            Ok(laplace_curve(p, e.target, e.x0, l, &e.grid, order, nodes, exec)?)
        }
        (MethodChoice::Eigen { modes }, _) => eigen_curve(e, modes, exec),
        (MethodChoice::MonteCarlo, _) => Ok(mc_histogram(e, exec)?.curve()?),
    }
}

pub fn density(e: &Experiment, exec: Execution) -> Result<Output, CliError> {
    let curve = density_curve(e, exec)?;
    let negatives = curve.flagged_negatives().len();
    let mut summary = format!(
        "{} points, method {}, truncation order {}, integral over grid {:.6e}",
        curve.len(),
        curve.method(),
        curve.trunc_order(),
        curve.integral()
    );
    if negatives > 0 {
        summary.push_str(&format!("; {negatives} samples noticeably negative"));
    }
    Ok(Output { csv: csv::density(&curve), summary })
}

pub fn terms(e: &Experiment, exec: Execution) -> Result<Output, CliError> {
    let order = match e.method {
        MethodChoice::Series { order, .. } => order,
        _ => return Err(CliError::Validation("terms needs method.kind = \"filtration-series\"".into())),
    };
    let l = static_length(e, "terms")?;
    let table = terms_table(&e.process, e.target, e.x0, l, &e.grid, order, exec)?;
    let summary = format!("{} terms on {} points", table.order(), table.times.len());
    Ok(Output { csv: csv::terms(&table), summary })
}

pub fn spectrum(e: &Experiment) -> Result<Output, CliError> {
    if !matches!(e.process, ProcessSpec::Ou(_)) {
        return Err(CliError::Validation("spectrum needs process.kind = \"ou\"".into()));
    }
    let l = static_length(e, "spectrum")?;
    let sys = OuEigenSystem::new(&e.process, l, e.modes)?;
    let entries = sys.entries();
    let rates: Vec<f64> = (0..entries.len()).map(|n| sys.rate(n)).collect();
    let worst = entries.iter().map(|x| x.residual.abs()).fold(0.0, f64::max);
    let summary = format!("{} modes, slowest rate {:.10e}, largest residual {worst:.2e}", entries.len(), rates[0]);
    Ok(Output { csv: csv::spectrum(&entries, &rates), summary })
}

pub fn mc(e: &Experiment, exec: Execution) -> Result<Output, CliError> {
    let run = run_mc(e, exec)?;
    let mut summary = String::new();
    for t in [Target::Lower, Target::Upper] {
        summary.push_str(&format!(
            "{t:?}: {} hits, fraction {:.6} ± {:.6}\n",
            run.count(t),
            run.fraction(t),
            run.fraction_sigma(t)
        ));
    }
    summary.push_str(&format!("censored: {} of {}", run.censored, run.n_traj));
    Ok(Output { csv: csv::samples(&run), summary })
}

/// Thresholds for `compare`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub sup: f64,
    pub z_max: f64,
    pub min_count: usize,
}

/// A comparison report; `passed` is false when a tolerance is breached.
pub struct Comparison {
    pub output: Output,
    pub passed: bool,
}

pub fn compare(a: &Experiment, b: &Experiment, tol: Tolerances, exec: Execution) -> Result<Comparison, CliError> {
    let (a_mc, b_mc) = (a.kind == MethodKind::Mc, b.kind == MethodKind::Mc);
    if a_mc && b_mc {
        return Err(CliError::Validation("compare needs at least one deterministic method".into()));
    }
    if a.target != b.target {
        return Err(CliError::Validation("the two configurations target different boundaries".into()));
    }
    if a_mc || b_mc {
        let (sim, det) = if a_mc { (a, b) } else { (b, a) };
        if sim.grid.end() != det.grid.end() {
            return Err(CliError::Validation(format!(
                "grid mismatch: histogram ends at {} but the curve at {}",
                sim.grid.end(),
                det.grid.end()
            )));
        }
        let curve = density_curve(det, exec)?;
        let hist = mc_histogram(sim, exec)?;
        let (lo, hi) = (det.grid.start(), det.grid.end());
        let scores: Vec<_> = bin_z_scores(&hist, &curve, tol.min_count)
            .into_iter()
            .filter(|s| s.lo >= lo && s.hi <= hi)
            .collect();
        let worst = scores.iter().map(|s| s.z.abs()).fold(0.0, f64::max);
        let summary = format!(
            "{} vs {}: {} of {} bins scored (>= {} counts), max |z| = {worst:.3} (limit {})",
            det.kind.name(),
            sim.kind.name(),
            scores.len(),
            hist.counts.len(),
            tol.min_count,
            tol.z_max
        );
        if scores.is_empty() {
            return Err(CliError::Validation("no histogram bin reaches the minimum count".into()));
        }
        let output = Output { csv: csv::bin_scores(&scores), summary };
        return Ok(Comparison { output, passed: worst < tol.z_max });
    }
    if a.grid != b.grid {
        return Err(CliError::Validation("grid mismatch: both configurations need the same [grid] block".into()));
    }
    let ca = density_curve(a, exec)?;
    let cb = density_curve(b, exec)?;
    let sup = sup_distance(&ca, &cb)?;
    let l1 = l1_distance(&ca, &cb)?;
    let summary = format!(
        "{} (order {}) vs {} (order {}): sup |a - b| = {sup:.3e} (limit {:.1e}), L1 = {l1:.3e}",
        ca.method(),
        ca.trunc_order(),
        cb.method(),
        cb.trunc_order(),
        tol.sup
    );
    let output = Output { csv: csv::pointwise(&ca, &cb), summary };
    Ok(Comparison { output, passed: sup < tol.sup })
}
