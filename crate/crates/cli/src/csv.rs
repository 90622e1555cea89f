//! CSV artifacts. Numbers use `{:.16e}` (17 significant digits) so files are
//! byte-stable and round-trip exactly through `f64` parsing.

use std::fmt::Write;

use fptfilter::mc::BinScore;
use fptfilter::{DensityCurve, McRun, SpectrumEntry, Target, TermsTable};

pub const DENSITY_HEADER: &str = "t,value,method,trunc_order";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn boundary(t: Target) -> &'static str {
    match t {
        Target::Lower => "lower",
        Target::Upper => "upper",
    }
}

pub fn density(curve: &DensityCurve) -> String {
    let mut out = String::from(DENSITY_HEADER);
    out.push('\n');
    let (tag, order) = (curve.method().tag(), curve.trunc_order());
    for (t, v) in curve.times().iter().zip(curve.values()) {
        writeln!(out, "{},{},{tag},{order}", num(*t), num(*v)).unwrap();
    }
    out
}

/// One signed column per filtration term.
pub fn terms(table: &TermsTable) -> String {
    let mut out = String::from("t");
    for n in 0..table.order() {
        write!(out, ",f{n}").unwrap();
    }
    out.push('\n');
    for (t, row) in table.times.iter().zip(&table.rows) {
        out.push_str(&num(*t));
        for v in row {
            write!(out, ",{}", num(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn spectrum(entries: &[SpectrumEntry], rates: &[f64]) -> String {
    let mut out = String::from("index,s,rate,a_coef,norm,residual\n");
    for (e, r) in entries.iter().zip(rates) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.index,
            num(e.s),
            num(*r),
            num(e.a_coef),
            num(e.norm),
            num(e.residual)
        )
        .unwrap();
    }
    out
}

pub fn samples(run: &McRun) -> String {
    let mut out = String::from("hit_time,boundary\n");
    for s in &run.samples {
        writeln!(out, "{},{}", num(s.hit_time), boundary(s.which_boundary)).unwrap();
    }
    out
}

pub fn pointwise(a: &DensityCurve, b: &DensityCurve) -> String {
    let mut out = String::from("t,a,b,diff\n");
    for ((t, x), y) in a.times().iter().zip(a.values()).zip(b.values()) {
        writeln!(out, "{},{},{},{}", num(*t), num(*x), num(*y), num(x - y)).unwrap();
    }
    out
}

pub fn bin_scores(scores: &[BinScore]) -> String {
    let mut out = String::from("t_lo,t_hi,count,expected,z\n");
    for b in scores {
        writeln!(out, "{},{},{},{},{}", num(b.lo), num(b.hi), b.count, num(b.expected), num(b.z)).unwrap();
    }
    out
}
