use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fptfilter::{fpt_one_boundary_time, ProcessSpec};
use fptfilter_cli::ExperimentConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> PathBuf {
    configs().join(format!("{name}.toml"))
}

fn fptfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fptfilter")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path, &[]).unwrap().validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn density_csv_contract_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("sub/b.csv"));
    for out in [&a, &b] {
        let o = fptfilter(&["density", s(&cfg("fig2_eigen")), "-o", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, rows) = rows(&a);
    assert_eq!(header, "t,value,method,trunc_order");
    assert_eq!(rows.len(), 400);
    let mut last = f64::NEG_INFINITY;
    for r in &rows {
        assert_eq!(r.len(), 4);
        let t: f64 = r[0].parse().unwrap();
        assert!(t > last);
        last = t;
        r[1].parse::<f64>().unwrap();
        assert_eq!(r[2], "eigen");
        assert_eq!(r[3], "30");
        // 17 significant digits in scientific notation
        assert!(r[0].contains('e') && r[0].split('e').next().unwrap().len() == 18);
    }
}

#[test]
fn ou_density_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ou.csv");
    assert_eq!(code(&fptfilter(&["density", s(&cfg("fig4_laplace")), "-o", s(&out)])), 0);
    let (_, r) = rows(&out);
    assert_eq!(r.len(), 100);
    assert!(r.iter().all(|x| x[2] == "laplace"));

    let spec = dir.path().join("spec.csv");
    let o = fptfilter(&["spectrum", s(&cfg("fig4_eigen")), "--set", "method.modes=12", "-o", s(&spec)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, r) = rows(&spec);
    assert_eq!(header, "index,s,rate,a_coef,norm,residual");
    assert_eq!(r.len(), 12);
    for x in &r {
        assert!(x[5].parse::<f64>().unwrap().abs() < 1e-10);
    }
    let o = fptfilter(&["spectrum", s(&cfg("fig2_eigen")), "-o", s(&spec)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn empty_grid_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let o = fptfilter(&["density", s(&cfg("fig2_eigen")), "--set", "grid.points=0", "-o", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for set in ["grid.stride=2", "x0=12", "method.kind=\"spline\"", "process.k=1"] {
        let o = fptfilter(&["density", s(&cfg("fig2_eigen")), "--set", set, "-o", s(&out)]);
        assert_eq!(code(&o), 1, "{set}");
    }
    assert_eq!(code(&fptfilter(&["density", "/nonexistent.toml"])), 1);
    assert_eq!(code(&fptfilter(&["frobnicate"])), 1);
    assert!(!out.exists());
}

#[test]
fn numeric_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = fptfilter(&["density", s(&cfg("fig5a_filtration")), "--set", "method.order=1", "-o", s(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn terms_are_signed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("terms.csv");
    assert_eq!(code(&fptfilter(&["terms", s(&cfg("fig2_filtration")), "-o", s(&out)])), 0);
    let (header, r) = rows(&out);
    assert_eq!(header, "t,f0,f1,f2,f3,f4");
    for row in &r {
        for (n, v) in row[1..].iter().enumerate() {
            let v: f64 = v.parse().unwrap();
            assert!(if n % 2 == 0 { v >= 0.0 } else { v <= 0.0 });
        }
    }

    assert_eq!(code(&fptfilter(&["terms", s(&cfg("fig2_filtration")), "--set", "method.order=1", "-o", s(&out)])), 0);
    let (header, r) = rows(&out);
    assert_eq!(header, "t,f0");
    let free = ProcessSpec::free(1.0).unwrap();
    for row in &r {
        let t: f64 = row[0].parse().unwrap();
        let v: f64 = row[1].parse().unwrap();
        assert!((v - fpt_one_boundary_time(&free, 5.0, 0.0, t).unwrap()).abs() < 1e-15);
    }
    assert_eq!(code(&fptfilter(&["terms", s(&cfg("fig2_eigen")), "-o", s(&out)])), 1);
}

#[test]
fn flag_output_overrides_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let from_set = dir.path().join("set.csv");
    let from_flag = dir.path().join("flag.csv");
    let set = format!("output=\"{}\"", from_set.display());
    let o = fptfilter(&["density", s(&cfg("fig2_eigen")), "--set", &set, "--set", "grid.points=5"]);
    assert_eq!(code(&o), 0);
    assert!(from_set.exists());
    let o = fptfilter(&["density", s(&cfg("fig2_eigen")), "--set", &set, "--set", "grid.points=5", "-o", s(&from_flag)]);
    assert_eq!(code(&o), 0);
    assert!(from_flag.exists());
    assert_eq!(rows(&from_flag).1.len(), 5);
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let ok = fptfilter(&[
        "compare",
        s(&cfg("fig2_filtration")),
        s(&cfg("fig2_eigen")),
        "--set-a",
        "method.order=12",
        "-o",
        s(&report),
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let (header, r) = rows(&report);
    assert_eq!(header, "t,a,b,diff");
    assert_eq!(r.len(), 400);

    // one term drops every correction and must breach
    let bad = fptfilter(&["compare", s(&cfg("fig2_filtration")), s(&cfg("fig2_eigen")), "--set-a", "method.order=1"]);
    assert_eq!(code(&bad), 3);

    let mismatch =
        fptfilter(&["compare", s(&cfg("fig2_filtration")), s(&cfg("fig2_eigen")), "--set-b", "grid.points=401"]);
    assert_eq!(code(&mismatch), 1);
}

#[test]
fn compare_against_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("z.csv");
    let o = fptfilter(&["compare", s(&cfg("fig5a_filtration")), s(&cfg("fig5a_mc")), "-o", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, r) = rows(&report);
    assert_eq!(header, "t_lo,t_hi,count,expected,z");
    assert!(r.len() >= 30);
    assert!(r.iter().all(|x| x[4].parse::<f64>().unwrap().abs() < 3.0));
}

#[test]
fn mc_is_reproducible_at_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = |p: &Path| {
        vec![
            "mc".to_string(),
            cfg("fig2_mc").display().to_string(),
            "--set".into(),
            "mc.trajectories=300".into(),
            "-o".into(),
            p.display().to_string(),
        ]
    };
    let run = |p: &Path, extra: &[&str]| {
        let mut v = args(p);
        v.extend(extra.iter().map(|x| x.to_string()));
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        fptfilter(&refs)
    };
    assert_eq!(code(&run(&a, &[])), 0);
    assert_eq!(code(&run(&b, &["--sequential"])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, r) = rows(&a);
    assert_eq!(header, "hit_time,boundary");
    assert_eq!(r.len(), 300);
    assert!(r.iter().all(|x| x[1] == "lower" || x[1] == "upper"));

    let hist = dir.path().join("h.csv");
    let o = fptfilter(&["density", s(&cfg("fig2_mc")), "--set", "mc.trajectories=2000", "-o", s(&hist)]);
    assert_eq!(code(&o), 0);
    let (header, r) = rows(&hist);
    assert_eq!(header, "t,value,method,trunc_order");
    assert_eq!(r.len(), 40);
    assert!(r.iter().all(|x| x[2] == "mc"));
}
