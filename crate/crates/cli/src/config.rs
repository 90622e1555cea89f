//! Experiment files: TOML with `--set key=value` overrides.
//!
//! Values are resolved in the order defaults < file < overrides. Unknown keys
//! anywhere in the document are rejected, and [`ExperimentConfig::validate`]
//! builds every solver object before any computation starts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use fptfilter::mc::McConfig;
use fptfilter::{MovingBoundaries, Order, ProcessSpec, StaticBoundaries, Target, TimeGrid};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Free,
    Biased,
    Ou,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessBlock {
    pub kind: ProcessKind,
    #[serde(default = "one")]
    pub d: f64,
    /// Drift velocity for `biased`. Alternatively give `alpha` (potential slope) and `gamma`.
    pub v: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub k: Option<f64>,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Static,
    Moving,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    #[serde(default)]
    pub kind: BoundaryKind,
    pub l: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub vl: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    FiltrationSeries,
    FiltrationLaplace,
    Eigen,
    Mc,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::FiltrationSeries => "filtration-series",
            MethodKind::FiltrationLaplace => "filtration-laplace",
            MethodKind::Eigen => "eigen",
            MethodKind::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetName {
    #[default]
    Lower,
    Upper,
}

/// `order = 5` or `order = "auto"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OrderValue {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodBlock {
    pub kind: MethodKind,
    #[serde(default)]
    pub target: TargetName,
    pub order: Option<OrderValue>,
    pub modes: Option<usize>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    /// Defaults to `1e-4 L²/D`.
    pub dt: Option<f64>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub bridge: bool,
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub max_time: Option<f64>,
}

impl Default for McBlock {
    fn default() -> Self {
        McBlock {
            dt: None,
            trajectories: default_trajectories(),
            seed: 1,
            bridge: true,
            bins: default_bins(),
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub x0: f64,
    pub process: ProcessBlock,
    pub boundary: BoundaryBlock,
    pub grid: GridBlock,
    pub method: MethodBlock,
    #[serde(default)]
    pub mc: McBlock,
    pub output: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn yes() -> bool {
    true
}
fn default_nodes() -> usize {
    fptfilter::laplace::TALBOT_DEFAULT_NODES
}
fn default_conv_tol() -> f64 {
    fptfilter::filtration::DEFAULT_CONV_TOL
}
fn default_trajectories() -> usize {
    100_000
}
fn default_bins() -> usize {
    40
}

const DEFAULT_MODES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Static(StaticBoundaries),
    Moving(MovingBoundaries),
}

impl Geometry {
    pub fn length(&self) -> f64 {
        match self {
            Geometry::Static(b) => b.length(),
            Geometry::Moving(b) => b.length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodChoice {
    Series { order: Order, conv_tol: f64 },
    Laplace { order: usize, nodes: usize },
    Eigen { modes: usize },
    MonteCarlo,
}

/// A configuration whose every parameter has been checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub process: ProcessSpec,
    pub geometry: Geometry,
    pub x0: f64,
    pub grid: TimeGrid,
    pub kind: MethodKind,
    pub method: MethodChoice,
    pub target: Target,
    pub mc: McConfig,
    pub bins: usize,
    pub modes: usize,
    pub output: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{raw}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("override key `{key}` has an empty component")));
    }
    let value = value.trim();
    // TOML literal if it parses as one, a bare string otherwise
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((path, parsed))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| invalid(format!("override path `{}` runs through a non-table value", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            apply_override(&mut table, &path, value)?;
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    fn process(&self) -> Result<ProcessSpec, CliError> {
        let b = &self.process;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("process.{name} is required for {:?}", b.kind)));
        let unused = |fields: &[(&str, Option<f64>)]| -> Result<(), CliError> {
            match fields.iter().find(|(_, v)| v.is_some()) {
                Some((name, _)) => Err(invalid(format!("process.{name} does not apply to {:?}", b.kind))),
                None => Ok(()),
            }
        };
        let spec = match b.kind {
            ProcessKind::Free => {
                unused(&[("v", b.v), ("alpha", b.alpha), ("gamma", b.gamma), ("k", b.k), ("a", b.a)])?;
                ProcessSpec::free(b.d)
            }
            ProcessKind::Biased => {
                unused(&[("k", b.k), ("a", b.a)])?;
                match (b.v, b.alpha) {
                    (Some(v), None) => {
                        unused(&[("gamma", b.gamma)])?;
                        ProcessSpec::biased(b.d, v)
                    }
                    (None, Some(alpha)) => ProcessSpec::biased_from_slope(b.d, b.gamma.unwrap_or(1.0), alpha),
                    _ => return Err(invalid("biased process needs exactly one of process.v or process.alpha")),
                }
            }
            ProcessKind::Ou => {
                unused(&[("v", b.v), ("alpha", b.alpha)])?;
                ProcessSpec::ou(b.d, b.gamma.unwrap_or(1.0), need(b.k, "k")?, need(b.a, "a")?)
            }
        };
        Ok(spec?)
    }

    fn geometry(&self) -> Result<Geometry, CliError> {
        let b = &self.boundary;
        Ok(match b.kind {
            BoundaryKind::Static => {
                if b.v0 != 0.0 || b.vl != 0.0 {
                    return Err(invalid("boundary velocities require boundary.kind = \"moving\""));
                }
                Geometry::Static(StaticBoundaries::new(b.l)?)
            }
            BoundaryKind::Moving => Geometry::Moving(MovingBoundaries::new(b.l, b.v0, b.vl)?),
        })
    }

    fn order(&self) -> Result<Option<Order>, CliError> {
        Ok(match &self.method.order {
            None => None,
            Some(OrderValue::Fixed(n)) => Some(Order::Fixed(*n)),
            Some(OrderValue::Named(s)) if s == "auto" => Some(Order::Auto),
            Some(OrderValue::Named(s)) => return Err(invalid(format!("method.order must be an integer or \"auto\", got {s:?}"))),
        })
    }

    /// Checks every block and builds the solver inputs.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let process = self.process()?;
        let geometry = self.geometry()?;
        let l = geometry.length();
        if !(self.x0 > 0.0 && self.x0 < l) {
            return Err(invalid(format!("x0 = {} must lie strictly inside (0, {l})", self.x0)));
        }
        if self.grid.points == 0 {
            return Err(invalid("time grid is empty"));
        }
        let grid = TimeGrid::uniform(self.grid.start, self.grid.end, self.grid.points)?;
        let moving = matches!(geometry, Geometry::Moving(_));
        let order = self.order()?;
        let m = &self.method;
        let method = match m.kind {
            MethodKind::FiltrationSeries => {
                if moving {
                    if !matches!(process, ProcessSpec::Free { .. }) {
                        return Err(invalid("moving boundaries are supported for free diffusion only"));
                    }
                    if grid.start() != 0.0 {
                        return Err(invalid("moving-boundary filtration needs grid.start = 0"));
                    }
                }
                if !(m.conv_tol > 0.0) {
                    return Err(invalid("method.conv_tol must be positive"));
                }
                MethodChoice::Series { order: order.unwrap_or(Order::Auto), conv_tol: m.conv_tol }
            }
            MethodKind::FiltrationLaplace => {
                if moving {
                    return Err(invalid("the Laplace route needs static boundaries"));
                }
                let n = match order {
                    None => 2,
                    Some(Order::Fixed(n)) if n >= 2 && n % 2 == 0 => n,
                    Some(o) => return Err(invalid(format!("filtration-laplace needs an even order >= 2, got {o:?}"))),
                };
                if m.nodes < 2 {
                    return Err(invalid("method.nodes must be at least 2"));
                }
                MethodChoice::Laplace { order: n, nodes: m.nodes }
            }
            MethodKind::Eigen => {
                if moving {
                    return Err(invalid("eigenfunction expansions need static boundaries"));
                }
                if order.is_some() {
                    return Err(invalid("eigen uses method.modes, not method.order"));
                }
                let modes = m.modes.unwrap_or(DEFAULT_MODES);
                if modes == 0 {
                    return Err(invalid("method.modes must be positive"));
                }
                MethodChoice::Eigen { modes }
            }
            MethodKind::Mc => MethodChoice::MonteCarlo,
        };
        if matches!(method, MethodChoice::Series { order: Order::Fixed(0), .. }) {
            return Err(invalid("method.order must be at least 1"));
        }

        let mb = &self.mc;
        let dt = mb.dt.unwrap_or_else(|| McConfig::default_dt(l, process.d()));
        let mut mc = McConfig::new(dt, mb.trajectories, mb.seed)?.with_bridge(mb.bridge);
        let max_time = match (mb.max_time, moving) {
            (Some(t), _) => Some(t),
            // an unbounded simulation is only safe when the domain cannot grow
            (None, true) => Some(grid.end()),
            (None, false) => None,
        };
        if let Some(t) = max_time {
            mc = mc.with_max_time(t);
        }
        mc.validate()?;
        if mb.bins == 0 {
            return Err(invalid("mc.bins must be positive"));
        }
        if let Geometry::Moving(b) = geometry {
            b.check_horizon(grid.end())?;
        }

        Ok(Experiment {
            process,
            geometry,
            x0: self.x0,
            grid,
            kind: m.kind,
            method,
            target: match m.target {
                TargetName::Lower => Target::Lower,
                TargetName::Upper => Target::Upper,
            },
            mc,
            bins: mb.bins,
            modes: m.modes.unwrap_or(DEFAULT_MODES),
            output: self.output.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"
x0 = 5.0
[process]
kind = "free"
[boundary]
l = 8.0
[grid]
start = 0.5
end = 200.0
points = 400
[method]
kind = "eigen"
modes = 30
"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::from_toml_str(FIG2, &[]).unwrap();
        let e = c.validate().unwrap();
        assert_eq!(e.grid.len(), 400);
        assert_eq!(e.method, MethodChoice::Eigen { modes: 30 });
        assert_eq!(e.target, Target::Lower);
    }

    #[test]
    fn overrides_win_over_the_file() {
        let c = ExperimentConfig::from_toml_str(
            FIG2,
            &["method.modes = 12".into(), "output=out.csv".into(), "method.target=upper".into()],
        )
        .unwrap();
        assert_eq!(c.method.modes, Some(12));
        assert_eq!(c.output.as_deref(), Some(Path::new("out.csv")));
        assert_eq!(c.method.target, TargetName::Upper);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str(FIG2, &["grid.step = 0.1".into()]).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
        let err = ExperimentConfig::from_toml_str(&format!("{FIG2}\nfoo = 1\n"), &[]).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn incompatible_choices_are_rejected() {
        for o in [
            vec!["grid.points = 0".to_string()],
            vec!["x0 = 9.0".to_string()],
            vec!["method.order = 4".to_string()],
            vec!["boundary.v0 = 0.1".to_string()],
            vec!["process.v = 0.1".to_string()],
            vec!["method.kind = \"filtration-laplace\"".to_string(), "method.order = 3".to_string()],
            vec!["method.kind = \"filtration-series\"".to_string(), "method.order = \"many\"".to_string()],
        ] {
            let c = ExperimentConfig::from_toml_str(FIG2, &o).unwrap();
            assert!(matches!(c.validate(), Err(CliError::Validation(_))), "{o:?}");
        }
    }
}
