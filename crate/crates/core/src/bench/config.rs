//! Scenario configuration files (TOML, SI units throughout).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::RampShape;
use crate::material::MaterialModel;
use crate::mesh::{DiagonalRule, ElementKind, Point, SeamSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: `{value}` carries a unit suffix; give a plain SI number")]
    UnitSuffix { field: String, value: String },
    #[error("field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
    #[error("region `{0}` has no material")]
    MissingMaterial(String),
    #[error("unknown scenario `{0}` (known: kalthoff, bending3p, compact-compression, interconnect-mech, interconnect-thermal)")]
    UnknownScenario(String),
    #[error("unknown parameter `{param}` for scenario `{scenario}`")]
    UnknownParam { scenario: String, param: String },
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub kind: ElementKind,
    #[serde(default)]
    pub split: DiagonalRule,
}

/// Exactly one of `builtin`, `file` and `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Geometry parameters of a builtin mesh.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seams: Vec<SeamSpec>,
}

fn default_safety() -> f64 {
    0.5
}

fn default_gamma() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Fixed step, s. When absent the step is derived from the mesh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    /// End time, s.
    pub total: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_cadence() -> usize {
    100
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Steps between snapshots.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            cadence: default_cadence(),
            dir: None,
            vtk: true,
        }
    }
}

/// Axis-aligned box; missing sides are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ymin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ymax: Option<f64>,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        self.xmin.map_or(true, |v| p[0] >= v)
            && self.xmax.map_or(true, |v| p[0] <= v)
            && self.ymin.map_or(true, |v| p[1] >= v)
            && self.ymax.map_or(true, |v| p[1] <= v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityLoad {
    pub nodes: Bounds,
    pub direction: Axis,
    /// Target velocity, m/s.
    pub v0: f64,
    /// Ramp time, s.
    pub t0: f64,
    #[serde(default)]
    pub shape: RampShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedLoad {
    pub nodes: Bounds,
    pub direction: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalLoad {
    /// Temperature change, K.
    pub delta: f64,
    pub t0: f64,
    #[serde(default)]
    pub shape: RampShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionLoad {
    /// Boundary edges whose midpoints fall in this box.
    pub edges: Bounds,
    /// Pa.
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub velocity: Vec<VelocityLoad>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<FixedLoad>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalLoad>,
    /// Body force, N/m^3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traction: Vec<TractionLoad>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthConfig {
    /// Boundary edges eligible for strength initiation.
    pub edges: Bounds,
    #[serde(default = "one")]
    pub max_tips: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Initial tips, snapped to the nearest boundary edge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tips: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<StrengthConfig>,
    /// Tip-speed smoothing window, s. Defaults to 20 steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl Default for CrackConfig {
    fn default() -> Self {
        CrackConfig {
            enabled: true,
            tips: Vec::new(),
            strength: None,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mesh: MeshSource,
    /// Material per mesh region name.
    pub materials: BTreeMap<String, MaterialModel>,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub loads: LoadConfig,
    #[serde(default)]
    pub crack: CrackConfig,
    /// Scenario parameters echoed for reference.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

/// Keys whose values are legitimately strings.
const STRING_KEYS: &[&str] = &[
    "name", "builtin", "file", "kind", "split", "dir", "direction", "shape", "mode",
];

/// `"16.5 m/s"`, `"1us"`, `"190GPa"`: a number followed by letters.
fn looks_like_unit(s: &str) -> bool {
    let t = s.trim();
    let split = t
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i);
    let Some(i) = split else { return false };
    // Allow an exponent marker to be mistaken for a unit only when a number
    // precedes what remains.
    let (num, rest) = t.split_at(i);
    let num = num.trim_end_matches(['e', 'E']);
    !num.is_empty() && num.parse::<f64>().is_ok() && rest.trim().chars().next().map_or(false, |c| c.is_alphabetic() || c == '%' || c == '°' || c == 'µ')
}

fn scan_units(v: &toml::Value, path: &str, key: &str) -> Result<(), ConfigError> {
    match v {
        toml::Value::String(s) if !STRING_KEYS.contains(&key) && looks_like_unit(s) => Err(ConfigError::UnitSuffix {
            field: path.to_string(),
            value: s.clone(),
        }),
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                scan_units(v, &p, k)?;
            }
            Ok(())
        }
        toml::Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                scan_units(v, &format!("{path}[{i}]"), key)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        scan_units(&value, "", "")?;
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks field ranges. Region coverage is checked once the mesh exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sources = [self.mesh.builtin.is_some(), self.mesh.file.is_some(), self.mesh.grid.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(invalid("mesh", "give exactly one of `builtin`, `file`, `grid`"));
        }
        if let Some(g) = &self.mesh.grid {
            if !(g.width > 0.0) || !(g.height > 0.0) {
                return Err(invalid("mesh.grid", "width and height must be positive"));
            }
            if g.nx == 0 || g.ny == 0 {
                return Err(invalid("mesh.grid", "nx and ny must be positive"));
            }
        }
        if !(self.time.total >= 0.0 && self.time.total.is_finite()) {
            return Err(invalid("time.total", format!("must be a non-negative time, got {}", self.time.total)));
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("time.dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.time.safety > 0.0 && self.time.safety <= 1.0) {
            return Err(invalid("time.safety", format!("must lie in (0, 1], got {}", self.time.safety)));
        }
        if !(0.5..=1.0).contains(&self.time.gamma) {
            return Err(invalid("time.gamma", format!("must lie in [0.5, 1], got {}", self.time.gamma)));
        }
        if self.output.cadence == 0 {
            return Err(invalid("output.cadence", "must be at least 1"));
        }
        for (region, m) in &self.materials {
            m.validate().map_err(|e| invalid(&format!("materials.{region}"), e.to_string()))?;
        }
        for (i, v) in self.loads.velocity.iter().enumerate() {
            if !(v.t0 > 0.0) {
                return Err(invalid(&format!("loads.velocity[{i}].t0"), "must be positive"));
            }
        }
        if let Some(t) = &self.loads.thermal {
            if !(t.t0 > 0.0) {
                return Err(invalid("loads.thermal.t0", "must be positive"));
            }
        }
        if let Some(w) = self.crack.window {
            if !(w > 0.0) {
                return Err(invalid("crack.window", "must be positive"));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    // Relative mesh paths are relative to the config file.
    if let (Some(file), Some(dir)) = (&cfg.mesh.file, path.parent()) {
        if file.is_relative() {
            cfg.mesh.file = Some(dir.join(file));
        }
    }
    Ok(cfg)
}
