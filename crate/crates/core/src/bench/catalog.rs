//! The builtin benchmark scenarios and mesh construction from a
//! [`MeshSource`].

use std::collections::BTreeMap;
use std::path::Path;

use crate::dynamics::RampShape;
use crate::material::MaterialModel;
use crate::mesh::{generate_structured_grid, insert_seam, parse_gmsh, Mesh2D, Point};

use super::config::{
    Axis, Bounds, ConfigError, CrackConfig, FixedLoad, LoadConfig, MeshSource, OutputConfig, ScenarioConfig,
    StrengthConfig, ThermalLoad, TimeConfig, VelocityLoad,
};
use super::geometry::{
    bending_beam, compact_compression_coarse, interconnect, kalthoff_coarse, BeamGrid, BuiltGeometry,
    InterconnectLayout, BEAM_DEPTH, BEAM_LENGTH, BEAM_SPAN,
};

pub const SCENARIOS: &[&str] = &[
    "kalthoff",
    "bending3p",
    "compact-compression",
    "interconnect-mech",
    "interconnect-thermal",
];

/// Builtin mesh names accepted by `mesh.builtin`.
pub const BUILTIN_MESHES: &[&str] = &["kalthoff-coarse", "bending-beam", "compact-compression-coarse", "interconnect"];

pub fn steel() -> MaterialModel {
    MaterialModel::new("steel", 190e9, 0.3, 8000.0, 2.213e4)
}

pub fn concrete() -> MaterialModel {
    MaterialModel::new("concrete", 28e9, 0.2, 2400.0, 22.0).with_strength(8e6)
}

pub fn pmma() -> MaterialModel {
    MaterialModel::new("pmma", 5.76e9, 0.42, 1180.0, 352.3).with_strength(129.6e6)
}

pub fn copper() -> MaterialModel {
    MaterialModel::new("copper", 117e9, 0.34, 8960.0, 3.38)
}

pub fn oxide() -> MaterialModel {
    MaterialModel::new("oxide", 66e9, 0.17, 2270.0, 9.18)
}

const KALTHOFF_NOTCH_Y: f64 = 0.025;

/// Tolerance used to pick boundary node rows out of generated meshes.
const EDGE_TOL: f64 = 1e-9;

/// Parameter lookup that rejects names the scenario does not know.
struct Params<'a> {
    scenario: &'a str,
    given: &'a BTreeMap<String, f64>,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        self.given.get(key).copied().unwrap_or(default)
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.get(key, default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(ConfigError::Invalid {
                field: format!("params.{key}"),
                msg: format!("must be positive, got {v}"),
            });
        }
        Ok(v)
    }

    fn finish(self) -> Result<BTreeMap<String, f64>, ConfigError> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains(&k.as_str())) {
            return Err(ConfigError::UnknownParam {
                scenario: self.scenario.to_string(),
                param: k.clone(),
            });
        }
        let mut echo = BTreeMap::new();
        for &k in &self.used {
            if let Some(v) = self.given.get(k) {
                echo.insert(k.to_string(), *v);
            }
        }
        Ok(echo)
    }
}

fn bounds(xmin: Option<f64>, xmax: Option<f64>, ymin: Option<f64>, ymax: Option<f64>) -> Bounds {
    Bounds { xmin, xmax, ymin, ymax }
}

/// Full configuration of a builtin benchmark. Parameters override the
/// defaults and are echoed in `params`.
pub fn scenario_catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<ScenarioConfig, ConfigError> {
    let mut p = Params {
        scenario: name,
        given: params,
        used: Vec::new(),
    };
    let mut cfg = match name {
        "kalthoff" => kalthoff(&mut p)?,
        "bending3p" => bending3p(&mut p)?,
        "compact-compression" => compact_compression(&mut p)?,
        "interconnect-mech" => interconnect_mech(&mut p)?,
        "interconnect-thermal" => interconnect_thermal(&mut p)?,
        _ => return Err(ConfigError::UnknownScenario(name.to_string())),
    };
    let mut echo = p.finish()?;
    // Defaults that shape the physics are echoed too.
    for (k, v) in std::mem::take(&mut cfg.params) {
        echo.entry(k).or_insert(v);
    }
    cfg.params = echo;
    cfg.validate()?;
    Ok(cfg)
}

fn kalthoff(p: &mut Params) -> Result<ScenarioConfig, ConfigError> {
    let v0 = p.positive("v0", 16.5)?;
    let t0 = p.positive("t0", 1e-6)?;
    let total = p.positive("total", 90e-6)?;
    let geo = kalthoff_coarse().map_err(mesh_err)?;
    let tip = geo.notch_tip.expect("kalthoff notch");
    let mut params = BTreeMap::new();
    params.insert("v0".into(), v0);
    Ok(ScenarioConfig {
        name: "kalthoff".into(),
        mesh: MeshSource {
            builtin: Some("kalthoff-coarse".into()),
            ..Default::default()
        },
        materials: BTreeMap::from([("plate".into(), steel())]),
        time: TimeConfig {
            dt: None,
            safety: 0.5,
            total,
            gamma: 0.5,
        },
        output: OutputConfig::default(),
        loads: LoadConfig {
            // Impact on the left edge between the notch and the symmetry line.
            velocity: vec![VelocityLoad {
                nodes: bounds(None, Some(EDGE_TOL), None, Some(KALTHOFF_NOTCH_Y - EDGE_TOL)),
                direction: Axis::X,
                v0,
                t0,
                shape: RampShape::Hold,
            }],
            // Symmetry line of the full plate.
            fixed: vec![FixedLoad {
                nodes: bounds(None, None, None, Some(EDGE_TOL)),
                direction: Axis::Y,
            }],
            ..Default::default()
        },
        crack: CrackConfig {
            tips: vec![tip],
            window: Some(5e-6),
            ..Default::default()
        },
        params,
    })
}

fn bending3p(p: &mut Params) -> Result<ScenarioConfig, ConfigError> {
    let gamma = p.get("gamma", 0.765);
    if !(0.0..1.0).contains(&gamma) {
        return Err(ConfigError::Invalid {
            field: "params.gamma".into(),
            msg: format!("notch offset must lie in [0, 1), got {gamma}"),
        });
    }
    let grid_nodes = p.get("grid_nodes", 0.0) != 0.0;
    let v0 = p.positive("v0", 0.06)?;
    let t0 = p.positive("t0", 196e-6)?;
    let total = p.positive("total", 4e-3)?;
    let dt = p.positive("dt", 1e-7)?;
    let grid = if grid_nodes { BeamGrid::Nodes } else { BeamGrid::Cells };
    let geo = bending_beam(gamma, grid).map_err(mesh_err)?;
    let tip = geo.notch_tip.expect("beam notch");
    let mid = 0.5 * BEAM_LENGTH;
    let half = 0.5 * geo.cell + EDGE_TOL;
    let support = |x: f64| nearest_bottom_node_x(&geo, x);
    let (left, right) = (support(mid - 0.5 * BEAM_SPAN), support(mid + 0.5 * BEAM_SPAN));
    let at = |x: f64| bounds(Some(x - EDGE_TOL), Some(x + EDGE_TOL), None, Some(EDGE_TOL));
    let mut params = BTreeMap::new();
    params.insert("gamma".into(), gamma);
    params.insert("grid_nodes".into(), if grid_nodes { 1.0 } else { 0.0 });
    params.insert("v0".into(), v0);
    Ok(ScenarioConfig {
        name: "bending3p".into(),
        mesh: MeshSource {
            builtin: Some("bending-beam".into()),
            params: BTreeMap::from([("gamma".into(), gamma), ("grid_nodes".into(), if grid_nodes { 1.0 } else { 0.0 })]),
            ..Default::default()
        },
        materials: BTreeMap::from([("beam".into(), concrete())]),
        time: TimeConfig {
            dt: Some(dt),
            safety: 0.5,
            total,
            gamma: 0.5,
        },
        output: OutputConfig {
            cadence: 2000,
            ..Default::default()
        },
        loads: LoadConfig {
            velocity: vec![VelocityLoad {
                nodes: bounds(Some(mid - half), Some(mid + half), Some(BEAM_DEPTH - EDGE_TOL), None),
                direction: Axis::Y,
                v0: -v0,
                t0,
                shape: RampShape::Hold,
            }],
            fixed: vec![
                FixedLoad {
                    nodes: at(left),
                    direction: Axis::X,
                },
                FixedLoad {
                    nodes: at(left),
                    direction: Axis::Y,
                },
                FixedLoad {
                    nodes: at(right),
                    direction: Axis::Y,
                },
            ],
            ..Default::default()
        },
        crack: CrackConfig {
            tips: vec![tip],
            // Bottom face around midspan, away from the notch.
            strength: Some(StrengthConfig {
                edges: bounds(Some(mid - 0.125 * BEAM_SPAN), Some(mid + 0.125 * BEAM_SPAN), None, Some(EDGE_TOL)),
                max_tips: 1,
            }),
            window: Some(20e-6),
            ..Default::default()
        },
        params,
    })
}

fn nearest_bottom_node_x(geo: &BuiltGeometry, x: f64) -> f64 {
    geo.mesh
        .nodes
        .iter()
        .filter(|n| n[1].abs() < EDGE_TOL)
        .map(|n| n[0])
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
        .unwrap_or(x)
}

/// Proxy specimen size, m.
pub const CC_WIDTH: f64 = 0.06;
pub const CC_HEIGHT: f64 = 0.05;

fn compact_compression(p: &mut Params) -> Result<ScenarioConfig, ConfigError> {
    let v0 = p.positive("v0", 20.0)?;
    let t0 = p.positive("t0", 40e-6)?;
    let total = p.positive("total", 140e-6)?;
    let dt = p.positive("dt", 1e-8)?;
    let strip = p.positive("strip", 0.25 * CC_HEIGHT)?;
    let geo = compact_compression_coarse(CC_WIDTH, CC_HEIGHT).map_err(mesh_err)?;
    let tip = geo.notch_tip.expect("specimen notch");
    let mut params = BTreeMap::new();
    params.insert("v0".into(), v0);
    params.insert("strip".into(), strip);
    Ok(ScenarioConfig {
        name: "compact-compression".into(),
        mesh: MeshSource {
            builtin: Some("compact-compression-coarse".into()),
            params: BTreeMap::from([("width".into(), CC_WIDTH), ("height".into(), CC_HEIGHT)]),
            ..Default::default()
        },
        materials: BTreeMap::from([("specimen".into(), pmma())]),
        time: TimeConfig {
            dt: Some(dt),
            safety: 0.5,
            total,
            gamma: 0.5,
        },
        output: OutputConfig {
            cadence: 500,
            ..Default::default()
        },
        loads: LoadConfig {
            // Bar impact on the lower left of the specimen; everything else is free.
            velocity: vec![VelocityLoad {
                nodes: bounds(None, Some(EDGE_TOL), None, Some(strip + EDGE_TOL)),
                direction: Axis::X,
                v0,
                t0,
                shape: RampShape::Hold,
            }],
            ..Default::default()
        },
        crack: CrackConfig {
            tips: vec![tip],
            window: Some(4e-6),
            ..Default::default()
        },
        params,
    })
}

fn interconnect_common(p: &mut Params) -> Result<(InterconnectLayout, BTreeMap<String, f64>), ConfigError> {
    let d = InterconnectLayout::default();
    let layout = InterconnectLayout {
        cell: p.positive("cell", d.cell)?,
        nx: p.positive("nx", d.nx as f64)? as usize,
        ny: p.positive("ny", d.ny as f64)? as usize,
        line_width: p.positive("line_width", d.line_width as f64)? as usize,
        line_height: p.positive("line_height", d.line_height as f64)? as usize,
        pitch: p.positive("pitch", d.pitch as f64)? as usize,
        levels: p.get("levels", d.levels as f64).max(0.0) as usize,
        level_pitch: p.positive("level_pitch", d.level_pitch as f64)? as usize,
        first_level: p.get("first_level", d.first_level as f64).max(0.0) as usize,
        notch_row: p.get("notch_row", d.notch_row as f64).max(0.0) as usize,
        notch_length: p.positive("notch_length", d.notch_length as f64)? as usize,
    };
    interconnect(&layout).map_err(mesh_err)?;
    Ok((layout, layout_params(&layout)))
}

fn layout_params(l: &InterconnectLayout) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("cell".into(), l.cell),
        ("nx".into(), l.nx as f64),
        ("ny".into(), l.ny as f64),
        ("line_width".into(), l.line_width as f64),
        ("line_height".into(), l.line_height as f64),
        ("pitch".into(), l.pitch as f64),
        ("levels".into(), l.levels as f64),
        ("level_pitch".into(), l.level_pitch as f64),
        ("first_level".into(), l.first_level as f64),
        ("notch_row".into(), l.notch_row as f64),
        ("notch_length".into(), l.notch_length as f64),
    ])
}

fn interconnect_materials(thermal: bool) -> BTreeMap<String, MaterialModel> {
    let (mut cu, mut ox) = (copper(), oxide());
    if thermal {
        cu = cu.with_alpha(16.5e-6);
        ox = ox.with_alpha(0.5e-6);
    }
    BTreeMap::from([("copper".into(), cu), ("oxide".into(), ox)])
}

fn interconnect_mech(p: &mut Params) -> Result<ScenarioConfig, ConfigError> {
    let v0 = p.positive("v0", 200.0)?;
    let t0 = p.positive("t0", 1e-9)?;
    let total = p.positive("total", 1e-8)?;
    let (layout, mesh_params) = interconnect_common(p)?;
    let geo = interconnect(&layout).map_err(mesh_err)?;
    let mut params = BTreeMap::new();
    params.insert("v0".into(), v0);
    Ok(ScenarioConfig {
        name: "interconnect-mech".into(),
        mesh: MeshSource {
            builtin: Some("interconnect".into()),
            params: mesh_params,
            ..Default::default()
        },
        materials: interconnect_materials(false),
        time: TimeConfig {
            dt: None,
            safety: 0.5,
            total,
            gamma: 0.5,
        },
        output: OutputConfig::default(),
        loads: LoadConfig {
            velocity: vec![
                VelocityLoad {
                    nodes: bounds(None, None, Some(geo.height - EDGE_TOL * geo.height), None),
                    direction: Axis::Y,
                    v0,
                    t0,
                    shape: RampShape::Hold,
                },
                VelocityLoad {
                    nodes: bounds(None, None, None, Some(EDGE_TOL * geo.height)),
                    direction: Axis::Y,
                    v0: -v0,
                    t0,
                    shape: RampShape::Hold,
                },
            ],
            ..Default::default()
        },
        crack: CrackConfig {
            tips: vec![geo.notch_tip.expect("interconnect notch")],
            window: Some(0.5e-9),
            ..Default::default()
        },
        params,
    })
}

fn interconnect_thermal(p: &mut Params) -> Result<ScenarioConfig, ConfigError> {
    let delta = p.get("delta_t", -800.0);
    let t0 = p.positive("t0", 8e-10)?;
    let total = p.positive("total", 1e-8)?;
    let return_to_zero = p.get("return_to_zero", 0.0) != 0.0;
    let (layout, mesh_params) = interconnect_common(p)?;
    let geo = interconnect(&layout).map_err(mesh_err)?;
    let (lo, hi) = (EDGE_TOL * geo.height, geo.height * (1.0 - EDGE_TOL));
    let fixed = [Axis::X, Axis::Y]
        .into_iter()
        .flat_map(|direction| {
            [
                FixedLoad {
                    nodes: bounds(None, None, Some(hi), None),
                    direction,
                },
                FixedLoad {
                    nodes: bounds(None, None, None, Some(lo)),
                    direction,
                },
            ]
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("delta_t".into(), delta);
    Ok(ScenarioConfig {
        name: "interconnect-thermal".into(),
        mesh: MeshSource {
            builtin: Some("interconnect".into()),
            params: mesh_params,
            ..Default::default()
        },
        materials: interconnect_materials(true),
        time: TimeConfig {
            dt: None,
            safety: 0.5,
            total,
            gamma: 0.5,
        },
        output: OutputConfig::default(),
        loads: LoadConfig {
            fixed,
            thermal: Some(ThermalLoad {
                delta,
                t0,
                shape: if return_to_zero { RampShape::ReturnToZero } else { RampShape::Hold },
            }),
            ..Default::default()
        },
        crack: CrackConfig {
            tips: vec![geo.notch_tip.expect("interconnect notch")],
            window: Some(0.5e-9),
            ..Default::default()
        },
        params,
    })
}

fn mesh_err(e: crate::mesh::MeshError) -> ConfigError {
    ConfigError::Invalid {
        field: "mesh".into(),
        msg: e.to_string(),
    }
}

/// Builds a builtin mesh by name.
pub fn builtin_mesh(name: &str, params: &BTreeMap<String, f64>) -> Result<BuiltGeometry, ConfigError> {
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let allowed: &[&str] = match name {
        "kalthoff-coarse" => &[],
        "bending-beam" => &["gamma", "grid_nodes"],
        "compact-compression-coarse" => &["width", "height"],
        "interconnect" => &[
            "cell", "nx", "ny", "line_width", "line_height", "pitch", "levels", "level_pitch", "first_level", "notch_row",
            "notch_length",
        ],
        _ => {
            return Err(ConfigError::Invalid {
                field: "mesh.builtin".into(),
                msg: format!("unknown builtin mesh `{name}`; expected one of {}", BUILTIN_MESHES.join(", ")),
            })
        }
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ConfigError::Invalid {
            field: format!("mesh.params.{k}"),
            msg: format!("not a parameter of `{name}`"),
        });
    }
    let geo = match name {
        "kalthoff-coarse" => kalthoff_coarse(),
        "bending-beam" => bending_beam(
            get("gamma", 0.765),
            if get("grid_nodes", 0.0) != 0.0 { BeamGrid::Nodes } else { BeamGrid::Cells },
        ),
        "compact-compression-coarse" => compact_compression_coarse(get("width", CC_WIDTH), get("height", CC_HEIGHT)),
        _ => {
            let d = InterconnectLayout::default();
            let n = |k: &str, v: usize| get(k, v as f64).max(0.0) as usize;
            interconnect(&InterconnectLayout {
                cell: get("cell", d.cell),
                nx: n("nx", d.nx),
                ny: n("ny", d.ny),
                line_width: n("line_width", d.line_width),
                line_height: n("line_height", d.line_height),
                pitch: n("pitch", d.pitch),
                levels: n("levels", d.levels),
                level_pitch: n("level_pitch", d.level_pitch),
                first_level: n("first_level", d.first_level),
                notch_row: n("notch_row", d.notch_row),
                notch_length: n("notch_length", d.notch_length),
            })
        }
    };
    geo.map_err(mesh_err)
}

/// Mesh of a configuration, with seams inserted. `base` resolves relative
/// file paths.
pub fn build_mesh(source: &MeshSource, base: Option<&Path>) -> Result<Mesh2D, ConfigError> {
    let mut mesh = if let Some(name) = &source.builtin {
        builtin_mesh(name, &source.params)?.mesh
    } else if let Some(file) = &source.file {
        let path = match base {
            Some(b) if file.is_relative() => b.join(file),
            _ => file.clone(),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io { path: path.clone(), source: e })?;
        parse_gmsh(&text).map_err(|e| ConfigError::Invalid {
            field: "mesh.file".into(),
            msg: format!("{}: {e}", path.display()),
        })?
    } else if let Some(g) = &source.grid {
        generate_structured_grid(g.width, g.height, g.nx, g.ny, g.kind, g.split).map_err(mesh_err)?
    } else {
        return Err(ConfigError::Invalid {
            field: "mesh".into(),
            msg: "no mesh source".into(),
        });
    };
    for (i, seam) in source.seams.iter().enumerate() {
        mesh = insert_seam(&mesh, seam).map_err(|e| ConfigError::Invalid {
            field: format!("mesh.seams[{i}]"),
            msg: e.to_string(),
        })?;
    }
    Ok(mesh)
}

/// Notch-end reference point of a builtin scenario.
pub fn notch_point(cfg: &ScenarioConfig) -> Option<Point> {
    cfg.crack.tips.first().copied()
}

/// Midspan of the beam, for classifying bending runs.
pub fn beam_midspan() -> f64 {
    0.5 * BEAM_LENGTH
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn all_scenarios_build() {
        for name in SCENARIOS {
            let cfg = scenario_catalog(name, &none()).unwrap();
            let mesh = build_mesh(&cfg.mesh, None).unwrap();
            for r in &mesh.regions {
                assert!(cfg.materials.contains_key(r), "{name}: {r}");
            }
        }
    }

    #[test]
    fn kalthoff_echoes_v0_override() {
        let cfg = scenario_catalog("kalthoff", &BTreeMap::from([("v0".into(), 33.0)])).unwrap();
        assert_eq!(cfg.params["v0"], 33.0);
        assert_eq!(cfg.loads.velocity[0].v0, 33.0);
    }

    #[test]
    fn bending_notch_offset() {
        let cfg = scenario_catalog("bending3p", &BTreeMap::from([("gamma".into(), 0.765)])).unwrap();
        let tip = notch_point(&cfg).unwrap();
        let offset = beam_midspan() - tip[0];
        assert!((offset - 0.765 * 0.5 * BEAM_SPAN).abs() < 1e-12);
    }

    #[test]
    fn compact_compression_mesh_size() {
        let cfg = scenario_catalog("compact-compression", &none()).unwrap();
        let mesh = build_mesh(&cfg.mesh, None).unwrap();
        assert_eq!((mesh.nodes.len(), mesh.elements.len()), (1287, 2393));
        assert_eq!(cfg.time.dt, Some(1e-8));
    }

    #[test]
    fn bad_names_and_params() {
        assert!(matches!(scenario_catalog("nope", &none()), Err(ConfigError::UnknownScenario(_))));
        let bad = BTreeMap::from([("speed".into(), 1.0)]);
        assert!(matches!(scenario_catalog("kalthoff", &bad), Err(ConfigError::UnknownParam { .. })));
        let bad = BTreeMap::from([("gamma".into(), 1.5)]);
        assert!(scenario_catalog("bending3p", &bad).is_err());
        let bad = BTreeMap::from([("v0".into(), -1.0)]);
        assert!(scenario_catalog("kalthoff", &bad).is_err());
    }

    #[test]
    fn catalog_configs_round_trip() {
        for name in SCENARIOS {
            let cfg = scenario_catalog(name, &none()).unwrap();
            let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }
}
