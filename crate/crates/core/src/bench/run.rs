//! Drives a configured scenario to completion and collects its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::cem::{crack_metrics, PathPoint};
use crate::dynamics::{stable_timestep, EnergyLedger, LoadProgram, ThermalRamp, VelocityBc};
use crate::material::MaterialModel;
use crate::mesh::{build_edge_topology, distance, EdgeTopology, Mesh2D, Point};
use crate::simulation::{Simulation, SimulationError, SimulationSetup, StrengthInitiation};

use super::catalog::build_mesh;
use super::config::{Bounds, ConfigError, ScenarioConfig};
use super::output::{
    mesh_checksum, sha256_hex, snapshot_cells, write_crack_path, write_timeseries, write_vtk_snapshot, SnapshotView,
    TimeRow,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("setup: {0}")]
    Setup(#[from] SimulationError),
    #[error("numerical instability at step {step} (t = {time:e} s): {message}")]
    Instability { step: usize, time: f64, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Setup(_) => 2,
            RunError::Instability { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where artifacts go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Directory that relative mesh paths are resolved against.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub nodes: usize,
    pub elements: usize,
    pub dt: f64,
    pub steps: usize,
    pub end_time: f64,
    pub ledger: EnergyLedger,
    pub max_external_work: f64,
    /// Largest `|W - (T + U + U_d)|` over all steps.
    pub max_imbalance: f64,
    pub initiation_time: Option<f64>,
    pub max_tip_speed: f64,
    pub crack_length: f64,
    pub failed_elements: usize,
    pub partial_elements: usize,
    pub snapshots: usize,
    pub wall_time_s: f64,
    /// Diagnostics of an aborted run.
    pub instability: Option<String>,
}

/// What a run produced. The tables are kept in memory even when files are
/// written.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub history: Vec<TimeRow>,
    pub path: Vec<PathPoint>,
    pub timeseries_csv: String,
    pub crack_path_csv: String,
    pub manifest: serde_json::Value,
    pub files: Vec<PathBuf>,
}

fn dofs_in(mesh: &Mesh2D, b: &Bounds, axis: usize) -> Vec<usize> {
    mesh.nodes_where(|p| b.contains(p)).into_iter().map(|n| 2 * n + axis).collect()
}

fn boundary_edges_in(topo: &EdgeTopology, b: &Bounds) -> Vec<usize> {
    topo.boundary_edges().filter(|&k| b.contains(topo.edges[k].quadrature)).collect()
}

/// Boundary edge nearest to `p`. The two sides of a seam share a midpoint;
/// between such ties the side whose element centroid is closer to `p` wins.
pub fn tip_edge(mesh: &Mesh2D, topo: &EdgeTopology, p: Point) -> Option<usize> {
    let d = |k: usize| distance(topo.edges[k].quadrature, p);
    let best = topo.boundary_edges().map(d).min_by(f64::total_cmp)?;
    let tol = 1e-12 * (1.0 + best);
    topo.boundary_edges().filter(|&k| d(k) <= best + tol).min_by(|&a, &b| {
        let ca = distance(mesh.element_centroid(topo.edges[a].elements[0]), p);
        let cb = distance(mesh.element_centroid(topo.edges[b].elements[0]), p);
        ca.total_cmp(&cb).then(a.cmp(&b))
    })
}

/// A configured simulation plus what the driver needs to report on it.
pub struct Prepared {
    pub sim: Simulation,
    pub dt: f64,
    pub steps: usize,
    pub window: f64,
    pub mesh_sha256: String,
    pub initial_tips: Vec<(Point, usize)>,
}

/// Resolves node boxes, tips and materials against the mesh.
pub fn prepare(cfg: &ScenarioConfig, base: Option<&Path>) -> Result<Prepared, RunError> {
    cfg.validate()?;
    let mesh = build_mesh(&cfg.mesh, base)?;
    let mesh_sha256 = mesh_checksum(&mesh);
    let mut region_materials: Vec<Option<MaterialModel>> = Vec::with_capacity(mesh.regions.len());
    for (r, name) in mesh.regions.iter().enumerate() {
        let m = cfg.materials.get(name).cloned();
        if m.is_none() && mesh.elements.iter().any(|e| e.region == r) {
            return Err(ConfigError::MissingMaterial(name.clone()).into());
        }
        region_materials.push(m);
    }
    for name in cfg.materials.keys() {
        if !mesh.regions.contains(name) {
            warn!("material for unknown region `{name}` is unused");
        }
    }
    let topo = build_edge_topology(&mesh).map_err(SimulationError::from)?;

    let mut velocity = Vec::new();
    for (i, v) in cfg.loads.velocity.iter().enumerate() {
        let dofs = dofs_in(&mesh, &v.nodes, v.direction.index());
        if dofs.is_empty() {
            return Err(ConfigError::Invalid {
                field: format!("loads.velocity[{i}].nodes"),
                msg: "selects no nodes".into(),
            }
            .into());
        }
        velocity.push(VelocityBc {
            dofs,
            v0: v.v0,
            t0: v.t0,
            shape: v.shape,
        });
    }
    let mut fixed = Vec::new();
    for (i, f) in cfg.loads.fixed.iter().enumerate() {
        let dofs = dofs_in(&mesh, &f.nodes, f.direction.index());
        if dofs.is_empty() {
            return Err(ConfigError::Invalid {
                field: format!("loads.fixed[{i}].nodes"),
                msg: "selects no nodes".into(),
            }
            .into());
        }
        fixed.extend(dofs);
    }
    fixed.sort_unstable();
    fixed.dedup();
    let loads = LoadProgram {
        velocity,
        fixed,
        thermal: cfg.loads.thermal.as_ref().map(|t| ThermalRamp {
            delta: t.delta,
            t0: t.t0,
            shape: t.shape,
        }),
    };
    let mut tractions = Vec::new();
    for (i, t) in cfg.loads.traction.iter().enumerate() {
        let edges = boundary_edges_in(&topo, &t.edges);
        if edges.is_empty() {
            return Err(ConfigError::Invalid {
                field: format!("loads.traction[{i}].edges"),
                msg: "selects no boundary edges".into(),
            }
            .into());
        }
        tractions.extend(edges.into_iter().map(|k| (k, t.value)));
    }

    let mut initial_tips = Vec::new();
    for (i, &p) in cfg.crack.tips.iter().enumerate() {
        let edge = tip_edge(&mesh, &topo, p).ok_or_else(|| ConfigError::Invalid {
            field: format!("crack.tips[{i}]"),
            msg: "mesh has no boundary edges".into(),
        })?;
        initial_tips.push((p, edge));
    }
    let strength = match &cfg.crack.strength {
        Some(s) => {
            let edges = boundary_edges_in(&topo, &s.edges);
            if edges.is_empty() {
                return Err(ConfigError::Invalid {
                    field: "crack.strength.edges".into(),
                    msg: "selects no boundary edges".into(),
                }
                .into());
            }
            if !region_materials.iter().flatten().any(|m| m.tensile_strength.is_some()) {
                return Err(ConfigError::Invalid {
                    field: "crack.strength".into(),
                    msg: "no material defines a tensile strength `ft`".into(),
                }
                .into());
            }
            Some(StrengthInitiation {
                edges,
                max_tips: s.max_tips,
            })
        }
        None => None,
    };

    let dt = match cfg.time.dt {
        Some(dt) => dt,
        None => stable_timestep(&mesh, &region_materials, cfg.time.safety).map_err(SimulationError::from)?,
    };
    // Whole steps; a total within rounding of a multiple of dt is not padded.
    let ratio = cfg.time.total / dt;
    let steps = if (ratio - ratio.round()).abs() < 1e-6 { ratio.round() } else { ratio.ceil() } as usize;
    let window = cfg.crack.window.unwrap_or(50.0 * dt).max(2.0 * dt);

    let sim = Simulation::new(SimulationSetup {
        mesh,
        region_materials,
        loads,
        body: cfg.loads.body.unwrap_or([0.0, 0.0]),
        tractions,
        dt,
        gamma: cfg.time.gamma,
        initial_tips: initial_tips.iter().map(|t| t.1).collect(),
        strength,
        fracture: cfg.crack.enabled,
    })?;
    Ok(Prepared {
        sim,
        dt,
        steps,
        window,
        mesh_sha256,
        initial_tips,
    })
}

fn write_file(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

fn snapshot(sim: &Simulation) -> String {
    let stresses = sim.model.edge_stresses();
    write_vtk_snapshot(&SnapshotView {
        mesh: &sim.model.mesh,
        topo: &sim.model.topo,
        states: &sim.front.states,
        u: &sim.state.u,
        v: &sim.state.v,
        edge_stress: &stresses,
        time: sim.time(),
    })
}

/// Runs a scenario. On instability the artifacts gathered so far are
/// written before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunArtifacts, RunError> {
    let started = Instant::now();
    let mut prep = prepare(cfg, opts.base_dir.as_deref())?;
    let dir = opts.out_dir.clone();
    if let Some(d) = &dir {
        std::fs::create_dir_all(d).map_err(|source| RunError::Io {
            path: d.clone(),
            source,
        })?;
    }
    let mut files = Vec::new();
    let cadence = cfg.output.cadence;
    let sim = &mut prep.sim;
    info!(
        "{}: {} nodes, {} elements, dt = {:e} s, {} steps",
        cfg.name,
        sim.model.mesh.nodes.len(),
        sim.model.mesh.elements.len(),
        prep.dt,
        prep.steps
    );

    let mut history = vec![TimeRow {
        time: sim.time(),
        ledger: sim.ledger(),
    }];
    let mut snapshots = Vec::new();
    let mut snapshot_log = Vec::new();
    let mut emit = |sim: &Simulation, files: &mut Vec<PathBuf>| -> Result<(), RunError> {
        let index = snapshots.len();
        let cells = snapshot_cells(&sim.model.mesh, &sim.front.states).len();
        snapshot_log.push(serde_json::json!({
            "index": index,
            "step": sim.steps(),
            "time_s": sim.time(),
            "cells": cells,
            "failed": sim.front.failed_count(),
            "partial": sim.front.partial_count(),
        }));
        if let (Some(d), true) = (&dir, cfg.output.vtk) {
            let name = format!("snapshot_{index:05}.vtk");
            write_file(d, &name, &snapshot(sim), files)?;
        }
        snapshots.push(sim.steps());
        Ok(())
    };
    emit(sim, &mut files)?;

    let mut instability = None;
    for _ in 0..prep.steps {
        match sim.step() {
            Ok(_) => {}
            Err(e) if e.is_instability() => {
                warn!("{}: aborting: {e}", cfg.name);
                instability = Some((sim.steps() + 1, sim.time(), e.to_string()));
                break;
            }
            Err(e) => return Err(e.into()),
        }
        history.push(TimeRow {
            time: sim.time(),
            ledger: sim.ledger(),
        });
        if sim.steps() % cadence == 0 {
            emit(sim, &mut files)?;
            info!(
                "{}: step {} t = {:e} s, cracked length {:e} m",
                cfg.name,
                sim.steps(),
                sim.time(),
                sim.front.total_length()
            );
        }
    }

    let times: Vec<f64> = history.iter().map(|r| r.time).collect();
    let metrics = crack_metrics(&sim.front.path, &times, prep.window, prep.dt).map_err(SimulationError::from)?;
    let timeseries_csv = write_timeseries(&history, &metrics);
    let crack_path_csv = write_crack_path(&sim.front.path);
    let ledger = sim.ledger();
    let summary = RunSummary {
        name: cfg.name.clone(),
        nodes: sim.model.mesh.nodes.len(),
        elements: sim.model.mesh.elements.len(),
        dt: prep.dt,
        steps: sim.steps(),
        end_time: sim.time(),
        ledger,
        max_external_work: history.iter().map(|r| r.ledger.external_work).fold(0.0, f64::max),
        max_imbalance: history.iter().map(|r| r.ledger.imbalance().abs()).fold(0.0, f64::max),
        initiation_time: super::analysis::initiation_time(&sim.front.path),
        max_tip_speed: metrics.iter().map(|m| m.speed).fold(0.0, f64::max),
        crack_length: sim.front.total_length(),
        failed_elements: sim.front.failed_count(),
        partial_elements: sim.front.partial_count(),
        snapshots: snapshots.len(),
        wall_time_s: started.elapsed().as_secs_f64(),
        instability: instability.as_ref().map(|i| i.2.clone()),
    };
    let failed: Vec<usize> = (0..sim.front.states.len())
        .filter(|&e| sim.front.failure_time[e].is_some())
        .collect();
    let config_text = cfg.to_toml_string();
    let manifest = serde_json::json!({
        "scenario": cfg.name,
        "config": cfg,
        "config_sha256": sha256_hex(config_text.as_bytes()),
        "mesh_sha256": prep.mesh_sha256,
        "initial_tips": prep.initial_tips.iter().map(|(p, e)| serde_json::json!({"point": p, "edge": e})).collect::<Vec<_>>(),
        "summary": summary,
        "snapshots": snapshot_log,
        "failed_elements": failed,
        "files": {
            "timeseries": "timeseries.csv",
            "crack_path": "crack_path.csv",
        },
    });
    if let Some(d) = &dir {
        write_file(d, "timeseries.csv", &timeseries_csv, &mut files)?;
        write_file(d, "crack_path.csv", &crack_path_csv, &mut files)?;
        write_file(d, "config.toml", &config_text, &mut files)?;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(d, "manifest.json", &text, &mut files)?;
    }
    if let Some((step, time, message)) = instability {
        return Err(RunError::Instability { step, time, message });
    }
    Ok(RunArtifacts {
        summary,
        history,
        path: sim.front.path.clone(),
        timeseries_csv,
        crack_path_csv,
        manifest,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::catalog::scenario_catalog;
    use std::collections::BTreeMap;

    #[test]
    fn zero_duration_run_writes_initial_snapshot_only() {
        let mut cfg = scenario_catalog("kalthoff", &BTreeMap::new()).unwrap();
        cfg.time.total = 0.0;
        let dir = tempfile::tempdir().unwrap();
        let out = run_scenario(
            &cfg,
            &RunOptions {
                out_dir: Some(dir.path().to_path_buf()),
                base_dir: None,
            },
        )
        .unwrap();
        assert_eq!(out.summary.steps, 0);
        assert_eq!(out.summary.snapshots, 1);
        assert!(dir.path().join("snapshot_00000.vtk").exists());
        assert!(!dir.path().join("snapshot_00001.vtk").exists());
        assert_eq!(out.timeseries_csv.lines().count(), 2);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["mesh_sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn snapshot_count_follows_cadence() {
        let mut cfg = scenario_catalog("interconnect-mech", &BTreeMap::new()).unwrap();
        cfg.time.dt = Some(5e-12);
        cfg.time.total = 23.0 * 5e-12;
        cfg.output.cadence = 5;
        let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.summary.steps, 23);
        assert_eq!(out.summary.snapshots, 23 / 5 + 1);
        assert_eq!(out.history.len(), 24);
    }

    #[test]
    fn missing_material_is_a_config_error() {
        let mut cfg = scenario_catalog("interconnect-mech", &BTreeMap::new()).unwrap();
        cfg.materials.remove("copper");
        let err = run_scenario(&cfg, &RunOptions::default()).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn blow_up_is_reported() {
        let mut cfg = scenario_catalog("kalthoff", &BTreeMap::new()).unwrap();
        cfg.time.dt = Some(20.0 * 8.8e-8);
        cfg.time.total = 400.0 * 20.0 * 8.8e-8;
        cfg.crack.enabled = false;
        let err = run_scenario(&cfg, &RunOptions::default()).err().unwrap();
        assert_eq!(err.exit_code(), 3, "{err}");
    }
}
