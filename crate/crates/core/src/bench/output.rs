//! Run artifacts: legacy VTK snapshots, the time-series and crack-path
//! tables, and the JSON manifest.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cem::{max_principal, CrackSample, PathPoint};
use crate::dynamics::EnergyLedger;
use crate::esfem::ElementState;
use crate::material::Voigt;
use crate::mesh::{write_gmsh, EdgeTopology, ElementKind, Mesh2D};

/// Everything a snapshot needs, borrowed from a running simulation.
pub struct SnapshotView<'a> {
    pub mesh: &'a Mesh2D,
    pub topo: &'a EdgeTopology,
    pub states: &'a [ElementState],
    pub u: &'a [f64],
    pub v: &'a [f64],
    pub edge_stress: &'a [Option<Voigt>],
    pub time: f64,
}

/// Cells written for a snapshot: intact elements as they are, partially
/// split quads as their surviving triangle, failed elements left out.
pub fn snapshot_cells(mesh: &Mesh2D, states: &[ElementState]) -> Vec<(usize, Vec<usize>)> {
    mesh.elements
        .iter()
        .enumerate()
        .filter_map(|(e, el)| match states[e] {
            ElementState::Intact => Some((e, el.nodes.clone())),
            ElementState::Partial { surviving } => Some((e, surviving.to_vec())),
            ElementState::Failed => None,
        })
        .collect()
}

/// Mean maximum principal stress of the edges of each element that still
/// carry a smoothing domain.
fn cell_principal(view: &SnapshotView, e: usize) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for &k in &view.topo.element_edges[e] {
        if let Some(s) = view.edge_stress.get(k).copied().flatten() {
            sum += max_principal(&s).0;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn write_vtk_snapshot(view: &SnapshotView) -> String {
    let mesh = view.mesh;
    let cells = snapshot_cells(mesh, view.states);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "crack snapshot t={:e}", view.time);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0] + view.u[2 * i], p[1] + view.u[2 * i + 1]);
    }
    let size: usize = cells.iter().map(|(_, n)| n.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", cells.len(), size);
    for (_, nodes) in &cells {
        let _ = write!(s, "{}", nodes.len());
        for n in nodes {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for (_, nodes) in &cells {
        let _ = writeln!(s, "{}", if nodes.len() == 3 { 5 } else { 9 });
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.nodes.len());
    for (name, field) in [("displacement", view.u), ("velocity", view.v)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for i in 0..mesh.nodes.len() {
            let _ = writeln!(s, "{:e} {:e} 0", field[2 * i], field[2 * i + 1]);
        }
    }
    let _ = writeln!(s, "CELL_DATA {}", cells.len());
    s.push_str("SCALARS max_principal_stress double 1\nLOOKUP_TABLE default\n");
    for (e, _) in &cells {
        let _ = writeln!(s, "{:e}", cell_principal(view, *e));
    }
    s.push_str("SCALARS failure int 1\nLOOKUP_TABLE default\n");
    for (e, _) in &cells {
        let flag = match view.states[*e] {
            ElementState::Intact => 0,
            _ => 1,
        };
        let _ = writeln!(s, "{flag}");
    }
    s
}

/// One row of the time-series table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeRow {
    pub time: f64,
    pub ledger: EnergyLedger,
}

pub const TIMESERIES_HEADER: &str = "time_s,kinetic_J_per_m,strain_J_per_m,external_work_J_per_m,dissipated_J_per_m,crack_length_m,tip_speed_m_per_s";

/// `rows` and `metrics` are aligned by index.
pub fn write_timeseries(rows: &[TimeRow], metrics: &[CrackSample]) -> String {
    let mut s = String::with_capacity(160 * (rows.len() + 1));
    s.push_str(TIMESERIES_HEADER);
    s.push('\n');
    for (r, m) in rows.iter().zip(metrics) {
        let l = &r.ledger;
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.time, l.kinetic, l.strain, l.external_work, l.dissipated, m.length, m.speed
        );
    }
    s
}

pub const CRACK_PATH_HEADER: &str = "tip,time_s,x_m,y_m,length_m,g_J_per_m2,kind";

pub fn write_crack_path(path: &[PathPoint]) -> String {
    let mut s = String::from(CRACK_PATH_HEADER);
    s.push('\n');
    for p in path {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            p.tip,
            p.time,
            p.point[0],
            p.point[1],
            p.length,
            p.g,
            p.kind.as_str()
        );
    }
    s
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Checksum of the mesh in its canonical text form.
pub fn mesh_checksum(mesh: &Mesh2D) -> String {
    sha256_hex(write_gmsh(mesh).as_bytes())
}

/// Human-readable mesh statistics.
pub fn mesh_info(mesh: &Mesh2D, topo: &EdgeTopology) -> String {
    let (lo, hi) = mesh.bounding_box();
    let csts = mesh.elements.iter().filter(|e| e.kind == ElementKind::Cst).count();
    let min_edge = (0..mesh.elements.len())
        .map(|e| mesh.element_min_edge(e))
        .fold(f64::INFINITY, f64::min);
    let mut s = String::new();
    let _ = writeln!(s, "nodes          {}", mesh.nodes.len());
    let _ = writeln!(
        s,
        "elements       {} ({} triangles, {} quadrilaterals)",
        mesh.elements.len(),
        csts,
        mesh.elements.len() - csts
    );
    let _ = writeln!(
        s,
        "edges          {} ({} boundary)",
        topo.edges.len(),
        topo.boundary_edges().count()
    );
    let _ = writeln!(s, "seam edges     {}", mesh.seam_edges.len());
    let _ = writeln!(s, "bounding box   [{:e}, {:e}] x [{:e}, {:e}] m", lo[0], hi[0], lo[1], hi[1]);
    let _ = writeln!(s, "area           {:e} m^2", mesh.total_area());
    let _ = writeln!(s, "min edge       {:e} m", min_edge);
    for (name, count) in mesh.region_histogram() {
        let _ = writeln!(s, "region {name:<8} {count} elements");
    }
    let _ = writeln!(s, "sha256         {}", mesh_checksum(mesh));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_edge_topology, Element};

    fn one_triangle() -> Mesh2D {
        Mesh2D::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![Element::cst([0, 1, 2], 0)],
            vec!["solid".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_element_vtk() {
        let mesh = one_triangle();
        let topo = build_edge_topology(&mesh).unwrap();
        let u = vec![0.0; 6];
        let stress = vec![Some([1.0, 0.0, 0.0]); topo.edges.len()];
        let text = write_vtk_snapshot(&SnapshotView {
            mesh: &mesh,
            topo: &topo,
            states: &[ElementState::Intact],
            u: &u,
            v: &u,
            edge_stress: &stress,
            time: 0.0,
        });
        assert!(text.contains("CELLS 1 4\n3 0 1 2\n"));
        assert!(text.contains("CELL_TYPES 1\n5\n"));
        assert!(text.contains("LOOKUP_TABLE default\n1e0\n"));
    }

    #[test]
    fn two_triangle_patch_golden() {
        let mesh = Mesh2D::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![Element::cst([0, 1, 2], 0), Element::cst([0, 2, 3], 0)],
            vec!["solid".into()],
        )
        .unwrap();
        let topo = build_edge_topology(&mesh).unwrap();
        let u = vec![0.0, 0.0, 0.5, 0.0, 0.5, 0.25, 0.0, 0.25];
        let v = vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let stress = vec![Some([2.0, 1.0, 0.0]); topo.edges.len()];
        let text = write_vtk_snapshot(&SnapshotView {
            mesh: &mesh,
            topo: &topo,
            states: &[ElementState::Intact, ElementState::Intact],
            u: &u,
            v: &v,
            edge_stress: &stress,
            time: 2.5e-6,
        });
        let expected = "# vtk DataFile Version 3.0\n\
crack snapshot t=2.5e-6\n\
ASCII\n\
DATASET UNSTRUCTURED_GRID\n\
POINTS 4 double\n\
0e0 0e0 0\n1.5e0 0e0 0\n1.5e0 1.25e0 0\n0e0 1.25e0 0\n\
CELLS 2 8\n3 0 1 2\n3 0 2 3\n\
CELL_TYPES 2\n5\n5\n\
POINT_DATA 4\n\
VECTORS displacement double\n\
0e0 0e0 0\n5e-1 0e0 0\n5e-1 2.5e-1 0\n0e0 2.5e-1 0\n\
VECTORS velocity double\n\
0e0 0e0 0\n1e0 0e0 0\n1e0 0e0 0\n0e0 0e0 0\n\
CELL_DATA 2\n\
SCALARS max_principal_stress double 1\n\
LOOKUP_TABLE default\n2e0\n2e0\n\
SCALARS failure int 1\n\
LOOKUP_TABLE default\n0\n0\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn failed_elements_are_omitted() {
        let mesh = one_triangle();
        assert!(snapshot_cells(&mesh, &[ElementState::Failed]).is_empty());
    }

    #[test]
    fn empty_timeseries_is_header_only() {
        assert_eq!(write_timeseries(&[], &[]), format!("{TIMESERIES_HEADER}\n"));
    }

    #[test]
    fn seventeen_significant_digits() {
        let row = TimeRow {
            time: 0.1,
            ledger: EnergyLedger::default(),
        };
        let m = CrackSample {
            time: 0.1,
            length: 0.0,
            speed: 0.0,
        };
        let text = write_timeseries(&[row], &[m]);
        let first = text.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(first, "1.0000000000000001e-1");
    }
}
