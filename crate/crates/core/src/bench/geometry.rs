//! Generated meshes for the builtin benchmarks. Pre-notches are either
//! zero-width seams or geometric slits: removed cells whose far end is a
//! boundary edge centered on the notch line, where the initial crack tip is
//! placed.

use serde::{Deserialize, Serialize};

use crate::mesh::{insert_seam, CellFill, Corner, DiagonalRule, GridLayout, Mesh2D, MeshError, Point, SeamSpec};

/// A builtin mesh with its named reference points.
#[derive(Debug, Clone)]
pub struct BuiltGeometry {
    pub mesh: Mesh2D,
    /// Midpoint of the notch-end edge, where the initial tip sits.
    pub notch_tip: Option<Point>,
    pub width: f64,
    pub height: f64,
    /// Typical cell size, m.
    pub cell: f64,
}

fn uniform_lines(start: f64, end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| start + (end - start) * i as f64 / n as f64).collect()
}

/// Upper half of the edge-cracked impact plate: 100 x 100 mm, notch from the
/// left edge at y = 25 mm to x = 50 mm, 434 nodes and 790 triangles.
///
/// Columns are graded toward the notch tip (15, 15, 10, 5, 5 mm), then 5 mm
/// out to x = 85 mm and 7.5 mm beyond. Rows: 3 below the notch line, 16
/// above. Cells are cut in two along the main diagonal; the 119 cells
/// farthest from the line between the notch tip and (85, 100) mm are cut
/// into four around a center node instead, which fixes the node count.
/// Cells below the notch line ahead of the tip count as half as far.
/// The notch is a seam along the grid line with an open mouth; the tip is
/// placed on its last edge, on the upper side.
pub fn kalthoff_coarse() -> Result<BuiltGeometry, MeshError> {
    let mm = 1e-3;
    let mut xs: Vec<f64> = [0.0, 15.0, 30.0, 40.0, 45.0].iter().map(|x| x * mm).collect();
    xs.extend(uniform_lines(50.0 * mm, 85.0 * mm, 7));
    xs.extend([92.5 * mm, 100.0 * mm]);
    let notch_y = 25.0 * mm;
    let mut ys = uniform_lines(0.0, notch_y, 3);
    ys.extend(uniform_lines(notch_y, 100.0 * mm, 16).into_iter().skip(1));

    let mut g = GridLayout::from_lines(xs.clone(), ys.clone(), CellFill::Split(DiagonalRule::Main));
    g.regions = vec!["plate".into()];
    let (a, b) = ([50.0 * mm, notch_y], [85.0 * mm, 100.0 * mm]);
    let mut ranked = Vec::with_capacity(g.nx() * g.ny());
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let c = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
            let w = if c[0] > a[0] && c[1] < notch_y { 0.5 } else { 1.0 };
            ranked.push((w * segment_distance(c, a, b), i, j));
        }
    }
    ranked.sort_by(|p, q| q.0.total_cmp(&p.0).then((p.1, p.2).cmp(&(q.1, q.2))));
    let crossed = 395 - g.nx() * g.ny();
    for &(_, i, j) in &ranked[..crossed] {
        g.set(i, j, CellFill::Crossed);
    }
    let mesh = insert_seam(
        &g.build()?,
        &SeamSpec {
            points: vec![[0.0, notch_y], a],
            tolerance: 1e-9,
            open_mouth: true,
        },
    )?;
    Ok(BuiltGeometry {
        mesh,
        // Just above the last notch edge, which selects its upper side.
        notch_tip: Some([47.5 * mm, notch_y + 1e-6]),
        width: 100.0 * mm,
        height: 100.0 * mm,
        cell: 5.0 * mm,
    })
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Notched PMMA block, 1287 nodes and 2393 triangles: a 38 x 32 cell grid
/// with a one-cell-high slit entering from the left edge across 19 cells and
/// ending in a half cell.
pub fn compact_compression_coarse(width: f64, height: f64) -> Result<BuiltGeometry, MeshError> {
    let (nx, ny) = (38, 32);
    let mut g = GridLayout::uniform(width, height, nx, ny, CellFill::Split(DiagonalRule::Alternating));
    g.regions = vec!["specimen".into()];
    let row = ny / 2;
    let len = 19;
    for i in 0..len {
        g.set(i, row, CellFill::Empty);
    }
    g.set(len, row, CellFill::Tri(Corner::BottomLeft));
    let tip = g.cell_center(len, row);
    Ok(BuiltGeometry {
        mesh: g.build()?,
        notch_tip: Some(tip),
        width,
        height,
        cell: width / nx as f64,
    })
}

/// How the "30 x 91" beam grid is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BeamGrid {
    /// 30 cells deep, 91 long.
    #[default]
    Cells,
    /// 30 nodes deep, 91 long.
    Nodes,
}

pub const BEAM_LENGTH: f64 = 0.2286;
pub const BEAM_DEPTH: f64 = 0.0762;
pub const BEAM_SPAN: f64 = 0.2032;
pub const BEAM_NOTCH_DEPTH: f64 = 0.01905;

/// Concrete beam with a bottom notch at `gamma * span / 2` left of midspan.
/// The notch is one cell wide (its column is re-centered on the notch line)
/// and flat-ended: rows below the notch depth are resized so that a grid
/// line falls on it, and the tip sits on the notch floor.
pub fn bending_beam(gamma: f64, grid: BeamGrid) -> Result<BuiltGeometry, MeshError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(MeshError::InvalidGrid(format!("notch offset must lie in [0, 1), got {gamma}")));
    }
    let (nx, ny) = match grid {
        BeamGrid::Cells => (91, 30),
        BeamGrid::Nodes => (90, 29),
    };
    let dx = BEAM_LENGTH / nx as f64;
    let dy = BEAM_DEPTH / ny as f64;
    let x_notch = 0.5 * BEAM_LENGTH - gamma * 0.5 * BEAM_SPAN;
    let mut xs = uniform_lines(0.0, BEAM_LENGTH, nx);
    let col = ((x_notch / dx).floor() as usize).min(nx - 1);
    xs[col] = x_notch - 0.5 * dx;
    xs[col + 1] = x_notch + 0.5 * dx;
    let below = ((BEAM_NOTCH_DEPTH / dy).round() as usize).clamp(1, ny - 1);
    let mut ys = uniform_lines(0.0, BEAM_NOTCH_DEPTH, below);
    ys.extend(uniform_lines(BEAM_NOTCH_DEPTH, BEAM_DEPTH, ny - below).into_iter().skip(1));
    let mut g = GridLayout::from_lines(xs, ys, CellFill::Split(DiagonalRule::Alternating));
    g.regions = vec!["beam".into()];
    for j in 0..below {
        g.set(col, j, CellFill::Empty);
    }
    let tip = [x_notch, BEAM_NOTCH_DEPTH];
    Ok(BuiltGeometry {
        mesh: g.build()?,
        notch_tip: Some(tip),
        width: BEAM_LENGTH,
        height: BEAM_DEPTH,
        cell: dx,
    })
}

/// Periodic copper lines in oxide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterconnectLayout {
    /// Cell size, m.
    pub cell: f64,
    /// Model size in cells.
    pub nx: usize,
    pub ny: usize,
    /// Copper line size and period in cells.
    pub line_width: usize,
    pub line_height: usize,
    pub pitch: usize,
    /// Metal levels and their vertical period in cells.
    pub levels: usize,
    pub level_pitch: usize,
    /// First level's bottom row.
    pub first_level: usize,
    /// Notch row and length in cells; it enters from the left edge.
    pub notch_row: usize,
    pub notch_length: usize,
}

impl Default for InterconnectLayout {
    fn default() -> Self {
        InterconnectLayout {
            cell: 1e-6,
            nx: 60,
            ny: 24,
            line_width: 3,
            line_height: 2,
            pitch: 6,
            levels: 3,
            level_pitch: 7,
            first_level: 3,
            notch_row: 7,
            notch_length: 12,
        }
    }
}

pub fn interconnect(layout: &InterconnectLayout) -> Result<BuiltGeometry, MeshError> {
    let l = layout;
    if l.nx == 0 || l.ny == 0 || l.pitch == 0 || l.line_width > l.pitch || !(l.cell > 0.0) {
        return Err(MeshError::InvalidGrid("inconsistent interconnect layout".into()));
    }
    if l.notch_row >= l.ny || l.notch_length >= l.nx {
        return Err(MeshError::InvalidGrid("notch outside the model".into()));
    }
    let (w, h) = (l.cell * l.nx as f64, l.cell * l.ny as f64);
    let mut g = GridLayout::uniform(w, h, l.nx, l.ny, CellFill::Split(DiagonalRule::Alternating));
    g.regions = vec!["oxide".into()];
    let copper = g.region("copper");
    for level in 0..l.levels {
        let j0 = l.first_level + level * l.level_pitch;
        for j in j0..(j0 + l.line_height).min(l.ny) {
            for i in 0..l.nx {
                // Lines are centered within each period.
                let offset = (l.pitch - l.line_width) / 2;
                let k = i % l.pitch;
                if k >= offset && k < offset + l.line_width {
                    let idx = g.cell_index(i, j);
                    g.cell_regions[idx] = copper;
                }
            }
        }
    }
    for i in 0..l.notch_length {
        g.set(i, l.notch_row, CellFill::Empty);
    }
    let tip = [l.cell * l.notch_length as f64, l.cell * (l.notch_row as f64 + 0.5)];
    Ok(BuiltGeometry {
        mesh: g.build()?,
        notch_tip: Some(tip),
        width: w,
        height: h,
        cell: l.cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_edge_topology;

    #[test]
    fn kalthoff_counts() {
        let g = kalthoff_coarse().unwrap();
        assert_eq!(g.mesh.nodes.len(), 434);
        assert_eq!(g.mesh.elements.len(), 790);
        assert!((g.mesh.total_area() - 0.01).abs() < 1e-12);
        assert_eq!(g.mesh.seam_edges.len(), 10);
        let t = build_edge_topology(&g.mesh).unwrap();
        let e = t.nearest_boundary_edge(g.notch_tip.unwrap()).unwrap();
        let q = t.edges[e].quadrature;
        assert!(t.edges[e].seam);
        assert!((q[0] - 0.0475).abs() < 1e-12 && (q[1] - 0.025).abs() < 1e-12);
    }

    #[test]
    fn compact_compression_counts() {
        let g = compact_compression_coarse(0.06, 0.05).unwrap();
        assert_eq!(g.mesh.nodes.len(), 1287);
        assert_eq!(g.mesh.elements.len(), 2393);
    }

    #[test]
    fn beam_notch_position() {
        for gamma in [0.675, 0.73, 0.765, 0.81, 0.9] {
            let g = bending_beam(gamma, BeamGrid::Cells).unwrap();
            let tip = g.notch_tip.unwrap();
            let expected = 0.5 * BEAM_LENGTH - gamma * 0.5 * BEAM_SPAN;
            assert!((tip[0] - expected).abs() < 1e-12, "{gamma}");
            assert!((tip[1] - BEAM_NOTCH_DEPTH).abs() < 1e-12);
            let t = build_edge_topology(&g.mesh).unwrap();
            let e = t.nearest_boundary_edge(tip).unwrap();
            assert!(crate::mesh::distance(t.edges[e].quadrature, tip) < 1e-12);
        }
        let g = bending_beam(0.765, BeamGrid::Nodes).unwrap();
        assert_eq!(g.mesh.nodes.len() + 0, 91 * 30);
        assert!(bending_beam(1.2, BeamGrid::Cells).is_err());
    }

    #[test]
    fn interconnect_has_two_materials() {
        let g = interconnect(&InterconnectLayout::default()).unwrap();
        let hist = g.mesh.region_histogram();
        assert!(hist["copper"] > 0 && hist["oxide"] > hist["copper"]);
    }
}
