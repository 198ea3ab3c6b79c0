//! Two-dimensional unstructured meshes of linear triangles and bilinear
//! quadrilaterals, their edge topology, and pre-notch seams.
//!
//! A [`Mesh2D`] is immutable once validated. Everything downstream (smoothing
//! domains, crack tracking, output) reads it through shared references.

mod gmsh;
mod grid;
mod seam;
mod topology;

pub use gmsh::{parse_gmsh, write_gmsh};
pub use grid::{generate_structured_grid, CellFill, Corner, DiagonalRule, GridLayout};
pub use seam::{insert_seam, SeamSpec};
pub use topology::{build_edge_topology, Edge, EdgeTopology};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reference coordinates of a point, in meters.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported element type {0}")]
    UnsupportedElementType(u32),
    #[error("node {id} is not planar (z = {z})")]
    NonPlanarNode { id: u64, z: f64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("element {element} references unknown node {node}")]
    UnknownNode { element: usize, node: u64 },
    #[error("element {0} repeats a node")]
    RepeatedNode(usize),
    #[error("element {element} has non-positive area {area}")]
    DegenerateElement { element: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),
    #[error("elements {0} and {1} share more than one edge")]
    MultipleSharedEdges(usize, usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("seam: {0}")]
    Seam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Cst,
    Quad,
}

impl ElementKind {
    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Cst => 3,
            ElementKind::Quad => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    /// Counter-clockwise node IDs.
    pub nodes: Vec<usize>,
    /// Index into [`Mesh2D::regions`].
    pub region: usize,
}

impl Element {
    pub fn cst(nodes: [usize; 3], region: usize) -> Self {
        Element {
            kind: ElementKind::Cst,
            nodes: nodes.to_vec(),
            region,
        }
    }

    pub fn quad(nodes: [usize; 4], region: usize) -> Self {
        Element {
            kind: ElementKind::Quad,
            nodes: nodes.to_vec(),
            region,
        }
    }

    /// Local edges as node pairs in element order: (n0,n1), (n1,n2), ...
    pub fn local_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.nodes.len();
        (0..n).map(move |i| (self.nodes[i], self.nodes[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    /// Region names, indexed by [`Element::region`].
    pub regions: Vec<String>,
    /// Node pairs (ascending) of edges cut by a seam. Such edges never
    /// connect the elements on either side.
    pub seam_edges: BTreeSet<(usize, usize)>,
}

/// Signed polygon area by the shoelace formula.
pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice
}

impl Mesh2D {
    /// Builds and validates a mesh.
    pub fn new(
        nodes: Vec<Point>,
        elements: Vec<Element>,
        regions: Vec<String>,
    ) -> Result<Self, MeshError> {
        let mesh = Mesh2D {
            nodes,
            elements,
            regions,
            seam_edges: BTreeSet::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        for (ei, el) in self.elements.iter().enumerate() {
            if el.nodes.len() != el.kind.node_count() {
                return Err(MeshError::InvalidGrid(format!(
                    "element {ei} has {} nodes for kind {:?}",
                    el.nodes.len(),
                    el.kind
                )));
            }
            for &n in &el.nodes {
                if n >= self.nodes.len() {
                    return Err(MeshError::UnknownNode {
                        element: ei,
                        node: n as u64,
                    });
                }
            }
            let distinct: BTreeSet<_> = el.nodes.iter().collect();
            if distinct.len() != el.nodes.len() {
                return Err(MeshError::RepeatedNode(ei));
            }
            if el.region >= self.regions.len() {
                return Err(MeshError::InvalidGrid(format!(
                    "element {ei} has unknown region {}",
                    el.region
                )));
            }
            let area = self.element_area(ei);
            if !(area > 0.0) {
                return Err(MeshError::DegenerateElement { element: ei, area });
            }
            if el.kind == ElementKind::Quad && !self.quad_is_convex(ei) {
                return Err(MeshError::DegenerateElement { element: ei, area });
            }
        }
        Ok(())
    }

    fn quad_is_convex(&self, e: usize) -> bool {
        let p = self.element_points(e);
        (0..4).all(|i| {
            let a = p[i];
            let b = p[(i + 1) % 4];
            let c = p[(i + 2) % 4];
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0.0
        })
    }

    pub fn element_points(&self, e: usize) -> Vec<Point> {
        self.elements[e].nodes.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn element_area(&self, e: usize) -> f64 {
        polygon_area(&self.element_points(e))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    pub fn element_centroid(&self, e: usize) -> Point {
        let pts = self.element_points(e);
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[0], acc.1 + p[1]));
        [sx / n, sy / n]
    }

    pub fn region_id(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Shortest edge length of an element.
    pub fn element_min_edge(&self, e: usize) -> f64 {
        self.elements[e]
            .local_edges()
            .map(|(a, b)| distance(self.nodes[a], self.nodes[b]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nodes whose coordinates satisfy `pred`, ascending.
    pub fn nodes_where(&self, pred: impl Fn(Point) -> bool) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| pred(self.nodes[i])).collect()
    }

    /// Drops nodes that no element references and renumbers the rest,
    /// preserving relative order.
    pub fn compact_nodes(&mut self) {
        let mut used = vec![false; self.nodes.len()];
        for el in &self.elements {
            for &n in &el.nodes {
                used[n] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut kept = Vec::with_capacity(self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            if used[i] {
                remap[i] = kept.len();
                kept.push(*p);
            }
        }
        for el in &mut self.elements {
            for n in &mut el.nodes {
                *n = remap[*n];
            }
        }
        self.seam_edges = self
            .seam_edges
            .iter()
            .filter(|(a, b)| used[*a] && used[*b])
            .map(|&(a, b)| ordered(remap[a], remap[b]))
            .collect();
        self.nodes = kept;
    }

    /// Plain-text listing of nodes, elements and edges.
    pub fn debug_dump(&self, topo: &EdgeTopology) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.12e} {:.12e}", p[0], p[1]);
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for (i, el) in self.elements.iter().enumerate() {
            let kind = match el.kind {
                ElementKind::Cst => "cst",
                ElementKind::Quad => "quad",
            };
            let nodes: Vec<String> = el.nodes.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "{i} {kind} {} {}", self.regions[el.region], nodes.join(" "));
        }
        let _ = writeln!(s, "edges {}", topo.edges.len());
        for (i, e) in topo.edges.iter().enumerate() {
            let els: Vec<String> = e.elements.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(
                s,
                "{i} {} {} [{}]{}",
                e.nodes[0],
                e.nodes[1],
                els.join(" "),
                if e.seam { " seam" } else { "" }
            );
        }
        s
    }

    /// Counts of elements per region name.
    pub fn region_histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for el in &self.elements {
            *h.entry(self.regions[el.region].clone()).or_insert(0) += 1;
        }
        h
    }
}

pub(crate) fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    distance(p, [a[0] + t * d[0], a[1] + t * d[1]])
}
