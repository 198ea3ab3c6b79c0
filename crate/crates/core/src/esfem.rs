//! Edge-based smoothed finite elements.
//!
//! Every edge owns a smoothing domain built from the elements on either side
//! of it. The domain's strain operator is the area-weighted average of the
//! neighbors' strain-displacement rows, evaluated at the edge midpoint, and
//! its measure is `sum(A_j / r_j)` with `r = 3` for triangles and `r = 4` for
//! quadrilaterals. Summed over all edges the measures tile the mesh area.

use serde::Serialize;
use thiserror::Error;

use crate::material::{elastic_matrix, mat_vec, Matrix3, MaterialError, MaterialModel, Voigt};
use crate::mesh::{polygon_area, EdgeTopology, ElementKind, Mesh2D, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsfemError {
    #[error("element {element} is degenerate (area {area})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("vector length {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element {0} has no material")]
    MissingMaterial(usize),
    #[error("traction applied to interior edge {0}")]
    InteriorTraction(usize),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Fracture state of an element as seen by the force computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ElementState {
    Intact,
    /// A quadrilateral cut along one diagonal; only the listed triangle
    /// (counter-clockwise node IDs) still carries load.
    Partial { surviving: [usize; 3] },
    Failed,
}

impl ElementState {
    pub fn is_failed(&self) -> bool {
        matches!(self, ElementState::Failed)
    }
}

/// Per-element elastic data: stiffness and thermal stress per kelvin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constitutive {
    pub stiffness: Matrix3,
    pub thermal: Voigt,
}

impl Constitutive {
    pub fn from_material(m: &MaterialModel) -> Result<Self, MaterialError> {
        let c = elastic_matrix(m)?;
        let a = m.effective_alpha();
        Ok(Constitutive {
            stiffness: c,
            thermal: mat_vec(&c, &[a, a, 0.0]),
        })
    }
}

/// Resolves region materials onto elements.
pub fn element_constitutive(
    mesh: &Mesh2D,
    region_materials: &[Option<MaterialModel>],
) -> Result<Vec<Constitutive>, EsfemError> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let m = region_materials
                .get(el.region)
                .and_then(|m| m.as_ref())
                .ok_or(EsfemError::MissingMaterial(i))?;
            Ok(Constitutive::from_material(m)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingDomain {
    /// Edge ID; IDs past the topology's edge count are diagonals of
    /// partially failed quadrilaterals.
    pub edge: usize,
    pub nodes: [usize; 2],
    /// Surviving neighbor elements.
    pub elements: Vec<usize>,
    /// Area weights `A_j / sum(A)`, aligned with `elements`.
    pub weights: Vec<f64>,
    /// Domain measure `sum(A_j / r_j)`, m^2.
    pub measure: f64,
    /// Smoothed shape-function gradients `(node, dN/dx, dN/dy)`, ascending node.
    pub gradients: Vec<(usize, f64, f64)>,
    pub stiffness: Matrix3,
    pub compliance: Matrix3,
    /// Thermal stress per kelvin.
    pub thermal: Voigt,
}

impl SmoothingDomain {
    /// Smoothed strain for nodal displacements `u` (interleaved x, y).
    pub fn strain(&self, u: &[f64]) -> Voigt {
        let mut e = [0.0; 3];
        for &(n, gx, gy) in &self.gradients {
            let ux = u[2 * n];
            let uy = u[2 * n + 1];
            e[0] += gx * ux;
            e[1] += gy * uy;
            e[2] += gy * ux + gx * uy;
        }
        e
    }

    pub fn stress(&self, strain: &Voigt, d_temp: f64) -> Voigt {
        let s = mat_vec(&self.stiffness, strain);
        [
            s[0] - d_temp * self.thermal[0],
            s[1] - d_temp * self.thermal[1],
            s[2] - d_temp * self.thermal[2],
        ]
    }

    /// Elastic energy stored in the domain, `0.5 * measure * s : C^-1 : s`.
    pub fn energy(&self, stress: &Voigt) -> f64 {
        let e = mat_vec(&self.compliance, stress);
        0.5 * self.measure * (e[0] * stress[0] + e[1] * stress[1] + e[2] * stress[2])
    }

    /// Work done on the domain per unit temperature increase at `stress`:
    /// `-measure * s : C^-1 : theta`, with `theta` the thermal stress per kelvin.
    pub fn thermal_power(&self, stress: &Voigt) -> f64 {
        let e = mat_vec(&self.compliance, &self.thermal);
        -self.measure * (e[0] * stress[0] + e[1] * stress[1] + e[2] * stress[2])
    }
}

/// Standalone smoothed strain of one domain.
pub fn smoothed_strain(domain: &SmoothingDomain, u: &[f64]) -> Voigt {
    domain.strain(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingDomains {
    pub domains: Vec<SmoothingDomain>,
    /// Domain index of each topology edge, `None` once no neighbor survives.
    pub edge_to_domain: Vec<Option<usize>>,
    pub node_count: usize,
}

/// Shape function gradients of a linear triangle.
fn cst_gradients(p: &[Point]) -> ([f64; 3], [f64; 3], f64) {
    let area = polygon_area(p);
    let mut gx = [0.0; 3];
    let mut gy = [0.0; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        gx[i] = (p[j][1] - p[k][1]) / (2.0 * area);
        gy[i] = (p[k][0] - p[j][0]) / (2.0 * area);
    }
    (gx, gy, area)
}

const QUAD_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
const QUAD_EDGE_MIDPOINTS: [[f64; 2]; 4] = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];

/// Bilinear shape function gradients at natural coordinates `(xi, eta)`.
fn quad_gradients(p: &[Point], xi: f64, eta: f64) -> ([f64; 4], [f64; 4]) {
    let mut dxi = [0.0; 4];
    let mut deta = [0.0; 4];
    for i in 0..4 {
        let [a, b] = QUAD_CORNERS[i];
        dxi[i] = 0.25 * a * (1.0 + b * eta);
        deta[i] = 0.25 * b * (1.0 + a * xi);
    }
    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..4 {
        j11 += dxi[i] * p[i][0];
        j12 += dxi[i] * p[i][1];
        j21 += deta[i] * p[i][0];
        j22 += deta[i] * p[i][1];
    }
    let det = j11 * j22 - j12 * j21;
    let mut gx = [0.0; 4];
    let mut gy = [0.0; 4];
    for i in 0..4 {
        gx[i] = (j22 * dxi[i] - j12 * deta[i]) / det;
        gy[i] = (-j21 * dxi[i] + j11 * deta[i]) / det;
    }
    (gx, gy)
}

fn invert3(m: &Matrix3) -> Matrix3 {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// The load-carrying shape of an element in its current state.
struct ActiveShape {
    kind: ElementKind,
    nodes: Vec<usize>,
    area: f64,
}

fn active_shape(mesh: &Mesh2D, e: usize, state: ElementState) -> Option<ActiveShape> {
    match state {
        ElementState::Failed => None,
        ElementState::Intact => {
            let el = &mesh.elements[e];
            Some(ActiveShape {
                kind: el.kind,
                nodes: el.nodes.clone(),
                area: mesh.element_area(e),
            })
        }
        ElementState::Partial { surviving } => {
            let pts: Vec<Point> = surviving.iter().map(|&n| mesh.nodes[n]).collect();
            Some(ActiveShape {
                kind: ElementKind::Cst,
                nodes: surviving.to_vec(),
                area: polygon_area(&pts),
            })
        }
    }
}

/// Gradients of `shape` evaluated for the edge `(a, b)`.
fn shape_gradients(mesh: &Mesh2D, shape: &ActiveShape, a: usize, b: usize) -> Vec<(usize, f64, f64)> {
    let pts: Vec<Point> = shape.nodes.iter().map(|&n| mesh.nodes[n]).collect();
    match shape.kind {
        ElementKind::Cst => {
            let (gx, gy, _) = cst_gradients(&pts);
            (0..3).map(|i| (shape.nodes[i], gx[i], gy[i])).collect()
        }
        ElementKind::Quad => {
            let local = (0..4)
                .find(|&l| {
                    let p = shape.nodes[l];
                    let q = shape.nodes[(l + 1) % 4];
                    (p == a && q == b) || (p == b && q == a)
                })
                .expect("edge belongs to quadrilateral");
            let [xi, eta] = QUAD_EDGE_MIDPOINTS[local];
            let (gx, gy) = quad_gradients(&pts, xi, eta);
            (0..4).map(|i| (shape.nodes[i], gx[i], gy[i])).collect()
        }
    }
}

fn contains_edge(nodes: &[usize], a: usize, b: usize) -> bool {
    let n = nodes.len();
    (0..n).any(|i| {
        let p = nodes[i];
        let q = nodes[(i + 1) % n];
        (p == a && q == b) || (p == b && q == a)
    })
}

fn make_domain(
    mesh: &Mesh2D,
    edge: usize,
    nodes: [usize; 2],
    neighbors: Vec<(usize, ActiveShape)>,
) -> SmoothingDomain {
    let total: f64 = neighbors.iter().map(|(_, s)| s.area).sum();
    let mut grads: Vec<(usize, f64, f64)> = Vec::new();
    let mut measure = 0.0;
    let mut elements = Vec::with_capacity(neighbors.len());
    let mut weights = Vec::with_capacity(neighbors.len());
    for (e, shape) in &neighbors {
        let w = shape.area / total;
        let r = shape.kind.node_count() as f64;
        measure += shape.area / r;
        for (n, gx, gy) in shape_gradients(mesh, shape, nodes[0], nodes[1]) {
            match grads.iter_mut().find(|g| g.0 == n) {
                Some(g) => {
                    g.1 += w * gx;
                    g.2 += w * gy;
                }
                None => grads.push((n, w * gx, w * gy)),
            }
        }
        elements.push(*e);
        weights.push(w);
    }
    grads.sort_by_key(|g| g.0);
    SmoothingDomain {
        edge,
        nodes,
        elements,
        weights,
        measure,
        gradients: grads,
        stiffness: [[0.0; 3]; 3],
        compliance: [[0.0; 3]; 3],
        thermal: [0.0; 3],
    }
}

impl SmoothingDomains {
    /// Builds domains for the current element states. Failed elements are
    /// skipped and weights and measures are recomputed over the survivors;
    /// an edge without survivors has no domain.
    pub fn build(mesh: &Mesh2D, topo: &EdgeTopology, states: &[ElementState]) -> Result<Self, EsfemError> {
        for (e, s) in states.iter().enumerate() {
            if let Some(shape) = active_shape(mesh, e, *s) {
                if !(shape.area > 0.0) {
                    return Err(EsfemError::DegenerateElement { element: e, area: shape.area });
                }
            }
        }
        let mut domains = Vec::with_capacity(topo.edges.len());
        let mut edge_to_domain = vec![None; topo.edges.len()];
        for (ei, edge) in topo.edges.iter().enumerate() {
            let [a, b] = edge.nodes;
            let neighbors: Vec<_> = edge
                .elements
                .iter()
                .filter_map(|&e| {
                    active_shape(mesh, e, states[e])
                        .filter(|s| contains_edge(&s.nodes, a, b))
                        .map(|s| (e, s))
                })
                .collect();
            if neighbors.is_empty() {
                continue;
            }
            edge_to_domain[ei] = Some(domains.len());
            domains.push(make_domain(mesh, ei, edge.nodes, neighbors));
        }
        // Diagonals of partially failed quadrilaterals.
        let mut next = topo.edges.len();
        for (e, s) in states.iter().enumerate() {
            if let ElementState::Partial { surviving } = *s {
                let el = &mesh.elements[e];
                for i in 0..3 {
                    let (a, b) = (surviving[i], surviving[(i + 1) % 3]);
                    if !contains_edge(&el.nodes, a, b) {
                        let shape = active_shape(mesh, e, *s).expect("partial element is active");
                        let nodes = if a < b { [a, b] } else { [b, a] };
                        domains.push(make_domain(mesh, next, nodes, vec![(e, shape)]));
                        next += 1;
                    }
                }
            }
        }
        Ok(SmoothingDomains {
            domains,
            edge_to_domain,
            node_count: mesh.nodes.len(),
        })
    }

    /// Mixes per-element elastic data into each domain with the area weights.
    pub fn with_materials(mut self, cons: &[Constitutive]) -> Self {
        for d in &mut self.domains {
            let mut c = [[0.0; 3]; 3];
            let mut t = [0.0; 3];
            for (&e, &w) in d.elements.iter().zip(&d.weights) {
                for i in 0..3 {
                    for j in 0..3 {
                        c[i][j] += w * cons[e].stiffness[i][j];
                    }
                    t[i] += w * cons[e].thermal[i];
                }
            }
            d.stiffness = c;
            d.compliance = invert3(&c);
            d.thermal = t;
        }
        self
    }

    pub fn total_measure(&self) -> f64 {
        self.domains.iter().map(|d| d.measure).sum()
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

/// Domains of an undamaged mesh.
pub fn build_smoothing_domains(mesh: &Mesh2D, topo: &EdgeTopology) -> Result<SmoothingDomains, EsfemError> {
    SmoothingDomains::build(mesh, topo, &vec![ElementState::Intact; mesh.elements.len()])
}

/// `f_int = sum over domains of measure * B^T sigma`, one stress per domain.
/// Failed elements are already excluded from the domain table.
pub fn assemble_internal_force(
    domains: &SmoothingDomains,
    stresses: &[Voigt],
    f: &mut [f64],
) -> Result<(), EsfemError> {
    if stresses.len() != domains.domains.len() {
        return Err(EsfemError::DimensionMismatch {
            expected: domains.domains.len(),
            got: stresses.len(),
        });
    }
    if f.len() != 2 * domains.node_count {
        return Err(EsfemError::DimensionMismatch {
            expected: 2 * domains.node_count,
            got: f.len(),
        });
    }
    f.iter_mut().for_each(|x| *x = 0.0);
    for (d, s) in domains.domains.iter().zip(stresses) {
        let w = d.measure;
        for &(n, gx, gy) in &d.gradients {
            f[2 * n] += w * (gx * s[0] + gy * s[2]);
            f[2 * n + 1] += w * (gy * s[1] + gx * s[2]);
        }
    }
    Ok(())
}

/// Row-sum lumped mass, `rho * A / n` per node of an n-node element, repeated
/// for both DOFs of a node.
pub fn assemble_lumped_mass(mesh: &Mesh2D, region_density: &[Option<f64>]) -> Result<Vec<f64>, EsfemError> {
    let mut m = vec![0.0; 2 * mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        let rho = region_density
            .get(el.region)
            .copied()
            .flatten()
            .ok_or(EsfemError::MissingMaterial(e))?;
        let share = rho * mesh.element_area(e) / el.nodes.len() as f64;
        for &n in &el.nodes {
            m[2 * n] += share;
            m[2 * n + 1] += share;
        }
    }
    Ok(m)
}

/// Body force (per unit volume) lumped as `b * A / n` and edge tractions
/// split equally between the two edge nodes.
pub fn assemble_external_force(
    mesh: &Mesh2D,
    topo: &EdgeTopology,
    body: [f64; 2],
    tractions: &[(usize, [f64; 2])],
) -> Result<Vec<f64>, EsfemError> {
    let mut f = vec![0.0; 2 * mesh.nodes.len()];
    if body != [0.0, 0.0] {
        for (e, el) in mesh.elements.iter().enumerate() {
            let share = mesh.element_area(e) / el.nodes.len() as f64;
            for &n in &el.nodes {
                f[2 * n] += body[0] * share;
                f[2 * n + 1] += body[1] * share;
            }
        }
    }
    for &(edge, t) in tractions {
        let ed = &topo.edges[edge];
        if !ed.is_boundary() {
            return Err(EsfemError::InteriorTraction(edge));
        }
        let half = 0.5 * ed.length;
        for n in ed.nodes {
            f[2 * n] += t[0] * half;
            f[2 * n + 1] += t[1] * half;
        }
    }
    Ok(f)
}
