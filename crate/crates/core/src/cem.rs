//! Crack tracking on edge quadrature points.
//!
//! A crack tip sits at the midpoint of an element edge. Each step it looks
//! into the surviving elements beside that edge, scores every exit edge with
//! an energy release rate built from the tip edge's stretch and the principal
//! stress at the exit edge, and crosses the element when the best score
//! exceeds the material toughness. Crossed triangles fail outright; crossed
//! quadrilaterals fail outright (opposite exit) or keep one triangle
//! (adjacent exit).

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::esfem::ElementState;
use crate::material::Voigt;
use crate::mesh::{distance, EdgeTopology, ElementKind, Mesh2D, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CemError {
    #[error("edge ({0}, {1}) has zero reference length")]
    ZeroLength(usize, usize),
    #[error("quadrature points coincide")]
    CoincidentPoints,
    #[error("smoothing window {window} s is shorter than two time steps ({dt} s)")]
    WindowTooShort { window: f64, dt: f64 },
    #[error("edge {0} is not a boundary edge")]
    NotBoundary(usize),
}

/// Relative displacement `u_b - u_a` of an edge (nodes ascending), zeroed
/// unless the edge is strictly longer than in the reference configuration.
pub fn edge_stretch(nodes: [usize; 2], u: &[f64], x: &[Point]) -> Result<[f64; 2], CemError> {
    let (a, b) = if nodes[0] < nodes[1] { (nodes[0], nodes[1]) } else { (nodes[1], nodes[0]) };
    let reference = distance(x[a], x[b]);
    if reference == 0.0 {
        return Err(CemError::ZeroLength(a, b));
    }
    let d = [u[2 * b] - u[2 * a], u[2 * b + 1] - u[2 * a + 1]];
    let dx = x[b][0] - x[a][0] + d[0];
    let dy = x[b][1] - x[a][1] + d[1];
    let current = (dx * dx + dy * dy).sqrt();
    if current / reference - 1.0 > 0.0 {
        Ok(d)
    } else {
        Ok([0.0, 0.0])
    }
}

/// Largest principal stress and its unit direction. The direction's first
/// nonzero component is positive; equal principal stresses give `(1, 0)`.
pub fn max_principal(s: &Voigt) -> (f64, [f64; 2]) {
    let (sx, sy, txy) = (s[0], s[1], s[2]);
    let c = 0.5 * (sx + sy);
    let r = (0.25 * (sx - sy) * (sx - sy) + txy * txy).sqrt();
    let s1 = c + r;
    let dir = if txy == 0.0 {
        if sx >= sy {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        // Two equivalent eigenvector forms; take the better conditioned one.
        let v1 = [txy, s1 - sx];
        let v2 = [s1 - sy, txy];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        [v[0] / n, v[1] / n]
    };
    let flip = if dir[0] != 0.0 { dir[0] < 0.0 } else { dir[1] < 0.0 };
    if flip {
        (s1, [-dir[0], -dir[1]])
    } else {
        (s1, dir)
    }
}

/// Energy release rate for a crack running from quadrature point `from` to
/// `to`, with stress `stress` at `to` and tip-edge stretch `stretch`.
///
/// The principal stress is projected on the normal `n` of the segment and
/// the rate is `|sigma_1 (p.n) (n.delta)| / 2` under tensile `sigma_1`, zero
/// otherwise. Taking the magnitude makes the result independent of the
/// arbitrary signs of the eigenvector and of the node-ordered stretch.
pub fn energy_release_rate(from: Point, to: Point, stress: &Voigt, stretch: [f64; 2]) -> Result<f64, CemError> {
    let d = [to[0] - from[0], to[1] - from[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return Err(CemError::CoincidentPoints);
    }
    let n = [-d[1] / len, d[0] / len];
    let (s1, p) = max_principal(stress);
    if !(s1 > 0.0) {
        return Ok(0.0);
    }
    let perp = s1 * (p[0] * n[0] + p[1] * n[1]);
    let sigma_perp = [perp * n[0], perp * n[1]];
    Ok(0.5 * (sigma_perp[0] * stretch[0] + sigma_perp[1] * stretch[1]).abs())
}

/// Outcome for the crossed element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Split {
    Full,
    /// Quadrilateral cut between adjacent edges; this triangle survives.
    Partial { surviving: [usize; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub element: usize,
    pub edge: usize,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TipOrigin {
    Initial,
    Strength,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrackTip {
    pub id: usize,
    pub edge: usize,
    pub origin: TipOrigin,
    /// Arrival time at the current edge, s.
    pub arrived: f64,
    /// Unit direction of the incoming segment.
    pub direction: Option<[f64; 2]>,
    /// Elements this tip has crossed.
    pub crossed: Vec<usize>,
    pub length: f64,
    pub arrested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrackEvent {
    pub tip: usize,
    pub time: f64,
    pub from_edge: usize,
    pub to_edge: usize,
    pub element: usize,
    pub split: Split,
    /// Energy release rate at failure, J/m^2.
    pub g: f64,
    /// Distance between the two quadrature points, m.
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Initial,
    Strength,
    Advance,
    Arrest,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Initial => "initial",
            PathKind::Strength => "strength",
            PathKind::Advance => "advance",
            PathKind::Arrest => "arrest",
        }
    }
}

/// One row of the crack path table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub tip: usize,
    pub time: f64,
    pub point: Point,
    /// Cumulative path length of this tip, m.
    pub length: f64,
    pub g: f64,
    pub kind: PathKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrackFront {
    pub tips: Vec<CrackTip>,
    pub states: Vec<ElementState>,
    pub failure_time: Vec<Option<f64>>,
    /// Edges a crack has passed through.
    pub path_edges: BTreeSet<usize>,
    pub events: Vec<CrackEvent>,
    pub path: Vec<PathPoint>,
    /// Dissipated energy, J/m.
    pub dissipated: f64,
    /// Set when element states changed since the last call to
    /// [`CrackFront::take_changed`].
    changed: bool,
}

impl CrackFront {
    pub fn new(element_count: usize) -> Self {
        CrackFront {
            tips: Vec::new(),
            states: vec![ElementState::Intact; element_count],
            failure_time: vec![None; element_count],
            path_edges: BTreeSet::new(),
            events: Vec::new(),
            path: Vec::new(),
            dissipated: 0.0,
            changed: false,
        }
    }

    /// Places a tip on a boundary edge (for instance the end of a notch).
    pub fn add_tip(&mut self, topo: &EdgeTopology, edge: usize, origin: TipOrigin, time: f64) -> Result<usize, CemError> {
        if !topo.edges[edge].is_boundary() {
            return Err(CemError::NotBoundary(edge));
        }
        let id = self.tips.len();
        self.tips.push(CrackTip {
            id,
            edge,
            origin,
            arrived: time,
            direction: None,
            crossed: Vec::new(),
            length: 0.0,
            arrested: false,
        });
        self.path_edges.insert(edge);
        self.path.push(PathPoint {
            tip: id,
            time,
            point: topo.edges[edge].quadrature,
            length: 0.0,
            g: 0.0,
            kind: match origin {
                TipOrigin::Initial => PathKind::Initial,
                TipOrigin::Strength => PathKind::Strength,
            },
        });
        Ok(id)
    }

    /// Returns and clears the "element states changed" flag.
    pub fn take_changed(&mut self) -> bool {
        std::mem::replace(&mut self.changed, false)
    }

    pub fn failed_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_failed()).count()
    }

    pub fn partial_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| matches!(s, ElementState::Partial { .. }))
            .count()
    }

    pub fn total_length(&self) -> f64 {
        self.tips.iter().map(|t| t.length).sum()
    }
}

fn same_edge(p: usize, q: usize, a: usize, b: usize) -> bool {
    (p == a && q == b) || (p == b && q == a)
}

/// Exit edges reachable from `tip_edge`, ascending by edge ID then element.
///
/// For each surviving element beside the tip edge (and not in `crossed`): a
/// triangle, or the surviving triangle of a cut quadrilateral, offers its
/// other original edges; an intact quadrilateral offers its two adjacent
/// edges (partial split) and its opposite edge (full split). Edges already on
/// a crack path and seam edges are never offered.
pub fn candidate_quadratures(
    tip_edge: usize,
    crossed: &[usize],
    states: &[ElementState],
    path_edges: &BTreeSet<usize>,
    mesh: &Mesh2D,
    topo: &EdgeTopology,
) -> Vec<Candidate> {
    let [a, b] = topo.edges[tip_edge].nodes;
    let mut out = Vec::new();
    for &e in &topo.edges[tip_edge].elements {
        if crossed.contains(&e) {
            continue;
        }
        let el = &mesh.elements[e];
        let n = el.nodes.len();
        let local_tip = match (0..n).find(|&l| same_edge(el.nodes[l], el.nodes[(l + 1) % n], a, b)) {
            Some(l) => l,
            None => continue,
        };
        let mut push = |local: usize, split: Split| {
            let edge = topo.element_edges[e][local];
            if !path_edges.contains(&edge) && !topo.edges[edge].seam {
                out.push(Candidate { element: e, edge, split });
            }
        };
        match (states[e], el.kind) {
            (ElementState::Failed, _) => {}
            (ElementState::Intact, ElementKind::Cst) => {
                for k in 1..3 {
                    push((local_tip + k) % 3, Split::Full);
                }
            }
            (ElementState::Intact, ElementKind::Quad) => {
                let node = |k: usize| el.nodes[(local_tip + k) % 4];
                // Exit through edge l+1 cuts off corner l+1.
                push(
                    (local_tip + 1) % 4,
                    Split::Partial { surviving: [node(2), node(3), node(0)] },
                );
                push((local_tip + 2) % 4, Split::Full);
                // Exit through edge l+3 cuts off corner l.
                push(
                    (local_tip + 3) % 4,
                    Split::Partial { surviving: [node(1), node(2), node(3)] },
                );
            }
            (ElementState::Partial { surviving }, _) => {
                if !(surviving.contains(&a) && surviving.contains(&b)) {
                    continue;
                }
                for l in 0..n {
                    let (p, q) = (el.nodes[l], el.nodes[(l + 1) % n]);
                    if l != local_tip && surviving.contains(&p) && surviving.contains(&q) {
                        push(l, Split::Full);
                    }
                }
            }
        }
    }
    out.sort_by_key(|c| (c.edge, c.element));
    out
}

/// Moves every active tip at most once. Tips are processed in ID order and
/// each sees the failures caused by the tips before it.
///
/// `edge_stress[k]` is the smoothed stress at topology edge `k` (`None` when
/// the edge has no smoothing domain); `gc[e]` is the toughness of element `e`.
pub fn advance_front(
    front: &mut CrackFront,
    mesh: &Mesh2D,
    topo: &EdgeTopology,
    edge_stress: &[Option<Voigt>],
    u: &[f64],
    gc: &[f64],
    time: f64,
) -> Result<Vec<CrackEvent>, CemError> {
    let mut events = Vec::new();
    for ti in 0..front.tips.len() {
        if front.tips[ti].arrested {
            continue;
        }
        let tip_edge = front.tips[ti].edge;
        let cands = candidate_quadratures(
            tip_edge,
            &front.tips[ti].crossed,
            &front.states,
            &front.path_edges,
            mesh,
            topo,
        );
        let from = topo.edges[tip_edge].quadrature;
        if cands.is_empty() {
            let tip = &mut front.tips[ti];
            tip.arrested = true;
            front.path.push(PathPoint {
                tip: ti,
                time,
                point: from,
                length: tip.length,
                g: 0.0,
                kind: PathKind::Arrest,
            });
            continue;
        }
        let stretch = edge_stretch(topo.edges[tip_edge].nodes, u, &mesh.nodes)?;
        let mut best: Option<(f64, Candidate)> = None;
        for c in cands {
            let Some(s) = edge_stress.get(c.edge).copied().flatten() else {
                continue;
            };
            let g = energy_release_rate(from, topo.edges[c.edge].quadrature, &s, stretch)?;
            if best.map_or(true, |(bg, _)| g > bg) {
                best = Some((g, c));
            }
        }
        let Some((g, c)) = best else { continue };
        log::trace!("t = {time:e}: tip {ti} best G = {g:e} into element {}", c.element);
        if !(g > gc[c.element]) {
            continue;
        }
        let to = topo.edges[c.edge].quadrature;
        let length = distance(from, to);
        front.states[c.element] = match c.split {
            Split::Full => ElementState::Failed,
            Split::Partial { surviving } => ElementState::Partial { surviving },
        };
        if c.split == Split::Full {
            front.failure_time[c.element] = Some(time);
        }
        front.changed = true;
        front.path_edges.insert(c.edge);
        front.dissipated += g * length;
        let tip = &mut front.tips[ti];
        tip.crossed.push(c.element);
        tip.edge = c.edge;
        tip.arrived = time;
        tip.direction = Some([(to[0] - from[0]) / length, (to[1] - from[1]) / length]);
        tip.length += length;
        front.path.push(PathPoint {
            tip: ti,
            time,
            point: to,
            length: tip.length,
            g,
            kind: PathKind::Advance,
        });
        let ev = CrackEvent {
            tip: ti,
            time,
            from_edge: tip_edge,
            to_edge: c.edge,
            element: c.element,
            split: c.split,
            g,
            length,
        };
        front.events.push(ev.clone());
        events.push(ev);
    }
    Ok(events)
}

/// Spawns at most one tip on the eligible boundary edge with the largest
/// principal stress above its neighbor's tensile strength. `ft[e]` is the
/// strength of element `e`, `None` where strength initiation is off.
pub fn initiate_from_strength(
    front: &mut CrackFront,
    topo: &EdgeTopology,
    edge_stress: &[Option<Voigt>],
    ft: &[Option<f64>],
    eligible: &[usize],
    time: f64,
) -> Result<Option<usize>, CemError> {
    let mut best: Option<(f64, usize)> = None;
    for &k in eligible {
        let edge = &topo.edges[k];
        if !edge.is_boundary() || front.path_edges.contains(&k) {
            continue;
        }
        let e = edge.elements[0];
        let alive = match front.states[e] {
            ElementState::Intact => true,
            ElementState::Failed => false,
            ElementState::Partial { surviving } => {
                surviving.contains(&edge.nodes[0]) && surviving.contains(&edge.nodes[1])
            }
        };
        let (Some(limit), Some(s)) = (ft[e], edge_stress.get(k).copied().flatten()) else {
            continue;
        };
        if !alive {
            continue;
        }
        let (s1, _) = max_principal(&s);
        if s1 > limit && best.map_or(true, |(bs, bk)| s1 > bs || (s1 == bs && k < bk)) {
            best = Some((s1, k));
        }
    }
    match best {
        Some((_, k)) => Ok(Some(front.add_tip(topo, k, TipOrigin::Strength, time)?)),
        None => Ok(None),
    }
}

/// Crack length and tip speed sampled at `times`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrackSample {
    pub time: f64,
    pub length: f64,
    /// Fastest tip over the centered window, m/s.
    pub speed: f64,
}

/// Cumulative length `L(t)` counts every advance with time `<= t`; the speed
/// of a tip is `(L(t + w/2) - L(t - w/2)) / w`, and the sample reports the
/// fastest tip.
pub fn crack_metrics(path: &[PathPoint], times: &[f64], window: f64, dt: f64) -> Result<Vec<CrackSample>, CemError> {
    if window < 2.0 * dt {
        return Err(CemError::WindowTooShort { window, dt });
    }
    let tips = path.iter().map(|p| p.tip + 1).max().unwrap_or(0);
    let mut per_tip: Vec<Vec<(f64, f64)>> = vec![Vec::new(); tips];
    let mut all: Vec<(f64, f64)> = Vec::new();
    for p in path {
        if p.kind == PathKind::Advance {
            let prev = per_tip[p.tip].last().map_or(0.0, |x| x.1);
            per_tip[p.tip].push((p.time, p.length));
            all.push((p.time, p.length - prev));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let length_at = |series: &[(f64, f64)], t: f64| -> f64 {
        // Cumulative values are stored, so take the last one at or before t.
        let k = series.partition_point(|x| x.0 <= t);
        if k == 0 {
            0.0
        } else {
            series[k - 1].1
        }
    };
    let mut cumulative = Vec::with_capacity(all.len());
    let mut acc = 0.0;
    for &(t, dl) in &all {
        acc += dl;
        cumulative.push((t, acc));
    }
    Ok(times
        .iter()
        .map(|&t| {
            let speed = per_tip
                .iter()
                .map(|s| (length_at(s, t + 0.5 * window) - length_at(s, t - 0.5 * window)) / window)
                .fold(0.0, f64::max);
            CrackSample {
                time: t,
                length: length_at(&cumulative, t),
                speed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_edge_topology, generate_structured_grid, DiagonalRule, Element};
    use approx::assert_relative_eq;

    #[test]
    fn stretch_gate() {
        let x = vec![[0.0, 0.0], [0.0, 1.0]];
        // Vertical edge pulled apart.
        let u = vec![0.0, 0.0, 0.0, 2e-6];
        assert_eq!(edge_stretch([0, 1], &u, &x).unwrap(), [0.0, 2e-6]);
        // Compressed.
        let u = vec![0.0, 0.0, 0.0, -2e-6];
        assert_eq!(edge_stretch([0, 1], &u, &x).unwrap(), [0.0, 0.0]);
        // Rigid translation.
        let u = vec![0.3, 0.1, 0.3, 0.1];
        assert_eq!(edge_stretch([0, 1], &u, &x).unwrap(), [0.0, 0.0]);
        let x = vec![[0.0, 0.0], [0.0, 0.0]];
        assert!(edge_stretch([0, 1], &u, &x).is_err());
    }

    #[test]
    fn principal_examples() {
        assert_eq!(max_principal(&[5.0, 0.0, 0.0]), (5.0, [1.0, 0.0]));
        assert_eq!(max_principal(&[3.0, 3.0, 0.0]), (3.0, [1.0, 0.0]));
        let (s1, p) = max_principal(&[0.0, 0.0, 2.0]);
        assert_relative_eq!(s1, 2.0);
        assert_relative_eq!(p[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.5f64.sqrt(), epsilon = 1e-15);
        let (_, p) = max_principal(&[0.0, 0.0, -2.0]);
        assert!(p[0] > 0.0 && p[1] < 0.0);
        assert_eq!(max_principal(&[-1.0, 4.0, 0.0]), (4.0, [0.0, 1.0]));
    }

    #[test]
    fn release_rate_examples() {
        // Horizontal segment: normal is vertical; sigma_perp = (0, 1e6).
        let g = energy_release_rate([0.0, 0.0], [1.0, 0.0], &[0.0, 1e6, 0.0], [0.0, 2e-6]).unwrap();
        assert_relative_eq!(g, 1.0, epsilon = 1e-12);
        let g = energy_release_rate([0.0, 0.0], [1.0, 0.0], &[0.0, 1e6, 0.0], [0.0, 0.0]).unwrap();
        assert_eq!(g, 0.0);
        // Principal stress along the segment.
        let g = energy_release_rate([0.0, 0.0], [1.0, 0.0], &[1e6, 0.0, 0.0], [0.0, 2e-6]).unwrap();
        assert_eq!(g, 0.0);
        // Compression never releases energy.
        let g = energy_release_rate([0.0, 0.0], [1.0, 0.0], &[0.0, -1e6, -2e6], [0.0, 2e-6]).unwrap();
        assert!(g >= 0.0);
        let g = energy_release_rate([0.0, 0.0], [1.0, 0.0], &[-1e6, -1e6, 0.0], [0.0, 2e-6]).unwrap();
        assert_eq!(g, 0.0);
        assert!(energy_release_rate([1.0, 1.0], [1.0, 1.0], &[1.0, 0.0, 0.0], [0.0, 0.0]).is_err());
    }

    fn lone_cst() -> (Mesh2D, EdgeTopology) {
        let m = Mesh2D::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![Element::cst([0, 1, 2], 0)],
            vec!["a".into()],
        )
        .unwrap();
        let t = build_edge_topology(&m).unwrap();
        (m, t)
    }

    #[test]
    fn lone_triangle_offers_two_candidates() {
        let (m, t) = lone_cst();
        let c = candidate_quadratures(0, &[], &[ElementState::Intact], &BTreeSet::new(), &m, &t);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.edge != 0 && c.split == Split::Full));
        let c = candidate_quadratures(0, &[], &[ElementState::Failed], &BTreeSet::new(), &m, &t);
        assert!(c.is_empty());
    }

    #[test]
    fn quad_neighbor_of_failed_quad_offers_three() {
        let m = generate_structured_grid(2.0, 1.0, 2, 1, ElementKind::Quad, DiagonalRule::Main).unwrap();
        let t = build_edge_topology(&m).unwrap();
        let shared = (0..t.edges.len()).find(|&e| !t.edges[e].is_boundary()).unwrap();
        let states = [ElementState::Failed, ElementState::Intact];
        let c = candidate_quadratures(shared, &[], &states, &BTreeSet::new(), &m, &t);
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.element == 1));
        assert_eq!(c.iter().filter(|c| c.split == Split::Full).count(), 1);
        for cand in &c {
            if let Split::Partial { surviving } = cand.split {
                // The surviving triangle holds the tip edge's far node and
                // both nodes of the opposite edge, never the cut corner.
                let [a, b] = t.edges[cand.edge].nodes;
                let [p, q] = t.edges[shared].nodes;
                let corner = [a, b].into_iter().find(|n| *n == p || *n == q).unwrap();
                assert!(!surviving.contains(&corner));
            }
        }
    }

    #[test]
    fn advance_picks_largest_release_rate() {
        let (m, t) = lone_cst();
        // Tip on the bottom edge (nodes 0-1), stretched along x.
        let tip_edge = t.element_edge(0, 0, 1).unwrap();
        let mut front = CrackFront::new(1);
        front.add_tip(&t, tip_edge, TipOrigin::Initial, 0.0).unwrap();
        let u = vec![0.0, 0.0, 1e-3, 0.0, 0.0, 0.0];
        let mut stress = vec![None; t.edges.len()];
        for c in candidate_quadratures(tip_edge, &[], &front.states, &front.path_edges, &m, &t) {
            stress[c.edge] = Some([1e6, 0.0, 0.0]);
        }
        // Toughness above every G: nothing happens.
        let ev = advance_front(&mut front, &m, &t, &stress, &u, &[1e9], 1.0).unwrap();
        assert!(ev.is_empty());
        assert_eq!(front.states[0], ElementState::Intact);
        let ev = advance_front(&mut front, &m, &t, &stress, &u, &[1.0], 2.0).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(front.states[0], ElementState::Failed);
        assert!(ev[0].g > 1.0);
        assert_relative_eq!(front.dissipated, ev[0].g * ev[0].length);
        // The new edge is on the boundary and its only neighbor is gone.
        advance_front(&mut front, &m, &t, &stress, &u, &[1.0], 3.0).unwrap();
        assert!(front.tips[0].arrested);
        assert_eq!(front.path.last().unwrap().kind, PathKind::Arrest);
    }

    #[test]
    fn strength_spawns_at_largest_stress() {
        let m = generate_structured_grid(2.0, 1.0, 2, 1, ElementKind::Cst, DiagonalRule::Main).unwrap();
        let t = build_edge_topology(&m).unwrap();
        let bottom: Vec<usize> = t
            .boundary_edges()
            .filter(|&e| t.edges[e].quadrature[1] == 0.0)
            .collect();
        assert_eq!(bottom.len(), 2);
        let mut stress = vec![Some([0.0; 3]); t.edges.len()];
        let ft = vec![Some(8e6); m.elements.len()];
        let mut front = CrackFront::new(m.elements.len());
        assert_eq!(initiate_from_strength(&mut front, &t, &stress, &ft, &bottom, 0.0).unwrap(), None);
        stress[bottom[0]] = Some([9e6, 0.0, 0.0]);
        stress[bottom[1]] = Some([10e6, 0.0, 0.0]);
        let id = initiate_from_strength(&mut front, &t, &stress, &ft, &bottom, 1.0).unwrap();
        assert_eq!(id, Some(0));
        assert_eq!(front.tips[0].edge, bottom[1]);
        // Next step the spawned edge is on the path; the other one fires.
        let id = initiate_from_strength(&mut front, &t, &stress, &ft, &bottom, 2.0).unwrap();
        assert_eq!(front.tips[id.unwrap()].edge, bottom[0]);
    }

    #[test]
    fn metrics_from_two_events() {
        let pt = |time: f64, length: f64| PathPoint {
            tip: 0,
            time,
            point: [0.0, 0.0],
            length,
            g: 0.0,
            kind: PathKind::Advance,
        };
        let path = vec![pt(1.0e-6, 0.5e-3), pt(2.0e-6, 1.5e-3)];
        // The window runs from the first event to the second: 1e-3 m in 1e-6 s.
        let s = crack_metrics(&path, &[1.5e-6, 3.0e-6], 1.0e-6, 1e-8).unwrap();
        assert_relative_eq!(s[0].speed, 1000.0, max_relative = 1e-9);
        assert_relative_eq!(s[0].length, 0.5e-3);
        assert_relative_eq!(s[1].length, 1.5e-3);
        assert_eq!(s[1].speed, 0.0);
        let s = crack_metrics(&[], &[0.0, 1.0], 1.0, 0.1).unwrap();
        assert!(s.iter().all(|x| x.length == 0.0 && x.speed == 0.0));
        assert!(crack_metrics(&[], &[0.0], 1e-9, 1e-9).is_err());
    }

    #[test]
    fn theoretical_kalthoff_dissipation() {
        let gf = 2.213e4;
        let length = 79.81e-3;
        assert_relative_eq!(gf * length, 1766.2, max_relative = 1e-4);
    }
}
