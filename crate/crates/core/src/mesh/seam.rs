use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{build_edge_topology, distance, ordered, point_segment_distance, Mesh2D, MeshError, Point};

/// A pre-notch drawn along existing element edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamSpec {
    pub points: Vec<Point>,
    /// Snapping tolerance, meters.
    pub tolerance: f64,
    /// Also split endpoints that sit on the mesh boundary, opening the notch
    /// mouth. Interior endpoints are crack tips and always stay single.
    #[serde(default)]
    pub open_mouth: bool,
}

/// Cuts the mesh along a seam. Nodes strictly inside the seam are duplicated
/// so the elements on either side no longer share them; element count and
/// area are unchanged.
pub fn insert_seam(mesh: &Mesh2D, seam: &SeamSpec) -> Result<Mesh2D, MeshError> {
    if seam.points.len() < 2 {
        return Err(MeshError::Seam("a seam needs at least two points".into()));
    }
    if !(seam.tolerance >= 0.0) {
        return Err(MeshError::Seam("tolerance must be non-negative".into()));
    }
    for w in seam.points.windows(2) {
        if distance(w[0], w[1]) == 0.0 {
            return Err(MeshError::Seam("consecutive seam points coincide".into()));
        }
    }
    let topo = build_edge_topology(mesh)?;

    let snap = |p: Point| -> Result<usize, MeshError> {
        let best = (0..mesh.nodes.len())
            .min_by(|&a, &b| distance(mesh.nodes[a], p).total_cmp(&distance(mesh.nodes[b], p)))
            .ok_or_else(|| MeshError::Seam("mesh has no nodes".into()))?;
        if distance(mesh.nodes[best], p) > seam.tolerance {
            return Err(MeshError::Seam(format!(
                "point ({}, {}) is farther than {} m from any node",
                p[0], p[1], seam.tolerance
            )));
        }
        Ok(best)
    };
    let anchors = seam.points.iter().map(|&p| snap(p)).collect::<Result<Vec<_>, _>>()?;

    // Walk each segment along collinear edges.
    let mut path = vec![anchors[0]];
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let mut cur = a;
        while cur != b {
            let here = distance(mesh.nodes[cur], pb);
            let next = topo.node_edges[cur]
                .iter()
                .map(|&e| {
                    let [n0, n1] = topo.edges[e].nodes;
                    if n0 == cur {
                        n1
                    } else {
                        n0
                    }
                })
                .filter(|&n| {
                    point_segment_distance(mesh.nodes[n], pa, pb) <= seam.tolerance
                        && distance(mesh.nodes[n], pb) < here
                })
                .min_by(|&x, &y| {
                    distance(mesh.nodes[x], pb)
                        .total_cmp(&distance(mesh.nodes[y], pb))
                        .then(x.cmp(&y))
                });
            match next {
                Some(n) => {
                    path.push(n);
                    cur = n;
                }
                None => {
                    return Err(MeshError::Seam(format!(
                        "segment ({}, {}) -> ({}, {}) does not follow mesh edges",
                        pa[0], pa[1], pb[0], pb[1]
                    )))
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    for &n in &path {
        if !seen.insert(n) {
            return Err(MeshError::Seam(format!("seam crosses itself at node {n}")));
        }
    }

    let seam_pairs: BTreeSet<(usize, usize)> = path.windows(2).map(|w| ordered(w[0], w[1])).collect();

    let on_boundary = |n: usize| topo.node_edges[n].iter().any(|&e| topo.edges[e].is_boundary());
    let last = path.len() - 1;
    let mut to_split: Vec<usize> = path[1..last].to_vec();
    if seam.open_mouth {
        for end in [path[0], path[last]] {
            if on_boundary(end) {
                to_split.push(end);
            }
        }
    }

    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ei, el) in mesh.elements.iter().enumerate() {
        for &n in &el.nodes {
            incident.entry(n).or_default().push(ei);
        }
    }

    let mut nodes = mesh.nodes.clone();
    // (element, old node) -> new node
    let mut replace: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &n in &to_split {
        let els = &incident[&n];
        let mut component: BTreeMap<usize, usize> = BTreeMap::new();
        let mut count = 0;
        for &start in els {
            if component.contains_key(&start) {
                continue;
            }
            let mut stack = vec![start];
            component.insert(start, count);
            while let Some(e) = stack.pop() {
                for &(a, b) in &local_edges_at(mesh, e, n) {
                    let key = ordered(a, b);
                    if seam_pairs.contains(&key) || mesh.seam_edges.contains(&key) {
                        continue;
                    }
                    for &f in els {
                        if f != e
                            && !component.contains_key(&f)
                            && mesh.elements[f].nodes.contains(&a)
                            && mesh.elements[f].nodes.contains(&b)
                        {
                            component.insert(f, count);
                            stack.push(f);
                        }
                    }
                }
            }
            count += 1;
        }
        let mut new_ids = vec![n];
        for _ in 1..count {
            new_ids.push(nodes.len());
            nodes.push(mesh.nodes[n]);
        }
        for (&e, &c) in &component {
            if c > 0 {
                replace.insert((e, n), new_ids[c]);
            }
        }
    }

    let mut elements = mesh.elements.clone();
    for (ei, el) in elements.iter_mut().enumerate() {
        for node in &mut el.nodes {
            if let Some(&r) = replace.get(&(ei, *node)) {
                *node = r;
            }
        }
    }
    let mut seam_edges = mesh.seam_edges.clone();
    for &(a, b) in &seam_pairs {
        for e in topo.edges.iter().filter(|e| e.nodes == [a, b]) {
            for &el in &e.elements {
                let ra = replace.get(&(el, a)).copied().unwrap_or(a);
                let rb = replace.get(&(el, b)).copied().unwrap_or(b);
                seam_edges.insert(ordered(ra, rb));
            }
        }
    }

    let out = Mesh2D {
        nodes,
        elements,
        regions: mesh.regions.clone(),
        seam_edges,
    };
    out.validate()?;
    build_edge_topology(&out)?;
    Ok(out)
}

/// Local edges of element `e` that touch node `n`.
fn local_edges_at(mesh: &Mesh2D, e: usize, n: usize) -> Vec<(usize, usize)> {
    mesh.elements[e].local_edges().filter(|&(a, b)| a == n || b == n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_grid, DiagonalRule, Element, ElementKind};

    /// Unit square split into four triangles around a center node.
    fn four_triangle_patch() -> Mesh2D {
        Mesh2D::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
            vec![
                Element::cst([0, 1, 4], 0),
                Element::cst([1, 2, 4], 0),
                Element::cst([2, 3, 4], 0),
                Element::cst([3, 0, 4], 0),
            ],
            vec!["a".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_edge_seam_frees_the_edge() {
        let m = four_triangle_patch();
        let s = SeamSpec { points: vec![[0.5, 0.5], [1.0, 1.0]], tolerance: 1e-9, open_mouth: false };
        let cut = insert_seam(&m, &s).unwrap();
        assert_eq!(cut.nodes.len(), m.nodes.len());
        let before = build_edge_topology(&m).unwrap();
        let after = build_edge_topology(&cut).unwrap();
        assert_eq!(after.edges.len(), before.edges.len() + 1);
        let seam: Vec<_> = after.edges.iter().filter(|e| e.seam).collect();
        assert_eq!(seam.len(), 2);
        assert!(seam.iter().all(|e| e.elements.len() == 1));
    }

    #[test]
    fn two_edge_seam_duplicates_the_middle_node() {
        // 2 x 1 cells of 6 nodes; the seam runs along the middle column line
        // extended through a 2 x 2 grid so the shared node is interior.
        let m = generate_structured_grid(2.0, 2.0, 2, 2, ElementKind::Cst, DiagonalRule::Main).unwrap();
        let s = SeamSpec { points: vec![[1.0, 0.0], [1.0, 2.0]], tolerance: 1e-9, open_mouth: false };
        let cut = insert_seam(&m, &s).unwrap();
        assert_eq!(cut.nodes.len(), m.nodes.len() + 1);
        assert_eq!(cut.elements.len(), m.elements.len());
        assert!((cut.total_area() - m.total_area()).abs() == 0.0);
        let topo = build_edge_topology(&cut).unwrap();
        for e in &topo.edges {
            if e.seam {
                assert_eq!(e.elements.len(), 1);
            }
        }
        assert_eq!(topo.edges.iter().filter(|e| e.seam).count(), 4);
    }

    #[test]
    fn open_mouth_splits_boundary_endpoint() {
        let m = generate_structured_grid(2.0, 2.0, 2, 2, ElementKind::Cst, DiagonalRule::Main).unwrap();
        let s = SeamSpec { points: vec![[1.0, 0.0], [1.0, 1.0]], tolerance: 1e-9, open_mouth: true };
        let cut = insert_seam(&m, &s).unwrap();
        assert_eq!(cut.nodes.len(), m.nodes.len() + 1);
    }

    #[test]
    fn endpoint_off_mesh_is_rejected() {
        let m = four_triangle_patch();
        let s = SeamSpec { points: vec![[0.5, 0.5], [0.9, 0.7]], tolerance: 1e-3, open_mouth: false };
        assert!(matches!(insert_seam(&m, &s), Err(MeshError::Seam(_))));
    }

    #[test]
    fn seam_across_elements_is_rejected() {
        let m = generate_structured_grid(2.0, 2.0, 2, 2, ElementKind::Cst, DiagonalRule::Main).unwrap();
        // Anti-diagonal has no edges in a main-diagonal grid.
        let s = SeamSpec { points: vec![[0.0, 2.0], [1.0, 1.0]], tolerance: 1e-9, open_mouth: false };
        assert!(matches!(insert_seam(&m, &s), Err(MeshError::Seam(_))));
    }

    #[test]
    fn self_crossing_is_rejected() {
        let m = generate_structured_grid(2.0, 2.0, 2, 2, ElementKind::Quad, DiagonalRule::Main).unwrap();
        let s = SeamSpec {
            points: vec![[1.0, 1.0], [2.0, 1.0], [1.0, 1.0]],
            tolerance: 1e-9,
            open_mouth: false,
        };
        assert!(matches!(insert_seam(&m, &s), Err(MeshError::Seam(_))));
    }
}
