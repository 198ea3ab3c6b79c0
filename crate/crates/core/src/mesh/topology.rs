use std::collections::BTreeMap;

use super::{ordered, Mesh2D, MeshError, Point};

/// One element edge and the elements on either side of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Ascending node IDs.
    pub nodes: [usize; 2],
    /// Adjacent elements, ascending; one for boundary edges, two otherwise.
    pub elements: Vec<usize>,
    /// Edge quadrature point (midpoint).
    pub quadrature: Point,
    /// Reference length.
    pub length: f64,
    /// True for the two sides of an edge cut by a seam.
    pub seam: bool,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTopology {
    pub edges: Vec<Edge>,
    /// Edges incident to each node.
    pub node_edges: Vec<Vec<usize>>,
    /// Edge IDs per element, in local edge order (n_i, n_{i+1}).
    pub element_edges: Vec<Vec<usize>>,
}

impl EdgeTopology {
    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&i| self.edges[i].is_boundary())
    }

    pub fn interior_count(&self) -> usize {
        self.edges.iter().filter(|e| e.elements.len() == 2).count()
    }

    /// Edge of `element` joining nodes `a` and `b`, if any.
    pub fn element_edge(&self, element: usize, a: usize, b: usize) -> Option<usize> {
        let key = ordered(a, b);
        self.element_edges[element]
            .iter()
            .copied()
            .find(|&e| (self.edges[e].nodes[0], self.edges[e].nodes[1]) == key)
    }

    /// Boundary edge whose quadrature point is closest to `p`.
    pub fn nearest_boundary_edge(&self, p: Point) -> Option<usize> {
        self.boundary_edges().min_by(|&a, &b| {
            let da = super::distance(self.edges[a].quadrature, p);
            let db = super::distance(self.edges[b].quadrature, p);
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }
}

/// Derives the edge list of a mesh. Edges are ordered by ascending node pair;
/// the two sides of a seam edge are ordered by element ID.
pub fn build_edge_topology(mesh: &Mesh2D) -> Result<EdgeTopology, MeshError> {
    let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (ei, el) in mesh.elements.iter().enumerate() {
        for (local, (a, b)) in el.local_edges().enumerate() {
            map.entry(ordered(a, b)).or_default().push((ei, local));
        }
    }

    let mut edges = Vec::with_capacity(map.len());
    let mut element_edges: Vec<Vec<usize>> = mesh
        .elements
        .iter()
        .map(|el| vec![usize::MAX; el.nodes.len()])
        .collect();
    let mut node_edges = vec![Vec::new(); mesh.nodes.len()];
    let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    for (&(a, b), owners) in &map {
        if owners.len() > 2 {
            return Err(MeshError::NonManifoldEdge(a, b));
        }
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let quadrature = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let length = super::distance(pa, pb);
        let is_seam = mesh.seam_edges.contains(&(a, b));
        let groups: Vec<Vec<(usize, usize)>> = if is_seam && owners.len() == 2 {
            let mut o = owners.clone();
            o.sort();
            o.into_iter().map(|x| vec![x]).collect()
        } else {
            vec![owners.clone()]
        };
        if !is_seam && owners.len() == 2 {
            let pair = ordered(owners[0].0, owners[1].0);
            *shared.entry(pair).or_insert(0) += 1;
            if shared[&pair] > 1 {
                return Err(MeshError::MultipleSharedEdges(pair.0, pair.1));
            }
        }
        for group in groups {
            let id = edges.len();
            let mut elements: Vec<usize> = group.iter().map(|&(e, _)| e).collect();
            elements.sort_unstable();
            for &(e, local) in &group {
                element_edges[e][local] = id;
            }
            node_edges[a].push(id);
            node_edges[b].push(id);
            edges.push(Edge {
                nodes: [a, b],
                elements,
                quadrature,
                length,
                seam: is_seam,
            });
        }
    }

    Ok(EdgeTopology {
        edges,
        node_edges,
        element_edges,
    })
}
