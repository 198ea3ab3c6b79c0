//! ASCII mesh format 2.2 (subset): `$MeshFormat`, `$PhysicalNames`, `$Nodes`
//! and `$Elements` with 3-node triangles (type 2) and 4-node quadrilaterals
//! (type 3). Points (15) and lines (1) are boundary entities and are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{polygon_area, Element, ElementKind, Mesh2D, MeshError};

const PLANAR_TOL: f64 = 1e-12;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.last = i + 1;
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        self.next_nonempty().ok_or_else(|| MeshError::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| MeshError::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

fn expect_end(lines: &mut Lines<'_>, section: &str) -> Result<(), MeshError> {
    let (ln, l) = lines.expect(&format!("$End{section}"))?;
    if l != format!("$End{section}") {
        return Err(MeshError::Parse {
            line: ln,
            msg: format!("malformed section: expected $End{section}, found `{l}`"),
        });
    }
    Ok(())
}

/// Parses mesh text. Regions come from the first (physical) tag of each
/// element, named through `$PhysicalNames` when present. Clockwise elements
/// are reoriented.
pub fn parse_gmsh(text: &str) -> Result<Mesh2D, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let mut names: BTreeMap<i64, String> = BTreeMap::new();
    let mut node_index: BTreeMap<u64, usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut raw_elements: Vec<(ElementKind, i64, Vec<u64>)> = Vec::new();
    let mut saw_nodes = false;
    let mut saw_elements = false;

    while let Some((ln, header)) = lines.next_nonempty() {
        match header {
            "$MeshFormat" => {
                let (ln, l) = lines.expect("format line")?;
                let version: f64 = parse_num(l.split_whitespace().next(), ln, "format version")?;
                if !(2.0..3.0).contains(&version) {
                    return Err(MeshError::Parse {
                        line: ln,
                        msg: format!("unsupported format version {version}"),
                    });
                }
                let ft: u32 = parse_num(l.split_whitespace().nth(1), ln, "file type")?;
                if ft != 0 {
                    return Err(MeshError::Parse { line: ln, msg: "binary files are not supported".into() });
                }
                expect_end(&mut lines, "MeshFormat")?;
            }
            "$PhysicalNames" => {
                let (ln, l) = lines.expect("physical name count")?;
                let n: usize = parse_num(Some(l), ln, "physical name count")?;
                for _ in 0..n {
                    let (ln, l) = lines.expect("physical name")?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let _dim: u32 = parse_num(it.next(), ln, "dimension")?;
                    let tag: i64 = parse_num(it.next(), ln, "physical tag")?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    names.insert(tag, name);
                }
                expect_end(&mut lines, "PhysicalNames")?;
            }
            "$Nodes" => {
                saw_nodes = true;
                let (ln, l) = lines.expect("node count")?;
                let n: usize = parse_num(Some(l), ln, "node count")?;
                for _ in 0..n {
                    let (ln, l) = lines.expect("node record")?;
                    let mut it = l.split_whitespace();
                    let id: u64 = parse_num(it.next(), ln, "node id")?;
                    let x: f64 = parse_num(it.next(), ln, "x coordinate")?;
                    let y: f64 = parse_num(it.next(), ln, "y coordinate")?;
                    let z: f64 = parse_num(it.next(), ln, "z coordinate")?;
                    if z.abs() > PLANAR_TOL {
                        return Err(MeshError::NonPlanarNode { id, z });
                    }
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(MeshError::DuplicateNode(id));
                    }
                    nodes.push([x, y]);
                }
                expect_end(&mut lines, "Nodes")?;
            }
            "$Elements" => {
                saw_elements = true;
                let (ln, l) = lines.expect("element count")?;
                let n: usize = parse_num(Some(l), ln, "element count")?;
                for _ in 0..n {
                    let (ln, l) = lines.expect("element record")?;
                    let mut it = l.split_whitespace();
                    let _id: u64 = parse_num(it.next(), ln, "element id")?;
                    let ty: u32 = parse_num(it.next(), ln, "element type")?;
                    let ntags: usize = parse_num(it.next(), ln, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(parse_num::<i64>(it.next(), ln, "tag")?);
                    }
                    let (kind, nn) = match ty {
                        2 => (ElementKind::Cst, 3),
                        3 => (ElementKind::Quad, 4),
                        1 | 15 => continue,
                        other => return Err(MeshError::UnsupportedElementType(other)),
                    };
                    let mut ids = Vec::with_capacity(nn);
                    for _ in 0..nn {
                        ids.push(parse_num::<u64>(it.next(), ln, "element node")?);
                    }
                    raw_elements.push((kind, tags.first().copied().unwrap_or(0), ids));
                }
                expect_end(&mut lines, "Elements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // Unknown section: skip through its end marker.
                let section = &other[1..];
                let end = format!("$End{section}");
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: format!("malformed section header `{other}`"),
                })
            }
        }
    }
    if !saw_nodes || !saw_elements {
        return Err(MeshError::Parse {
            line: lines.last,
            msg: "missing $Nodes or $Elements section".into(),
        });
    }

    let mut region_of_tag: BTreeMap<i64, usize> = BTreeMap::new();
    let mut regions = Vec::new();
    let mut elements = Vec::with_capacity(raw_elements.len());
    for (ei, (kind, tag, ids)) in raw_elements.into_iter().enumerate() {
        let region = *region_of_tag.entry(tag).or_insert_with(|| {
            regions.push(names.get(&tag).cloned().unwrap_or_else(|| tag.to_string()));
            regions.len() - 1
        });
        let mut local = Vec::with_capacity(ids.len());
        for id in ids {
            let n = node_index
                .get(&id)
                .copied()
                .ok_or(MeshError::UnknownNode { element: ei, node: id })?;
            local.push(n);
        }
        let pts: Vec<_> = local.iter().map(|&n| nodes[n]).collect();
        if polygon_area(&pts) < 0.0 {
            local.reverse();
        }
        elements.push(Element { kind, nodes: local, region });
    }
    Mesh2D::new(nodes, elements, regions)
}

/// Writes a mesh in the same format, one physical group per region.
pub fn write_gmsh(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let _ = writeln!(s, "$PhysicalNames\n{}", mesh.regions.len());
    for (i, r) in mesh.regions.iter().enumerate() {
        let _ = writeln!(s, "2 {} \"{}\"", i + 1, r);
    }
    s.push_str("$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {:e} {:e} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n");
    let _ = writeln!(s, "$Elements\n{}", mesh.elements.len());
    for (i, el) in mesh.elements.iter().enumerate() {
        let ty = match el.kind {
            ElementKind::Cst => 2,
            ElementKind::Quad => 3,
        };
        let nodes: Vec<String> = el.nodes.iter().map(|n| (n + 1).to_string()).collect();
        let tag = el.region + 1;
        let _ = writeln!(s, "{} {ty} 2 {tag} {tag} {}", i + 1, nodes.join(" "));
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRI: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
$PhysicalNames\n1\n2 7 \"plate\"\n$EndPhysicalNames\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n3\n1 1 2 7 1 1 2\n2 2 2 7 1 1 2 3\n3 2 2 7 1 1 3 4\n$EndElements\n";

    #[test]
    fn smallest_valid_mesh() {
        let m = parse_gmsh(TWO_TRI).unwrap();
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.elements.len(), 2);
        assert_eq!(m.regions, vec!["plate".to_string()]);
        assert!(m.elements.iter().all(|e| e.region == 0));
    }

    #[test]
    fn tetrahedron_is_unsupported() {
        let text = TWO_TRI.replace("3 2 2 7 1 1 3 4", "3 4 2 7 1 1 2 3 4");
        assert_eq!(parse_gmsh(&text).unwrap_err(), MeshError::UnsupportedElementType(4));
        assert_eq!(
            parse_gmsh(&text).unwrap_err().to_string(),
            "unsupported element type 4"
        );
    }

    #[test]
    fn non_planar_and_duplicate_nodes() {
        let text = TWO_TRI.replace("3 1 1 0", "3 1 1 0.5");
        assert!(matches!(parse_gmsh(&text), Err(MeshError::NonPlanarNode { id: 3, .. })));
        let text = TWO_TRI.replace("4 0 1 0", "3 0 1 0");
        assert_eq!(parse_gmsh(&text).unwrap_err(), MeshError::DuplicateNode(3));
    }

    #[test]
    fn malformed_header() {
        let text = TWO_TRI.replace("$EndNodes", "$EndNode");
        assert!(matches!(parse_gmsh(&text), Err(MeshError::Parse { .. })));
        let text = format!("garbage\n{TWO_TRI}");
        assert!(matches!(parse_gmsh(&text), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let text = TWO_TRI.replace("2 2 2 7 1 1 2 3", "2 2 2 7 1 3 2 1");
        let m = parse_gmsh(&text).unwrap();
        assert!(m.element_area(0) > 0.0);
    }

    #[test]
    fn unnamed_tags_become_region_names() {
        let text = TWO_TRI
            .replace("$PhysicalNames\n1\n2 7 \"plate\"\n$EndPhysicalNames\n", "")
            .replace("3 2 2 7 1 1 3 4", "3 2 2 9 1 1 3 4");
        let m = parse_gmsh(&text).unwrap();
        assert_eq!(m.regions, vec!["7".to_string(), "9".to_string()]);
    }

    #[test]
    fn write_then_parse_preserves_mesh() {
        let m = parse_gmsh(TWO_TRI).unwrap();
        let again = parse_gmsh(&write_gmsh(&m)).unwrap();
        assert_eq!(m, again);
    }
}
