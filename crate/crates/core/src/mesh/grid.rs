use serde::{Deserialize, Serialize};

use super::{Element, ElementKind, Mesh2D, MeshError};

/// How a structured cell is cut into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalRule {
    /// Bottom-left to top-right.
    #[default]
    Main,
    /// Bottom-right to top-left.
    Anti,
    /// Checkerboard of the two.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopRight,
    TopLeft,
}

/// Content of one cell of a [`GridLayout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFill {
    Empty,
    Quad,
    /// Two triangles; `Alternating` is resolved by cell parity.
    Split(DiagonalRule),
    /// Four triangles around an extra center node.
    Crossed,
    /// A single triangle: the cell with one corner cut away.
    Tri(Corner),
}

/// A tensor-product grid with arbitrary line positions and per-cell fill,
/// used to build benchmark geometries with slits and local refinement.
#[derive(Debug, Clone)]
pub struct GridLayout {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `(ys.len() - 1)` rows of `(xs.len() - 1)` cells.
    pub cells: Vec<CellFill>,
    pub cell_regions: Vec<usize>,
    pub regions: Vec<String>,
}

impl GridLayout {
    pub fn uniform(width: f64, height: f64, nx: usize, ny: usize, fill: CellFill) -> Self {
        let xs = (0..=nx).map(|i| width * i as f64 / nx as f64).collect();
        let ys = (0..=ny).map(|j| height * j as f64 / ny as f64).collect();
        GridLayout::from_lines(xs, ys, fill)
    }

    pub fn from_lines(xs: Vec<f64>, ys: Vec<f64>, fill: CellFill) -> Self {
        let n = (xs.len().saturating_sub(1)) * (ys.len().saturating_sub(1));
        GridLayout {
            xs,
            ys,
            cells: vec![fill; n],
            cell_regions: vec![0; n],
            regions: vec!["body".to_string()],
        }
    }

    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn set(&mut self, i: usize, j: usize, fill: CellFill) {
        let k = self.cell_index(i, j);
        self.cells[k] = fill;
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            0.5 * (self.xs[i] + self.xs[i + 1]),
            0.5 * (self.ys[j] + self.ys[j + 1]),
        ]
    }

    /// Registers (or finds) a region name and returns its index.
    pub fn region(&mut self, name: &str) -> usize {
        match self.regions.iter().position(|r| r == name) {
            Some(i) => i,
            None => {
                self.regions.push(name.to_string());
                self.regions.len() - 1
            }
        }
    }

    pub fn build(&self) -> Result<Mesh2D, MeshError> {
        let nx = self.nx();
        let ny = self.ny();
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidGrid("need at least one cell per direction".into()));
        }
        if self.xs.windows(2).any(|w| !(w[1] > w[0])) || self.ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeshError::InvalidGrid("grid lines must be strictly increasing".into()));
        }
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for &y in &self.ys {
            for &x in &self.xs {
                nodes.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = self.cell_index(i, j);
                let region = self.cell_regions[k];
                let bl = id(i, j);
                let br = id(i + 1, j);
                let tr = id(i + 1, j + 1);
                let tl = id(i, j + 1);
                match self.cells[k] {
                    CellFill::Empty => {}
                    CellFill::Quad => elements.push(Element::quad([bl, br, tr, tl], region)),
                    CellFill::Split(rule) => {
                        let main = match rule {
                            DiagonalRule::Main => true,
                            DiagonalRule::Anti => false,
                            DiagonalRule::Alternating => (i + j) % 2 == 0,
                        };
                        if main {
                            elements.push(Element::cst([bl, br, tr], region));
                            elements.push(Element::cst([bl, tr, tl], region));
                        } else {
                            elements.push(Element::cst([bl, br, tl], region));
                            elements.push(Element::cst([br, tr, tl], region));
                        }
                    }
                    CellFill::Crossed => {
                        let c = nodes.len();
                        nodes.push(self.cell_center(i, j));
                        elements.push(Element::cst([bl, br, c], region));
                        elements.push(Element::cst([br, tr, c], region));
                        elements.push(Element::cst([tr, tl, c], region));
                        elements.push(Element::cst([tl, bl, c], region));
                    }
                    CellFill::Tri(omit) => {
                        let tri = match omit {
                            Corner::BottomLeft => [br, tr, tl],
                            Corner::BottomRight => [bl, tr, tl],
                            Corner::TopRight => [bl, br, tl],
                            Corner::TopLeft => [bl, br, tr],
                        };
                        elements.push(Element::cst(tri, region));
                    }
                }
            }
        }
        let mut mesh = Mesh2D {
            nodes,
            elements,
            regions: self.regions.clone(),
            seam_edges: Default::default(),
        };
        mesh.compact_nodes();
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Uniform `nx` by `ny` grid over `[0, width] x [0, height]`. CST grids cut
/// each cell into two triangles following `split`.
pub fn generate_structured_grid(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    kind: ElementKind,
    split: DiagonalRule,
) -> Result<Mesh2D, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidGrid(format!("cell counts must be positive, got {nx} x {ny}")));
    }
    if !(width > 0.0) || !(height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(MeshError::InvalidGrid(format!(
            "dimensions must be positive, got {width} x {height}"
        )));
    }
    let fill = match kind {
        ElementKind::Quad => CellFill::Quad,
        ElementKind::Cst => CellFill::Split(split),
    };
    GridLayout::uniform(width, height, nx, ny, fill).build()
}
