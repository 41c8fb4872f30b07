//! 2D simplicial triangulations with facet topology and orientation.
//!
//! Local numbering convention used throughout the crate: local facet `j` of a
//! cell is the edge opposite to local vertex `j`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise order.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Per-facet normal orientation.
///
/// `normals[f]` is the fixed unit normal `n_F`. For an interior facet it points
/// from the incident cell with the smaller index towards the one with the larger
/// index; on the boundary it points out of the domain. `signs[c][j]` is the
/// `σ = ±1` such that `σ n_F` is the outward normal of cell `c` on its local
/// facet `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetOrientation {
    pub normals: Vec<Point>,
    pub signs: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    /// Vertex pairs `(a, b)` with `a < b`, sorted lexicographically.
    pub facets: Vec<[usize; 2]>,
    /// One or two incident cells per facet, in increasing index order.
    pub facet_to_cells: Vec<Vec<usize>>,
    /// Global facet index of each local facet (opposite local vertex `j`).
    pub cell_to_facets: Vec<[usize; 3]>,
    pub boundary_facet: Vec<bool>,
    pub orientation: FacetOrientation,
    /// Cell diameter (longest edge).
    pub h_cell: Vec<f64>,
    pub area: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and counterclockwise cells.
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let mut area = Vec::with_capacity(cells.len());
        let mut h_cell = Vec::with_capacity(cells.len());
        for (c, tri) in cells.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references vertex {v} but only {} vertices exist",
                    vertices.len()
                )));
            }
            let [a, b, d] = tri.map(|v| vertices[v]);
            let s = signed_area(a, b, d);
            let scale = edge_len(a, b).max(edge_len(b, d)).max(edge_len(d, a));
            if !(s > 1e-14 * scale * scale) {
                return Err(Error::DegenerateCell { cell: c, area: s });
            }
            area.push(s);
            h_cell.push(scale);
        }

        let mut edge_cells: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (c, tri) in cells.iter().enumerate() {
            for j in 0..3 {
                edge_cells.entry(local_facet(tri, j)).or_default().push(c);
            }
        }
        if let Some((e, cs)) = edge_cells.iter().find(|(_, cs)| cs.len() > 2) {
            return Err(Error::NonManifoldFacet(e[0], e[1], cs.len()));
        }
        let facets: Vec<[usize; 2]> = edge_cells.keys().copied().collect();
        let index: BTreeMap<[usize; 2], usize> =
            facets.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let facet_to_cells: Vec<Vec<usize>> = edge_cells.into_values().collect();
        let boundary_facet = facet_to_cells.iter().map(|cs| cs.len() == 1).collect();
        let cell_to_facets = cells
            .iter()
            .map(|tri| [0, 1, 2].map(|j| index[&local_facet(tri, j)]))
            .collect();

        let mut mesh = Mesh {
            vertices,
            cells,
            facets,
            facet_to_cells,
            cell_to_facets,
            boundary_facet,
            orientation: FacetOrientation {
                normals: Vec::new(),
                signs: Vec::new(),
            },
            h_cell,
            area,
        };
        mesh.orientation = build_facet_topology(&mesh)?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn num_interior_facets(&self) -> usize {
        self.boundary_facet.iter().filter(|b| !**b).count()
    }

    /// Maximum cell diameter.
    pub fn h(&self) -> f64 {
        self.h_cell.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        CellGeometry::new(self.cells[cell].map(|v| self.vertices[v]))
    }

    /// Vertices lying on a boundary facet.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for (f, e) in self.facets.iter().enumerate() {
            if self.boundary_facet[f] {
                flags[e[0]] = true;
                flags[e[1]] = true;
            }
        }
        flags
    }

    /// Reads the plain-text format: a `V C` header line, `V` lines `x y`, then
    /// `C` lines `i j k` with 0-based counterclockwise vertex indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty mesh file".into(),
        })?;
        let counts = parse_fields::<usize>(header, 2, line)?;
        let (nv, nc) = (counts[0], counts[1]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, l) = lines.next().ok_or(Error::Parse {
                line,
                msg: format!("expected {nv} vertex lines"),
            })?;
            let xy = parse_fields::<f64>(l, 2, line)?;
            vertices.push([xy[0], xy[1]]);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (line, l) = lines.next().ok_or(Error::Parse {
                line,
                msg: format!("expected {nc} cell lines"),
            })?;
            let ijk = parse_fields::<usize>(l, 3, line)?;
            cells.push([ijk[0], ijk[1], ijk[2]]);
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                msg: "trailing content after cell block".into(),
            });
        }
        Mesh::new(vertices, cells)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Mesh::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes into the plain-text format accepted by [`Mesh::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.vertices.len(), self.cells.len());
        for v in &self.vertices {
            s.push_str(&format!("{:e} {:e}\n", v[0], v[1]));
        }
        for c in &self.cells {
            s.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
        }
        s
    }
}

fn parse_fields<T: std::str::FromStr>(line_text: &str, n: usize, line: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = line_text.split_whitespace().collect();
    if fields.len() != n {
        return Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{f}`"),
            })
        })
        .collect()
}

fn edge_len(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Sorted vertex pair of the facet opposite local vertex `j`.
fn local_facet(tri: &[usize; 3], j: usize) -> [usize; 2] {
    let (a, b) = (tri[(j + 1) % 3], tri[(j + 2) % 3]);
    [a.min(b), a.max(b)]
}

/// Computes the global facet normals and per-cell orientation signs.
pub fn build_facet_topology(mesh: &Mesh) -> Result<FacetOrientation> {
    let mut normals = vec![[0.0; 2]; mesh.facets.len()];
    for (f, cells) in mesh.facet_to_cells.iter().enumerate() {
        if cells.len() > 2 {
            let e = mesh.facets[f];
            return Err(Error::NonManifoldFacet(e[0], e[1], cells.len()));
        }
        // outward normal of the lowest-index incident cell
        let c = cells[0];
        let j = (0..3)
            .find(|&j| mesh.cell_to_facets[c][j] == f)
            .ok_or_else(|| Error::InvalidMesh(format!("facet {f} not found in cell {c}")))?;
        normals[f] = mesh.geometry(c).outward_normal(j);
    }
    let signs = mesh
        .cell_to_facets
        .iter()
        .enumerate()
        .map(|(c, fs)| fs.map(|f| if mesh.facet_to_cells[f][0] == c { 1.0 } else { -1.0 }))
        .collect();
    Ok(FacetOrientation { normals, signs })
}

/// Structured mesh of `(0,1)^2`: `n x n` squares, each cut by the diagonal from
/// the lower-left to the upper-right corner.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("unit_square_mesh requires n >= 1".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let vertices = grid_vertices(n);
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    Mesh::new(vertices, cells)
}

/// Criss-cross mesh of `(0,1)^2`: every square is split into four triangles by
/// both diagonals, so each square centre is a singular vertex.
pub fn criss_cross_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("criss_cross_mesh requires n >= 1".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = grid_vertices(n);
    let mut cells = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let m = vertices.len();
            vertices.push([(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]);
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            cells.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
        }
    }
    Mesh::new(vertices, cells)
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    v
}

/// Red refinement: each triangle is split into four congruent children through
/// its edge midpoints. Parent vertices keep their indices; the midpoint of facet
/// `f` gets index `num_vertices + f`.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(mesh.facets.iter().map(|&[a, b]| {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }));
    let mut cells = Vec::with_capacity(4 * mesh.num_cells());
    for (tri, fs) in mesh.cells.iter().zip(&mesh.cell_to_facets) {
        let [v0, v1, v2] = *tri;
        let [m0, m1, m2] = fs.map(|f| nv + f);
        cells.extend([[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]]);
    }
    Mesh::new(vertices, cells)
}

/// Affine map `x = P_1 + B x̂` from the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    /// Columns are `P_2 - P_1` and `P_3 - P_1`.
    pub jacobian: [[f64; 2]; 2],
    /// Determinant of the Jacobian, `2 |T|`.
    pub det: f64,
    /// `B^{-T}`, maps reference gradients to physical gradients.
    pub inv_t: [[f64; 2]; 2],
    pub area: f64,
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p1, p2, p3] = vertices;
        let b = [[p2[0] - p1[0], p3[0] - p1[0]], [p2[1] - p1[1], p3[1] - p1[1]]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        // B^{-1} = [[b11, -b01], [-b10, b00]] / det, transposed
        let inv_t = [[b[1][1] / det, -b[1][0] / det], [-b[0][1] / det, b[0][0] / det]];
        CellGeometry {
            vertices,
            jacobian: b,
            det,
            inv_t,
            area: 0.5 * det,
        }
    }

    pub fn reference() -> Self {
        CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    pub fn map(&self, xr: Point) -> Point {
        let (p, b) = (self.vertices[0], self.jacobian);
        [
            p[0] + b[0][0] * xr[0] + b[0][1] * xr[1],
            p[1] + b[1][0] * xr[0] + b[1][1] * xr[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let m = self.inv_t;
        [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
    }

    /// Physical Hessian `B^{-T} Ĥ B^{-1}` from a reference Hessian `[xx, xy, yy]`.
    pub fn hessian(&self, h: [f64; 3]) -> [f64; 3] {
        let m = self.inv_t;
        let hr = [[h[0], h[1]], [h[1], h[2]]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out[i][j] += m[i][a] * hr[a][b] * m[j][b];
                    }
                }
            }
        }
        [out[0][0], out[0][1], out[1][1]]
    }

    /// Constant gradients of the three barycentric coordinates.
    pub fn barycentric_gradients(&self) -> [[f64; 2]; 3] {
        let g2 = self.grad([1.0, 0.0]);
        let g3 = self.grad([0.0, 1.0]);
        [[-g2[0] - g3[0], -g2[1] - g3[1]], g2, g3]
    }

    /// Outward unit normal on the edge opposite local vertex `j`.
    pub fn outward_normal(&self, j: usize) -> Point {
        let a = self.vertices[(j + 1) % 3];
        let b = self.vertices[(j + 2) % 3];
        let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
        let len = tx.hypot(ty);
        // counterclockwise cell: the outward normal is the tangent rotated clockwise
        [ty / len, -tx / len]
    }

    pub fn edge_length(&self, j: usize) -> f64 {
        edge_len(self.vertices[(j + 1) % 3], self.vertices[(j + 2) % 3])
    }

    pub fn diameter(&self) -> f64 {
        (0..3).map(|j| self.edge_length(j)).fold(0.0, f64::max)
    }
}

/// Barycentric coordinates of a reference point.
pub fn barycentric(xr: Point) -> [f64; 3] {
    [1.0 - xr[0] - xr[1], xr[0], xr[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(m: &Mesh) {
        for c in 0..m.num_cells() {
            let g = m.geometry(c);
            assert!(g.area > 0.0);
            assert!((g.area - m.area[c]).abs() < 1e-15);
            assert!((g.diameter() - m.h_cell[c]).abs() < 1e-15);
            // closed polygon: sum of outward normal times length vanishes
            let mut s = [0.0; 2];
            for j in 0..3 {
                let n = g.outward_normal(j);
                s[0] += n[0] * g.edge_length(j);
                s[1] += n[1] * g.edge_length(j);
            }
            assert!(s[0].abs() < 1e-14 && s[1].abs() < 1e-14);
        }
        for (f, cs) in m.facet_to_cells.iter().enumerate() {
            assert_eq!(cs.len(), if m.boundary_facet[f] { 1 } else { 2 });
            let n = m.orientation.normals[f];
            for &c in cs {
                let j = (0..3).find(|&j| m.cell_to_facets[c][j] == f).unwrap();
                let out = m.geometry(c).outward_normal(j);
                let s = m.orientation.signs[c][j];
                assert!((s * n[0] - out[0]).abs() < 1e-14 && (s * n[1] - out[1]).abs() < 1e-14);
            }
            if cs.len() == 2 {
                let j0 = (0..3).find(|&j| m.cell_to_facets[cs[0]][j] == f).unwrap();
                let j1 = (0..3).find(|&j| m.cell_to_facets[cs[1]][j] == f).unwrap();
                assert_eq!(m.orientation.signs[cs[0]][j0], -m.orientation.signs[cs[1]][j1]);
            }
        }
        let euler = m.num_vertices() as i64 - m.num_facets() as i64 + m.num_cells() as i64;
        assert_eq!(euler, 1);
    }

    #[test]
    fn unit_square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(
            (m.num_vertices(), m.num_cells(), m.num_facets(), m.num_interior_facets()),
            (4, 2, 5, 1)
        );
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        let m = unit_square_mesh(2).unwrap();
        assert_eq!(
            (m.num_vertices(), m.num_cells(), m.num_facets(), m.num_interior_facets()),
            (9, 8, 16, 8)
        );
        check_invariants(&m);
    }

    #[test]
    fn zero_n_rejected() {
        assert!(unit_square_mesh(0).is_err());
        assert!(criss_cross_mesh(0).is_err());
    }

    #[test]
    fn interior_facet_signs() {
        let m = unit_square_mesh(1).unwrap();
        let f = (0..m.num_facets()).find(|&f| !m.boundary_facet[f]).unwrap();
        let signs: Vec<f64> = m.facet_to_cells[f]
            .iter()
            .map(|&c| {
                let j = (0..3).find(|&j| m.cell_to_facets[c][j] == f).unwrap();
                m.orientation.signs[c][j]
            })
            .collect();
        assert_eq!(signs, vec![1.0, -1.0]);
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = unit_square_mesh(3).unwrap();
        for f in (0..m.num_facets()).filter(|&f| m.boundary_facet[f]) {
            let [a, b] = m.facets[f].map(|v| m.vertices[v]);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let n = m.orientation.normals[f];
            // outward from the square centre
            assert!(n[0] * (mid[0] - 0.5) + n[1] * (mid[1] - 0.5) > 0.0);
        }
    }

    #[test]
    fn refinement() {
        let m = unit_square_mesh(1).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_cells(), 8);
        assert_eq!(r.num_vertices(), 9);
        assert!((r.h() - m.h() / 2.0).abs() < 1e-15);
        assert_eq!(&r.vertices[..4], &m.vertices[..]);
        check_invariants(&r);
        let rr = refine_uniform(&r).unwrap();
        assert_eq!(rr.num_cells(), 32);
        assert!((rr.total_area() - 1.0).abs() < 1e-12);
        check_invariants(&rr);
    }

    #[test]
    fn criss_cross_topology() {
        let m = criss_cross_mesh(2).unwrap();
        assert_eq!(m.num_cells(), 16);
        assert_eq!(m.num_vertices(), 13);
        check_invariants(&m);
    }

    #[test]
    fn non_manifold_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [2.0, 1.0]];
        let cells = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        assert!(matches!(Mesh::new(v.clone(), cells), Err(Error::NonManifoldFacet(0, 1, 3))));
        // clockwise cell
        assert!(matches!(Mesh::new(v, vec![[0, 2, 1]]), Err(Error::DegenerateCell { cell: 0, .. })));
    }

    #[test]
    fn parse_round_trip() {
        let m = unit_square_mesh(2).unwrap();
        let p = Mesh::parse(&m.to_text()).unwrap();
        assert_eq!(p.cells, m.cells);
        assert_eq!(p.vertices, m.vertices);
        assert!(matches!(Mesh::parse("2 1\n0 0\n1 0\n0 1 2\n"), Err(Error::InvalidMesh(_))));
        assert!(matches!(Mesh::parse("3 1\n0 0\n1 x\n0 1\n0 1 2\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn hessian_of_quadratic_maps_correctly() {
        let g = CellGeometry::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]);
        // f(x) = x^2 has Hessian [2, 0, 0]; its reference Hessian is B^T H B
        let b = g.jacobian;
        let href = [2.0 * b[0][0] * b[0][0], 2.0 * b[0][0] * b[0][1], 2.0 * b[0][1] * b[0][1]];
        let h = g.hessian(href);
        assert!((h[0] - 2.0).abs() < 1e-13 && h[1].abs() < 1e-13 && h[2].abs() < 1e-13);
    }
}
