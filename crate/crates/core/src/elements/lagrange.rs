use nalgebra::DMatrix;

use super::{check_order, Monomials};
use crate::mesh::{Mesh, Point};
use crate::{Error, Result};

/// Nodal `P_k` basis on the reference triangle.
///
/// Local node order: the three vertices, then the `k - 1` nodes of each edge
/// (edge `e` is opposite local vertex `e`), then interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub k: usize,
    /// Lattice multi-indices with respect to the local vertices.
    pub nodes: Vec<[usize; 3]>,
    pub points: Vec<Point>,
    monomials: Monomials,
    /// `coeffs[(m, i)]`: coefficient of monomial `m` in basis function `i`.
    coeffs: DMatrix<f64>,
}

/// Reference-coordinate values, gradients and Hessians `[xx, xy, yy]`.
#[derive(Debug, Clone)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hessians: Vec<[f64; 3]>,
}

impl LagrangeBasis {
    pub fn new(k: usize) -> Result<Self> {
        check_order(k)?;
        let mut nodes = Vec::new();
        for j in 0..3 {
            let mut m = [0; 3];
            m[j] = k;
            nodes.push(m);
        }
        for e in 0..3 {
            let (a, b) = ((e + 1) % 3, (e + 2) % 3);
            for t in 1..k {
                let mut m = [0; 3];
                m[a] = k - t;
                m[b] = t;
                nodes.push(m);
            }
        }
        for i in 1..k {
            for j in 1..k {
                if i + j < k {
                    nodes.push([k - i - j, i, j]);
                }
            }
        }
        let points: Vec<Point> =
            nodes.iter().map(|m| [m[1] as f64 / k as f64, m[2] as f64 / k as f64]).collect();
        let monomials = Monomials::new(k);
        let n = monomials.len();
        debug_assert_eq!(n, points.len());
        // V[(i, m)] = monomial m at node i; basis coefficients are V^{-1}
        let v = DMatrix::from_fn(n, n, |i, m| monomials.values(points[i])[m]);
        let coeffs = v
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular Lagrange Vandermonde".into()))?;
        Ok(LagrangeBasis {
            k,
            nodes,
            points,
            monomials,
            coeffs,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn eval(&self, xr: Point) -> ShapeValues {
        let (mv, mg, mh) = self.monomials.derivatives(xr);
        let n = self.len();
        let mut out = ShapeValues {
            values: vec![0.0; n],
            grads: vec![[0.0; 2]; n],
            hessians: vec![[0.0; 3]; n],
        };
        for i in 0..n {
            for m in 0..n {
                let c = self.coeffs[(m, i)];
                if c == 0.0 {
                    continue;
                }
                out.values[i] += c * mv[m];
                for d in 0..2 {
                    out.grads[i][d] += c * mg[m][d];
                }
                for d in 0..3 {
                    out.hessians[i][d] += c * mh[m][d];
                }
            }
        }
        out
    }
}

/// Evaluates the order-`k` nodal basis at reference points.
pub fn eval_lagrange(k: usize, points: &[Point]) -> Result<Vec<ShapeValues>> {
    let basis = LagrangeBasis::new(k)?;
    Ok(points.iter().map(|&p| basis.eval(p)).collect())
}

/// Continuous vector-valued `P_k` space with global node numbering.
///
/// Scalar nodes are numbered vertices first, then `k - 1` nodes per facet, then
/// interior nodes cell by cell. Vector dof of node `s` and component `c` is
/// `2 s + c`; the local vector dof of local node `i` is `2 i + c`.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    pub k: usize,
    pub basis: LagrangeBasis,
    pub num_nodes: usize,
    pub cell_nodes: Vec<Vec<usize>>,
    pub node_points: Vec<Point>,
    pub boundary_node: Vec<bool>,
}

impl LagrangeSpace {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(k)?;
        let nv = mesh.num_vertices();
        let nf = mesh.num_facets();
        let per_edge = k - 1;
        let per_cell = if k >= 3 { (k - 1) * (k - 2) / 2 } else { 0 };
        let num_nodes = nv + nf * per_edge + mesh.num_cells() * per_cell;
        let mut node_points = vec![[0.0; 2]; num_nodes];
        let mut boundary_node = vec![false; num_nodes];
        let bverts = mesh.boundary_vertices();
        boundary_node[..nv].copy_from_slice(&bverts);

        let mut cell_nodes = Vec::with_capacity(mesh.num_cells());
        for (c, tri) in mesh.cells.iter().enumerate() {
            let geom = mesh.geometry(c);
            let mut interior = 0;
            let ids: Vec<usize> = basis
                .nodes
                .iter()
                .zip(&basis.points)
                .map(|(m, &p)| {
                    let nonzero: Vec<usize> = (0..3).filter(|&j| m[j] > 0).collect();
                    let id = match nonzero.len() {
                        1 => tri[nonzero[0]],
                        2 => {
                            let opp = (0..3).find(|j| m[*j] == 0).unwrap();
                            let f = mesh.cell_to_facets[c][opp];
                            let (a, b) = (nonzero[0], nonzero[1]);
                            let low = if tri[a] < tri[b] { a } else { b };
                            let id = nv + f * per_edge + m[low] - 1;
                            boundary_node[id] = mesh.boundary_facet[f];
                            id
                        }
                        _ => {
                            interior += 1;
                            nv + nf * per_edge + c * per_cell + interior - 1
                        }
                    };
                    node_points[id] = geom.map(p);
                    id
                })
                .collect();
            cell_nodes.push(ids);
        }
        Ok(LagrangeSpace {
            k,
            basis,
            num_nodes,
            cell_nodes,
            node_points,
            boundary_node,
        })
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    /// Local vector dof count per cell.
    pub fn local_len(&self) -> usize {
        2 * self.basis.len()
    }

    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        self.cell_nodes[cell].iter().flat_map(|&s| [2 * s, 2 * s + 1]).collect()
    }

    pub fn is_dirichlet_dof(&self, dof: usize) -> bool {
        self.boundary_node[dof / 2]
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&d| self.is_dirichlet_dof(d)).collect()
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate(&self, g: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        for (s, &p) in self.node_points.iter().enumerate() {
            let v = g(p);
            out[2 * s] = v[0];
            out[2 * s + 1] = v[1];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_mesh, CellGeometry};

    #[test]
    fn nodal_property() {
        for k in 1..=4 {
            let b = LagrangeBasis::new(k).unwrap();
            assert_eq!(b.len(), (k + 1) * (k + 2) / 2);
            for (i, &p) in b.points.iter().enumerate() {
                let s = b.eval(p);
                for (j, v) in s.values.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn spot_values() {
        let s = &eval_lagrange(1, &[[0.0, 0.0]]).unwrap()[0];
        assert_eq!(s.values.iter().map(|v| v.round()).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        let b = LagrangeBasis::new(2).unwrap();
        let s = b.eval([0.5, 0.0]);
        let mid = b.points.iter().position(|p| *p == [0.5, 0.0]).unwrap();
        assert!(s.values[0].abs() < 1e-14);
        assert!((s.values[mid] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partition_of_unity_and_fd_gradients() {
        for k in 1..=4 {
            let b = LagrangeBasis::new(k).unwrap();
            let p = [0.23, 0.41];
            let s = b.eval(p);
            assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let eps = 1e-6;
            let sx = b.eval([p[0] + eps, p[1]]);
            let sy = b.eval([p[0], p[1] + eps]);
            let sxm = b.eval([p[0] - eps, p[1]]);
            let sym = b.eval([p[0], p[1] - eps]);
            for i in 0..b.len() {
                let gx = (sx.values[i] - sxm.values[i]) / (2.0 * eps);
                let gy = (sy.values[i] - sym.values[i]) / (2.0 * eps);
                assert!((gx - s.grads[i][0]).abs() < 1e-6);
                assert!((gy - s.grads[i][1]).abs() < 1e-6);
                let hxx = (sx.grads[i][0] - sxm.grads[i][0]) / (2.0 * eps);
                let hxy = (sy.grads[i][0] - sym.grads[i][0]) / (2.0 * eps);
                assert!((hxx - s.hessians[i][0]).abs() < 1e-5);
                assert!((hxy - s.hessians[i][1]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn global_numbering_is_continuous() {
        let mesh = unit_square_mesh(2).unwrap();
        for k in 1..=4 {
            let space = LagrangeSpace::new(&mesh, k).unwrap();
            let nodes_expected = (2 * k + 1) * (2 * k + 1);
            assert_eq!(space.num_nodes, nodes_expected);
            // every cell places each global node at a consistent physical point
            for (c, ids) in space.cell_nodes.iter().enumerate() {
                let g: CellGeometry = mesh.geometry(c);
                for (i, &id) in ids.iter().enumerate() {
                    let p = g.map(space.basis.points[i]);
                    let q = space.node_points[id];
                    assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
                }
            }
            let on_boundary = |p: Point| p[0] < 1e-14 || p[1] < 1e-14 || p[0] > 1.0 - 1e-14 || p[1] > 1.0 - 1e-14;
            for (s, &p) in space.node_points.iter().enumerate() {
                assert_eq!(space.boundary_node[s], on_boundary(p));
            }
        }
    }
}
