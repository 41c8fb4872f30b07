use super::VectorValue;
use crate::mesh::{CellGeometry, Mesh, Point};

/// Local lowest-order RT functions `ψ_j = (x - P_j) / (2|T|)` and their
/// divergence `1/|T|` at a reference point. `ψ_j` has unit flux through the
/// edge opposite `P_j` and zero flux through the other two.
pub fn eval_rt0(geom: &CellGeometry, xr: Point) -> [VectorValue; 3] {
    let x = geom.map(xr);
    let scale = 1.0 / (2.0 * geom.area);
    [0, 1, 2].map(|j| {
        let p = geom.vertices[j];
        ([scale * (x[0] - p[0]), scale * (x[1] - p[1])], 1.0 / geom.area)
    })
}

/// `RT_0 ∩ H_0(div)`: one dof per interior facet. The global function `ψ_F`
/// has unit flux in direction `n_F` and equals `σ ψ_j` on each incident cell.
#[derive(Debug, Clone)]
pub struct Rt0Space {
    facet_dof: Vec<Option<usize>>,
    cell_dofs: Vec<[Option<usize>; 3]>,
    cell_signs: Vec<[f64; 3]>,
    num_dofs: usize,
}

impl Rt0Space {
    pub fn new(mesh: &Mesh) -> Self {
        let mut next = 0;
        let facet_dof: Vec<Option<usize>> = mesh
            .boundary_facet
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let cell_dofs = mesh.cell_to_facets.iter().map(|fs| fs.map(|f| facet_dof[f])).collect();
        Rt0Space {
            facet_dof,
            cell_dofs,
            cell_signs: mesh.orientation.signs.clone(),
            num_dofs: next,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn facet_dof(&self, facet: usize) -> Option<usize> {
        self.facet_dof[facet]
    }

    pub fn cell_dofs(&self, cell: usize) -> [Option<usize>; 3] {
        self.cell_dofs[cell]
    }

    pub fn cell_signs(&self, cell: usize) -> [f64; 3] {
        self.cell_signs[cell]
    }
}
