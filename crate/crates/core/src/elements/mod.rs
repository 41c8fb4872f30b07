//! Shape-function families: vector Lagrange `P_k`, discontinuous pressure
//! `P_{k-1}`, lowest-order Raviart–Thomas and the interior RT enrichment
//! bubbles, plus the contravariant Piola map.

mod enrichment;
mod lagrange;
mod piola;
mod pressure;
mod rt0;

pub use enrichment::{
    eval_enrichment, reference_moment_matrix, BaryPoly, Bubble, EnrichmentBasis, EnrichmentKind,
};
pub use lagrange::{eval_lagrange, LagrangeBasis, LagrangeSpace, ShapeValues};
pub use piola::{piola_div, piola_map};
pub use pressure::{PressureBasis, PressureSpace};
pub use rt0::{eval_rt0, Rt0Space};

use crate::mesh::CellGeometry;
use crate::{Error, Result};

pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 4;

pub(crate) fn check_order(k: usize) -> Result<()> {
    if (MIN_ORDER..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(k))
    }
}

/// Monomials `x^a y^b` with `a + b <= degree`, ordered by total degree.
#[derive(Debug, Clone)]
pub(crate) struct Monomials {
    pub exps: Vec<(i32, i32)>,
}

impl Monomials {
    pub fn new(degree: usize) -> Self {
        let mut exps = Vec::new();
        for d in 0..=degree as i32 {
            for b in 0..=d {
                exps.push((d - b, b));
            }
        }
        Monomials { exps }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn values(&self, p: [f64; 2]) -> Vec<f64> {
        self.exps.iter().map(|&(a, b)| p[0].powi(a) * p[1].powi(b)).collect()
    }

    /// Values, first and second derivatives `[xx, xy, yy]`.
    pub fn derivatives(&self, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>, Vec<[f64; 3]>) {
        let pw = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
        let mut v = Vec::with_capacity(self.len());
        let mut g = Vec::with_capacity(self.len());
        let mut h = Vec::with_capacity(self.len());
        for &(a, b) in &self.exps {
            let (af, bf) = (a as f64, b as f64);
            v.push(pw(p[0], a) * pw(p[1], b));
            g.push([af * pw(p[0], a - 1) * pw(p[1], b), bf * pw(p[0], a) * pw(p[1], b - 1)]);
            h.push([
                af * (af - 1.0) * pw(p[0], a - 2) * pw(p[1], b),
                af * bf * pw(p[0], a - 1) * pw(p[1], b - 1),
                bf * (bf - 1.0) * pw(p[0], a) * pw(p[1], b - 2),
            ]);
        }
        (v, g, h)
    }
}

/// Vector field evaluation of one local enrichment function: value and divergence.
pub type VectorValue = ([f64; 2], f64);

/// The enrichment part `V_h^R` of the velocity space.
#[derive(Debug, Clone)]
pub enum EnrichmentSpace {
    /// Lowest-order RT on interior facets (used for `k = 1`).
    Rt0(Rt0Space),
    /// Cell-local interior bubbles, `basis.len()` per cell.
    Bubbles { basis: EnrichmentBasis, num_cells: usize },
}

impl EnrichmentSpace {
    pub fn bubbles(basis: EnrichmentBasis, num_cells: usize) -> Self {
        EnrichmentSpace::Bubbles { basis, num_cells }
    }

    pub fn num_dofs(&self) -> usize {
        match self {
            EnrichmentSpace::Rt0(s) => s.num_dofs(),
            EnrichmentSpace::Bubbles { basis, num_cells } => basis.len() * num_cells,
        }
    }

    pub fn local_len(&self) -> usize {
        match self {
            EnrichmentSpace::Rt0(_) => 3,
            EnrichmentSpace::Bubbles { basis, .. } => basis.len(),
        }
    }

    /// Global dof of each local function; `None` marks boundary RT0 facets.
    pub fn cell_dofs(&self, cell: usize) -> Vec<Option<usize>> {
        match self {
            EnrichmentSpace::Rt0(s) => s.cell_dofs(cell).to_vec(),
            EnrichmentSpace::Bubbles { basis, .. } => {
                let n = basis.len();
                (0..n).map(|l| Some(cell * n + l)).collect()
            }
        }
    }

    /// Local function values and divergences at a reference point, with the
    /// global orientation signs applied.
    pub fn eval_cell(&self, geom: &CellGeometry, cell: usize, xr: [f64; 2]) -> Vec<VectorValue> {
        match self {
            EnrichmentSpace::Rt0(s) => {
                let signs = s.cell_signs(cell);
                eval_rt0(geom, xr)
                    .into_iter()
                    .zip(signs)
                    .map(|((v, d), s)| ([s * v[0], s * v[1]], s * d))
                    .collect()
            }
            EnrichmentSpace::Bubbles { basis, .. } => basis.eval(geom, xr),
        }
    }

    pub fn is_rt0(&self) -> bool {
        matches!(self, EnrichmentSpace::Rt0(_))
    }
}
