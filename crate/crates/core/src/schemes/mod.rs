//! Discrete solvers: the full enriched scheme, the condensed `P_k × P_0`
//! scheme for `k >= 2` and static condensation of the RT0 unknowns for `k = 1`.

mod full;
mod reduced;
mod saddle;

pub use full::{condense_rt0, solve_condensed_rt0, solve_full, CondensedRt0};
pub use reduced::{build_r_matrix, recover_fine_pressure, solve_reduced, RMatrix};
pub use saddle::{solve_saddle, SaddleSystem};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{Degrees, Forcing};
use crate::elements::{
    check_order, EnrichmentBasis, EnrichmentSpace, LagrangeSpace, PressureBasis, PressureSpace, Rt0Space,
};
use crate::mesh::{Mesh, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Full,
    Reduced,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Full => "full",
            Scheme::Reduced => "reduced",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scheme::Full),
            "reduced" => Ok(Scheme::Reduced),
            _ => Err(Error::InvalidParameter(format!("unknown scheme '{s}' (expected full or reduced)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k: usize,
    pub scheme: Scheme,
    pub nu: f64,
    /// RT0 stabilization weight, used only for `k = 1`.
    pub alpha: f64,
    /// Quadrature degree of the load vector; `None` selects `2k + 3`.
    pub rhs_degree: Option<usize>,
    /// Maximal normwise backward error accepted from the linear solver.
    pub residual_tolerance: f64,
    pub refinement_steps: usize,
}

impl SolverConfig {
    pub fn new(k: usize, scheme: Scheme, nu: f64) -> Self {
        SolverConfig {
            k,
            scheme,
            nu,
            alpha: 1.0,
            rhs_degree: None,
            residual_tolerance: 1e-10,
            refinement_steps: 3,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.k)?;
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some(d) = self.rhs_degree {
            if d > crate::quadrature::MAX_DEGREE {
                return Err(Error::QuadratureDegree(d));
            }
        }
        Ok(())
    }

    pub fn degrees(&self) -> Degrees {
        let mut d = Degrees::for_order(self.k);
        if let Some(r) = self.rhs_degree {
            d.rhs = r;
        }
        d
    }
}

/// Finite element spaces for one mesh, order and scheme.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub k: usize,
    pub lagrange: LagrangeSpace,
    pub enrichment: EnrichmentSpace,
    /// Full `P_{k-1}` pressure space (also used to represent recovered pressures).
    pub pressure: PressureSpace,
}

impl Discretization {
    /// `k = 1` uses `RT_0 ∩ H_0(div)`; `k >= 2` uses the cell bubbles of the
    /// chosen scheme.
    pub fn new(mesh: Mesh, k: usize, scheme: Scheme) -> Result<Self> {
        check_order(k)?;
        let enrichment = if k == 1 {
            EnrichmentSpace::Rt0(Rt0Space::new(&mesh))
        } else {
            let basis = match scheme {
                Scheme::Full => EnrichmentBasis::full(k)?,
                Scheme::Reduced => EnrichmentBasis::reduced(k)?,
            };
            EnrichmentSpace::bubbles(basis, mesh.num_cells())
        };
        let pressure = PressureSpace::new(PressureBasis::for_velocity_order(k)?, mesh.num_cells());
        Ok(Discretization {
            lagrange: LagrangeSpace::new(&mesh, k)?,
            enrichment,
            pressure,
            mesh,
            k,
        })
    }

    /// Lagrange dofs with interpolated boundary values.
    pub fn dirichlet_values(&self, g: &dyn Fn(Point) -> [f64; 2]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (s, &p) in self.lagrange.node_points.iter().enumerate() {
            if self.lagrange.boundary_node[s] {
                let v = g(p);
                out.push((2 * s, v[0]));
                out.push((2 * s + 1, v[1]));
            }
        }
        out
    }
}

/// Velocity value and gradient `grad[i][j] = ∂_j u_i`.
pub type VelocityValue = ([f64; 2], [[f64; 2]; 2]);

#[derive(Debug, Clone)]
pub struct Solution {
    pub disc: Arc<Discretization>,
    pub config: SolverConfig,
    /// Lagrange coefficients including boundary dofs.
    pub u_c: Vec<f64>,
    /// Enrichment coefficients (RT0 facet dofs for `k = 1`, bubbles otherwise).
    pub u_r: Vec<f64>,
    /// Full `P_{k-1}` pressure coefficients.
    pub p: Vec<f64>,
    /// Multiplier of the zero-mean constraint.
    pub multiplier: f64,
    /// Number of unknowns of the linear system that was factored.
    pub system_size: usize,
}

impl Solution {
    /// `u_h^ct` and its gradient at a reference point of `cell`.
    pub fn eval_ct(&self, cell: usize, xr: Point) -> VelocityValue {
        let d = &self.disc;
        let geom = d.mesh.geometry(cell);
        let s = d.lagrange.basis.eval(xr);
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for (i, &node) in d.lagrange.cell_nodes[cell].iter().enumerate() {
            let grad = geom.grad(s.grads[i]);
            for c in 0..2 {
                let coef = self.u_c[2 * node + c];
                v[c] += coef * s.values[i];
                g[c][0] += coef * grad[0];
                g[c][1] += coef * grad[1];
            }
        }
        (v, g)
    }

    /// `u_h^R` value and divergence at a reference point of `cell`.
    pub fn eval_r(&self, cell: usize, xr: Point) -> ([f64; 2], f64) {
        let d = &self.disc;
        let geom = d.mesh.geometry(cell);
        let vals = d.enrichment.eval_cell(&geom, cell, xr);
        let mut v = [0.0; 2];
        let mut div = 0.0;
        for (dof, (val, dv)) in d.enrichment.cell_dofs(cell).into_iter().zip(vals) {
            if let Some(dof) = dof {
                let c = self.u_r[dof];
                v[0] += c * val[0];
                v[1] += c * val[1];
                div += c * dv;
            }
        }
        (v, div)
    }

    pub fn eval_p(&self, cell: usize, xr: Point) -> f64 {
        let d = &self.disc;
        d.pressure
            .basis
            .eval(xr)
            .iter()
            .enumerate()
            .map(|(m, q)| q * self.p[d.pressure.dof(cell, m)])
            .sum()
    }

    /// Number of unknowns of the linear system that was solved.
    pub fn ndof(&self) -> usize {
        self.system_size
    }
}

/// Solves with the scheme selected in `config`.
///
/// `Scheme::Reduced` with `k = 1` condenses the RT0 unknowns, the two-dimensional
/// instance of the reduced scheme for `k < d`.
pub fn solve(config: &SolverConfig, mesh: &Mesh, f: &Forcing, dirichlet: &dyn Fn(Point) -> [f64; 2]) -> Result<Solution> {
    match (config.scheme, config.k) {
        (Scheme::Full, _) => solve_full(config, mesh, f, dirichlet),
        (Scheme::Reduced, 1) => solve_condensed_rt0(config, mesh, f, dirichlet),
        (Scheme::Reduced, _) => solve_reduced(config, mesh, f, dirichlet),
    }
}

/// Homogeneous boundary data.
pub fn no_slip(_: Point) -> [f64; 2] {
    [0.0, 0.0]
}
