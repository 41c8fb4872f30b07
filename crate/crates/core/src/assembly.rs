//! Global assembly of the saddle-point blocks from per-cell contributions.
//!
//! Every routine evaluates cells in parallel (see [`crate::par`]) and merges the
//! resulting triplets by sorting, so the output does not depend on scheduling.

use std::sync::Arc;

use crate::elements::{EnrichmentSpace, LagrangeSpace, PressureSpace, ShapeValues, VectorValue};
use crate::mesh::{CellGeometry, Mesh, Point};
use crate::par::map_indexed;
use crate::quadrature::{triangle_rule, QuadratureRule};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

type VectorField = dyn Fn(Point) -> [f64; 2] + Send + Sync;
type ScalarField = dyn Fn(Point) -> f64 + Send + Sync;

/// Right-hand side data `f = body + ∇φ`.
///
/// The gradient part is tested in weak form, `(∇φ, v) = -(φ, div v)` for
/// `v ∈ H_0(div)`, which is exact for both velocity components. A forcing that
/// is a pure gradient then produces a load functional that vanishes on every
/// discretely divergence-free test function.
#[derive(Clone)]
pub struct Forcing {
    body: Arc<VectorField>,
    potential: Option<Arc<ScalarField>>,
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forcing")
            .field("potential", &self.potential.is_some())
            .finish_non_exhaustive()
    }
}

impl Forcing {
    pub fn new(body: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Forcing {
            body: Arc::new(body),
            potential: None,
        }
    }

    pub fn zero() -> Self {
        Forcing::new(|_| [0.0, 0.0])
    }

    /// Adds `∇φ` to the forcing.
    pub fn with_potential(mut self, phi: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Some(Arc::new(phi));
        self
    }

    pub fn body(&self, x: Point) -> [f64; 2] {
        (self.body)(x)
    }

    pub fn potential(&self, x: Point) -> Option<f64> {
        self.potential.as_ref().map(|p| p(x))
    }

    /// Multiplies the whole forcing by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let body = self.body.clone();
        let potential = self.potential.clone();
        Forcing {
            body: Arc::new(move |x| {
                let v = body(x);
                [s * v[0], s * v[1]]
            }),
            potential: potential.map(|p| Arc::new(move |x| s * p(x)) as Arc<ScalarField>),
        }
    }
}

/// A velocity component (`V^ct` or `V^R`) that can be tabulated per cell.
pub trait VelocityComponent: Sync {
    fn num_dofs(&self) -> usize;
    /// Global dof per local function; `None` marks functions without a dof.
    fn local_dofs(&self, cell: usize) -> Vec<Option<usize>>;
    /// `out[q][l]`: value and divergence of local function `l` at point `q`.
    fn tabulate(&self, geom: &CellGeometry, cell: usize, points: &[Point]) -> Vec<Vec<VectorValue>>;
}

impl VelocityComponent for LagrangeSpace {
    fn num_dofs(&self) -> usize {
        LagrangeSpace::num_dofs(self)
    }

    fn local_dofs(&self, cell: usize) -> Vec<Option<usize>> {
        self.cell_dofs(cell).into_iter().map(Some).collect()
    }

    fn tabulate(&self, geom: &CellGeometry, _cell: usize, points: &[Point]) -> Vec<Vec<VectorValue>> {
        points
            .iter()
            .map(|&p| {
                let s = self.basis.eval(p);
                s.values
                    .iter()
                    .zip(&s.grads)
                    .flat_map(|(&v, &g)| {
                        let g = geom.grad(g);
                        [([v, 0.0], g[0]), ([0.0, v], g[1])]
                    })
                    .collect()
            })
            .collect()
    }
}

impl VelocityComponent for EnrichmentSpace {
    fn num_dofs(&self) -> usize {
        EnrichmentSpace::num_dofs(self)
    }

    fn local_dofs(&self, cell: usize) -> Vec<Option<usize>> {
        self.cell_dofs(cell)
    }

    fn tabulate(&self, geom: &CellGeometry, cell: usize, points: &[Point]) -> Vec<Vec<VectorValue>> {
        points.iter().map(|&p| self.eval_cell(geom, cell, p)).collect()
    }
}

/// Reference tables of the Lagrange basis at the points of one rule.
fn lagrange_tables(space: &LagrangeSpace, rule: &QuadratureRule) -> Vec<ShapeValues> {
    rule.points.iter().map(|&p| space.basis.eval(p)).collect()
}

fn check_mesh(mesh: &Mesh, lagrange: &LagrangeSpace) -> Result<()> {
    if lagrange.cell_nodes.len() != mesh.num_cells() {
        return Err(Error::SpaceMismatch(format!(
            "space built on {} cells, mesh has {}",
            lagrange.cell_nodes.len(),
            mesh.num_cells()
        )));
    }
    Ok(())
}

fn collect(nrows: usize, ncols: usize, parts: Vec<Vec<(usize, usize, f64)>>) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(nrows, ncols, parts.into_iter().flatten().collect())
}

/// Vector Laplacian stiffness `(∇u, ∇v)` on the full Lagrange space, without
/// boundary elimination.
pub fn assemble_stiffness(mesh: &Mesh, lagrange: &LagrangeSpace) -> Result<SparseMatrix> {
    check_mesh(mesh, lagrange)?;
    let rule = triangle_rule(2 * (lagrange.k - 1))?;
    let tables = lagrange_tables(lagrange, &rule);
    let n = lagrange.num_dofs();
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let nodes = &lagrange.cell_nodes[c];
        let m = nodes.len();
        let mut local = vec![0.0; m * m];
        for (t, &w) in tables.iter().zip(&rule.weights) {
            let g: Vec<[f64; 2]> = t.grads.iter().map(|&g| geom.grad(g)).collect();
            let wd = w * geom.det;
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] += wd * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        let mut out = Vec::with_capacity(2 * m * m);
        for i in 0..m {
            for j in 0..m {
                for comp in 0..2 {
                    out.push((2 * nodes[i] + comp, 2 * nodes[j] + comp, local[i * m + j]));
                }
            }
        }
        out
    });
    collect(n, n, parts)
}

/// Broken Laplacian coupling `A_Rc[r, c] = ∫ Δ_pw φ_c · ψ_r`.
pub fn assemble_coupling(mesh: &Mesh, lagrange: &LagrangeSpace, enrichment: &EnrichmentSpace) -> Result<SparseMatrix> {
    check_mesh(mesh, lagrange)?;
    let (nr, nc) = (enrichment.num_dofs(), lagrange.num_dofs());
    if lagrange.k == 1 {
        return Ok(SparseMatrix::zeros(nr, nc));
    }
    let rule = triangle_rule(2 * lagrange.k)?;
    let tables = lagrange_tables(lagrange, &rule);
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let nodes = &lagrange.cell_nodes[c];
        let rdofs = enrichment.cell_dofs(c);
        let mut local = vec![[0.0; 2]; rdofs.len() * nodes.len()];
        for ((t, &w), &p) in tables.iter().zip(&rule.weights).zip(&rule.points) {
            let psi = enrichment.eval_cell(&geom, c, p);
            let wd = w * geom.det;
            for (j, h) in t.hessians.iter().enumerate() {
                let h = geom.hessian(*h);
                let lap = h[0] + h[2];
                for (r, (v, _)) in psi.iter().enumerate() {
                    let e = &mut local[r * nodes.len() + j];
                    e[0] += wd * lap * v[0];
                    e[1] += wd * lap * v[1];
                }
            }
        }
        let mut out = Vec::new();
        for (r, dof) in rdofs.iter().enumerate() {
            let Some(row) = dof else { continue };
            for (j, &s) in nodes.iter().enumerate() {
                let e = local[r * nodes.len() + j];
                out.push((*row, 2 * s, e[0]));
                out.push((*row, 2 * s + 1, e[1]));
            }
        }
        out
    });
    collect(nr, nc, parts)
}

/// Gram matrix `∫ div ψ_r div ψ_s` of an enrichment space.
pub fn assemble_div_gram(mesh: &Mesh, enrichment: &EnrichmentSpace, degree: usize) -> Result<SparseMatrix> {
    let rule = triangle_rule(degree)?;
    let n = enrichment.num_dofs();
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let dofs = enrichment.cell_dofs(c);
        let tab = enrichment.tabulate(&geom, c, &rule.points);
        let mut out = Vec::new();
        for (a, da) in dofs.iter().enumerate() {
            let Some(i) = da else { continue };
            for (b, db) in dofs.iter().enumerate() {
                let Some(j) = db else { continue };
                let v: f64 = tab
                    .iter()
                    .zip(&rule.weights)
                    .map(|(q, w)| w * geom.det * q[a].1 * q[b].1)
                    .sum();
                out.push((*i, *j, v));
            }
        }
        out
    });
    collect(n, n, parts)
}

/// Diagonal RT0 stabilization `α Σ_F dof_F(u) dof_F(v) (div ψ_F, div ψ_F)`.
pub fn assemble_stabilization(mesh: &Mesh, rt0: &EnrichmentSpace, alpha: f64) -> Result<SparseMatrix> {
    if !rt0.is_rt0() {
        return Err(Error::InvalidParameter(
            "stabilization is only defined for the RT0 enrichment (k = 1)".into(),
        ));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    // only the diagonal of the divergence Gram matrix enters the bilinear form
    let gram = assemble_div_gram(mesh, rt0, 0)?;
    let diag = (0..gram.nrows).map(|i| (i, i, alpha * gram.get(i, i))).collect();
    SparseMatrix::from_triplets(gram.nrows, gram.ncols, diag)
}

/// Divergence block `B[q, v] = -∫ div v · q` for any velocity component.
pub fn assemble_divergence(
    mesh: &Mesh,
    velocity: &dyn VelocityComponent,
    pressure: &PressureSpace,
    degree: usize,
) -> Result<SparseMatrix> {
    if pressure.num_cells != mesh.num_cells() {
        return Err(Error::SpaceMismatch("pressure space built on another mesh".into()));
    }
    let rule = triangle_rule(degree)?;
    let qtab: Vec<Vec<f64>> = rule.points.iter().map(|&p| pressure.basis.eval(p)).collect();
    let nq = pressure.local_len();
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let dofs = velocity.local_dofs(c);
        let tab = velocity.tabulate(&geom, c, &rule.points);
        let mut local = vec![0.0; nq * dofs.len()];
        for ((vals, qs), &w) in tab.iter().zip(&qtab).zip(&rule.weights) {
            let wd = w * geom.det;
            for (m, q) in qs.iter().enumerate() {
                for (l, (_, div)) in vals.iter().enumerate() {
                    local[m * dofs.len() + l] -= wd * div * q;
                }
            }
        }
        let mut out = Vec::new();
        for m in 0..nq {
            for (l, d) in dofs.iter().enumerate() {
                if let Some(col) = d {
                    out.push((pressure.dof(c, m), *col, local[m * dofs.len() + l]));
                }
            }
        }
        out
    });
    collect(pressure.num_dofs(), velocity.num_dofs(), parts)
}

/// Load vector `(f, v)` for one velocity component.
pub fn assemble_load(mesh: &Mesh, velocity: &dyn VelocityComponent, f: &Forcing, degree: usize) -> Result<Vec<f64>> {
    let rule = triangle_rule(degree)?;
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let dofs = velocity.local_dofs(c);
        let tab = velocity.tabulate(&geom, c, &rule.points);
        let mut local = vec![0.0; dofs.len()];
        for ((vals, &p), &w) in tab.iter().zip(&rule.points).zip(&rule.weights) {
            let x = geom.map(p);
            let fb = f.body(x);
            let phi = f.potential(x).unwrap_or(0.0);
            let wd = w * geom.det;
            for (l, (v, div)) in vals.iter().enumerate() {
                local[l] += wd * (fb[0] * v[0] + fb[1] * v[1] - phi * div);
            }
        }
        dofs.into_iter().zip(local).filter_map(|(d, v)| d.map(|d| (d, v))).collect::<Vec<_>>()
    });
    let mut out = vec![0.0; velocity.num_dofs()];
    for (d, v) in parts.into_iter().flatten() {
        out[d] += v;
    }
    Ok(out)
}

/// `(F_c, F_R)`.
pub fn assemble_rhs(
    mesh: &Mesh,
    f: &Forcing,
    lagrange: &LagrangeSpace,
    enrichment: &EnrichmentSpace,
    degree: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_mesh(mesh, lagrange)?;
    Ok((assemble_load(mesh, lagrange, f, degree)?, assemble_load(mesh, enrichment, f, degree)?))
}

/// `∫_Ω q` for every pressure dof; only constant modes are nonzero.
pub fn pressure_mean_row(mesh: &Mesh, pressure: &PressureSpace) -> Vec<f64> {
    let mut row = vec![0.0; pressure.num_dofs()];
    for c in 0..pressure.num_cells {
        row[pressure.dof(c, 0)] = mesh.area[c];
    }
    row
}

/// Weighted broken Laplacian energy `Σ_T h_T² (Δφ_i, Δφ_j)_T`.
pub fn assemble_laplacian_energy(mesh: &Mesh, lagrange: &LagrangeSpace) -> Result<SparseMatrix> {
    check_mesh(mesh, lagrange)?;
    let n = lagrange.num_dofs();
    if lagrange.k == 1 {
        return Ok(SparseMatrix::zeros(n, n));
    }
    let rule = triangle_rule(2 * (lagrange.k - 2))?;
    let tables = lagrange_tables(lagrange, &rule);
    let parts = map_indexed(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let nodes = &lagrange.cell_nodes[c];
        let m = nodes.len();
        let h2 = mesh.h_cell[c].powi(2);
        let mut local = vec![0.0; m * m];
        for (t, &w) in tables.iter().zip(&rule.weights) {
            let lap: Vec<f64> = t.hessians.iter().map(|&h| {
                let h = geom.hessian(h);
                h[0] + h[2]
            }).collect();
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] += w * geom.det * h2 * lap[i] * lap[j];
                }
            }
        }
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                for comp in 0..2 {
                    out.push((2 * nodes[i] + comp, 2 * nodes[j] + comp, local[i * m + j]));
                }
            }
        }
        out
    });
    collect(n, n, parts)
}

/// Quadrature degrees used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degrees {
    pub operator: usize,
    pub rhs: usize,
}

impl Degrees {
    pub fn for_order(k: usize) -> Self {
        Degrees {
            operator: 2 * k,
            rhs: 2 * k + 3,
        }
    }
}

/// All blocks of the enriched saddle-point system.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a_cc: SparseMatrix,
    pub a_rc: SparseMatrix,
    /// RT0 stabilization; `None` for bubble enrichments.
    pub a_rr: Option<SparseMatrix>,
    pub b_c: SparseMatrix,
    pub b_r: SparseMatrix,
    pub f_c: Vec<f64>,
    pub f_r: Vec<f64>,
    pub mean_row: Vec<f64>,
    pub nu: f64,
    pub alpha: f64,
}

impl BlockSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        mesh: &Mesh,
        lagrange: &LagrangeSpace,
        enrichment: &EnrichmentSpace,
        pressure: &PressureSpace,
        f: &Forcing,
        nu: f64,
        alpha: f64,
        degrees: Degrees,
    ) -> Result<Self> {
        let a_rr = if enrichment.is_rt0() {
            Some(assemble_stabilization(mesh, enrichment, alpha)?)
        } else {
            None
        };
        let (f_c, f_r) = assemble_rhs(mesh, f, lagrange, enrichment, degrees.rhs)?;
        Ok(BlockSystem {
            a_cc: assemble_stiffness(mesh, lagrange)?,
            a_rc: assemble_coupling(mesh, lagrange, enrichment)?,
            a_rr,
            b_c: assemble_divergence(mesh, lagrange, pressure, degrees.operator)?,
            b_r: assemble_divergence(mesh, enrichment, pressure, degrees.operator)?,
            f_c,
            f_r,
            mean_row: pressure_mean_row(mesh, pressure),
            nu,
            alpha,
        })
    }
}
