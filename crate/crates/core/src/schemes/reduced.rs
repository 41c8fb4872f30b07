use std::sync::Arc;

use nalgebra::DMatrix;

use super::full::assemble_blocks;
use super::saddle::{solve_saddle, SaddleSystem};
use super::{Discretization, Scheme, Solution, SolverConfig};
use crate::assembly::{assemble_coupling, assemble_divergence, assemble_load, Forcing};
use crate::elements::{EnrichmentBasis, EnrichmentSpace, LagrangeSpace, PressureSpace};
use crate::mesh::{CellGeometry, Mesh, Point};
use crate::par::map_indexed;
use crate::quadrature::triangle_rule;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Representation matrix of the operator mapping a Lagrange velocity to the
/// bubble field whose divergence is the cellwise mean-free part of its
/// divergence. Rows are bubble dofs, columns all Lagrange dofs.
#[derive(Debug, Clone)]
pub struct RMatrix {
    pub matrix: SparseMatrix,
}

fn bubble_basis(enrichment: &EnrichmentSpace) -> Result<&EnrichmentBasis> {
    match enrichment {
        EnrichmentSpace::Bubbles { basis, .. } => Ok(basis),
        EnrichmentSpace::Rt0(_) => Err(Error::InvalidParameter(
            "the reduced scheme needs cell bubbles (k >= 2)".into(),
        )),
    }
}

/// `Bref[n, l] = ∫_T̂ q̂_n div ψ̂_l` on the reference cell.
fn reference_divergence_moments(basis: &EnrichmentBasis, pressure: &PressureSpace) -> DMatrix<f64> {
    let geom = CellGeometry::reference();
    let rule = triangle_rule(2 * basis.degree()).expect("degree within range");
    let mut b = DMatrix::zeros(pressure.local_len(), basis.len());
    for (p, w) in rule.iter() {
        let q = pressure.basis.eval(p);
        for (l, (_, div)) in basis.eval(&geom, p).into_iter().enumerate() {
            for (n, qn) in q.iter().enumerate() {
                b[(n, l)] += w * qn * div;
            }
        }
    }
    b
}

/// Builds `R` from the assembled Lagrange divergence block.
///
/// On a cell, the bubble coefficients solve `A_T x = b_T` with the
/// divergence Gram matrix `A_T = A_ref / J`. Writing `div v_j` in the
/// orthogonal pressure basis gives coefficients `-B_c / |T|`, hence
/// `x = J A_ref⁻¹ Brefᵀ (-B_c / |T|) = -2 A_ref⁻¹ Brefᵀ B_c` with a single
/// reference solve shared by all cells.
fn r_from_divergence(b_c: &SparseMatrix, basis: &EnrichmentBasis, pressure: &PressureSpace) -> Result<RMatrix> {
    let a_ref = basis.reference_gram();
    let bref = reference_divergence_moments(basis, pressure);
    let chol = a_ref
        .cholesky()
        .ok_or_else(|| Error::Solver("reference bubble Gram matrix is not positive definite".into()))?;
    let x_ref = chol.solve(&bref.transpose()) * -2.0;
    let (nb, np) = (basis.len(), pressure.local_len());
    let parts = map_indexed(pressure.num_cells, |c| {
        // columns touched by the cell's pressure rows, with the product
        // X_ref * B_c accumulated per column
        let mut cols: Vec<usize> = Vec::new();
        let mut block: Vec<f64> = Vec::new();
        for n in 0..np {
            for (j, v) in b_c.row(pressure.dof(c, n)) {
                let slot = match cols.iter().position(|&x| x == j) {
                    Some(s) => s,
                    None => {
                        cols.push(j);
                        block.extend(std::iter::repeat_n(0.0, nb));
                        cols.len() - 1
                    }
                };
                for l in 0..nb {
                    block[slot * nb + l] += x_ref[(l, n)] * v;
                }
            }
        }
        let mut out = Vec::with_capacity(block.len());
        for (slot, &j) in cols.iter().enumerate() {
            for l in 0..nb {
                out.push((c * nb + l, j, block[slot * nb + l]));
            }
        }
        out
    });
    let matrix = SparseMatrix::from_triplets(nb * pressure.num_cells, b_c.ncols, parts.into_iter().flatten().collect())?;
    Ok(RMatrix { matrix })
}

pub fn build_r_matrix(
    mesh: &Mesh,
    lagrange: &LagrangeSpace,
    enrichment: &EnrichmentSpace,
    pressure: &PressureSpace,
) -> Result<RMatrix> {
    let basis = bubble_basis(enrichment)?;
    let b_c = assemble_divergence(mesh, lagrange, pressure, 2 * lagrange.k)?;
    r_from_divergence(&b_c, basis, pressure)
}

/// Solves the condensed `P_k × P_0` scheme with stiffness
/// `A_cc - A_Rcᵀ R + Rᵀ A_Rc` and load `F_c - Rᵀ F_R`, then recovers
/// `U_R = -R U_c` and the mean-free part of the pressure.
pub fn solve_reduced(
    config: &SolverConfig,
    mesh: &Mesh,
    f: &Forcing,
    dirichlet: &dyn Fn(Point) -> [f64; 2],
) -> Result<Solution> {
    config.validate()?;
    if config.k < 2 {
        return Err(Error::InvalidParameter(
            "the P_k x P_0 reduction needs k >= 2; use RT0 condensation for k = 1".into(),
        ));
    }
    let disc = Discretization::new(mesh.clone(), config.k, Scheme::Reduced)?;
    let blocks = assemble_blocks(&disc, config, f)?;
    let basis = bubble_basis(&disc.enrichment)?;
    let r = r_from_divergence(&blocks.b_c, basis, &disc.pressure)?.matrix;

    let rt = r.transpose();
    let k_mat = blocks
        .a_cc
        .add_scaled(&blocks.a_rc.transpose().matmul(&r)?, -1.0)?
        .add_scaled(&rt.matmul(&blocks.a_rc)?, 1.0)?
        .scale(config.nu);
    let rtf = rt.matvec(&blocks.f_r);
    let f_v: Vec<f64> = blocks.f_c.iter().zip(&rtf).map(|(a, b)| a - b).collect();
    let const_rows: Vec<usize> = disc.pressure.constant_dofs().collect();
    let all_cols: Vec<usize> = (0..blocks.b_c.ncols).collect();
    let b0 = blocks.b_c.select(&const_rows, &all_cols);
    let mean0: Vec<f64> = const_rows.iter().map(|&d| blocks.mean_row[d]).collect();
    let sys = SaddleSystem {
        a: &k_mat,
        b: &b0,
        c: None,
        f_v: &f_v,
        f_p: None,
        mean_row: &mean0,
    };
    let bc = disc.dirichlet_values(dirichlet);
    let sol = solve_saddle(&sys, &bc, config.residual_tolerance, config.refinement_steps)?;

    let u_r: Vec<f64> = r.matvec(&sol.v).into_iter().map(|v| -v).collect();
    let mut p = vec![0.0; disc.pressure.num_dofs()];
    for (c, &d) in const_rows.iter().enumerate() {
        p[d] = sol.p[c];
    }
    let mut solution = Solution {
        u_c: sol.v,
        u_r,
        p,
        multiplier: sol.multiplier,
        system_size: sol.size,
        config: config.clone(),
        disc: Arc::new(disc),
    };
    fill_fine_pressure(&mut solution, &blocks.f_r, &blocks.a_rc)?;
    Ok(solution)
}

/// Cellwise recovery of the mean-free pressure part from
/// `(p̃_h, div ψ_j)_T = -(f, ψ_j)_T - ν (Δ_pw u_h^ct, ψ_j)_T`.
fn fill_fine_pressure(sol: &mut Solution, f_r: &[f64], a_rc: &SparseMatrix) -> Result<()> {
    let disc = sol.disc.clone();
    let basis = bubble_basis(&disc.enrichment)?;
    let pressure = &disc.pressure;
    let (nb, np) = (basis.len(), pressure.local_len());
    if nb != np - 1 {
        return Err(Error::SpaceMismatch(format!(
            "{nb} bubbles cannot represent {} mean-free pressure modes",
            np - 1
        )));
    }
    let bref = reference_divergence_moments(basis, pressure);
    // S[j, n - 1] = ∫_T q_n div ψ_j, identical on every cell
    let s = DMatrix::from_fn(nb, nb, |j, n| bref[(n + 1, j)]);
    let lu = s.lu();
    let arc_u = a_rc.matvec(&sol.u_c);
    let nu = sol.config.nu;
    let fine = map_indexed(pressure.num_cells, |c| {
        let rhs = nalgebra::DVector::from_fn(nb, |j, _| {
            let d = c * nb + j;
            -f_r[d] - nu * arc_u[d]
        });
        lu.solve(&rhs)
    });
    for (c, x) in fine.into_iter().enumerate() {
        let x = x.ok_or_else(|| Error::Solver("singular bubble/pressure moment matrix".into()))?;
        for n in 1..np {
            sol.p[pressure.dof(c, n)] = x[n - 1];
        }
    }
    Ok(())
}

/// Recomputes the mean-free pressure part of a reduced-scheme solution.
pub fn recover_fine_pressure(solution: &Solution, f: &Forcing) -> Result<Solution> {
    let disc = &solution.disc;
    let f_r = assemble_load(&disc.mesh, &disc.enrichment, f, solution.config.degrees().rhs)?;
    let a_rc = assemble_coupling(&disc.mesh, &disc.lagrange, &disc.enrichment)?;
    let mut out = solution.clone();
    fill_fine_pressure(&mut out, &f_r, &a_rc)?;
    Ok(out)
}
