use std::sync::Arc;

use super::saddle::{solve_saddle, SaddleSystem};
use super::{Discretization, Scheme, Solution, SolverConfig};
use crate::assembly::{BlockSystem, Forcing};
use crate::mesh::{Mesh, Point};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

pub(super) fn assemble_blocks(disc: &Discretization, config: &SolverConfig, f: &Forcing) -> Result<BlockSystem> {
    BlockSystem::assemble(
        &disc.mesh,
        &disc.lagrange,
        &disc.enrichment,
        &disc.pressure,
        f,
        config.nu,
        config.alpha,
        config.degrees(),
    )
}

/// Velocity block `ν [[A_cc, A_Rcᵀ], [-A_Rc, A_RR]]` and `[B_c, B_R]`.
fn full_blocks(s: &BlockSystem) -> Result<(SparseMatrix, SparseMatrix)> {
    let (nc, nr) = (s.a_cc.nrows, s.a_rc.nrows);
    let nu = s.nu;
    let mut a: Vec<(usize, usize, f64)> = s.a_cc.triplets().map(|(i, j, v)| (i, j, nu * v)).collect();
    for (r, c, v) in s.a_rc.triplets() {
        a.push((c, nc + r, nu * v));
        a.push((nc + r, c, -nu * v));
    }
    if let Some(arr) = &s.a_rr {
        a.extend(arr.triplets().map(|(i, j, v)| (nc + i, nc + j, nu * v)));
    }
    let mut b: Vec<(usize, usize, f64)> = s.b_c.triplets().collect();
    b.extend(s.b_r.triplets().map(|(i, j, v)| (i, nc + j, v)));
    Ok((
        SparseMatrix::from_triplets(nc + nr, nc + nr, a)?,
        SparseMatrix::from_triplets(s.b_c.nrows, nc + nr, b)?,
    ))
}

/// Solves the full enriched scheme `ν a_h(u_h, v_h) + b(v_h, p_h) = (f, v_h)`,
/// `b(u_h, q_h) = 0` with the zero-mean constraint as an extra multiplier.
pub fn solve_full(
    config: &SolverConfig,
    mesh: &Mesh,
    f: &Forcing,
    dirichlet: &dyn Fn(Point) -> [f64; 2],
) -> Result<Solution> {
    config.validate()?;
    let disc = Discretization::new(mesh.clone(), config.k, Scheme::Full)?;
    let blocks = assemble_blocks(&disc, config, f)?;
    let (a, b) = full_blocks(&blocks)?;
    let f_v: Vec<f64> = blocks.f_c.iter().chain(&blocks.f_r).copied().collect();
    let sys = SaddleSystem {
        a: &a,
        b: &b,
        c: None,
        f_v: &f_v,
        f_p: None,
        mean_row: &blocks.mean_row,
    };
    let bc = disc.dirichlet_values(dirichlet);
    let sol = solve_saddle(&sys, &bc, config.residual_tolerance, config.refinement_steps)?;
    let nc = blocks.a_cc.nrows;
    Ok(Solution {
        u_c: sol.v[..nc].to_vec(),
        u_r: sol.v[nc..].to_vec(),
        p: sol.p,
        multiplier: sol.multiplier,
        system_size: sol.size,
        config: config.clone(),
        disc: Arc::new(disc),
    })
}

/// The `k = 1` system after eliminating the RT0 unknowns.
///
/// With `D = ν A_RR` diagonal, `U_R = D⁻¹ (F_R - B_Rᵀ P)` and the remaining
/// system is `[[ν A_cc, B_cᵀ], [B_c, -B_R D⁻¹ B_Rᵀ]]` with pressure load
/// `-B_R D⁻¹ F_R`.
#[derive(Debug, Clone)]
pub struct CondensedRt0 {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub c: SparseMatrix,
    pub f_v: Vec<f64>,
    pub f_p: Vec<f64>,
    pub mean_row: Vec<f64>,
    d_inv: Vec<f64>,
    b_r: SparseMatrix,
    f_r: Vec<f64>,
}

impl CondensedRt0 {
    /// Back-substitution `U_R = D⁻¹ (F_R - B_Rᵀ P)`.
    pub fn recover_enrichment(&self, p: &[f64]) -> Vec<f64> {
        let bt = self.b_r.matvec_t(p);
        self.f_r.iter().zip(bt).zip(&self.d_inv).map(|((f, b), d)| d * (f - b)).collect()
    }
}

pub fn condense_rt0(s: &BlockSystem) -> Result<CondensedRt0> {
    let Some(arr) = &s.a_rr else {
        return Err(Error::InvalidParameter("RT0 condensation needs the k = 1 stabilized system".into()));
    };
    if s.a_rc.nnz() != 0 {
        return Err(Error::InvalidParameter("RT0 condensation needs a vanishing coupling block".into()));
    }
    let nr = arr.nrows;
    let mut d_inv = Vec::with_capacity(nr);
    for i in 0..nr {
        let d = s.nu * arr.get(i, i);
        if !(d > 0.0) {
            return Err(Error::SingularSystem { pivot: i });
        }
        d_inv.push(1.0 / d);
    }
    let scaled: Vec<(usize, usize, f64)> = s.b_r.triplets().map(|(i, j, v)| (i, j, v * d_inv[j])).collect();
    let b_r_dinv = SparseMatrix::from_triplets(s.b_r.nrows, nr, scaled)?;
    let c = b_r_dinv.matmul(&s.b_r.transpose())?;
    let f_p = b_r_dinv.matvec(&s.f_r).into_iter().map(|v| -v).collect();
    Ok(CondensedRt0 {
        a: s.a_cc.scale(s.nu),
        b: s.b_c.clone(),
        c,
        f_v: s.f_c.clone(),
        f_p,
        mean_row: s.mean_row.clone(),
        d_inv,
        b_r: s.b_r.clone(),
        f_r: s.f_r.clone(),
    })
}

/// `k = 1` solve through [`condense_rt0`] and back-substitution.
pub fn solve_condensed_rt0(
    config: &SolverConfig,
    mesh: &Mesh,
    f: &Forcing,
    dirichlet: &dyn Fn(Point) -> [f64; 2],
) -> Result<Solution> {
    config.validate()?;
    if config.k != 1 {
        return Err(Error::InvalidParameter("RT0 condensation applies to k = 1 only".into()));
    }
    let disc = Discretization::new(mesh.clone(), 1, Scheme::Full)?;
    let blocks = assemble_blocks(&disc, config, f)?;
    let cond = condense_rt0(&blocks)?;
    let sys = SaddleSystem {
        a: &cond.a,
        b: &cond.b,
        c: Some(&cond.c),
        f_v: &cond.f_v,
        f_p: Some(&cond.f_p),
        mean_row: &cond.mean_row,
    };
    let bc = disc.dirichlet_values(dirichlet);
    let sol = solve_saddle(&sys, &bc, config.residual_tolerance, config.refinement_steps)?;
    Ok(Solution {
        u_r: cond.recover_enrichment(&sol.p),
        u_c: sol.v,
        p: sol.p,
        multiplier: sol.multiplier,
        system_size: sol.size,
        config: config.clone(),
        disc: Arc::new(disc),
    })
}
