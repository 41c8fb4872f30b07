use faer::{Mat, Side};

use crate::assembly::{assemble_div_gram, assemble_divergence, assemble_laplacian_energy, assemble_stabilization, assemble_stiffness};
use crate::elements::{EnrichmentSpace, LagrangeSpace, PressureBasis, PressureSpace};
use crate::mesh::Mesh;
use crate::schemes::{Discretization, Scheme};
use crate::sparse::{DirectSolver, SparseMatrix};
use crate::{Error, Result};

/// Discrete inf-sup constant and the problem dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupEstimate {
    pub beta: f64,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
}

/// Largest number of velocity unknowns accepted by the dense estimator.
pub const MAX_DENSE_DOFS: usize = 6000;

/// `β_h` of the full enriched pair on `mesh`.
///
/// The velocity norm is `|||v|||²_⋆ = ‖∇v^ct‖² + ‖h_T Δ_pw v^ct‖² + ‖div ṽ^R‖²`
/// (the RT0 stabilization with `α = 1` for `k = 1`), the pressure norm is `L²`
/// on the zero-mean subspace. `β_h` is the smallest singular value of the
/// divergence operator whitened by both Gram matrices.
pub fn estimate_infsup(k: usize, mesh: &Mesh) -> Result<InfSupEstimate> {
    let disc = Discretization::new(mesh.clone(), k, Scheme::Full)?;
    infsup_impl(mesh, &disc.lagrange, Some(&disc.enrichment), &disc.pressure)
}

/// `β_h` of the plain Scott–Vogelius pair `P_k × P_{k-1}^disc` without enrichment.
pub fn estimate_infsup_unenriched(k: usize, mesh: &Mesh) -> Result<InfSupEstimate> {
    let lagrange = LagrangeSpace::new(mesh, k)?;
    let pressure = PressureSpace::new(PressureBasis::for_velocity_order(k)?, mesh.num_cells());
    infsup_impl(mesh, &lagrange, None, &pressure)
}

struct InfSupBlocks {
    /// Velocity norm matrix on free Lagrange dofs followed by enrichment dofs.
    norm: SparseMatrix,
    /// `Bᵀ` on the same velocity ordering.
    bt: SparseMatrix,
    /// `|T|` per pressure dof (the pressure mass matrix is diagonal).
    mass: Vec<f64>,
    /// `√|T|` at constant modes, zero elsewhere.
    mean_dir: Vec<f64>,
}

fn infsup_blocks(
    mesh: &Mesh,
    lagrange: &LagrangeSpace,
    enrichment: Option<&EnrichmentSpace>,
    pressure: &PressureSpace,
) -> Result<InfSupBlocks> {
    let k = lagrange.k;
    let free: Vec<usize> = (0..lagrange.num_dofs()).filter(|&d| !lagrange.is_dirichlet_dof(d)).collect();
    let nc = free.len();
    let a = assemble_stiffness(mesh, lagrange)?.add_scaled(&assemble_laplacian_energy(mesh, lagrange)?, 1.0)?;
    let a = a.select(&free, &free);
    let all_p: Vec<usize> = (0..pressure.num_dofs()).collect();
    let bc = assemble_divergence(mesh, lagrange, pressure, 2 * k)?.select(&all_p, &free);
    let mut norm: Vec<(usize, usize, f64)> = a.triplets().collect();
    let mut bt: Vec<(usize, usize, f64)> = bc.triplets().map(|(q, j, v)| (j, q, v)).collect();
    let mut nv = nc;
    if let Some(e) = enrichment {
        let d = if e.is_rt0() {
            assemble_stabilization(mesh, e, 1.0)?
        } else {
            assemble_div_gram(mesh, e, 2 * k)?
        };
        let br = assemble_divergence(mesh, e, pressure, 2 * k)?;
        norm.extend(d.triplets().map(|(i, j, v)| (nc + i, nc + j, v)));
        bt.extend(br.triplets().map(|(q, j, v)| (nc + j, q, v)));
        nv += d.nrows;
    }
    let np = pressure.num_dofs();
    let mass: Vec<f64> = (0..np).map(|q| mesh.area[q / pressure.local_len()]).collect();
    let mut mean_dir = vec![0.0; np];
    for c in 0..pressure.num_cells {
        mean_dir[pressure.dof(c, 0)] = mesh.area[c].sqrt();
    }
    Ok(InfSupBlocks {
        norm: SparseMatrix::from_triplets(nv, nv, norm)?,
        bt: SparseMatrix::from_triplets(nv, np, bt)?,
        mass,
        mean_dir,
    })
}

fn infsup_impl(
    mesh: &Mesh,
    lagrange: &LagrangeSpace,
    enrichment: Option<&EnrichmentSpace>,
    pressure: &PressureSpace,
) -> Result<InfSupEstimate> {
    let blocks = infsup_blocks(mesh, lagrange, enrichment, pressure)?;
    let (nv, np) = (blocks.norm.nrows, blocks.mass.len());
    if nv > MAX_DENSE_DOFS {
        return Err(Error::InvalidParameter(format!(
            "{nv} velocity unknowns exceed the dense inf-sup limit {MAX_DENSE_DOFS}"
        )));
    }
    let mut norm = Mat::<f64>::zeros(nv, nv);
    for (i, j, v) in blocks.norm.triplets() {
        norm[(i, j)] += v;
    }
    let mut bt = Mat::<f64>::zeros(nv, np);
    for (i, q, v) in blocks.bt.triplets() {
        bt[(i, q)] += v;
    }
    let llt = norm
        .llt(Side::Lower)
        .map_err(|e| Error::Eigen(format!("velocity norm matrix is not positive definite: {e:?}")))?;
    // Y = L⁻¹ Bᵀ M_p^{-1/2}
    llt.L().solve_lower_triangular_in_place(bt.as_mut());
    for q in 0..np {
        let s = 1.0 / blocks.mass[q].sqrt();
        for i in 0..nv {
            bt[(i, q)] *= s;
        }
    }
    // restrict to the whitened zero-mean subspace with a Householder reflection
    // mapping the mean direction onto e_0 and dropping that column
    let w = &blocks.mean_dir;
    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut u: Vec<f64> = w.iter().map(|v| v / wn).collect();
    u[0] -= 1.0;
    let uu: f64 = u.iter().map(|v| v * v).sum();
    let mut z = bt;
    if uu > 0.0 {
        for i in 0..nv {
            let yu: f64 = (0..np).map(|q| z[(i, q)] * u[q]).sum();
            let s = 2.0 * yu / uu;
            for q in 0..np {
                z[(i, q)] -= s * u[q];
            }
        }
    }
    let g = z.subcols(1, np - 1).to_owned();
    let beta = if np - 1 > nv {
        0.0
    } else {
        let sv = g.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        sv.last().copied().unwrap_or(0.0)
    };
    Ok(InfSupEstimate {
        beta,
        velocity_dofs: nv,
        pressure_dofs: np - 1,
    })
}

/// Lanczos estimate of `β_h` for meshes beyond the dense limit.
///
/// `β_h²` is the smallest eigenvalue of `M_p^{-1/2} B N⁻¹ Bᵀ M_p^{-1/2}` on the
/// zero-mean subspace. That operator is bounded above independently of `h`,
/// so its smallest eigenvalue converges quickly under Lanczos iteration with
/// full reorthogonalization; each step costs one sparse solve with `N`.
pub fn estimate_infsup_iterative(k: usize, mesh: &Mesh, max_steps: usize) -> Result<InfSupEstimate> {
    let disc = Discretization::new(mesh.clone(), k, Scheme::Full)?;
    let blocks = infsup_blocks(mesh, &disc.lagrange, Some(&disc.enrichment), &disc.pressure)?;
    let (nv, np) = (blocks.norm.nrows, blocks.mass.len());
    let solver = DirectSolver::factor(blocks.norm.clone())?;
    let wn = blocks.mean_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = blocks.mean_dir.iter().map(|v| v / wn).collect();
    let project = |y: &mut [f64]| {
        let d: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&w).for_each(|(a, b)| *a -= d * b);
    };
    let apply = |y: &[f64]| -> Result<Vec<f64>> {
        let t: Vec<f64> = y.iter().zip(&blocks.mass).map(|(a, m)| a / m.sqrt()).collect();
        let u = blocks.bt.matvec(&t);
        let s = solver.solve(&u, 2, 1e-12)?;
        let r = blocks.bt.matvec_t(&s);
        let mut out: Vec<f64> = r.iter().zip(&blocks.mass).map(|(a, m)| a / m.sqrt()).collect();
        project(&mut out);
        Ok(out)
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut v: Vec<f64> = (0..np).map(|i| ((i as f64 + 1.0) * 0.618_034).fract() - 0.5).collect();
    project(&mut v);
    let nrm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let steps = max_steps.min(np - 1).max(1);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut lambda = f64::INFINITY;
    for j in 0..steps {
        let mut r = apply(&basis[j])?;
        let a = dot(&r, &basis[j]);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        project(&mut r);
        let b = dot(&r, &r).sqrt();
        let m = alpha.len();
        let t = nalgebra::DMatrix::from_fn(m, m, |i, l| {
            if i == l {
                alpha[i]
            } else if i + 1 == l || l + 1 == i {
                beta[i.min(l)]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let residual = (b * eig.eigenvectors[(m - 1, imin)]).abs();
        let converged = residual < 1e-10 * eig.eigenvalues.amax().max(1.0) || (lambda - lmin).abs() < 1e-13;
        lambda = lmin;
        if converged || b < 1e-14 || j + 1 == steps {
            break;
        }
        beta.push(b);
        basis.push(r.into_iter().map(|x| x / b).collect());
    }
    Ok(InfSupEstimate {
        beta: lambda.max(0.0).sqrt(),
        velocity_dofs: nv,
        pressure_dofs: np - 1,
    })
}
