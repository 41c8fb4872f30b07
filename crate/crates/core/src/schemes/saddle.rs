use crate::sparse::{DirectSolver, SparseMatrix};
use crate::{Error, Result};

/// Generic saddle-point system
///
/// ```text
/// [ A   Bᵀ   0 ] [v]   [f_v]
/// [ B  -C   mᵀ ] [p] = [f_p]
/// [ 0   m    0 ] [μ]   [ 0 ]
/// ```
///
/// where `A` may be nonsymmetric and some velocity unknowns carry Dirichlet values.
#[derive(Debug, Clone)]
pub struct SaddleSystem<'a> {
    pub a: &'a SparseMatrix,
    pub b: &'a SparseMatrix,
    pub c: Option<&'a SparseMatrix>,
    pub f_v: &'a [f64],
    pub f_p: Option<&'a [f64]>,
    pub mean_row: &'a [f64],
}

/// Result of [`solve_saddle`]: velocity with boundary values inserted,
/// pressure, multiplier and the size of the factored system.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub multiplier: f64,
    pub size: usize,
}

/// Eliminates the Dirichlet velocity unknowns (symmetrically: their rows are
/// dropped and their columns moved to the right-hand side), factors the rest
/// and solves.
pub fn solve_saddle(
    sys: &SaddleSystem,
    dirichlet: &[(usize, f64)],
    tolerance: f64,
    refinement_steps: usize,
) -> Result<SaddleSolution> {
    let nv = sys.a.nrows;
    let np = sys.b.nrows;
    if sys.a.ncols != nv || sys.b.ncols != nv || sys.f_v.len() != nv || sys.mean_row.len() != np {
        return Err(Error::SpaceMismatch("inconsistent saddle-point block sizes".into()));
    }
    let mut fixed = vec![None; nv];
    for &(d, g) in dirichlet {
        fixed[d] = Some(g);
    }
    let mut index = vec![usize::MAX; nv];
    let mut nfree = 0;
    for i in 0..nv {
        if fixed[i].is_none() {
            index[i] = nfree;
            nfree += 1;
        }
    }
    // The zero-mean multiplier couples every constant pressure mode, and such a
    // dense row defeats the fill-reducing ordering of the sparse LU. The
    // bordered system is therefore solved through a sparse one in which the
    // multiplier pins the first constant mode; the exact constrained solution
    // follows from a rank-one correction and a constant pressure shift.
    let pin = sys
        .mean_row
        .iter()
        .position(|&m| m != 0.0)
        .ok_or_else(|| Error::SpaceMismatch("mean row has no constant pressure mode".into()))?;
    let n = nfree + np + 1;
    let mut entries = Vec::with_capacity(sys.a.nnz() + 2 * sys.b.nnz() + 2);
    let mut rhs = vec![0.0; n];
    for i in 0..nv {
        let ii = index[i];
        if ii == usize::MAX {
            continue;
        }
        rhs[ii] += sys.f_v[i];
        for (j, v) in sys.a.row(i) {
            match fixed[j] {
                Some(g) => rhs[ii] -= v * g,
                None => entries.push((ii, index[j], v)),
            }
        }
    }
    for q in 0..np {
        let row = nfree + q;
        if let Some(fp) = sys.f_p {
            rhs[row] += fp[q];
        }
        for (j, v) in sys.b.row(q) {
            match fixed[j] {
                Some(g) => rhs[row] -= v * g,
                None => {
                    entries.push((row, index[j], v));
                    entries.push((index[j], row, v));
                }
            }
        }
        if let Some(c) = sys.c {
            for (q2, v) in c.row(q) {
                entries.push((row, nfree + q2, -v));
            }
        }
    }
    entries.push((nfree + pin, n - 1, 1.0));
    entries.push((n - 1, nfree + pin, 1.0));
    let solver = DirectSolver::factor(SparseMatrix::from_triplets(n, n, entries)?)?;
    let mut z = solver.solve(&rhs, refinement_steps, tolerance)?;

    // ι: indicator of the constant pressure modes, spanning the kernel of the
    // unconstrained operator from both sides
    let iota: Vec<f64> = sys.mean_row.iter().map(|&m| if m != 0.0 { 1.0 } else { 0.0 }).collect();
    let area: f64 = sys.mean_row.iter().sum();
    let flux: f64 = (0..np).map(|q| iota[q] * rhs[nfree + q]).sum();
    let multiplier = flux / area;
    if flux != 0.0 {
        // K w = e_pin - m / |Ω| moves the inconsistency from the pinned cell to
        // the multiplier
        let mut r2 = vec![0.0; n];
        for q in 0..np {
            r2[nfree + q] = -sys.mean_row[q] / area;
        }
        r2[nfree + pin] += 1.0;
        let w = solver.solve(&r2, refinement_steps, tolerance)?;
        for (zi, wi) in z.iter_mut().zip(&w) {
            *zi += flux * wi;
        }
    }
    let mean: f64 = (0..np).map(|q| sys.mean_row[q] * z[nfree + q]).sum();
    for q in 0..np {
        z[nfree + q] -= iota[q] * mean / area;
    }
    let v = (0..nv)
        .map(|i| fixed[i].unwrap_or_else(|| z[index[i]]))
        .collect();
    Ok(SaddleSolution {
        v,
        p: z[nfree..nfree + np].to_vec(),
        multiplier,
        size: n,
    })
}
