use super::Monomials;
use crate::mesh::Point;
use crate::quadrature::triangle_rule;
use crate::{Error, Result};

/// Orthogonal basis of `P_order` on the reference triangle.
///
/// Monomials are Gram–Schmidt orthogonalized against the reference mass matrix
/// and scaled so that `∫_T̂ q_m q_n = δ_mn / 2`. The first function is the
/// constant `1`. Because the affine map scales every mass entry by the same
/// Jacobian, the basis stays orthogonal on every physical cell with
/// `∫_T q_m q_n = |T| δ_mn`, and the constant mode is split off cell by cell.
#[derive(Debug, Clone)]
pub struct PressureBasis {
    pub order: usize,
    monomials: Monomials,
    /// `coeffs[i][m]`: coefficient of monomial `m` in basis function `i`.
    coeffs: Vec<Vec<f64>>,
}

impl PressureBasis {
    pub fn new(order: usize) -> Result<Self> {
        if order > 3 {
            return Err(Error::UnsupportedOrder(order + 1));
        }
        let monomials = Monomials::new(order);
        let n = monomials.len();
        let rule = triangle_rule(2 * order)?;
        let table: Vec<Vec<f64>> = rule.points.iter().map(|&p| monomials.values(p)).collect();
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            rule.weights
                .iter()
                .zip(&table)
                .map(|(w, mv)| {
                    let va: f64 = a.iter().zip(mv).map(|(c, m)| c * m).sum();
                    let vb: f64 = b.iter().zip(mv).map(|(c, m)| c * m).sum();
                    w * va * vb
                })
                .sum()
        };
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for q in &coeffs {
                    let proj = inner(&c, q) / inner(q, q);
                    for (ci, qi) in c.iter_mut().zip(q) {
                        *ci -= proj * qi;
                    }
                }
            }
            // keep the constant mode exactly 1
            let scale = if i == 0 { 1.0 } else { (0.5 / inner(&c, &c)).sqrt() };
            c.iter_mut().for_each(|v| *v *= scale);
            coeffs.push(c);
        }
        Ok(PressureBasis {
            order,
            monomials,
            coeffs,
        })
    }

    /// Basis of `P_{k-1}` for velocity order `k`.
    pub fn for_velocity_order(k: usize) -> Result<Self> {
        super::check_order(k)?;
        PressureBasis::new(k - 1)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, xr: Point) -> Vec<f64> {
        let mv = self.monomials.values(xr);
        self.coeffs
            .iter()
            .map(|c| c.iter().zip(&mv).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Discontinuous `P_{k-1}` pressure space; dof `(cell, m)` is `cell * len + m`.
#[derive(Debug, Clone)]
pub struct PressureSpace {
    pub basis: PressureBasis,
    pub num_cells: usize,
}

impl PressureSpace {
    pub fn new(basis: PressureBasis, num_cells: usize) -> Self {
        PressureSpace { basis, num_cells }
    }

    pub fn local_len(&self) -> usize {
        self.basis.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.basis.len() * self.num_cells
    }

    pub fn dof(&self, cell: usize, mode: usize) -> usize {
        cell * self.basis.len() + mode
    }

    /// Dofs of the cellwise constant mode.
    pub fn constant_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_cells).map(|c| self.dof(c, 0))
    }
}
