use super::ManufacturedCase;
use crate::par::sum_indexed_array;
use crate::quadrature::triangle_rule;
use crate::schemes::Solution;
use crate::Result;

/// Error norms of one discrete solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    /// `‖u - (u_h^ct + u_h^R)‖`
    pub l2u: f64,
    /// `‖∇(u - u_h^ct)‖`
    pub h1u: f64,
    /// `‖u_h^R‖`
    pub l2ur: f64,
    /// `‖div(u_h^ct + u_h^R)‖`
    pub l2divu: f64,
    /// `‖p - p_h‖`
    pub l2p: f64,
    /// `‖∇u_h^ct‖`
    pub h1_ct: f64,
    /// `‖h_T⁻¹ u_h^R‖`
    pub weighted_ur: f64,
    /// `|∫ p_h|`
    pub pressure_mean: f64,
}

/// Integrates all norms cellwise with a rule of degree `2k + 4` (or `degree`).
pub fn compute_errors(solution: &Solution, case: &ManufacturedCase, degree: Option<usize>) -> Result<ErrorNorms> {
    let disc = &solution.disc;
    let rule = triangle_rule(degree.unwrap_or(2 * disc.k + 4))?;
    let mesh = &disc.mesh;
    let s = sum_indexed_array::<8, _>(mesh.num_cells(), |c| {
        let geom = mesh.geometry(c);
        let h2 = mesh.h_cell[c].powi(-2);
        let mut acc = [0.0; 8];
        for (p, w) in rule.iter() {
            let x = geom.map(p);
            let wd = w * geom.det;
            let (uc, gc) = solution.eval_ct(c, p);
            let (ur, divr) = solution.eval_r(c, p);
            let ph = solution.eval_p(c, p);
            let u = case.velocity(x);
            let gu = case.velocity_gradient(x);
            let e0 = u[0] - uc[0] - ur[0];
            let e1 = u[1] - uc[1] - ur[1];
            let mut eg = 0.0;
            let mut gg = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    eg += (gu[i][j] - gc[i][j]).powi(2);
                    gg += gc[i][j].powi(2);
                }
            }
            let r2 = ur[0] * ur[0] + ur[1] * ur[1];
            let div = gc[0][0] + gc[1][1] + divr;
            acc[0] += wd * (e0 * e0 + e1 * e1);
            acc[1] += wd * eg;
            acc[2] += wd * r2;
            acc[3] += wd * div * div;
            acc[4] += wd * (case.pressure(x) - ph).powi(2);
            acc[5] += wd * gg;
            acc[6] += wd * h2 * r2;
            acc[7] += wd * ph;
        }
        acc
    });
    Ok(ErrorNorms {
        l2u: s[0].sqrt(),
        h1u: s[1].sqrt(),
        l2ur: s[2].sqrt(),
        l2divu: s[3].sqrt(),
        l2p: s[4].sqrt(),
        h1_ct: s[5].sqrt(),
        weighted_ur: s[6].sqrt(),
        pressure_mean: s[7].abs(),
    })
}
