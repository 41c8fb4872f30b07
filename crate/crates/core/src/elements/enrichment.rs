use super::{check_order, VectorValue};
use crate::mesh::{barycentric, CellGeometry, Point};
use crate::quadrature::triangle_rule;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Polynomial in the barycentric coordinates: `Σ c · λ1^a λ2^b λ3^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaryPoly {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl BaryPoly {
    pub fn new(terms: Vec<(f64, [u32; 3])>) -> Self {
        BaryPoly { terms }
    }

    fn unit(j: usize) -> [u32; 3] {
        let mut e = [0; 3];
        e[j] = 1;
        e
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    /// Value and partial derivatives with respect to each `λ_i`.
    pub fn eval(&self, lam: [f64; 3]) -> (f64, [f64; 3]) {
        let pw = |x: f64, e: u32| if e == 0 { 1.0 } else { x.powi(e as i32) };
        let mut v = 0.0;
        let mut d = [0.0; 3];
        for &(c, e) in &self.terms {
            let p = [pw(lam[0], e[0]), pw(lam[1], e[1]), pw(lam[2], e[2])];
            v += c * p[0] * p[1] * p[2];
            for i in 0..3 {
                if e[i] > 0 {
                    let mut q = p;
                    q[i] = e[i] as f64 * pw(lam[i], e[i] - 1);
                    d[i] += c * q[0] * q[1] * q[2];
                }
            }
        }
        (v, d)
    }
}

/// Vector bubble `Σ_t g_t(λ) ψ0_{m_t}` with `ψ0_m = (x - P_m) / (2|T|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble {
    pub terms: Vec<(BaryPoly, usize)>,
}

impl Bubble {
    /// `g(λ) λ_j ψ0_j` for a polynomial `g` given by `(coefficient, power of λ_j)`.
    fn radial(j: usize, powers: &[(f64, u32)]) -> Self {
        let terms = powers
            .iter()
            .map(|&(c, p)| {
                let mut e = BaryPoly::unit(j);
                e[j] += p;
                (c, e)
            })
            .collect();
        Bubble {
            terms: vec![(BaryPoly::new(terms), j)],
        }
    }

    /// Lowest-order interior RT1 bubble `λ_j ψ0_j`.
    pub fn rt1(j: usize) -> Self {
        Bubble::radial(j, &[(1.0, 0)])
    }

    /// `(5λ_j - 2) λ_j ψ0_j`.
    pub fn rt2(j: usize) -> Self {
        Bubble::radial(j, &[(5.0, 1), (-2.0, 0)])
    }

    /// `(1/7)(7λ_j² - 6λ_j + 1) λ_j ψ0_j` for `j < 3`; `j = 3` is the extra
    /// cubic that is not of radial form.
    pub fn rt3(j: usize) -> Self {
        if j < 3 {
            return Bubble::radial(j, &[(1.0, 2), (-6.0 / 7.0, 1), (1.0 / 7.0, 0)]);
        }
        let mut b = Bubble {
            terms: vec![(BaryPoly::new(vec![(-2.0, [0, 2, 1])]), 1)],
        };
        b.add(&Bubble::rt1(0), 2.0 / 45.0);
        b.add(&Bubble::rt1(1), 10.0 / 45.0);
        b.add(&Bubble::rt2(0), 3.0 / 70.0);
        b.add(&Bubble::rt2(1), 2.0 / 70.0);
        b.add(&Bubble::rt2(2), -3.0 / 70.0);
        b
    }

    /// `self += s * other`.
    pub fn add(&mut self, other: &Bubble, s: f64) {
        for (g, m) in &other.terms {
            let g = BaryPoly::new(g.terms.iter().map(|&(c, e)| (s * c, e)).collect());
            self.terms.push((g, *m));
        }
    }

    /// Multiply every term by `λ_j`.
    pub fn times_lambda(&self, j: usize) -> Bubble {
        Bubble {
            terms: self
                .terms
                .iter()
                .map(|(g, m)| {
                    let t = g
                        .terms
                        .iter()
                        .map(|&(c, mut e)| {
                            e[j] += 1;
                            (c, e)
                        })
                        .collect();
                    (BaryPoly::new(t), *m)
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(g, _)| g.degree() + 1).max().unwrap_or(0)
    }

    /// Value and divergence in physical coordinates.
    pub fn eval(&self, geom: &CellGeometry, xr: Point) -> VectorValue {
        let lam = barycentric(xr);
        let x = geom.map(xr);
        let grads = geom.barycentric_gradients();
        let s = 1.0 / (2.0 * geom.area);
        let mut v = [0.0; 2];
        let mut div = 0.0;
        for (g, m) in &self.terms {
            let p = geom.vertices[*m];
            let psi = [s * (x[0] - p[0]), s * (x[1] - p[1])];
            let (gv, gd) = g.eval(lam);
            let mut grad = [0.0; 2];
            for i in 0..3 {
                grad[0] += gd[i] * grads[i][0];
                grad[1] += gd[i] * grads[i][1];
            }
            v[0] += gv * psi[0];
            v[1] += gv * psi[1];
            div += grad[0] * psi[0] + grad[1] * psi[1] + gv / geom.area;
        }
        (v, div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnrichmentKind {
    /// Only the highest-order complement bubbles; `dim P_{k-1} - dim P_{k-2}` per cell.
    Full,
    /// Bubbles of every order up to `k`; `dim P_{k-1} - 1` per cell.
    Reduced,
}

/// Per-cell list of enrichment bubbles for a fixed velocity order.
#[derive(Debug, Clone)]
pub struct EnrichmentBasis {
    pub k: usize,
    pub kind: EnrichmentKind,
    pub bubbles: Vec<Bubble>,
}

impl EnrichmentBasis {
    pub fn new(k: usize, kind: EnrichmentKind) -> Result<Self> {
        check_order(k)?;
        if k == 1 {
            return Err(Error::UnsupportedOrder(k));
        }
        let level = |k: usize| -> Vec<Bubble> {
            match k {
                2 => (0..2).map(Bubble::rt1).collect(),
                3 => (0..3).map(Bubble::rt2).collect(),
                _ => (0..4).map(Bubble::rt3).collect(),
            }
        };
        let bubbles = match kind {
            EnrichmentKind::Full => level(k),
            EnrichmentKind::Reduced => (2..=k).flat_map(level).collect(),
        };
        Ok(EnrichmentBasis { k, kind, bubbles })
    }

    pub fn full(k: usize) -> Result<Self> {
        EnrichmentBasis::new(k, EnrichmentKind::Full)
    }

    pub fn reduced(k: usize) -> Result<Self> {
        EnrichmentBasis::new(k, EnrichmentKind::Reduced)
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    /// Highest polynomial degree of any bubble.
    pub fn degree(&self) -> usize {
        self.bubbles.iter().map(|b| b.degree()).max().unwrap_or(0) as usize
    }

    pub fn eval(&self, geom: &CellGeometry, xr: Point) -> Vec<VectorValue> {
        self.bubbles.iter().map(|b| b.eval(geom, xr)).collect()
    }

    /// Gram matrix `∫_T̂ div ψ_j div ψ_k` on the reference cell.
    pub fn reference_gram(&self) -> DMatrix<f64> {
        let geom = CellGeometry::reference();
        let rule = triangle_rule(2 * self.degree()).expect("degree within range");
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for (p, w) in rule.iter() {
            let vals = self.eval(&geom, p);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] += w * vals[i].1 * vals[j].1;
                }
            }
        }
        a
    }
}

/// Values and divergences of the full enrichment basis at reference points.
pub fn eval_enrichment(k: usize, geom: &CellGeometry, points: &[Point]) -> Result<Vec<Vec<VectorValue>>> {
    let basis = EnrichmentBasis::full(k)?;
    Ok(points.iter().map(|&p| basis.eval(geom, p)).collect())
}

/// Divergence Gram matrix of the full enrichment basis on the reference cell.
pub fn reference_moment_matrix(k: usize) -> Result<DMatrix<f64>> {
    Ok(EnrichmentBasis::full(k)?.reference_gram())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;

    fn integrate(geom: &CellGeometry, deg: usize, f: impl Fn(Point) -> f64) -> f64 {
        let rule = triangle_rule(deg).unwrap();
        rule.iter().map(|(p, w)| w * geom.det * f(p)).sum()
    }

    fn skewed() -> CellGeometry {
        CellGeometry::new([[0.3, -0.2], [2.0, 0.1], [0.7, 1.4]])
    }

    #[test]
    fn rt1_divergence_moments() {
        let g = CellGeometry::reference();
        for j in 0..3 {
            for k in 0..3 {
                let d = if j == k { 1.0 } else { 0.0 };
                let m = integrate(&g, 2, |p| Bubble::rt1(j).eval(&g, p).1 * barycentric(p)[k]);
                assert!((m - (3.0 * d - 1.0) / 24.0).abs() < 1e-14);
                let b = Bubble::rt1(j).times_lambda(j);
                let m = integrate(&g, 3, |p| b.eval(&g, p).1 * barycentric(p)[k]);
                assert!((m - (3.0 * d - 1.0) / 60.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rt2_quadratic_moments() {
        let g = CellGeometry::reference();
        let mut a = DMatrix::zeros(3, 3);
        for j in 0..3 {
            for k in 0..3 {
                let chi = |p: Point| {
                    let l = barycentric(p);
                    l[(k + 1) % 3] * l[(k + 2) % 3]
                };
                a[(j, k)] = integrate(&g, 4, |p| Bubble::rt2(j).eval(&g, p).1 * chi(p));
                let d = if j == k { 1.0 } else { 0.0 };
                assert!((a[(j, k)] - (4.0 * d - 3.0) / 180.0).abs() < 1e-14);
            }
        }
        assert!((a.determinant() + 1.0 / 72900.0).abs() < 1e-16);
    }

    #[test]
    fn rt3_orthogonal_to_quadratics() {
        for g in [CellGeometry::reference(), skewed()] {
            for j in 0..4 {
                for (a, b) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                    let m = integrate(&g, 6, |p| Bubble::rt3(j).eval(&g, p).1 * p[0].powi(a) * p[1].powi(b));
                    assert!(m.abs() < 1e-13, "j={j} ({a},{b}): {m}");
                }
            }
        }
    }

    #[test]
    fn rt1_sum_vanishes() {
        let g = skewed();
        let rule = triangle_rule(4).unwrap();
        for (p, _) in rule.iter() {
            let s: Vec<VectorValue> = (0..3).map(|j| Bubble::rt1(j).eval(&g, p)).collect();
            for c in 0..2 {
                assert!((s[0].0[c] + s[1].0[c] + s[2].0[c]).abs() < 1e-14);
            }
            assert!((s[0].1 + s[1].1 + s[2].1).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_normal_trace() {
        let g = skewed();
        let rule = edge_rule(8).unwrap();
        for k in 2..=4 {
            let basis = EnrichmentBasis::reduced(k).unwrap();
            for e in 0..3 {
                let n = g.outward_normal(e);
                for (t, _) in rule.iter() {
                    // reference edge opposite vertex e
                    let (a, b) = (reference_vertex((e + 1) % 3), reference_vertex((e + 2) % 3));
                    let xr = [a[0] + t[0] * (b[0] - a[0]), a[1] + t[0] * (b[1] - a[1])];
                    for (v, _) in basis.eval(&g, xr) {
                        assert!((v[0] * n[0] + v[1] * n[1]).abs() < 1e-13);
                    }
                }
            }
        }
    }

    fn reference_vertex(i: usize) -> Point {
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]][i]
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let g = skewed();
        let basis = EnrichmentBasis::reduced(4).unwrap();
        let xr = [0.23, 0.41];
        let eps = 1e-6;
        // physical perturbations mapped back to reference coordinates
        let to_ref = |dx: [f64; 2]| {
            let m = g.inv_t;
            [m[0][0] * dx[0] + m[1][0] * dx[1], m[0][1] * dx[0] + m[1][1] * dx[1]]
        };
        let dxr = to_ref([eps, 0.0]);
        let dyr = to_ref([0.0, eps]);
        let at = |d: [f64; 2], s: f64| basis.eval(&g, [xr[0] + s * d[0], xr[1] + s * d[1]]);
        let (xp, xm, yp, ym) = (at(dxr, 1.0), at(dxr, -1.0), at(dyr, 1.0), at(dyr, -1.0));
        let centre = basis.eval(&g, xr);
        for i in 0..basis.len() {
            let fd = (xp[i].0[0] - xm[i].0[0] + yp[i].0[1] - ym[i].0[1]) / (2.0 * eps);
            assert!((fd - centre[i].1).abs() < 1e-6 * (1.0 + fd.abs()), "{i}: {fd} vs {}", centre[i].1);
        }
    }

    #[test]
    fn gram_matrices_spd() {
        for k in 2..=4 {
            for basis in [EnrichmentBasis::full(k).unwrap(), EnrichmentBasis::reduced(k).unwrap()] {
                let a = basis.reference_gram();
                assert!((&a - a.transpose()).amax() < 1e-14);
                assert!(a.clone().cholesky().is_some(), "k={k} {:?}", basis.kind);
            }
            assert_eq!(reference_moment_matrix(k).unwrap().nrows(), EnrichmentBasis::full(k).unwrap().len());
        }
        assert_eq!(EnrichmentBasis::reduced(3).unwrap().len(), 5);
        assert_eq!(EnrichmentBasis::reduced(4).unwrap().len(), 9);
        assert!(eval_enrichment(1, &CellGeometry::reference(), &[[0.1, 0.1]]).is_err());
        assert!(eval_enrichment(5, &CellGeometry::reference(), &[[0.1, 0.1]]).is_err());
    }
}
