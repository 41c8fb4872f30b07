use nalgebra::DMatrix;

use crate::elements::{Bubble, EnrichmentBasis};
use crate::mesh::{barycentric, CellGeometry, Point};
use crate::quadrature::{edge_rule, triangle_rule};

/// Outcome of one reference-element identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Largest absolute deviation from the expected value(s).
    pub deviation: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn integrate(f: impl Fn(Point) -> f64, degree: usize) -> f64 {
    let geom = CellGeometry::reference();
    triangle_rule(degree)
        .expect("degree within range")
        .iter()
        .map(|(p, w)| w * geom.det * f(p))
        .sum()
}

fn moment_matrix(n: usize, bubble: impl Fn(usize) -> Bubble, test: impl Fn(usize, Point) -> f64, degree: usize) -> DMatrix<f64> {
    let geom = CellGeometry::reference();
    DMatrix::from_fn(n, n, |j, k| {
        let b = bubble(j);
        integrate(|p| b.eval(&geom, p).1 * test(k, p), degree)
    })
}

fn max_dev(a: &DMatrix<f64>, expect: impl Fn(usize, usize) -> f64) -> f64 {
    let mut d: f64 = 0.0;
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            d = d.max((a[(j, k)] - expect(j, k)).abs());
        }
    }
    d
}

fn delta(j: usize, k: usize) -> f64 {
    if j == k {
        1.0
    } else {
        0.0
    }
}

/// Runs the reference-element identity suite of the enrichment bubbles.
pub fn verify_elements() -> Vec<IdentityCheck> {
    let geom = CellGeometry::reference();
    let lam = |k: usize, p: Point| barycentric(p)[k];
    let mut out = Vec::new();

    let rt1 = moment_matrix(3, Bubble::rt1, lam, 2);
    out.push(IdentityCheck {
        name: "int div psi1_j phi_k = (3 delta_jk - 1)/24",
        deviation: max_dev(&rt1, |j, k| (3.0 * delta(j, k) - 1.0) / 24.0),
        tolerance: 1e-13,
    });
    out.push(IdentityCheck {
        name: "det of the 2x2 RT1 moment matrix = 1/192",
        deviation: (rt1.view((0, 0), (2, 2)).determinant() - 1.0 / 192.0).abs(),
        tolerance: 1e-13,
    });
    let rt1b = moment_matrix(3, |j| Bubble::rt1(j).times_lambda(j), lam, 3);
    out.push(IdentityCheck {
        name: "int div(phi_j psi1_j) phi_k = (3 delta_jk - 1)/60",
        deviation: max_dev(&rt1b, |j, k| (3.0 * delta(j, k) - 1.0) / 60.0),
        tolerance: 1e-13,
    });
    let chi = |k: usize, p: Point| {
        let l = barycentric(p);
        l[(k + 1) % 3] * l[(k + 2) % 3]
    };
    let rt2 = moment_matrix(3, Bubble::rt2, chi, 4);
    out.push(IdentityCheck {
        name: "int div psi2_j chi_k = (4 delta_jk - 3)/180",
        deviation: max_dev(&rt2, |j, k| (4.0 * delta(j, k) - 3.0) / 180.0),
        tolerance: 1e-13,
    });
    out.push(IdentityCheck {
        name: "det of the RT2 moment matrix = -1/72900",
        deviation: (rt2.determinant() + 1.0 / 72900.0).abs(),
        tolerance: 1e-13,
    });
    let monomials = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    let mut d3: f64 = 0.0;
    for j in 0..4 {
        let b = Bubble::rt3(j);
        for &(a, c) in &monomials {
            d3 = d3.max(integrate(|p| b.eval(&geom, p).1 * p[0].powi(a) * p[1].powi(c), 6).abs());
        }
    }
    out.push(IdentityCheck {
        name: "int div psi3_j q = 0 for all q in P2, j = 1..4",
        deviation: d3,
        tolerance: 1e-13,
    });

    let mut dsum: f64 = 0.0;
    for (p, _) in triangle_rule(4).expect("degree within range").iter() {
        let v: Vec<_> = (0..3).map(|j| Bubble::rt1(j).eval(&geom, p).0).collect();
        for c in 0..2 {
            dsum = dsum.max((v[0][c] + v[1][c] + v[2][c]).abs());
        }
    }
    out.push(IdentityCheck {
        name: "psi1_3 = -psi1_1 - psi1_2",
        deviation: dsum,
        tolerance: 1e-14,
    });

    let skew = CellGeometry::new([[0.3, -0.2], [2.0, 0.1], [0.7, 1.4]]);
    let refv = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut trace: f64 = 0.0;
    let basis = EnrichmentBasis::reduced(4).expect("k = 4 supported");
    for e in 0..3 {
        let n = skew.outward_normal(e);
        let (a, b) = (refv[(e + 1) % 3], refv[(e + 2) % 3]);
        for (t, _) in edge_rule(8).expect("degree within range").iter() {
            let xr = [a[0] + t[0] * (b[0] - a[0]), a[1] + t[0] * (b[1] - a[1])];
            for (v, _) in basis.eval(&skew, xr) {
                trace = trace.max((v[0] * n[0] + v[1] * n[1]).abs());
            }
        }
    }
    out.push(IdentityCheck {
        name: "zero normal trace of all bubbles",
        deviation: trace,
        tolerance: 1e-13,
    });

    for k in 2..=4 {
        for basis in [EnrichmentBasis::full(k), EnrichmentBasis::reduced(k)] {
            let basis = basis.expect("k supported");
            let gram = basis.reference_gram();
            let spd = gram.clone().cholesky().is_some();
            out.push(IdentityCheck {
                name: match (k, basis.kind) {
                    (2, crate::elements::EnrichmentKind::Full) => "divergence Gram matrix SPD (k = 2, full)",
                    (2, _) => "divergence Gram matrix SPD (k = 2, reduced)",
                    (3, crate::elements::EnrichmentKind::Full) => "divergence Gram matrix SPD (k = 3, full)",
                    (3, _) => "divergence Gram matrix SPD (k = 3, reduced)",
                    (_, crate::elements::EnrichmentKind::Full) => "divergence Gram matrix SPD (k = 4, full)",
                    _ => "divergence Gram matrix SPD (k = 4, reduced)",
                },
                deviation: if spd { 0.0 } else { f64::INFINITY },
                tolerance: 0.0,
            });
        }
    }
    out
}
