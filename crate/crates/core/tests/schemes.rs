use std::sync::Arc;

use svrt_core::assembly::{BlockSystem, Forcing};
use svrt_core::harness::{compute_errors, gradient_case, lattice_flow_case, polynomial_case};
use svrt_core::mesh::{criss_cross_mesh, unit_square_mesh};
use svrt_core::quadrature::triangle_rule;
use svrt_core::schemes::{
    build_r_matrix, no_slip, recover_fine_pressure, solve, solve_condensed_rt0, solve_full, Discretization,
};
use svrt_core::{Scheme, Solution, SolverConfig};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn gradient_forcing_leaves_velocity_at_rest() {
    let mesh = unit_square_mesh(3).unwrap();
    for k in 1..=4 {
        for scheme in [Scheme::Full, Scheme::Reduced] {
            for nu in [1.0, 1e-4] {
                let case = gradient_case(nu);
                let sol = solve(&SolverConfig::new(k, scheme, nu), &mesh, &case.forcing, &case.dirichlet()).unwrap();
                let e = compute_errors(&sol, &case, None).unwrap();
                assert!(e.h1_ct + e.l2ur < 1e-9, "k={k} {scheme} nu={nu}: {}", e.h1_ct + e.l2ur);
                assert!(e.pressure_mean < 1e-12);
            }
        }
    }
}

#[test]
fn quadratic_flow_is_reproduced_for_k_at_least_two() {
    let case = polynomial_case();
    let mesh = criss_cross_mesh(2).unwrap();
    for k in 2..=4 {
        for scheme in [Scheme::Full, Scheme::Reduced] {
            let sol = solve(&SolverConfig::new(k, scheme, 1.0), &mesh, &case.forcing, &case.dirichlet()).unwrap();
            let e = compute_errors(&sol, &case, None).unwrap();
            assert!(e.h1u < 1e-10 && e.l2ur < 1e-10 && e.l2p < 1e-9, "k={k} {scheme}: {e:?}");
        }
    }
}

#[test]
fn discrete_velocity_is_divergence_free_on_unstructured_data() {
    let mesh = criss_cross_mesh(3).unwrap();
    let f = Forcing::new(|x| [(3.0 * x[1]).cos(), x[0] * x[0] * x[1]]).with_potential(|x| (x[0] - x[1]).exp());
    for k in 1..=4 {
        for scheme in [Scheme::Full, Scheme::Reduced] {
            let sol = solve(&SolverConfig::new(k, scheme, 0.01), &mesh, &f, &no_slip).unwrap();
            let case = lattice_flow_case(0.01);
            let e = compute_errors(&sol, &case, None).unwrap();
            assert!(e.l2divu < 1e-11, "k={k} {scheme}: {}", e.l2divu);
        }
    }
}

/// For `v` with cellwise-constant divergence the bubble part is inactive.
#[test]
fn r_vanishes_on_piecewise_constant_divergence() {
    let mesh = unit_square_mesh(3).unwrap();
    for k in 2..=4 {
        let disc = Discretization::new(mesh.clone(), k, Scheme::Reduced).unwrap();
        let r = build_r_matrix(&mesh, &disc.lagrange, &disc.enrichment, &disc.pressure).unwrap();
        // interpolant of the affine field (2x + y, 3x - y)
        let mut v = vec![0.0; r.matrix.ncols];
        for (s, p) in disc.lagrange.node_points.iter().enumerate() {
            v[2 * s] = 2.0 * p[0] + p[1];
            v[2 * s + 1] = 3.0 * p[0] - p[1];
        }
        let rv = r.matrix.matvec(&v);
        assert!(rv.iter().all(|x| x.abs() < 1e-12), "k={k}");
    }
}

/// `div(R v)` is the cellwise mean-free part of `div v`.
#[test]
fn r_reproduces_mean_free_divergence() {
    let mesh = criss_cross_mesh(2).unwrap();
    for k in 2..=4 {
        let disc = Arc::new(Discretization::new(mesh.clone(), k, Scheme::Reduced).unwrap());
        let r = build_r_matrix(&mesh, &disc.lagrange, &disc.enrichment, &disc.pressure).unwrap();
        let u_c: Vec<f64> = (0..r.matrix.ncols).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let sol = Solution {
            u_r: r.matrix.matvec(&u_c),
            u_c,
            p: vec![0.0; disc.pressure.num_dofs()],
            multiplier: 0.0,
            system_size: 0,
            config: SolverConfig::new(k, Scheme::Reduced, 1.0),
            disc: disc.clone(),
        };
        let rule = triangle_rule(2 * k).unwrap();
        for c in 0..mesh.num_cells() {
            let rest: Vec<f64> = rule
                .points
                .iter()
                .map(|&p| {
                    let (_, g) = sol.eval_ct(c, p);
                    g[0][0] + g[1][1] - sol.eval_r(c, p).1
                })
                .collect();
            let mean = dot(&rest, &rule.weights) * 2.0;
            let mean_div: f64 = rule
                .iter()
                .map(|(p, w)| {
                    let (_, g) = sol.eval_ct(c, p);
                    2.0 * w * (g[0][0] + g[1][1])
                })
                .sum();
            assert!((mean - mean_div).abs() < 1e-11, "k={k} cell {c}");
            assert!(rest.iter().all(|x| (x - mean).abs() < 1e-10), "k={k} cell {c}");
        }
    }
}

#[test]
fn r_is_invariant_under_translation_and_scales_with_h() {
    let base = unit_square_mesh(2).unwrap();
    let scaled = svrt_core::Mesh::new(
        base.vertices.iter().map(|p| [3.0 + 0.25 * p[0], -1.0 + 0.25 * p[1]]).collect(),
        base.cells.clone(),
    )
    .unwrap();
    let r_of = |m: &svrt_core::Mesh| {
        let d = Discretization::new(m.clone(), 3, Scheme::Reduced).unwrap();
        build_r_matrix(m, &d.lagrange, &d.enrichment, &d.pressure).unwrap().matrix
    };
    let (a, b) = (r_of(&base), r_of(&scaled));
    assert_eq!(a.nnz(), b.nnz());
    for (i, j, v) in a.triplets() {
        assert!((b.get(i, j) - 0.25 * v).abs() < 1e-12 * (1.0 + v.abs()));
    }
}

#[test]
fn energy_identity_for_no_slip_data() {
    let mesh = criss_cross_mesh(2).unwrap();
    let nu = 0.3;
    let f = Forcing::new(|x| [x[1] - 0.5, (x[0] * 5.0).sin()]).with_potential(|x| x[0] * x[0]);
    for k in [1, 2, 3] {
        let cfg = SolverConfig::new(k, Scheme::Full, nu);
        let sol = solve_full(&cfg, &mesh, &f, &no_slip).unwrap();
        let d = &sol.disc;
        let s = BlockSystem::assemble(&d.mesh, &d.lagrange, &d.enrichment, &d.pressure, &f, nu, 1.0, cfg.degrees())
            .unwrap();
        let mut energy = nu * dot(&sol.u_c, &s.a_cc.matvec(&sol.u_c));
        if let Some(arr) = &s.a_rr {
            energy += nu * dot(&sol.u_r, &arr.matvec(&sol.u_r));
        }
        let work = dot(&s.f_c, &sol.u_c) + dot(&s.f_r, &sol.u_r);
        assert!(energy > 0.0);
        assert!((energy - work).abs() < 1e-10 * work.abs(), "k={k}: {energy} vs {work}");
    }
}

#[test]
fn rt0_part_decreases_with_stabilization_weight() {
    let mesh = unit_square_mesh(4).unwrap();
    let case = lattice_flow_case(1.0);
    let mut prev = f64::INFINITY;
    let mut gaps = Vec::new();
    for alpha in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let cfg = SolverConfig::new(1, Scheme::Reduced, 1.0).with_alpha(alpha);
        let sol = solve(&cfg, &mesh, &case.forcing, &case.dirichlet()).unwrap();
        let e = compute_errors(&sol, &case, None).unwrap();
        assert!(e.l2ur < prev, "alpha={alpha}");
        assert!(e.l2divu < 1e-12);
        gaps.push(prev - e.l2ur);
        prev = e.l2ur;
    }
    // the divergence constraint keeps a nonzero limit; the increments decay
    assert!(gaps[4] < 0.01 * gaps[2]);
}

#[test]
fn condensation_on_a_single_interior_facet() {
    let mesh = unit_square_mesh(1).unwrap();
    assert_eq!(mesh.num_interior_facets(), 1);
    let f = Forcing::new(|x| [-x[1], x[0]]);
    let cfg = SolverConfig::new(1, Scheme::Full, 1.0);
    let full = solve_full(&cfg, &mesh, &f, &no_slip).unwrap();
    let cond = solve_condensed_rt0(&cfg, &mesh, &f, &no_slip).unwrap();
    assert_eq!(full.u_r.len(), 1);
    assert!((full.u_r[0] - cond.u_r[0]).abs() < 1e-13);
    for (a, b) in full.p.iter().zip(&cond.p) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn fine_pressure_recovery_is_repeatable() {
    let mesh = unit_square_mesh(3).unwrap();
    let case = lattice_flow_case(0.1);
    for k in 2..=4 {
        let sol = solve(&SolverConfig::new(k, Scheme::Reduced, 0.1), &mesh, &case.forcing, &case.dirichlet()).unwrap();
        let mut coarse = sol.clone();
        let np = sol.disc.pressure.local_len();
        for c in 0..mesh.num_cells() {
            for m in 1..np {
                coarse.p[sol.disc.pressure.dof(c, m)] = 0.0;
            }
        }
        let again = recover_fine_pressure(&coarse, &case.forcing).unwrap();
        for (a, b) in sol.p.iter().zip(&again.p) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "k={k}");
        }
    }
}

#[test]
fn reduced_system_is_smaller() {
    let mesh = unit_square_mesh(4).unwrap();
    let case = lattice_flow_case(1.0);
    for k in 2..=4 {
        let full = solve(&SolverConfig::new(k, Scheme::Full, 1.0), &mesh, &case.forcing, &case.dirichlet()).unwrap();
        let red = solve(&SolverConfig::new(k, Scheme::Reduced, 1.0), &mesh, &case.forcing, &case.dirichlet()).unwrap();
        assert!(red.ndof() < full.ndof(), "k={k}");
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let mesh = unit_square_mesh(1).unwrap();
    let f = Forcing::zero();
    assert!(solve(&SolverConfig::new(5, Scheme::Full, 1.0), &mesh, &f, &no_slip).is_err());
    assert!(solve(&SolverConfig::new(0, Scheme::Full, 1.0), &mesh, &f, &no_slip).is_err());
    assert!(solve(&SolverConfig::new(2, Scheme::Full, -1.0), &mesh, &f, &no_slip).is_err());
    assert!(solve(&SolverConfig::new(1, Scheme::Full, 1.0).with_alpha(0.0), &mesh, &f, &no_slip).is_err());
}
