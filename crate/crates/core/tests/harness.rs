use svrt_core::harness::{
    estimate_infsup, estimate_infsup_iterative, estimate_infsup_unenriched, mesh_hierarchy, read_csv,
    run_convergence_study, write_csv, CaseKind, StudyConfig, CSV_HEADER,
};
use svrt_core::mesh::{criss_cross_mesh, refine_uniform, unit_square_mesh};
use svrt_core::{Error, Mesh, Scheme, SolverConfig};

fn small_study(k: usize, scheme: Scheme) -> StudyConfig {
    StudyConfig::new(SolverConfig::new(k, scheme, 1.0), 3, 2)
}

#[test]
fn csv_file_layout() {
    let report = run_convergence_study(&small_study(2, Scheme::Full), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_csv(&report.records, std::fs::File::create(&path).unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 12);
    assert_eq!(first[0], "0");
    for i in [4, 6, 8, 11] {
        assert_eq!(first[i], "", "column {}", CSV_HEADER[i]);
    }
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (i, cell) in second.iter().enumerate().skip(2) {
        let (mantissa, exp) = cell.split_once('e').unwrap_or_else(|| panic!("{} not scientific", CSV_HEADER[i]));
        let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
        assert_eq!(digits.len(), 6, "{cell}");
        exp.parse::<i32>().unwrap();
    }
    let back = read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back[2].ndof, report.records[2].ndof);
    assert!((back[2].l2u - report.records[2].l2u).abs() <= 1e-5 * report.records[2].l2u);
}

#[test]
fn study_levels_and_mesh_input() {
    let cfg = small_study(1, Scheme::Reduced);
    let generated = run_convergence_study(&cfg, None).unwrap();
    let mesh = Mesh::parse(&unit_square_mesh(2).unwrap().to_text()).unwrap();
    let from_file = run_convergence_study(&cfg, Some(mesh)).unwrap();
    assert_eq!(generated.records, from_file.records);
    let r = &generated.records;
    assert!(r.windows(2).all(|w| w[1].ndof > w[0].ndof && (w[0].h / w[1].h - 2.0).abs() < 1e-12));
    assert!(r[0].o_l2u.is_none() && r[1].o_l2u.is_some());
}

#[test]
fn gradient_study_has_vanishing_velocity() {
    let mut cfg = small_study(3, Scheme::Reduced);
    cfg.case = CaseKind::Gradient;
    cfg.solver.nu = 1e-3;
    let report = run_convergence_study(&cfg, None).unwrap();
    for r in &report.records {
        assert!(r.l2u < 1e-10 && r.h1u < 1e-9 && r.l2ur < 1e-10);
    }
}

#[test]
fn study_rejects_zero_levels() {
    let mut cfg = small_study(2, Scheme::Full);
    cfg.levels = 0;
    assert!(run_convergence_study(&cfg, None).is_err());
}

#[test]
fn config_serializes() {
    let cfg = small_study(4, Scheme::Reduced);
    let json = serde_json::to_string(&cfg).unwrap();
    assert!(json.contains("\"scheme\":\"reduced\"") && json.contains("\"case\":\"lattice\""));
    let back: StudyConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back.solver.k, 4);
}

#[test]
fn dense_and_lanczos_infsup_agree() {
    for k in 1..=4 {
        let mesh = unit_square_mesh(3).unwrap();
        let dense = estimate_infsup(k, &mesh).unwrap();
        let lanczos = estimate_infsup_iterative(k, &mesh, 400).unwrap();
        assert!(dense.beta > 0.01, "k={k}");
        assert!((dense.beta - lanczos.beta).abs() < 1e-6 * dense.beta, "k={k}");
        assert_eq!(dense.pressure_dofs, lanczos.pressure_dofs);
    }
}

#[test]
fn unenriched_pair_loses_stability_at_singular_vertices() {
    let mesh = criss_cross_mesh(2).unwrap();
    assert!(estimate_infsup_unenriched(2, &mesh).unwrap().beta < 1e-10);
    assert!(estimate_infsup(2, &mesh).unwrap().beta > 0.05);
}

#[test]
fn mesh_text_round_trip_and_refinement() {
    let mesh = criss_cross_mesh(2).unwrap();
    let back = Mesh::parse(&mesh.to_text()).unwrap();
    assert_eq!(back.cells, mesh.cells);
    assert_eq!(back.vertices, mesh.vertices);
    let fine = refine_uniform(&mesh).unwrap();
    assert_eq!(fine.num_cells(), 4 * mesh.num_cells());
    assert!((fine.total_area() - 1.0).abs() < 1e-14);
    assert!((fine.h() - 0.5 * mesh.h()).abs() < 1e-14);
    let levels = mesh_hierarchy(mesh, 3).unwrap();
    assert_eq!(levels.len(), 3);
    assert_eq!(levels[2].num_cells(), 16 * levels[0].num_cells());
}

#[test]
fn malformed_meshes_are_rejected() {
    assert!(Mesh::parse("3 1\n0 0\n1 0\n0 1\n0 2 1\n").is_err());
    assert!(Mesh::parse("3 1\n0 0\n1 0\n0 1\n0 1 3\n").is_err());
    assert!(Mesh::parse("3 1\n0 0\n1 0\n").is_err());
    assert!(matches!(Mesh::parse("2 0\n0 0\nx 1\n"), Err(Error::Parse { .. })));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.msh");
    std::fs::write(&path, "3 1\n0 0\n1 0\n0 1\n0 1 2\n").unwrap();
    assert_eq!(Mesh::read(&path).unwrap().num_cells(), 1);
}
