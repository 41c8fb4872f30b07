//! Manufactured solutions, error norms, convergence studies, robustness and
//! inf-sup diagnostics, and the reference-element identity suite.

mod cases;
mod errors;
mod infsup;
mod study;
mod verify;

pub use cases::{gradient_case, lattice_flow_case, lattice_flow_forcing, polynomial_case, CaseKind, ManufacturedCase};
pub use errors::{compute_errors, ErrorNorms};
pub use infsup::{estimate_infsup, estimate_infsup_iterative, estimate_infsup_unenriched, InfSupEstimate, MAX_DENSE_DOFS};
pub use study::{
    compute_eocs, eoc, mesh_hierarchy, pressure_robustness_report, read_csv, run_convergence_study, to_csv_string,
    write_csv, ConvergenceRecord, RobustnessReport, StudyConfig, StudyReport, CSV_HEADER,
};
pub use verify::{verify_elements, IdentityCheck};
