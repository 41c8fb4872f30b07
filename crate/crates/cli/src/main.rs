//! `svrt`: convergence studies, inf-sup estimates and the reference-element
//! identity suite for the enriched Scott–Vogelius Stokes discretization.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use svrt_core::harness::{
    estimate_infsup, estimate_infsup_iterative, estimate_infsup_unenriched, run_convergence_study, verify_elements,
    write_csv, CaseKind, StudyConfig, MAX_DENSE_DOFS,
};
use svrt_core::mesh::{criss_cross_mesh, unit_square_mesh};
use svrt_core::{Mesh, Scheme, SolverConfig};

#[derive(Parser)]
#[command(name = "svrt", version, about = "Enriched Scott-Vogelius Stokes solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a uniform-refinement convergence study and write a CSV table.
    Run(RunArgs),
    /// Estimate the discrete inf-sup constant on an n x n unit-square mesh.
    Infsup(InfsupArgs),
    /// Check the reference-element identities of the enrichment bubbles.
    VerifyElements,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Polynomial order of the Lagrange velocity (1 to 4).
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Scheme,
    /// Kinematic viscosity.
    #[arg(long)]
    nu: f64,
    /// RT0 stabilization weight (k = 1 only).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Number of mesh levels (base mesh plus uniform refinements).
    #[arg(long)]
    levels: usize,
    /// Subdivisions per side of the base unit-square mesh.
    #[arg(long, default_value_t = 4)]
    base_n: usize,
    /// Output CSV path; the configuration is written next to it as `<out>.config.json`.
    #[arg(long)]
    out: PathBuf,
    /// Base mesh file replacing the unit-square mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value = "lattice", value_parser = parse_case)]
    case: CaseKind,
    /// Quadrature degree of the load vector (default 2k + 3).
    #[arg(long)]
    quad_deg: Option<usize>,
}

#[derive(clap::Args)]
struct InfsupArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    /// Use the criss-cross mesh (four triangles per square).
    #[arg(long)]
    criss_cross: bool,
    /// Drop the enrichment (plain Scott-Vogelius pair).
    #[arg(long)]
    plain: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: svrt_core::Error| e.to_string())
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    s.parse().map_err(|e: svrt_core::Error| e.to_string())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn run(args: RunArgs) -> Result<()> {
    let mut solver = SolverConfig::new(args.k, args.scheme, args.nu).with_alpha(args.alpha);
    solver.rhs_degree = args.quad_deg;
    let mut config = StudyConfig::new(solver, args.levels, args.base_n);
    config.case = args.case;
    let mesh = match &args.mesh {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading mesh {}", path.display()))?;
            let mesh = Mesh::parse(&text).with_context(|| format!("parsing mesh {}", path.display()))?;
            config.mesh_source = Some(text);
            Some(mesh)
        }
        None => None,
    };
    let report = run_convergence_study(&config, mesh)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_csv(&report.records, BufWriter::new(file))?;
    let sidecar = sidecar_path(&args.out);
    let json = serde_json::to_string_pretty(&report.config)?;
    std::fs::write(&sidecar, json).with_context(|| format!("writing {}", sidecar.display()))?;
    write_csv(&report.records, std::io::stdout().lock())?;
    Ok(())
}

fn infsup(args: InfsupArgs) -> Result<()> {
    let mesh = if args.criss_cross {
        criss_cross_mesh(args.n)?
    } else {
        unit_square_mesh(args.n)?
    };
    let est = if args.plain {
        estimate_infsup_unenriched(args.k, &mesh)?
    } else {
        match estimate_infsup(args.k, &mesh) {
            Ok(e) => e,
            Err(svrt_core::Error::InvalidParameter(_)) => {
                eprintln!("more than {MAX_DENSE_DOFS} velocity unknowns, using the Lanczos estimator");
                estimate_infsup_iterative(args.k, &mesh, 500)?
            }
            Err(e) => return Err(e.into()),
        }
    };
    println!(
        "beta_h = {:.6e} (velocity dofs {}, zero-mean pressure dofs {})",
        est.beta, est.velocity_dofs, est.pressure_dofs
    );
    Ok(())
}

fn verify() -> Result<bool> {
    let checks = verify_elements();
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!("{tag}  {}  (deviation {:.3e}, tolerance {:.0e})", c.name, c.deviation, c.tolerance);
    }
    Ok(checks.iter().all(|c| c.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Infsup(a) => infsup(a).map(|_| true),
        Command::VerifyElements => verify(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
