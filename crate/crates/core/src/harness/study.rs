use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{compute_errors, CaseKind, ErrorNorms};
use crate::mesh::{refine_uniform, unit_square_mesh, Mesh};
use crate::schemes::{solve, Scheme, SolverConfig};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "level", "ndof", "h", "L2u", "oL2u", "H1u", "oH1u", "L2uR", "oL2uR", "L2divu", "L2p", "oL2p",
];

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub ndof: usize,
    pub h: f64,
    pub l2u: f64,
    pub h1u: f64,
    pub l2ur: f64,
    pub l2divu: f64,
    pub l2p: f64,
    pub o_l2u: Option<f64>,
    pub o_h1u: Option<f64>,
    pub o_l2ur: Option<f64>,
    pub o_l2p: Option<f64>,
}

impl ConvergenceRecord {
    pub fn new(level: usize, ndof: usize, h: f64, e: &ErrorNorms) -> Self {
        ConvergenceRecord {
            level,
            ndof,
            h,
            l2u: e.l2u,
            h1u: e.h1u,
            l2ur: e.l2ur,
            l2divu: e.l2divu,
            l2p: e.l2p,
            o_l2u: None,
            o_h1u: None,
            o_l2ur: None,
            o_l2p: None,
        }
    }
}

/// `log(e_prev / e) / log(h_prev / h)`; `None` when undefined.
pub fn eoc(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    let r = (e_prev / e).ln() / (h_prev / h).ln();
    r.is_finite().then_some(r)
}

/// Fills the order columns from consecutive rows.
pub fn compute_eocs(records: &mut [ConvergenceRecord]) {
    for i in 0..records.len() {
        if i == 0 {
            let r = &mut records[0];
            (r.o_l2u, r.o_h1u, r.o_l2ur, r.o_l2p) = (None, None, None, None);
            continue;
        }
        let (a, b) = records.split_at_mut(i);
        let (p, r) = (&a[i - 1], &mut b[0]);
        r.o_l2u = eoc(p.l2u, r.l2u, p.h, r.h);
        r.o_h1u = eoc(p.h1u, r.h1u, p.h, r.h);
        r.o_l2ur = eoc(p.l2ur, r.l2ur, p.h, r.h);
        r.o_l2p = eoc(p.l2p, r.l2p, p.h, r.h);
    }
}

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.level.to_string(),
            r.ndof.to_string(),
            sci(r.h),
            sci(r.l2u),
            opt(r.o_l2u),
            sci(r.h1u),
            opt(r.o_h1u),
            sci(r.l2ur),
            opt(r.o_l2ur),
            sci(r.l2divu),
            sci(r.l2p),
            opt(r.o_l2p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[ConvergenceRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| -> Result<Option<f64>> {
            let s = row.get(j).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Parse {
                line,
                msg: format!("bad number '{s}' in column {}", CSV_HEADER[j]),
            })
        };
        let req = |j: usize| -> Result<f64> {
            field(j)?.ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing {}", CSV_HEADER[j]),
            })
        };
        let int = |j: usize| -> Result<usize> {
            row.get(j).unwrap_or("").parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad integer in column {}", CSV_HEADER[j]),
            })
        };
        out.push(ConvergenceRecord {
            level: int(0)?,
            ndof: int(1)?,
            h: req(2)?,
            l2u: req(3)?,
            o_l2u: field(4)?,
            h1u: req(5)?,
            o_h1u: field(6)?,
            l2ur: req(7)?,
            o_l2ur: field(8)?,
            l2divu: req(9)?,
            l2p: req(10)?,
            o_l2p: field(11)?,
        });
    }
    Ok(out)
}

/// Parameters of a refinement study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub solver: SolverConfig,
    pub case: CaseKind,
    pub levels: usize,
    pub base_n: usize,
    /// Text of a user-supplied base mesh, if any (replaces `base_n`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_source: Option<String>,
    /// Error quadrature degree; `None` selects `2k + 4`.
    pub error_degree: Option<usize>,
}

impl StudyConfig {
    pub fn new(solver: SolverConfig, levels: usize, base_n: usize) -> Self {
        StudyConfig {
            solver,
            case: CaseKind::Lattice,
            levels,
            base_n,
            mesh_source: None,
            error_degree: None,
        }
    }
}

/// Result of a convergence study with the configuration that produced it.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub records: Vec<ConvergenceRecord>,
    /// Norms of every level, including the diagnostics not in the CSV.
    pub norms: Vec<ErrorNorms>,
}

/// Base mesh followed by `levels - 1` uniform refinements.
pub fn mesh_hierarchy(base: Mesh, levels: usize) -> Result<Vec<Mesh>> {
    let mut meshes = vec![base];
    for _ in 1..levels {
        let next = refine_uniform(meshes.last().expect("nonempty"))?;
        meshes.push(next);
    }
    Ok(meshes)
}

pub fn run_convergence_study(config: &StudyConfig, base_mesh: Option<Mesh>) -> Result<StudyReport> {
    if config.levels < 1 {
        return Err(Error::InvalidParameter("a study needs at least one level".into()));
    }
    config.solver.validate()?;
    let base = match base_mesh {
        Some(m) => m,
        None => unit_square_mesh(config.base_n)?,
    };
    let case = config.case.build(config.solver.nu);
    let mut records = Vec::new();
    let mut norms = Vec::new();
    for (level, mesh) in mesh_hierarchy(base, config.levels)?.into_iter().enumerate() {
        let annotate = |e: Error| Error::Level {
            level,
            source: Box::new(e),
        };
        let sol = solve(&config.solver, &mesh, &case.forcing, &case.dirichlet()).map_err(annotate)?;
        let e = compute_errors(&sol, &case, config.error_degree).map_err(annotate)?;
        records.push(ConvergenceRecord::new(level, sol.ndof(), mesh.h(), &e));
        norms.push(e);
    }
    compute_eocs(&mut records);
    Ok(StudyReport {
        config: config.clone(),
        records,
        norms,
    })
}

/// Velocity-invariance and gradient-forcing diagnostics.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub nu_values: Vec<f64>,
    /// Lattice-flow norms per viscosity (outer) and level (inner).
    pub lattice: Vec<Vec<ErrorNorms>>,
    /// Largest relative deviation of any velocity error (L2u, H1u, L2uR) from
    /// its value at the first viscosity.
    pub max_velocity_deviation: f64,
    /// `‖∇u_h^ct‖ + ‖u_h^R‖` for the gradient forcing, per level.
    pub gradient_velocity: Vec<f64>,
}

pub fn pressure_robustness_report(k: usize, scheme: Scheme, base_n: usize, levels: usize) -> Result<RobustnessReport> {
    let nu_values = vec![1.0, 1e-3, 1e-6];
    let meshes = mesh_hierarchy(unit_square_mesh(base_n)?, levels)?;
    let mut lattice = Vec::new();
    for &nu in &nu_values {
        let case = super::lattice_flow_case(nu);
        let cfg = SolverConfig::new(k, scheme, nu);
        let mut per_level = Vec::new();
        for mesh in &meshes {
            let sol = solve(&cfg, mesh, &case.forcing, &case.dirichlet())?;
            per_level.push(compute_errors(&sol, &case, None)?);
        }
        lattice.push(per_level);
    }
    let rel = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let mut dev: f64 = 0.0;
    for set in &lattice[1..] {
        for (e, e0) in set.iter().zip(&lattice[0]) {
            dev = dev.max(rel(e.l2u, e0.l2u)).max(rel(e.h1u, e0.h1u)).max(rel(e.l2ur, e0.l2ur));
        }
    }
    let case = super::gradient_case(1.0);
    let cfg = SolverConfig::new(k, scheme, 1.0);
    let mut gradient_velocity = Vec::new();
    for mesh in &meshes {
        let sol = solve(&cfg, mesh, &case.forcing, &case.dirichlet())?;
        let e = compute_errors(&sol, &case, None)?;
        gradient_velocity.push(e.h1_ct + e.l2ur);
    }
    Ok(RobustnessReport {
        nu_values,
        lattice,
        max_velocity_deviation: dev,
        gradient_velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: usize, h: f64, e: f64) -> ConvergenceRecord {
        ConvergenceRecord::new(
            level,
            10 * (level + 1),
            h,
            &ErrorNorms {
                l2u: e,
                h1u: 2.0 * e.sqrt(),
                l2ur: 0.5 * e,
                l2divu: 1e-14,
                l2p: 3.0 * e,
                ..Default::default()
            },
        )
    }

    #[test]
    fn eoc_is_scale_invariant() {
        let mut a: Vec<_> = (0..4).map(|l| record(l, 0.5f64.powi(l as i32), 0.25f64.powi(l as i32))).collect();
        let mut b: Vec<_> = (0..4).map(|l| record(l, 0.5f64.powi(l as i32), 7.0 * 0.25f64.powi(l as i32))).collect();
        compute_eocs(&mut a);
        compute_eocs(&mut b);
        assert!(a[0].o_l2u.is_none());
        for (x, y) in a.iter().zip(&b).skip(1) {
            assert!((x.o_l2u.unwrap() - 2.0).abs() < 1e-12);
            assert!((x.o_h1u.unwrap() - 1.0).abs() < 1e-12);
            assert!((x.o_l2u.unwrap() - y.o_l2u.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let mut a: Vec<_> = (0..2).map(|l| record(l, 0.5f64.powi(l as i32), 0.25f64.powi(l as i32))).collect();
        compute_eocs(&mut a);
        let s = to_csv_string(&a).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "level,ndof,h,L2u,oL2u,H1u,oH1u,L2uR,oL2uR,L2divu,L2p,oL2p");
        assert_eq!(
            lines.next().unwrap(),
            "0,10,1.00000e0,1.00000e0,,2.00000e0,,5.00000e-1,,1.00000e-14,3.00000e0,"
        );
        let back = read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].o_l2u, Some(2.0));
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
