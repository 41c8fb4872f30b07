use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::Forcing;
use crate::mesh::Point;
use crate::{Error, Result};

type VelocityFn = dyn Fn(Point) -> ([f64; 2], [[f64; 2]; 2]) + Send + Sync;
type PressureFn = dyn Fn(Point) -> f64 + Send + Sync;

/// Exact solution of a Stokes problem together with its forcing.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub nu: f64,
    /// Velocity and gradient `grad[i][j] = ∂_j u_i`.
    velocity: Arc<VelocityFn>,
    pressure: Arc<PressureFn>,
    pub forcing: Forcing,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("nu", &self.nu)
            .finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    pub fn new(
        name: &'static str,
        nu: f64,
        velocity: impl Fn(Point) -> ([f64; 2], [[f64; 2]; 2]) + Send + Sync + 'static,
        pressure: impl Fn(Point) -> f64 + Send + Sync + 'static,
        forcing: Forcing,
    ) -> Self {
        ManufacturedCase {
            name,
            nu,
            velocity: Arc::new(velocity),
            pressure: Arc::new(pressure),
            forcing,
        }
    }

    pub fn velocity(&self, x: Point) -> [f64; 2] {
        (self.velocity)(x).0
    }

    pub fn velocity_gradient(&self, x: Point) -> [[f64; 2]; 2] {
        (self.velocity)(x).1
    }

    pub fn pressure(&self, x: Point) -> f64 {
        (self.pressure)(x)
    }

    /// Dirichlet trace (the exact velocity).
    pub fn dirichlet(&self) -> impl Fn(Point) -> [f64; 2] + '_ {
        move |x| self.velocity(x)
    }
}

fn lattice_velocity(x: Point) -> ([f64; 2], [[f64; 2]; 2]) {
    let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
    let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
    let t = 2.0 * PI;
    ([sx * sy, cx * cy], [[t * cx * sy, t * sx * cy], [-t * sx * cy, -t * cx * sy]])
}

/// Planar lattice flow on the unit square:
/// `u = (sin 2πx sin 2πy, cos 2πx cos 2πy)`, `p = (cos 4πx - cos 4πy) / 4`.
///
/// The forcing is split as `-νΔu + ∇p`, with the gradient passed as a potential.
pub fn lattice_flow_case(nu: f64) -> ManufacturedCase {
    let pressure = |x: Point| ((4.0 * PI * x[0]).cos() - (4.0 * PI * x[1]).cos()) / 4.0;
    let body = move |x: Point| {
        let u = lattice_velocity(x).0;
        let s = 8.0 * PI * PI * nu;
        [s * u[0], s * u[1]]
    };
    ManufacturedCase::new(
        "lattice",
        nu,
        lattice_velocity,
        pressure,
        Forcing::new(body).with_potential(pressure),
    )
}

/// Full lattice-flow forcing `-νΔu + ∇p` as a plain vector field.
pub fn lattice_flow_forcing(nu: f64, x: Point) -> [f64; 2] {
    let u = lattice_velocity(x).0;
    let s = 8.0 * PI * PI * nu;
    [s * u[0] - PI * (4.0 * PI * x[0]).sin(), s * u[1] + PI * (4.0 * PI * x[1]).sin()]
}

/// Gradient forcing `f = ∇(x² + y²)`: the velocity vanishes and
/// `p = x² + y² - 2/3`.
pub fn gradient_case(nu: f64) -> ManufacturedCase {
    ManufacturedCase::new(
        "gradient",
        nu,
        |_| ([0.0, 0.0], [[0.0; 2]; 2]),
        |x| x[0] * x[0] + x[1] * x[1] - 2.0 / 3.0,
        Forcing::new(|x| [2.0 * x[0], 2.0 * x[1]]),
    )
}

/// `u = (y², x²)`, `p = 0`, `ν = 1`, `f = (-2, -2)`.
pub fn polynomial_case() -> ManufacturedCase {
    ManufacturedCase::new(
        "polynomial",
        1.0,
        |x| ([x[1] * x[1], x[0] * x[0]], [[0.0, 2.0 * x[1]], [2.0 * x[0], 0.0]]),
        |_| 0.0,
        Forcing::new(|_| [-2.0, -2.0]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Lattice,
    Gradient,
}

impl CaseKind {
    pub fn build(self, nu: f64) -> ManufacturedCase {
        match self {
            CaseKind::Lattice => lattice_flow_case(nu),
            CaseKind::Gradient => gradient_case(nu),
        }
    }
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(CaseKind::Lattice),
            "gradient" => Ok(CaseKind::Gradient),
            _ => Err(Error::InvalidParameter(format!("unknown case '{s}' (expected lattice or gradient)"))),
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::Lattice => "lattice",
            CaseKind::Gradient => "gradient",
        })
    }
}
