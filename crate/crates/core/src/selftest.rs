//! Runtime invariant checks behind `bgnflow selftest`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::Result;
use crate::flows::VelocityField;
use crate::geometry::{averaged_normal, lumped_weights};
use crate::linalg::{solve_banded_cyclic, solve_dense};
use crate::mesh::{Circle, CurveMesh, Ellipse};
use crate::point::Vec2;
use crate::quadrature::{gauss_legendre, gauss_lobatto};
use crate::solver::{assemble_bgn_system, bgn_step, StepGeometry};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(f64, f64)>) -> Check {
    match outcome {
        Ok((value, tolerance)) => Check {
            name,
            passed: value <= tolerance,
            detail: format!("{value:.3e} (tolerance {tolerance:.0e})"),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn quadrature_moments() -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    for n in 1..=10 {
        worst = worst.max(gauss_legendre(n)?.moment_defect(2 * n - 1));
    }
    for k in 1..=6 {
        worst = worst.max(gauss_lobatto(k)?.moment_defect(2 * k - 1));
    }
    Ok((worst, 1e-14))
}

fn stationarity() -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 24, k)?;
        let out = bgn_step(&mesh, &VelocityField::Zero, 0.0, 0.1)?;
        for (a, b) in out.mesh.positions().iter().zip(mesh.positions()) {
            worst = worst.max(a.distance(*b));
        }
    }
    Ok((worst, 1e-10))
}

fn translation() -> Result<(f64, f64)> {
    let c = Vec2::new(0.3, -0.2);
    let tau = 0.05;
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 24, k)?;
        let out = bgn_step(&mesh, &VelocityField::Constant(c), 0.0, tau)?;
        for (a, b) in out.mesh.positions().iter().zip(mesh.positions()) {
            worst = worst.max(a.distance(*b + tau * c));
        }
    }
    Ok((worst, 1e-10))
}

fn constraint() -> Result<(f64, f64)> {
    let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 32, 2)?;
    let out = bgn_step(&mesh, &VelocityField::EllipseRadial, 0.0, 1.0 / 64.0)?;
    Ok((out.constraint_residual, 1e-10))
}

fn polygon_normals() -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    for n in [5usize, 8, 13] {
        let mesh = CurveMesh::interpolate(&Circle::unit(), n, 1)?;
        let nb = averaged_normal(&mesh, &lumped_weights(&mesh));
        let expected = (PI / n as f64).cos();
        for (j, p) in mesh.positions().iter().enumerate() {
            worst = worst.max((nb[j].norm() - expected).abs());
            worst = worst.max(nb[j].distance(*p * expected));
        }
    }
    Ok((worst, 1e-12))
}

fn square_curvature() -> Result<(f64, f64)> {
    let mesh = CurveMesh::interpolate(&Circle::unit(), 4, 1)?;
    let kappa = StepGeometry::new(&mesh)?.discrete_curvature(&mesh)?;
    Ok((
        kappa.iter().map(|k| (k - SQRT_2).abs()).fold(0.0, f64::max),
        1e-12,
    ))
}

fn banded_matches_dense() -> Result<(f64, f64)> {
    let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 12, 2)?;
    let geometry = StepGeometry::new(&mesh)?;
    let velocity: Vec<Vec2> = mesh
        .positions()
        .iter()
        .map(|&x| VelocityField::EllipseRadial.eval(x, 0.0))
        .collect::<Result<_>>()?;
    let system = assemble_bgn_system(&mesh, &geometry, &velocity, 0.1)?;
    let banded = solve_banded_cyclic(&system.matrix, &system.rhs)?;
    let dense = solve_dense(&system.matrix.to_dense(), &system.rhs)?;
    let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let diff = banded
        .iter()
        .zip(&dense)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((diff / scale, 1e-10))
}

/// Runs every check; none of them panics on failure.
pub fn run() -> Vec<Check> {
    vec![
        check("quadrature moments", quadrature_moments()),
        check("zero field is stationary", stationarity()),
        check("constant field translates", translation()),
        check("nodal normal constraint", constraint()),
        check("regular polygon normals", polygon_normals()),
        check("inscribed square curvature", square_curvature()),
        check("banded solve matches dense", banded_matches_dense()),
    ]
}
