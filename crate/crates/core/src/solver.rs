//! The fully discrete transport BGN step.
//!
//! Unknowns are interleaved per node as `(X_x, X_y, kappa)`. For node `j`:
//!
//! ```text
//!   sum_l K_jl X_l - m_j kappa_j nbar_j = s_j                  (two rows)
//!   nbar_j . X_j = nbar_j . x_j + tau nbar_j . u(x_j, t_m)      (one row)
//! ```
//!
//! where `s_j = (I - nbar_j nbar_j^T) (K x)_j` is the nodal form of the
//! stabilization term. The constraint row is the lumped normal-velocity
//! equation divided by `m_j > 0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flows::VelocityField;
use crate::geometry::{
    averaged_normal, discrete_curvature, lumped_weights, AveragedNormal, LumpedWeights,
    NORMAL_EPSILON,
};
use crate::linalg::{band_profile, solve_banded_cyclic, BandProfile, SparseMatrix};
use crate::mesh::{CurveMesh, ScalarField, VectorField};
use crate::point::Vec2;
use crate::stiffness::StiffnessMatrix;

/// Geometric quantities of the current curve that the step needs.
#[derive(Debug, Clone)]
pub struct StepGeometry {
    pub stiffness: StiffnessMatrix,
    pub weights: LumpedWeights,
    pub normals: AveragedNormal,
}

impl StepGeometry {
    pub fn new(mesh: &CurveMesh) -> Result<Self> {
        let stiffness = StiffnessMatrix::assemble(mesh)?;
        let weights = lumped_weights(mesh);
        let normals = averaged_normal(mesh, &weights);
        Ok(StepGeometry {
            stiffness,
            weights,
            normals,
        })
    }

    pub fn discrete_curvature(&self, mesh: &CurveMesh) -> Result<ScalarField> {
        discrete_curvature(mesh, &self.stiffness, &self.weights, &self.normals)
    }
}

/// `s_j = (I - nbar_j nbar_j^T) (K x)_j`.
pub fn stabilization_rhs(
    mesh: &CurveMesh,
    stiffness: &StiffnessMatrix,
    normals: &AveragedNormal,
) -> VectorField {
    stiffness
        .apply_vec2(mesh.positions())
        .into_iter()
        .zip(&normals.0)
        .map(|(kx, &n)| kx - n.dot(kx) * n)
        .collect()
}

/// The `3N x 3N` linear system of one step.
#[derive(Debug, Clone)]
pub struct BgnSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

impl BgnSystem {
    pub fn node_count(&self) -> usize {
        self.rhs.len() / 3
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn band_profile(&self) -> BandProfile {
        band_profile(&self.matrix).0
    }

    /// Packs `(X, kappa)` into the interleaved unknown vector.
    pub fn pack(positions: &[Vec2], kappa: &[f64]) -> Vec<f64> {
        positions
            .iter()
            .zip(kappa)
            .flat_map(|(p, &k)| [p.x, p.y, k])
            .collect()
    }

    pub fn unpack(z: &[f64]) -> (VectorField, ScalarField) {
        z.chunks_exact(3)
            .map(|c| (Vec2::new(c[0], c[1]), c[2]))
            .unzip()
    }

    pub fn relative_residual(&self, positions: &[Vec2], kappa: &[f64]) -> f64 {
        self.matrix
            .relative_residual(&Self::pack(positions, kappa), &self.rhs)
    }
}

pub fn assemble_bgn_system(
    mesh: &CurveMesh,
    geometry: &StepGeometry,
    velocity: &[Vec2],
    tau: f64,
) -> Result<BgnSystem> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {tau} must be positive"
        )));
    }
    let n = mesh.node_count();
    if velocity.len() != n {
        return Err(Error::InvalidArgument(format!(
            "velocity has {} entries for {n} nodes",
            velocity.len()
        )));
    }
    let StepGeometry {
        stiffness,
        weights,
        normals,
    } = geometry;
    if let Some((node, nb)) = normals
        .0
        .iter()
        .enumerate()
        .find(|(_, nb)| !(nb.norm() > NORMAL_EPSILON))
    {
        return Err(Error::DegenerateNormal {
            node,
            magnitude: nb.norm(),
        });
    }
    let stab = stabilization_rhs(mesh, stiffness, normals);
    let mut matrix = SparseMatrix::new(3 * n);
    let mut rhs = vec![0.0; 3 * n];
    for j in 0..n {
        let nb = normals[j];
        for (l, v) in stiffness.row(j) {
            matrix.add(3 * j, 3 * l, v);
            matrix.add(3 * j + 1, 3 * l + 1, v);
        }
        matrix.add(3 * j, 3 * j + 2, -weights[j] * nb.x);
        matrix.add(3 * j + 1, 3 * j + 2, -weights[j] * nb.y);
        rhs[3 * j] = stab[j].x;
        rhs[3 * j + 1] = stab[j].y;

        matrix.add(3 * j + 2, 3 * j, nb.x);
        matrix.add(3 * j + 2, 3 * j + 1, nb.y);
        matrix.add(3 * j + 2, 3 * j + 2, 0.0);
        rhs[3 * j + 2] = nb.dot(mesh.positions()[j] + tau * velocity[j]);
    }
    Ok(BgnSystem { matrix, rhs })
}

/// Solves the step system for the new positions and curvature multipliers.
pub fn solve_linear(system: &BgnSystem) -> Result<(VectorField, ScalarField)> {
    let z = solve_banded_cyclic(&system.matrix, &system.rhs)?;
    Ok(BgnSystem::unpack(&z))
}

/// Field values at the mesh nodes.
pub fn nodal_velocity(mesh: &CurveMesh, field: &VelocityField, t: f64) -> Result<VectorField> {
    mesh.positions().iter().map(|&x| field.eval(x, t)).collect()
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub mesh: CurveMesh,
    pub curvature: ScalarField,
    /// `max_j |nbar_j . (X_j - x_j - tau u_j)|` of the accepted step.
    pub constraint_residual: f64,
}

/// `max_j |nbar_j . (X_j - x_j - tau u_j)|`.
pub fn constraint_residual(
    old: &[Vec2],
    new: &[Vec2],
    normals: &AveragedNormal,
    velocity: &[Vec2],
    tau: f64,
) -> f64 {
    old.iter()
        .zip(new)
        .zip(&normals.0)
        .zip(velocity)
        .map(|(((&x, &y), &n), &u)| n.dot(y - x - tau * u).abs())
        .fold(0.0, f64::max)
}

/// One transport BGN step from `t` to `t + tau`, with `u` frozen at `t`.
pub fn bgn_step(mesh: &CurveMesh, field: &VelocityField, t: f64, tau: f64) -> Result<StepOutcome> {
    let velocity = nodal_velocity(mesh, field, t)?;
    let geometry = StepGeometry::new(mesh)?;
    let system = assemble_bgn_system(mesh, &geometry, &velocity, tau)?;
    let (positions, curvature) = solve_linear(&system)?;
    let residual = constraint_residual(
        mesh.positions(),
        &positions,
        &geometry.normals,
        &velocity,
        tau,
    );
    Ok(StepOutcome {
        mesh: mesh.with_positions(positions)?,
        curvature,
        constraint_residual: residual,
    })
}

/// Forward-Euler nodal advection `X = x + tau u(x, t)`, no redistribution.
pub fn lagrangian_step(
    mesh: &CurveMesh,
    field: &VelocityField,
    t: f64,
    tau: f64,
) -> Result<CurveMesh> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {tau} must be positive"
        )));
    }
    let positions = mesh
        .positions()
        .iter()
        .map(|&x| Ok(x + tau * field.eval(x, t)?))
        .collect::<Result<Vec<_>>>()?;
    mesh.with_positions(positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    #[default]
    Bgn,
    Lagrangian,
}

impl Stepper {
    pub fn step(
        self,
        mesh: &CurveMesh,
        field: &VelocityField,
        t: f64,
        tau: f64,
    ) -> Result<CurveMesh> {
        match self {
            Stepper::Bgn => bgn_step(mesh, field, t, tau).map(|o| o.mesh),
            Stepper::Lagrangian => lagrangian_step(mesh, field, t, tau),
        }
    }
}

impl fmt::Display for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stepper::Bgn => "bgn",
            Stepper::Lagrangian => "lagrangian",
        })
    }
}

impl FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bgn" => Ok(Stepper::Bgn),
            "lagrangian" => Ok(Stepper::Lagrangian),
            other => Err(Error::Parse(format!("unknown stepper `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Circle, Ellipse};
    use approx::assert_abs_diff_eq;

    fn ellipse(j: usize, k: usize) -> CurveMesh {
        CurveMesh::interpolate(&Ellipse::three_to_one(), j, k).unwrap()
    }

    #[test]
    fn system_dimensions() {
        let mesh = ellipse(16, 2);
        let g = StepGeometry::new(&mesh).unwrap();
        let sys = assemble_bgn_system(&mesh, &g, &vec![Vec2::ZERO; 32], 0.1).unwrap();
        assert_eq!(sys.node_count(), 32);
        assert_eq!(sys.size(), 96);
        assert_eq!(sys.matrix.size(), 96);
    }

    #[test]
    fn constraint_rows_have_three_entries() {
        let mesh = ellipse(10, 3);
        let g = StepGeometry::new(&mesh).unwrap();
        let u = nodal_velocity(&mesh, &VelocityField::EllipseRadial, 0.0).unwrap();
        let sys = assemble_bgn_system(&mesh, &g, &u, 0.1).unwrap();
        for j in 0..mesh.node_count() {
            let row = sys.matrix.row(3 * j + 2);
            assert_eq!(row.len(), 3);
            assert_eq!(sys.matrix.get(3 * j + 2, 3 * j), g.normals[j].x);
            assert_eq!(sys.matrix.get(3 * j + 2, 3 * j + 1), g.normals[j].y);
            assert_eq!(sys.matrix.get(3 * j + 2, 3 * j + 2), 0.0);
            // kappa column of node j touches only node j's rows
            for i in 0..sys.size() {
                if i / 3 != j {
                    assert_eq!(sys.matrix.get(i, 3 * j + 2), 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_velocity_constraint_rhs() {
        let mesh = ellipse(8, 2);
        let g = StepGeometry::new(&mesh).unwrap();
        let sys = assemble_bgn_system(&mesh, &g, &vec![Vec2::ZERO; 16], 0.5).unwrap();
        for j in 0..16 {
            assert_eq!(sys.rhs[3 * j + 2], g.normals[j].dot(mesh.positions()[j]));
        }
    }

    #[test]
    fn nonpositive_tau_rejected() {
        let mesh = ellipse(8, 1);
        let g = StepGeometry::new(&mesh).unwrap();
        assert!(assemble_bgn_system(&mesh, &g, &[Vec2::ZERO; 8], 0.0).is_err());
        assert!(lagrangian_step(&mesh, &VelocityField::Zero, 0.0, -1.0).is_err());
    }

    #[test]
    fn zeroed_normal_is_rejected() {
        let mesh = ellipse(8, 1);
        let mut g = StepGeometry::new(&mesh).unwrap();
        g.normals.0[3] = Vec2::ZERO;
        assert!(matches!(
            assemble_bgn_system(&mesh, &g, &[Vec2::ZERO; 8], 0.1),
            Err(Error::DegenerateNormal { node: 3, .. })
        ));
    }

    #[test]
    fn structurally_singular_system_detected() {
        // a zeroed constraint row leaves kappa_j undetermined
        let mesh = ellipse(8, 1);
        let g = StepGeometry::new(&mesh).unwrap();
        let mut sys = assemble_bgn_system(&mesh, &g, &[Vec2::ZERO; 8], 0.1).unwrap();
        let mut m = SparseMatrix::new(sys.size());
        for i in 0..sys.size() {
            for &(c, v) in sys.matrix.row(i) {
                m.add(i, c, if i == 3 * 2 + 2 { 0.0 } else { v });
            }
        }
        sys.matrix = m;
        assert!(matches!(
            solve_linear(&sys),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn symmetric_polygon_has_zero_stabilization() {
        // at the vertices of a regular polygon K x is parallel to nbar, and
        // for a circle with k = 2 the midpoints have |nbar| = 1
        let mesh = CurveMesh::interpolate(&Circle::unit(), 9, 1).unwrap();
        let g = StepGeometry::new(&mesh).unwrap();
        for s in stabilization_rhs(&mesh, &g.stiffness, &g.normals) {
            // |nbar| < 1 at vertices, so the projector leaves (1-|nbar|^2) (Kx)
            assert!(s.norm() > 0.0);
        }
        let mesh2 = CurveMesh::interpolate(&Circle::unit(), 9, 2).unwrap();
        let g2 = StepGeometry::new(&mesh2).unwrap();
        let s2 = stabilization_rhs(&mesh2, &g2.stiffness, &g2.normals);
        for e in 0..9 {
            let j = mesh2.node_index(e, 1);
            assert!(s2[j].norm() < 1e-12, "{:?}", s2[j]);
        }
    }

    #[test]
    fn stabilization_projector_degenerates_to_identity() {
        let mesh = ellipse(8, 2);
        let mut g = StepGeometry::new(&mesh).unwrap();
        g.normals.0[5] = Vec2::ZERO;
        let kx = g.stiffness.apply_vec2(mesh.positions());
        let s = stabilization_rhs(&mesh, &g.stiffness, &g.normals);
        assert_eq!(s[5], kx[5]);
    }

    #[test]
    fn stabilization_is_translation_invariant() {
        let mesh = ellipse(8, 3);
        let moved = mesh.translated(Vec2::new(2.0, -1.0)).unwrap();
        let g = StepGeometry::new(&mesh).unwrap();
        let gm = StepGeometry::new(&moved).unwrap();
        let a = stabilization_rhs(&mesh, &g.stiffness, &g.normals);
        let b = stabilization_rhs(&moved, &gm.stiffness, &gm.normals);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.distance(*y) < 1e-11);
        }
    }

    #[test]
    fn zero_field_is_stationary() {
        for k in 1..=3 {
            let mesh = ellipse(12, k);
            let out = bgn_step(&mesh, &VelocityField::Zero, 0.0, 0.1).unwrap();
            for (a, b) in out.mesh.positions().iter().zip(mesh.positions()) {
                assert!(a.distance(*b) <= 1e-10);
            }
            // the momentum rows force m_j kappa_j nbar_j = nbar_j (nbar_j . (K id)_j)
            let g = StepGeometry::new(&mesh).unwrap();
            let kappa = g.discrete_curvature(&mesh).unwrap();
            let mags = g.normals.magnitudes();
            for ((a, b), n) in out.curvature.iter().zip(&kappa).zip(&mags) {
                let expected = b * n * n;
                assert_abs_diff_eq!(a, &expected, epsilon = 1e-10 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_field_translates() {
        let c = Vec2::new(0.3, -0.1);
        let tau = 0.25;
        let mesh = ellipse(12, 2);
        let out = bgn_step(&mesh, &VelocityField::Constant(c), 0.0, tau).unwrap();
        for (a, b) in out.mesh.positions().iter().zip(mesh.positions()) {
            assert!(a.distance(*b + tau * c) <= 1e-10);
        }
        let lag = lagrangian_step(&mesh, &VelocityField::Constant(c), 0.0, tau).unwrap();
        for (a, b) in out.mesh.positions().iter().zip(lag.positions()) {
            assert!(a.distance(*b) <= 1e-10);
        }
    }

    #[test]
    fn radial_step_satisfies_nodal_constraint() {
        let mesh = ellipse(16, 1);
        let out = bgn_step(&mesh, &VelocityField::EllipseRadial, 0.0, 1.0 / 16.0).unwrap();
        assert!(
            out.constraint_residual <= 1e-10,
            "{}",
            out.constraint_residual
        );
    }

    #[test]
    fn lagrangian_zero_field_is_identity() {
        let mesh = ellipse(8, 2);
        let out = lagrangian_step(&mesh, &VelocityField::Zero, 0.0, 0.3).unwrap();
        assert_eq!(out.positions(), mesh.positions());
    }

    #[test]
    fn stepper_tokens() {
        assert_eq!("bgn".parse::<Stepper>().unwrap(), Stepper::Bgn);
        assert_eq!(
            "lagrangian".parse::<Stepper>().unwrap(),
            Stepper::Lagrangian
        );
        assert!("euler".parse::<Stepper>().is_err());
        assert_eq!(Stepper::Lagrangian.to_string(), "lagrangian");
    }
}
