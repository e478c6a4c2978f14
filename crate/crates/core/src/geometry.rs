//! Piecewise normals, lumped nodal weights, the averaged normal and the
//! discrete curvature.
//!
//! Curves are stored counterclockwise and the normal is the tangent rotated
//! by -90 degrees, so it points outward and convex curves get positive
//! curvature.

use crate::error::{Error, Result};
use crate::mesh::{CurveMesh, ScalarField};
use crate::point::Vec2;
use crate::stiffness::StiffnessMatrix;

/// Magnitude below which an averaged normal is treated as zero.
pub const NORMAL_EPSILON: f64 = 1e-12;

/// Unit normal of element `e` at reference coordinate `xi`.
pub fn piecewise_normal(mesh: &CurveMesh, e: usize, xi: f64) -> Result<Vec2> {
    let t = mesh.tangent(e, xi);
    let len = t.norm();
    if !(len > 0.0) {
        return Err(Error::MeshDegeneration {
            element: e,
            xi,
            jacobian: len,
        });
    }
    Ok(t.rotate_cw() * (1.0 / len))
}

/// One-sided normals `(n(p-), n(p+))` at the junction node that starts
/// element `e`: the left value comes from element `e - 1` at `xi = 1`, the
/// right value from element `e` at `xi = -1`.
pub fn junction_normals(mesh: &CurveMesh, e: usize) -> Result<(Vec2, Vec2)> {
    let j = mesh.element_count();
    let prev = (e + j - 1) % j;
    Ok((
        piecewise_normal(mesh, prev, 1.0)?,
        piecewise_normal(mesh, e, -1.0)?,
    ))
}

/// Diagonal of the Gauss–Lobatto lumped mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedWeights(pub Vec<f64>);

impl LumpedWeights {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Lumped inner product of two scalar nodal fields.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(f)
            .zip(g)
            .map(|((m, a), b)| m * a * b)
            .sum()
    }
}

impl std::ops::Index<usize> for LumpedWeights {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// `m_j = sum_K w_a |grad F_K(xi_a)| |K_f| / 2` over the elements touching node
/// `j`, where `a` is the local Gauss–Lobatto index of `j` in `K`.
pub fn lumped_weights(mesh: &CurveMesh) -> LumpedWeights {
    let mut m = vec![0.0; mesh.node_count()];
    let weights = &mesh.reference().lobatto().weights;
    for e in 0..mesh.element_count() {
        // |grad_{K_f} F| = |dF/dxi| * 2/|K_f|, so the flat-segment length cancels
        for (a, j) in mesh.element_node_indices(e).enumerate() {
            m[j] += weights[a] * mesh.tangent_at_node(e, a).norm();
        }
    }
    LumpedWeights(m)
}

/// Lumped L2 projection of the piecewise normal; `|n_j| <= 1`, not
/// renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedNormal(pub Vec<Vec2>);

impl AveragedNormal {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.0.iter().map(|n| n.norm()).collect()
    }
}

impl std::ops::Index<usize> for AveragedNormal {
    type Output = Vec2;
    fn index(&self, j: usize) -> &Vec2 {
        &self.0[j]
    }
}

/// Solves the lumped projection `int^h nbar . phi = int^h n . phi` nodally.
///
/// At element-interior nodes this is the piecewise normal; at a junction it
/// is the average of the two one-sided normals weighted by their lumped
/// contributions.
pub fn averaged_normal(mesh: &CurveMesh, mw: &LumpedWeights) -> AveragedNormal {
    let mut acc = vec![Vec2::ZERO; mesh.node_count()];
    let weights = &mesh.reference().lobatto().weights;
    for e in 0..mesh.element_count() {
        for (a, j) in mesh.element_node_indices(e).enumerate() {
            // w |F'| n = w * rot(F')
            acc[j] += weights[a] * mesh.tangent_at_node(e, a).rotate_cw();
        }
    }
    AveragedNormal(
        acc.into_iter()
            .zip(&mw.0)
            .map(|(v, &m)| v * (1.0 / m))
            .collect(),
    )
}

/// `kappa_j = nbar_j . (K id)_j / (m_j |nbar_j|^2)`: the multiplier that makes
/// `X = id` satisfy the momentum rows of the scheme exactly.
pub fn discrete_curvature(
    mesh: &CurveMesh,
    stiffness: &StiffnessMatrix,
    mw: &LumpedWeights,
    nb: &AveragedNormal,
) -> Result<ScalarField> {
    let k_id = stiffness.apply_vec2(mesh.positions());
    k_id.iter()
        .zip(&nb.0)
        .zip(&mw.0)
        .enumerate()
        .map(|(j, ((kx, n), m))| {
            let n2 = n.norm_squared();
            if n2.sqrt() <= NORMAL_EPSILON {
                return Err(Error::DegenerateNormal {
                    node: j,
                    magnitude: n2.sqrt(),
                });
            }
            Ok(n.dot(*kx) / (m * n2))
        })
        .collect()
}
