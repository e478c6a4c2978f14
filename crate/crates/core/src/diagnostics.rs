//! Projection error, convergence orders and mesh-quality series.

use crate::error::{Error, Result};
use crate::flows::{EllipseRadialFlow, ExactCurve};
use crate::mesh::CurveMesh;
use crate::point::Vec2;
use crate::quadrature::ReferenceElement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub t: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_max: f64,
    pub mesh_ratio: f64,
}

/// Projection error of `mesh` against the exact flow at time `t`.
///
/// Every node is projected onto `Gamma(t)`; the projected nodes span the
/// interpolated curve (same connectivity and degree), on which the error
/// function with nodal values `x_j - a(x_j)` is measured in L2 and the H1
/// seminorm.
pub fn projection_error(mesh: &CurveMesh, flow: &EllipseRadialFlow, t: f64) -> Result<ErrorReport> {
    projection_error_on(mesh, &flow.at(t), None)
}

/// As [`projection_error`], with an explicit exact curve and an optional
/// Gauss–Legendre order for the norms (default: the mesh's rule).
pub fn projection_error_on(
    mesh: &CurveMesh,
    curve: &ExactCurve,
    quadrature_points: Option<usize>,
) -> Result<ErrorReport> {
    let mut feet = Vec::with_capacity(mesh.node_count());
    let mut nodal_error = Vec::with_capacity(mesh.node_count());
    let mut err_max = 0.0f64;
    for &x in mesh.positions() {
        let proj = curve.closest_point(x)?;
        err_max = err_max.max(proj.distance);
        feet.push(proj.foot);
        nodal_error.push(x - proj.foot);
    }
    let projected = mesh.with_positions(feet)?;
    let owned;
    let re: &ReferenceElement = match quadrature_points {
        Some(n_q) => {
            owned = ReferenceElement::with_quadrature(mesh.degree(), n_q)?;
            &owned
        }
        None => projected.reference(),
    };
    let (mut l2, mut h1) = (0.0, 0.0);
    let weights = &re.gauss().weights;
    let mut local = vec![Vec2::ZERO; mesh.degree() + 1];
    for e in 0..projected.element_count() {
        for (slot, j) in local.iter_mut().zip(projected.element_node_indices(e)) {
            *slot = nodal_error[j];
        }
        for q in 0..weights.len() {
            let psi = &re.basis_at_quad()[q];
            let dpsi = &re.deriv_at_quad()[q];
            let mut tangent = Vec2::ZERO;
            for (a, j) in projected.element_node_indices(e).enumerate() {
                tangent += dpsi[a] * projected.positions()[j];
            }
            let jac = tangent.norm();
            if !(jac > 0.0) {
                return Err(Error::MeshDegeneration {
                    element: e,
                    xi: re.gauss().nodes[q],
                    jacobian: jac,
                });
            }
            let (val, der) = local
                .iter()
                .enumerate()
                .fold((Vec2::ZERO, Vec2::ZERO), |(v, d), (a, &ea)| {
                    (v + psi[a] * ea, d + dpsi[a] * ea)
                });
            l2 += weights[q] * val.norm_squared() * jac;
            h1 += weights[q] * der.norm_squared() / jac;
        }
    }
    Ok(ErrorReport {
        t: curve.time(),
        err_l2: l2.sqrt(),
        err_h1: h1.sqrt(),
        err_max,
        mesh_ratio: mesh.mesh_ratio(),
    })
}

/// Observed orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`; `None` where an
/// error is zero and the order is undefined.
pub fn convergence_order(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "need two or more (error, h) pairs of equal length".into(),
        ));
    }
    if hs.iter().any(|&h| !(h > 0.0)) || hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    if errors.iter().any(|&e| e < 0.0 || e.is_nan()) {
        return Err(Error::InvalidArgument("errors must be nonnegative".into()));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] > 0.0 && e[1] > 0.0).then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()))
        .collect())
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(errors: &[f64], hs: &[f64]) -> Option<f64> {
    if errors.len() != hs.len() || errors.len() < 2 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// `(t, h_max / h_min)` for each snapshot of a trajectory.
pub fn track_mesh_quality<'a>(
    trajectory: impl IntoIterator<Item = (f64, &'a CurveMesh)>,
) -> Vec<(f64, f64)> {
    trajectory
        .into_iter()
        .map(|(t, mesh)| (t, mesh.mesh_ratio()))
        .collect()
}
