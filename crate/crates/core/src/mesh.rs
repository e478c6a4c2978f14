//! Closed piecewise-polynomial curves.
//!
//! Element `e` is the image of its frozen flat reference segment under a
//! degree-`k` map `F_e`, written in the reference coordinate `xi in [-1, 1]`
//! with the Lagrange basis nodal at the Gauss–Lobatto points. Junction nodes
//! are shared, so a mesh of `J` elements has `N = J k` nodes and the last
//! node of element `e` is the first node of element `e + 1 (mod J)`.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::Vec2;
use crate::quadrature::ReferenceElement;

/// Relative threshold on `|F'|` (w.r.t. the reference segment length) below
/// which an element counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// A smooth closed curve parameterized over `[0, 1]`.
pub trait ClosedCurve {
    fn point(&self, s: f64) -> Vec2;
}

impl<F: Fn(f64) -> Vec2> ClosedCurve for F {
    fn point(&self, s: f64) -> Vec2 {
        self(s)
    }
}

/// Counterclockwise circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn unit() -> Self {
        Circle {
            center: Vec2::ZERO,
            radius: 1.0,
        }
    }

    pub fn new(center: Vec2, radius: f64) -> Self {
        Circle { center, radius }
    }
}

impl ClosedCurve for Circle {
    fn point(&self, s: f64) -> Vec2 {
        self.center + Vec2::from_polar(self.radius, TAU * s)
    }
}

/// Axis-aligned ellipse `(a cos 2 pi s, b sin 2 pi s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Self {
        Ellipse { a, b }
    }

    /// The 3:1 ellipse `(cos 2 pi s, sin(2 pi s) / 3)` that the radial test
    /// field carries onto the unit circle.
    pub fn three_to_one() -> Self {
        Ellipse::new(1.0, 1.0 / 3.0)
    }
}

impl ClosedCurve for Ellipse {
    fn point(&self, s: f64) -> Vec2 {
        let (sn, cs) = (TAU * s).sin_cos();
        Vec2::new(self.a * cs, self.b * sn)
    }
}

/// Per-node values on a mesh.
pub type ScalarField = Vec<f64>;
pub type VectorField = Vec<Vec2>;

#[derive(Debug, Clone)]
pub struct CurveMesh {
    reference: Arc<ReferenceElement>,
    positions: Vec<Vec2>,
    ref_lengths: Arc<[f64]>,
}

impl CurveMesh {
    /// Interpolates `curve` with `elements` elements of degree `degree`.
    ///
    /// Element `e` covers parameters `[e/J, (e+1)/J]`; its nodes are the
    /// images of the Gauss–Lobatto points under the affine map onto that
    /// interval, so every node lies on the curve.
    pub fn interpolate(curve: &impl ClosedCurve, elements: usize, degree: usize) -> Result<Self> {
        let reference = Arc::new(ReferenceElement::new(degree)?);
        Self::interpolate_with(curve, elements, reference)
    }

    pub fn interpolate_with(
        curve: &impl ClosedCurve,
        elements: usize,
        reference: Arc<ReferenceElement>,
    ) -> Result<Self> {
        if elements < 3 {
            return Err(Error::InvalidArgument(format!(
                "a closed mesh needs at least 3 elements, got {elements}"
            )));
        }
        let k = reference.degree();
        let h = 1.0 / elements as f64;
        let mut positions = Vec::with_capacity(elements * k);
        for e in 0..elements {
            // the last Gauss–Lobatto node is the next element's first node
            for &xi in &reference.lobatto().nodes[..k] {
                let s = (e as f64 + 0.5 * (xi + 1.0)) * h;
                positions.push(curve.point(s));
            }
        }
        Self::from_positions_with(reference, positions)
    }

    /// Builds a mesh from nodal positions, freezing the reference segments as
    /// the chords between consecutive element endpoints.
    pub fn from_positions(degree: usize, positions: Vec<Vec2>) -> Result<Self> {
        let reference = Arc::new(ReferenceElement::new(degree)?);
        Self::from_positions_with(reference, positions)
    }

    pub fn from_positions_with(
        reference: Arc<ReferenceElement>,
        positions: Vec<Vec2>,
    ) -> Result<Self> {
        let k = reference.degree();
        let n = positions.len();
        if n == 0 || !n.is_multiple_of(k) || n / k < 3 {
            return Err(Error::InvalidArgument(format!(
                "{n} nodes do not form a closed degree-{k} mesh of at least 3 elements"
            )));
        }
        let elements = n / k;
        let ref_lengths: Vec<f64> = (0..elements)
            .map(|e| positions[e * k].distance(positions[(e * k + k) % n]))
            .collect();
        if let Some(e) = ref_lengths.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::InvalidGeometry(format!(
                "element {e} has coincident endpoints"
            )));
        }
        let mesh = CurveMesh {
            reference,
            positions,
            ref_lengths: ref_lengths.into(),
        };
        mesh.check_jacobians()?;
        Ok(mesh)
    }

    /// Same connectivity and frozen reference segments, new positions.
    pub fn with_positions(&self, positions: Vec<Vec2>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        let mesh = CurveMesh {
            reference: Arc::clone(&self.reference),
            positions,
            ref_lengths: Arc::clone(&self.ref_lengths),
        };
        mesh.check_jacobians()?;
        Ok(mesh)
    }

    pub fn translated(&self, offset: Vec2) -> Result<Self> {
        self.with_positions(self.positions.iter().map(|&p| p + offset).collect())
    }

    pub fn rotated(&self, angle: f64) -> Result<Self> {
        self.with_positions(self.positions.iter().map(|p| p.rotate(angle)).collect())
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn reference_arc(&self) -> &Arc<ReferenceElement> {
        &self.reference
    }

    pub fn degree(&self) -> usize {
        self.reference.degree()
    }

    pub fn element_count(&self) -> usize {
        self.ref_lengths.len()
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    /// Parameter spacing `1/J` of the initial mesh.
    pub fn h(&self) -> f64 {
        1.0 / self.element_count() as f64
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<Vec2> {
        self.positions
    }

    pub fn ref_lengths(&self) -> &[f64] {
        &self.ref_lengths
    }

    /// Global index of local node `a` (`0..=k`) of element `e`.
    pub fn node_index(&self, e: usize, a: usize) -> usize {
        (e * self.degree() + a) % self.node_count()
    }

    pub fn element_node_indices(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=self.degree()).map(move |a| self.node_index(e, a))
    }

    fn combine(&self, e: usize, coeffs: &[f64]) -> Vec2 {
        self.element_node_indices(e)
            .zip(coeffs)
            .fold(Vec2::ZERO, |acc, (j, &c)| acc + c * self.positions[j])
    }

    /// `F_e(xi)`.
    pub fn point(&self, e: usize, xi: f64) -> Vec2 {
        self.combine(e, &self.reference.basis(xi))
    }

    /// `dF_e/dxi` at an arbitrary reference coordinate.
    pub fn tangent(&self, e: usize, xi: f64) -> Vec2 {
        self.combine(e, &self.reference.basis_deriv(xi))
    }

    /// `dF_e/dxi` at Gauss–Legendre point `q`.
    pub fn tangent_at_quad(&self, e: usize, q: usize) -> Vec2 {
        self.combine(e, &self.reference.deriv_at_quad()[q])
    }

    /// `dF_e/dxi` at local Gauss–Lobatto node `a`.
    pub fn tangent_at_node(&self, e: usize, a: usize) -> Vec2 {
        self.combine(e, &self.reference.deriv_at_nodes()[a])
    }

    /// Verifies `|F_e'| > 0` at every quadrature point and every node.
    pub fn check_jacobians(&self) -> Result<()> {
        let re = &self.reference;
        for e in 0..self.element_count() {
            let threshold = DEGENERACY_THRESHOLD * self.ref_lengths[e];
            let quad =
                (0..re.gauss().len()).map(|q| (re.gauss().nodes[q], self.tangent_at_quad(e, q)));
            let nodal =
                (0..re.local_nodes()).map(|a| (re.lobatto().nodes[a], self.tangent_at_node(e, a)));
            for (xi, t) in quad.chain(nodal) {
                let jacobian = t.norm();
                if !(jacobian > threshold) {
                    return Err(Error::MeshDegeneration {
                        element: e,
                        xi,
                        jacobian,
                    });
                }
            }
        }
        Ok(())
    }

    /// Arc length of element `e` by Gauss–Legendre quadrature of `|F_e'|`.
    pub fn element_arclength(&self, e: usize) -> f64 {
        let w = &self.reference.gauss().weights;
        (0..w.len())
            .map(|q| w[q] * self.tangent_at_quad(e, q).norm())
            .sum()
    }

    pub fn element_arclengths(&self) -> Vec<f64> {
        (0..self.element_count())
            .map(|e| self.element_arclength(e))
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.element_arclengths().iter().sum()
    }

    /// `h_max / h_min` over element arc lengths.
    pub fn mesh_ratio(&self) -> f64 {
        length_ratio(&self.element_arclengths())
    }
}

/// Ratio of the largest to the smallest entry.
pub fn length_ratio(lengths: &[f64]) -> f64 {
    let (lo, hi) = lengths
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_close(a: Vec2, b: Vec2, tol: f64) {
        assert!(a.distance(b) <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn unit_circle_four_linear_elements_is_a_square() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 4, 1).unwrap();
        let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, &q) in mesh.positions().iter().zip(&expected) {
            assert_close(*p, Vec2::new(q.0, q.1), 1e-15);
        }
    }

    #[test]
    fn ellipse_nodes_at_quarter_parameters() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 16, 1).unwrap();
        assert_close(mesh.positions()[0], Vec2::new(1.0, 0.0), 1e-15);
        assert_close(mesh.positions()[4], Vec2::new(0.0, 1.0 / 3.0), 1e-15);
    }

    #[test]
    fn quadratic_midpoint_node_on_circle() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 8, 2).unwrap();
        assert_close(mesh.positions()[1], Vec2::from_polar(1.0, PI / 8.0), 1e-15);
    }

    #[test]
    fn connectivity_is_cyclic() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 5, 3).unwrap();
        assert_eq!(mesh.node_count(), 15);
        for e in 0..5 {
            assert_eq!(mesh.node_index(e, 3), mesh.node_index((e + 1) % 5, 0));
        }
        let mut seen = [0; 15];
        for e in 0..5 {
            for j in mesh.element_node_indices(e).take(3) {
                seen[j] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn too_few_elements_rejected() {
        assert!(CurveMesh::interpolate(&Circle::unit(), 2, 1).is_err());
    }

    #[test]
    fn repeated_endpoints_rejected() {
        let constant = |_s: f64| Vec2::new(1.0, 2.0);
        assert!(matches!(
            CurveMesh::interpolate(&constant, 4, 1),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn straight_element_arclength_is_chord() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(3.0, 4.0),
        ];
        let mesh = CurveMesh::from_positions(1, pts).unwrap();
        assert_abs_diff_eq!(mesh.element_arclength(0), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mesh.element_arclength(1), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mesh.element_arclength(2), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn quarter_circle_cubic_element_arclength() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 4, 3).unwrap();
        // independent check: composite midpoint rule on the same interpolant
        let n = 20_000;
        let fine: f64 = (0..n)
            .map(|i| {
                let xi = -1.0 + (2 * i + 1) as f64 / n as f64;
                mesh.tangent(0, xi).norm() * 2.0 / n as f64
            })
            .sum();
        let length = mesh.element_arclength(0);
        assert_abs_diff_eq!(length, fine, epsilon = 1e-8);
        // the cubic interpolant itself differs from the true arc by ~6e-5
        assert!((length - FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn equispaced_circle_ratio_is_one() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 24, 2).unwrap();
        assert_abs_diff_eq!(mesh.mesh_ratio(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ellipse_ratio_matches_speed_extrema() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 64, 1).unwrap();
        let ratio = mesh.mesh_ratio();
        assert!((ratio - 3.0).abs() <= 0.15, "ratio {ratio}");
    }

    #[test]
    fn pathological_length_ratio() {
        assert_abs_diff_eq!(length_ratio(&[2.0, 1.0]), 2.0);
    }

    #[test]
    fn inscribed_polygon_perimeter() {
        for j in [3, 4, 7, 16, 100] {
            let mesh = CurveMesh::interpolate(&Circle::unit(), j, 1).unwrap();
            let exact = 2.0 * j as f64 * (PI / j as f64).sin();
            assert_abs_diff_eq!(mesh.perimeter(), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn update_with_same_positions_is_identity() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 8, 2).unwrap();
        let same = mesh.with_positions(mesh.positions().to_vec()).unwrap();
        assert_eq!(same.positions(), mesh.positions());
        assert_eq!(same.ref_lengths(), mesh.ref_lengths());
    }

    #[test]
    fn translation_preserves_arclengths() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 8, 2).unwrap();
        let moved = mesh.translated(Vec2::new(1.0, 0.0)).unwrap();
        for (a, b) in mesh
            .element_arclengths()
            .iter()
            .zip(moved.element_arclengths())
        {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_eq!(moved.ref_lengths(), mesh.ref_lengths());
    }

    #[test]
    fn collapsed_element_is_degenerate() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 6, 1).unwrap();
        let mut pts = mesh.positions().to_vec();
        pts[1] = pts[0];
        assert!(matches!(
            mesh.with_positions(pts),
            Err(Error::MeshDegeneration { element: 0, .. })
        ));
    }

    #[test]
    fn wrong_length_update_rejected() {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 6, 1).unwrap();
        assert!(mesh.with_positions(vec![Vec2::ZERO; 5]).is_err());
    }
}
