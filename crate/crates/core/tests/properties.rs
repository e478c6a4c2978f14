//! Randomized invariants of the discretization.

use std::f64::consts::PI;

use bgnflow::diagnostics::fitted_order;
use bgnflow::geometry::{averaged_normal, junction_normals, lumped_weights};
use bgnflow::quadrature::{gauss_legendre, gauss_lobatto, lagrange_basis, ReferenceElement};
use bgnflow::solver::{bgn_step, StepGeometry};
use bgnflow::stiffness::StiffnessMatrix;
use bgnflow::{Circle, ClosedCurve, CurveMesh, Ellipse, Vec2, VelocityField};
use proptest::prelude::*;

/// Smooth star-shaped closed curve `r(theta) = 1 + a cos(m theta + phase)`.
fn star(a: f64, m: u32, phase: f64) -> impl Fn(f64) -> Vec2 {
    move |s: f64| {
        let theta = 2.0 * PI * s;
        Vec2::from_polar(1.0 + a * (m as f64 * theta + phase).cos(), theta)
    }
}

fn exact_monomial_integral(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        2.0 / (p as f64 + 1.0)
    } else {
        0.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_rules_integrate_random_polynomials(
        n in 1usize..=10,
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..=20),
    ) {
        let rule = gauss_legendre(n).unwrap();
        let deg = coeffs.len().min(2 * n);
        let poly = |x: f64| coeffs[..deg].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs[..deg].iter().enumerate().map(|(p, c)| c * exact_monomial_integral(p)).sum();
        prop_assert!((rule.integrate(poly) - exact).abs() <= 1e-13 * (1.0 + exact.abs()));
    }

    #[test]
    fn lobatto_rules_integrate_random_polynomials(
        k in 1usize..=7,
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..=14),
    ) {
        let rule = gauss_lobatto(k).unwrap();
        let deg = coeffs.len().min(2 * k);
        let poly = |x: f64| coeffs[..deg].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs[..deg].iter().enumerate().map(|(p, c)| c * exact_monomial_integral(p)).sum();
        prop_assert!((rule.integrate(poly) - exact).abs() <= 1e-13 * (1.0 + exact.abs()));
    }

    #[test]
    fn basis_reproduces_polynomials_of_its_degree(
        k in 1usize..=4,
        coeffs in prop::collection::vec(-2.0f64..2.0, 5),
        x in -1.0f64..1.0,
    ) {
        let nodes = gauss_lobatto(k).unwrap().nodes;
        let poly = |t: f64| coeffs[..=k].iter().rev().fold(0.0, |acc, c| acc * t + c);
        let phi = lagrange_basis(&nodes, x);
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
        let interp: f64 = phi.iter().zip(&nodes).map(|(p, &t)| p * poly(t)).sum();
        prop_assert!((interp - poly(x)).abs() <= 1e-12);
    }

    #[test]
    fn averaged_normal_is_bounded_and_rotation_equivariant(
        k in 1usize..=3,
        elements in 6usize..=24,
        a in 0.0f64..0.3,
        m in 2u32..=5,
        phase in 0.0f64..PI,
        angle in -PI..PI,
    ) {
        let mesh = CurveMesh::interpolate(&star(a, m, phase), elements, k).unwrap();
        let nb = averaged_normal(&mesh, &lumped_weights(&mesh));
        for n in &nb.0 {
            prop_assert!(n.norm() <= 1.0 + 1e-12);
        }
        let turned = mesh.rotated(angle).unwrap();
        let nb_turned = averaged_normal(&turned, &lumped_weights(&turned));
        for (n, r) in nb.0.iter().zip(&nb_turned.0) {
            prop_assert!(n.rotate(angle).distance(*r) <= 1e-12);
        }
    }

    #[test]
    fn geometry_is_translation_invariant(
        k in 1usize..=3,
        elements in 6usize..=20,
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
    ) {
        let mesh = CurveMesh::interpolate(&Ellipse::new(1.0, 0.6), elements, k).unwrap();
        let moved = mesh.translated(Vec2::new(dx, dy)).unwrap();
        let (g, gm) = (StepGeometry::new(&mesh).unwrap(), StepGeometry::new(&moved).unwrap());
        for (a, b) in g.weights.0.iter().zip(&gm.weights.0) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let (ka, kb) = (g.discrete_curvature(&mesh).unwrap(), gm.discrete_curvature(&moved).unwrap());
        for (a, b) in ka.iter().zip(&kb) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bgn_step_is_rotation_equivariant(
        k in 1usize..=3,
        angle in -PI..PI,
        omega in -2.0f64..2.0,
        tau in 0.01f64..0.2,
    ) {
        let mesh = CurveMesh::interpolate(&Ellipse::new(1.0, 0.5), 12, k).unwrap();
        let field = VelocityField::Rotation(omega);
        let a = bgn_step(&mesh, &field, 0.0, tau).unwrap();
        let b = bgn_step(&mesh.rotated(angle).unwrap(), &field, 0.0, tau).unwrap();
        for (p, q) in a.mesh.positions().iter().zip(b.mesh.positions()) {
            prop_assert!(p.rotate(angle).distance(*q) <= 1e-10);
        }
        prop_assert!(b.constraint_residual <= 1e-10);
    }

    #[test]
    fn constant_field_step_is_a_translation(
        k in 1usize..=3,
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        tau in 0.001f64..0.5,
    ) {
        let c = Vec2::new(cx, cy);
        let mesh = CurveMesh::interpolate(&star(0.2, 3, 0.4), 15, k).unwrap();
        let out = bgn_step(&mesh, &VelocityField::Constant(c), 0.0, tau).unwrap();
        for (p, q) in out.mesh.positions().iter().zip(mesh.positions()) {
            prop_assert!(p.distance(*q + tau * c) <= 1e-10);
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums_and_psd(
        k in 1usize..=3,
        elements in 4usize..=16,
        a in 0.0f64..0.3,
        v in prop::collection::vec(-1.0f64..1.0, 48),
    ) {
        let mesh = CurveMesh::interpolate(&star(a, 3, 0.0), elements, k).unwrap();
        let kmat = StiffnessMatrix::assemble(&mesh).unwrap();
        let n = kmat.size();
        for j in 0..n {
            let scale = kmat.get(j, j);
            prop_assert!(scale > 0.0);
            prop_assert!(kmat.row(j).map(|(_, x)| x).sum::<f64>().abs() <= 1e-12 * scale);
            for (l, x) in kmat.row(j) {
                prop_assert!((x - kmat.get(l, j)).abs() <= 1e-13 * scale);
            }
        }
        let x = &v[..n];
        let kx = kmat.apply(x);
        let energy: f64 = kx.iter().zip(x).map(|(a, b)| a * b).sum();
        prop_assert!(energy >= -1e-12);
    }

    #[test]
    fn lumped_norm_is_equivalent_to_l2(
        k in 1usize..=3,
        f in prop::collection::vec(-1.0f64..1.0, 96),
    ) {
        let mesh = CurveMesh::interpolate(&Circle::unit(), 32, k).unwrap();
        let n = mesh.node_count();
        let f = &f[..n];
        let lumped = lumped_weights(&mesh).inner(f, f).sqrt();
        // consistent L2 norm of the finite element function on the mesh
        let re = mesh.reference();
        let mut l2 = 0.0;
        for e in 0..mesh.element_count() {
            for q in 0..re.gauss().len() {
                let val: f64 = mesh.element_node_indices(e).zip(&re.basis_at_quad()[q]).map(|(j, p)| p * f[j]).sum();
                l2 += re.gauss().weights[q] * val * val * mesh.tangent_at_quad(e, q).norm();
            }
        }
        let ratio = lumped / l2.sqrt();
        prop_assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn junction_normal_deficit_is_bounded_by_squared_jump() {
    for &elements in &[8usize, 16, 32] {
        for k in 1..=3 {
            let mesh = CurveMesh::interpolate(&Circle::unit(), elements, k).unwrap();
            let nb = averaged_normal(&mesh, &lumped_weights(&mesh));
            for e in 0..elements {
                let (minus, plus) = junction_normals(&mesh, e).unwrap();
                let jump = minus.distance(plus);
                let deficit = 1.0 - nb[e * k].norm();
                assert!(
                    deficit <= jump * jump + 1e-15,
                    "J={elements} k={k} e={e}: {deficit} > {}",
                    jump * jump
                );
            }
        }
    }
}

#[test]
fn interior_nodes_have_unit_averaged_normal() {
    for k in 2..=3 {
        let mesh = CurveMesh::interpolate(&star(0.25, 4, 0.1), 14, k).unwrap();
        let nb = averaged_normal(&mesh, &lumped_weights(&mesh));
        for j in (0..mesh.node_count()).filter(|j| j % k != 0) {
            assert!((nb[j].norm() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn circle_curvature_converges() {
    let js = [16usize, 32, 64, 128];
    for k in 1..=3 {
        let errs: Vec<f64> = js
            .iter()
            .map(|&j| {
                let mesh = CurveMesh::interpolate(&Circle::unit(), j, k).unwrap();
                let kappa = StepGeometry::new(&mesh)
                    .unwrap()
                    .discrete_curvature(&mesh)
                    .unwrap();
                kappa.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max)
            })
            .collect();
        let hs: Vec<f64> = js.iter().map(|&j| 1.0 / j as f64).collect();
        let order = fitted_order(&errs, &hs).unwrap();
        assert!(
            order >= k as f64 - 0.5,
            "k={k}: order {order}, errors {errs:?}"
        );
    }
}

#[test]
fn interpolation_error_converges_at_optimal_order() {
    let curve = Ellipse::three_to_one();
    let js = [8usize, 16, 32, 64];
    for k in 1..=3 {
        let re = ReferenceElement::new(k).unwrap();
        let errs: Vec<f64> = js
            .iter()
            .map(|&j| {
                let mesh = CurveMesh::interpolate(&curve, j, k).unwrap();
                // mid-points between consecutive Lobatto nodes, compared with the
                // curve at the affinely mapped parameter
                let nodes = &re.lobatto().nodes;
                let mut worst = 0.0f64;
                for e in 0..j {
                    for w in nodes.windows(2) {
                        let xi = 0.5 * (w[0] + w[1]);
                        let s = (e as f64 + 0.5 * (xi + 1.0)) / j as f64;
                        worst = worst.max(mesh.point(e, xi).distance(curve.point(s)));
                    }
                }
                worst
            })
            .collect();
        let hs: Vec<f64> = js.iter().map(|&j| 1.0 / j as f64).collect();
        let order = fitted_order(&errs, &hs).unwrap();
        assert!(
            order >= k as f64 + 0.7,
            "k={k}: order {order}, errors {errs:?}"
        );
    }
}

#[test]
fn inscribed_polygon_perimeter() {
    for j in [3usize, 7, 16, 100] {
        let mesh = CurveMesh::interpolate(&Circle::unit(), j, 1).unwrap();
        let expected = 2.0 * j as f64 * (PI / j as f64).sin();
        assert!((mesh.perimeter() - expected).abs() <= 1e-12);
    }
}

#[test]
fn nodes_lie_on_the_interpolated_curve() {
    let curve = Ellipse::three_to_one();
    for k in 1..=3 {
        let mesh = CurveMesh::interpolate(&curve, 10, k).unwrap();
        let flow = bgnflow::EllipseRadialFlow.at(0.0);
        for &p in mesh.positions() {
            assert!(flow.closest_point(p).unwrap().distance <= 1e-13);
        }
    }
}
