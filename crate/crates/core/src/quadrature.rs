//! Reference-element data on `[-1, 1]`: Gauss–Lobatto and Gauss–Legendre
//! rules, and the Lagrange basis that is nodal at the Gauss–Lobatto points.
//!
//! Rules are computed by Newton iteration on Legendre polynomials and checked
//! against the moment conditions before they are handed out.

use crate::error::{Error, Result};

const NEWTON_MAX_ITERS: usize = 100;
const MOMENT_TOLERANCE: f64 = 1e-14;

/// Nodes (ascending) and weights of an interpolatory rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Largest moment mismatch `|sum w_i x_i^j - int x^j|` over `j <= degree`.
    pub fn moment_defect(&self, degree: usize) -> f64 {
        (0..=degree)
            .map(|j| {
                let exact = if j % 2 == 0 {
                    2.0 / (j as f64 + 1.0)
                } else {
                    0.0
                };
                (self.integrate(|x| x.powi(j as i32)) - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    fn validated(self, exact_degree: usize) -> Result<Self> {
        let defect = self.moment_defect(exact_degree);
        if defect > MOMENT_TOLERANCE {
            return Err(Error::QuadratureValidation(format!(
                "{}-point rule misses a moment of degree <= {exact_degree} by {defect:e}",
                self.len()
            )));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::QuadratureValidation(
                "non-positive quadrature weight".into(),
            ));
        }
        Ok(self)
    }
}

/// Returns `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `P_n'(x)` for `|x| < 1`.
fn legendre_deriv(n: usize, x: f64) -> f64 {
    let (p, p_prev) = legendre_pair(n, x);
    n as f64 * (x * p - p_prev) / (x * x - 1.0)
}

fn newton(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..NEWTON_MAX_ITERS {
        let (value, slope) = f(x);
        let dx = value / slope;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// `n`-point Gauss–Legendre rule, exact through degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Legendre rule needs at least one point".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let guess = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let x = newton(guess, |x| {
            let (p, _) = legendre_pair(n, x);
            (p, legendre_deriv(n, x))
        });
        let dp = legendre_deriv(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    symmetrize(&mut nodes, &mut weights);
    QuadratureRule { nodes, weights }.validated(2 * n - 1)
}

/// Gauss–Lobatto rule with `k + 1` points (endpoints included), exact through
/// degree `2k - 1`.
pub fn gauss_lobatto(k: usize) -> Result<QuadratureRule> {
    if k == 0 {
        return Err(Error::InvalidDegree(k));
    }
    let scale = (k * (k + 1)) as f64;
    let mut nodes = Vec::with_capacity(k + 1);
    let mut weights = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let x = if i == 0 {
            -1.0
        } else if i == k {
            1.0
        } else {
            // interior nodes are the roots of P_k'
            let guess = -(std::f64::consts::PI * i as f64 / k as f64).cos();
            newton(guess, |x| {
                let (p, _) = legendre_pair(k, x);
                let dp = legendre_deriv(k, x);
                (dp, (2.0 * x * dp - scale * p) / (1.0 - x * x))
            })
        };
        let (p, _) = legendre_pair(k, x);
        nodes.push(x);
        weights.push(2.0 / (scale * p * p));
    }
    symmetrize(&mut nodes, &mut weights);
    QuadratureRule { nodes, weights }.validated(2 * k - 1)
}

/// Enforces exact mirror symmetry of a symmetric rule.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Values of the Lagrange polynomials nodal at `nodes`, evaluated at `x`.
pub fn lagrange_basis(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != i)
                .map(|(_, &xl)| (x - xl) / (nodes[i] - xl))
                .product()
        })
        .collect()
}

/// Derivatives of the Lagrange polynomials nodal at `nodes`, evaluated at `x`.
pub fn lagrange_basis_deriv(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&m| m != i)
                .map(|m| {
                    let rest: f64 = (0..n)
                        .filter(|&l| l != i && l != m)
                        .map(|l| (x - nodes[l]) / (nodes[i] - nodes[l]))
                        .product();
                    rest / (nodes[i] - nodes[m])
                })
                .sum()
        })
        .collect()
}

/// Degree-`k` reference element: Gauss–Lobatto nodes carry the nodal basis and
/// the lumped mass; a Gauss–Legendre rule handles the non-lumped integrals.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    lobatto: QuadratureRule,
    gauss: QuadratureRule,
    /// `basis_at_quad[q][i] = psi_i(xi_q)`.
    basis_at_quad: Vec<Vec<f64>>,
    /// `deriv_at_quad[q][i] = psi_i'(xi_q)`.
    deriv_at_quad: Vec<Vec<f64>>,
    /// `deriv_at_nodes[a][i] = psi_i'(x_a)` at the Gauss–Lobatto nodes.
    deriv_at_nodes: Vec<Vec<f64>>,
}

impl ReferenceElement {
    /// Default Gauss–Legendre order for degree `k`.
    pub fn default_quadrature_points(k: usize) -> usize {
        2 * k + 2
    }

    pub fn new(k: usize) -> Result<Self> {
        Self::with_quadrature(k, Self::default_quadrature_points(k))
    }

    pub fn with_quadrature(k: usize, n_q: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDegree(k));
        }
        if n_q < k + 1 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {n_q} too low for degree {k} (need >= {})",
                k + 1
            )));
        }
        let lobatto = gauss_lobatto(k)?;
        let gauss = gauss_legendre(n_q)?;
        let table = |f: fn(&[f64], f64) -> Vec<f64>, at: &[f64]| {
            at.iter().map(|&x| f(&lobatto.nodes, x)).collect::<Vec<_>>()
        };
        let basis_at_quad = table(lagrange_basis, &gauss.nodes);
        let deriv_at_quad = table(lagrange_basis_deriv, &gauss.nodes);
        let deriv_at_nodes = table(lagrange_basis_deriv, &lobatto.nodes);
        Ok(ReferenceElement {
            degree: k,
            lobatto,
            gauss,
            basis_at_quad,
            deriv_at_quad,
            deriv_at_nodes,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of local nodes, `k + 1`.
    pub fn local_nodes(&self) -> usize {
        self.degree + 1
    }

    pub fn lobatto(&self) -> &QuadratureRule {
        &self.lobatto
    }

    pub fn gauss(&self) -> &QuadratureRule {
        &self.gauss
    }

    pub fn basis_at_quad(&self) -> &[Vec<f64>] {
        &self.basis_at_quad
    }

    pub fn deriv_at_quad(&self) -> &[Vec<f64>] {
        &self.deriv_at_quad
    }

    pub fn deriv_at_nodes(&self) -> &[Vec<f64>] {
        &self.deriv_at_nodes
    }

    pub fn basis(&self, xi: f64) -> Vec<f64> {
        lagrange_basis(&self.lobatto.nodes, xi)
    }

    pub fn basis_deriv(&self, xi: f64) -> Vec<f64> {
        lagrange_basis_deriv(&self.lobatto.nodes, xi)
    }
}
