use crate::error::{Error, Result};
use crate::mesh::CurveMesh;
use crate::point::Vec2;

/// Cyclic-banded Laplace–Beltrami stiffness matrix
/// `K_jl = int grad psi_j . grad psi_l` on the current curve.
///
/// Row `j` stores columns `j - k ..= j + k (mod N)`; since `N = J k >= 3k`
/// those columns are distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    n: usize,
    half_band: usize,
    entries: Vec<f64>,
}

impl StiffnessMatrix {
    /// Per element, `int psi_a' psi_b' / |F'| dxi` by Gauss–Legendre.
    pub fn assemble(mesh: &CurveMesh) -> Result<Self> {
        let k = mesh.degree();
        let n = mesh.node_count();
        let width = 2 * k + 1;
        let mut entries = vec![0.0; n * width];
        let re = mesh.reference();
        let weights = &re.gauss().weights;
        let mut local = vec![0.0; (k + 1) * (k + 1)];
        for e in 0..mesh.element_count() {
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, dpsi) in re.deriv_at_quad().iter().enumerate() {
                let jac = mesh.tangent_at_quad(e, q).norm();
                if !(jac > 0.0) {
                    return Err(Error::MeshDegeneration {
                        element: e,
                        xi: re.gauss().nodes[q],
                        jacobian: jac,
                    });
                }
                let scale = weights[q] / jac;
                for a in 0..=k {
                    for b in 0..=k {
                        local[a * (k + 1) + b] += scale * dpsi[a] * dpsi[b];
                    }
                }
            }
            for a in 0..=k {
                let row = mesh.node_index(e, a);
                for b in 0..=k {
                    // local index difference equals the cyclic column offset
                    let slot = (b + k) - a;
                    entries[row * width + slot] += local[a * (k + 1) + b];
                }
            }
        }
        Ok(StiffnessMatrix {
            n,
            half_band: k,
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_band
    }

    /// Stored `(column, value)` pairs of row `j`.
    pub fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = 2 * self.half_band + 1;
        let (n, k) = (self.n, self.half_band);
        self.entries[j * w..(j + 1) * w]
            .iter()
            .enumerate()
            .map(move |(slot, &v)| ((j + n + slot - k) % n, v))
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.row(j)
            .find_map(|(c, v)| (c == l).then_some(v))
            .unwrap_or(0.0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.row(j).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Componentwise product with a field of 2-vectors.
    pub fn apply_vec2(&self, x: &[Vec2]) -> Vec<Vec2> {
        (0..self.n)
            .map(|j| self.row(j).fold(Vec2::ZERO, |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (j, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(j) {
                row[c] += v;
            }
        }
        dense
    }
}
