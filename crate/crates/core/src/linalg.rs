//! Sparse storage and direct solvers for banded-cyclic systems.
//!
//! A cyclic band (entries `(i, i + d mod n)` for small `|d|`) becomes an
//! ordinary band after the fold reordering `0, n-1, 1, n-2, 2, ...`, which at
//! most doubles the bandwidth and leaves no wraparound corners. The folded
//! matrix is factorized by banded LU with partial pivoting.

use crate::error::{Error, Result};

/// Relative pivot threshold, `|pivot| < PIVOT_TOLERANCE * ||A||_inf` is singular.
pub const PIVOT_TOLERANCE: f64 = 1e-13;
/// Required relative residual `||Az - b|| / (||A|| ||z|| + ||b||)` (inf-norms).
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Row-wise sparse matrix; each row keeps its entries sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        SparseMatrix {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let mut m = SparseMatrix::new(dense.len());
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.add(i, j, v);
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Accumulates `v` into entry `(i, j)`; stores structural zeros too.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => row[pos].1 += v,
            Err(pos) => row.insert(pos, (j, v)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c)
            .map(|pos| row[pos].1)
            .unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nonzeros_in_row(&self, i: usize) -> usize {
        self.rows[i].iter().filter(|&&(_, v)| v != 0.0).count()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[i][c] = v;
            }
        }
        dense
    }

    /// `||Az - b||_inf / (||A||_inf ||z||_inf + ||b||_inf)`.
    pub fn relative_residual(&self, z: &[f64], b: &[f64]) -> f64 {
        let az = self.matvec(z);
        let res = az
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let denom = self.norm_inf() * inf_norm(z) + inf_norm(b);
        if denom == 0.0 {
            res
        } else {
            res / denom
        }
    }

    /// Bandwidths `(lower, upper)` under the ordering `perm` (new -> old).
    fn bandwidths(&self, inverse: &[usize]) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for (i, row) in self.rows.iter().enumerate() {
            let ni = inverse[i];
            for &(c, _) in row {
                let nc = inverse[c];
                if nc < ni {
                    lower = lower.max(ni - nc);
                } else {
                    upper = upper.max(nc - ni);
                }
            }
        }
        (lower, upper)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Ordering used by the band solver and its bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandProfile {
    pub lower: usize,
    pub upper: usize,
    pub folded: bool,
}

/// Fold ordering `0, n-1, 1, n-2, ...` as a new -> old map.
pub fn fold_permutation(n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| if i % 2 == 0 { i / 2 } else { n - 1 - i / 2 })
        .collect()
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Banded LU factorization with partial pivoting (row interchanges), in the
/// style of LAPACK `gbtrf`: `U` gains `lower` extra superdiagonals of fill.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    lower: usize,
    width: usize,
    /// Row `i` holds columns `i - lower ..= i + lower + upper`.
    rows: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.lower - i)
    }

    fn factor(
        a: &SparseMatrix,
        perm: &[usize],
        inverse: &[usize],
        profile: BandProfile,
        threshold: f64,
    ) -> Result<Self> {
        let n = a.size();
        let (kl, ku) = (profile.lower, profile.upper);
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            lower: kl,
            width,
            rows: vec![0.0; n * width],
            multipliers: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        for (new_i, &old_i) in perm.iter().enumerate() {
            for &(c, v) in a.row(old_i) {
                let s = lu.slot(new_i, inverse[c]);
                lu.rows[s] += v;
            }
        }
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let last_col = (c + kl + ku).min(n - 1);
            let mut p = c;
            let mut best = lu.rows[lu.slot(c, c)].abs();
            for r in c + 1..=last_row {
                let v = lu.rows[lu.slot(r, c)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best >= threshold) || best == 0.0 {
                return Err(Error::SingularSystem {
                    row: c,
                    pivot: best,
                    threshold,
                });
            }
            lu.pivots[c] = p;
            if p != c {
                for j in c..=last_col {
                    let (sc, sp) = (lu.slot(c, j), lu.slot(p, j));
                    lu.rows.swap(sc, sp);
                }
            }
            let pivot = lu.rows[lu.slot(c, c)];
            for r in c + 1..=last_row {
                let l = lu.rows[lu.slot(r, c)] / pivot;
                lu.multipliers[c * kl + (r - c - 1)] = l;
                if l != 0.0 {
                    for j in c + 1..=last_col {
                        let u = lu.rows[lu.slot(c, j)];
                        let s = lu.slot(r, j);
                        lu.rows[s] -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl) = (self.n, self.lower);
        for c in 0..n {
            b.swap(c, self.pivots[c]);
            let bc = b[c];
            for r in c + 1..=(c + kl).min(n - 1) {
                b[r] -= self.multipliers[c * kl + (r - c - 1)] * bc;
            }
        }
        let span = self.width - kl - 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + span).min(n - 1) {
                acc -= self.rows[self.slot(i, j)] * b[j];
            }
            b[i] = acc / self.rows[self.slot(i, i)];
        }
    }
}

/// Chooses between the natural and the folded ordering, whichever is narrower.
pub fn band_profile(a: &SparseMatrix) -> (BandProfile, Vec<usize>) {
    let n = a.size();
    let natural: Vec<usize> = (0..n).collect();
    let (nl, nu) = a.bandwidths(&natural);
    let fold = fold_permutation(n);
    let (fl, fu) = a.bandwidths(&invert(&fold));
    if fl + fu < nl + nu {
        (
            BandProfile {
                lower: fl,
                upper: fu,
                folded: true,
            },
            fold,
        )
    } else {
        (
            BandProfile {
                lower: nl,
                upper: nu,
                folded: false,
            },
            natural,
        )
    }
}

/// Solves `A z = b` for a banded-cyclic `A`.
///
/// Fails with `SingularSystem` on a pivot below `1e-13 ||A||_inf` and with
/// `InaccurateSolve` if the relative residual exceeds `1e-10`.
pub fn solve_banded_cyclic(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.size();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has length {}, matrix is {n}x{n}",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (profile, perm) = band_profile(a);
    let inverse = invert(&perm);
    let threshold = PIVOT_TOLERANCE * a.norm_inf();
    let lu = BandLu::factor(a, &perm, &inverse, profile, threshold)?;
    let mut work: Vec<f64> = perm.iter().map(|&old| b[old]).collect();
    lu.solve_in_place(&mut work);
    let mut z = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        z[old] = work[new];
    }
    check_residual(a, &z, b)?;
    Ok(z)
}

fn check_residual(a: &SparseMatrix, z: &[f64], b: &[f64]) -> Result<()> {
    let residual = a.relative_residual(z, b);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::InaccurateSolve {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(())
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("dense system is not square".into()));
    }
    let norm = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let threshold = PIVOT_TOLERANCE * norm;
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut z = b.to_vec();
    for c in 0..n {
        let (p, best) = (c..n)
            .map(|r| (r, m[r][c].abs()))
            .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best >= threshold) || best == 0.0 {
            return Err(Error::SingularSystem {
                row: c,
                pivot: best,
                threshold,
            });
        }
        m.swap(c, p);
        z.swap(c, p);
        for r in c + 1..n {
            let l = m[r][c] / m[c][c];
            if l != 0.0 {
                for j in c..n {
                    m[r][j] -= l * m[c][j];
                }
                z[r] -= l * z[c];
            }
        }
    }
    for i in (0..n).rev() {
        let acc: f64 = (i + 1..n).map(|j| m[i][j] * z[j]).sum();
        z[i] = (z[i] - acc) / m[i][i];
    }
    Ok(z)
}
