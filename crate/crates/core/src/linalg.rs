//! Small dense Hermitian eigenproblems.
//!
//! A complex Hermitian `H = A + iB` is diagonalised through its real
//! symmetric embedding `[[A, -B], [B, A]]` with cyclic Jacobi rotations. Every
//! eigenvalue of `H` shows up twice in the embedding; a real eigenvector
//! `(u; w)` maps to the complex eigenvector `u + i w`, and the complex basis of
//! each degenerate cluster is extracted by pivoted Gram-Schmidt.
//!
//! Cost is cubic in `2 * dim` per sweep, comfortable up to a few hundred.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Conjugate-symmetry tolerance, relative to the largest entry (or 1).
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Dense conjugate-symmetric matrix, stored row major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Validates conjugate symmetry and stores the exact Hermitian part.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                if d > HERMITIAN_TOLERANCE * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) are not conjugate (deviation {d:e})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(dim, entries))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    /// Replaces `entries` by `(M + M^dagger) / 2` without validation. Used for
    /// matrices Hermitian by construction up to rounding.
    pub(crate) fn symmetrized(dim: usize, mut entries: Vec<Complex64>) -> Self {
        for i in 0..dim {
            entries[i * dim + i].im = 0.0;
            for j in i + 1..dim {
                let avg = (entries[i * dim + j] + entries[j * dim + i].conj()) * 0.5;
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg.conj();
            }
        }
        HermitianMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        HermitianMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.entries[i * (self.dim + 1)].re)
            .sum()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| {
                self.entries[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<v| M |v>`, real for Hermitian `M`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        self.mul_vec(v)
            .iter()
            .zip(v)
            .map(|(mv, vi)| (vi.conj() * mv).re)
            .sum()
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenDecomposition {
    pub fn max(&self) -> (f64, &[Complex64]) {
        (self.values[0], &self.vectors[0])
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eigs(m: &HermitianMatrix) -> EigenDecomposition {
    let d = m.dim;
    if d == 1 {
        return EigenDecomposition {
            values: vec![m.entries[0].re],
            vectors: vec![vec![Complex64::new(1.0, 0.0)]],
        };
    }
    let n = 2 * d;
    let mut a = vec![0.0f64; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = m.get(i, j);
            a[i * n + j] = z.re;
            a[(i + d) * n + (j + d)] = z.re;
            a[i * n + (j + d)] = -z.im;
            a[(i + d) * n + j] = z.im;
        }
    }
    let (real_values, real_vectors) = jacobi_symmetric(&mut a, n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| real_values[y].total_cmp(&real_values[x]));

    let scale = real_values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let cluster_tol = 1e-9 * scale;

    let mut chosen: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && real_values[order[end - 1]] - real_values[order[end]] <= cluster_tol {
            end += 1;
        }
        let candidates: Vec<Vec<Complex64>> = order[start..end]
            .iter()
            .map(|&k| {
                (0..d)
                    .map(|i| Complex64::new(real_vectors[i * n + k], real_vectors[(i + d) * n + k]))
                    .collect()
            })
            .collect();
        pick_complex_basis(candidates, &mut chosen, d);
        start = end;
    }
    assert_eq!(chosen.len(), d, "eigenvector extraction lost rank");

    let mut pairs: Vec<(f64, Vec<Complex64>)> = chosen
        .into_iter()
        .map(|v| (m.quadratic_form(&v), v))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let (values, vectors) = pairs.into_iter().unzip();
    EigenDecomposition { values, vectors }
}

/// Pivoted complex Gram-Schmidt: appends to `basis` the candidates (after
/// projection) that still carry weight, largest residual first.
fn pick_complex_basis(
    mut candidates: Vec<Vec<Complex64>>,
    basis: &mut Vec<Vec<Complex64>>,
    d: usize,
) {
    for c in candidates.iter_mut() {
        project_out(c, basis);
    }
    loop {
        if basis.len() == d {
            return;
        }
        let best = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm_sqr(c)))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((i, w)) = best else { return };
        if w < 1e-8 {
            return;
        }
        let mut v = candidates.swap_remove(i);
        let inv = 1.0 / w.sqrt();
        v.iter_mut().for_each(|z| *z *= inv);
        for c in candidates.iter_mut() {
            project_out(c, std::slice::from_ref(&v));
        }
        basis.push(v);
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= overlap * bi;
        }
    }
}

/// Cyclic Jacobi on a dense real symmetric `n x n` matrix (overwritten).
/// Returns the diagonal and the rotation matrix whose columns are the
/// eigenvectors.
fn jacobi_symmetric(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tiny = f64::EPSILON * f64::EPSILON * frob * frob;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= tiny || off == 0.0 {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check_decomposition(m: &HermitianMatrix, e: &EigenDecomposition) {
        let d = m.dim();
        let tol = 1e-9 * d as f64;
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            let mv = m.mul_vec(v);
            for (x, y) in mv.iter().zip(v) {
                assert!((x - y * lambda).norm() < tol);
            }
        }
        for (i, a) in e.vectors.iter().enumerate() {
            for (j, b) in e.vectors.iter().enumerate() {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-9);
            }
        }
        let sum: f64 = e.values.iter().sum();
        assert!((sum - m.trace()).abs() < 1e-9);
        for r in 0..d {
            for col in 0..d {
                let rec: Complex64 = e
                    .values
                    .iter()
                    .zip(&e.vectors)
                    .map(|(l, v)| v[r] * v[col].conj() * l)
                    .sum();
                assert!((rec - m.get(r, col)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn single_classical_node_matrix() {
        let m = HermitianMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.25, 0.25)],
            vec![c(0.25, -0.25), c(0.0, 0.0)],
        ])
        .unwrap();
        let e = hermitian_eigs(&m);
        assert!((e.values[0] - 0.683013).abs() < 1e-6);
        assert!((e.values[0] - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-14);
        check_decomposition(&m, &e);
    }

    #[test]
    fn two_classical_node_matrix() {
        let m = HermitianMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.0, 0.25)],
            vec![c(0.0, -0.25), c(0.0, 0.0)],
        ])
        .unwrap();
        let e = hermitian_eigs(&m);
        assert!((e.values[0] - 0.603553).abs() < 1e-6);
        check_decomposition(&m, &e);
    }

    #[test]
    fn identity_has_unit_spectrum() {
        for d in [1, 2, 5, 16] {
            let e = hermitian_eigs(&HermitianMatrix::identity(d));
            assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
            check_decomposition(&HermitianMatrix::identity(d), &e);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = HermitianMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(matches!(err, Err(Error::InvalidMatrix(_))));
        let diag = HermitianMatrix::from_rows(&[vec![c(1.0, 0.5)]]);
        assert!(matches!(diag, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn degenerate_spectrum_keeps_orthonormal_vectors() {
        // rank-one projector in dimension 6: eigenvalue 0 five times
        let v: Vec<Complex64> = (0..6).map(|k| c(k as f64 + 1.0, 0.5 * k as f64)).collect();
        let norm = norm_sqr(&v).sqrt();
        let v: Vec<_> = v.iter().map(|z| z / norm).collect();
        let entries = (0..36).map(|k| v[k / 6] * v[k % 6].conj()).collect();
        let m = HermitianMatrix::new(6, entries).unwrap();
        let e = hermitian_eigs(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        check_decomposition(&m, &e);
    }

    fn arb_hermitian(max_dim: usize) -> impl Strategy<Value = HermitianMatrix> {
        (1..=max_dim).prop_flat_map(|d| {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |raw| {
                let entries = raw.into_iter().map(|(r, i)| c(r, i)).collect();
                HermitianMatrix::symmetrized(d, entries)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_matrices_decompose(m in arb_hermitian(12)) {
            let e = hermitian_eigs(&m);
            check_decomposition(&m, &e);
        }

        #[test]
        fn spectrum_matches_nalgebra(m in arb_hermitian(8)) {
            let d = m.dim();
            let na = nalgebra::DMatrix::from_fn(d, d, |i, j| {
                let z = m.get(i, j);
                nalgebra::Complex::new(z.re, z.im)
            });
            let mut reference: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            let ours = hermitian_eigs(&m).values;
            for (a, b) in ours.iter().zip(&reference) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
