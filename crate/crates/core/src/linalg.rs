//! Dense complex linear algebra shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Composite systems use the
//! usual big-endian tensor layout: for factors `[d0, d1, ..]` the basis index
//! of `|i0 i1 ..>` is `i0 * (d1 * ..) + i1 * (..) + ..`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Hermiticity and trace checks.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Smallest tolerated eigenvalue for positive semidefinite objects.
pub const PSD_TOL: f64 = 1e-9;
/// Residual tolerance when two maps are compared.
pub const MAP_TOL: f64 = 1e-9;
/// Largest composite dimension any operation will build.
pub const MAX_DIM: usize = 4096;

const EIGEN_MAX_ITER: usize = 100_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|i><j|` on an `n`-dimensional space.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Column vector `|i>`.
pub fn ket(n: usize, i: usize) -> CMatrix {
    let mut v = zeros(n, 1);
    v[(i, 0)] = C64::new(1.0, 0.0);
    v
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, m| acc.kronecker(m))
}

pub fn dim_product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// `(m + m^†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

/// Hilbert-Schmidt inner product `Tr(a^† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is hermitized first, so tiny anti-Hermitian noise does not leak
/// into the spectrum.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !is_square(m) {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let eig = hermitize(m)
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "Hermitian eigensolve did not converge (dim {n}, max-entry {:.3e})",
                max_abs(m)
            ))
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    eigh(m).map(|(v, _)| v)
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigvalsh(m)?.first().copied().unwrap_or(0.0))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if is_square(m) && hermiticity_defect(m) <= 1e-13 * (1.0 + max_abs(m)) {
        if let Ok(v) = eigvalsh(m) {
            return v.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(m).iter().sum()
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m)?;
    let diag = DVector::from_iterator(vals.len(), vals.iter().map(|&x| C64::new(f(x), 0.0)));
    Ok(&vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint())
}

/// Row-major vectorisation `vec(m)[i * cols + j] = m[i, j]`.
pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    let (r, c) = m.shape();
    DVector::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

pub fn unvectorize(v: &DVector<C64>, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Offsets (in the full index) of every multi-index over the selected factors.
fn subsystem_offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offsets = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &o in &offsets {
            for i in 0..dims[f] {
                next.push(o + i * st[f]);
            }
        }
        offsets = next;
    }
    offsets
}

fn check_factors(m: &CMatrix, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension(format!("invalid factor list {dims:?}")));
    }
    let total = dim_product(dims);
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::Dimension(format!(
            "factor dims {dims:?} (product {total}) do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Partial trace of a square operator, keeping the listed factors in their
/// original order.
pub fn partial_trace_op(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_factors(m, dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!(
            "keep set {keep:?} is not a set of factor indices for {dims:?}"
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let keep_off = subsystem_offsets(dims, &kept);
    let trace_off = subsystem_offsets(dims, &traced);
    let n = keep_off.len();
    let mut out = zeros(n, n);
    for (r, &kr) in keep_off.iter().enumerate() {
        for (cidx, &kc) in keep_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &trace_off {
                acc += m[(kr + t, kc + t)];
            }
            out[(r, cidx)] = acc;
        }
    }
    Ok(out)
}

/// Zero every entry whose row and column differ on the chosen factor.
pub fn dephase_op(m: &CMatrix, dims: &[usize], factor: usize) -> Result<CMatrix> {
    check_factors(m, dims)?;
    if factor >= dims.len() {
        return Err(Error::Dimension(format!(
            "factor {factor} out of range for {dims:?}"
        )));
    }
    let st = strides(dims);
    let label = |i: usize| (i / st[factor]) % dims[factor];
    Ok(CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if label(i) == label(j) {
            m[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Permutation matrix `P` with `P |i_0 .. i_k> = |i_{perm[0]} .. i_{perm[k]}>`,
/// i.e. new factor `j` is old factor `perm[j]`.
pub fn factor_permutation(dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let mut seen = perm.to_vec();
    seen.sort_unstable();
    if perm.len() != dims.len() || seen.iter().enumerate().any(|(i, &p)| i != p) {
        return Err(Error::Dimension(format!(
            "{perm:?} is not a permutation of {} factors",
            dims.len()
        )));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_st = strides(dims);
    let new_st = strides(&new_dims);
    let total = dim_product(dims);
    let mut p = zeros(total, total);
    for old in 0..total {
        let mut new = 0;
        for (j, &f) in perm.iter().enumerate() {
            let digit = (old / old_st[f]) % dims[f];
            new += digit * new_st[j];
        }
        p[(new, old)] = C64::new(1.0, 0.0);
    }
    Ok(p)
}

pub fn random_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase of `R`'s
/// diagonal divided out.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = random_ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Random density matrix `G G^† / Tr(G G^†)` with a square Ginibre `G`.
pub fn random_density_op<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    hermitize(&(m / tr))
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    hermitize(&random_ginibre(d, d, rng))
}

/// `max |U^† U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !is_square(u) {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}
