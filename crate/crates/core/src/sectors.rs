//! Superselection sectors: block decomposition of the operator algebra
//! generated by a set of matrices.
//!
//! The blocks are read off from the commutant. A random Hermitian element of
//! the commutant has one eigenspace per minimal invariant subspace, so its
//! spectral projectors are the sector projectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::linalg::{self, hs_inner, kron, CMatrix, C64};

/// Default seed for the random commutant element.
pub const DEFAULT_SEED: u64 = 0x5EC7;
/// Eigenvalues of the commutant element closer than this share a block.
pub const CLUSTER_GAP: f64 = 1e-7;
/// Largest tolerated off-block magnitude after the basis change.
pub const OFF_BLOCK_TOL: f64 = 1e-8;
/// Relative singular-value threshold for the commutant null space.
pub const NULL_TOL: f64 = 1e-9;

const INDEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SectorDecomposition {
    dim: usize,
    #[serde(skip)]
    basis_change: CMatrix,
    block_dims: Vec<usize>,
}

impl SectorDecomposition {
    pub fn new(basis_change: CMatrix, block_dims: Vec<usize>) -> Result<Self> {
        let dim = basis_change.nrows();
        if block_dims.iter().sum::<usize>() != dim || block_dims.contains(&0) {
            return Err(Error::Dimension(format!("blocks {block_dims:?} do not partition {dim}")));
        }
        let defect = linalg::unitarity_defect(&basis_change);
        if defect > linalg::STRUCTURE_TOL {
            return Err(Error::Invariant(format!("basis change not unitary (defect {defect:.3e})")));
        }
        Ok(Self { dim, basis_change, block_dims })
    }

    /// A single block: the system is irreducible.
    pub fn trivial(dim: usize) -> Self {
        Self { dim, basis_change: linalg::identity(dim), block_dims: vec![dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_change(&self) -> &CMatrix {
        &self.basis_change
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Start offsets of each block in the decomposed basis.
    pub fn offsets(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect()
    }

    /// Columns of the basis change spanning block `i`.
    pub fn block_basis(&self, i: usize) -> CMatrix {
        let o = self.offsets()[i];
        self.basis_change.columns(o, self.block_dims[i]).into_owned()
    }

    /// Orthogonal projectors onto the sectors, in the original basis.
    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.num_blocks())
            .map(|i| {
                let v = self.block_basis(i);
                &v * v.adjoint()
            })
            .collect()
    }

    /// Operator `m` expressed in the decomposed basis.
    pub fn to_block_basis(&self, m: &CMatrix) -> CMatrix {
        self.basis_change.adjoint() * m * &self.basis_change
    }

    /// Largest entry of `V^† m V` outside the diagonal blocks.
    pub fn off_block_residual(&self, m: &CMatrix) -> f64 {
        let t = self.to_block_basis(m);
        let label = self.labels();
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if label[i] != label[j] {
                    worst = worst.max(t[(i, j)].norm());
                }
            }
        }
        worst
    }

    fn labels(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .enumerate()
            .flat_map(|(b, &d)| std::iter::repeat_n(b, d))
            .collect()
    }

    /// Operator basis of the block-diagonal operators `V_i E_ab V_i^†`; the
    /// span of the states the superselection rule allows.
    pub fn block_diagonal_basis(&self) -> Vec<CMatrix> {
        let mut out = Vec::new();
        for i in 0..self.num_blocks() {
            let v = self.block_basis(i);
            for a in 0..self.block_dims[i] {
                for b in 0..self.block_dims[i] {
                    let va = v.column(a).into_owned();
                    let vb = v.column(b).into_owned();
                    out.push(&va * vb.adjoint());
                }
            }
        }
        out
    }
}

fn check_generators(generators: &[CMatrix]) -> Result<usize> {
    let first = generators
        .first()
        .ok_or_else(|| Error::Dimension("generator list is empty".into()))?;
    let d = first.nrows();
    if d == 0 {
        return Err(Error::Dimension("zero-dimensional generators".into()));
    }
    for (k, g) in generators.iter().enumerate() {
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::Dimension(format!(
                "generator {k} is {}x{}, expected {d}x{d}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    Ok(d)
}

/// Adds `m` to an orthonormal list if it is independent of it.
fn push_if_independent(basis: &mut Vec<CMatrix>, m: &CMatrix) -> bool {
    let scale = m.norm();
    if scale == 0.0 {
        return false;
    }
    let mut r = m / C64::new(scale, 0.0);
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis.iter() {
            let coef = hs_inner(b, &r);
            r -= b * coef;
        }
    }
    let norm = r.norm();
    if norm <= INDEPENDENCE_TOL {
        return false;
    }
    basis.push(r / C64::new(norm, 0.0));
    true
}

/// Hilbert-Schmidt orthonormal basis of the unital *-algebra generated by
/// `generators`. Fails if its dimension would exceed `max_dim`.
pub fn algebra_closure(generators: &[CMatrix], max_dim: usize) -> Result<Vec<CMatrix>> {
    let d = check_generators(generators)?;
    let mut basis: Vec<CMatrix> = Vec::new();
    push_if_independent(&mut basis, &linalg::identity(d));
    for g in generators {
        push_if_independent(&mut basis, g);
        push_if_independent(&mut basis, &g.adjoint());
    }
    let mut frontier = 0;
    while frontier < basis.len() {
        let end = basis.len();
        for i in frontier..end {
            for j in 0..end {
                let a = basis[i].clone();
                let b = basis[j].clone();
                push_if_independent(&mut basis, &(&a * &b));
                push_if_independent(&mut basis, &(&b * &a));
                if basis.len() > max_dim {
                    return Err(Error::Size { dim: basis.len(), max: max_dim });
                }
            }
        }
        frontier = end;
    }
    Ok(basis)
}

/// Orthogonal projection (in the Hilbert-Schmidt sense) onto the span of an
/// orthonormal operator basis.
pub fn project_onto(basis: &[CMatrix], m: &CMatrix) -> CMatrix {
    let mut out = linalg::zeros(m.nrows(), m.ncols());
    for b in basis {
        out += b * hs_inner(b, m);
    }
    out
}

/// Orthonormal basis of `{X : [X, A] = 0 for every generator A and A^†}`.
pub fn commutant(generators: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = check_generators(generators)?;
    let dd = d * d;
    let id = linalg::identity(d);
    let mut ops: Vec<CMatrix> = Vec::new();
    for g in generators {
        ops.push(g.clone());
        if linalg::hermiticity_defect(g) > 0.0 {
            ops.push(g.adjoint());
        }
    }
    // vec(AX - XA) = (A (x) I - I (x) A^T) vec(X)
    let mut m = linalg::zeros(ops.len() * dd, dd);
    for (k, a) in ops.iter().enumerate() {
        let block = kron(a, &id) - kron(&id, &a.transpose());
        m.view_mut((k * dd, 0), (dd, dd)).copy_from(&block);
    }
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("commutant SVD returned no right vectors".into()))?;
    let s_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let threshold = NULL_TOL * s_max.max(1.0);
    // singular values beyond the row count of V^T are implicitly zero
    let mut null = Vec::new();
    for k in 0..v_t.nrows() {
        if svd.singular_values[k] <= threshold {
            let row = v_t.row(k).adjoint();
            null.push(CMatrix::from_fn(d, d, |i, j| row[i * d + j]));
        }
    }
    Ok(null)
}

/// Sector decomposition with the default seed.
pub fn decompose(generators: &[CMatrix]) -> Result<SectorDecomposition> {
    decompose_with_seed(generators, DEFAULT_SEED)
}

pub fn decompose_with_seed(generators: &[CMatrix], seed: u64) -> Result<SectorDecomposition> {
    let d = check_generators(generators)?;
    let comm = commutant(generators)?;
    if comm.len() <= 1 {
        return Ok(SectorDecomposition::trivial(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = linalg::zeros(d, d);
    for x in &comm {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        h += x * C64::new(re, im);
    }
    let h = linalg::hermitize(&h);
    let (vals, vecs) = linalg::eigh(&h)?;

    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..d {
        if vals[k] - vals[k - 1] > CLUSTER_GAP {
            clusters.push(vec![k]);
        } else {
            clusters.last_mut().expect("nonempty").push(k);
        }
    }
    // smaller sectors first; ties keep spectral order
    clusters.sort_by_key(|c| c.len());

    let mut basis_change = linalg::zeros(d, d);
    let mut col = 0;
    for c in &clusters {
        for &k in c {
            basis_change.set_column(col, &vecs.column(k));
            col += 1;
        }
    }
    let block_dims: Vec<usize> = clusters.iter().map(Vec::len).collect();
    let dec = SectorDecomposition::new(basis_change, block_dims)?;

    let worst = generators
        .iter()
        .map(|g| dec.off_block_residual(g))
        .fold(0.0_f64, f64::max);
    if worst > OFF_BLOCK_TOL {
        let min_gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        return Err(Error::Numerical(format!(
            "block decomposition failed to certify: off-block residual {worst:.3e}, \
             commutant dim {}, smallest eigenvalue gap {min_gap:.3e}",
            comm.len()
        )));
    }
    Ok(dec)
}

/// True iff the generated algebra admits no nontrivial block decomposition.
pub fn is_fully_nonclassical(generators: &[CMatrix]) -> Result<bool> {
    Ok(decompose(generators)?.num_blocks() == 1)
}

/// Which-sector measurement `S -> S (x) C_k`,
/// `rho -> sum_i P_i rho P_i (x) |i><i|`.
pub fn which_sector_channel(s: &SectorDecomposition) -> Result<Channel> {
    let k = s.num_blocks();
    let kraus = s
        .projectors()
        .iter()
        .enumerate()
        .map(|(i, p)| kron(p, &linalg::ket(k, i)))
        .collect();
    Channel::unchecked(vec![s.dim()], vec![s.dim(), k], kraus)
}

/// Matrix units inside each diagonal block of the given sizes: a spanning
/// set of the block-diagonal algebra.
pub fn block_algebra_generators(block_dims: &[usize]) -> Vec<CMatrix> {
    let d: usize = block_dims.iter().sum();
    let mut out = Vec::new();
    let mut o = 0;
    for &b in block_dims {
        for i in 0..b {
            for j in 0..b {
                out.push(linalg::matrix_unit(d, o + i, o + j));
            }
        }
        o += b;
    }
    out
}

/// Clock and shift matrices; they generate the full algebra on `C^d`.
pub fn clock_shift_generators(d: usize) -> Vec<CMatrix> {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    let clock = CMatrix::from_fn(d, d, |i, j| if i == j { C64::from_polar(1.0, w * i as f64) } else { C64::new(0.0, 0.0) });
    let shift = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    vec![clock, shift]
}

/// Matrix units of the full algebra on `C^d`.
pub fn full_algebra_generators(d: usize) -> Vec<CMatrix> {
    block_algebra_generators(&[d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::total_spin_generators;
    use crate::hilbert::partial_trace;
    use crate::linalg::c;

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    fn assert_closed(basis: &[CMatrix]) {
        for a in basis {
            let adj = a.adjoint();
            assert!(linalg::max_abs(&(project_onto(basis, &adj) - &adj)) < 1e-9);
            for b in basis {
                let p = a * b;
                assert!(linalg::max_abs(&(project_onto(basis, &p) - &p)) < 1e-9);
            }
        }
    }

    #[test]
    fn identity_generates_scalars() {
        let basis = algebra_closure(&[linalg::identity(2)], 16).unwrap();
        assert_eq!(basis.len(), 1);
        let expect = linalg::identity(2) / c(2.0_f64.sqrt(), 0.0);
        assert!(linalg::max_abs(&(&basis[0] - expect)) < 1e-15);
    }

    #[test]
    fn paulis_generate_full_qubit_algebra() {
        let basis = algebra_closure(&[sx(), sz()], 16).unwrap();
        assert_eq!(basis.len(), 4);
        assert_closed(&basis);
    }

    #[test]
    fn total_spin_generates_one_plus_three_block_algebra() {
        let basis = algebra_closure(&total_spin_generators(), 64).unwrap();
        assert_eq!(basis.len(), 10);
        assert_closed(&basis);
    }

    #[test]
    fn closure_respects_max_dim() {
        assert!(matches!(algebra_closure(&[sx(), sz()], 3), Err(Error::Size { .. })));
    }

    #[test]
    fn mismatched_generators_are_rejected() {
        assert!(matches!(algebra_closure(&[sx(), linalg::identity(3)], 16), Err(Error::Dimension(_))));
        assert!(matches!(decompose(&[]), Err(Error::Dimension(_))));
    }

    #[test]
    fn clock_and_shift_are_irreducible() {
        for d in 1..=6 {
            assert_eq!(decompose(&clock_shift_generators(d)).unwrap().block_dims(), &[d]);
        }
    }

    #[test]
    fn simple_decompositions() {
        assert_eq!(decompose(&[sx(), sz()]).unwrap().block_dims(), &[2]);
        assert_eq!(decompose(&[sz()]).unwrap().block_dims(), &[1, 1]);
        assert!(is_fully_nonclassical(&[sx(), sz()]).unwrap());
        let diag3 = block_algebra_generators(&[1, 1, 1]);
        assert!(!is_fully_nonclassical(&diag3).unwrap());
    }

    #[test]
    fn total_spin_system_is_reducible() {
        let dec = decompose(&total_spin_generators()).unwrap();
        assert_eq!(dec.block_dims(), &[1, 3]);
        assert!(!is_fully_nonclassical(&total_spin_generators()).unwrap());
        // the one-dimensional sector is the singlet
        let p0 = &dec.projectors()[0];
        let singlet = crate::channels::singlet_triplet_basis().column(0).into_owned();
        assert!(linalg::max_abs(&(p0 - &singlet * singlet.adjoint())) < 1e-10);
    }

    #[test]
    fn which_sector_channel_trivial_block() {
        let dec = SectorDecomposition::trivial(3);
        let m = which_sector_channel(&dec).unwrap();
        assert_eq!(m.out_dims(), &[3, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = crate::hilbert::DensityMatrix::random(3, &mut rng);
        let out = m.apply(&rho).unwrap();
        assert!(linalg::max_abs(&(out.entries() - rho.entries())) < 1e-14);
    }

    #[test]
    fn which_sector_channel_on_block_states() {
        let dec = decompose(&total_spin_generators()).unwrap();
        let m = which_sector_channel(&dec).unwrap();
        assert!(m.tp_defect() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = 0.35;
        let r1 = linalg::random_density_op(3, &mut rng);
        let v0 = dec.block_basis(0);
        let v1 = dec.block_basis(1);
        let rho0 = &v0 * v0.adjoint();
        let rho1 = &v1 * &r1 * v1.adjoint();
        let rho = &rho0 * c(w, 0.0) + &rho1 * c(1.0 - w, 0.0);
        let out = m.apply_op(&rho);
        let expect = kron(&rho0, &linalg::matrix_unit(2, 0, 0)) * c(w, 0.0)
            + kron(&rho1, &linalg::matrix_unit(2, 1, 1)) * c(1.0 - w, 0.0);
        assert!(linalg::max_abs(&(out - expect)) < 1e-12);
        // non-disturbing on block-diagonal states
        let s_marg = linalg::partial_trace_op(&m.apply_op(&rho), &[4, 2], &[0]).unwrap();
        assert!(linalg::max_abs(&(s_marg - &rho)) < 1e-12);
        let _ = partial_trace;
    }
}
