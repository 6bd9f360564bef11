//! Completely positive trace-preserving maps on composite classical/quantum
//! systems.

mod cq;
mod fixtures;
mod io;
pub(crate) mod reversibility;

use std::sync::OnceLock;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{ClassicalDistribution, DensityMatrix};
use crate::linalg::{
    self, dim_product, hermitize, kron, CMatrix, C64, MAP_TOL, MAX_DIM, PSD_TOL, STRUCTURE_TOL,
};

pub use cq::{CqInverseDiagnostics, CqMap};
pub use fixtures::{
    controlled_unitary, cnot_unitary, decohered_cnot, entangling_cnot, fixtures, sector_measurement,
    singlet_triplet_basis, total_spin_generators, Fixture, FixtureId, SECTOR_SYSTEM_DIM,
};
pub use io::{parse_channel_document, ChannelDocument, MatrixJson};
pub use reversibility::{
    inverse_diagnostics, irreversibility_residual, reversibility, InverseDiagnostics,
    IrreversibilityWitness, Reversibility, RANK_TOL, SINGULAR_RESIDUAL,
};

/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_DROP_TOL: f64 = 1e-12;

/// A linear map `rho -> sum_k K_k rho K_k^†` between composite systems.
#[derive(Debug, Clone)]
pub struct Channel {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    kraus: Vec<CMatrix>,
    choi: OnceLock<CMatrix>,
}

fn check_dims(dims: &[usize], what: &str) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension(format!("{what} dims {dims:?} invalid")));
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .unwrap_or(usize::MAX);
    if total > MAX_DIM {
        return Err(Error::Size { dim: total, max: MAX_DIM });
    }
    Ok(total)
}

impl Channel {
    /// Builds a channel from Kraus operators, rejecting maps that are not
    /// trace preserving and minimising the Kraus rank.
    pub fn new(in_dims: Vec<usize>, out_dims: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        let raw = Self::unchecked(in_dims, out_dims, kraus)?;
        let defect = raw.tp_defect();
        if defect > MAP_TOL {
            return Err(Error::Invariant(format!(
                "Kraus operators are not trace preserving (defect {defect:.3e})"
            )));
        }
        if raw.kraus.len() == 1 {
            return Ok(raw);
        }
        let choi = raw.choi().clone();
        Self::from_choi(raw.in_dims, raw.out_dims, choi)
    }

    /// Shape checks only. Used for deliberately unphysical maps.
    pub fn unchecked(in_dims: Vec<usize>, out_dims: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        let n_in = check_dims(&in_dims, "input")?;
        let n_out = check_dims(&out_dims, "output")?;
        if kraus.is_empty() {
            return Err(Error::Dimension("empty Kraus list".into()));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != n_out || op.ncols() != n_in {
                return Err(Error::Dimension(format!(
                    "Kraus operator {k} is {}x{}, expected {n_out}x{n_in}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        Ok(Self { in_dims, out_dims, kraus, choi: OnceLock::new() })
    }

    /// Channel with the given Choi matrix `J = sum_ij |i><j| (x) C(|i><j|)`.
    pub fn from_choi(in_dims: Vec<usize>, out_dims: Vec<usize>, choi: CMatrix) -> Result<Self> {
        Self::from_choi_with_tol(in_dims, out_dims, choi, PSD_TOL, MAP_TOL)
    }

    pub(crate) fn from_choi_with_tol(
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        choi: CMatrix,
        psd_tol: f64,
        tp_tol: f64,
    ) -> Result<Self> {
        let n_in = check_dims(&in_dims, "input")?;
        let n_out = check_dims(&out_dims, "output")?;
        if choi.nrows() != n_in * n_out || choi.ncols() != n_in * n_out {
            return Err(Error::Dimension(format!(
                "Choi matrix is {}x{}, expected {}",
                choi.nrows(),
                choi.ncols(),
                n_in * n_out
            )));
        }
        let (vals, vecs) = linalg::eigh(&choi)?;
        if let Some(&min) = vals.first() {
            if min < -psd_tol {
                return Err(Error::Invariant(format!(
                    "map is not completely positive (Choi min eigenvalue {min:.3e})"
                )));
            }
        }
        let mut kraus = Vec::new();
        for (k, &lambda) in vals.iter().enumerate().rev() {
            if lambda <= KRAUS_DROP_TOL {
                continue;
            }
            let s = lambda.sqrt();
            let v = vecs.column(k);
            kraus.push(CMatrix::from_fn(n_out, n_in, |a, i| v[i * n_out + a] * s));
        }
        if kraus.is_empty() {
            return Err(Error::Invariant("Choi matrix is zero".into()));
        }
        let ch = Self { in_dims, out_dims, kraus, choi: OnceLock::new() };
        let defect = ch.tp_defect();
        if defect > tp_tol {
            return Err(Error::Invariant(format!(
                "map is not trace preserving (defect {defect:.3e})"
            )));
        }
        let _ = ch.choi.set(hermitize(&choi));
        Ok(ch)
    }

    /// Channel realising an arbitrary linear map, given its action on
    /// operators. The map is sampled on the matrix units.
    pub fn from_linear_map<F>(in_dims: Vec<usize>, out_dims: Vec<usize>, map: F) -> Result<Self>
    where
        F: Fn(&CMatrix) -> CMatrix,
    {
        let n_in = check_dims(&in_dims, "input")?;
        let n_out = check_dims(&out_dims, "output")?;
        let choi = choi_of_map(n_in, n_out, map)?;
        Self::from_choi(in_dims, out_dims, choi)
    }

    pub fn unitary(dims: Vec<usize>, u: CMatrix) -> Result<Self> {
        let defect = linalg::unitarity_defect(&u);
        if defect > STRUCTURE_TOL {
            return Err(Error::Invariant(format!("operator is not unitary (defect {defect:.3e})")));
        }
        Self::unchecked(dims.clone(), dims, vec![u])
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let n = check_dims(&dims, "input")?;
        Self::unchecked(dims.clone(), dims, vec![linalg::identity(n)])
    }

    /// Measures `factor` in the canonical basis and forgets the outcome.
    pub fn dephasing(dims: Vec<usize>, factor: usize) -> Result<Self> {
        let n = check_dims(&dims, "input")?;
        if factor >= dims.len() {
            return Err(Error::Dimension(format!("factor {factor} out of range for {dims:?}")));
        }
        let kraus = (0..dims[factor])
            .map(|x| {
                let ops: Vec<CMatrix> = dims
                    .iter()
                    .enumerate()
                    .map(|(f, &d)| if f == factor { linalg::matrix_unit(d, x, x) } else { linalg::identity(d) })
                    .collect();
                linalg::kron_all(ops.iter())
            })
            .collect();
        debug_assert_eq!(dim_product(&dims), n);
        Self::unchecked(dims.clone(), dims, kraus)
    }

    /// Depolarising channel `rho -> (1 - p) rho + p I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("depolarizing parameter {p} outside [0, 1]")));
        }
        let dd = d as f64;
        Self::from_linear_map(vec![d], vec![d], |x| {
            x * C64::new(1.0 - p, 0.0) + linalg::identity(d) * (x.trace() * (p / dd))
        })
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_total(&self) -> usize {
        dim_product(&self.in_dims)
    }

    pub fn out_total(&self) -> usize {
        dim_product(&self.out_dims)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `max |sum_k K_k^† K_k - I|`.
    pub fn tp_defect(&self) -> f64 {
        let n = self.in_total();
        let mut acc = linalg::zeros(n, n);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        linalg::max_abs(&(acc - linalg::identity(n)))
    }

    /// Raw linear action on an arbitrary operator.
    pub fn apply_op(&self, x: &CMatrix) -> CMatrix {
        let mut out = linalg::zeros(self.out_total(), self.out_total());
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_total() {
            return Err(Error::Dimension(format!(
                "channel input dim {} vs state dim {}",
                self.in_total(),
                rho.dim()
            )));
        }
        DensityMatrix::new(hermitize(&self.apply_op(rho.entries())))
    }

    /// The Choi matrix, computed once and cached.
    pub fn choi(&self) -> &CMatrix {
        self.choi.get_or_init(|| {
            let n_in = self.in_total();
            let n_out = self.out_total();
            let dim = n_in * n_out;
            let mut j = linalg::zeros(dim, dim);
            for k in &self.kraus {
                let w = DVector::from_fn(dim, |r, _| k[(r % n_out, r / n_out)]);
                j += &w * w.adjoint();
            }
            j
        })
    }

    /// Applies the map by contracting the input with the Choi matrix.
    pub fn apply_via_choi(&self, x: &CMatrix) -> CMatrix {
        let n_in = self.in_total();
        let n_out = self.out_total();
        let j = self.choi();
        CMatrix::from_fn(n_out, n_out, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n_in {
                for jj in 0..n_in {
                    acc += x[(i, jj)] * j[(i * n_out + a, jj * n_out + b)];
                }
            }
            acc
        })
    }

    /// Matrix of the map on row-major vectorised operators.
    pub fn transfer_matrix(&self) -> CMatrix {
        let n_in = self.in_total();
        let n_out = self.out_total();
        let mut t = linalg::zeros(n_out * n_out, n_in * n_in);
        for k in &self.kraus {
            t += kron(k, &k.map(|z| z.conj()));
        }
        t
    }

    /// Minimum eigenvalue of the Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(self.choi())
    }

    /// `f ∘ g`: first `g`, then `f`.
    pub fn compose(f: &Channel, g: &Channel) -> Result<Channel> {
        if g.out_dims != f.in_dims {
            return Err(Error::Dimension(format!(
                "cannot compose: inner output {:?} vs outer input {:?}",
                g.out_dims, f.in_dims
            )));
        }
        let kraus: Vec<CMatrix> = f
            .kraus
            .iter()
            .flat_map(|a| g.kraus.iter().map(move |b| a * b))
            .collect();
        let raw = Self::unchecked(g.in_dims.clone(), f.out_dims.clone(), kraus)?;
        if raw.kraus.len() == 1 {
            return Ok(raw);
        }
        let choi = raw.choi().clone();
        Self::from_choi_with_tol(raw.in_dims, raw.out_dims, choi, f64::INFINITY, f64::INFINITY)
    }

    /// `self (x) other` with the factor lists concatenated.
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        Self::unchecked(in_dims, out_dims, kraus)
    }

    /// Reorders input and output factors; new factor `j` is old factor `perm[j]`.
    pub fn permute_factors(&self, in_perm: &[usize], out_perm: &[usize]) -> Result<Channel> {
        let p_in = linalg::factor_permutation(&self.in_dims, in_perm)?;
        let p_out = linalg::factor_permutation(&self.out_dims, out_perm)?;
        let kraus = self.kraus.iter().map(|k| &p_out * k * p_in.adjoint()).collect();
        Self::unchecked(
            in_perm.iter().map(|&p| self.in_dims[p]).collect(),
            out_perm.iter().map(|&p| self.out_dims[p]).collect(),
            kraus,
        )
    }

    /// `max_k |(self - other)(E_k)|_1` over the matrix units of the input.
    pub fn distance_on_basis(&self, other: &Channel) -> Result<f64> {
        if self.in_total() != other.in_total() || self.out_total() != other.out_total() {
            return Err(Error::Dimension("channels act between different spaces".into()));
        }
        let n = self.in_total();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let e = linalg::matrix_unit(n, i, j);
                worst = worst.max(linalg::trace_norm(&(self.apply_op(&e) - other.apply_op(&e))));
            }
        }
        Ok(worst)
    }
}

/// Choi matrix of a linear map sampled on matrix units.
pub fn choi_of_map<F>(n_in: usize, n_out: usize, map: F) -> Result<CMatrix>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    let dim = n_in * n_out;
    let mut j = linalg::zeros(dim, dim);
    for i in 0..n_in {
        for jj in 0..n_in {
            let y = map(&linalg::matrix_unit(n_in, i, jj));
            if y.nrows() != n_out || y.ncols() != n_out {
                return Err(Error::Dimension(format!(
                    "map produced a {}x{} operator, expected {n_out}x{n_out}",
                    y.nrows(),
                    y.ncols()
                )));
            }
            j.view_mut((i * n_out, jj * n_out), (n_out, n_out)).copy_from(&y);
        }
    }
    Ok(j)
}

/// Outcome of a CQ-structure test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CqCheck {
    pub preserving: bool,
    pub residual: f64,
}

/// Does the channel map CQ inputs (no coherence on `classical_factor`) to CQ
/// outputs? The residual is `max |D(C(X)) - C(X)|_1` over the inputs
/// `|x><x| (x) E_ij`, which span every dephased input.
pub fn is_cq_preserving(c: &Channel, classical_factor: usize, tol: f64) -> Result<CqCheck> {
    let quantum = quantum_factor(c, classical_factor)?;
    let d = c.in_dims[quantum];
    let domain: Vec<CMatrix> = (0..d)
        .flat_map(|i| (0..d).map(move |j| linalg::matrix_unit(d, i, j)))
        .collect();
    is_cq_preserving_on(c, classical_factor, &domain, tol)
}

/// As [`is_cq_preserving`], with the quantum inputs restricted to the span of
/// `domain` (e.g. the block-diagonal operators of a superselected system).
pub fn is_cq_preserving_on(
    c: &Channel,
    classical_factor: usize,
    domain: &[CMatrix],
    tol: f64,
) -> Result<CqCheck> {
    let quantum = quantum_factor(c, classical_factor)?;
    let n = c.in_dims[classical_factor];
    let d = c.in_dims[quantum];
    let mut residual = 0.0_f64;
    for x in 0..n {
        let px = linalg::matrix_unit(n, x, x);
        for b in domain {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::Dimension(format!("domain operator is not {d}x{d}")));
            }
            let input = if classical_factor == 0 { kron(&px, b) } else { kron(b, &px) };
            let y = c.apply_op(&input);
            let dy = linalg::dephase_op(&y, &c.out_dims, classical_factor)?;
            residual = residual.max(linalg::trace_norm(&(y - dy)));
        }
    }
    Ok(CqCheck { preserving: residual <= tol, residual })
}

fn quantum_factor(c: &Channel, classical_factor: usize) -> Result<usize> {
    if c.in_dims.len() != 2 || c.out_dims.len() != 2 || classical_factor > 1 {
        return Err(Error::Dimension(format!(
            "expected a bipartite channel with classical factor 0 or 1, got {:?} -> {:?}",
            c.in_dims, c.out_dims
        )));
    }
    Ok(1 - classical_factor)
}

/// Classical copy `|x><x| -> |x><x| (x) |x><x|` on an `n`-level system; the
/// copy is the second output factor.
pub fn leak_copy(n: usize) -> Result<Channel> {
    if n == 0 {
        return Err(Error::Dimension("leak_copy needs n >= 1".into()));
    }
    let kraus = (0..n)
        .map(|x| {
            let mut k = linalg::zeros(n * n, n);
            k[(x * n + x, x)] = C64::new(1.0, 0.0);
            k
        })
        .collect();
    Channel::unchecked(vec![n], vec![n, n], kraus)
}

/// Column-stochastic matrix: entry `(i, j)` is the probability of output `i`
/// given input `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} stochastic matrix",
                entries.len()
            )));
        }
        for e in entries.iter_mut() {
            if !e.is_finite() || *e < -ClassicalDistribution::NEGATIVE_CLAMP {
                return Err(Error::Invariant(format!("negative transition probability {e}")));
            }
            *e = e.max(0.0);
        }
        for j in 0..cols {
            let s: f64 = (0..rows).map(|i| entries[i * cols + j]).sum();
            if (s - 1.0).abs() > STRUCTURE_TOL {
                return Err(Error::Invariant(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, entries: e }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn apply(&self, p: &ClassicalDistribution) -> Result<ClassicalDistribution> {
        if p.len() != self.cols {
            return Err(Error::Dimension(format!("{} inputs vs {} columns", p.len(), self.cols)));
        }
        ClassicalDistribution::new(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j) * p.weights()[j]).sum())
                .collect(),
        )
    }
}

/// `|x> (x) psi -> |perm[x]> (x) U_x psi`: the reversible CQ interactions
/// without back-reaction, up to classical relabelling.
#[derive(Debug, Clone)]
pub struct ReversibleCQInteraction {
    perm: Vec<usize>,
    unitaries: Vec<CMatrix>,
}

impl ReversibleCQInteraction {
    pub fn new(perm: Vec<usize>, unitaries: Vec<CMatrix>) -> Result<Self> {
        let n = perm.len();
        if n == 0 || unitaries.len() != n {
            return Err(Error::Dimension(format!(
                "{n} labels but {} unitaries",
                unitaries.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::Invariant(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let d = unitaries[0].nrows();
        for (x, u) in unitaries.iter().enumerate() {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::Dimension(format!("unitary {x} is not {d}x{d}")));
            }
            let defect = linalg::unitarity_defect(u);
            if defect > STRUCTURE_TOL {
                return Err(Error::Invariant(format!("U_{x} not unitary (defect {defect:.3e})")));
            }
        }
        Ok(Self { perm, unitaries })
    }

    pub fn identity(n: usize, d: usize) -> Self {
        Self { perm: (0..n).collect(), unitaries: vec![linalg::identity(d); n] }
    }

    /// Uniform permutation and Haar-random unitaries.
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let unitaries = (0..n).map(|_| linalg::haar_unitary(d, rng)).collect();
        Self { perm, unitaries }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn d(&self) -> usize {
        self.unitaries[0].nrows()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// `sum_x |perm[x]><x| (x) U_x`.
    pub fn unitary(&self) -> CMatrix {
        let (n, d) = (self.n(), self.d());
        let mut u = linalg::zeros(n * d, n * d);
        for (x, ux) in self.unitaries.iter().enumerate() {
            u.view_mut((self.perm[x] * d, x * d), (d, d)).copy_from(ux);
        }
        u
    }

    pub fn to_channel(&self) -> Channel {
        Channel::unchecked(vec![self.n(), self.d()], vec![self.n(), self.d()], vec![self.unitary()])
            .expect("shapes are consistent by construction")
    }

    /// `(perm^-1, {U_{perm^-1(y)}^†})`.
    pub fn inverse(&self) -> Self {
        let n = self.n();
        let mut inv = vec![0; n];
        for (x, &y) in self.perm.iter().enumerate() {
            inv[y] = x;
        }
        let unitaries = (0..n).map(|y| self.unitaries[inv[y]].adjoint()).collect();
        Self { perm: inv, unitaries }
    }
}

/// Controlled-unitary channel `sum_x |x><x| (x) U_x` on `[n, d]`.
pub fn controlled_unitary_channel(unitaries: Vec<CMatrix>) -> Result<Channel> {
    let n = unitaries.len();
    let rci = ReversibleCQInteraction::new((0..n).collect(), unitaries)?;
    Ok(rci.to_channel())
}
