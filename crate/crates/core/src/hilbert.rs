//! States of finite-dimensional classical and quantum systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, dim_product, hermiticity_defect, kron, CMatrix, C64, MAX_DIM, PSD_TOL, STRUCTURE_TOL,
};

/// Density operator on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    ///
    /// Eigenvalues in `(-PSD_TOL, 0)` are accepted as numerical zeros; anything
    /// more negative is rejected rather than projected away.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !linalg::is_square(&entries) || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "density matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let herm = hermiticity_defect(&entries);
        if herm > STRUCTURE_TOL {
            return Err(Error::Invariant(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = entries.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STRUCTURE_TOL {
            return Err(Error::Invariant(format!("trace is {tr}, expected 1")));
        }
        let min = linalg::min_eigenvalue(&entries)?;
        if min < -PSD_TOL {
            return Err(Error::Invariant(format!(
                "not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Invariant("zero state vector".into()));
        }
        let v = CMatrix::from_iterator(amplitudes.len(), 1, amplitudes.iter().map(|a| a / norm));
        Self::new(&v * v.adjoint())
    }

    /// `|i><i|`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::Dimension(format!("basis index {i} out of range for dim {dim}")));
        }
        Ok(Self { entries: linalg::matrix_unit(dim, i, i) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { entries: linalg::identity(dim) / C64::new(dim as f64, 0.0) }
    }

    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self { entries: linalg::random_density_op(dim, rng) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// The diagonal as a probability vector (the state seen by a measurement
    /// in the canonical basis).
    pub fn diagonal_distribution(&self) -> Result<ClassicalDistribution> {
        ClassicalDistribution::new((0..self.dim()).map(|i| self.entries[(i, i)].re).collect())
    }
}

/// Probability vector on an `n`-vertex simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassicalDistribution {
    weights: Vec<f64>,
}

impl ClassicalDistribution {
    pub const NEGATIVE_CLAMP: f64 = 1e-12;

    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Dimension("empty distribution".into()));
        }
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -Self::NEGATIVE_CLAMP {
                return Err(Error::Invariant(format!("weight {i} is {w}")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::Invariant(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn point(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Dimension(format!("vertex {i} out of range for n = {n}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(Self { weights: w })
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    /// Flat Dirichlet sample.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let draws: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let s: f64 = draws.iter().sum();
        Self { weights: draws.into_iter().map(|x| x / s).collect() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Diagonal density matrix in the canonical basis.
    pub fn to_density(&self) -> DensityMatrix {
        let diag = nalgebra::DVector::from_iterator(
            self.len(),
            self.weights.iter().map(|&w| C64::new(w, 0.0)),
        );
        DensityMatrix { entries: CMatrix::from_diagonal(&diag) }
    }
}

impl TryFrom<Vec<f64>> for ClassicalDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassicalDistribution> for Vec<f64> {
    fn from(d: ClassicalDistribution) -> Self {
        d.weights
    }
}

/// `sum_x p(x) |x><x| (x) rho(x)`, classical factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct CQState {
    weights: ClassicalDistribution,
    states: Vec<DensityMatrix>,
}

impl CQState {
    pub fn new(weights: ClassicalDistribution, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} branches",
                weights.len(),
                states.len()
            )));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::Dimension("branch states differ in dimension".into()));
        }
        Ok(Self { weights, states })
    }

    pub fn classical_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn quantum_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn weights(&self) -> &ClassicalDistribution {
        &self.weights
    }

    pub fn branches(&self) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.weights.weights().iter().copied().zip(self.states.iter())
    }

    /// The joint `(n d) x (n d)` density matrix.
    pub fn embed(&self) -> DensityMatrix {
        let n = self.classical_dim();
        let d = self.quantum_dim();
        let mut m = linalg::zeros(n * d, n * d);
        for (x, (p, rho)) in self.branches().enumerate() {
            let block = rho.entries() * C64::new(p, 0.0);
            m.view_mut((x * d, x * d), (d, d)).copy_from(&block);
        }
        DensityMatrix::from_trusted(m)
    }

    /// Recovers the branches of a joint state that is classical on factor 0.
    ///
    /// Branches with zero weight get the maximally mixed state.
    pub fn extract(rho: &DensityMatrix, n: usize, d: usize) -> Result<Self> {
        if rho.dim() != n * d {
            return Err(Error::Dimension(format!(
                "state of dim {} is not {n} x {d}",
                rho.dim()
            )));
        }
        let dephased = linalg::dephase_op(rho.entries(), &[n, d], 0)?;
        let residual = linalg::max_abs(&(rho.entries() - &dephased));
        if residual > STRUCTURE_TOL {
            return Err(Error::Structure(format!(
                "state carries coherence across classical labels (residual {residual:.3e})"
            )));
        }
        let mut weights = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for x in 0..n {
            let block = rho.entries().view((x * d, x * d), (d, d)).into_owned();
            let p = block.trace().re;
            weights.push(p);
            if p > 0.0 {
                states.push(DensityMatrix::from_trusted(block / C64::new(p, 0.0)));
            } else {
                states.push(DensityMatrix::maximally_mixed(d));
            }
        }
        Self::new(ClassicalDistribution::new(weights)?, states)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Classical,
    Quantum,
    CqComposite,
}

/// Label and factor layout of a system taking part in an interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub label: String,
    pub kind: SystemKind,
    pub dims: Vec<usize>,
}

impl SystemDescriptor {
    pub fn new(label: impl Into<String>, kind: SystemKind, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("invalid dims {dims:?}")));
        }
        if kind == SystemKind::CqComposite && dims.len() != 2 {
            return Err(Error::Dimension("a cq-composite has exactly two factors".into()));
        }
        Ok(Self { label: label.into(), kind, dims })
    }

    pub fn total_dim(&self) -> usize {
        dim_product(&self.dims)
    }

    /// Checks that a state is admissible: classical systems are diagonal,
    /// cq-composites carry no coherence across the classical factor.
    pub fn admits(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.total_dim() {
            return Err(Error::Dimension(format!(
                "{}: state dim {} vs system dim {}",
                self.label,
                rho.dim(),
                self.total_dim()
            )));
        }
        let residual = match self.kind {
            SystemKind::Quantum => 0.0,
            SystemKind::Classical => {
                let mut off = rho.entries().clone();
                off.fill_diagonal(C64::new(0.0, 0.0));
                linalg::max_abs(&off)
            }
            SystemKind::CqComposite => linalg::max_abs(
                &(rho.entries() - linalg::dephase_op(rho.entries(), &self.dims, 0)?),
            ),
        };
        if residual > STRUCTURE_TOL {
            return Err(Error::Structure(format!(
                "{}: state is not admissible for a {:?} system (residual {residual:.3e})",
                self.label, self.kind
            )));
        }
        Ok(())
    }
}

/// `a (x) b`.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    tensor_with_limit(a, b, MAX_DIM)
}

pub fn tensor_with_limit(a: &DensityMatrix, b: &DensityMatrix, max_dim: usize) -> Result<DensityMatrix> {
    let dim = a.dim().saturating_mul(b.dim());
    if dim > max_dim {
        return Err(Error::Size { dim, max: max_dim });
    }
    Ok(DensityMatrix::from_trusted(kron(a.entries(), b.entries())))
}

pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(linalg::partial_trace_op(rho.entries(), dims, keep)?))
}

/// Removes coherence between distinct basis labels of `classical_factor`.
pub fn dephase(rho: &DensityMatrix, dims: &[usize], classical_factor: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(linalg::dephase_op(rho.entries(), dims, classical_factor)?))
}

/// Half the trace norm of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(0.5 * linalg::trace_norm(&(rho.entries() - sigma.entries())))
}

pub fn total_variation(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("{} vs {}", p.len(), q.len())));
    }
    Ok(0.5 * p.weights().iter().zip(q.weights()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
