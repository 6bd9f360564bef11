use serde::Serialize;

use crate::channels::{is_cq_preserving, Channel, CqMap};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, MAP_TOL, PSD_TOL};
use crate::sectors::project_onto;

/// The effects `F_{y|x}` with `q(y | x, rho) = Tr(F_{y|x} rho)`: the
/// classical output distribution as a linear functional of the quantum
/// input, one POVM per classical input.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveObservables {
    n_in: usize,
    n_out: usize,
    d: usize,
    #[serde(skip)]
    effects: Vec<Vec<CMatrix>>,
}

impl EffectiveObservables {
    /// Validates that each `effects[x]` is a POVM.
    pub fn new(effects: Vec<Vec<CMatrix>>) -> Result<Self> {
        let f = Self::from_parts(effects)?;
        for x in 0..f.n_in {
            let mut sum = linalg::zeros(f.d, f.d);
            for y in 0..f.n_out {
                let e = &f.effects[x][y];
                let min = linalg::min_eigenvalue(e)?;
                if min < -PSD_TOL {
                    return Err(Error::Invariant(format!("F_{{{y}|{x}}} has eigenvalue {min:.3e}")));
                }
                sum += e;
            }
            let defect = linalg::max_abs(&(sum - linalg::identity(f.d)));
            if defect > MAP_TOL {
                return Err(Error::Invariant(format!(
                    "effects for input {x} sum to identity only up to {defect:.3e}"
                )));
            }
        }
        Ok(f)
    }

    pub(crate) fn from_parts(effects: Vec<Vec<CMatrix>>) -> Result<Self> {
        let n_in = effects.len();
        let n_out = effects.first().map_or(0, Vec::len);
        let d = effects.first().and_then(|r| r.first()).map_or(0, CMatrix::nrows);
        if n_in == 0 || n_out == 0 || d == 0 {
            return Err(Error::Dimension("empty effect table".into()));
        }
        for row in &effects {
            if row.len() != n_out || row.iter().any(|e| e.nrows() != d || e.ncols() != d) {
                return Err(Error::Dimension("ragged effect table".into()));
            }
        }
        Ok(Self { n_in, n_out, d, effects })
    }

    pub fn classical_dims(&self) -> (usize, usize) {
        (self.n_in, self.n_out)
    }

    pub fn quantum_dim(&self) -> usize {
        self.d
    }

    pub fn effect(&self, x: usize, y: usize) -> &CMatrix {
        &self.effects[x][y]
    }

    /// `q(. | x, rho)`.
    pub fn outcome_distribution(&self, x: usize, rho: &CMatrix) -> Vec<f64> {
        self.effects[x].iter().map(|f| (f * rho).trace().re).collect()
    }

    /// Effects as seen by states in the span of an orthonormal operator
    /// basis of a *-algebra.
    pub fn restricted_to(&self, algebra: &[CMatrix]) -> Self {
        let effects = self
            .effects
            .iter()
            .map(|row| row.iter().map(|f| linalg::hermitize(&project_onto(algebra, f))).collect())
            .collect();
        Self { effects, ..*self }
    }
}

/// Effective observables of a CQ-preserving bipartite channel.
pub fn effective_observables(r: &Channel, classical_factor: usize) -> Result<EffectiveObservables> {
    let check = is_cq_preserving(r, classical_factor, MAP_TOL)?;
    if !check.preserving {
        return Err(Error::Structure(format!(
            "channel creates coherence on the classical factor (residual {:.3e})",
            check.residual
        )));
    }
    EffectiveObservables::new(CqMap::from_channel(r, classical_factor)?.observables())
}

/// Assembles the effects without checking the CQ structure or POVM
/// validity.
pub(crate) fn observables_unchecked(r: &Channel, classical_factor: usize) -> Result<EffectiveObservables> {
    EffectiveObservables::from_parts(CqMap::from_channel(r, classical_factor)?.observables())
}

/// `max_x (1/2) sum_y (lambda_max - lambda_min)(F_{y|x})`. Upper-bounds the
/// total-variation change of the classical output over all pairs of quantum
/// inputs, and vanishes iff every effect is proportional to the identity.
pub fn signalling_bound(f: &EffectiveObservables) -> f64 {
    (0..f.n_in)
        .map(|x| {
            0.5 * f.effects[x]
                .iter()
                .map(|e| {
                    let l = linalg::eigvalsh(e).unwrap_or_else(|_| vec![f64::NAN]);
                    l[l.len() - 1] - l[0]
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        controlled_unitary, decohered_cnot, entangling_cnot, sector_measurement, ReversibleCQInteraction,
    };
    use crate::linalg::kron;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decohered_cnot_reads_out_z() {
        let f = effective_observables(&decohered_cnot(), 0).unwrap();
        assert!(linalg::max_abs(&(f.effect(0, 0) - linalg::matrix_unit(2, 0, 0))) < 1e-14);
        assert!(linalg::max_abs(&(f.effect(0, 1) - linalg::matrix_unit(2, 1, 1))) < 1e-14);
        assert!((signalling_bound(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controlled_unitary_never_moves_the_marginal() {
        let f = effective_observables(&controlled_unitary(), 0).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let expect = if x == y { linalg::identity(2) } else { linalg::zeros(2, 2) };
                assert!(linalg::max_abs(&(f.effect(x, y) - expect)) < 1e-12);
            }
        }
        assert!(signalling_bound(&f) < 1e-12);
    }

    #[test]
    fn reversible_interaction_effects_follow_the_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let r = ReversibleCQInteraction::random(3, 2, &mut rng);
        let f = effective_observables(&r.to_channel(), 0).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expect = if y == r.perm()[x] { linalg::identity(2) } else { linalg::zeros(2, 2) };
                assert!(linalg::max_abs(&(f.effect(x, y) - expect)) < 1e-12);
            }
        }
        assert!(signalling_bound(&f) <= 1e-10);
    }

    #[test]
    fn sector_measurement_effects_are_block_constant() {
        let f = observables_unchecked(&sector_measurement(), 0).unwrap();
        let v = crate::channels::singlet_triplet_basis();
        for x in 0..2 {
            for y in 0..2 {
                let g = v.adjoint() * f.effect(x, y) * &v;
                let c0 = g[(0, 0)].re;
                let c1 = g[(1, 1)].re;
                let mut expect = linalg::identity(4) * linalg::c(c1, 0.0);
                expect[(0, 0)] = linalg::c(c0, 0.0);
                assert!(linalg::max_abs(&(g - expect)) < 1e-12);
            }
        }
        assert!((signalling_bound(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entangling_cnot_is_rejected_as_non_cq() {
        assert!(matches!(effective_observables(&entangling_cnot(), 0), Err(Error::Structure(_))));
    }

    #[test]
    fn linear_assembly_matches_direct_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let r = decohered_cnot();
        let f = effective_observables(&r, 0).unwrap();
        for _ in 0..20 {
            let rho = linalg::random_density_op(2, &mut rng);
            for x in 0..2 {
                let out = r.apply_op(&kron(&linalg::matrix_unit(2, x, x), &rho));
                let g = linalg::partial_trace_op(&out, &[2, 2], &[0]).unwrap();
                let q = f.outcome_distribution(x, &rho);
                for y in 0..2 {
                    assert!((g[(y, y)].re - q[y]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn povm_validation() {
        let bad = vec![vec![linalg::identity(2), linalg::identity(2)]];
        assert!(matches!(EffectiveObservables::new(bad), Err(Error::Invariant(_))));
        assert!(EffectiveObservables::new(vec![]).is_err());
    }
}
