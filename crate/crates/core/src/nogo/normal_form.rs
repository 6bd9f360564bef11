use serde::Serialize;

use crate::channels::{Channel, CqMap, ReversibleCQInteraction};
use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMatrix, C64};

/// A reversible CQ interaction recovered from a channel, with the largest
/// trace-norm discrepancy between the two on CQ inputs.
#[derive(Debug, Clone, Serialize)]
pub struct NormalForm {
    #[serde(skip)]
    pub interaction: ReversibleCQInteraction,
    pub perm: Vec<usize>,
    pub residual: f64,
}

/// Rotates the phase so the first entry of (near) maximal modulus is real
/// and positive.
fn fix_phase(u: &mut CMatrix) {
    let max = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(&z) = u.iter().find(|z| z.norm() >= max - 1e-12) {
        let phase = z.conj() / z.norm();
        *u *= phase;
    }
}

/// Closest unitary in Frobenius norm.
fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested U") * svd.v_t.expect("requested V^T")
}

/// Recovers `|x> (x) psi -> |perm(x)> (x) U_x psi` from a CQ channel on
/// `[n, d]`. Fails with the reconstruction residual if it exceeds `tol`.
pub fn decompose_reversible(r: &Channel, tol: f64) -> Result<NormalForm> {
    let map = CqMap::from_channel(r, 0)?;
    let (n, n_out) = map.classical_dims();
    let (d, d_out) = map.quantum_dims();
    if n != n_out || d != d_out {
        return Err(Error::Dimension("normal form needs equal input and output dims".into()));
    }
    let effects = map.observables();
    let mut perm = Vec::with_capacity(n);
    let mut unitaries = Vec::with_capacity(n);
    for (x, row) in effects.iter().enumerate() {
        let weights: Vec<f64> = row.iter().map(|f| f.trace().re / d as f64).collect();
        let y = (0..n)
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
            .expect("n >= 1");
        perm.push(y);
        // Choi of U . U^† is |v><v| with v_(i,a) = U[a,i]
        let t = map.block(y, x);
        let choi = CMatrix::from_fn(d * d, d * d, |row, col| {
            let (i, a) = (row / d, row % d);
            let (j, b) = (col / d, col % d);
            t[(a * d + b, i * d + j)]
        });
        let (vals, vecs) = linalg::eigh(&choi)?;
        let top = vals[d * d - 1].max(0.0).sqrt();
        let mut u = CMatrix::from_fn(d, d, |a, i| vecs[(i * d + a, d * d - 1)] * C64::new(top, 0.0));
        u = polar_unitary(&u);
        fix_phase(&mut u);
        unitaries.push(u);
    }
    let mut seen = vec![false; n];
    for &y in &perm {
        if seen[y] {
            return Err(Error::Structure(format!("classical action {perm:?} is not a permutation")));
        }
        seen[y] = true;
    }
    let interaction = ReversibleCQInteraction::new(perm.clone(), unitaries)?;
    let candidate = interaction.to_channel();
    let mut residual = 0.0_f64;
    for x in 0..n {
        let px = linalg::matrix_unit(n, x, x);
        for i in 0..d {
            for j in 0..d {
                let input = kron(&px, &linalg::matrix_unit(d, i, j));
                let diff = r.apply_op(&input) - candidate.apply_op(&input);
                residual = residual.max(linalg::trace_norm(&diff));
            }
        }
    }
    if residual > tol {
        return Err(Error::NormalForm { residual });
    }
    Ok(NormalForm { interaction, perm, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{controlled_unitary, decohered_cnot};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn equal_up_to_phase(a: &CMatrix, b: &CMatrix) -> bool {
        let overlap = linalg::hs_inner(a, b).norm() / a.nrows() as f64;
        (overlap - 1.0).abs() < 1e-10
    }

    #[test]
    fn identity_has_trivial_normal_form() {
        let nf = decompose_reversible(&Channel::identity(vec![2, 3]).unwrap(), 1e-10).unwrap();
        assert_eq!(nf.perm, vec![0, 1]);
        for u in nf.interaction.unitaries() {
            assert!(linalg::max_abs(&(u - linalg::identity(3))) < 1e-12);
        }
    }

    #[test]
    fn controlled_unitary_blocks_are_recovered() {
        let nf = decompose_reversible(&controlled_unitary(), 1e-10).unwrap();
        assert_eq!(nf.perm, vec![0, 1]);
        let h = CMatrix::from_row_slice(2, 2, &[linalg::c(1.0, 0.0), linalg::c(1.0, 0.0), linalg::c(1.0, 0.0), linalg::c(-1.0, 0.0)])
            * linalg::c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(equal_up_to_phase(&nf.interaction.unitaries()[1], &h));
        assert!(nf.residual <= 1e-10);
    }

    #[test]
    fn random_interactions_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let r = ReversibleCQInteraction::random(3, 4, &mut rng);
            let nf = decompose_reversible(&r.to_channel(), 1e-9).unwrap();
            assert_eq!(nf.perm, r.perm());
            for (a, b) in nf.interaction.unitaries().iter().zip(r.unitaries()) {
                assert!(equal_up_to_phase(a, b));
            }
        }
    }

    #[test]
    fn irreversible_channel_has_no_normal_form() {
        assert!(decompose_reversible(&decohered_cnot(), 1e-9).is_err());
    }
}
