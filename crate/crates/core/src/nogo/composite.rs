//! The non-disturbing measurement of `S` assembled from a reversible
//! interaction: prepare `G` in `s`, interact, copy `G` into a register `C`,
//! undo the interaction and discard `G`.

use serde::Serialize;

use crate::channels::{reversibility, Channel, Reversibility, StochasticMatrix, CqMap};
use crate::channels::is_cq_preserving_on;
use crate::error::{Error, Result};
use crate::hilbert::{total_variation, ClassicalDistribution, DensityMatrix};
use crate::linalg::{self, kron, CMatrix, MAP_TOL};
use crate::sectors::SectorDecomposition;

fn bipartite_dims(r: &Channel) -> Result<(usize, usize)> {
    if r.in_dims().len() != 2 || r.in_dims() != r.out_dims() {
        return Err(Error::Dimension(format!(
            "expected an interaction [n, d] -> [n, d], got {:?} -> {:?}",
            r.in_dims(),
            r.out_dims()
        )));
    }
    Ok((r.in_dims()[0], r.in_dims()[1]))
}

fn inverse_or_witness(r: &Channel) -> Result<Channel> {
    match reversibility(r, MAP_TOL)? {
        Reversibility::Reversible { inverse } => Ok(inverse),
        Reversibility::Irreversible(w) => Err(Error::Precondition(format!(
            "interaction is irreversible: {}",
            serde_json::to_string(&w).unwrap_or_else(|_| format!("{w:?}"))
        ))),
    }
}

/// `E_s: S -> S (x) C`, output factors `[S, C]`.
pub fn build_composite(r: &Channel, s: &ClassicalDistribution) -> Result<Channel> {
    let inverse = inverse_or_witness(r)?;
    build_composite_with_inverse(r, &inverse, s)
}

/// As [`build_composite`] with a precomputed inverse of `r`.
pub fn build_composite_with_inverse(
    r: &Channel,
    inverse: &Channel,
    s: &ClassicalDistribution,
) -> Result<Channel> {
    let (n, d) = bipartite_dims(r)?;
    if inverse.in_dims() != r.out_dims() || inverse.out_dims() != r.in_dims() {
        return Err(Error::Dimension("inverse does not match the interaction".into()));
    }
    if s.len() != n {
        return Err(Error::Dimension(format!("distribution over {} values for G of dim {n}", s.len())));
    }
    let g_state = s.to_density().into_entries();
    Channel::from_linear_map(vec![d], vec![d, n], |x| {
        let y = r.apply_op(&kron(&g_state, x));
        let mut out = linalg::zeros(d * n, d * n);
        for g in 0..n {
            // branch of the leak that recorded G = g
            let mut branch = linalg::zeros(n * d, n * d);
            branch
                .view_mut((g * d, g * d), (d, d))
                .copy_from(&y.view((g * d, g * d), (d, d)));
            let back = inverse.apply_op(&branch);
            let on_s = linalg::partial_trace_op(&back, &[n, d], &[1]).expect("consistent dims");
            out += kron(&on_s, &linalg::matrix_unit(n, g, g));
        }
        out
    })
}

fn composite_dims(e: &Channel) -> Result<(usize, usize)> {
    let d = e.in_total();
    if e.in_dims().len() != 1 || e.out_dims().len() != 2 || e.out_dims()[0] != d {
        return Err(Error::Dimension(format!(
            "expected a measurement S -> S (x) C, got {:?} -> {:?}",
            e.in_dims(),
            e.out_dims()
        )));
    }
    Ok((d, e.out_dims()[1]))
}

/// `max_ij (1/2) |Tr_C E(E_ij) - E_ij|_1`.
pub fn nondisturbance_residual(e: &Channel) -> Result<f64> {
    let (d, k) = composite_dims(e)?;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let unit = linalg::matrix_unit(d, i, j);
            let on_s = linalg::partial_trace_op(&e.apply_op(&unit), &[d, k], &[0])?;
            worst = worst.max(0.5 * linalg::trace_norm(&(on_s - unit)));
        }
    }
    Ok(worst)
}

fn pointer_of(e: &Channel, rho: &CMatrix, d: usize, k: usize) -> Result<ClassicalDistribution> {
    let c = linalg::partial_trace_op(&e.apply_op(rho), &[d, k], &[1])?;
    ClassicalDistribution::new((0..k).map(|i| c[(i, i)].re).collect())
}

/// Pointer marginal of `E` on the first probe (the maximally mixed state if
/// there are none), and the largest total-variation distance between the
/// pointer marginals of any two probes.
pub fn pointer_state_of(e: &Channel, probes: &[DensityMatrix]) -> Result<(ClassicalDistribution, f64)> {
    let (d, k) = composite_dims(e)?;
    if probes.is_empty() {
        return Ok((pointer_of(e, DensityMatrix::maximally_mixed(d).entries(), d, k)?, 0.0));
    }
    let mut pointers = probes
        .iter()
        .map(|p| {
            if p.dim() != d {
                return Err(Error::Dimension(format!("probe of dim {} for S of dim {d}", p.dim())));
            }
            pointer_of(e, p.entries(), d, k)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0_f64;
    for a in 0..pointers.len() {
        for b in a + 1..pointers.len() {
            spread = spread.max(total_variation(&pointers[a], &pointers[b])?);
        }
    }
    Ok((pointers.swap_remove(0), spread))
}

pub fn pointer_state(
    r: &Channel,
    s: &ClassicalDistribution,
    probes: &[DensityMatrix],
) -> Result<(ClassicalDistribution, f64)> {
    pointer_state_of(&build_composite(r, s)?, probes)
}

/// `max_ij |E(E_ij) - E_ij (x) chi|_1` with `chi` the pointer marginal on
/// the maximally mixed state.
pub fn factorization_residual_of(e: &Channel) -> Result<f64> {
    let (d, k) = composite_dims(e)?;
    let chi = pointer_of(e, DensityMatrix::maximally_mixed(d).entries(), d, k)?;
    let chi = chi.to_density().into_entries();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let unit = linalg::matrix_unit(d, i, j);
            let diff = e.apply_op(&unit) - kron(&unit, &chi);
            worst = worst.max(linalg::trace_norm(&diff));
        }
    }
    Ok(worst)
}

pub fn factorization_residual(r: &Channel, s: &ClassicalDistribution) -> Result<f64> {
    factorization_residual_of(&build_composite(r, s)?)
}

/// How the classical output of an interaction over a superselected system
/// depends on the quantum input.
#[derive(Debug, Clone, Serialize)]
pub struct SectorFactorization {
    /// Largest trace-norm deviation of an effect from block-constant form.
    pub residual: f64,
    pub block_dims: Vec<usize>,
    /// `coefficients[x][y][i]`: probability of output `y` on input `x` for
    /// any state supported in sector `i`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
}

impl SectorFactorization {
    /// `Sigma(y | i) = sum_x p(x) c[x][y][i]`: the stochastic map from the
    /// which-sector outcome to the classical output, given the classical
    /// input distribution `p`.
    pub fn which_sector_map(&self, p: &ClassicalDistribution) -> Result<StochasticMatrix> {
        let n_in = self.coefficients.len();
        if p.len() != n_in {
            return Err(Error::Dimension(format!("{} weights for {n_in} classical inputs", p.len())));
        }
        let n_out = self.coefficients[0].len();
        let k = self.block_dims.len();
        let mut entries = vec![0.0; n_out * k];
        for (x, &w) in p.weights().iter().enumerate() {
            for y in 0..n_out {
                for i in 0..k {
                    entries[y * k + i] += w * self.coefficients[x][y][i];
                }
            }
        }
        StochasticMatrix::new(n_out, k, entries)
    }
}

/// Checks that the classical output depends on the quantum input only
/// through its sector label, i.e. every effect is `(+)_i c_i I` in the
/// sector basis. Requires CQ preservation on block-diagonal inputs.
pub fn sector_factorization_residual(r: &Channel, s: &SectorDecomposition) -> Result<SectorFactorization> {
    if r.in_dims().len() != 2 || r.out_dims().len() != 2 || r.in_dims()[1] != s.dim() {
        return Err(Error::Dimension(format!(
            "interaction {:?} -> {:?} does not act on a system of dim {}",
            r.in_dims(),
            r.out_dims(),
            s.dim()
        )));
    }
    let check = is_cq_preserving_on(r, 0, &s.block_diagonal_basis(), MAP_TOL)?;
    if !check.preserving {
        return Err(Error::Structure(format!(
            "interaction creates classical coherence on sector states (residual {:.3e})",
            check.residual
        )));
    }
    let effects = CqMap::from_channel(r, 0)?.observables();
    let offsets = s.offsets();
    let mut residual = 0.0_f64;
    let coefficients = effects
        .iter()
        .map(|row| {
            row.iter()
                .map(|f| {
                    let g = s.to_block_basis(f);
                    let mut dev = 0.0;
                    let c: Vec<f64> = s
                        .block_dims()
                        .iter()
                        .zip(&offsets)
                        .map(|(&di, &o)| {
                            let block = g.view((o, o), (di, di)).into_owned();
                            let ci = block.trace().re / di as f64;
                            dev += linalg::trace_norm(&(block - linalg::identity(di) * linalg::c(ci, 0.0)));
                            ci
                        })
                        .collect();
                    residual = residual.max(dev);
                    c
                })
                .collect()
        })
        .collect();
    Ok(SectorFactorization { residual, block_dims: s.block_dims().to_vec(), coefficients })
}
