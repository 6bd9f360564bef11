//! Constructive reversibility test: invert the transfer matrix and check
//! whether the inverse is itself a channel.

use serde::Serialize;

use super::Channel;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Relative singular-value threshold below which the transfer matrix is
/// treated as rank deficient.
pub const RANK_TOL: f64 = 1e-9;

/// Irreversibility assigned to maps whose transfer matrix is singular.
pub const SINGULAR_RESIDUAL: f64 = 10.0;

#[derive(Debug, Clone)]
pub enum Reversibility {
    Reversible { inverse: Channel },
    Irreversible(IrreversibilityWitness),
}

impl Reversibility {
    pub fn is_reversible(&self) -> bool {
        matches!(self, Reversibility::Reversible { .. })
    }

    pub fn inverse(&self) -> Option<&Channel> {
        match self {
            Reversibility::Reversible { inverse } => Some(inverse),
            Reversibility::Irreversible(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&IrreversibilityWitness> {
        match self {
            Reversibility::Reversible { .. } => None,
            Reversibility::Irreversible(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IrreversibilityWitness {
    /// Some operator direction is annihilated (up to `RANK_TOL`).
    RankDeficient {
        rank: usize,
        full_rank: usize,
        smallest_singular_value: f64,
        #[serde(skip)]
        lost_direction: CMatrix,
    },
    InverseNotCompletelyPositive { min_choi_eigenvalue: f64 },
    InverseNotTracePreserving { defect: f64 },
}

/// Physicality of the linear inverse of a channel.
#[derive(Debug, Clone, Serialize)]
pub struct InverseDiagnostics {
    pub rank: usize,
    pub full_rank: usize,
    pub smallest_singular_value: f64,
    pub min_choi_eigenvalue: f64,
    /// Sum of the magnitudes of the negative Choi eigenvalues.
    pub negativity: f64,
    pub tp_defect: f64,
    #[serde(skip)]
    pub inverse_choi: Option<CMatrix>,
    #[serde(skip)]
    pub lost_direction: Option<CMatrix>,
}

impl InverseDiagnostics {
    pub fn singular(&self) -> bool {
        self.rank < self.full_rank
    }

    /// TP defect of the inverse plus its Choi negativity; a fixed large
    /// constant when no inverse exists.
    pub fn residual(&self) -> f64 {
        if self.singular() {
            SINGULAR_RESIDUAL
        } else {
            self.tp_defect + self.negativity
        }
    }
}

pub fn inverse_diagnostics(c: &Channel) -> Result<InverseDiagnostics> {
    let n = c.in_total();
    if n != c.out_total() {
        return Err(Error::Dimension(format!(
            "reversibility needs equal input/output dims, got {n} and {}",
            c.out_total()
        )));
    }
    let t = c.transfer_matrix();
    let full = n * n;
    let svd = t.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().copied().fold(0.0_f64, f64::max);
    let (k_min, s_min) = sigma
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    let rank = sigma.iter().filter(|&&s| s > RANK_TOL * s_max).count();

    if rank < full {
        let dir = v_t.row(k_min).adjoint();
        let lost = CMatrix::from_fn(n, n, |i, j| dir[i * n + j]);
        return Ok(InverseDiagnostics {
            rank,
            full_rank: full,
            smallest_singular_value: s_min,
            min_choi_eigenvalue: f64::NEG_INFINITY,
            negativity: f64::INFINITY,
            tp_defect: f64::INFINITY,
            inverse_choi: None,
            lost_direction: Some(lost),
        });
    }

    // T^-1 = V diag(1/s) U^†
    let mut v = v_t.adjoint();
    for (k, s) in sigma.iter().enumerate() {
        let mut col = v.column_mut(k);
        col /= C64::new(*s, 0.0);
    }
    let t_inv = v * u.adjoint();
    // reshuffle: J[(i,a),(j,b)] = T^-1[(a,b),(i,j)]
    let j = CMatrix::from_fn(full, full, |r, col| {
        let (i, a) = (r / n, r % n);
        let (jj, b) = (col / n, col % n);
        t_inv[(a * n + b, i * n + jj)]
    });
    let eig = linalg::eigvalsh(&j)?;
    let min = eig.first().copied().unwrap_or(0.0);
    let negativity: f64 = eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let mut tr_out = linalg::zeros(n, n);
    for i in 0..n {
        for jj in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..n {
                acc += j[(i * n + a, jj * n + a)];
            }
            tr_out[(i, jj)] = acc;
        }
    }
    let tp_defect = linalg::max_abs(&(tr_out - linalg::identity(n)));
    Ok(InverseDiagnostics {
        rank,
        full_rank: full,
        smallest_singular_value: s_min,
        min_choi_eigenvalue: min,
        negativity,
        tp_defect,
        inverse_choi: Some(j),
        lost_direction: None,
    })
}

/// Decides whether `c` has a physical inverse. `tol` bounds both the Choi
/// negativity and the trace-preservation defect of the linear inverse.
pub fn reversibility(c: &Channel, tol: f64) -> Result<Reversibility> {
    classify(c, inverse_diagnostics(c)?, tol)
}

/// Verdict from diagnostics already computed for `c`.
pub(crate) fn classify(c: &Channel, diag: InverseDiagnostics, tol: f64) -> Result<Reversibility> {
    if diag.singular() {
        return Ok(Reversibility::Irreversible(IrreversibilityWitness::RankDeficient {
            rank: diag.rank,
            full_rank: diag.full_rank,
            smallest_singular_value: diag.smallest_singular_value,
            lost_direction: diag.lost_direction.expect("singular diagnostics carry a direction"),
        }));
    }
    if diag.min_choi_eigenvalue < -tol {
        return Ok(Reversibility::Irreversible(
            IrreversibilityWitness::InverseNotCompletelyPositive {
                min_choi_eigenvalue: diag.min_choi_eigenvalue,
            },
        ));
    }
    if diag.tp_defect > tol {
        return Ok(Reversibility::Irreversible(IrreversibilityWitness::InverseNotTracePreserving {
            defect: diag.tp_defect,
        }));
    }
    let choi = diag.inverse_choi.expect("invertible diagnostics carry the Choi matrix");
    let inverse = Channel::from_choi_with_tol(
        c.out_dims().to_vec(),
        c.in_dims().to_vec(),
        choi,
        tol,
        tol,
    )?;
    Ok(Reversibility::Reversible { inverse })
}

pub fn irreversibility_residual(c: &Channel) -> Result<f64> {
    Ok(inverse_diagnostics(c)?.residual())
}
