use serde::Serialize;

use super::{reversibility::RANK_TOL, reversibility::SINGULAR_RESIDUAL, Channel};
use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMatrix, C64};

/// A map restricted to classical-quantum inputs, stored as the conditional
/// quantum maps `Phi_{y|x}(rho) = <y| C(|x><x| (x) rho) |y>`.
///
/// Each block is the row-major transfer matrix of `Phi_{y|x}`.
#[derive(Debug, Clone)]
pub struct CqMap {
    n_in: usize,
    n_out: usize,
    d_in: usize,
    d_out: usize,
    blocks: Vec<CMatrix>,
}

/// Physicality of the inverse of a CQ map on the CQ operator space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CqInverseDiagnostics {
    pub singular: bool,
    pub smallest_singular_value: f64,
    pub negativity: f64,
    pub tp_defect: f64,
}

impl CqInverseDiagnostics {
    pub fn residual(&self) -> f64 {
        if self.singular {
            SINGULAR_RESIDUAL
        } else {
            self.tp_defect + self.negativity
        }
    }
}

impl CqMap {
    /// Reads the conditional maps of a bipartite channel whose classical
    /// factor is `classical_factor`.
    pub fn from_channel(c: &Channel, classical_factor: usize) -> Result<Self> {
        if c.in_dims().len() != 2 || c.out_dims().len() != 2 || classical_factor > 1 {
            return Err(Error::Dimension(format!(
                "expected a bipartite channel, got {:?} -> {:?}",
                c.in_dims(),
                c.out_dims()
            )));
        }
        let owned;
        let c = if classical_factor == 1 {
            owned = c.permute_factors(&[1, 0], &[1, 0])?;
            &owned
        } else {
            c
        };
        let (n_in, d_in) = (c.in_dims()[0], c.in_dims()[1]);
        let (n_out, d_out) = (c.out_dims()[0], c.out_dims()[1]);
        let mut blocks = vec![linalg::zeros(d_out * d_out, d_in * d_in); n_out * n_in];
        for x in 0..n_in {
            let px = linalg::matrix_unit(n_in, x, x);
            for i in 0..d_in {
                for j in 0..d_in {
                    let y_full = c.apply_op(&kron(&px, &linalg::matrix_unit(d_in, i, j)));
                    for y in 0..n_out {
                        let blk = &mut blocks[y * n_in + x];
                        for a in 0..d_out {
                            for b in 0..d_out {
                                blk[(a * d_out + b, i * d_in + j)] = y_full[(y * d_out + a, y * d_out + b)];
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { n_in, n_out, d_in, d_out, blocks })
    }

    /// `Phi_{y|x}(rho) = A_{yx} rho A_{yx}^†`, with `ops[y * n + x] = A_{yx}`.
    pub fn from_conditional_kraus(n: usize, d: usize, ops: &[CMatrix]) -> Result<Self> {
        if ops.len() != n * n || ops.iter().any(|a| a.nrows() != d || a.ncols() != d) {
            return Err(Error::Dimension(format!("need {} operators of size {d}x{d}", n * n)));
        }
        let blocks = ops.iter().map(|a| kron(a, &a.map(|z| z.conj()))).collect();
        Ok(Self { n_in: n, n_out: n, d_in: d, d_out: d, blocks })
    }

    pub fn classical_dims(&self) -> (usize, usize) {
        (self.n_in, self.n_out)
    }

    pub fn quantum_dims(&self) -> (usize, usize) {
        (self.d_in, self.d_out)
    }

    pub fn block(&self, y: usize, x: usize) -> &CMatrix {
        &self.blocks[y * self.n_in + x]
    }

    /// `F[x][y]`, the effect with `q(y | x, rho) = Tr(F_{y|x} rho)`.
    pub fn observables(&self) -> Vec<Vec<CMatrix>> {
        let (d, dout) = (self.d_in, self.d_out);
        (0..self.n_in)
            .map(|x| {
                (0..self.n_out)
                    .map(|y| {
                        let t = self.block(y, x);
                        let f = CMatrix::from_fn(d, d, |a, b| {
                            (0..dout).map(|cc| t[(cc * dout + cc, b * d + a)]).sum::<C64>()
                        });
                        linalg::hermitize(&f)
                    })
                    .collect()
            })
            .collect()
    }

    /// Transfer matrix on the CQ operator space, rows `(y, a, b)` and columns
    /// `(x, i, j)`.
    pub fn transfer_matrix(&self) -> CMatrix {
        let din2 = self.d_in * self.d_in;
        let dout2 = self.d_out * self.d_out;
        let mut t = linalg::zeros(self.n_out * dout2, self.n_in * din2);
        for y in 0..self.n_out {
            for x in 0..self.n_in {
                t.view_mut((y * dout2, x * din2), (dout2, din2)).copy_from(self.block(y, x));
            }
        }
        t
    }

    /// Inverts the map on the CQ operator space and measures how far the
    /// inverse is from a CQ channel.
    pub fn inverse_diagnostics(&self) -> Result<CqInverseDiagnostics> {
        if self.n_in != self.n_out || self.d_in != self.d_out {
            return Err(Error::Dimension("CQ inverse needs equal input and output dims".into()));
        }
        let (n, d) = (self.n_in, self.d_in);
        let dd = d * d;
        let t = self.transfer_matrix();
        let sv = linalg::singular_values(&t);
        let s_max = sv[0];
        let s_min = *sv.last().expect("nonempty");
        if !(s_min > RANK_TOL * s_max) {
            return Ok(CqInverseDiagnostics {
                singular: true,
                smallest_singular_value: s_min,
                negativity: f64::INFINITY,
                tp_defect: f64::INFINITY,
            });
        }
        let inv = t
            .try_inverse()
            .ok_or_else(|| Error::Numerical("CQ transfer matrix inversion failed".into()))?;
        let mut negativity = 0.0;
        let mut tp_defect = 0.0_f64;
        for y in 0..n {
            let mut tr_out = linalg::zeros(d, d);
            for x in 0..n {
                let blk = inv.view((x * dd, y * dd), (dd, dd));
                let j = CMatrix::from_fn(dd, dd, |r, col| {
                    let (i, a) = (r / d, r % d);
                    let (jj, b) = (col / d, col % d);
                    blk[(a * d + b, i * d + jj)]
                });
                for l in linalg::eigvalsh(&j)? {
                    if l < 0.0 {
                        negativity -= l;
                    }
                }
                for i in 0..d {
                    for jj in 0..d {
                        for a in 0..d {
                            tr_out[(i, jj)] += j[(i * d + a, jj * d + a)];
                        }
                    }
                }
            }
            tp_defect = tp_defect.max(linalg::max_abs(&(tr_out - linalg::identity(d))));
        }
        Ok(CqInverseDiagnostics { singular: false, smallest_singular_value: s_min, negativity, tp_defect })
    }
}
