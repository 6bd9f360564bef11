//! JSON encoding of channels: row-major matrices of `[re, im]` pairs.

use serde::{Deserialize, Serialize};

use super::Channel;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Row-major complex matrix, each entry `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if let Some(r) = self.0.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {r} has {} entries, expected {cols}",
                self.0[r].len()
            )));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            let [re, im] = self.0[i][j];
            C64::new(re, im)
        }))
    }
}

/// On-disk channel description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub kraus: Vec<MatrixJson>,
    /// Operators on the quantum factor generating its algebra; absent means
    /// the full matrix algebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixJson>>,
}

impl ChannelDocument {
    pub fn from_channel(name: Option<String>, c: &Channel, generators: Option<&[CMatrix]>) -> Self {
        Self {
            name,
            in_dims: c.in_dims().to_vec(),
            out_dims: c.out_dims().to_vec(),
            kraus: c.kraus().iter().map(MatrixJson::from_matrix).collect(),
            generators: generators.map(|g| g.iter().map(MatrixJson::from_matrix).collect()),
        }
    }

    pub fn to_channel(&self, allow_unphysical: bool) -> Result<Channel> {
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(k, m)| {
                m.to_matrix().map_err(|e| Error::Parse {
                    path: format!("kraus[{k}]"),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if allow_unphysical {
            Channel::unchecked(self.in_dims.clone(), self.out_dims.clone(), kraus)
        } else {
            Channel::new(self.in_dims.clone(), self.out_dims.clone(), kraus)
        }
    }

    pub fn generator_matrices(&self) -> Result<Option<Vec<CMatrix>>> {
        self.generators
            .as_ref()
            .map(|gs| {
                gs.iter()
                    .enumerate()
                    .map(|(k, m)| {
                        m.to_matrix().map_err(|e| Error::Parse {
                            path: format!("generators[{k}]"),
                            message: e.to_string(),
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Parses a channel document, reporting the failing field path with line and
/// column on malformed input.
pub fn parse_channel_document(text: &str) -> Result<ChannelDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            path,
            message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        }
    })
}
