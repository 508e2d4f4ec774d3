//! Column-major node attributes and the normalization that turns a column
//! into a source distribution for propagation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binio::Reader;
use crate::error::{Error, Result};
use crate::graph::DegreePowers;

const MATRIX_MAGIC: &[u8; 4] = b"SCMX";
const MATRIX_VERSION: u32 = 1;
const DTYPE_F32: u8 = 1;

/// Dense `n x F` matrix stored column by column.
///
/// Serves both as the attribute matrix `X` and as the embedding matrix `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix {
    num_rows: usize,
    num_cols: usize,
    data: Vec<f64>,
}

pub type FeatureMatrix = ColumnMatrix;
pub type EmbeddingMatrix = ColumnMatrix;

impl ColumnMatrix {
    pub fn zeros(num_rows: usize, num_cols: usize) -> Self {
        ColumnMatrix {
            num_rows,
            num_cols,
            data: vec![0.0; num_rows * num_cols],
        }
    }

    /// Builds from columns; every value must be finite.
    pub fn from_columns(num_rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let num_cols = columns.len();
        let mut data = Vec::with_capacity(num_rows * num_cols);
        for (c, col) in columns.into_iter().enumerate() {
            if col.len() != num_rows {
                return Err(Error::Dimension(format!(
                    "column {c} has length {} but matrix has {num_rows} rows",
                    col.len()
                )));
            }
            data.extend(col);
        }
        let m = ColumnMatrix {
            num_rows,
            num_cols,
            data,
        };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds from row-major values.
    pub fn from_rows(num_rows: usize, num_cols: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != num_rows * num_cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {num_rows} x {num_cols} matrix",
                rows.len()
            )));
        }
        let mut m = Self::zeros(num_rows, num_cols);
        for r in 0..num_rows {
            for c in 0..num_cols {
                m.data[c * num_rows + r] = rows[r * num_cols + c];
            }
        }
        m.check_finite()?;
        Ok(m)
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::NonFinite {
                row: i % self.num_rows.max(1),
                column: i / self.num_rows.max(1),
            }),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    #[inline]
    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    #[inline]
    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.num_rows..(c + 1) * self.num_rows]
    }

    #[inline]
    pub fn column_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.num_rows..(c + 1) * self.num_rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.num_rows.max(1)).take(self.num_cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.num_rows + row]
    }

    /// Copies row `r` into `out` (length `num_cols`).
    pub fn row_into(&self, r: usize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.data[c * self.num_rows + r];
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }

    /// Serializes as `SCMX`: magic, version, `n`, `F`, dtype tag, then
    /// column-major little-endian binary32 values.
    pub fn to_container_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(25 + 4 * self.data.len());
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.num_cols as u64).to_le_bytes());
        out.push(DTYPE_F32);
        for &x in &self.data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        out
    }

    pub fn from_container_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MATRIX_MAGIC)?;
        let version = r.u32("version")?;
        if version != MATRIX_VERSION {
            return Err(Error::Format(format!("unsupported matrix version {version}")));
        }
        let n = r.usize("row count")?;
        let f = r.usize("column count")?;
        let dtype = r.u8("dtype tag")?;
        if dtype != DTYPE_F32 {
            return Err(Error::Format(format!("unsupported dtype tag {dtype}")));
        }
        let len = n
            .checked_mul(f)
            .ok_or_else(|| Error::Format(format!("{n} x {f} matrix overflows")))?;
        if bytes.len() - 25 < len.saturating_mul(4) {
            return Err(Error::Format(format!(
                "truncated: {n} x {f} matrix needs {} payload bytes, file has {}",
                len * 4,
                bytes.len() - 25
            )));
        }
        let mut data = Vec::with_capacity(len);
        for i in 0..len {
            let x = r.f32("value")?;
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row: i % n,
                    column: i / n,
                });
            }
            data.push(x as f64);
        }
        r.finish()?;
        Ok(ColumnMatrix {
            num_rows: n,
            num_cols: f,
            data,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_container_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_container_bytes(&bytes)
    }
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    ColumnMatrix::read(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            Sign::Positive => 0,
            Sign::Negative => 1,
        }
    }
}

/// Splits `x` into non-negative parts with `x = pos - neg` bit-exactly.
pub fn sign_split(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::with_capacity(x.len());
    let mut neg = Vec::with_capacity(x.len());
    for &v in x {
        if v >= 0.0 {
            pos.push(v);
            neg.push(0.0);
        } else {
            pos.push(0.0);
            neg.push(-v);
        }
    }
    (pos, neg)
}

/// A non-negative column turned into a probability distribution over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFeature {
    /// Sums to one, or is all zero when `scale == 0`.
    pub weights: Vec<f64>,
    pub scale: f64,
    pub sign: Sign,
}

impl NormalizedFeature {
    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
    }
}

/// `y[v] = x[v] * d(v)^(1-r)`, then L1-normalizes `y`.
///
/// `prescale` must carry the exponent `1 - r`.
pub fn prescale_normalize(x: &[f64], prescale: &DegreePowers, sign: Sign) -> NormalizedFeature {
    debug_assert_eq!(x.len(), prescale.values.len());
    let mut weights: Vec<f64> = x.iter().zip(&prescale.values).map(|(&xv, &dv)| xv * dv).collect();
    let scale: f64 = weights.iter().sum();
    if scale > 0.0 {
        for w in &mut weights {
            *w /= scale;
        }
    } else {
        weights.iter_mut().for_each(|w| *w = 0.0);
    }
    NormalizedFeature {
        weights,
        scale: scale.max(0.0),
        sign,
    }
}
