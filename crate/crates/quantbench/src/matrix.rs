//! Precision-tagged numeric matrix and the 64→32-bit cast operator.
//!
//! A [`Matrix`] physically stores its elements in the tagged precision, so a
//! `F32` matrix really occupies 4 bytes per element. [`Matrix::cast`] is the
//! only way to move between precisions:
//!
//! * float → float rounds to the nearest representable value (ties to even),
//! * float → `I32` truncates toward zero and rejects NaN/±∞/out-of-range,
//! * `I32` → `F64` is exact, `I32` → `F32` rounds to nearest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Storage precision of a matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Precision {
    F64,
    F32,
    I32,
}

impl Precision {
    pub fn byte_width(self) -> usize {
        match self {
            Precision::F64 => 8,
            Precision::F32 => 4,
            Precision::I32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::F64 => "F64",
            Precision::F32 => "F32",
            Precision::I32 => "I32",
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Buffer {
    F64(Vec<f64>),
    F32(Vec<f32>),
    I32(Vec<i32>),
}

/// Row-major numeric table with an explicit element precision.
///
/// Shape and contents are immutable after construction; all operations
/// produce new matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    buf: Buffer,
}

impl Matrix {
    /// Build an `F64` matrix from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "buffer length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, col {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            buf: Buffer::F64(data),
        })
    }

    /// Build an `F64` matrix from rows of equal length (test/demo convenience).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Matrix::from_vec(n, cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn precision(&self) -> Precision {
        match self.buf {
            Buffer::F64(_) => Precision::F64,
            Buffer::F32(_) => Precision::F32,
            Buffer::I32(_) => Precision::I32,
        }
    }

    /// Element at (row, col), widened to `f64`. Exact for every precision.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let i = row * self.cols + col;
        match &self.buf {
            Buffer::F64(v) => v[i],
            Buffer::F32(v) => f64::from(v[i]),
            Buffer::I32(v) => f64::from(v[i]),
        }
    }

    /// One column as owned `f64` values.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub(crate) fn buffer(&self) -> &Buffer {
        &self.buf
    }

    /// Convert every element to `target` precision.
    ///
    /// Float→float rounds to nearest (ties to even). Float→`I32` truncates
    /// toward zero; NaN, ±∞ and values whose truncation overflows a signed
    /// 32-bit integer are rejected with the offending row/col.
    pub fn cast(&self, target: Precision) -> Result<Matrix> {
        if self.precision() == target {
            return Ok(self.clone());
        }
        let buf = match target {
            Precision::F64 => Buffer::F64(match &self.buf {
                Buffer::F64(v) => v.clone(),
                Buffer::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
                Buffer::I32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            }),
            Precision::F32 => Buffer::F32(match &self.buf {
                Buffer::F64(v) => v.iter().map(|&x| x as f32).collect(),
                Buffer::F32(v) => v.clone(),
                Buffer::I32(v) => v.iter().map(|&x| x as f32).collect(),
            }),
            Precision::I32 => {
                let mut out = Vec::with_capacity(self.rows * self.cols);
                for i in 0..self.rows * self.cols {
                    let v = match &self.buf {
                        Buffer::F64(v) => v[i],
                        Buffer::F32(v) => f64::from(v[i]),
                        Buffer::I32(_) => unreachable!("identity cast handled above"),
                    };
                    out.push(truncate_to_i32(v).ok_or(Error::CastRange {
                        target: "I32",
                        row: i / self.cols,
                        col: i % self.cols,
                        value: v,
                    })?);
                }
                Buffer::I32(out)
            }
        };
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            buf,
        })
    }

    /// Per-column (min, max) pairs.
    pub fn column_min_max(&self) -> Result<Vec<(f64, f64)>> {
        if self.rows == 0 {
            return Err(Error::Shape("min/max of empty matrix".into()));
        }
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.cols];
        for r in 0..self.rows {
            for (c, mm) in out.iter_mut().enumerate() {
                let v = self.get(r, c);
                if v < mm.0 {
                    mm.0 = v;
                }
                if v > mm.1 {
                    mm.1 = v;
                }
            }
        }
        Ok(out)
    }
}

/// Truncate toward zero if the result fits in an `i32`.
fn truncate_to_i32(v: f64) -> Option<i32> {
    // Truncation fits iff v lies strictly inside (i32::MIN - 1, i32::MAX + 1).
    if v.is_finite() && v > -2_147_483_649.0 && v < 2_147_483_648.0 {
        Some(v.trunc() as i32)
    } else {
        None
    }
}

/// Binary class labels paired with a matrix of the same row count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::Label(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(LabelVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    /// (count of 0s, count of 1s).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.0.iter().filter(|&&v| v == 1).count();
        (self.0.len() - ones, ones)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn byte_widths() {
        assert_eq!(Precision::F64.byte_width(), 8);
        assert_eq!(Precision::F32.byte_width(), 4);
        assert_eq!(Precision::I32.byte_width(), 4);
    }

    #[test]
    fn cast_truncates_toward_zero() {
        let x = m(&[vec![0.75]]).cast(Precision::I32).unwrap();
        assert_eq!(x.get(0, 0), 0.0);
        let x = m(&[vec![-1.9]]).cast(Precision::I32).unwrap();
        assert_eq!(x.get(0, 0), -1.0);
    }

    #[test]
    fn cast_roundtrip_exact_values() {
        let a = m(&[vec![0.5, 2.0], vec![-4.0, 0.25], vec![1024.0, -0.125]]);
        let back = a
            .cast(Precision::F32)
            .unwrap()
            .cast(Precision::F64)
            .unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn cast_f32_of_tenth_matches_reference_bits() {
        // Nearest 32-bit float to 0.1 has bit pattern 0x3DCCCCCD.
        let x = m(&[vec![0.1]]).cast(Precision::F32).unwrap();
        let expected = f64::from(f32::from_bits(0x3DCC_CCCD));
        assert_eq!(x.get(0, 0), expected);
        assert_ne!(x.get(0, 0), 0.1);
    }

    #[test]
    fn cast_i32_range_errors_name_position() {
        let err = m(&[vec![1.0, 3e9]]).cast(Precision::I32).unwrap_err();
        match err {
            Error::CastRange { row, col, .. } => {
                assert_eq!((row, col), (0, 1));
            }
            other => panic!("unexpected error: {other}"),
        }
        // Non-finite values are rejected at construction already.
        assert!(Matrix::from_vec(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn cast_i32_boundary_values() {
        let x = m(&[vec![2147483647.0, -2147483648.0]])
            .cast(Precision::I32)
            .unwrap();
        assert_eq!(x.get(0, 0), 2147483647.0);
        assert_eq!(x.get(0, 1), -2147483648.0);
        assert!(m(&[vec![2147483648.0]]).cast(Precision::I32).is_err());
    }

    #[test]
    fn cast_identity_returns_equal_matrix() {
        let a = m(&[vec![1.5, -2.5]]);
        assert_eq!(a.cast(Precision::F64).unwrap(), a);
    }

    #[test]
    fn column_min_max_examples() {
        let mm = m(&[vec![1.0], vec![5.0], vec![3.0]]).column_min_max().unwrap();
        assert_eq!(mm, vec![(1.0, 5.0)]);
        let mm = m(&[vec![4.0], vec![4.0]]).column_min_max().unwrap();
        assert_eq!(mm, vec![(4.0, 4.0)]);
        assert!(Matrix::from_vec(0, 2, vec![]).unwrap().column_min_max().is_err());
    }

    #[test]
    fn column_min_max_matches_scan_oracle() {
        // Deterministic pseudo-random 50x4 matrix.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
        };
        let data: Vec<f64> = (0..200).map(|_| next()).collect();
        let x = Matrix::from_vec(50, 4, data.clone()).unwrap();
        let got = x.column_min_max().unwrap();
        for c in 0..4 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in 0..50 {
                let v = data[r * 4 + c];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            assert_eq!(got[c], (lo, hi));
            for r in 0..50 {
                assert!(got[c].0 <= x.get(r, c) && x.get(r, c) <= got[c].1);
            }
        }
    }

    #[test]
    fn labels_reject_non_binary() {
        assert!(LabelVector::new(vec![0, 1, 2]).is_err());
        let y = LabelVector::new(vec![0, 1, 1]).unwrap();
        assert_eq!(y.class_counts(), (1, 2));
    }
}
