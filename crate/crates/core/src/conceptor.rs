//! Conceptor matrices.
//!
//! A conceptor for a sample cloud `X` (columns are samples) with aperture `alpha`
//! is the regularized identity map
//!
//! ```text
//! C = R (R + alpha^-2 I)^-1,   R = X X^T / n
//! ```
//!
//! Every constructor and Boolean operation works through a symmetric
//! eigendecomposition and symmetrizes its output, so results are exactly
//! symmetric and their spectrum is available for invariant checks.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, max_asymmetry, spectral_map, sym_eigen, symmetrize};

/// Eigenvalues at or below this are treated as exactly zero when inverting.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Eigenvalue threshold on `(I - P_C) + (I - P_B)` below which a direction
/// counts as lying in both ranges.
pub const COMMON_RANGE_TOL: f64 = 1e-10;

/// Asymmetry accepted by [`Conceptor::from_correlation`].
pub const CORRELATION_SYMMETRY_TOL: f64 = 1e-8;

/// Most negative eigenvalue accepted by [`Conceptor::from_correlation`].
pub const CORRELATION_PSD_TOL: f64 = 1e-10;

/// Slack on the `[0, 1]` spectrum when validating externally supplied matrices.
pub const SPECTRUM_TOL: f64 = 1e-10;

pub(crate) const MAGIC: &[u8; 4] = b"CONC";
pub(crate) const FORMAT_VERSION: u16 = 1;
pub(crate) const HEADER_LEN: usize = 4 + 2 + 4 + 8;

/// A symmetric soft projection matrix with its aperture metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Conceptor {
    matrix: DMatrix<f64>,
    aperture_inv_sq: f64,
}

fn aperture_inv_sq(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "aperture must be positive and finite, got {alpha}"
        )));
    }
    Ok(alpha.powi(-2))
}

impl Conceptor {
    /// Conceptor of the column samples of `x` (an `N x n` matrix).
    pub fn from_data(x: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty("sample dimension is zero"));
        }
        if x.ncols() == 0 {
            return Err(Error::Empty("no samples"));
        }
        if !is_finite(x) {
            return Err(Error::NonFinite("sample matrix"));
        }
        let ridge = aperture_inv_sq(alpha)?;
        let mut r = x * x.transpose();
        r /= x.ncols() as f64;
        symmetrize(&mut r);
        Ok(Self::closed_form(&r, ridge))
    }

    /// Conceptor of a correlation matrix `R`.
    pub fn from_correlation(r: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        if r.nrows() == 0 {
            return Err(Error::Empty("correlation matrix is 0x0"));
        }
        if r.nrows() != r.ncols() {
            return Err(Error::DimensionMismatch {
                expected: r.nrows(),
                got: r.ncols(),
            });
        }
        if !is_finite(r) {
            return Err(Error::NonFinite("correlation matrix"));
        }
        let ridge = aperture_inv_sq(alpha)?;
        let asym = max_asymmetry(r);
        if asym > CORRELATION_SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let mut r = r.clone();
        symmetrize(&mut r);
        let (values, _) = sym_eigen(&r);
        if values[0] < -CORRELATION_PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(values[0]));
        }
        Ok(Self::closed_form(&r, ridge))
    }

    fn closed_form(r: &DMatrix<f64>, ridge: f64) -> Self {
        let (values, vectors) = sym_eigen(r);
        let matrix = spectral_map(&values, &vectors, |l| {
            let l = l.max(0.0);
            l / (l + ridge)
        });
        Self {
            matrix,
            aperture_inv_sq: ridge,
        }
    }

    /// The all-zero conceptor (nothing characterized yet).
    pub fn zero(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("conceptor dimension is zero"));
        }
        Ok(Self {
            matrix: DMatrix::zeros(dim, dim),
            aperture_inv_sq: aperture_inv_sq(alpha)?,
        })
    }

    /// The identity conceptor.
    pub fn identity(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("conceptor dimension is zero"));
        }
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
            aperture_inv_sq: aperture_inv_sq(alpha)?,
        })
    }

    /// Wraps an existing matrix after checking symmetry, finiteness and a
    /// `[0, 1]` spectrum.
    pub fn from_matrix(mut matrix: DMatrix<f64>, aperture_inv_sq: f64) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::Empty("conceptor dimension is zero"));
        }
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("conceptor matrix"));
        }
        if !(aperture_inv_sq.is_finite() && aperture_inv_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "aperture^-2 must be positive and finite, got {aperture_inv_sq}"
            )));
        }
        let asym = max_asymmetry(&matrix);
        if asym > SPECTRUM_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        symmetrize(&mut matrix);
        let (values, _) = sym_eigen(&matrix);
        let (lo, hi) = (values[0], values[values.len() - 1]);
        if lo < -SPECTRUM_TOL {
            return Err(Error::SpectrumOutOfRange(lo));
        }
        if hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::SpectrumOutOfRange(hi));
        }
        Ok(Self {
            matrix,
            aperture_inv_sq,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The ridge term `alpha^-2`.
    pub fn aperture_inv_sq(&self) -> f64 {
        self.aperture_inv_sq
    }

    pub fn alpha(&self) -> f64 {
        self.aperture_inv_sq.powf(-0.5)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> DVector<f64> {
        sym_eigen(&self.matrix).0
    }

    /// `C q`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let q = DVector::from_column_slice(q);
        (&self.matrix * q).as_slice().to_vec()
    }

    /// `I - C`.
    pub fn not(&self) -> Self {
        let mut matrix = DMatrix::identity(self.dim(), self.dim()) - &self.matrix;
        symmetrize(&mut matrix);
        Self {
            matrix,
            aperture_inv_sq: self.aperture_inv_sq,
        }
    }

    /// `(C^-1 + B^-1 - I)^-1`, restricted to the intersection of the two
    /// ranges when either operand is singular.
    ///
    /// The result carries the left operand's aperture.
    pub fn and(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim();
        let (c_vals, c_vecs) = sym_eigen(&self.matrix);
        let (b_vals, b_vecs) = sym_eigen(&other.matrix);
        let pinv = |l: f64| if l > ZERO_EIGENVALUE_TOL { 1.0 / l } else { 0.0 };
        let c_pinv = spectral_map(&c_vals, &c_vecs, pinv);
        let b_pinv = spectral_map(&b_vals, &b_vecs, pinv);
        let mut sum = c_pinv + b_pinv - DMatrix::<f64>::identity(n, n);
        symmetrize(&mut sum);

        let full_rank = |vals: &DVector<f64>| vals[0] > ZERO_EIGENVALUE_TOL;
        let basis = if full_rank(&c_vals) && full_rank(&b_vals) {
            DMatrix::identity(n, n)
        } else {
            common_range_basis(&c_vals, &c_vecs, &b_vals, &b_vecs)
        };
        let k = basis.ncols();
        if k == 0 {
            return Ok(Self {
                matrix: DMatrix::zeros(n, n),
                aperture_inv_sq: self.aperture_inv_sq,
            });
        }

        let mut restricted = basis.transpose() * &sum * &basis;
        symmetrize(&mut restricted);
        let (r_vals, r_vecs) = sym_eigen(&restricted);
        let inv_restricted = spectral_map(&r_vals, &r_vecs, pinv);
        let mut matrix = &basis * inv_restricted * basis.transpose();
        symmetrize(&mut matrix);
        Ok(Self {
            matrix,
            aperture_inv_sq: self.aperture_inv_sq,
        })
    }

    /// `NOT(NOT C AND NOT B)`.
    pub fn or(&self, other: &Self) -> Result<Self> {
        Ok(self.not().and(&other.not())?.not())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Serializes into the `CONC` v1 container.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.dim();
        let mut out = Vec::with_capacity(HEADER_LEN + n * n * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.aperture_inv_sq.to_le_bytes());
        write_row_major(&mut out, &self.matrix);
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        cur.expect_magic()?;
        let version = cur.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported conceptor format version {version}"
            )));
        }
        let dim = cur.u32()? as usize;
        let ridge = cur.f64()?;
        let matrix = cur.square_matrix(dim)?;
        cur.finish()?;
        Self::from_matrix(matrix, ridge)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

/// Orthonormal basis of `range(C) ∩ range(B)`: the null space of
/// `(I - P_C) + (I - P_B)` where `P` are the range projectors.
fn common_range_basis(
    c_vals: &DVector<f64>,
    c_vecs: &DMatrix<f64>,
    b_vals: &DVector<f64>,
    b_vecs: &DMatrix<f64>,
) -> DMatrix<f64> {
    let null_proj = |l: f64| if l > ZERO_EIGENVALUE_TOL { 0.0 } else { 1.0 };
    let mut m = spectral_map(c_vals, c_vecs, null_proj) + spectral_map(b_vals, b_vecs, null_proj);
    symmetrize(&mut m);
    let (vals, vecs) = sym_eigen(&m);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] <= COMMON_RANGE_TOL)
        .collect();
    DMatrix::from_fn(vecs.nrows(), keep.len(), |i, j| vecs[(i, keep[j])])
}

/// Running sum of per-source correlation matrices `(1/n) X X^T`.
///
/// `conceptor(alpha)` of the accumulated sum equals the OR of the
/// per-source conceptors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationAccumulator {
    r_sum: DMatrix<f64>,
}

impl CorrelationAccumulator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("accumulator dimension is zero"));
        }
        Ok(Self {
            r_sum: DMatrix::zeros(dim, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.r_sum.nrows()
    }

    /// Adds `(1/n) X X^T` for the column samples of `x`.
    pub fn add_samples(&mut self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.nrows(),
            });
        }
        if x.ncols() == 0 {
            return Err(Error::Empty("no samples"));
        }
        if !is_finite(x) {
            return Err(Error::NonFinite("sample matrix"));
        }
        let mut r = x * x.transpose();
        r /= x.ncols() as f64;
        self.r_sum += r;
        symmetrize(&mut self.r_sum);
        Ok(())
    }

    pub fn add_correlation(&mut self, r: &DMatrix<f64>) -> Result<()> {
        if r.nrows() != self.dim() || r.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: r.nrows(),
            });
        }
        self.r_sum += r;
        symmetrize(&mut self.r_sum);
        Ok(())
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.r_sum
    }

    pub fn conceptor(&self, alpha: f64) -> Result<Conceptor> {
        Conceptor::from_correlation(&self.r_sum, alpha)
    }
}

pub(crate) fn write_row_major(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

/// Bounds-checked little-endian reader over a byte slice.
pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated payload: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn expect_magic(&mut self) -> Result<()> {
        if self.bytes.is_empty() {
            return Err(Error::Format("empty stream".into()));
        }
        let magic = self.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:02x?}")));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads `rows * cols` row-major f64 values.
    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::Format(format!("dimension overflow: {rows} x {cols}")))?;
        if count > self.bytes.len() - self.pos {
            return Err(Error::Format(format!(
                "truncated payload: {rows} x {cols} matrix needs {count} bytes, have {}",
                self.bytes.len() - self.pos
            )));
        }
        let raw = self.take(count)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }

    pub(crate) fn square_matrix(&mut self, dim: usize) -> Result<DMatrix<f64>> {
        self.matrix(dim, dim)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
