//! Binary container for encoder states.
//!
//! Version 2 of the `CONC` container adds a role tag and a header extension
//! to the plain conceptor layout (version 1, see [`Conceptor::to_bytes`]).
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CONC"
//!      4     2  version = 2 (u16)
//!      6     1  role: 1 = SIF, 2 = CA, 3 = incremental deletion (u8)
//!      7     4  dim (u32)
//!     11     4  rows (u32): 1 for SIF, dim for CA, k for deletion
//!     15     8  alpha^-2 (f64, 0 unless CA)
//!     23     8  alpha (f64, 0 unless CA)
//!     31     8  a (f64)
//!     39     8  corpora_seen (u64, 0 unless CA)
//!     47     .  rows * dim f64 values, row-major
//! ```
//!
//! For CA the payload is the conceptor matrix; otherwise each row is one
//! unit direction.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::conceptor::{write_row_major, ByteCursor, Conceptor, FORMAT_VERSION, MAGIC};
use crate::encoders::{CaState, DeletionListState, EncoderState, SifState};
use crate::error::{Error, Result};

pub const STATE_FORMAT_VERSION: u16 = 2;

const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    Sif = 1,
    Ca = 2,
    Deletion = 3,
}

impl Role {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Role::Sif),
            2 => Ok(Role::Ca),
            3 => Ok(Role::Deletion),
            t => Err(Error::Format(format!("unknown state role tag {t}"))),
        }
    }
}

struct Header {
    role: Role,
    dim: u32,
    rows: u32,
    aperture_inv_sq: f64,
    alpha: f64,
    a: f64,
    corpora_seen: u64,
}

fn encode(header: &Header, payload: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(47 + payload.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&STATE_FORMAT_VERSION.to_le_bytes());
    out.push(header.role as u8);
    out.extend_from_slice(&header.dim.to_le_bytes());
    out.extend_from_slice(&header.rows.to_le_bytes());
    out.extend_from_slice(&header.aperture_inv_sq.to_le_bytes());
    out.extend_from_slice(&header.alpha.to_le_bytes());
    out.extend_from_slice(&header.a.to_le_bytes());
    out.extend_from_slice(&header.corpora_seen.to_le_bytes());
    write_row_major(&mut out, payload);
    out
}

fn rows_of(directions: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(directions.len(), dim, |i, j| directions[i][j])
}

fn check_unit(rows: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(rows.nrows());
    for i in 0..rows.nrows() {
        let u: Vec<f64> = rows.row(i).iter().copied().collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL || norm.is_nan() {
            return Err(Error::Format(format!(
                "stored direction {i} has norm {norm}, expected 1"
            )));
        }
        out.push(u);
    }
    Ok(out)
}

impl EncoderState {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            EncoderState::Sif(s) => {
                let u = s.direction();
                let header = Header {
                    role: Role::Sif,
                    dim: u.len() as u32,
                    rows: 1,
                    aperture_inv_sq: 0.0,
                    alpha: 0.0,
                    a: crate::SentenceEncoder::a(s),
                    corpora_seen: 0,
                };
                encode(&header, &DMatrix::from_row_slice(1, u.len(), u))
            }
            EncoderState::Ca(s) => {
                let c = s.conceptor();
                let header = Header {
                    role: Role::Ca,
                    dim: c.dim() as u32,
                    rows: c.dim() as u32,
                    aperture_inv_sq: c.aperture_inv_sq(),
                    alpha: s.alpha(),
                    a: crate::SentenceEncoder::a(s),
                    corpora_seen: s.corpora_seen(),
                };
                encode(&header, c.matrix())
            }
            EncoderState::Deletion(s) => {
                let dim = crate::SentenceEncoder::dim(s);
                let header = Header {
                    role: Role::Deletion,
                    dim: dim as u32,
                    rows: s.directions().len() as u32,
                    aperture_inv_sq: 0.0,
                    alpha: 0.0,
                    a: crate::SentenceEncoder::a(s),
                    corpora_seen: 0,
                };
                encode(&header, &rows_of(s.directions(), dim))
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        cur.expect_magic()?;
        let version = cur.u16()?;
        if version != STATE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported state format version {version}"
            )));
        }
        let header = Header {
            role: Role::from_tag(cur.u8()?)?,
            dim: cur.u32()?,
            rows: cur.u32()?,
            aperture_inv_sq: cur.f64()?,
            alpha: cur.f64()?,
            a: cur.f64()?,
            corpora_seen: cur.u64()?,
        };
        let payload = cur.matrix(header.rows as usize, header.dim as usize)?;
        cur.finish()?;
        if payload.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite value in payload".into()));
        }
        match header.role {
            Role::Sif => {
                if header.rows != 1 {
                    return Err(Error::Format(format!(
                        "SIF state must hold one direction, found {}",
                        header.rows
                    )));
                }
                let u = check_unit(&payload)?.pop().unwrap();
                Ok(SifState::from_unit(u, header.a)?.into())
            }
            Role::Ca => {
                if header.rows != header.dim {
                    return Err(Error::Format("CA payload must be square".into()));
                }
                let c = Conceptor::from_matrix(payload, header.aperture_inv_sq)?;
                Ok(CaState::from_parts(c, header.alpha, header.a, header.corpora_seen)?.into())
            }
            Role::Deletion => {
                let dirs = check_unit(&payload)?;
                Ok(DeletionListState::from_unit_directions(dirs, header.a)?.into())
            }
        }
    }

    /// Reads a state file; a plain conceptor file (version 1) is accepted as
    /// a CA state with weighting parameter `a`.
    pub fn from_bytes_or_conceptor(bytes: &[u8], a: f64) -> Result<Self> {
        let version = bytes.get(4..6).map(|v| u16::from_le_bytes([v[0], v[1]]));
        if bytes.starts_with(MAGIC) && version == Some(FORMAT_VERSION) {
            let c = Conceptor::from_bytes(bytes)?;
            let alpha = c.alpha();
            return Ok(CaState::from_parts(c, alpha, a, 0)?.into());
        }
        Self::from_bytes(bytes)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}
