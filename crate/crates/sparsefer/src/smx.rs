//! SMX1 matrix files: a 16-byte header (`SMX1`, u32 LE rows, u32 LE cols,
//! four zero bytes) followed by the values as f64 LE in column-major order.

use std::fs;
use std::path::Path;

use sparsefer_core::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"SMX1";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum SmxError {
    #[error("bad magic {0:?}, expected \"SMX1\"")]
    BadMagic([u8; 4]),
    #[error("reserved header bytes are not zero")]
    Reserved,
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} trailing bytes after the payload")]
    Trailing { extra: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error(transparent)]
    Matrix(#[from] sparsefer_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn check_dims(rows: usize, cols: usize) -> Result<usize, SmxError> {
    if rows == 0 || cols == 0 {
        return Err(SmxError::Dimension(format!("empty {rows}×{cols} matrix")));
    }
    if u32::try_from(rows).is_err() || u32::try_from(cols).is_err() {
        return Err(SmxError::Dimension(format!("{rows}×{cols} exceeds the u32 header fields")));
    }
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| SmxError::Dimension(format!("{rows}×{cols} overflows the address space")))
}

pub fn encode(m: &DenseMatrix) -> Result<Vec<u8>, SmxError> {
    let len = check_dims(m.rows(), m.cols())?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<DenseMatrix, SmxError> {
    if bytes.len() < HEADER_LEN {
        return Err(SmxError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(SmxError::BadMagic(magic));
    }
    if word(12) != 0 {
        return Err(SmxError::Reserved);
    }
    let (rows, cols) = (word(4) as usize, word(8) as usize);
    let expected = check_dims(rows, cols)?;
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => {
            return Err(SmxError::Truncated {
                expected,
                actual: bytes.len(),
            })
        }
        std::cmp::Ordering::Greater => {
            return Err(SmxError::Trailing {
                extra: bytes.len() - expected,
            })
        }
        std::cmp::Ordering::Equal => {}
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix::from_col_major(rows, cols, values)?)
}

pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<(), SmxError> {
    let path = path.as_ref();
    fs::write(path, encode(m)?).map_err(|source| SmxError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix, SmxError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| SmxError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}
