//! Matrix containers.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! magic   b"RAOM"
//! version u32 (= 1)
//! rows    u64
//! cols    u64
//! dtype   u8  (1 = complex double)
//! tag     u8  (0 generator, 1 resolvent, 2 expression, 3 compressed)
//! data    rows*cols pairs (re, im) of f64, row-major
//! ```

use std::io::{Read, Write};

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use super::{FockError, OperatorMatrix, OperatorTag};

pub const MAGIC: &[u8; 4] = b"RAOM";
pub const VERSION: u32 = 1;
const DTYPE_C128: u8 = 1;

pub fn write_binary<W: Write>(m: &OperatorMatrix, mut w: W) -> Result<(), FockError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    w.write_all(&[DTYPE_C128, m.tag.code()])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let x = m.matrix[(i, j)];
            w.write_all(&x.re.to_le_bytes())?;
            w.write_all(&x.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K], FockError> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<OperatorMatrix, FockError> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(FockError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(FockError::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let cols = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let [dtype, tag] = read_array::<2, _>(&mut r)?;
    if dtype != DTYPE_C128 {
        return Err(FockError::Format(format!("unknown dtype {dtype}")));
    }
    let tag = OperatorTag::from_code(tag).ok_or_else(|| FockError::Format(format!("unknown tag {tag}")))?;
    let mut m = Mat::<c64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = f64::from_le_bytes(read_array(&mut r)?);
            let im = f64::from_le_bytes(read_array(&mut r)?);
            m[(i, j)] = c64::new(re, im);
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(FockError::Format("trailing bytes".into()));
    }
    Ok(OperatorMatrix::new(tag, m))
}

/// JSON form for small matrices; `re` and `im` are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub tag: OperatorTag,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&OperatorMatrix> for MatrixJson {
    fn from(m: &OperatorMatrix) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let entries: Vec<c64> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| m.matrix[(i, j)])
            .collect();
        MatrixJson {
            rows,
            cols,
            dtype: "complex128".into(),
            tag: m.tag,
            re: entries.iter().map(|x| x.re).collect(),
            im: entries.iter().map(|x| x.im).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for OperatorMatrix {
    type Error = FockError;

    fn try_from(j: MatrixJson) -> Result<Self, FockError> {
        let n = j.rows * j.cols;
        if j.dtype != "complex128" || j.re.len() != n || j.im.len() != n {
            return Err(FockError::Format("inconsistent JSON matrix".into()));
        }
        let m = Mat::from_fn(j.rows, j.cols, |r, c| {
            let k = r * j.cols + c;
            c64::new(j.re[k], j.im[k])
        });
        Ok(OperatorMatrix::new(j.tag, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> OperatorMatrix {
        let m = Mat::from_fn(3, 2, |i, j| c64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        OperatorMatrix::new(OperatorTag::Resolvent, m)
    }

    #[test]
    fn binary_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 2 + 6 * 16);
        assert_eq!(&buf[..4], b"RAOM");
        let back = read_binary(&buf[..]).unwrap();
        assert_eq!(back.tag, OperatorTag::Resolvent);
        assert_eq!(back.matrix, m.matrix);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(read_binary(&b"NOPE"[..]).is_err());
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_binary(&buf[..]).is_err());
        let mut buf2 = Vec::new();
        write_binary(&sample(), &mut buf2).unwrap();
        buf2.push(0);
        assert!(read_binary(&buf2[..]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = sample();
        let j = MatrixJson::from(&m);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"tag\":\"resolvent\""));
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        let back = OperatorMatrix::try_from(back).unwrap();
        assert_eq!(back.matrix, m.matrix);
    }
}
