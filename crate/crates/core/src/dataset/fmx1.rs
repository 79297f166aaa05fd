//! Binary feature-matrix container: magic `FMX1`, little-endian `u32` row and
//! column counts, then the `f64` entries in column-major order. The reader is
//! strict — truncated or trailing bytes are errors with their byte offset.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{J3sError, Result};

pub const FMX1_MAGIC: [u8; 4] = *b"FMX1";
const HEADER_LEN: u64 = 12;

fn fmt_err(path: &Path, offset: u64, message: impl Into<String>) -> J3sError {
    J3sError::FormatError {
        path: path.display().to_string(),
        offset,
        message: message.into(),
    }
}

pub fn write_fmx1(path: &Path, data: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = data.shape();
    if rows == 0 || cols == 0 {
        return Err(J3sError::InvalidInput(
            "refusing to write an empty matrix".into(),
        ));
    }
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(J3sError::InvalidInput(format!(
            "matrix {rows}x{cols} exceeds the u32 dimension limit"
        )));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN as usize + 8 * rows * cols);
    buf.extend_from_slice(&FMX1_MAGIC);
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    // DMatrix stores column-major, so iteration order is the file order
    for v in data.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_fmx1(path: &Path) -> Result<DMatrix<f64>> {
    let buf = fs::read(path)?;
    if buf.len() < 4 || buf[..4] != FMX1_MAGIC {
        return Err(fmt_err(path, 0, "missing FMX1 magic"));
    }
    if (buf.len() as u64) < HEADER_LEN {
        return Err(fmt_err(path, buf.len() as u64, "truncated header"));
    }
    let rows = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    let cols = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if rows == 0 {
        return Err(fmt_err(path, 4, "row count must be positive"));
    }
    if cols == 0 {
        return Err(fmt_err(path, 8, "column count must be positive"));
    }
    let payload = (rows as u64)
        .checked_mul(cols as u64)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| fmt_err(path, 4, "dimensions overflow"))?;
    if (buf.len() as u64) < payload {
        return Err(fmt_err(
            path,
            buf.len() as u64,
            format!("truncated: expected {payload} bytes for {rows}x{cols}"),
        ));
    }
    if (buf.len() as u64) > payload {
        return Err(fmt_err(
            path,
            payload,
            format!("{} trailing bytes", buf.len() as u64 - payload),
        ));
    }

    let (r, c) = (rows as usize, cols as usize);
    let mut values = Vec::with_capacity(r * c);
    for (k, chunk) in buf[HEADER_LEN as usize..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(J3sError::InvalidValue {
                path: path.display().to_string(),
                message: format!("non-finite value at row {}, column {}", k % r, k / r),
            });
        }
        values.push(v);
    }
    // from_vec consumes column-major order, matching the file layout
    Ok(DMatrix::from_vec(r, c, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn temp_path(dir: &tempfile::TempDir, name: &str) -> std::path::PathBuf {
        dir.path().join(name)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for (rows, cols) in [(1, 1), (3, 5), (7, 2)] {
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1e6..1e6f64));
            let p = temp_path(&dir, "m.fmx1");
            write_fmx1(&p, &m).unwrap();
            let back = read_fmx1(&p).unwrap();
            assert_eq!(back.shape(), (rows, cols));
            for (a, b) in m.iter().zip(back.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn header_layout_is_as_documented() {
        let dir = tempfile::tempdir().unwrap();
        let p = temp_path(&dir, "h.fmx1");
        let m = DMatrix::from_column_slice(2, 1, &[1.5, -2.0]);
        write_fmx1(&p, &m).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"FMX1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(
            f64::from_le_bytes(bytes[12..20].try_into().unwrap()),
            1.5
        );
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = temp_path(&dir, "bad.fmx1");
        std::fs::write(&p, b"NOPE\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        match read_fmx1(&p) {
            Err(J3sError::FormatError { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn truncation_and_trailing_bytes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = temp_path(&dir, "t.fmx1");
        let m = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        write_fmx1(&p, &m).unwrap();

        let full = std::fs::read(&p).unwrap();
        std::fs::write(&p, &full[..full.len() - 1]).unwrap();
        match read_fmx1(&p) {
            Err(J3sError::FormatError { offset, .. }) => {
                assert_eq!(offset, full.len() as u64 - 1)
            }
            other => panic!("expected FormatError, got {other:?}"),
        }

        let mut extra = full.clone();
        extra.push(0xAB);
        std::fs::write(&p, &extra).unwrap();
        match read_fmx1(&p) {
            Err(J3sError::FormatError { offset, message, .. }) => {
                assert_eq!(offset, full.len() as u64);
                assert!(message.contains("trailing"));
            }
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = temp_path(&dir, "z.fmx1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"FMX1");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_fmx1(&p), Err(J3sError::FormatError { offset: 4, .. })));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = temp_path(&dir, "nan.fmx1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"FMX1");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        match read_fmx1(&p) {
            Err(J3sError::InvalidValue { message, .. }) => {
                assert!(message.contains("row 0, column 1"));
            }
            other => panic!("expected InvalidValue, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_fmx1(Path::new("/definitely/not/here.fmx1")),
            Err(J3sError::Io(_))
        ));
    }
}
