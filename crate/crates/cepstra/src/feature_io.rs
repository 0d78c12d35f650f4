//! Feature matrix files: the binary `CBFM` layout and a CSV export.
//!
//! Binary layout, little-endian: magic `CBFM`, version `u16`, label tag `u8`
//! (front-end tag, high bit set when Δ and ΔΔ are appended), dimension `u32`,
//! frame count `u32`, frame rate `f32` in Hz, then the values as row-major `f32`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use cepstra_core::{FeatureKind, FeatureMatrix, Matrix};

use crate::binio::{expect_eof, read_array, read_f32, read_u16, read_u32, to_u32, write_u32};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CBFM";
pub const VERSION: u16 = 1;
pub const EXTENSION: &str = "cbfm";
const DYNAMIC_FLAG: u8 = 0x80;

pub fn write_features(w: &mut impl Write, m: &FeatureMatrix) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let flag = if m.is_dynamic() { DYNAMIC_FLAG } else { 0 };
    w.write_all(&[m.kind().tag() | flag])?;
    write_u32(w, to_u32(m.dim(), "dimension")?)?;
    write_u32(w, to_u32(m.n_frames(), "frame count")?)?;
    w.write_all(&(m.frame_rate() as f32).to_le_bytes())?;
    for v in m.values().as_slice() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_features(r: &mut impl Read) -> io::Result<FeatureMatrix> {
    if &read_array::<4>(r)? != MAGIC {
        return Err(invalid("not a CBFM feature file"));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(invalid(format!("unsupported CBFM version {version}")));
    }
    let [label] = read_array::<1>(r)?;
    let kind = FeatureKind::from_tag(label & !DYNAMIC_FLAG)
        .ok_or_else(|| invalid(format!("unknown label tag {label:#04x}")))?;
    let dim = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    let rate = read_f32(r)? as f64;
    let len = dim.checked_mul(n).ok_or_else(|| invalid("matrix size overflows"))?;
    let mut values = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        values.push(read_f32(r)? as f64);
    }
    expect_eof(r)?;
    let m = Matrix::from_vec(n, dim, values).map_err(|e| invalid(e.to_string()))?;
    FeatureMatrix::new(m, kind, label & DYNAMIC_FLAG != 0, rate).map_err(|e| invalid(e.to_string()))
}

pub fn save_features(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_features(&mut w, m).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_features(&mut r).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof => Error::format(path, e.to_string()),
        _ => Error::io(path, e),
    })
}

/// Column names: `c0..` for statics, then `d0..` and `dd0..` for dynamics.
pub fn column_names(m: &FeatureMatrix) -> Vec<String> {
    if m.is_dynamic() && m.dim().is_multiple_of(3) {
        let s = m.dim() / 3;
        ["c", "d", "dd"].iter().flat_map(|p| (0..s).map(move |i| format!("{p}{i}"))).collect()
    } else {
        (0..m.dim()).map(|i| format!("c{i}")).collect()
    }
}

/// One header line, then one row per frame.
pub fn write_features_csv(w: impl Write, m: &FeatureMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(column_names(m))?;
    for row in m.values().iter_rows() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn save_features_csv(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_features_csv(BufWriter::new(f), m).map_err(|e| e.at(path))
}
