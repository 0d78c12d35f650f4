//! Speaker model files.
//!
//! Layout, little-endian: magic `CBGM`, version `u16`, components `u32`,
//! dimension `u32`, then the weights, means and variances as row-major `f64`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use cepstra_core::{GmmModel, Matrix};

use crate::binio::{expect_eof, read_array, read_f64, read_u16, read_u32, to_u32, write_u32};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CBGM";
pub const VERSION: u16 = 1;
pub const EXTENSION: &str = "cbgm";

pub fn write_model(w: &mut impl Write, m: &GmmModel) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    write_u32(w, to_u32(m.n_components(), "component count")?)?;
    write_u32(w, to_u32(m.dim(), "dimension")?)?;
    let values = m.weights().iter().chain(m.means().as_slice()).chain(m.variances().as_slice());
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_model(r: &mut impl Read) -> io::Result<GmmModel> {
    if &read_array::<4>(r)? != MAGIC {
        return Err(invalid("not a CBGM model file"));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(invalid(format!("unsupported CBGM version {version}")));
    }
    let k = read_u32(r)? as usize;
    let d = read_u32(r)? as usize;
    let kd = k.checked_mul(d).ok_or_else(|| invalid("model size overflows"))?;
    let mut read_n = |n: usize| -> io::Result<Vec<f64>> { (0..n).map(|_| read_f64(r)).collect() };
    let weights = read_n(k)?;
    let means = read_n(kd)?;
    let variances = read_n(kd)?;
    expect_eof(r)?;
    let build = || -> cepstra_core::Result<GmmModel> {
        GmmModel::new(weights, Matrix::from_vec(k, d, means)?, Matrix::from_vec(k, d, variances)?)
    };
    build().map_err(|e| invalid(e.to_string()))
}

pub fn save_model(path: impl AsRef<Path>, m: &GmmModel) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_model(&mut w, m).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GmmModel> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_model(&mut r).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof => Error::format(path, e.to_string()),
        _ => Error::io(path, e),
    })
}

/// Every `<speaker>.cbgm` in `dir`, keyed by speaker id.
pub fn load_model_dir(dir: impl AsRef<Path>) -> Result<BTreeMap<String, GmmModel>> {
    let dir = dir.as_ref();
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(EXTENSION) {
            continue;
        }
        let Some(speaker) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        out.insert(speaker.to_string(), load_model(&path)?);
    }
    Ok(out)
}
