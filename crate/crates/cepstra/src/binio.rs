//! Little-endian primitives shared by the feature and model formats.

use std::io::{self, Read, Write};

pub(crate) fn read_array<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub(crate) fn read_u16(r: &mut impl Read) -> io::Result<u16> {
    read_array(r).map(u16::from_le_bytes)
}

pub(crate) fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    read_array(r).map(u32::from_le_bytes)
}

pub(crate) fn read_f32(r: &mut impl Read) -> io::Result<f32> {
    read_array(r).map(f32::from_le_bytes)
}

pub(crate) fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    read_array(r).map(f64::from_le_bytes)
}

pub(crate) fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

/// Fails when bytes remain after the declared payload.
pub(crate) fn expect_eof(r: &mut impl Read) -> io::Result<()> {
    let mut b = [0u8; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(io::Error::new(io::ErrorKind::InvalidData, "trailing bytes after payload")),
    }
}

pub(crate) fn to_u32(v: usize, what: &str) -> io::Result<u32> {
    u32::try_from(v).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, format!("{what} {v} does not fit in u32")))
}
