//! On-disk field format "QFLD v1" (little-endian).
//!
//! Layout: magic `QFLD` (4 bytes) | u32 version=1 | u32 n | f64 L |
//! f64 alpha | f64 beta | f64 m | f64 constraint_n | n^3 x (f64 re, f64 im)
//! in row-major order. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, ModelParams};

const MAGIC: [u8; 4] = *b"QFLD";
const VERSION: u32 = 1;

pub fn save_field(field: &ComplexField, params: &ModelParams, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid().n() as u32).to_le_bytes())?;
    w.write_all(&field.grid().box_length().to_le_bytes())?;
    w.write_all(&params.alpha.to_le_bytes())?;
    w.write_all(&params.beta.to_le_bytes())?;
    w.write_all(&params.mass_m.to_le_bytes())?;
    w.write_all(&params.constraint_n.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<(ComplexField, ModelParams)> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::TruncatedPayload("missing header".into()))?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let n = read_u32(&mut r)? as usize;
    let length = read_f64(&mut r)?;
    let alpha = read_f64(&mut r)?;
    let beta = read_f64(&mut r)?;
    let mass_m = read_f64(&mut r)?;
    let constraint_n = read_f64(&mut r)?;

    let grid = Grid::new(n, length)
        .map_err(|e| Error::TruncatedPayload(format!("bad grid header: {e}")))?;
    let params = ModelParams::new(alpha, beta, mass_m, constraint_n)
        .map_err(|e| Error::TruncatedPayload(format!("bad params header: {e}")))?;

    let mut values = Vec::with_capacity(grid.points());
    let mut buf = [0u8; 16];
    for i in 0..grid.points() {
        r.read_exact(&mut buf).map_err(|_| {
            Error::TruncatedPayload(format!("payload ends at sample {i} of {}", grid.points()))
        })?;
        let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::TruncatedPayload("trailing bytes after payload".into()));
    }
    Ok((ComplexField::from_values(grid, values)?, params))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::TruncatedPayload("short header".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::TruncatedPayload("short header".into()))?;
    Ok(f64::from_le_bytes(buf))
}
