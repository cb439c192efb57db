use std::io::{Read, Write};
use std::path::Path;

use super::EmpiricalMeasure;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"AFRL";
const VERSION: u32 = 1;

/// `"AFRL" | version u32 | d u8 | n u64 | depth u8 | n*d f64 | n f64`, little-endian.
pub fn write_snapshot<W: Write>(m: &EmpiricalMeasure, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[m.dim() as u8])?;
    w.write_all(&(m.len() as u64).to_le_bytes())?;
    w.write_all(&[m.provenance.depth.min(255) as u8])?;
    let mut buf = Vec::with_capacity(m.len() * 8 * (m.dim() + 1));
    for p in m.points() {
        for c in &p[..m.dim()] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for x in m.weights() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<EmpiricalMeasure> {
    let bad = |s: &str| Error::Io(format!("snapshot: {s}"));
    let mut head = [0u8; 18];
    r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
    if &head[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let d = head[8] as usize;
    let n = u64::from_le_bytes(head[9..17].try_into().unwrap()) as usize;
    let depth = head[17] as u32;
    if d != 1 && d != 2 {
        return Err(bad(&format!("dimension {d}")));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != n * 8 * (d + 1) {
        return Err(bad("length does not match header"));
    }
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    let points = (0..n)
        .map(|i| if d == 1 { [f(i), 0.0] } else { [f(2 * i), f(2 * i + 1)] })
        .collect();
    let weights = (0..n).map(|i| f(n * d + i)).collect();
    let mut m = EmpiricalMeasure::from_normalized(d, points, weights)?;
    m.provenance.depth = depth;
    Ok(m)
}

pub fn write_snapshot_file(m: &EmpiricalMeasure, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_snapshot(m, std::io::BufWriter::new(f))
}

pub fn read_snapshot_file(path: impl AsRef<Path>) -> Result<EmpiricalMeasure> {
    read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Header `x,y,w`; 1-D measures write `y = 0`.
pub fn write_csv<W: Write>(m: &EmpiricalMeasure, mut w: W) -> Result<()> {
    writeln!(w, "x,y,w")?;
    for (p, x) in m.points().iter().zip(m.weights()) {
        writeln!(w, "{:?},{:?},{:?}", p[0], p[1], x)?;
    }
    Ok(())
}
