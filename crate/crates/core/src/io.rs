//! Text and binary formats for fields, sweeps and flow trajectories.
//!
//! Binary field layout (all little-endian):
//!
//! | bytes        | content                                      |
//! |--------------|----------------------------------------------|
//! | 4            | magic `HGF1`                                 |
//! | 8 + 8        | nx, ny as u64                                |
//! | 8            | h as f64                                     |
//! | 8            | boundary value as f64                        |
//! | 1 + 16       | domain tag (0 disk, 1 ellipse, 2 square) and two f64 parameters |
//! | ⌈nx·ny/8⌉    | mask bits, node p at bit p % 8 of byte p / 8 |
//! | 8·nx·ny      | values as f64, row-major (p = j·nx + i)     |

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Serialize;

use crate::eigensolve::SweepReport;
use crate::error::{Error, Result};
use crate::grid::{DomainDescriptor, GridField};
use crate::variational::FlowRecord;

const MAGIC: &[u8; 4] = b"HGF1";

/// `x,y,u` rows for the nodes inside the mask.
pub fn field_to_csv(f: &GridField) -> String {
    let mut s = String::from("x,y,u\n");
    for p in 0..f.values.len() {
        if f.inside[p] {
            let (x, y) = f.coords(p);
            let _ = writeln!(s, "{x},{y},{}", f.values[p]);
        }
    }
    s
}

pub fn write_field_binary(f: &GridField, mut w: impl Write) -> Result<()> {
    let n = f.nx * f.ny;
    if f.values.len() != n || f.inside.len() != n {
        return Err(Error::Format("field arrays do not match nx*ny".into()));
    }
    let (tag, par) = f.domain.tag();
    let mut buf = Vec::with_capacity(61 + n / 8 + 8 * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(f.nx as u64).to_le_bytes());
    buf.extend_from_slice(&(f.ny as u64).to_le_bytes());
    buf.extend_from_slice(&f.h.to_le_bytes());
    buf.extend_from_slice(&f.boundary_value.to_le_bytes());
    buf.push(tag);
    buf.extend_from_slice(&par[0].to_le_bytes());
    buf.extend_from_slice(&par[1].to_le_bytes());
    let mut mask = vec![0u8; n.div_ceil(8)];
    for (p, &b) in f.inside.iter().enumerate() {
        if b {
            mask[p / 8] |= 1 << (p % 8);
        }
    }
    buf.extend_from_slice(&mask);
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    b: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.b.len() {
            return Err(Error::Format(format!("truncated field file: needed {} bytes at offset {}", n, self.at)));
        }
        let s = &self.b[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_field_binary(mut r: impl Read) -> Result<GridField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { b: &bytes, at: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("not a HGF1 field file".into()));
    }
    let nx = c.u64()? as usize;
    let ny = c.u64()? as usize;
    let n = nx.checked_mul(ny).filter(|&n| n > 0 && n <= bytes.len()).ok_or_else(|| Error::Format(format!("bad dimensions {nx}x{ny}")))?;
    let h = c.f64()?;
    let boundary_value = c.f64()?;
    let tag = c.take(1)?[0];
    let par = [c.f64()?, c.f64()?];
    let domain = DomainDescriptor::from_tag(tag, par)?;
    let mask = c.take(n.div_ceil(8))?;
    let inside = (0..n).map(|p| mask[p / 8] >> (p % 8) & 1 == 1).collect();
    let values = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    if c.at != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after field data", bytes.len() - c.at)));
    }
    if !(h > 0.0) {
        return Err(Error::Format("non-positive grid spacing".into()));
    }
    Ok(GridField { h, nx, ny, values, inside, boundary_value, domain })
}

/// `delta,lambda,K,L,Khat,Lhat` rows followed by `#` footer lines with the extrapolation.
pub fn sweep_to_csv(rep: &SweepReport) -> String {
    let mut s = String::from("delta,lambda,K,L,Khat,Lhat\n");
    for r in &rep.rows {
        let e = &r.estimates;
        let _ = writeln!(s, "{},{},{},{},{},{}", r.delta, r.lambda, e.k, e.l_beta, e.k_hat, e.l_hat);
    }
    let _ = writeln!(s, "# lambda1={}", rep.lambda1);
    let _ = writeln!(s, "# extrapolation={}", rep.extrapolation);
    if let Some(q) = rep.fitted_exponent {
        let _ = writeln!(s, "# exponent={q}");
    }
    let _ = writeln!(s, "# beta={}", rep.beta);
    let _ = writeln!(s, "# monotonicity_violations={}", rep.monotonicity_violations.len());
    s
}

pub fn flow_to_csv(records: &[FlowRecord]) -> String {
    let mut s = String::from("t,J,dt,residual\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", r.t, r.j, r.dt, r.residual);
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn sample() -> GridField {
        let g = Grid::new(DomainDescriptor::Ellipse { a: 1.2, b: 0.7 }, 0.1).unwrap();
        g.to_field(&g.from_fn(|x, y| x * 0.3 - y * y - 1.0 / 3.0))
    }

    #[test]
    fn binary_roundtrip() {
        let f = sample();
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        let back = read_field_binary(&buf[..]).unwrap();
        assert_eq!(back, f);
        for v in f.values.iter().zip(&back.values) {
            assert_eq!(v.0.to_bits(), v.1.to_bits());
        }
    }

    #[test]
    fn binary_rejects_garbage() {
        let f = sample();
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        assert!(matches!(read_field_binary(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_field_binary(&bad[..]), Err(Error::Format(_))));
        let mut long = buf;
        long.push(0);
        assert!(matches!(read_field_binary(&long[..]), Err(Error::Format(_))));
        assert!(read_field_binary(&b""[..]).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let f = sample();
        let csv = field_to_csv(&f);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,u"));
        assert_eq!(lines.count(), f.inside.iter().filter(|&&b| b).count());
    }
}
