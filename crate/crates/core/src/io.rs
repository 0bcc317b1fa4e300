//! Number formatting, the binary matrix container and tabulated potentials.
//!
//! Binary container layout (little endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `PLRNBIN1` |
//! | 1     | kind: 0 real matrix, 1 complex matrix, 2 sector basis |
//! | 8     | rows (u64) |
//! | 8     | cols (u64) |
//! | ...   | payload |
//!
//! Matrices store entries row-major as f64 (complex: real then imaginary).
//! A basis stores the lattice cutoff (f64), the total momentum (3 × i32),
//! `n_max` in `cols`, then per state a u32 pair count followed by
//! `(mode u32, count u32)` pairs.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Occupation, SectorBasis};
use crate::operators::DenseMatrix;

const MAGIC: &[u8; 8] = b"PLRNBIN1";

/// Seventeen significant digits, '.' decimal separator.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(w: &mut impl Write, kind: u8, rows: usize, cols: usize) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind])?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(u8, usize, usize)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a binary dump (bad magic)".into()));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    Ok((kind[0], rows, cols))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn write_dense(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    match m {
        DenseMatrix::Real(a) => {
            header(w, 0, a.nrows(), a.ncols())?;
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    w.write_all(&a[(i, j)].to_le_bytes())?;
                }
            }
        }
        DenseMatrix::Complex(a) => {
            header(w, 1, a.nrows(), a.ncols())?;
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    w.write_all(&a[(i, j)].re.to_le_bytes())?;
                    w.write_all(&a[(i, j)].im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_dense(r: &mut impl Read) -> Result<DenseMatrix> {
    let (kind, rows, cols) = read_header(r)?;
    match kind {
        0 => {
            let mut a = DMatrix::<f64>::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    a[(i, j)] = read_f64(r)?;
                }
            }
            Ok(DenseMatrix::Real(a))
        }
        1 => {
            let mut a = DMatrix::<Complex64>::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    let re = read_f64(r)?;
                    let im = read_f64(r)?;
                    a[(i, j)] = Complex64::new(re, im);
                }
            }
            Ok(DenseMatrix::Complex(a))
        }
        k => Err(Error::Parse(format!("dump kind {k} is not a matrix"))),
    }
}

pub fn write_basis(w: &mut impl Write, basis: &SectorBasis) -> Result<()> {
    header(w, 2, basis.len(), basis.n_max())?;
    w.write_all(&basis.lattice().cutoff_radius().to_le_bytes())?;
    for c in basis.p_total() {
        w.write_all(&c.to_le_bytes())?;
    }
    for i in 0..basis.len() {
        let st = basis.state(i);
        w.write_all(&(st.len() as u32).to_le_bytes())?;
        for (m, c) in st {
            w.write_all(&(m as u32).to_le_bytes())?;
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Contents of a basis dump.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDump {
    pub cutoff_radius: f64,
    pub p_total: [i32; 3],
    pub n_max: usize,
    pub states: Vec<Occupation>,
}

pub fn read_basis(r: &mut impl Read) -> Result<BasisDump> {
    let (kind, rows, cols) = read_header(r)?;
    if kind != 2 {
        return Err(Error::Parse(format!("dump kind {kind} is not a basis")));
    }
    let cutoff_radius = read_f64(r)?;
    let mut p_total = [0i32; 3];
    for c in &mut p_total {
        *c = read_u32(r)? as i32;
    }
    let mut states = Vec::with_capacity(rows);
    for _ in 0..rows {
        let n = read_u32(r)? as usize;
        let mut st = Vec::with_capacity(n);
        for _ in 0..n {
            let m = read_u32(r)? as usize;
            let c = read_u32(r)?;
            st.push((m, c));
        }
        states.push(st);
    }
    Ok(BasisDump {
        cutoff_radius,
        p_total,
        n_max: cols,
        states,
    })
}

/// Radial potential samples `(r, v(r))`, radius strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::Parse("radial table needs at least two (r, v) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("radial table radii must be >= 0 and strictly ascending".into()));
        }
        Ok(RadialTable { r, v })
    }

    /// Parses two whitespace- or comma-separated columns; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::new(r, v)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Linear interpolation, zero beyond the last radius.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x > self.r[n - 1] {
            return 0.0;
        }
        if x <= self.r[0] {
            return self.v[0];
        }
        let j = self.r.partition_point(|&ri| ri < x);
        let (r0, r1) = (self.r[j - 1], self.r[j]);
        let t = (x - r0) / (r1 - r0);
        self.v[j - 1] * (1.0 - t) + self.v[j] * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{MomentumLattice, TWO_PI};
    use std::sync::Arc;

    #[test]
    fn seventeen_digits_roundtrip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 1e-300, 0.0] {
            let s = fmt17(x);
            assert!(!s.contains(','));
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn dense_roundtrip() {
        let a = DenseMatrix::Real(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]));
        let mut buf = Vec::new();
        write_dense(&mut buf, &a).unwrap();
        assert_eq!(buf.len(), 25 + 48);
        // Row-major: the second entry is (0, 1).
        assert_eq!(f64::from_le_bytes(buf[33..41].try_into().unwrap()), 2.0);
        assert_eq!(read_dense(&mut buf.as_slice()).unwrap(), a);
        let c = DenseMatrix::Complex(DMatrix::from_element(2, 2, Complex64::new(1.0, -2.0)));
        let mut buf = Vec::new();
        write_dense(&mut buf, &c).unwrap();
        assert_eq!(read_dense(&mut buf.as_slice()).unwrap(), c);
        assert!(read_dense(&mut &b"garbage-bytes-here-xxxxxxxxx"[..]).is_err());
    }

    #[test]
    fn basis_roundtrip() {
        let lat = Arc::new(MomentumLattice::build(TWO_PI).unwrap());
        let b = SectorBasis::enumerate(lat, 2, [1, 0, -1]).unwrap();
        let mut buf = Vec::new();
        write_basis(&mut buf, &b).unwrap();
        let d = read_basis(&mut buf.as_slice()).unwrap();
        assert_eq!(d.states.len(), 28);
        assert_eq!(d.p_total, [1, 0, -1]);
        for (i, s) in d.states.iter().enumerate() {
            assert_eq!(b.state_index(s).unwrap(), i);
        }
    }

    #[test]
    fn radial_table_parsing() {
        let t = RadialTable::parse("# r v\n0.0 2.0\n0.5, 1.0 # mid\n\n1.0 0.0\n").unwrap();
        assert_eq!(t.eval(0.25), 1.5);
        assert_eq!(t.eval(2.0), 0.0);
        assert!(RadialTable::parse("0 1\n0 2\n").is_err());
        assert!(RadialTable::parse("0 1 3\n").is_err());
        assert!(RadialTable::parse("0 x\n1 2\n").is_err());
    }
}
