//! Binary field (`CHQF`) and kernel cache (`CHQK`) files.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid3, RealField};
use crate::kernel::{Kernel, KernelKind};

const FIELD_MAGIC: &[u8; 4] = b"CHQF";
const KERNEL_MAGIC: &[u8; 4] = b"CHQK";
const VERSION: u32 = 1;

/// Contents of a field file.
#[derive(Clone, Debug)]
pub enum FieldData {
    Real(RealField),
    Complex(ComplexField),
}

impl FieldData {
    pub fn grid(&self) -> &Grid3 {
        match self {
            FieldData::Real(r) => r.grid(),
            FieldData::Complex(c) => c.grid(),
        }
    }

    pub fn into_complex(self) -> ComplexField {
        match self {
            FieldData::Real(r) => r.to_complex(),
            FieldData::Complex(c) => c,
        }
    }
}

fn header(magic: &[u8; 4], grid: &Grid3) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(magic);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    b.extend_from_slice(&grid.half_width().to_le_bytes());
    b
}

pub fn encode_real(f: &RealField) -> Vec<u8> {
    let mut b = header(FIELD_MAGIC, f.grid());
    b.push(0);
    for v in f.values() {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

pub fn encode_complex(f: &ComplexField) -> Vec<u8> {
    let mut b = header(FIELD_MAGIC, f.grid());
    b.push(1);
    for v in f.values() {
        b.extend_from_slice(&v.re.to_le_bytes());
        b.extend_from_slice(&v.im.to_le_bytes());
    }
    b
}

pub fn write_real(path: impl AsRef<Path>, f: &RealField) -> Result<()> {
    Ok(fs::write(path, encode_real(f))?)
}

pub fn write_complex(path: impl AsRef<Path>, f: &ComplexField) -> Result<()> {
    Ok(fs::write(path, encode_complex(f))?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.buf.len() {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn grid(&mut self, magic: &[u8; 4]) -> Result<Grid3> {
        if self.take(4)? != magic {
            return Err(Error::Format(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        let n = self.u32()? as usize;
        let l = self.f64()?;
        Grid3::new(n, l).map_err(|e| Error::Format(e.to_string()))
    }
    fn done(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

pub fn decode_field(buf: &[u8]) -> Result<FieldData> {
    let mut r = Reader { buf, pos: 0 };
    let grid = r.grid(FIELD_MAGIC)?;
    let flag = r.u8()?;
    let out = match flag {
        0 => {
            let mut v = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                v.push(r.f64()?);
            }
            FieldData::Real(RealField::from_values(grid, v)?)
        }
        1 => {
            let mut v = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                let re = r.f64()?;
                let im = r.f64()?;
                v.push(Complex64::new(re, im));
            }
            FieldData::Complex(ComplexField::from_values(grid, v)?)
        }
        f => return Err(Error::Format(format!("unknown field flag {f}"))),
    };
    r.done()?;
    Ok(out)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldData> {
    decode_field(&fs::read(path)?)
}

pub fn write_kernel(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    let mut b = header(KERNEL_MAGIC, k.grid());
    b.extend_from_slice(&k.truncation_radius().to_le_bytes());
    let name = match k.kind() {
        KernelKind::Coulomb => {
            b.push(0);
            ""
        }
        KernelKind::Tabulated(s) => {
            b.push(1);
            s.as_str()
        }
    };
    b.extend_from_slice(&(name.len() as u32).to_le_bytes());
    b.extend_from_slice(name.as_bytes());
    let (lo, hi) = k.bracket();
    b.extend_from_slice(&lo.to_le_bytes());
    b.extend_from_slice(&hi.to_le_bytes());
    for v in k.multiplier_full() {
        b.extend_from_slice(&v.to_le_bytes());
    }
    Ok(fs::write(path, b)?)
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<Kernel> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    let grid = r.grid(KERNEL_MAGIC)?;
    let radius = r.f64()?;
    let tag = r.u8()?;
    let len = r.u32()? as usize;
    let name = String::from_utf8(r.take(len)?.to_vec())
        .map_err(|_| Error::Format("kernel name is not utf-8".into()))?;
    let kind = match tag {
        0 => KernelKind::Coulomb,
        1 => KernelKind::Tabulated(name),
        t => return Err(Error::Format(format!("unknown kernel tag {t}"))),
    };
    let bracket = (r.f64()?, r.f64()?);
    let m = 2 * grid.n();
    let mut full = Vec::with_capacity(m * m * m);
    for _ in 0..m * m * m {
        full.push(r.f64()?);
    }
    r.done()?;
    Kernel::from_full(grid, kind, radius, bracket, &full)
}
