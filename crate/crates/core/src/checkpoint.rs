//! Binary checkpoints.
//!
//! Layout (little-endian): magic `RADM`, format version `u32 = 1`, `n: u32`,
//! `time: f64`, `alpha: f64`, `nu: f64`, `N: u32`, then `3·n³` coefficients
//! as `(re: f64, im: f64)`. Coefficients are component-major (all of
//! component 0, then 1, then 2); within a component they are row-major with
//! `k₁` slowest, in FFT-standard index order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{RadmError, Result};
use crate::spectral::{Grid, SpectralField};

pub const MAGIC: &[u8; 4] = b"RADM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub alpha: f64,
    pub nu: f64,
    pub n_deconv: u32,
    pub field: SpectralField,
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let n = self.field.grid().n() as u32;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.alpha.to_le_bytes())?;
        w.write_all(&self.nu.to_le_bytes())?;
        w.write_all(&self.n_deconv.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.field.grid().len());
        for c in self.field.components() {
            buf.clear();
            for z in c {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(RadmError::Format(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(RadmError::Format(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let grid = Grid::new(n).map_err(|_| RadmError::Format(format!("invalid grid size {n}")))?;
        let time = read_f64(&mut r)?;
        let alpha = read_f64(&mut r)?;
        let nu = read_f64(&mut r)?;
        let n_deconv = read_u32(&mut r)?;
        let mut bytes = vec![0u8; 16 * grid.len()];
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for c in comps.iter_mut() {
            r.read_exact(&mut bytes)
                .map_err(|e| RadmError::Format(format!("truncated coefficient data: {e}")))?;
            *c = bytes
                .chunks_exact(16)
                .map(|b| {
                    Complex64::new(
                        f64::from_le_bytes(b[..8].try_into().unwrap()),
                        f64::from_le_bytes(b[8..].try_into().unwrap()),
                    )
                })
                .collect();
        }
        Ok(Self {
            time,
            alpha,
            nu,
            n_deconv,
            field: SpectralField::from_components(grid, comps)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| RadmError::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| RadmError::Format(format!("truncated header: {e}")))?;
    Ok(f64::from_le_bytes(b))
}
