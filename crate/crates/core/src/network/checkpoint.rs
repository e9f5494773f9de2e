//! Binary model checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic        8 bytes  b"SIGRGMLP"
//! version      u32      1
//! layer_count  u32      number of dense layers L
//! widths       u64 × (L + 1)
//! per layer l: weights f64 × widths[l+1]·widths[l] (row-major), bias f64 × widths[l+1]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::MlpModel;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SIGRGMLP";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &MlpModel, mut w: W) -> std::io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(model.depth() as u32).to_le_bytes())?;
    for &width in model.widths() {
        w.write_all(&(width as u64).to_le_bytes())?;
    }
    for (weights, bias) in model.weights().iter().zip(model.biases()) {
        for v in weights.as_slice().iter().chain(bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<MlpModel> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let layers = read_u32(&mut r, "layer count")? as usize;
    if layers == 0 || layers > 4096 {
        return Err(Error::Checkpoint(format!("implausible layer count {layers}")));
    }
    let mut widths = Vec::with_capacity(layers + 1);
    for _ in 0..=layers {
        let mut buf = [0u8; 8];
        read_exact(&mut r, &mut buf, "widths")?;
        let w = u64::from_le_bytes(buf);
        if w == 0 || w > 1 << 24 {
            return Err(Error::Checkpoint(format!("implausible width {w}")));
        }
        widths.push(w as usize);
    }
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for l in 0..layers {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let w = read_f64s(&mut r, fan_out * fan_in)?;
        weights.push(Matrix::from_vec(fan_out, fan_in, w)?);
        biases.push(read_f64s(&mut r, fan_out)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
        return Err(Error::Checkpoint("trailing bytes after last layer".into()));
    }
    MlpModel::from_parts(widths, weights, biases)
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(model, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("reading {what}: {e}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    (0..n)
        .map(|_| {
            read_exact(r, &mut buf, "parameters")?;
            Ok(f64::from_le_bytes(buf))
        })
        .collect()
}
