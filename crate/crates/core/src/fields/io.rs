//! CBF1 binary field files.
//!
//! Layout: magic `CBF1`, `u8` dim, `u8` kind (0 scalar, 1 vector), `u32` n,
//! then little-endian `f64` blocks in row-major order, one per component.

use std::io::{Read, Write};
use std::path::Path;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{CbfError, Result};

const MAGIC: &[u8; 4] = b"CBF1";

/// A field read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
}

fn header(out: &mut Vec<u8>, grid: &Grid, kind: u8) {
    out.extend_from_slice(MAGIC);
    out.push(grid.dim() as u8);
    out.push(kind);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
}

fn push_block(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_scalar(s: &ScalarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 8 * s.data().len());
    header(&mut out, s.grid(), 0);
    push_block(&mut out, s.data());
    out
}

pub fn encode_vector(u: &VectorField) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, u.grid(), 1);
    for c in u.components() {
        push_block(&mut out, c);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<AnyField> {
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(CbfError::Format("missing CBF1 header".into()));
    }
    let dim = bytes[4] as usize;
    let kind = bytes[5];
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let grid = Grid::new(dim, n).map_err(|e| CbfError::Format(format!("bad grid in header: {e}")))?;
    let lens: Vec<usize> = match kind {
        0 => vec![grid.cell_shape().len()],
        1 => (0..dim).map(|c| grid.face_shape(c).len()).collect(),
        k => return Err(CbfError::Format(format!("unknown field kind {k}"))),
    };
    let want = 10 + 8 * lens.iter().sum::<usize>();
    if bytes.len() != want {
        return Err(CbfError::Format(format!(
            "expected {want} bytes for this header, found {}",
            bytes.len()
        )));
    }
    let mut pos = 10;
    let mut blocks = Vec::with_capacity(lens.len());
    for len in lens {
        let block = bytes[pos..pos + 8 * len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect::<Vec<_>>();
        pos += 8 * len;
        blocks.push(block);
    }
    if kind == 0 {
        Ok(AnyField::Scalar(ScalarField::from_vec(grid, blocks.remove(0))?))
    } else {
        Ok(AnyField::Vector(VectorField::from_components(grid, blocks)?))
    }
}

pub fn write_scalar(path: &Path, s: &ScalarField) -> Result<()> {
    std::fs::File::create(path)?.write_all(&encode_scalar(s))?;
    Ok(())
}

pub fn write_vector(path: &Path, u: &VectorField) -> Result<()> {
    std::fs::File::create(path)?.write_all(&encode_vector(u))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<AnyField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes).map_err(|e| e.context(format!("reading {}", path.display())))
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    match read_field(path)? {
        AnyField::Vector(v) => Ok(v),
        AnyField::Scalar(_) => Err(CbfError::Format(format!(
            "{} holds a scalar field, expected a vector field",
            path.display()
        ))),
    }
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    match read_field(path)? {
        AnyField::Scalar(s) => Ok(s),
        AnyField::Vector(_) => Err(CbfError::Format(format!(
            "{} holds a vector field, expected a scalar field",
            path.display()
        ))),
    }
}
