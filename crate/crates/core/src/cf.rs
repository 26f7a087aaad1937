//! `.cf` field files: one line of JSON header, then the samples as
//! little-endian interleaved `(re, im)` f64 pairs in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::grid::Grid;
use crate::Complex64;

pub const DTYPE: &str = "complex128-le";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dim: usize,
    n: Vec<usize>,
    l: Vec<f64>,
    time: f64,
    space: Space,
    dtype: String,
}

pub fn write<W: Write>(field: &ComplexField, mut out: W) -> Result<()> {
    let header = Header {
        dim: field.grid.dim(),
        n: field.grid.shape().to_vec(),
        l: field.grid.lengths().to_vec(),
        time: field.time,
        space: field.space,
        dtype: DTYPE.into(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(16 * field.values.len());
    for z in &field.values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn read<R: Read>(input: R) -> Result<ComplexField> {
    let mut reader = BufReader::new(input);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header line".into()));
    }
    let header: Header = serde_json::from_slice(&line[..line.len() - 1])
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.n.len() != header.dim {
        return Err(Error::Format("header dim does not match n".into()));
    }
    let grid = Grid::new(&header.n, &header.l).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            16 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    ComplexField::new(grid, values, header.time, header.space)
}

pub fn write_file(field: &ComplexField, path: impl AsRef<Path>) -> Result<()> {
    write(field, BufWriter::new(File::create(path)?))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<ComplexField> {
    read(File::open(path)?)
}
