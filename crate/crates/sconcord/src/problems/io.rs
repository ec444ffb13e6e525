//! Instance serialization: a little-endian binary container for matrices
//! (magic "SCMX") alongside a JSON sidecar holding scalars and provenance.
//! Round-trips are bit-exact; repeated writes of the same instance produce
//! byte-identical files.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SCMX";
const VERSION: u32 = 1;

pub fn write_matrices(path: &Path, entries: &[(&str, &DMatrix<f64>)]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, mat) in entries {
        let bytes = name.as_bytes();
        buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        buf.extend_from_slice(bytes);
        buf.extend_from_slice(&(mat.nrows() as u32).to_le_bytes());
        buf.extend_from_slice(&(mat.ncols() as u32).to_le_bytes());
        for v in mat.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_matrices(path: &Path) -> Result<Vec<(String, DMatrix<f64>)>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > bytes.len() {
            return Err(Error::MalformedInstance(format!(
                "container truncated at offset {pos}"
            )));
        }
        let s = &bytes[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    let u32_at = |pos: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
    };

    if take(&mut pos, 4)? != MAGIC {
        return Err(Error::MalformedInstance("bad container magic".into()));
    }
    let version = u32_at(&mut pos)?;
    if version != VERSION {
        return Err(Error::MalformedInstance(format!(
            "unsupported container version {version}"
        )));
    }
    let count = u32_at(&mut pos)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u32_at(&mut pos)? as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|_| Error::MalformedInstance("matrix name is not UTF-8".into()))?;
        let nrows = u32_at(&mut pos)? as usize;
        let ncols = u32_at(&mut pos)? as usize;
        let data = take(&mut pos, nrows * ncols * 8)?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, DMatrix::from_column_slice(nrows, ncols, &values)));
    }
    if pos != bytes.len() {
        return Err(Error::MalformedInstance("trailing bytes in container".into()));
    }
    Ok(out)
}

pub fn find_matrix<'a>(
    entries: &'a [(String, DMatrix<f64>)],
    name: &str,
) -> Result<&'a DMatrix<f64>> {
    entries
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::MalformedInstance(format!("container is missing matrix {name:?}")))
}
