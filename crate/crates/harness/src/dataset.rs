//! Readers and writers for the common vector file formats.
//!
//! * `fvecs`: per row, `i32 dim` then `dim` little-endian `f32`.
//! * `bvecs`: per row, `i32 dim` then `dim` `u8`.
//! * `fbin`: `i32 n`, `i32 dim`, then `n * dim` `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },
    #[error("unknown dataset format '{0}' (expected fvecs, bvecs or fbin)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Fvecs,
    Bvecs,
    Fbin,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        ext.parse()
    }
}

impl FromStr for Format {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fvecs" => Ok(Format::Fvecs),
            "bvecs" => Ok(Format::Bvecs),
            "fbin" => Ok(Format::Fbin),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

fn parse<T>(offset: u64, reason: impl Into<String>) -> Result<T> {
    Err(DatasetError::Parse { offset, reason: reason.into() })
}

fn read_dim(r: &mut impl Read, offset: u64) -> Result<Option<usize>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut buf[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return parse(offset, "truncated row header"),
            n => got += n,
        }
    }
    let dim = i32::from_le_bytes(buf);
    if dim <= 0 {
        return parse(offset, format!("non-positive dimension {dim}"));
    }
    Ok(Some(dim as usize))
}

fn read_rows(r: &mut impl Read, elem: u64, mut row: impl FnMut(&mut dyn Read, usize) -> std::io::Result<Vec<f32>>) -> Result<Vec<Vec<f32>>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut expected = None;
    while let Some(dim) = read_dim(r, offset)? {
        if *expected.get_or_insert(dim) != dim {
            return parse(offset, format!("row dimension {dim} differs from {}", expected.unwrap()));
        }
        offset += 4;
        match row(r, dim) {
            Ok(v) => out.push(v),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return parse(offset, "truncated row"),
            Err(e) => return Err(e.into()),
        }
        offset += elem * dim as u64;
    }
    if out.is_empty() {
        return parse(0, "file holds no vectors");
    }
    Ok(out)
}

pub fn read_fvecs(r: impl Read) -> Result<Vec<Vec<f32>>> {
    let mut r = BufReader::new(r);
    read_rows(&mut r, 4, |r, dim| {
        let mut v = vec![0f32; dim];
        r.read_f32_into::<LE>(&mut v)?;
        Ok(v)
    })
}

pub fn read_bvecs(r: impl Read) -> Result<Vec<Vec<f32>>> {
    let mut r = BufReader::new(r);
    read_rows(&mut r, 1, |r, dim| {
        let mut v = vec![0u8; dim];
        r.read_exact(&mut v)?;
        Ok(v.into_iter().map(f32::from).collect())
    })
}

pub fn read_fbin(r: impl Read) -> Result<Vec<Vec<f32>>> {
    let mut r = BufReader::new(r);
    let header = |r: &mut BufReader<_>, off| -> Result<i32> {
        r.read_i32::<LE>().or_else(|_| parse(off, "truncated header"))
    };
    let n = header(&mut r, 0)?;
    let dim = header(&mut r, 4)?;
    if n <= 0 || dim <= 0 {
        return parse(0, format!("bad header n={n} dim={dim}"));
    }
    let (n, dim) = (n as usize, dim as usize);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0f32; dim];
        if r.read_f32_into::<LE>(&mut v).is_err() {
            return parse(8 + (i * dim * 4) as u64, format!("truncated at row {i} of {n}"));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_fvecs(w: impl Write, data: &[Vec<f32>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for v in data {
        w.write_i32::<LE>(v.len() as i32)?;
        for &x in v {
            w.write_f32::<LE>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `bvecs`; values are rounded and clamped to `0..=255`.
pub fn write_bvecs(w: impl Write, data: &[Vec<f32>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for v in data {
        w.write_i32::<LE>(v.len() as i32)?;
        for &x in v {
            w.write_u8(x.round().clamp(0.0, 255.0) as u8)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fbin(w: impl Write, data: &[Vec<f32>]) -> Result<()> {
    let mut w = BufWriter::new(w);
    let dim = data.first().map_or(0, Vec::len);
    w.write_i32::<LE>(data.len() as i32)?;
    w.write_i32::<LE>(dim as i32)?;
    for v in data {
        if v.len() != dim {
            return Err(DatasetError::Parse { offset: 0, reason: "rows differ in dimension".into() });
        }
        for &x in v {
            w.write_f32::<LE>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path, format: Option<Format>) -> Result<Vec<Vec<f32>>> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let file = File::open(path)?;
    match format {
        Format::Fvecs => read_fvecs(file),
        Format::Bvecs => read_bvecs(file),
        Format::Fbin => read_fbin(file),
    }
}

pub fn save_dataset(path: &Path, format: Option<Format>, data: &[Vec<f32>]) -> Result<()> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let file = File::create(path)?;
    match format {
        Format::Fvecs => write_fvecs(file, data),
        Format::Bvecs => write_bvecs(file, data),
        Format::Fbin => write_fbin(file, data),
    }
}
