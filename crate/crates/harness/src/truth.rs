//! Ground-truth files and the per-round truth cache.
//!
//! File layout (little-endian): `u32 nq`, `u32 k`, then `nq * k` `u32` ids.

use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rustc_hash::FxHasher;

use crate::dataset::{DatasetError, Result};

pub fn write_truth(w: impl Write, rows: &[Vec<u32>]) -> Result<()> {
    let k = rows.first().map_or(0, Vec::len);
    let mut w = BufWriter::new(w);
    w.write_u32::<LE>(rows.len() as u32)?;
    w.write_u32::<LE>(k as u32)?;
    for row in rows {
        if row.len() != k {
            return Err(DatasetError::Parse { offset: 0, reason: "truth rows differ in length".into() });
        }
        for &id in row {
            w.write_u32::<LE>(id)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth(r: impl Read) -> Result<Vec<Vec<u32>>> {
    let mut r = BufReader::new(r);
    let (Ok(nq), Ok(k)) = (r.read_u32::<LE>(), r.read_u32::<LE>()) else {
        return Err(DatasetError::Parse { offset: 0, reason: "truncated truth header".into() });
    };
    let mut rows = Vec::with_capacity(nq as usize);
    for i in 0..nq as usize {
        let mut row = vec![0u32; k as usize];
        if r.read_u32_into::<LE>(&mut row).is_err() {
            return Err(DatasetError::Parse {
                offset: 8 + (i * k as usize * 4) as u64,
                reason: format!("truncated at row {i} of {nq}"),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Stable hash of a vector set (bit patterns, in order).
pub fn hash_vectors(data: &[Vec<f32>]) -> u64 {
    let mut h = FxHasher::default();
    data.len().hash(&mut h);
    for v in data {
        for x in v {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// On-disk cache of ground-truth rows keyed by a caller-supplied hash.
#[derive(Clone, Debug)]
pub struct TruthCache {
    dir: PathBuf,
}

impl TruthCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn path(&self, key: u64) -> PathBuf {
        self.dir.join(format!("{key:016x}.truth"))
    }

    pub fn get(&self, key: u64) -> Option<Vec<Vec<u32>>> {
        let file = File::open(self.path(key)).ok()?;
        read_truth(file).ok()
    }

    pub fn put(&self, key: u64, rows: &[Vec<u32>]) -> Result<()> {
        // write then rename so concurrent runs never read a partial file
        let tmp = self.dir.join(format!("{key:016x}.{}.tmp", std::process::id()));
        write_truth(File::create(&tmp)?, rows)?;
        std::fs::rename(tmp, self.path(key))?;
        Ok(())
    }

    pub fn get_or_compute(&self, key: u64, f: impl FnOnce() -> Vec<Vec<u32>>) -> Result<Vec<Vec<u32>>> {
        if let Some(rows) = self.get(key) {
            return Ok(rows);
        }
        let rows = f();
        self.put(key, &rows)?;
        Ok(rows)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
