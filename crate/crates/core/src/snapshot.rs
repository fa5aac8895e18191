//! Binary save/load of a quiescent index. Layout (little-endian) is
//! described in `docs/snapshot-format.md`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::bridge::{BridgeConfig, BridgePredicate, DepthSelection};
use crate::error::{IndexError, Result};
use crate::graph::{Graph, NodeId, SlotStatus};
use crate::index::{EngineMode, Index};
use crate::metric::Metric;
use crate::params::{IndexParams, ReusePriority};

const MAGIC: &[u8; 8] = b"CLNNIDX\0";
const VERSION: u32 = 1;
const NONE: u32 = u32::MAX;

/// Reader that tracks its byte offset for error messages.
struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(IndexError::Format { offset: self.offset, reason: reason.into() })
    }

    fn map_eof<T>(&self, r: std::io::Result<T>, what: &str) -> Result<T> {
        r.map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => {
                IndexError::Format { offset: self.offset, reason: format!("truncated while reading {what}") }
            }
            _ => IndexError::Io(e),
        })
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        let r = self.inner.read_u8();
        let v = self.map_eof(r, what)?;
        self.offset += 1;
        Ok(v)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let r = self.inner.read_u32::<LE>();
        let v = self.map_eof(r, what)?;
        self.offset += 4;
        Ok(v)
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let r = self.inner.read_f32::<LE>();
        let v = self.map_eof(r, what)?;
        self.offset += 4;
        Ok(v)
    }

    fn ids(&mut self, what: &str) -> Result<Vec<NodeId>> {
        let n = self.u32(what)?;
        (0..n).map(|_| self.u32(what).map(NodeId)).collect()
    }
}

fn write_ids<W: Write>(w: &mut W, ids: &[NodeId]) -> Result<()> {
    w.write_u32::<LE>(ids.len() as u32)?;
    for id in ids {
        w.write_u32::<LE>(id.0)?;
    }
    Ok(())
}

impl Index {
    /// Writes the index to `path`. Callers must make sure no other thread
    /// is mutating the index.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let g = self.graph();
        let p = self.params();
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        w.write_u32::<LE>(g.dim() as u32)?;
        w.write_u32::<LE>(g.capacity() as u32)?;
        w.write_u32::<LE>(p.max_degree as u32)?;
        w.write_u8(p.metric.to_byte())?;
        w.write_u32::<LE>(p.search_beam as u32)?;
        w.write_u32::<LE>(p.insert_beam as u32)?;
        w.write_f32::<LE>(p.alpha)?;
        w.write_u32::<LE>(p.eagerness)?;
        w.write_u8(match p.reuse {
            ReusePriority::FreshFirst => 0,
            ReusePriority::ReusedFirst => 1,
        })?;
        w.write_u8(self.engine().to_byte())?;
        w.write_u8(p.bridge.enabled as u8)?;
        w.write_u8(match p.bridge.predicate {
            BridgePredicate::SameDepth => 0,
            BridgePredicate::AlwaysTrue => 1,
        })?;
        w.write_u32::<LE>(p.bridge.max_pairs_per_query as u32)?;
        match &p.bridge.depths {
            DepthSelection::Auto => w.write_u32::<LE>(0)?,
            DepthSelection::Fixed(d) => {
                w.write_u32::<LE>(d.len() as u32)?;
                for &x in d {
                    w.write_u32::<LE>(x)?;
                }
            }
        }
        w.write_u32::<LE>(g.start().map_or(NONE, |s| s.0))?;

        let (next_fresh, recycled, replaceable) = g.pool_lists();
        w.write_u32::<LE>(next_fresh as u32)?;
        let mut buf = Vec::with_capacity(g.dim());
        let mut h_table = Vec::new();
        for v in (0..next_fresh as u32).map(NodeId) {
            w.write_u8(g.status(v) as u8)?;
            g.load_vector(v, &mut buf);
            for &x in &buf {
                w.write_f32::<LE>(x)?;
            }
            write_ids(w, &g.read_neighbors(v))?;
            if let Some(h) = g.consolidation_count(v) {
                h_table.push((v, h));
            }
        }
        w.write_u32::<LE>(h_table.len() as u32)?;
        for (v, h) in h_table {
            w.write_u32::<LE>(v.0)?;
            w.write_u32::<LE>(h)?;
        }
        write_ids(w, &replaceable)?;
        write_ids(w, &recycled)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut c = Cursor { inner: r, offset: 0 };
        let mut magic = [0u8; 8];
        let r = c.inner.read_exact(&mut magic);
        c.map_eof(r, "magic")?;
        if &magic != MAGIC {
            return c.fail("bad magic");
        }
        c.offset = 8;
        let version = c.u32("version")?;
        if version != VERSION {
            return c.fail(format!("unsupported version {version}"));
        }
        let dim = c.u32("dim")? as usize;
        let capacity = c.u32("capacity")? as usize;
        let max_degree = c.u32("max degree")? as usize;
        let metric_byte = c.u8("metric")?;
        let Some(metric) = Metric::from_byte(metric_byte) else {
            return c.fail(format!("unknown metric {metric_byte}"));
        };
        let search_beam = c.u32("search beam")? as usize;
        let insert_beam = c.u32("insert beam")? as usize;
        let alpha = c.f32("alpha")?;
        let eagerness = c.u32("eagerness")?;
        let reuse = match c.u8("reuse priority")? {
            0 => ReusePriority::FreshFirst,
            1 => ReusePriority::ReusedFirst,
            other => return c.fail(format!("unknown reuse priority {other}")),
        };
        let engine_byte = c.u8("engine")?;
        let Some(engine) = EngineMode::from_byte(engine_byte) else {
            return c.fail(format!("unknown engine {engine_byte}"));
        };
        let enabled = c.u8("bridge flag")? != 0;
        let predicate = match c.u8("bridge predicate")? {
            0 => BridgePredicate::SameDepth,
            1 => BridgePredicate::AlwaysTrue,
            other => return c.fail(format!("unknown bridge predicate {other}")),
        };
        let max_pairs_per_query = c.u32("bridge cap")? as usize;
        let n_depths = c.u32("depth count")?;
        let depths = if n_depths == 0 {
            DepthSelection::Auto
        } else {
            DepthSelection::Fixed((0..n_depths).map(|_| c.u32("depth")).collect::<Result<_>>()?)
        };
        let start = c.u32("start")?;

        let params = IndexParams {
            max_degree,
            search_beam,
            insert_beam,
            alpha,
            eagerness,
            bridge: BridgeConfig { enabled, depths, predicate, max_pairs_per_query },
            metric,
            capacity,
            reuse,
        };
        if let Err(e) = params.validate() {
            return c.fail(format!("invalid parameters: {e}"));
        }
        let graph = Graph::new(dim, capacity, max_degree, metric, reuse)?;

        let next_fresh = c.u32("slot count")? as usize;
        if next_fresh > capacity {
            return c.fail(format!("slot count {next_fresh} exceeds capacity {capacity}"));
        }
        let mut statuses = Vec::with_capacity(next_fresh);
        let mut x = vec![0f32; dim];
        for v in (0..next_fresh as u32).map(NodeId) {
            let sb = c.u8("slot status")?;
            let Some(status) = SlotStatus::from_byte(sb) else {
                return c.fail(format!("unknown slot status {sb}"));
            };
            for xi in x.iter_mut() {
                *xi = c.f32("vector")?;
            }
            let at = c.offset;
            let list = c.ids("neighbors")?;
            if let Err(e) = graph.restore_slot(v, status, &x, list, None) {
                return Err(IndexError::Format { offset: at, reason: e.to_string() });
            }
            statuses.push(status);
        }
        let n_h = c.u32("H count")?;
        for _ in 0..n_h {
            let v = c.u32("H node")? as usize;
            let h = c.u32("H value")?;
            if statuses.get(v) != Some(&SlotStatus::Tombstoned) {
                return c.fail(format!("H entry for non-tombstoned slot {v}"));
            }
            *graph.consolidations[v].lock() = Some(h);
        }
        let replaceable = c.ids("replaceable set")?;
        let recycled = c.ids("recycled list")?;
        graph.restore_pool(next_fresh, recycled, replaceable);
        if start != NONE {
            graph.set_start(NodeId(start))?;
        }
        let problems = graph.audit();
        if let Some(first) = problems.first() {
            return c.fail(format!("inconsistent snapshot: {first}"));
        }
        Ok(Index::from_parts(graph, params, engine))
    }
}
