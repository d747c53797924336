//! Immutable sorted segments: a compressed timestamp column, the raw value
//! column, and a per-128-row min/max index used for data skipping.

use std::io::Write;

use crate::compression::{compress_column, CompressedColumn, BLOCK_ROWS};
use crate::store::{QueryStats, StoreError};

pub(crate) const SEG_MAGIC: &[u8; 4] = b"ITSK";
pub(crate) const SEG_VERSION: u16 = 1;

#[derive(Debug)]
pub struct Segment {
    id: u64,
    ts: CompressedColumn,
    values: Vec<f64>,
    /// `(min_ts, max_ts)` of rows `[128k, 128k+127]`; with a sorted column
    /// these are simply the first and last row of each block.
    block_index: Vec<(u64, u64)>,
    row_count: usize,
}

impl Segment {
    /// Builds a segment from one sorted run. Caller guarantees sortedness
    /// and equal lengths.
    pub(crate) fn build(id: u64, ts: &[u64], values: &[f64]) -> Result<Segment, StoreError> {
        debug_assert!(!ts.is_empty() && ts.len() == values.len());
        debug_assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        let column = compress_column(ts)?;
        let block_index = ts
            .chunks(BLOCK_ROWS)
            .map(|c| (c[0], *c.last().unwrap()))
            .collect();
        Ok(Segment { id, ts: column, values: values.to_vec(), block_index, row_count: ts.len() })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn min_ts(&self) -> u64 {
        self.block_index[0].0
    }

    pub fn max_ts(&self) -> u64 {
        self.block_index.last().unwrap().1
    }

    pub fn block_index(&self) -> &[(u64, u64)] {
        &self.block_index
    }

    pub fn ts_column(&self) -> &CompressedColumn {
        &self.ts
    }

    /// Serialized size of the timestamp column in bytes.
    pub fn ts_bytes(&self) -> u64 {
        self.ts.serialized_size() as u64
    }

    pub fn value_bytes(&self) -> u64 {
        self.values.len() as u64 * 8
    }

    /// Appends all rows with `lo <= ts <= hi` to `out`, decoding only the
    /// blocks the sparse index cannot rule out.
    pub(crate) fn scan_range(
        &self,
        lo: u64,
        hi: u64,
        stats: &mut QueryStats,
        out: &mut Vec<(u64, f64)>,
    ) -> Result<(), StoreError> {
        if lo > self.max_ts() || hi < self.min_ts() {
            return Ok(());
        }
        let first = self.block_index.partition_point(|&(_, max)| max < lo);
        let last = self.block_index.partition_point(|&(min, _)| min <= hi);
        for k in first..last {
            let prev = if k == 0 { 0 } else { self.block_index[k - 1].1 };
            let rows = self.ts.decode_block(k, prev)?;
            stats.blocks_decoded += 1;
            let base_row = k * BLOCK_ROWS;
            for (i, &t) in rows.iter().enumerate() {
                if t >= lo && t <= hi {
                    out.push((t, self.values[base_row + i]));
                }
            }
        }
        Ok(())
    }

    /// Full structural check: the column decodes, is sorted, and agrees
    /// with the block index. Used on load and in tests.
    pub(crate) fn validate(&self) -> Result<(), StoreError> {
        let ts = crate::compression::decompress_column(&self.ts)?;
        if ts.len() != self.row_count || self.values.len() != self.row_count {
            return Err(StoreError::Corrupt("row count disagrees with columns".into()));
        }
        if !ts.windows(2).all(|w| w[0] <= w[1]) {
            return Err(StoreError::Corrupt("timestamp column is not sorted".into()));
        }
        let want: Vec<(u64, u64)> =
            ts.chunks(BLOCK_ROWS).map(|c| (c[0], *c.last().unwrap())).collect();
        if want != self.block_index {
            return Err(StoreError::Corrupt("block index disagrees with column".into()));
        }
        Ok(())
    }

    /// Segment file layout: magic `ITSK`, format version (2 bytes LE),
    /// format tag (1 byte), row count (8 bytes LE), the block index as
    /// `(min, max)` little-endian pairs, the compressed timestamp column in
    /// its own framing, then the raw values as IEEE-754 little-endian.
    pub(crate) fn write_to(&self, w: &mut impl Write, format_tag: u8) -> std::io::Result<()> {
        w.write_all(SEG_MAGIC)?;
        w.write_all(&SEG_VERSION.to_le_bytes())?;
        w.write_all(&[format_tag])?;
        w.write_all(&(self.row_count as u64).to_le_bytes())?;
        for &(min, max) in &self.block_index {
            w.write_all(&min.to_le_bytes())?;
            w.write_all(&max.to_le_bytes())?;
        }
        w.write_all(&self.ts.to_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Parses a segment file; returns the segment and its format tag.
    pub(crate) fn read_from(bytes: &[u8], id: u64) -> Result<(Segment, u8), StoreError> {
        let corrupt = |msg: &str| StoreError::Corrupt(msg.to_string());
        if bytes.len() < 15 {
            return Err(corrupt("segment header truncated"));
        }
        if &bytes[0..4] != SEG_MAGIC {
            return Err(corrupt("bad segment magic"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != SEG_VERSION {
            return Err(corrupt("unsupported segment version"));
        }
        let format_tag = bytes[6];
        let row_count = u64::from_le_bytes(bytes[7..15].try_into().unwrap()) as usize;
        if row_count == 0 {
            return Err(corrupt("segment claims zero rows"));
        }
        let n_blocks = row_count.div_ceil(BLOCK_ROWS);
        let mut pos = 15usize;
        if bytes.len() < pos + n_blocks * 16 {
            return Err(corrupt("block index truncated"));
        }
        let mut block_index = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let min = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            let max = u64::from_le_bytes(bytes[pos + 8..pos + 16].try_into().unwrap());
            block_index.push((min, max));
            pos += 16;
        }
        let (ts, used) = CompressedColumn::from_bytes(&bytes[pos..])?;
        pos += used;
        if ts.total_count() as usize != row_count {
            return Err(corrupt("column row count disagrees with header"));
        }
        if bytes.len() != pos + row_count * 8 {
            return Err(corrupt("value column length mismatch"));
        }
        let mut values = Vec::with_capacity(row_count);
        for i in 0..row_count {
            let off = pos + i * 8;
            values.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        }
        let seg = Segment { id, ts, values, block_index, row_count };
        seg.validate()?;
        Ok((seg, format_tag))
    }
}
