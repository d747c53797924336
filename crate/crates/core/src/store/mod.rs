//! Day-partitioned columnar storage for integer-keyed time series.
//!
//! A [`Table`] maps day keys (`YYYYMMDD`) to partitions; each partition
//! holds immutable sorted [`Segment`]s created by batch writes. Because
//! timestamps are decimal-positional integers, the partition key of a row
//! is a single integer division, and a BETWEEN-style range query prunes
//! first by partition key, then by each segment's per-128-row min/max
//! index, and only then decodes blocks.
//!
//! Writers are serialized per table; any number of readers may run
//! concurrently and see the segment set that existed when their query
//! started.

mod segment;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use thiserror::Error;

pub use segment::Segment;

use crate::codec::{CodecError, Ts32, TruncUnit, TsFormat};
use crate::compression::CompressionError;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("batch is not sorted by timestamp at index {0}")]
    UnsortedBatch(usize),
    #[error("timestamp {ts} is not a valid {format} encoding")]
    FormatMismatch { ts: u64, format: &'static str },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("table data corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

const META_FILE: &str = "table.meta";

fn format_tag(f: TsFormat) -> u8 {
    match f {
        TsFormat::Sec => 1,
        TsFormat::Frac => 2,
    }
}

fn tag_format(tag: u8) -> Result<TsFormat, StoreError> {
    match tag {
        1 => Ok(TsFormat::Sec),
        2 => Ok(TsFormat::Frac),
        other => Err(StoreError::Corrupt(format!("unknown format tag {}", other))),
    }
}

#[derive(Debug)]
struct Partition {
    segments: Vec<Arc<Segment>>,
    next_file_no: u64,
}

/// Counters describing how much work one query actually did.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct QueryStats {
    /// Partitions whose segment lists were consulted.
    pub partitions_opened: usize,
    /// Segments whose block index was consulted.
    pub segments_scanned: usize,
    /// Blocks actually bit-unpacked.
    pub blocks_decoded: usize,
}

/// Time unit for [`Table::aggregate_bins`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinUnit {
    Hour,
    Day,
    Month,
}

impl BinUnit {
    pub fn to_trunc(self) -> TruncUnit {
        match self {
            BinUnit::Hour => TruncUnit::Hour,
            BinUnit::Day => TruncUnit::Day,
            BinUnit::Month => TruncUnit::Month,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinUnit::Hour => "hour",
            BinUnit::Day => "day",
            BinUnit::Month => "month",
        }
    }
}

/// One aggregation bucket. The label is the truncated timestamp: the bin's
/// lower bound in the table format, except month bins which use the
/// 6-digit `YYYYMM` form.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAggregate {
    pub bin_label: u64,
    pub count: u64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl BinAggregate {
    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Storage accounting for one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    pub key: u32,
    pub rows: u64,
    pub segments: usize,
    pub ts_compressed_bytes: u64,
    pub value_bytes: u64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub partitions: Vec<PartitionStats>,
    pub total_rows: u64,
    pub total_segments: usize,
    pub total_ts_compressed_bytes: u64,
    pub total_value_bytes: u64,
    pub total_compression_ratio: f64,
}

/// A day-partitioned table of `(timestamp, f64)` rows.
pub struct Table {
    format: TsFormat,
    dir: Option<PathBuf>,
    inner: RwLock<BTreeMap<u32, Partition>>,
    next_segment_id: AtomicU64,
}

impl Table {
    /// A table that lives only in memory.
    pub fn in_memory(format: TsFormat) -> Table {
        Table {
            format,
            dir: None,
            inner: RwLock::new(BTreeMap::new()),
            next_segment_id: AtomicU64::new(0),
        }
    }

    /// Initializes a new on-disk table directory.
    pub fn create(dir: &Path, format: TsFormat) -> Result<Table, StoreError> {
        std::fs::create_dir_all(dir)?;
        let meta = dir.join(META_FILE);
        if meta.exists() {
            return Err(StoreError::Corrupt(format!(
                "{} already contains a table",
                dir.display()
            )));
        }
        std::fs::write(&meta, format!("{}\n", format.name()))?;
        Ok(Table {
            format,
            dir: Some(dir.to_path_buf()),
            inner: RwLock::new(BTreeMap::new()),
            next_segment_id: AtomicU64::new(0),
        })
    }

    /// Loads an existing on-disk table, validating every segment file.
    pub fn open(dir: &Path) -> Result<Table, StoreError> {
        let meta = std::fs::read_to_string(dir.join(META_FILE))?;
        let format = match meta.trim() {
            "ts64sec" => TsFormat::Sec,
            "ts64frac" => TsFormat::Frac,
            other => {
                return Err(StoreError::Corrupt(format!("unknown table format '{}'", other)))
            }
        };
        let mut partitions = BTreeMap::new();
        let mut next_id = 0u64;
        let mut day_dirs: Vec<(u32, PathBuf)> = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            let key: u32 = name.parse().map_err(|_| {
                StoreError::Corrupt(format!("partition directory '{}' is not a day key", name))
            })?;
            Ts32::new(key).map_err(|_| {
                StoreError::Corrupt(format!("partition directory '{}' is not a valid date", name))
            })?;
            day_dirs.push((key, entry.path()));
        }
        day_dirs.sort();
        for (key, path) in day_dirs {
            let mut seg_files: Vec<(u64, PathBuf)> = Vec::new();
            for entry in std::fs::read_dir(&path)? {
                let entry = entry?;
                let name = entry.file_name().to_string_lossy().into_owned();
                if let Some(stem) = name.strip_suffix(".seg") {
                    let no: u64 = stem.parse().map_err(|_| {
                        StoreError::Corrupt(format!("segment file '{}' is misnamed", name))
                    })?;
                    seg_files.push((no, entry.path()));
                }
            }
            seg_files.sort();
            let mut segments = Vec::with_capacity(seg_files.len());
            let mut next_file_no = 0;
            for (no, seg_path) in seg_files {
                let bytes = std::fs::read(&seg_path)?;
                let (seg, tag) = Segment::read_from(&bytes, next_id)?;
                if tag_format(tag)? != format {
                    return Err(StoreError::Corrupt(format!(
                        "{} carries a different format than the table",
                        seg_path.display()
                    )));
                }
                if format.day_key(seg.min_ts()) != key || format.day_key(seg.max_ts()) != key {
                    return Err(StoreError::Corrupt(format!(
                        "{} holds rows outside partition {}",
                        seg_path.display(),
                        key
                    )));
                }
                next_id += 1;
                next_file_no = next_file_no.max(no + 1);
                segments.push(Arc::new(seg));
            }
            partitions.insert(key, Partition { segments, next_file_no });
        }
        Ok(Table {
            format,
            dir: Some(dir.to_path_buf()),
            inner: RwLock::new(partitions),
            next_segment_id: AtomicU64::new(next_id),
        })
    }

    /// Opens `dir` if it already holds a table (whose format must match),
    /// otherwise creates one.
    pub fn open_or_create(dir: &Path, format: TsFormat) -> Result<Table, StoreError> {
        if dir.join(META_FILE).exists() {
            let t = Table::open(dir)?;
            if t.format != format {
                return Err(StoreError::Corrupt(format!(
                    "table at {} is {}, not {}",
                    dir.display(),
                    t.format.name(),
                    format.name()
                )));
            }
            Ok(t)
        } else {
            Table::create(dir, format)
        }
    }

    pub fn format(&self) -> TsFormat {
        self.format
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn partition_keys(&self) -> Vec<u32> {
        self.inner.read().unwrap().keys().copied().collect()
    }

    pub fn row_count(&self) -> u64 {
        self.inner
            .read()
            .unwrap()
            .values()
            .flat_map(|p| &p.segments)
            .map(|s| s.row_count() as u64)
            .sum()
    }

    /// Writes one sorted batch, creating one new segment per touched day.
    /// Returns the new segment ids.
    ///
    /// The write is applied partition by partition; if persisting a later
    /// segment fails, earlier ones remain committed, so a retried batch can
    /// duplicate rows. Nothing is deduplicated.
    pub fn write_batch(&self, batch: &[(u64, f64)]) -> Result<Vec<u64>, StoreError> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        for (i, w) in batch.windows(2).enumerate() {
            if w[0].0 > w[1].0 {
                return Err(StoreError::UnsortedBatch(i + 1));
            }
        }
        for &(ts, _) in batch {
            self.format
                .validate(ts)
                .map_err(|_| StoreError::FormatMismatch { ts, format: self.format.name() })?;
        }

        // Day runs are contiguous because the batch is sorted.
        let mut runs: Vec<(u32, usize, usize)> = Vec::new();
        let mut start = 0usize;
        let mut day = self.format.day_key(batch[0].0);
        for (i, &(ts, _)) in batch.iter().enumerate().skip(1) {
            let d = self.format.day_key(ts);
            if d != day {
                runs.push((day, start, i));
                start = i;
                day = d;
            }
        }
        runs.push((day, start, batch.len()));

        let mut built: Vec<(u32, Arc<Segment>)> = Vec::with_capacity(runs.len());
        let mut ids = Vec::with_capacity(runs.len());
        for (day, s, e) in runs {
            let id = self.next_segment_id.fetch_add(1, Ordering::Relaxed);
            let ts: Vec<u64> = batch[s..e].iter().map(|r| r.0).collect();
            let values: Vec<f64> = batch[s..e].iter().map(|r| r.1).collect();
            built.push((day, Arc::new(Segment::build(id, &ts, &values)?)));
            ids.push(id);
        }

        let mut inner = self.inner.write().unwrap();
        for (day, seg) in built {
            let part = inner
                .entry(day)
                .or_insert_with(|| Partition { segments: Vec::new(), next_file_no: 0 });
            if let Some(dir) = &self.dir {
                let pdir = dir.join(day.to_string());
                std::fs::create_dir_all(&pdir)?;
                let path = pdir.join(format!("{:06}.seg", part.next_file_no));
                let mut buf = Vec::new();
                seg.write_to(&mut buf, format_tag(self.format))?;
                std::fs::write(&path, &buf)?;
                part.next_file_no += 1;
            }
            part.segments.push(seg);
        }
        Ok(ids)
    }

    fn check_bounds(&self, lo: u64, hi: u64) -> Result<(), StoreError> {
        if lo > hi {
            return Err(StoreError::InvalidRange(format!("lo {} exceeds hi {}", lo, hi)));
        }
        for b in [lo, hi] {
            self.format.validate(b).map_err(|_| {
                StoreError::InvalidRange(format!(
                    "{} is not a valid {} bound",
                    b,
                    self.format.name()
                ))
            })?;
        }
        Ok(())
    }

    /// Rows with `lo <= ts <= hi` (both inclusive), ordered by timestamp.
    pub fn range_query(&self, lo: u64, hi: u64) -> Result<Vec<(u64, f64)>, StoreError> {
        self.range_query_with_stats(lo, hi).map(|(rows, _)| rows)
    }

    pub fn range_query_with_stats(
        &self,
        lo: u64,
        hi: u64,
    ) -> Result<(Vec<(u64, f64)>, QueryStats), StoreError> {
        self.check_bounds(lo, hi)?;
        let day_lo = self.format.day_key(lo);
        let day_hi = self.format.day_key(hi);

        // Snapshot the candidate segments so readers never hold the lock
        // while decoding.
        let (candidates, partitions_opened) = {
            let inner = self.inner.read().unwrap();
            let mut segs: Vec<Arc<Segment>> = Vec::new();
            let mut parts = 0usize;
            for (_, p) in inner.range(day_lo..=day_hi) {
                parts += 1;
                segs.extend(p.segments.iter().cloned());
            }
            (segs, parts)
        };
        let mut stats = QueryStats {
            partitions_opened,
            segments_scanned: candidates.len(),
            blocks_decoded: 0,
        };

        let scan = |seg: &Arc<Segment>| -> Result<(Vec<(u64, f64)>, usize), StoreError> {
            let mut local = QueryStats::default();
            let mut rows = Vec::new();
            seg.scan_range(lo, hi, &mut local, &mut rows)?;
            Ok((rows, local.blocks_decoded))
        };

        #[cfg(feature = "parallel")]
        let pieces: Vec<(Vec<(u64, f64)>, usize)> = {
            use rayon::prelude::*;
            candidates.par_iter().map(scan).collect::<Result<_, _>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let pieces: Vec<(Vec<(u64, f64)>, usize)> =
            candidates.iter().map(scan).collect::<Result<_, _>>()?;

        let mut rows = Vec::with_capacity(pieces.iter().map(|(r, _)| r.len()).sum());
        for (piece, blocks) in pieces {
            stats.blocks_decoded += blocks;
            rows.extend(piece);
        }
        // Segments created out of timestamp order can interleave; restore
        // global order with a stable sort only when needed.
        if rows.windows(2).any(|w| w[0].0 > w[1].0) {
            rows.sort_by_key(|r| r.0);
        }
        Ok((rows, stats))
    }

    /// Groups the rows of `[lo, hi]` into truncation bins and accumulates
    /// count, sum, min, and max per bin. Bins arrive in ascending label
    /// order; empty bins are omitted.
    pub fn aggregate_bins(
        &self,
        lo: u64,
        hi: u64,
        unit: BinUnit,
    ) -> Result<Vec<BinAggregate>, StoreError> {
        let (rows, _) = self.range_query_with_stats(lo, hi)?;
        let mut bins: BTreeMap<u64, BinAggregate> = BTreeMap::new();
        for (ts, v) in rows {
            let label = self.format.truncate(ts, unit.to_trunc());
            bins.entry(label)
                .and_modify(|b| {
                    b.count += 1;
                    b.sum += v;
                    b.min = b.min.min(v);
                    b.max = b.max.max(v);
                })
                .or_insert(BinAggregate { bin_label: label, count: 1, sum: v, min: v, max: v });
        }
        Ok(bins.into_values().collect())
    }

    /// Atomically removes every partition with a day key strictly before
    /// `cutoff`. Returns how many partitions were dropped.
    pub fn drop_partitions_before(&self, cutoff: Ts32) -> Result<usize, StoreError> {
        let mut inner = self.inner.write().unwrap();
        let keep = inner.split_off(&cutoff.value());
        let dropped = std::mem::replace(&mut *inner, keep);
        if let Some(dir) = &self.dir {
            for key in dropped.keys() {
                let pdir = dir.join(key.to_string());
                if pdir.exists() {
                    std::fs::remove_dir_all(&pdir)?;
                }
            }
        }
        Ok(dropped.len())
    }

    pub fn stats(&self) -> StorageReport {
        let inner = self.inner.read().unwrap();
        let mut partitions = Vec::with_capacity(inner.len());
        let (mut rows, mut segs, mut ts_b, mut val_b) = (0u64, 0usize, 0u64, 0u64);
        for (&key, p) in inner.iter() {
            let pr: u64 = p.segments.iter().map(|s| s.row_count() as u64).sum();
            let pt: u64 = p.segments.iter().map(|s| s.ts_bytes()).sum();
            let pv: u64 = p.segments.iter().map(|s| s.value_bytes()).sum();
            partitions.push(PartitionStats {
                key,
                rows: pr,
                segments: p.segments.len(),
                ts_compressed_bytes: pt,
                value_bytes: pv,
                compression_ratio: if pt > 0 { (pr * 8) as f64 / pt as f64 } else { 0.0 },
            });
            rows += pr;
            segs += p.segments.len();
            ts_b += pt;
            val_b += pv;
        }
        StorageReport {
            partitions,
            total_rows: rows,
            total_segments: segs,
            total_ts_compressed_bytes: ts_b,
            total_value_bytes: val_b,
            total_compression_ratio: if ts_b > 0 { (rows * 8) as f64 / ts_b as f64 } else { 0.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(day: u64, start_hms: u64, n: usize, step: u64) -> Vec<(u64, f64)> {
        let dt0 = crate::codec::Ts64Sec::new(day * 1_000_000 + start_hms).unwrap().to_datetime();
        (0..n as u64)
            .map(|i| {
                let dt = crate::civil::add_seconds(&dt0, i * step).unwrap();
                (crate::codec::Ts64Sec::from_datetime(&dt).unwrap().value(), i as f64)
            })
            .collect()
    }

    #[test]
    fn batch_splits_by_day_into_segments() {
        let t = Table::in_memory(TsFormat::Sec);
        let mut batch = series(20230101, 120000, 10, 1);
        batch.extend(series(20230102, 90000, 5, 1));
        let ids = t.write_batch(&batch).unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(t.partition_keys(), vec![20230101, 20230102]);
        assert_eq!(t.row_count(), 15);
    }

    #[test]
    fn unsorted_batch_is_rejected_whole() {
        let t = Table::in_memory(TsFormat::Sec);
        let batch = vec![(20230101120005, 1.0), (20230101120001, 2.0)];
        assert!(matches!(t.write_batch(&batch), Err(StoreError::UnsortedBatch(1))));
        assert_eq!(t.row_count(), 0);
    }

    #[test]
    fn invalid_encoding_is_rejected() {
        let t = Table::in_memory(TsFormat::Sec);
        let batch = vec![(20230101126100, 1.0)];
        assert!(matches!(t.write_batch(&batch), Err(StoreError::FormatMismatch { .. })));
        let t = Table::in_memory(TsFormat::Frac);
        assert!(matches!(
            t.write_batch(&[(20230101120000, 1.0)]),
            Err(StoreError::FormatMismatch { .. })
        ));
    }

    #[test]
    fn between_semantics_are_inclusive() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&series(20230101, 120000, 10, 1)).unwrap();
        let rows = t.range_query(20230101120002, 20230101120004).unwrap();
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![
            20230101120002,
            20230101120003,
            20230101120004
        ]);
    }

    #[test]
    fn point_query_returns_duplicates() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&[(20230101120000, 1.0), (20230101120000, 2.0), (20230101120001, 3.0)])
            .unwrap();
        let rows = t.range_query(20230101120000, 20230101120000).unwrap();
        assert_eq!(rows, vec![(20230101120000, 1.0), (20230101120000, 2.0)]);
    }

    #[test]
    fn disjoint_range_is_empty_not_error() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&series(20230101, 120000, 10, 1)).unwrap();
        assert!(t.range_query(20230301000000, 20230301235959).unwrap().is_empty());
    }

    #[test]
    fn bad_bounds_are_rejected() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&series(20230101, 120000, 10, 1)).unwrap();
        assert!(matches!(
            t.range_query(20230101120005, 20230101120001),
            Err(StoreError::InvalidRange(_))
        ));
        assert!(matches!(
            t.range_query(20230101126100, 20230101126200),
            Err(StoreError::InvalidRange(_))
        ));
    }

    #[test]
    fn results_merge_sorted_across_overlapping_segments() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&[(20230101120000, 1.0), (20230101120004, 2.0)]).unwrap();
        t.write_batch(&[(20230101120002, 3.0), (20230101120006, 4.0)]).unwrap();
        let rows = t.range_query(20230101120000, 20230101120006).unwrap();
        let ts: Vec<u64> = rows.iter().map(|r| r.0).collect();
        assert_eq!(ts, vec![20230101120000, 20230101120002, 20230101120004, 20230101120006]);
    }

    #[test]
    fn hour_bins_accumulate() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&[
            (20230101120000, 2.0),
            (20230101120500, 4.0),
            (20230101133000, 9.0),
        ])
        .unwrap();
        let bins = t.aggregate_bins(20230101000000, 20230101235959, BinUnit::Hour).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].bin_label, 20230101120000);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[0].sum, 6.0);
        assert_eq!(bins[0].mean(), 3.0);
        assert_eq!((bins[0].min, bins[0].max), (2.0, 4.0));
        assert_eq!(bins[1].bin_label, 20230101130000);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[1].sum, 9.0);
    }

    #[test]
    fn month_bins_use_their_own_label_shape() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&[(20230115120000, 1.0), (20230215120000, 2.0)]).unwrap();
        let bins = t.aggregate_bins(20230101000000, 20230228235959, BinUnit::Month).unwrap();
        let labels: Vec<u64> = bins.iter().map(|b| b.bin_label).collect();
        assert_eq!(labels, vec![202301, 202302]);
    }

    #[test]
    fn empty_range_aggregates_to_no_bins() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&series(20230101, 120000, 5, 1)).unwrap();
        let bins = t.aggregate_bins(20230601000000, 20230601235959, BinUnit::Day).unwrap();
        assert!(bins.is_empty());
    }

    #[test]
    fn drop_before_is_strict() {
        let t = Table::in_memory(TsFormat::Sec);
        for day in [20230101u64, 20230102, 20230103] {
            t.write_batch(&series(day, 120000, 3, 1)).unwrap();
        }
        let dropped = t.drop_partitions_before(Ts32::new(20230102).unwrap()).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(t.partition_keys(), vec![20230102, 20230103]);
        // The cutoff day itself survives.
        assert_eq!(t.row_count(), 6);
    }

    #[test]
    fn stats_track_exact_byte_sizes() {
        let t = Table::in_memory(TsFormat::Sec);
        t.write_batch(&series(20230101, 120000, 50, 1)).unwrap();
        let report = t.stats();
        assert_eq!(report.total_rows, 50);
        assert_eq!(report.total_segments, 1);
        assert_eq!(report.total_value_bytes, 400);
        let expected_ts = {
            let ts: Vec<u64> = series(20230101, 120000, 50, 1).iter().map(|r| r.0).collect();
            crate::compression::compress_column(&ts).unwrap().serialized_size() as u64
        };
        assert_eq!(report.total_ts_compressed_bytes, expected_ts);
        assert_eq!(report.partitions[0].rows, 50);
    }

    #[test]
    fn empty_table_stats_are_zero() {
        let t = Table::in_memory(TsFormat::Sec);
        let report = t.stats();
        assert_eq!(report.total_rows, 0);
        assert_eq!(report.total_segments, 0);
        assert_eq!(report.total_compression_ratio, 0.0);
        assert!(report.partitions.is_empty());
    }

    #[test]
    fn day_query_opens_one_partition_of_many() {
        let t = Table::in_memory(TsFormat::Sec);
        for d in 1..=28u64 {
            t.write_batch(&series(20230200 + d, 120000, 60, 1)).unwrap();
        }
        let (rows, stats) = t
            .range_query_with_stats(20230210000000, 20230210235959)
            .unwrap();
        assert_eq!(rows.len(), 60);
        assert_eq!(stats.partitions_opened, 1);
        assert_eq!(stats.segments_scanned, 1);
        assert_eq!(stats.blocks_decoded, 1);
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t");
        let t = Table::create(&path, TsFormat::Sec).unwrap();
        let mut batch = series(20230101, 120000, 300, 1);
        batch.extend(series(20230102, 10000, 40, 1));
        t.write_batch(&batch).unwrap();
        t.write_batch(&series(20230102, 110000, 7, 1)).unwrap();

        // Segment files carry the documented magic.
        let seg_path = path.join("20230101").join("000000.seg");
        let bytes = std::fs::read(&seg_path).unwrap();
        assert_eq!(&bytes[0..4], b"ITSK");
        assert_eq!(u16::from_le_bytes(bytes[4..6].try_into().unwrap()), 1);
        assert_eq!(bytes[6], 1);

        let reopened = Table::open(&path).unwrap();
        assert_eq!(reopened.row_count(), 347);
        assert_eq!(reopened.partition_keys(), vec![20230101, 20230102]);
        let a = t.range_query(20230101000000, 20230102235959).unwrap();
        let b = reopened.range_query(20230101000000, 20230102235959).unwrap();
        assert_eq!(a, b);

        let dropped = reopened.drop_partitions_before(Ts32::new(20230102).unwrap()).unwrap();
        assert_eq!(dropped, 1);
        assert!(!path.join("20230101").exists());
        assert!(path.join("20230102").exists());
    }

    #[test]
    fn open_rejects_foreign_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t");
        let t = Table::create(&path, TsFormat::Sec).unwrap();
        t.write_batch(&series(20230101, 120000, 10, 1)).unwrap();
        let seg = path.join("20230101").join("000000.seg");
        let mut bytes = std::fs::read(&seg).unwrap();
        bytes[0] = b'X';
        std::fs::write(&seg, &bytes).unwrap();
        assert!(matches!(Table::open(&path), Err(StoreError::Corrupt(_))));
    }

    #[test]
    fn create_refuses_to_clobber() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t");
        Table::create(&path, TsFormat::Sec).unwrap();
        assert!(Table::create(&path, TsFormat::Sec).is_err());
        assert!(Table::open_or_create(&path, TsFormat::Sec).is_ok());
        assert!(Table::open_or_create(&path, TsFormat::Frac).is_err());
    }

    #[test]
    fn readers_see_consistent_snapshots_under_writes() {
        use std::sync::atomic::{AtomicBool, Ordering};
        let t = Arc::new(Table::in_memory(TsFormat::Sec));
        let stop = Arc::new(AtomicBool::new(false));
        let writer = {
            let t = Arc::clone(&t);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for i in 0..200u64 {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let base = 20230101000000 + (i / 50) * 10_000 + (i % 50) * 100;
                    t.write_batch(&[(base, i as f64), (base + 1, i as f64)]).unwrap();
                }
            })
        };
        let mut last = 0usize;
        for _ in 0..100 {
            let rows = t.range_query(20230101000000, 20230101235959).unwrap();
            // Writes only ever add rows, and each batch lands atomically.
            assert!(rows.len() >= last);
            assert_eq!(rows.len() % 2, 0);
            last = rows.len();
        }
        stop.store(true, Ordering::Relaxed);
        writer.join().unwrap();
    }
}
