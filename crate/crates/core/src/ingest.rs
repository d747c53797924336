//! Batched ingestion in front of a [`Table`].
//!
//! Appending rows one at a time pays the full per-write cost (segment
//! build, compression, file creation) for every record. [`BatchBuffer`]
//! amortizes that cost: records accumulate in memory and flush as one
//! sorted batch when the buffer fills or on demand. Delivery is
//! at-least-once: a failed flush keeps the buffered records so the caller
//! can retry, and the store never deduplicates.

use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::codec::{CodecError, TsFormat};
use crate::store::{StoreError, Table};

/// One ingest row: an integer timestamp in the table's format plus a
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub ts: u64,
    pub value: f64,
}

impl Record {
    pub fn new(ts: u64, value: f64) -> Record {
        Record { ts, value }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("batch capacity must be at least 1")]
    ZeroCapacity,
    #[error("buffer format {buffer} does not match table format {table}")]
    FormatMismatch { buffer: &'static str, table: &'static str },
    #[error("invalid timestamp {ts}: {source}")]
    InvalidTimestamp { ts: u64, source: CodecError },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("record {index}: {source}")]
    AtRecord { index: u64, source: Box<IngestError> },
}

/// What one flush (or one whole stream) accomplished.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlushReport {
    pub records_flushed: u64,
    pub batches: u64,
    pub segments_created: u64,
    pub wall_time: Duration,
}

impl FlushReport {
    fn absorb(&mut self, other: FlushReport) {
        self.records_flushed += other.records_flushed;
        self.batches += other.batches;
        self.segments_created += other.segments_created;
        self.wall_time += other.wall_time;
    }
}

/// Accumulates records and writes them to the table in batches.
pub struct BatchBuffer {
    table: Arc<Table>,
    capacity: usize,
    sort_on_flush: bool,
    pending: Vec<Record>,
}

impl BatchBuffer {
    /// `capacity` is the flush threshold in records. With `sort_on_flush`
    /// each batch is stable-sorted by timestamp before the write, letting
    /// mildly out-of-order sources ingest without rejection as long as the
    /// disorder stays within one batch.
    pub fn new(
        table: Arc<Table>,
        format: TsFormat,
        capacity: usize,
        sort_on_flush: bool,
    ) -> Result<BatchBuffer, IngestError> {
        if capacity == 0 {
            return Err(IngestError::ZeroCapacity);
        }
        if table.format() != format {
            return Err(IngestError::FormatMismatch {
                buffer: format.name(),
                table: table.format().name(),
            });
        }
        Ok(BatchBuffer { table, capacity, sort_on_flush, pending: Vec::with_capacity(capacity) })
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Validates and stages one record, flushing if the buffer fills.
    /// On a validation error the buffer is unchanged.
    pub fn append(&mut self, record: Record) -> Result<Option<FlushReport>, IngestError> {
        self.table
            .format()
            .validate(record.ts)
            .map_err(|source| IngestError::InvalidTimestamp { ts: record.ts, source })?;
        self.pending.push(record);
        if self.pending.len() >= self.capacity {
            return self.flush().map(Some);
        }
        Ok(None)
    }

    /// Writes everything pending as one batch. An empty buffer reports
    /// zeroes without touching the store. If the write fails, the records
    /// stay buffered.
    pub fn flush(&mut self) -> Result<FlushReport, IngestError> {
        if self.pending.is_empty() {
            return Ok(FlushReport::default());
        }
        if self.sort_on_flush {
            self.pending.sort_by_key(|r| r.ts);
        }
        let batch: Vec<(u64, f64)> = self.pending.iter().map(|r| (r.ts, r.value)).collect();
        let start = Instant::now();
        let ids = self.table.write_batch(&batch)?;
        let report = FlushReport {
            records_flushed: batch.len() as u64,
            batches: 1,
            segments_created: ids.len() as u64,
            wall_time: start.elapsed(),
        };
        self.pending.clear();
        Ok(report)
    }
}

/// Runs a whole record stream through a [`BatchBuffer`] and returns the
/// combined report. Errors carry the zero-based index of the offending
/// record.
pub fn ingest_stream<I>(
    records: I,
    capacity: usize,
    sort_on_flush: bool,
    table: &Arc<Table>,
) -> Result<FlushReport, IngestError>
where
    I: IntoIterator<Item = Record>,
{
    let mut buffer = BatchBuffer::new(Arc::clone(table), table.format(), capacity, sort_on_flush)?;
    let mut total = FlushReport::default();
    for (index, record) in records.into_iter().enumerate() {
        match buffer.append(record) {
            Ok(Some(report)) => total.absorb(report),
            Ok(None) => {}
            Err(source) => {
                return Err(IngestError::AtRecord { index: index as u64, source: Box::new(source) })
            }
        }
    }
    total.absorb(buffer.flush()?);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Arc<Table> {
        Arc::new(Table::in_memory(TsFormat::Sec))
    }

    fn seconds(n: usize) -> Vec<Record> {
        // One record per second from midnight; n must stay below 60 so no
        // field carries are involved.
        (0..n as u64).map(|i| Record::new(20230101000000 + i, i as f64)).collect()
    }

    #[test]
    fn zero_capacity_is_an_error() {
        assert!(matches!(
            BatchBuffer::new(table(), TsFormat::Sec, 0, true),
            Err(IngestError::ZeroCapacity)
        ));
    }

    #[test]
    fn format_mismatch_is_caught_at_construction() {
        assert!(matches!(
            BatchBuffer::new(table(), TsFormat::Frac, 10, true),
            Err(IngestError::FormatMismatch { .. })
        ));
    }

    #[test]
    fn buffer_flushes_exactly_at_capacity() {
        let t = table();
        let mut buf = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, true).unwrap();
        for (i, r) in seconds(25).into_iter().enumerate() {
            let flushed = buf.append(r).unwrap();
            // Flushes land after records 10 and 20 (indices 9 and 19).
            assert_eq!(flushed.is_some(), i % 10 == 9);
        }
        assert_eq!(buf.pending(), 5);
        let last = buf.flush().unwrap();
        assert_eq!(last.records_flushed, 5);
        assert_eq!(t.row_count(), 25);
    }

    #[test]
    fn batch_counts_match_capacity_arithmetic() {
        let t = table();
        let report = ingest_stream(seconds(50), 5, true, &t).unwrap();
        assert_eq!(report.records_flushed, 50);
        assert_eq!(report.batches, 10);
        let t = table();
        let report = ingest_stream(seconds(51), 5, true, &t).unwrap();
        assert_eq!(report.batches, 11);
        assert_eq!(t.row_count(), 51);
    }

    #[test]
    fn invalid_record_leaves_buffer_untouched() {
        let t = table();
        let mut buf = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, true).unwrap();
        buf.append(Record::new(20230101000000, 1.0)).unwrap();
        let err = buf.append(Record::new(20230101006100, 2.0)).unwrap_err();
        assert!(matches!(err, IngestError::InvalidTimestamp { ts: 20230101006100, .. }));
        assert_eq!(buf.pending(), 1);
        buf.flush().unwrap();
        assert_eq!(t.row_count(), 1);
    }

    #[test]
    fn stream_error_reports_record_index() {
        let t = table();
        let mut records = seconds(7);
        records[5].ts = 1;
        let err = ingest_stream(records, 3, true, &t).unwrap_err();
        match err {
            IngestError::AtRecord { index, source } => {
                assert_eq!(index, 5);
                assert!(matches!(*source, IngestError::InvalidTimestamp { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Records 0..=2 flushed as a full batch before the bad record.
        assert_eq!(t.row_count(), 3);
    }

    #[test]
    fn sort_on_flush_is_stable_for_equal_timestamps() {
        let t = table();
        let mut buf = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, true).unwrap();
        buf.append(Record::new(20230101000005, 1.0)).unwrap();
        buf.append(Record::new(20230101000001, 2.0)).unwrap();
        buf.append(Record::new(20230101000005, 3.0)).unwrap();
        buf.flush().unwrap();
        let rows = t.range_query(20230101000000, 20230101235959).unwrap();
        assert_eq!(rows, vec![
            (20230101000001, 2.0),
            (20230101000005, 1.0),
            (20230101000005, 3.0)
        ]);
    }

    #[test]
    fn unsorted_without_sorting_fails_and_retains() {
        let t = table();
        let mut buf = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, false).unwrap();
        buf.append(Record::new(20230101000005, 1.0)).unwrap();
        buf.append(Record::new(20230101000001, 2.0)).unwrap();
        let err = buf.flush().unwrap_err();
        assert!(matches!(err, IngestError::Store(StoreError::UnsortedBatch(_))));
        assert_eq!(buf.pending(), 2);
        assert_eq!(t.row_count(), 0);
        // The same buffer succeeds once the caller opts into sorting by
        // draining through a fresh sorted flush path; here we just verify
        // retry-after-fix semantics by flushing a corrected copy.
        let mut sorted = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, true).unwrap();
        sorted.append(Record::new(20230101000005, 1.0)).unwrap();
        sorted.append(Record::new(20230101000001, 2.0)).unwrap();
        sorted.flush().unwrap();
        assert_eq!(t.row_count(), 2);
    }

    #[test]
    fn empty_flush_reports_zeroes() {
        let t = table();
        let mut buf = BatchBuffer::new(Arc::clone(&t), TsFormat::Sec, 10, true).unwrap();
        let report = buf.flush().unwrap();
        assert_eq!(report, FlushReport::default());
    }

    #[test]
    fn conservation_across_batch_sizes() {
        for cap in [1usize, 7, 50, 1000] {
            let t = table();
            let report = ingest_stream(seconds(50), cap, true, &t).unwrap();
            assert_eq!(report.records_flushed, 50);
            assert_eq!(t.row_count(), 50);
            let rows = t.range_query(20230101000000, 20230101235959).unwrap();
            let sum: f64 = rows.iter().map(|r| r.1).sum();
            assert_eq!(sum, (0..50).sum::<usize>() as f64);
        }
    }

    #[test]
    fn same_input_same_table_contents() {
        let a = table();
        let b = table();
        ingest_stream(seconds(40), 7, true, &a).unwrap();
        ingest_stream(seconds(40), 13, true, &b).unwrap();
        let qa = a.range_query(20230101000000, 20230101235959).unwrap();
        let qb = b.range_query(20230101000000, 20230101235959).unwrap();
        assert_eq!(qa, qb);
    }
}
