//! Embedded time-series toolkit built around integer surrogate keys for time.
//!
//! Instead of a native datetime type, timestamps are plain unsigned integers
//! whose decimal digits spell out the calendar fields (`20231027133455` is
//! 2023-10-27 13:34:55). Integer order agrees with chronological order, so
//! range predicates, binning and pruning reduce to integer arithmetic.
//!
//! The crate is organised as:
//!
//! * [`codec`] - the integer formats themselves and conversions to and from
//!   civil date/time fields.
//! * [`timescale`] - UTC/TAI offset handling driven by a leap-second table.
//! * [`compression`] - delta + zigzag + bit-packed columns for sorted
//!   timestamp runs.
//! * [`ingest`] - batched buffered writes.
//! * [`store`] - day-partitioned, sparse-indexed segment storage with range
//!   queries and bin aggregation.
//! * [`workloads`] - deterministic synthetic data generators and the
//!   ISO-8601 text baseline used for comparisons.
//!
//! With the default `parallel` feature the hot loops (block packing and
//! unpacking, segment scans) run on rayon; without it the same code paths
//! run sequentially.
//!
//! ```
//! use std::sync::Arc;
//! use itsk_core::{ingest_stream, BinUnit, IngestError, Record, Table, TsFormat};
//!
//! fn demo() -> Result<(), IngestError> {
//!     let table = Arc::new(Table::in_memory(TsFormat::Sec));
//!     let rows = (0..60).map(|i| Record::new(20231027133400 + i, i as f64));
//!     ingest_stream(rows, 1000, true, &table)?;
//!
//!     let hit = table.range_query(20231027133410, 20231027133419)?;
//!     assert_eq!(hit.len(), 10);
//!
//!     for bin in table.aggregate_bins(20231027000000, 20231027235959, BinUnit::Hour)? {
//!         println!("{} n={} mean={:.2}", bin.bin_label, bin.count, bin.mean());
//!     }
//!     Ok(())
//! }
//! demo().unwrap();
//! ```

pub mod codec;
mod civil;
pub mod compression;
pub mod ingest;
pub mod store;
pub mod timescale;
pub mod workloads;

pub use codec::{CivilDate, CivilDateTime, CodecError, PackedTs64, Ts32, Ts64Frac, Ts64Sec, TruncUnit, TsFormat};
pub use ingest::{ingest_stream, BatchBuffer, FlushReport, IngestError, Record};
pub use store::{BinAggregate, BinUnit, QueryStats, StorageReport, StoreError, Table};
pub use timescale::{LeapSecondTable, TaiInstant, TimescaleError, UtcInstant};
