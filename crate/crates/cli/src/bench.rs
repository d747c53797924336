//! The benchmark matrix: scenarios × batch sizes × arms.
//!
//! The `integer` arm ingests into an in-memory table (delta-compressed
//! timestamp column, day partitions) and queries through the block-
//! skipping scan. The `baseline` arm stores the same instants as
//! fixed-width ISO-8601 text and answers queries by linear scan with
//! string comparison. Both arms see identical record streams, identical
//! batch boundaries, and identical query ranges; every reported number is
//! measured in the same process run.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};

use itsk_core::ingest::ingest_stream;
use itsk_core::workloads::{
    baseline_range_scan, generate, to_baseline, BaselineRecord, WorkloadKind, WorkloadSpec,
};
use itsk_core::{CivilDateTime, Record, Table, Ts64Sec, TsFormat};

use crate::{with_stdout, CliError};

/// Column order is a stable contract; downstream scripts parse it.
pub const CSV_HEADER: &str = "scenario,arm,batch_size,records,ingest_ms_median,throughput_rps,\
ts_bytes,value_bytes,total_bytes,query_ms_median,agg_ms_median";

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum ScenarioArg {
    Hft,
    Cdr,
    Iot,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum ArmArg {
    Integer,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OutputFormatArg {
    Text,
    Csv,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Workload scenario to benchmark
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Records per run
    #[arg(long, default_value_t = 100_000)]
    records: usize,
    /// Batch sizes to sweep
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 100, 1000, 10000])]
    batch_sizes: Vec<usize>,
    /// Arms to run
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ArmArg::Integer, ArmArg::Baseline])]
    arms: Vec<ArmArg>,
    #[arg(long, value_enum, default_value_t = OutputFormatArg::Text)]
    format: OutputFormatArg,
    /// Generator seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Unmeasured repetitions before timing starts
    #[arg(long, default_value_t = 3)]
    warmups: usize,
    /// Measured repetitions; the median is reported
    #[arg(long, default_value_t = 5)]
    runs: usize,
}

#[derive(Debug, Clone)]
struct BenchRow {
    scenario: &'static str,
    arm: &'static str,
    batch_size: usize,
    records: usize,
    ingest_ms_median: f64,
    throughput_rps: f64,
    ts_bytes: u64,
    value_bytes: u64,
    total_bytes: u64,
    query_ms_median: f64,
    agg_ms_median: f64,
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn time_ms<T>(f: impl FnOnce() -> T) -> (f64, T) {
    let start = Instant::now();
    let out = f();
    (start.elapsed().as_secs_f64() * 1e3, out)
}

/// Builds exactly `records` records for the scenario, growing the
/// generation window until the stream is long enough.
pub fn scenario_records(
    scenario: ScenarioArg,
    records: usize,
    seed: u64,
) -> Result<Vec<Record>, CliError> {
    let start = CivilDateTime::new(2023, 10, 1, 0, 0, 0, 0).unwrap();
    let (kind, nominal_rate) = match scenario {
        ScenarioArg::Hft => (WorkloadKind::Hft { events_per_sec: 5_000 }, 5_000u64),
        ScenarioArg::Cdr => (WorkloadKind::Cdr { events_per_sec: 2_000 }, 1_400),
        ScenarioArg::Iot => (WorkloadKind::Iot { devices: 100, cadence_secs: 1 }, 100),
    };
    let mut duration_secs = (records as u64 / nominal_rate).max(1) + 30;
    loop {
        let spec = WorkloadSpec { kind, start, duration_secs, seed };
        let mut stream = generate(&spec).map_err(|e| CliError::Internal(e.to_string()))?;
        if stream.len() >= records {
            stream.truncate(records);
            return Ok(stream);
        }
        duration_secs *= 2;
    }
}

pub fn scenario_name(s: ScenarioArg) -> &'static str {
    match s {
        ScenarioArg::Hft => "hft",
        ScenarioArg::Cdr => "cdr",
        ScenarioArg::Iot => "iot",
    }
}

/// The query window used by both arms: roughly the middle 3% of rows.
fn query_window(records: &[Record]) -> (u64, u64) {
    let n = records.len();
    let lo = records[n * 485 / 1000].ts;
    let hi = records[(n * 515 / 1000).min(n - 1)].ts;
    (lo, hi)
}

fn run_integer_arm(
    scenario: &'static str,
    records: &[Record],
    batch_size: usize,
    warmups: usize,
    runs: usize,
) -> Result<BenchRow, CliError> {
    let ingest_once = || -> Result<(f64, Arc<Table>), CliError> {
        let table = Arc::new(Table::in_memory(TsFormat::Sec));
        let (ms, result) =
            time_ms(|| ingest_stream(records.iter().copied(), batch_size, true, &table));
        result.map_err(|e| CliError::Internal(e.to_string()))?;
        Ok((ms, table))
    };

    for _ in 0..warmups {
        ingest_once()?;
    }
    let mut ingest_samples = Vec::with_capacity(runs);
    let mut table = None;
    for _ in 0..runs {
        let (ms, t) = ingest_once()?;
        ingest_samples.push(ms);
        table = Some(t);
    }
    let table = table.expect("runs >= 1");

    let report = table.stats();
    let (lo, hi) = query_window(records);
    let mut query_samples = Vec::with_capacity(runs);
    let mut agg_samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let (ms, rows) = time_ms(|| table.range_query(lo, hi));
        rows.map_err(|e| CliError::Internal(e.to_string()))?;
        query_samples.push(ms);
        let (ms, bins) = time_ms(|| table.aggregate_bins(lo, hi, itsk_core::BinUnit::Hour));
        bins.map_err(|e| CliError::Internal(e.to_string()))?;
        agg_samples.push(ms);
    }

    let ingest_ms = median(&mut ingest_samples);
    Ok(BenchRow {
        scenario,
        arm: "integer",
        batch_size,
        records: records.len(),
        ingest_ms_median: ingest_ms,
        throughput_rps: records.len() as f64 / (ingest_ms / 1e3),
        ts_bytes: report.total_ts_compressed_bytes,
        value_bytes: report.total_value_bytes,
        total_bytes: report.total_ts_compressed_bytes + report.total_value_bytes,
        query_ms_median: median(&mut query_samples),
        agg_ms_median: median(&mut agg_samples),
    })
}

/// The baseline store is a flat, append-only vector of text records;
/// "ingest" is batch-wise stable sorting and appending, mirroring the
/// integer arm's batching without its encoding machinery.
fn baseline_ingest(baseline: &[BaselineRecord], batch_size: usize) -> Vec<BaselineRecord> {
    let mut store: Vec<BaselineRecord> = Vec::with_capacity(baseline.len());
    for chunk in baseline.chunks(batch_size) {
        let mut batch = chunk.to_vec();
        batch.sort_by(|a, b| a.ts_text.cmp(&b.ts_text));
        store.extend(batch);
    }
    store
}

fn baseline_hour_group_by(store: &[BaselineRecord], lo: &str, hi: &str) -> BTreeMap<String, (u64, f64)> {
    let mut bins: BTreeMap<String, (u64, f64)> = BTreeMap::new();
    for r in store {
        let t = r.ts_text.as_str();
        if t >= lo && t <= hi {
            let e = bins.entry(t[..13].to_string()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += r.value;
        }
    }
    bins
}

fn run_baseline_arm(
    scenario: &'static str,
    records: &[Record],
    batch_size: usize,
    warmups: usize,
    runs: usize,
) -> Result<BenchRow, CliError> {
    let baseline = to_baseline(records);

    for _ in 0..warmups {
        std::hint::black_box(baseline_ingest(&baseline, batch_size));
    }
    let mut ingest_samples = Vec::with_capacity(runs);
    let mut store = Vec::new();
    for _ in 0..runs {
        let (ms, s) = time_ms(|| baseline_ingest(&baseline, batch_size));
        ingest_samples.push(ms);
        store = s;
    }

    // 19 text bytes per timestamp plus the 8-byte value.
    let ts_bytes: u64 = store.iter().map(|r| r.ts_text.len() as u64).sum();
    let value_bytes = store.len() as u64 * 8;

    let (lo, hi) = query_window(records);
    let lo_text = baseline_text(lo);
    let hi_text = baseline_text(hi);
    let mut query_samples = Vec::with_capacity(runs);
    let mut agg_samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let (ms, rows) = time_ms(|| baseline_range_scan(&store, &lo_text, &hi_text));
        rows.map_err(|e| CliError::Internal(e.to_string()))?;
        query_samples.push(ms);
        let (ms, bins) = time_ms(|| baseline_hour_group_by(&store, &lo_text, &hi_text));
        std::hint::black_box(bins);
        agg_samples.push(ms);
    }

    let ingest_ms = median(&mut ingest_samples);
    Ok(BenchRow {
        scenario,
        arm: "baseline",
        batch_size,
        records: records.len(),
        ingest_ms_median: ingest_ms,
        throughput_rps: records.len() as f64 / (ingest_ms / 1e3),
        ts_bytes,
        value_bytes,
        total_bytes: ts_bytes + value_bytes,
        query_ms_median: median(&mut query_samples),
        agg_ms_median: median(&mut agg_samples),
    })
}

fn baseline_text(ts: u64) -> String {
    itsk_core::workloads::format_iso(&Ts64Sec::new(ts).expect("generated ts").to_datetime())
}

fn csv_row(r: &BenchRow) -> String {
    format!(
        "{},{},{},{},{:.3},{:.0},{},{},{},{:.3},{:.3}",
        r.scenario,
        r.arm,
        r.batch_size,
        r.records,
        r.ingest_ms_median,
        r.throughput_rps,
        r.ts_bytes,
        r.value_bytes,
        r.total_bytes,
        r.query_ms_median,
        r.agg_ms_median
    )
}

pub fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.records == 0 {
        return Err(CliError::Usage("--records must be at least 1".into()));
    }
    if args.batch_sizes.is_empty() || args.batch_sizes.contains(&0) {
        return Err(CliError::Usage("--batch-sizes must be positive".into()));
    }
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let scenario = scenario_name(args.scenario);
    let records = scenario_records(args.scenario, args.records, args.seed)?;

    let mut rows: Vec<BenchRow> = Vec::new();
    for &batch_size in &args.batch_sizes {
        for &arm in &args.arms {
            let row = match arm {
                ArmArg::Integer => {
                    run_integer_arm(scenario, &records, batch_size, args.warmups, args.runs)?
                }
                ArmArg::Baseline => {
                    run_baseline_arm(scenario, &records, batch_size, args.warmups, args.runs)?
                }
            };
            rows.push(row);
        }
    }

    match args.format {
        OutputFormatArg::Csv => with_stdout(|o| {
            writeln!(o, "{}", CSV_HEADER)?;
            for r in &rows {
                writeln!(o, "{}", csv_row(r))?;
            }
            Ok(())
        }),
        OutputFormatArg::Text => with_stdout(|o| write_text_report(o, &rows)),
    }
}

fn write_text_report(o: &mut dyn Write, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(
        o,
        "{:<9} {:<9} {:>10} {:>8} {:>11} {:>12} {:>12} {:>12} {:>10} {:>9}",
        "scenario",
        "arm",
        "batch_size",
        "records",
        "ingest_ms",
        "rec/s",
        "ts_bytes",
        "total_bytes",
        "query_ms",
        "agg_ms"
    )?;
    for r in rows {
        writeln!(
            o,
            "{:<9} {:<9} {:>10} {:>8} {:>11.3} {:>12.0} {:>12} {:>12} {:>10.3} {:>9.3}",
            r.scenario,
            r.arm,
            r.batch_size,
            r.records,
            r.ingest_ms_median,
            r.throughput_rps,
            r.ts_bytes,
            r.total_bytes,
            r.query_ms_median,
            r.agg_ms_median
        )?;
    }

    // Arm-vs-arm deltas wherever both arms ran at the same batch size.
    let mut printed_header = false;
    for r in rows.iter().filter(|r| r.arm == "integer") {
        if let Some(b) = rows
            .iter()
            .find(|b| b.arm == "baseline" && b.batch_size == r.batch_size)
        {
            if !printed_header {
                writeln!(o)?;
                writeln!(o, "integer vs baseline:")?;
                printed_header = true;
            }
            let ts_saving = (1.0 - r.ts_bytes as f64 / b.ts_bytes as f64) * 100.0;
            let total_saving = (1.0 - r.total_bytes as f64 / b.total_bytes as f64) * 100.0;
            let speedup = b.query_ms_median / r.query_ms_median;
            writeln!(
                o,
                "  batch {:>6}: ts column {:>5.1}% smaller, total {:>5.1}% smaller, range query {:.2}x",
                r.batch_size, ts_saving, total_saving, speedup
            )?;
        }
    }
    Ok(())
}
