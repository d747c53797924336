//! `itsk` — generate, ingest, query, and benchmark integer-keyed time
//! series from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod bench;

use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use itsk_core::ingest::ingest_stream;
use itsk_core::timescale::{tai_to_utc, utc_to_tai};
use itsk_core::workloads::{generate, parse_iso_seconds, to_baseline, WorkloadKind, WorkloadSpec};
use itsk_core::{
    BinUnit, IngestError, LeapSecondTable, Record, StoreError, Table, TaiInstant, TsFormat,
    UtcInstant,
};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> CliError {
        match e {
            StoreError::InvalidRange(_)
            | StoreError::FormatMismatch { .. }
            | StoreError::UnsortedBatch(_)
            | StoreError::Corrupt(_)
            | StoreError::Compression(_)
            | StoreError::Codec(_) => CliError::Data(e.to_string()),
            StoreError::Io(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Internal(e.to_string())
    }
}

/// Runs `f` against buffered stdout. A reader that hangs up early (for
/// example `itsk query ... | head`) ends the process cleanly instead of
/// panicking; any other write failure is an internal error.
fn with_stdout(f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match f(&mut out).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(CliError::from(e)),
    }
}

#[derive(Parser)]
#[command(name = "itsk", version, about = "Integer-keyed time-series toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic workload CSV
    Gen(GenArgs),
    /// Load a workload CSV into a table directory
    Ingest(IngestArgs),
    /// Range-query a table, optionally aggregated into time bins
    Query(QueryArgs),
    /// Run the ingest/storage/query benchmark matrix
    Bench(bench::BenchArgs),
    /// Convert between UTC and TAI integer timestamps
    Tai(TaiArgs),
    /// Print SQL DDL templates for integer timestamp columns
    Ddl(DdlArgs),
    /// Report per-partition storage statistics
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Hft,
    Cdr,
    Iot,
}

#[derive(Args)]
struct GenArgs {
    /// Workload scenario
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Events per second (hft, cdr)
    #[arg(long, default_value_t = 100)]
    rate: u32,
    /// Device count (iot)
    #[arg(long, default_value_t = 10)]
    devices: u32,
    /// Seconds between reports per device (iot)
    #[arg(long, default_value_t = 5)]
    cadence: u32,
    /// Duration in minutes (added to --seconds)
    #[arg(long, default_value_t = 0)]
    minutes: u64,
    /// Duration in seconds (added to --minutes)
    #[arg(long, default_value_t = 0)]
    seconds: u64,
    /// First instant of the stream, as YYYY-MM-DDThh:mm:ss
    #[arg(long, default_value = "2023-01-01T00:00:00")]
    start: String,
    /// Generator seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path (header: ts,value)
    #[arg(long)]
    out: PathBuf,
    /// Also write the ISO-text control CSV (header: iso_ts,value)
    #[arg(long)]
    baseline_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV path (header: ts,value)
    #[arg(long)]
    input: PathBuf,
    /// Table directory (created if absent)
    #[arg(long)]
    table: PathBuf,
    /// Records per write batch
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    /// Stable-sort each batch by timestamp before writing
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    sort: bool,
    /// Timestamp format of the table
    #[arg(long, value_enum, default_value_t = FormatArg::Ts64sec)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Ts64sec,
    Ts64frac,
}

impl FormatArg {
    fn to_format(self) -> TsFormat {
        match self {
            FormatArg::Ts64sec => TsFormat::Sec,
            FormatArg::Ts64frac => TsFormat::Frac,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BinArg {
    Hour,
    Day,
    Month,
}

#[derive(Args)]
struct QueryArgs {
    /// Table directory
    #[arg(long)]
    table: PathBuf,
    /// Inclusive lower bound (integer timestamp)
    #[arg(long)]
    from: u64,
    /// Inclusive upper bound (integer timestamp)
    #[arg(long)]
    to: u64,
    /// Aggregate rows into bins of this unit instead of listing them
    #[arg(long, value_enum)]
    bin: Option<BinArg>,
}

#[derive(Args)]
struct TaiArgs {
    /// UTC timestamp (19-digit, 10 microsecond units) to convert to TAI
    #[arg(long, conflicts_with = "tai")]
    utc: Option<u64>,
    /// TAI timestamp to convert to UTC
    #[arg(long)]
    tai: Option<u64>,
    /// Leap-second table CSV (default: $ITSK_LEAP_TABLE, else built-in)
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Postgres,
    Clickhouse,
}

#[derive(Args)]
struct DdlArgs {
    /// Target SQL dialect
    #[arg(long, value_enum)]
    dialect: DialectArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Text,
    Csv,
}

#[derive(Args)]
struct StatsArgs {
    /// Table directory
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormatArg::Text)]
    format: ReportFormatArg,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Ingest(args) => cmd_ingest(args),
        Cmd::Query(args) => cmd_query(args),
        Cmd::Bench(args) => bench::cmd_bench(args),
        Cmd::Tai(args) => cmd_tai(args),
        Cmd::Ddl(args) => cmd_ddl(args),
        Cmd::Stats(args) => cmd_stats(args),
    }
}

fn build_spec(args: &GenArgs) -> Result<WorkloadSpec, CliError> {
    let kind = match args.kind {
        KindArg::Hft => WorkloadKind::Hft { events_per_sec: args.rate },
        KindArg::Cdr => WorkloadKind::Cdr { events_per_sec: args.rate },
        KindArg::Iot => WorkloadKind::Iot { devices: args.devices, cadence_secs: args.cadence },
    };
    let start = parse_iso_seconds(&args.start)
        .map_err(|e| CliError::Usage(format!("--start: {}", e)))?
        .to_datetime();
    let duration_secs = args.minutes * 60 + args.seconds;
    let spec = WorkloadSpec { kind, start, duration_secs, seed: args.seed };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let spec = build_spec(&args)?;
    let records = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut out = String::with_capacity(records.len() * 24 + 16);
    out.push_str("ts,value\n");
    for r in &records {
        out.push_str(&format!("{},{}\n", r.ts, r.value));
    }
    std::fs::write(&args.out, out)?;
    with_stdout(|o| writeln!(o, "wrote {} records to {}", records.len(), args.out.display()))?;

    if let Some(baseline_path) = &args.baseline_out {
        let baseline = to_baseline(&records);
        let mut out = String::with_capacity(baseline.len() * 32 + 16);
        out.push_str("iso_ts,value\n");
        for r in &baseline {
            out.push_str(&format!("{},{}\n", r.ts_text, r.value));
        }
        std::fs::write(baseline_path, out)?;
        with_stdout(|o| {
            writeln!(o, "wrote {} baseline records to {}", baseline.len(), baseline_path.display())
        })?;
    }
    Ok(())
}

fn read_records_csv(path: &std::path::Path) -> Result<Vec<Record>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e)))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "ts,value" => {}
        Some((_, header)) => {
            return Err(CliError::Data(format!(
                "line 1: expected header 'ts,value', found '{}'",
                header.trim_end()
            )))
        }
        None => return Err(CliError::Data("input is empty".into())),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (ts_text, value_text) = line
            .split_once(',')
            .ok_or_else(|| CliError::Data(format!("line {}: expected 'ts,value'", lineno)))?;
        let ts: u64 = ts_text
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: '{}' is not an integer", lineno, ts_text)))?;
        let value: f64 = value_text.parse().map_err(|_| {
            CliError::Data(format!("line {}: '{}' is not a number", lineno, value_text))
        })?;
        if !value.is_finite() {
            return Err(CliError::Data(format!("line {}: value must be finite", lineno)));
        }
        records.push(Record::new(ts, value));
    }
    Ok(records)
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    if args.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    let records = read_records_csv(&args.input)?;
    let table = Arc::new(Table::open_or_create(&args.table, args.format.to_format())?);
    let report =
        ingest_stream(records, args.batch_size, args.sort, &table).map_err(|e| match e {
            IngestError::AtRecord { index, source } => {
                // Data rows start on line 2, after the header.
                CliError::Data(format!("line {}: {}", index + 2, source))
            }
            IngestError::Store(s) => CliError::from(s),
            other => CliError::Data(other.to_string()),
        })?;
    let secs = report.wall_time.as_secs_f64();
    let rate = if secs > 0.0 { report.records_flushed as f64 / secs } else { 0.0 };
    with_stdout(|o| {
        writeln!(
            o,
            "ingested {} records in {} batches ({} segments) in {:.1} ms ({:.0} rec/s)",
            report.records_flushed,
            report.batches,
            report.segments_created,
            secs * 1e3,
            rate
        )
    })
}

fn cmd_query(args: QueryArgs) -> Result<(), CliError> {
    let table = Table::open(&args.table)?;
    match args.bin {
        None => {
            let rows = table.range_query(args.from, args.to)?;
            with_stdout(|o| {
                writeln!(o, "ts,value")?;
                for (ts, value) in rows {
                    writeln!(o, "{},{}", ts, value)?;
                }
                Ok(())
            })
        }
        Some(bin) => {
            let unit = match bin {
                BinArg::Hour => BinUnit::Hour,
                BinArg::Day => BinUnit::Day,
                BinArg::Month => BinUnit::Month,
            };
            let bins = table.aggregate_bins(args.from, args.to, unit)?;
            with_stdout(|o| {
                writeln!(o, "bin,count,mean,min,max,sum")?;
                for b in bins {
                    writeln!(
                        o,
                        "{},{},{},{},{},{}",
                        b.bin_label,
                        b.count,
                        b.mean(),
                        b.min,
                        b.max,
                        b.sum
                    )?;
                }
                Ok(())
            })
        }
    }
}

fn load_leap_table(flag: Option<&PathBuf>) -> Result<std::borrow::Cow<'static, LeapSecondTable>, CliError> {
    let path = match flag {
        Some(p) => Some(p.clone()),
        None => std::env::var_os("ITSK_LEAP_TABLE").map(PathBuf::from),
    };
    match path {
        Some(p) => LeapSecondTable::from_path(&p)
            .map(std::borrow::Cow::Owned)
            .map_err(|e| CliError::Data(format!("{}: {}", p.display(), e))),
        None => Ok(std::borrow::Cow::Borrowed(LeapSecondTable::builtin())),
    }
}

fn cmd_tai(args: TaiArgs) -> Result<(), CliError> {
    let table = load_leap_table(args.table.as_ref())?;
    match (args.utc, args.tai) {
        (Some(utc), None) => {
            let instant = UtcInstant::new(utc).map_err(|e| CliError::Data(e.to_string()))?;
            let tai = utc_to_tai(instant, &table).map_err(|e| CliError::Data(e.to_string()))?;
            with_stdout(|o| writeln!(o, "{}", tai.value()))
        }
        (None, Some(tai)) => {
            let instant = TaiInstant::new(tai).map_err(|e| CliError::Data(e.to_string()))?;
            let utc = tai_to_utc(instant, &table).map_err(|e| CliError::Data(e.to_string()))?;
            with_stdout(|o| writeln!(o, "{}", utc.value()))
        }
        _ => Err(CliError::Usage("pass exactly one of --utc or --tai".into())),
    }
}

const POSTGRES_DDL: &str = r#"-- Integer surrogate timestamp as a generated column.
-- Every field below the year occupies exactly two decimal digits, so the
-- multipliers are 10^10 (year), 10^8 (month), 10^6 (day), 10^4 (hour),
-- 10^2 (minute), 1 (second); a 10^9 month multiplier, sometimes seen in
-- sketches of this scheme, would not read back as YYYYMMDDHHMMSS.
CREATE TABLE events (
  id BIGINT GENERATED ALWAYS AS IDENTITY PRIMARY KEY,
  event_time TIMESTAMP NOT NULL,
  time_int BIGINT GENERATED ALWAYS AS (
    EXTRACT(YEAR   FROM event_time)::bigint * 10000000000 +
    EXTRACT(MONTH  FROM event_time)::bigint * 100000000 +
    EXTRACT(DAY    FROM event_time)::bigint * 1000000 +
    EXTRACT(HOUR   FROM event_time)::bigint * 10000 +
    EXTRACT(MINUTE FROM event_time)::bigint * 100 +
    FLOOR(EXTRACT(SECOND FROM event_time))::bigint
  ) STORED
);

CREATE INDEX events_time_int_idx ON events (time_int);

-- Range-partitioned variant: day-grain pruning and cheap bulk drops.
CREATE TABLE measurements (
  time_int BIGINT NOT NULL,
  value DOUBLE PRECISION
) PARTITION BY RANGE (time_int);

CREATE TABLE measurements_202301 PARTITION OF measurements
  FOR VALUES FROM (20230101000000) TO (20230201000000);
"#;

const CLICKHOUSE_DDL: &str = r#"-- The sorted integer key doubles as the MergeTree primary index;
-- BETWEEN-style predicates on ts prune granules directly.
CREATE TABLE metrics (
  ts UInt64,
  value Float64
)
ENGINE = MergeTree()
ORDER BY (ts);
-- For day-grain partition pruning and TTL-style drops, add:
--   PARTITION BY intDiv(ts, 1000000)
"#;

fn cmd_ddl(args: DdlArgs) -> Result<(), CliError> {
    let ddl = match args.dialect {
        DialectArg::Postgres => POSTGRES_DDL,
        DialectArg::Clickhouse => CLICKHOUSE_DDL,
    };
    with_stdout(|o| o.write_all(ddl.as_bytes()))
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let table = Table::open(&args.table)?;
    let report = table.stats();
    with_stdout(|o| match args.format {
        ReportFormatArg::Csv => {
            writeln!(o, "partition,rows,segments,ts_bytes,value_bytes,ratio")?;
            for p in &report.partitions {
                writeln!(
                    o,
                    "{},{},{},{},{},{:.2}",
                    p.key, p.rows, p.segments, p.ts_compressed_bytes, p.value_bytes,
                    p.compression_ratio
                )?;
            }
            writeln!(
                o,
                "total,{},{},{},{},{:.2}",
                report.total_rows,
                report.total_segments,
                report.total_ts_compressed_bytes,
                report.total_value_bytes,
                report.total_compression_ratio
            )
        }
        ReportFormatArg::Text => {
            writeln!(
                o,
                "{:>10} {:>10} {:>9} {:>12} {:>12} {:>7}",
                "partition", "rows", "segments", "ts_bytes", "value_bytes", "ratio"
            )?;
            for p in &report.partitions {
                writeln!(
                    o,
                    "{:>10} {:>10} {:>9} {:>12} {:>12} {:>7.2}",
                    p.key, p.rows, p.segments, p.ts_compressed_bytes, p.value_bytes,
                    p.compression_ratio
                )?;
            }
            writeln!(
                o,
                "{:>10} {:>10} {:>9} {:>12} {:>12} {:>7.2}",
                "total",
                report.total_rows,
                report.total_segments,
                report.total_ts_compressed_bytes,
                report.total_value_bytes,
                report.total_compression_ratio
            )
        }
    })
}
