//! Deterministic synthetic workloads and the text-timestamp control arm.
//!
//! Three scenario generators produce `(Ts64Sec, f64)` record streams:
//!
//! * `hft` — a single bursty source with jittered inter-arrival times on
//!   a 10 µs internal clock and a price random walk.
//! * `cdr` — call records whose arrival intensity follows a fixed
//!   hour-of-day multiplier table ([`CDR_HOURLY_PERCENT`]).
//! * `iot` — a fleet of devices each reporting on a fixed cadence,
//!   interleaved per tick.
//!
//! All randomness comes from ChaCha8 seeded from the spec, so a given
//! spec reproduces byte-identical output on any platform. The baseline
//! helpers render the same instants as fixed-width ISO-8601 text
//! (`YYYY-MM-DDThh:mm:ss`), the representation the integer pipeline is
//! benchmarked against.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::civil;
use crate::codec::{CivilDateTime, CodecError, Ts64Sec};
use crate::ingest::Record;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("malformed bound: {0}")]
    MalformedBound(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Hour-of-day arrival intensity for the `cdr` scenario, as a percent of
/// the nominal rate. Index 0 is the hour starting at midnight. The shape
/// is a deliberately simple diurnal curve: quiet at night, a morning
/// ramp, busy office hours, an evening tail.
pub const CDR_HOURLY_PERCENT: [u32; 24] = [
    20, 15, 10, 10, 10, 15, 30, 60, 90, 100, 100, 95, 90, 95, 100, 100, 95, 90, 85, 80, 70, 60,
    45, 30,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadKind {
    Hft { events_per_sec: u32 },
    Cdr { events_per_sec: u32 },
    Iot { devices: u32, cadence_secs: u32 },
}

impl WorkloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadKind::Hft { .. } => "hft",
            WorkloadKind::Cdr { .. } => "cdr",
            WorkloadKind::Iot { .. } => "iot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub start: CivilDateTime,
    pub duration_secs: u64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.duration_secs == 0 {
            return Err(WorkloadError::InvalidSpec("duration must be positive".into()));
        }
        if self.start.frac_1e5() != 0 {
            return Err(WorkloadError::InvalidSpec(
                "start must be a whole second".into(),
            ));
        }
        if self.start.is_leap_second() {
            return Err(WorkloadError::InvalidSpec(
                "start cannot be a leap second".into(),
            ));
        }
        match self.kind {
            WorkloadKind::Hft { events_per_sec } | WorkloadKind::Cdr { events_per_sec } => {
                if events_per_sec == 0 {
                    return Err(WorkloadError::InvalidSpec("rate must be positive".into()));
                }
                if events_per_sec > 100_000 {
                    return Err(WorkloadError::InvalidSpec(
                        "rate above 100000/s exceeds the 10 microsecond clock".into(),
                    ));
                }
            }
            WorkloadKind::Iot { devices, cadence_secs } => {
                if devices == 0 {
                    return Err(WorkloadError::InvalidSpec("device count must be positive".into()));
                }
                if cadence_secs == 0 {
                    return Err(WorkloadError::InvalidSpec("cadence must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// 10 µs units per second: the internal clock resolution of the bursty
/// generators.
const UNITS_PER_SEC: u64 = 100_000;

fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A jittered gap: uniform over `[1, 2*gap - 1]`, so the mean stays at
/// `gap` while every step advances the clock.
fn jittered(rng: &mut ChaCha8Rng, gap: u64) -> u64 {
    if gap <= 1 {
        return 1;
    }
    1 + rng.next_u64() % (2 * gap - 1)
}

fn ts_at(start: &CivilDateTime, secs: u64) -> Result<u64, WorkloadError> {
    let dt = civil::add_seconds(start, secs)?;
    Ok(Ts64Sec::from_datetime(&dt)?.value())
}

/// Runs the generator for `spec`. Output is sorted by timestamp and
/// deterministic: the same spec always yields the same records.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<Record>, WorkloadError> {
    spec.validate()?;
    match spec.kind {
        WorkloadKind::Hft { events_per_sec } => generate_hft(spec, events_per_sec),
        WorkloadKind::Cdr { events_per_sec } => generate_cdr(spec, events_per_sec),
        WorkloadKind::Iot { devices, cadence_secs } => generate_iot(spec, devices, cadence_secs),
    }
}

fn generate_hft(spec: &WorkloadSpec, rate: u32) -> Result<Vec<Record>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seed, 0));
    let mean_gap = UNITS_PER_SEC / rate as u64;
    let limit = spec.duration_secs * UNITS_PER_SEC;
    let mut out = Vec::with_capacity((spec.duration_secs * rate as u64) as usize);
    let mut clock = 0u64;
    // Price random walk in cents, never below one cent.
    let mut price_cents: i64 = 10_000;
    loop {
        // One draw in eight collapses the gap, giving visible bursts.
        let gap = if rng.next_u64() % 8 == 0 { (mean_gap / 8).max(1) } else { mean_gap };
        clock += jittered(&mut rng, gap);
        if clock >= limit {
            break;
        }
        let tick = (rng.next_u64() % 201) as i64 - 100;
        price_cents = (price_cents + tick).max(1);
        out.push(Record::new(ts_at(&spec.start, clock / UNITS_PER_SEC)?, price_cents as f64 / 100.0));
    }
    Ok(out)
}

fn generate_cdr(spec: &WorkloadSpec, rate: u32) -> Result<Vec<Record>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seed, 1));
    let base_gap = UNITS_PER_SEC / rate as u64;
    let limit = spec.duration_secs * UNITS_PER_SEC;
    let start_hour = spec.start.hour() as u64;
    let start_sec_of_hour = spec.start.minute() as u64 * 60 + spec.start.second() as u64;
    let mut out = Vec::new();
    let mut clock = 0u64;
    loop {
        let elapsed_secs = clock / UNITS_PER_SEC;
        let hour = ((start_sec_of_hour + elapsed_secs) / 3600 + start_hour) % 24;
        let percent = CDR_HOURLY_PERCENT[hour as usize] as u64;
        let gap = (base_gap * 100 / percent).max(1);
        clock += jittered(&mut rng, gap);
        if clock >= limit {
            break;
        }
        // Value is the call duration in seconds, up to ten minutes.
        let duration = 1 + rng.next_u64() % 600;
        out.push(Record::new(ts_at(&spec.start, clock / UNITS_PER_SEC)?, duration as f64));
    }
    Ok(out)
}

fn generate_iot(
    spec: &WorkloadSpec,
    devices: u32,
    cadence_secs: u32,
) -> Result<Vec<Record>, WorkloadError> {
    let ticks = spec.duration_secs.div_ceil(cadence_secs as u64);
    // One independent stream per device, derived from the spec seed, so
    // device streams are stable regardless of fleet size or evaluation
    // order.
    let mut rngs: Vec<ChaCha8Rng> = (0..devices)
        .map(|d| ChaCha8Rng::seed_from_u64(splitmix(spec.seed, 2 + d as u64)))
        .collect();
    let mut out = Vec::with_capacity((ticks * devices as u64) as usize);
    for tick in 0..ticks {
        let ts = ts_at(&spec.start, tick * cadence_secs as u64)?;
        for (d, rng) in rngs.iter_mut().enumerate() {
            // A per-device baseline plus bounded sensor noise.
            let base = 20.0 + d as f64 * 0.5;
            let noise = (rng.next_u64() % 1001) as f64 / 1000.0 - 0.5;
            out.push(Record::new(ts, base + noise));
        }
    }
    Ok(out)
}

/// The control-arm representation: the same instant as fixed-width
/// ISO-8601 text.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub ts_text: String,
    pub value: f64,
}

/// Renders `Ts64Sec` records as 19-character ISO text. Zero padding makes
/// lexicographic text order agree with numeric timestamp order.
pub fn to_baseline(records: &[Record]) -> Vec<BaselineRecord> {
    records
        .iter()
        .map(|r| {
            let dt = Ts64Sec::new(r.ts).expect("record holds a valid ts64sec").to_datetime();
            BaselineRecord { ts_text: format_iso(&dt), value: r.value }
        })
        .collect()
}

pub fn format_iso(dt: &CivilDateTime) -> String {
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
        dt.date().year(),
        dt.date().month(),
        dt.date().day(),
        dt.hour(),
        dt.minute(),
        dt.second()
    )
}

/// Strict parse of `YYYY-MM-DDThh:mm:ss` back to the integer form.
pub fn parse_iso_seconds(text: &str) -> Result<Ts64Sec, WorkloadError> {
    let b = text.as_bytes();
    if b.len() != 19 {
        return Err(WorkloadError::MalformedBound(format!(
            "'{}' is not 19 characters",
            text
        )));
    }
    for (i, &c) in b.iter().enumerate() {
        let ok = match i {
            4 | 7 => c == b'-',
            10 => c == b'T',
            13 | 16 => c == b':',
            _ => c.is_ascii_digit(),
        };
        if !ok {
            return Err(WorkloadError::MalformedBound(format!(
                "'{}' has an unexpected character at position {}",
                text, i
            )));
        }
    }
    let num = |range: std::ops::Range<usize>| -> u32 {
        text[range].parse().expect("digits checked above")
    };
    let dt = CivilDateTime::new(
        num(0..4) as u16,
        num(5..7) as u8,
        num(8..10) as u8,
        num(11..13) as u8,
        num(14..16) as u8,
        num(17..19) as u8,
        0,
    )
    .map_err(|e| WorkloadError::MalformedBound(format!("'{}': {}", text, e)))?;
    Ok(Ts64Sec::from_datetime(&dt).expect("whole second by construction"))
}

/// The naive control: a linear scan with inclusive text comparison on
/// both bounds. Bounds must be well-formed; a lo that sorts after hi is a
/// vacuous range, not an error.
pub fn baseline_range_scan(
    stream: &[BaselineRecord],
    lo_text: &str,
    hi_text: &str,
) -> Result<Vec<BaselineRecord>, WorkloadError> {
    parse_iso_seconds(lo_text)?;
    parse_iso_seconds(hi_text)?;
    if lo_text > hi_text {
        return Ok(Vec::new());
    }
    Ok(stream
        .iter()
        .filter(|r| r.ts_text.as_str() >= lo_text && r.ts_text.as_str() <= hi_text)
        .cloned()
        .collect())
}
