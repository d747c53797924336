//! UTC/TAI conversion driven by a leap-second table.
//!
//! TAI ticks uniformly; UTC inserts leap seconds so that civil midnight
//! stays aligned with the rotating Earth. The difference TAI - UTC is a
//! step function of time, described here by a table of `(effective UTC
//! date, new offset)` rows. Conversions stay in civil calendar fields the
//! whole way (carry arithmetic on the decimal encodings); nothing routes
//! through an epoch count.
//!
//! A UTC instant inside an inserted leap second is written with second 60
//! (`...235960...`). Such values exist only on the UTC scale: the codec
//! encoders reject them, and this module is the only producer and consumer.

use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::civil;
use crate::codec::{self, CivilDateTime, CodecError, Ts32, Ts64Frac};

#[derive(Debug, Error)]
pub enum TimescaleError {
    #[error("leap table parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("leap table not monotone at line {line}: {msg}")]
    NonMonotone { line: usize, msg: String },
    #[error("leap-second table contains no entries")]
    EmptyTable,
    #[error("failed to read leap table: {0}")]
    Io(#[from] std::io::Error),
    #[error("second 60 in {0} does not coincide with a positive leap step in the active table")]
    Second60NotAtLeapBoundary(u64),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Published IERS leap-second history: each row is the first UTC date on
/// which the new TAI-UTC offset applies.
const BUILTIN: &[(u32, u32)] = &[
    (19720101, 10),
    (19720701, 11),
    (19730101, 12),
    (19740101, 13),
    (19750101, 14),
    (19760101, 15),
    (19770101, 16),
    (19780101, 17),
    (19790101, 18),
    (19800101, 19),
    (19810701, 20),
    (19820701, 21),
    (19830701, 22),
    (19850701, 23),
    (19880101, 24),
    (19900101, 25),
    (19910101, 26),
    (19920701, 27),
    (19930701, 28),
    (19940701, 29),
    (19960101, 30),
    (19970701, 31),
    (19990101, 32),
    (20060101, 33),
    (20090101, 34),
    (20120701, 35),
    (20150701, 36),
    (20170101, 37),
];

#[derive(Debug, Clone)]
struct LeapEntry {
    effective: Ts32,
    offset: u32,
    /// TAI instant of the mapped UTC midnight: effective date 00:00:00 plus
    /// the new offset.
    boundary_tai: u64,
    /// TAI instant where the inserted span begins: effective date 00:00:00
    /// plus the previous offset.
    gap_start_tai: u64,
}

/// Table of TAI-UTC offsets, strictly increasing by effective date with
/// non-decreasing offsets.
#[derive(Debug, Clone)]
pub struct LeapSecondTable {
    entries: Vec<LeapEntry>,
    source: String,
}

impl LeapSecondTable {
    /// The compiled-in IERS history, 1972 through the 2017 step (offset 37).
    pub fn builtin() -> &'static LeapSecondTable {
        static TABLE: OnceLock<LeapSecondTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            LeapSecondTable::from_entries(
                BUILTIN.iter().map(|&(d, o)| (Ts32::new(d).unwrap(), o)).collect(),
                "builtin",
            )
            .expect("builtin table is well formed")
        })
    }

    pub fn from_entries(
        entries: Vec<(Ts32, u32)>,
        source: &str,
    ) -> Result<LeapSecondTable, TimescaleError> {
        if entries.is_empty() {
            return Err(TimescaleError::EmptyTable);
        }
        let mut built = Vec::with_capacity(entries.len());
        let mut prev: Option<(Ts32, u32)> = None;
        for (i, &(effective, offset)) in entries.iter().enumerate() {
            if let Some((pd, po)) = prev {
                if effective <= pd {
                    return Err(TimescaleError::NonMonotone {
                        line: i + 1,
                        msg: format!("effective date {} does not increase past {}", effective, pd),
                    });
                }
                if offset < po {
                    return Err(TimescaleError::NonMonotone {
                        line: i + 1,
                        msg: format!("offset {} steps down from {}", offset, po),
                    });
                }
            }
            let prev_offset = prev.map_or(0, |(_, po)| po);
            let midnight = CivilDateTime::from_parts(effective.to_date(), 0, 0, 0, 0);
            let boundary_tai =
                codec::compose_frac(&civil::add_seconds(&midnight, offset as u64).map_err(|_| {
                    TimescaleError::Parse {
                        line: i + 1,
                        col: 1,
                        msg: format!("offset {} pushes the boundary past year 9999", offset),
                    }
                })?);
            let gap_start_tai =
                codec::compose_frac(&civil::add_seconds(&midnight, prev_offset as u64).unwrap());
            built.push(LeapEntry { effective, offset, boundary_tai, gap_start_tai });
            prev = Some((effective, offset));
        }
        Ok(LeapSecondTable { entries: built, source: source.to_string() })
    }

    /// Parses `YYYYMMDD,<offset>` lines. `#` starts a comment line; blank
    /// lines and CRLF endings are tolerated.
    pub fn from_reader(r: impl Read, source: &str) -> Result<LeapSecondTable, TimescaleError> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let comma = line.find(',').ok_or_else(|| TimescaleError::Parse {
                line: line_no,
                col: line.len() + 1,
                msg: "expected 'YYYYMMDD,<offset>'".to_string(),
            })?;
            let date_part = line[..comma].trim();
            let offset_part = line[comma + 1..].trim();
            let date_num: u32 = date_part.parse().map_err(|_| TimescaleError::Parse {
                line: line_no,
                col: 1,
                msg: format!("bad date field '{}'", date_part),
            })?;
            let effective = Ts32::new(date_num).map_err(|_| TimescaleError::Parse {
                line: line_no,
                col: 1,
                msg: format!("{} is not a valid YYYYMMDD date", date_num),
            })?;
            let offset: u32 = offset_part.parse().map_err(|_| TimescaleError::Parse {
                line: line_no,
                col: comma + 2,
                msg: format!("bad offset field '{}'", offset_part),
            })?;
            entries.push((effective, offset));
        }
        let mut table = Self::from_entries(entries, source)?;
        table.source = source.to_string();
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<LeapSecondTable, TimescaleError> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(f, &path.display().to_string())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> Vec<(Ts32, u32)> {
        self.entries.iter().map(|e| (e.effective, e.offset)).collect()
    }

    /// TAI-UTC in effect on a given UTC date (0 before the first entry).
    pub fn offset_at_date(&self, date: Ts32) -> u32 {
        let idx = self.entries.partition_point(|e| e.effective <= date);
        if idx == 0 {
            0
        } else {
            self.entries[idx - 1].offset
        }
    }

    /// Entry whose effective date is exactly `date`, if any, along with the
    /// offset step it introduces.
    fn step_at(&self, date: Ts32) -> Option<(u32, u32)> {
        let idx = self.entries.partition_point(|e| e.effective < date);
        let e = self.entries.get(idx)?;
        if e.effective != date {
            return None;
        }
        let prev = if idx == 0 { 0 } else { self.entries[idx - 1].offset };
        Some((e.offset, e.offset - prev))
    }
}

/// An instant on the UTC scale in the 19-digit decimal layout. Unlike
/// [`Ts64Frac`], the second field may read 60.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtcInstant(u64);

impl UtcInstant {
    pub fn new(value: u64) -> Result<UtcInstant, TimescaleError> {
        codec::decode_frac_fields(value, true)
            .map_err(|_| CodecError::InvalidEncoding { value, format: "UTC Ts64Frac" })?;
        Ok(UtcInstant(value))
    }

    pub fn from_frac(t: Ts64Frac) -> UtcInstant {
        UtcInstant(t.value())
    }

    pub fn value(self) -> u64 {
        self.0
    }

    fn fields(self) -> CivilDateTime {
        codec::decode_frac_fields(self.0, true).expect("validated on construction")
    }
}

impl std::fmt::Display for UtcInstant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An instant on the TAI scale; always a strict [`Ts64Frac`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaiInstant(Ts64Frac);

impl TaiInstant {
    pub fn new(value: u64) -> Result<TaiInstant, TimescaleError> {
        Ok(TaiInstant(Ts64Frac::new(value).map_err(TimescaleError::from)?))
    }

    pub fn from_frac(t: Ts64Frac) -> TaiInstant {
        TaiInstant(t)
    }

    pub fn value(self) -> u64 {
        self.0.value()
    }

    pub fn as_frac(self) -> Ts64Frac {
        self.0
    }
}

impl std::fmt::Display for TaiInstant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Converts a UTC instant to TAI by adding the offset in effect on its
/// date, carrying through the calendar fields.
///
/// A second-60 instant must name the final second of the day before an
/// entry that introduces a positive step; it maps to the TAI second just
/// before that entry's mapped midnight.
pub fn utc_to_tai(utc: UtcInstant, table: &LeapSecondTable) -> Result<TaiInstant, TimescaleError> {
    let dt = utc.fields();
    if dt.is_leap_second() {
        if dt.hour() != 23 || dt.minute() != 59 {
            return Err(TimescaleError::Second60NotAtLeapBoundary(utc.value()));
        }
        let next = Ts32::from_date(civil::next_day(dt.date())?);
        let (offset, _) = table
            .step_at(next)
            .filter(|&(_, step)| step > 0)
            .ok_or(TimescaleError::Second60NotAtLeapBoundary(utc.value()))?;
        let midnight = CivilDateTime::from_parts(next.to_date(), 0, 0, 0, dt.frac_1e5());
        let tai_dt = civil::add_seconds(&midnight, offset as u64 - 1)?;
        return Ok(TaiInstant(Ts64Frac::from_datetime(&tai_dt)?));
    }
    let offset = table.offset_at_date(Ts32::from_date(dt.date()));
    let tai_dt = civil::add_seconds(&dt, offset as u64)?;
    Ok(TaiInstant(Ts64Frac::from_datetime(&tai_dt)?))
}

/// Converts a TAI instant back to UTC. TAI instants inside an inserted
/// span decode to the second-60 civil form with the fraction preserved.
pub fn tai_to_utc(tai: TaiInstant, table: &LeapSecondTable) -> Result<UtcInstant, TimescaleError> {
    let val = tai.value();
    let idx = table.entries.partition_point(|e| e.boundary_tai <= val);
    if idx < table.entries.len() && val >= table.entries[idx].gap_start_tai {
        // Inside the inserted leap span before entry `idx`.
        let before = civil::prev_day(table.entries[idx].effective.to_date())?;
        let leap_dt = CivilDateTime::from_parts(before, 23, 59, 60, (val % 100_000) as u32);
        return Ok(UtcInstant(codec::compose_frac(&leap_dt)));
    }
    if idx == 0 {
        return Ok(UtcInstant(val));
    }
    let offset = table.entries[idx - 1].offset;
    let utc_dt = civil::sub_seconds(&tai.as_frac().to_datetime(), offset as u64)?;
    Ok(UtcInstant(codec::compose_frac(&utc_dt)))
}
