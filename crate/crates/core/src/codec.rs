//! Integer timestamp formats and the conversions between them.
//!
//! Four formats are provided. Three are decimal-positional, meaning the
//! decimal digits of the integer are the calendar fields:
//!
//! * [`Ts32`]: 8 digits, `YYYYMMDD`, fits in a `u32`.
//! * [`Ts64Sec`]: 14 digits, `YYYYMMDDHHMMSS`.
//! * [`Ts64Frac`]: 19 digits, `YYYYMMDDHHMMSSXXXXX`, where `XXXXX` counts
//!   units of 10 microseconds.
//!
//! The fourth, [`PackedTs64`], stores one field per byte at fixed bit
//! offsets with a 16-bit binary fraction of a second; it trades readability
//! for constant-time field extraction.
//!
//! For the decimal formats, unsigned integer comparison equals chronological
//! comparison, truncating to a coarser unit is an integer division, and
//! splitting date from time is a divmod. All calendar logic is proleptic
//! Gregorian, years 1 through 9999, zone-naive.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid date {year:04}-{month:02}-{day:02}")]
    InvalidDate { year: u16, month: u8, day: u8 },
    #[error("invalid time of day {hour:02}:{minute:02}:{second:02}.{frac:05}")]
    InvalidTime { hour: u8, minute: u8, second: u8, frac: u32 },
    #[error("{value} is not a valid {format} encoding")]
    InvalidEncoding { value: u64, format: &'static str },
    #[error("seconds-resolution encoding requires a zero fractional part")]
    NonzeroFraction,
    #[error("second 60 only exists on the UTC scale at a leap boundary and has no integer encoding")]
    LeapSecondNotEncodable,
    #[error("year {year} is outside the century window starting at {base}")]
    YearOutOfCentury { year: u16, base: u16 },
    #[error("cannot truncate {format} to {unit:?}; the unit is finer than the format resolution")]
    UnitFinerThanFormat { unit: TruncUnit, format: &'static str },
    #[error("result falls outside the supported year range 1..=9999")]
    OutOfRange,
}

pub(crate) fn is_leap_year(year: u16) -> bool {
    year.is_multiple_of(4) && (!year.is_multiple_of(100) || year.is_multiple_of(400))
}

pub(crate) fn days_in_month(year: u16, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

/// A validated proleptic Gregorian calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    year: u16,
    month: u8,
    day: u8,
}

impl CivilDate {
    pub fn new(year: u16, month: u8, day: u8) -> Result<Self, CodecError> {
        if !(1..=9999).contains(&year)
            || !(1..=12).contains(&month)
            || day < 1
            || day > days_in_month(year, month)
        {
            return Err(CodecError::InvalidDate { year, month, day });
        }
        Ok(CivilDate { year, month, day })
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }
}

/// A validated wall-clock instant: date plus time of day plus a fractional
/// second counted in units of 10 microseconds (0..=99_999).
///
/// `second == 60` is representable so that the UTC leap second 23:59:60 has
/// a civil form, but only [`crate::timescale`] produces or consumes such
/// values; every encoder in this module rejects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDateTime {
    date: CivilDate,
    hour: u8,
    minute: u8,
    second: u8,
    frac_1e5: u32,
}

impl CivilDateTime {
    pub fn new(
        year: u16,
        month: u8,
        day: u8,
        hour: u8,
        minute: u8,
        second: u8,
        frac_1e5: u32,
    ) -> Result<Self, CodecError> {
        let dt = Self::allowing_leap_second(year, month, day, hour, minute, second, frac_1e5)?;
        if dt.second == 60 {
            return Err(CodecError::InvalidTime { hour, minute, second, frac: frac_1e5 });
        }
        Ok(dt)
    }

    /// Like [`CivilDateTime::new`] but additionally admits `second == 60`.
    pub fn allowing_leap_second(
        year: u16,
        month: u8,
        day: u8,
        hour: u8,
        minute: u8,
        second: u8,
        frac_1e5: u32,
    ) -> Result<Self, CodecError> {
        let date = CivilDate::new(year, month, day)?;
        if hour > 23 || minute > 59 || second > 60 || frac_1e5 > 99_999 {
            return Err(CodecError::InvalidTime { hour, minute, second, frac: frac_1e5 });
        }
        Ok(CivilDateTime { date, hour, minute, second, frac_1e5 })
    }

    pub(crate) fn from_parts(date: CivilDate, hour: u8, minute: u8, second: u8, frac_1e5: u32) -> Self {
        CivilDateTime { date, hour, minute, second, frac_1e5 }
    }

    pub fn date(&self) -> CivilDate {
        self.date
    }

    pub fn year(&self) -> u16 {
        self.date.year
    }

    pub fn month(&self) -> u8 {
        self.date.month
    }

    pub fn day(&self) -> u8 {
        self.date.day
    }

    pub fn hour(&self) -> u8 {
        self.hour
    }

    pub fn minute(&self) -> u8 {
        self.minute
    }

    pub fn second(&self) -> u8 {
        self.second
    }

    pub fn frac_1e5(&self) -> u32 {
        self.frac_1e5
    }

    pub fn is_leap_second(&self) -> bool {
        self.second == 60
    }
}

/// Units a timestamp can be truncated to. Truncation always rounds down to
/// the start of the containing unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruncUnit {
    Month,
    Day,
    Hour,
    Minute,
    Second,
}

// ---------------------------------------------------------------------------
// Ts32: YYYYMMDD in a u32
// ---------------------------------------------------------------------------

/// Calendar date as an 8-digit integer, `year * 10_000 + month * 100 + day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ts32(u32);

impl Ts32 {
    pub fn from_date(d: CivilDate) -> Ts32 {
        Ts32(d.year as u32 * 10_000 + d.month as u32 * 100 + d.day as u32)
    }

    pub fn from_ymd(year: u16, month: u8, day: u8) -> Result<Ts32, CodecError> {
        Ok(Ts32::from_date(CivilDate::new(year, month, day)?))
    }

    /// Validates that `value` decodes to a real calendar date.
    pub fn new(value: u32) -> Result<Ts32, CodecError> {
        let year = value / 10_000;
        let month = (value / 100) % 100;
        let day = value % 100;
        if year == 0 || year > 9999 {
            return Err(CodecError::InvalidEncoding { value: value as u64, format: "Ts32" });
        }
        CivilDate::new(year as u16, month as u8, day as u8)
            .map_err(|_| CodecError::InvalidEncoding { value: value as u64, format: "Ts32" })?;
        Ok(Ts32(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn to_date(self) -> CivilDate {
        CivilDate {
            year: (self.0 / 10_000) as u16,
            month: ((self.0 / 100) % 100) as u8,
            day: (self.0 % 100) as u8,
        }
    }

    /// Month truncation drops the day digits and yields the 6-digit `YYYYMM`
    /// label; day truncation is the identity. Finer units are rejected.
    pub fn truncate(self, unit: TruncUnit) -> Result<u64, CodecError> {
        match unit {
            TruncUnit::Month => Ok(self.0 as u64 / 100),
            TruncUnit::Day => Ok(self.0 as u64),
            _ => Err(CodecError::UnitFinerThanFormat { unit, format: "Ts32" }),
        }
    }
}

impl fmt::Display for Ts32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Ts64Sec: YYYYMMDDHHMMSS in a u64
// ---------------------------------------------------------------------------

/// Seconds-resolution instant as a 14-digit integer.
///
/// Place values: year at 1e10, month 1e8, day 1e6, hour 1e4, minute 1e2,
/// second 1e0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ts64Sec(u64);

impl Ts64Sec {
    /// Encodes a civil instant. The fractional part must be zero and leap
    /// seconds are not encodable.
    pub fn from_datetime(dt: &CivilDateTime) -> Result<Ts64Sec, CodecError> {
        if dt.second == 60 {
            return Err(CodecError::LeapSecondNotEncodable);
        }
        if dt.frac_1e5 != 0 {
            return Err(CodecError::NonzeroFraction);
        }
        Ok(Ts64Sec(compose_sec(dt)))
    }

    pub fn new(value: u64) -> Result<Ts64Sec, CodecError> {
        decode_sec_fields(value)
            .map_err(|_| CodecError::InvalidEncoding { value, format: "Ts64Sec" })?;
        Ok(Ts64Sec(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn to_datetime(self) -> CivilDateTime {
        decode_sec_fields(self.0).expect("validated on construction")
    }

    pub fn truncate(self, unit: TruncUnit) -> u64 {
        TsFormat::Sec.truncate(self.0, unit)
    }

    /// Splits into the date part and the packed `HHMMSS` time of day.
    pub fn split(self) -> (Ts32, u32) {
        (Ts32((self.0 / 1_000_000) as u32), (self.0 % 1_000_000) as u32)
    }

    pub fn day_key(self) -> Ts32 {
        Ts32((self.0 / 1_000_000) as u32)
    }
}

impl fmt::Display for Ts64Sec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn compose_sec(dt: &CivilDateTime) -> u64 {
    dt.year() as u64 * 10_000_000_000
        + dt.month() as u64 * 100_000_000
        + dt.day() as u64 * 1_000_000
        + dt.hour as u64 * 10_000
        + dt.minute as u64 * 100
        + dt.second as u64
}

fn decode_sec_fields(value: u64) -> Result<CivilDateTime, CodecError> {
    let year = value / 10_000_000_000;
    if year == 0 || year > 9999 {
        return Err(CodecError::OutOfRange);
    }
    let date = CivilDate::new(
        year as u16,
        ((value / 100_000_000) % 100) as u8,
        ((value / 1_000_000) % 100) as u8,
    )?;
    let hour = ((value / 10_000) % 100) as u8;
    let minute = ((value / 100) % 100) as u8;
    let second = (value % 100) as u8;
    if hour > 23 || minute > 59 || second > 59 {
        return Err(CodecError::InvalidTime { hour, minute, second, frac: 0 });
    }
    Ok(CivilDateTime { date, hour, minute, second, frac_1e5: 0 })
}

// ---------------------------------------------------------------------------
// Ts64Frac: YYYYMMDDHHMMSSXXXXX in a u64
// ---------------------------------------------------------------------------

/// Sub-second instant as a 19-digit integer. The five trailing digits count
/// units of 10 microseconds, so the whole-second prefix is `value / 100_000`.
/// The maximum value, 9999123123595999999, still fits in 64 unsigned bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ts64Frac(u64);

impl Ts64Frac {
    pub fn from_datetime(dt: &CivilDateTime) -> Result<Ts64Frac, CodecError> {
        if dt.second == 60 {
            return Err(CodecError::LeapSecondNotEncodable);
        }
        Ok(Ts64Frac(compose_sec(dt) * 100_000 + dt.frac_1e5 as u64))
    }

    pub fn new(value: u64) -> Result<Ts64Frac, CodecError> {
        decode_frac_fields(value, false)
            .map_err(|_| CodecError::InvalidEncoding { value, format: "Ts64Frac" })?;
        Ok(Ts64Frac(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn to_datetime(self) -> CivilDateTime {
        decode_frac_fields(self.0, false).expect("validated on construction")
    }

    pub fn truncate(self, unit: TruncUnit) -> u64 {
        TsFormat::Frac.truncate(self.0, unit)
    }

    pub fn day_key(self) -> Ts32 {
        Ts32((self.0 / 100_000_000_000) as u32)
    }
}

impl fmt::Display for Ts64Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn decode_frac_fields(value: u64, allow_leap: bool) -> Result<CivilDateTime, CodecError> {
    let frac = (value % 100_000) as u32;
    let secs = value / 100_000;
    let year = secs / 10_000_000_000;
    if year == 0 || year > 9999 {
        return Err(CodecError::OutOfRange);
    }
    let date = CivilDate::new(
        year as u16,
        ((secs / 100_000_000) % 100) as u8,
        ((secs / 1_000_000) % 100) as u8,
    )?;
    let hour = ((secs / 10_000) % 100) as u8;
    let minute = ((secs / 100) % 100) as u8;
    let second = (secs % 100) as u8;
    let max_second = if allow_leap { 60 } else { 59 };
    if hour > 23 || minute > 59 || second > max_second {
        return Err(CodecError::InvalidTime { hour, minute, second, frac });
    }
    Ok(CivilDateTime { date, hour, minute, second, frac_1e5: frac })
}

pub(crate) fn compose_frac(dt: &CivilDateTime) -> u64 {
    compose_sec(dt) * 100_000 + dt.frac_1e5 as u64
}

// ---------------------------------------------------------------------------
// PackedTs64: bit fields
// ---------------------------------------------------------------------------

pub const DEFAULT_CENTURY_BASE: u16 = 2000;

/// Bit-packed instant. Field layout, most significant first:
///
/// ```text
/// bits 63-56  year within century (0..=99)
/// bits 55-48  month
/// bits 47-40  day
/// bits 39-32  hour
/// bits 31-24  minute
/// bits 23-16  second
/// bits 15-0   fraction of a second in units of 1/65536 s
/// ```
///
/// Field significance descends with bit position, so within one configured
/// century unsigned comparison is chronological comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackedTs64(u64);

impl PackedTs64 {
    /// Packs an instant. `century_base` anchors the 0..=99 year field (a base
    /// of 2000 covers 2000 through 2099). The 10 us fraction is converted to
    /// 1/65536 s units by round-half-to-even; the fraction therefore
    /// round-trips in 1/65536 units, not in 10 us units.
    pub fn pack(dt: &CivilDateTime, century_base: u16) -> Result<PackedTs64, CodecError> {
        if dt.second == 60 {
            return Err(CodecError::LeapSecondNotEncodable);
        }
        let year = dt.year();
        if year < century_base || year > century_base.saturating_add(99) {
            return Err(CodecError::YearOutOfCentury { year, base: century_base });
        }
        let frac16 = round_half_even(dt.frac_1e5 as u64 * 65_536, 100_000);
        debug_assert!(frac16 <= 0xFFFF);
        Ok(PackedTs64(
            ((year - century_base) as u64) << 56
                | (dt.month() as u64) << 48
                | (dt.day() as u64) << 40
                | (dt.hour as u64) << 32
                | (dt.minute as u64) << 24
                | (dt.second as u64) << 16
                | frac16,
        ))
    }

    /// Wraps a raw packed word without validating it; [`PackedTs64::unpack`]
    /// performs the field checks.
    pub fn from_value(value: u64) -> PackedTs64 {
        PackedTs64(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn unpack(self, century_base: u16) -> Result<CivilDateTime, CodecError> {
        let v = self.0;
        let yy = (v >> 56) as u16;
        let month = ((v >> 48) & 0xFF) as u8;
        let day = ((v >> 40) & 0xFF) as u8;
        let hour = ((v >> 32) & 0xFF) as u8;
        let minute = ((v >> 24) & 0xFF) as u8;
        let second = ((v >> 16) & 0xFF) as u8;
        let frac16 = v & 0xFFFF;
        let year = century_base.checked_add(yy).ok_or(CodecError::OutOfRange)?;
        let date = CivilDate::new(year, month, day)
            .map_err(|_| CodecError::InvalidEncoding { value: v, format: "PackedTs64" })?;
        if hour > 23 || minute > 59 || second > 59 {
            return Err(CodecError::InvalidEncoding { value: v, format: "PackedTs64" });
        }
        let frac_1e5 = round_half_even(frac16 * 100_000, 65_536) as u32;
        Ok(CivilDateTime { date, hour, minute, second, frac_1e5 })
    }
}

fn round_half_even(num: u64, den: u64) -> u64 {
    let q = num / den;
    let r = num % den;
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

// ---------------------------------------------------------------------------
// Format-generic helpers
// ---------------------------------------------------------------------------

/// The two 64-bit stream formats the store and ingest paths accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TsFormat {
    /// 14-digit `YYYYMMDDHHMMSS`.
    Sec,
    /// 19-digit `YYYYMMDDHHMMSSXXXXX`.
    Frac,
}

impl TsFormat {
    pub fn name(self) -> &'static str {
        match self {
            TsFormat::Sec => "ts64sec",
            TsFormat::Frac => "ts64frac",
        }
    }

    pub fn validate(self, value: u64) -> Result<(), CodecError> {
        match self {
            TsFormat::Sec => Ts64Sec::new(value).map(|_| ()),
            TsFormat::Frac => Ts64Frac::new(value).map(|_| ()),
        }
    }

    /// Truncates a valid encoding down to `unit`. Month truncation yields
    /// the 6-digit `YYYYMM` label; every other unit keeps the format's digit
    /// count with the finer fields zeroed.
    pub fn truncate(self, value: u64, unit: TruncUnit) -> u64 {
        let p = self.place_value(unit);
        if unit == TruncUnit::Month {
            value / p
        } else {
            (value / p) * p
        }
    }

    fn place_value(self, unit: TruncUnit) -> u64 {
        let shift = match self {
            TsFormat::Sec => 1,
            TsFormat::Frac => 100_000,
        };
        match unit {
            TruncUnit::Month => 100_000_000 * shift,
            TruncUnit::Day => 1_000_000 * shift,
            TruncUnit::Hour => 10_000 * shift,
            TruncUnit::Minute => 100 * shift,
            TruncUnit::Second => shift,
        }
    }

    /// Day partition key (`YYYYMMDD`) of a valid encoding.
    pub fn day_key(self, value: u64) -> u32 {
        match self {
            TsFormat::Sec => (value / 1_000_000) as u32,
            TsFormat::Frac => (value / 100_000_000_000) as u32,
        }
    }
}

impl fmt::Display for TsFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
