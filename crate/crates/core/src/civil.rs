//! Crate-internal carry arithmetic on civil date/time fields.
//!
//! Offsets applied here are small (leap-second offsets, generator clocks),
//! so the math stays in calendar fields the whole way instead of routing
//! through an epoch; carries ripple second -> minute -> hour -> day ->
//! month -> year with Gregorian month lengths.

use crate::codec::{days_in_month, CivilDate, CivilDateTime, CodecError};

pub(crate) fn next_day(d: CivilDate) -> Result<CivilDate, CodecError> {
    let (mut y, mut m, mut day) = (d.year(), d.month(), d.day());
    if day < days_in_month(y, m) {
        day += 1;
    } else if m < 12 {
        m += 1;
        day = 1;
    } else if y < 9999 {
        y += 1;
        m = 1;
        day = 1;
    } else {
        return Err(CodecError::OutOfRange);
    }
    CivilDate::new(y, m, day)
}

pub(crate) fn prev_day(d: CivilDate) -> Result<CivilDate, CodecError> {
    let (mut y, mut m, mut day) = (d.year(), d.month(), d.day());
    if day > 1 {
        day -= 1;
    } else if m > 1 {
        m -= 1;
        day = days_in_month(y, m);
    } else if y > 1 {
        y -= 1;
        m = 12;
        day = 31;
    } else {
        return Err(CodecError::OutOfRange);
    }
    CivilDate::new(y, m, day)
}

/// Adds whole seconds to an instant. The fractional field is untouched.
/// The input must not be a leap second.
pub(crate) fn add_seconds(dt: &CivilDateTime, secs: u64) -> Result<CivilDateTime, CodecError> {
    debug_assert!(dt.second() < 60);
    let of_day = dt.hour() as u64 * 3600 + dt.minute() as u64 * 60 + dt.second() as u64 + secs;
    let mut date = dt.date();
    let mut days = of_day / 86_400;
    let rem = of_day % 86_400;
    while days > 0 {
        // Step whole months while they fit, then whole days.
        let left_in_month = (days_in_month(date.year(), date.month()) - date.day()) as u64 + 1;
        if days >= left_in_month {
            let first_of_next = next_month_start(date)?;
            days -= left_in_month;
            date = first_of_next;
        } else {
            date = CivilDate::new(date.year(), date.month(), date.day() + days as u8)
                .map_err(|_| CodecError::OutOfRange)?;
            days = 0;
        }
    }
    Ok(CivilDateTime::from_parts(
        date,
        (rem / 3600) as u8,
        ((rem / 60) % 60) as u8,
        (rem % 60) as u8,
        dt.frac_1e5(),
    ))
}

fn next_month_start(d: CivilDate) -> Result<CivilDate, CodecError> {
    if d.month() < 12 {
        CivilDate::new(d.year(), d.month() + 1, 1)
    } else if d.year() < 9999 {
        CivilDate::new(d.year() + 1, 1, 1)
    } else {
        Err(CodecError::OutOfRange)
    }
}

/// Subtracts whole seconds, borrowing across days as needed.
pub(crate) fn sub_seconds(dt: &CivilDateTime, secs: u64) -> Result<CivilDateTime, CodecError> {
    debug_assert!(dt.second() < 60);
    let of_day = dt.hour() as u64 * 3600 + dt.minute() as u64 * 60 + dt.second() as u64;
    let mut date = dt.date();
    let rem = if secs > of_day {
        let days_back = (secs - of_day).div_ceil(86_400);
        for _ in 0..days_back {
            date = prev_day(date)?;
        }
        days_back * 86_400 + of_day - secs
    } else {
        of_day - secs
    };
    debug_assert!(rem < 86_400);
    Ok(CivilDateTime::from_parts(
        date,
        (rem / 3600) as u8,
        ((rem / 60) % 60) as u8,
        (rem % 60) as u8,
        dt.frac_1e5(),
    ))
}
