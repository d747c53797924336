//! Property tests for the format laws: round-trips, order preservation,
//! truncation algebra, lossless compression, and timescale conversion.
//!
//! Calendar arithmetic here (leap years, month lengths) is reimplemented
//! locally so the properties do not lean on the code under test.

use proptest::prelude::*;

use itsk_core::compression::{compress_column, decompress_column, CompressedColumn};
use itsk_core::timescale::{tai_to_utc, utc_to_tai};
use itsk_core::{
    CivilDateTime, LeapSecondTable, PackedTs64, Ts32, Ts64Frac, Ts64Sec, TruncUnit, TsFormat,
    UtcInstant,
};

fn leap(y: u16) -> bool {
    y.is_multiple_of(4) && (!y.is_multiple_of(100) || y.is_multiple_of(400))
}

fn month_days(y: u16, m: u8) -> u8 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap(y) => 29,
        _ => 28,
    }
}

prop_compose! {
    fn civil_dt()(y in 1u16..=9999, m in 1u8..=12, dsel in 0u8..31, h in 0u8..24,
                  mi in 0u8..60, s in 0u8..60, f in 0u32..100_000)
                 -> CivilDateTime {
        let d = 1 + dsel % month_days(y, m);
        CivilDateTime::new(y, m, d, h, mi, s, f).unwrap()
    }
}

prop_compose! {
    fn whole_second_dt()(dt in civil_dt()) -> CivilDateTime {
        CivilDateTime::new(
            dt.date().year(), dt.date().month(), dt.date().day(),
            dt.hour(), dt.minute(), dt.second(), 0,
        ).unwrap()
    }
}

fn dt_key(dt: &CivilDateTime) -> (u16, u8, u8, u8, u8, u8, u32) {
    (
        dt.date().year(),
        dt.date().month(),
        dt.date().day(),
        dt.hour(),
        dt.minute(),
        dt.second(),
        dt.frac_1e5(),
    )
}

proptest! {
    #[test]
    fn ts32_round_trips(y in 1u16..=9999, m in 1u8..=12, dsel in 0u8..31) {
        let d = 1 + dsel % month_days(y, m);
        let t = Ts32::from_ymd(y, m, d).unwrap();
        let back = t.to_date();
        prop_assert_eq!((back.year(), back.month(), back.day()), (y, m, d));
        prop_assert_eq!(Ts32::from_date(back).value(), t.value());
        prop_assert_eq!(t.value(), y as u32 * 10_000 + m as u32 * 100 + d as u32);
    }

    #[test]
    fn ts64sec_round_trips(dt in whole_second_dt()) {
        let t = Ts64Sec::from_datetime(&dt).unwrap();
        prop_assert_eq!(dt_key(&t.to_datetime()), dt_key(&dt));
        prop_assert_eq!(Ts64Sec::new(t.value()).unwrap().value(), t.value());
    }

    #[test]
    fn ts64frac_round_trips(dt in civil_dt()) {
        let t = Ts64Frac::from_datetime(&dt).unwrap();
        prop_assert_eq!(dt_key(&t.to_datetime()), dt_key(&dt));
        prop_assert_eq!(Ts64Frac::new(t.value()).unwrap().value(), t.value());
    }

    #[test]
    fn packed_round_trips_on_grid(dt in civil_dt(), f16 in 0u32..65_536) {
        // Pack works on the 1/65536 s grid; exact round trips hold for
        // instants already on that grid.
        let century = (dt.date().year() / 100) * 100;
        let frac_1e5 = ((f16 as u64 * 100_000 + 32_768) / 65_536) as u32;
        let on_grid = CivilDateTime::new(
            dt.date().year(), dt.date().month(), dt.date().day(),
            dt.hour(), dt.minute(), dt.second(), frac_1e5.min(99_999),
        ).unwrap();
        let p = PackedTs64::pack(&on_grid, century).unwrap();
        let back = p.unpack(century).unwrap();
        let again = PackedTs64::pack(&back, century).unwrap();
        prop_assert_eq!(again.value(), p.value());
    }

    #[test]
    fn encodings_preserve_field_order(a in civil_dt(), b in civil_dt()) {
        let fa = Ts64Frac::from_datetime(&a).unwrap().value();
        let fb = Ts64Frac::from_datetime(&b).unwrap().value();
        prop_assert_eq!(dt_key(&a).cmp(&dt_key(&b)), fa.cmp(&fb));
        let sa = Ts64Sec::from_datetime(&CivilDateTime::new(
            a.date().year(), a.date().month(), a.date().day(),
            a.hour(), a.minute(), a.second(), 0).unwrap()).unwrap().value();
        let sb = Ts64Sec::from_datetime(&CivilDateTime::new(
            b.date().year(), b.date().month(), b.date().day(),
            b.hour(), b.minute(), b.second(), 0).unwrap()).unwrap().value();
        let ka = (dt_key(&a).0, dt_key(&a).1, dt_key(&a).2, dt_key(&a).3, dt_key(&a).4, dt_key(&a).5);
        let kb = (dt_key(&b).0, dt_key(&b).1, dt_key(&b).2, dt_key(&b).3, dt_key(&b).4, dt_key(&b).5);
        prop_assert_eq!(ka.cmp(&kb), sa.cmp(&sb));
    }

    #[test]
    fn truncation_is_idempotent_and_monotone(dt in whole_second_dt(), dt2 in whole_second_dt()) {
        let a = Ts64Sec::from_datetime(&dt).unwrap().value();
        let b = Ts64Sec::from_datetime(&dt2).unwrap().value();
        for unit in [TruncUnit::Day, TruncUnit::Hour, TruncUnit::Minute, TruncUnit::Second] {
            let ta = TsFormat::Sec.truncate(a, unit);
            // Same-format truncation is idempotent.
            prop_assert_eq!(TsFormat::Sec.truncate(ta, unit), ta);
            // Truncation never increases, and never drops below the bin.
            prop_assert!(ta <= a);
            // Order is preserved weakly.
            let tb = TsFormat::Sec.truncate(b, unit);
            if a <= b { prop_assert!(ta <= tb); }
        }
        // Month labels live in their own 6-digit shape.
        let ml = TsFormat::Sec.truncate(a, TruncUnit::Month);
        prop_assert_eq!(ml, dt.date().year() as u64 * 100 + dt.date().month() as u64);
    }

    #[test]
    fn day_key_agrees_with_truncation(dt in civil_dt()) {
        let f = Ts64Frac::from_datetime(&dt).unwrap().value();
        let expected = dt.date().year() as u64 * 10_000
            + dt.date().month() as u64 * 100
            + dt.date().day() as u64;
        prop_assert_eq!(TsFormat::Frac.day_key(f) as u64, expected);
        prop_assert_eq!(TsFormat::Frac.truncate(f, TruncUnit::Day), expected * 100_000_000_000);
    }

    #[test]
    fn compression_is_lossless(mut ts in prop::collection::vec(any::<u64>(), 1..800)) {
        ts.sort_unstable();
        let col = compress_column(&ts).unwrap();
        prop_assert_eq!(&decompress_column(&col).unwrap(), &ts);
        let bytes = col.to_bytes();
        let (back, used) = CompressedColumn::from_bytes(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(&decompress_column(&back).unwrap(), &ts);
    }

    #[test]
    fn per_block_decode_matches_full_decode(mut ts in prop::collection::vec(any::<u64>(), 1..600)) {
        ts.sort_unstable();
        let col = compress_column(&ts).unwrap();
        let mut rebuilt = Vec::with_capacity(ts.len());
        let mut prev = 0u64;
        for k in 0..col.block_count() {
            let piece = col.decode_block(k, prev).unwrap();
            prev = *piece.last().unwrap();
            rebuilt.extend(piece);
        }
        prop_assert_eq!(rebuilt, ts);
    }

    #[test]
    fn utc_tai_round_trips_and_orders(a in civil_dt(), b in civil_dt()) {
        let table = LeapSecondTable::builtin();
        let ua = UtcInstant::new(Ts64Frac::from_datetime(&a).unwrap().value()).unwrap();
        let ub = UtcInstant::new(Ts64Frac::from_datetime(&b).unwrap().value()).unwrap();
        let ta = utc_to_tai(ua, table).unwrap();
        let tb = utc_to_tai(ub, table).unwrap();
        prop_assert_eq!(tai_to_utc(ta, table).unwrap().value(), ua.value());
        prop_assert_eq!(tai_to_utc(tb, table).unwrap().value(), ub.value());
        prop_assert_eq!(ua.value().cmp(&ub.value()), ta.value().cmp(&tb.value()));
    }
}
