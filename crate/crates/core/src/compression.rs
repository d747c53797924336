//! Delta, zigzag, and bit-packed encoding for timestamp columns.
//!
//! A column is stored as its first value (the base) plus the sequence of
//! consecutive differences. Differences of sorted integer timestamps are
//! small, so after zigzag-mapping them to unsigned space they pack into a
//! few bits each. Deltas are grouped into 128-row-aligned blocks, each
//! packed at the smallest uniform bit width that holds its largest value;
//! one block can be unpacked without touching the others, which is what
//! lets the store skip data under a sparse index.
//!
//! Differences are computed with wrapping arithmetic, so the encoding is
//! lossless for every `u64` input including adversarial ones; it is merely
//! ineffective when the input is noise.

use thiserror::Error;

/// Rows covered by one packed block. Block `k` holds the deltas for rows
/// `[128k, 128k+128)`; block 0 has one delta fewer because row 0 is the
/// base.
pub const BLOCK_ROWS: usize = 128;

const COLUMN_MAGIC: u8 = 0xD7;
const COLUMN_VERSION: u8 = 0x01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompressionError {
    #[error("cannot compress an empty column")]
    EmptyInput,
    #[error("corrupt block: {0}")]
    CorruptBlock(String),
}

/// First value plus signed consecutive differences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaStream {
    pub base: u64,
    pub deltas: Vec<i64>,
}

/// Differences are wrapping, so reconstruction is exact for any input.
pub fn delta_encode(ts: &[u64]) -> Result<DeltaStream, CompressionError> {
    let (&base, rest) = ts.split_first().ok_or(CompressionError::EmptyInput)?;
    let mut deltas = Vec::with_capacity(rest.len());
    let mut prev = base;
    for &v in rest {
        deltas.push(v.wrapping_sub(prev) as i64);
        prev = v;
    }
    Ok(DeltaStream { base, deltas })
}

pub fn delta_decode(s: &DeltaStream) -> Vec<u64> {
    let mut out = Vec::with_capacity(s.deltas.len() + 1);
    let mut cur = s.base;
    out.push(cur);
    for &d in &s.deltas {
        cur = cur.wrapping_add(d as u64);
        out.push(cur);
    }
    out
}

#[inline]
pub fn zigzag(d: i64) -> u64 {
    ((d << 1) ^ (d >> 63)) as u64
}

#[inline]
pub fn unzigzag(z: u64) -> i64 {
    ((z >> 1) as i64) ^ -((z & 1) as i64)
}

/// Up to 128 zigzagged deltas packed at one uniform bit width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBlock {
    count: u16,
    bit_width: u8,
    payload: Vec<u8>,
}

impl PackedBlock {
    fn pack(zz: &[u64]) -> PackedBlock {
        debug_assert!(!zz.is_empty() && zz.len() <= BLOCK_ROWS);
        let max = zz.iter().copied().max().unwrap_or(0);
        let bit_width = (64 - max.leading_zeros()) as u8;
        PackedBlock { count: zz.len() as u16, bit_width, payload: pack_bits(zz, bit_width) }
    }

    pub fn count(&self) -> usize {
        self.count as usize
    }

    pub fn bit_width(&self) -> u8 {
        self.bit_width
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    fn unpack(&self) -> Vec<u64> {
        unpack_bits(&self.payload, self.bit_width, self.count as usize)
    }

    fn serialized_len(&self) -> usize {
        2 + self.payload.len()
    }
}

fn pack_bits(values: &[u64], width: u8) -> Vec<u8> {
    let w = width as usize;
    let mut out = vec![0u8; (values.len() * w).div_ceil(8)];
    let mut bitpos = 0usize;
    for &v in values {
        let mut written = 0usize;
        while written < w {
            let byte = bitpos >> 3;
            let in_byte = bitpos & 7;
            let take = (8 - in_byte).min(w - written);
            let chunk = ((v >> written) & ((1u64 << take) - 1)) as u8;
            out[byte] |= chunk << in_byte;
            written += take;
            bitpos += take;
        }
    }
    out
}

fn unpack_bits(payload: &[u8], width: u8, count: usize) -> Vec<u64> {
    let w = width as usize;
    let mut out = Vec::with_capacity(count);
    if w == 0 {
        out.resize(count, 0);
        return out;
    }
    let mut bitpos = 0usize;
    for _ in 0..count {
        let mut v = 0u64;
        let mut read = 0usize;
        while read < w {
            let byte = bitpos >> 3;
            let in_byte = bitpos & 7;
            let take = (8 - in_byte).min(w - read);
            let chunk = (payload[byte] >> in_byte) as u64 & ((1u64 << take) - 1);
            v |= chunk << read;
            read += take;
            bitpos += take;
        }
        out.push(v);
    }
    out
}

/// A whole compressed timestamp column.
///
/// Serialized layout: magic `0xD7`, version `0x01`, `total_count` (8 bytes
/// LE), `base` (8 bytes LE), then per block a header of `count - 1` (1
/// byte) and `bit_width` (1 byte) followed by `ceil(count * width / 8)`
/// payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedColumn {
    base: u64,
    total_count: u64,
    blocks: Vec<PackedBlock>,
}

/// Per-block counts implied by the row-aligned layout for an n-row column.
fn expected_counts(n: u64) -> impl Iterator<Item = usize> {
    let first = (n.min(BLOCK_ROWS as u64)) as usize - 1;
    let mut remaining = n - n.min(BLOCK_ROWS as u64);
    let tail = std::iter::from_fn(move || {
        if remaining == 0 {
            return None;
        }
        let c = remaining.min(BLOCK_ROWS as u64) as usize;
        remaining -= c as u64;
        Some(c)
    });
    std::iter::once(first).filter(|&c| c > 0).chain(tail)
}

pub fn compress_column(ts: &[u64]) -> Result<CompressedColumn, CompressionError> {
    if ts.is_empty() {
        return Err(CompressionError::EmptyInput);
    }
    let n = ts.len();
    let base = ts[0];
    let block_count = n.div_ceil(BLOCK_ROWS);
    let spans: Vec<(usize, usize)> = (0..block_count)
        .map(|k| (k * BLOCK_ROWS, ((k + 1) * BLOCK_ROWS).min(n)))
        .filter(|(s, e)| if *s == 0 { e - s > 1 } else { true })
        .collect();

    let pack_span = |&(start, end): &(usize, usize)| -> PackedBlock {
        // Deltas for rows (start..end), each against its predecessor; for
        // the first block the predecessor of row 1 is the base.
        let lo = start.max(1);
        let zz: Vec<u64> = (lo..end)
            .map(|i| zigzag(ts[i].wrapping_sub(ts[i - 1]) as i64))
            .collect();
        PackedBlock::pack(&zz)
    };

    #[cfg(feature = "parallel")]
    let blocks: Vec<PackedBlock> = {
        use rayon::prelude::*;
        spans.par_iter().map(pack_span).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<PackedBlock> = spans.iter().map(pack_span).collect();

    Ok(CompressedColumn { base, total_count: n as u64, blocks })
}

pub fn decompress_column(c: &CompressedColumn) -> Result<Vec<u64>, CompressionError> {
    c.check_structure()?;
    let n = c.total_count as usize;
    let mut out = vec![0u64; n];

    // Unpack every block, then stitch prefix sums across block boundaries.
    #[cfg(feature = "parallel")]
    let unpacked: Vec<Vec<u64>> = {
        use rayon::prelude::*;
        c.blocks.par_iter().map(|b| b.unpack()).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let unpacked: Vec<Vec<u64>> = c.blocks.iter().map(|b| b.unpack()).collect();

    let mut starts = Vec::with_capacity(unpacked.len() + 1);
    let mut cur = c.base;
    starts.push(cur);
    for zz in &unpacked {
        for &z in zz {
            cur = cur.wrapping_add(unzigzag(z) as u64);
        }
        starts.push(cur);
    }

    out[0] = c.base;
    let fill = |(k, chunk): (usize, &mut [u64])| {
        let mut cur = starts[k];
        let zz = &unpacked[k];
        let skip = if k == 0 { 1 } else { 0 };
        for (slot, &z) in chunk.iter_mut().skip(skip).zip(zz.iter()) {
            cur = cur.wrapping_add(unzigzag(z) as u64);
            *slot = cur;
        }
        if k == 0 {
            chunk[0] = starts[0];
        }
    };

    if c.blocks.is_empty() {
        return Ok(out);
    }

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(BLOCK_ROWS).enumerate().for_each(fill);
    }
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(BLOCK_ROWS).enumerate().for_each(fill);

    Ok(out)
}

impl CompressedColumn {
    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn blocks(&self) -> &[PackedBlock] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        (self.total_count as usize).div_ceil(BLOCK_ROWS)
    }

    /// Row index range covered by block `k`.
    pub fn block_rows(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.total_count as usize;
        (k * BLOCK_ROWS).min(n)..((k + 1) * BLOCK_ROWS).min(n)
    }

    /// Decodes the rows of block `k` alone. `prev` must be the value of row
    /// `128k - 1`; it is ignored for block 0, whose first row is the base.
    pub fn decode_block(&self, k: usize, prev: u64) -> Result<Vec<u64>, CompressionError> {
        if k >= self.block_count() {
            return Err(CompressionError::CorruptBlock(format!(
                "block {} out of range for {} rows",
                k, self.total_count
            )));
        }
        let span = self.block_rows(k);
        let mut out = Vec::with_capacity(span.len());
        let mut cur = if k == 0 {
            out.push(self.base);
            self.base
        } else {
            prev
        };
        if self.total_count > 1 {
            for z in self.blocks[k].unpack() {
                cur = cur.wrapping_add(unzigzag(z) as u64);
                out.push(cur);
            }
        }
        debug_assert_eq!(out.len(), span.len());
        Ok(out)
    }

    pub fn serialized_size(&self) -> usize {
        18 + self.blocks.iter().map(|b| b.serialized_len()).sum::<usize>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_size());
        out.push(COLUMN_MAGIC);
        out.push(COLUMN_VERSION);
        out.extend_from_slice(&self.total_count.to_le_bytes());
        out.extend_from_slice(&self.base.to_le_bytes());
        for b in &self.blocks {
            out.push((b.count - 1) as u8);
            out.push(b.bit_width);
            out.extend_from_slice(&b.payload);
        }
        out
    }

    /// Parses a column from the front of `bytes`, returning it along with
    /// the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(CompressedColumn, usize), CompressionError> {
        let corrupt = |msg: &str| CompressionError::CorruptBlock(msg.to_string());
        if bytes.len() < 18 {
            return Err(corrupt("column header truncated"));
        }
        if bytes[0] != COLUMN_MAGIC {
            return Err(corrupt("bad column magic"));
        }
        if bytes[1] != COLUMN_VERSION {
            return Err(corrupt("unsupported column version"));
        }
        let total_count = u64::from_le_bytes(bytes[2..10].try_into().unwrap());
        let base = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
        if total_count == 0 {
            return Err(corrupt("column claims zero rows"));
        }
        let mut pos = 18usize;
        let mut blocks = Vec::new();
        for expected in expected_counts(total_count) {
            if bytes.len() < pos + 2 {
                return Err(corrupt("block header truncated"));
            }
            let count = bytes[pos] as usize + 1;
            let bit_width = bytes[pos + 1];
            pos += 2;
            if count != expected {
                return Err(corrupt(&format!(
                    "block holds {} deltas where the layout requires {}",
                    count, expected
                )));
            }
            if bit_width > 64 {
                return Err(corrupt("bit width exceeds 64"));
            }
            let len = (count * bit_width as usize).div_ceil(8);
            if bytes.len() < pos + len {
                return Err(corrupt("block payload truncated"));
            }
            blocks.push(PackedBlock {
                count: count as u16,
                bit_width,
                payload: bytes[pos..pos + len].to_vec(),
            });
            pos += len;
        }
        Ok((CompressedColumn { base, total_count, blocks }, pos))
    }

    fn check_structure(&self) -> Result<(), CompressionError> {
        let mut expected = expected_counts(self.total_count);
        for b in &self.blocks {
            let want = expected.next().ok_or_else(|| {
                CompressionError::CorruptBlock("more blocks than the row count implies".into())
            })?;
            if b.count as usize != want {
                return Err(CompressionError::CorruptBlock(format!(
                    "block holds {} deltas where the layout requires {}",
                    b.count, want
                )));
            }
            if b.payload.len() != (b.count as usize * b.bit_width as usize).div_ceil(8) {
                return Err(CompressionError::CorruptBlock("payload length mismatch".into()));
            }
        }
        if expected.next().is_some() {
            return Err(CompressionError::CorruptBlock(
                "fewer blocks than the row count implies".into(),
            ));
        }
        Ok(())
    }
}

/// Raw 8-bytes-per-row size divided by the serialized compressed size.
pub fn compression_ratio(c: &CompressedColumn) -> f64 {
    (c.total_count as f64 * 8.0) / c.serialized_size() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn delta_of_adjacent_minute_boundary() {
        let s = delta_encode(&[20230101125959, 20230101130000]).unwrap();
        assert_eq!(s.base, 20230101125959);
        assert_eq!(s.deltas, vec![4041]);
    }

    #[test]
    fn delta_rejects_empty_and_handles_singleton() {
        assert_eq!(delta_encode(&[]), Err(CompressionError::EmptyInput));
        let s = delta_encode(&[42]).unwrap();
        assert_eq!((s.base, s.deltas.len()), (42, 0));
        assert_eq!(delta_decode(&s), vec![42]);
    }

    #[test]
    fn delta_roundtrip_wraps_safely() {
        let ts = vec![u64::MAX, 0, 5, u64::MAX - 1, 7];
        assert_eq!(delta_decode(&delta_encode(&ts).unwrap()), ts);
    }

    #[test]
    fn zigzag_known_points() {
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
        assert_eq!(zigzag(i64::pow(2, 31)), u64::pow(2, 32));
        assert_eq!(zigzag(i64::MIN), u64::MAX);
        for d in [-3i64, -2, -1, 0, 1, 2, 3, i64::MAX, i64::MIN] {
            assert_eq!(unzigzag(zigzag(d)), d);
        }
    }

    #[test]
    fn zigzag_orders_by_magnitude() {
        // Small-magnitude deltas map to small unsigned values.
        assert!(zigzag(-1) < zigzag(2));
        assert!(zigzag(3) < zigzag(-4));
    }

    #[test]
    fn constant_column_is_one_empty_block() {
        let ts = vec![20230101120000u64; 128];
        let c = compress_column(&ts).unwrap();
        assert_eq!(c.blocks().len(), 1);
        assert_eq!(c.blocks()[0].count(), 127);
        assert_eq!(c.blocks()[0].bit_width(), 0);
        assert_eq!(c.blocks()[0].payload().len(), 0);
        assert_eq!(decompress_column(&c).unwrap(), ts);
    }

    #[test]
    fn stepping_column_splits_on_row_alignment() {
        let ts: Vec<u64> = (0..129).map(|i| 20230101120000 + i).collect();
        let c = compress_column(&ts).unwrap();
        let widths: Vec<u8> = c.blocks().iter().map(|b| b.bit_width()).collect();
        assert_eq!(widths, vec![2, 2]);
        let counts: Vec<usize> = c.blocks().iter().map(|b| b.count()).collect();
        assert_eq!(counts, vec![127, 1]);
        assert_eq!(decompress_column(&c).unwrap(), ts);
    }

    #[test]
    fn single_row_column_has_no_blocks() {
        let c = compress_column(&[20230101120000]).unwrap();
        assert_eq!(c.blocks().len(), 0);
        assert_eq!(c.total_count(), 1);
        assert_eq!(decompress_column(&c).unwrap(), vec![20230101120000]);
        assert_eq!(c.serialized_size(), 18);
    }

    #[test]
    fn block_widths_are_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ts = vec![20230101000000u64];
        for _ in 0..1000 {
            ts.push(ts.last().unwrap() + rng.next_u64() % 3000);
        }
        let c = compress_column(&ts).unwrap();
        let mut row = 1usize;
        for b in c.blocks() {
            let max_zz = (row..row + b.count())
                .map(|i| zigzag(ts[i].wrapping_sub(ts[i - 1]) as i64))
                .max()
                .unwrap();
            let min_width = (64 - max_zz.leading_zeros()) as u8;
            assert_eq!(b.bit_width(), min_width);
            row += b.count();
        }
    }

    #[test]
    fn width_zero_full_block_ratio_matches_layout_arithmetic() {
        // 128 equal rows serialize to the 18-byte column header plus one
        // 2-byte block header and no payload: 1024 / 20 = 51.2.
        let ts = vec![77u64; 128];
        let c = compress_column(&ts).unwrap();
        assert_eq!(c.serialized_size(), 20);
        let ratio = compression_ratio(&c);
        assert!((ratio - 51.2).abs() < 1e-9, "got {}", ratio);
    }

    #[test]
    fn per_second_day_compresses_at_least_4x() {
        let mut ts = Vec::with_capacity(86_400);
        let mut t = 20230101000000u64;
        for _ in 0..86_400 {
            ts.push(t);
            // Step one second with decimal carries.
            let s = t % 100;
            t = if s < 59 {
                t + 1
            } else {
                let m = (t / 100) % 100;
                if m < 59 {
                    t + 41
                } else {
                    t + 4041
                }
            };
        }
        let c = compress_column(&ts).unwrap();
        let ratio = compression_ratio(&c);
        assert!(ratio >= 4.0, "full-day ratio {}", ratio);
        assert_eq!(decompress_column(&c).unwrap(), ts);
    }

    #[test]
    fn random_noise_does_not_inflate_much() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ts: Vec<u64> = (0..4096).map(|_| rng.next_u64()).collect();
        let c = compress_column(&ts).unwrap();
        let ratio = compression_ratio(&c);
        assert!(ratio <= 1.1, "noise ratio {}", ratio);
        assert_eq!(decompress_column(&c).unwrap(), ts);
    }

    #[test]
    fn serialized_layout_is_stable() {
        let ts: Vec<u64> = (0..130).map(|i| 1000 + i * 2).collect();
        let c = compress_column(&ts).unwrap();
        let bytes = c.to_bytes();
        assert_eq!(bytes[0], 0xD7);
        assert_eq!(bytes[1], 0x01);
        assert_eq!(u64::from_le_bytes(bytes[2..10].try_into().unwrap()), 130);
        assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 1000);
        assert_eq!(bytes[18], 126); // block 0 stores count - 1
        assert_eq!(bytes.len(), c.serialized_size());

        let (back, used) = CompressedColumn::from_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, c);
        assert_eq!(decompress_column(&back).unwrap(), ts);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let ts: Vec<u64> = (0..200).map(|i| 5000 + i * 3).collect();
        let bytes = compress_column(&ts).unwrap().to_bytes();
        for cut in [bytes.len() - 1, 19, 17, 3] {
            let err = CompressedColumn::from_bytes(&bytes[..cut]);
            assert!(matches!(err, Err(CompressionError::CorruptBlock(_))), "cut {}", cut);
        }
        let mut bad_magic = bytes.clone();
        bad_magic[0] = 0x00;
        assert!(CompressedColumn::from_bytes(&bad_magic).is_err());
    }

    #[test]
    fn decode_block_matches_full_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut ts = vec![2023060100000000000u64];
        for _ in 0..1000 {
            ts.push(ts.last().unwrap() + 1 + rng.next_u64() % 90_000);
        }
        let c = compress_column(&ts).unwrap();
        let full = decompress_column(&c).unwrap();
        for k in 0..c.block_count() {
            let span = c.block_rows(k);
            let prev = if k == 0 { 0 } else { full[span.start - 1] };
            assert_eq!(c.decode_block(k, prev).unwrap(), &full[span.clone()]);
        }
        assert!(c.decode_block(c.block_count(), 0).is_err());
    }

    #[test]
    fn lossless_on_random_monotone_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..300 {
            let len = 1 + (rng.next_u64() % 400) as usize;
            let mut ts = vec![rng.next_u64() % 1_000_000_000];
            for _ in 1..len {
                ts.push(ts.last().unwrap() + rng.next_u64() % 10_000);
            }
            let c = compress_column(&ts).unwrap();
            assert_eq!(decompress_column(&c).unwrap(), ts);
            let bytes = c.to_bytes();
            let (back, _) = CompressedColumn::from_bytes(&bytes).unwrap();
            assert_eq!(decompress_column(&back).unwrap(), ts);
        }
    }
}
