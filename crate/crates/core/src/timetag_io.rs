//! Time-tag files.
//!
//! Binary layout (`NPTT`, version 1, all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"NPTT"`                         |
//! | 4      | 2    | format version (`1`)                    |
//! | 6      | 2    | channel count (`2`)                     |
//! | 8      | 8    | run duration, ps                        |
//! | 16     | 8    | seed                                    |
//! | 24     | 32   | SHA-256 digest of the run inputs        |
//! | 56     | 8    | record count                            |
//! | 64     | 9·n  | records: channel `u8`, timestamp `u64`  |
//!
//! Records are ordered by timestamp; on equal timestamps the detector
//! (channel 0) precedes the sync (channel 1). An empty stream is a 64-byte
//! header-only file.
//!
//! CSV form: optional first line `# duration_ps=<u64> seed=<u64> digest=<hex>`,
//! then the header `channel,timestamp_ps` and one record per line. Without the
//! comment line the duration is the last timestamp and the metadata is zero.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::procsim::{StreamMetadata, TimeTagStream};
use crate::Picos;

pub const MAGIC: [u8; 4] = *b"NPTT";
pub const FORMAT_VERSION: u16 = 1;
pub const CHANNEL_COUNT: u16 = 2;
pub const HEADER_LEN: usize = 64;
pub const RECORD_LEN: usize = 9;
pub const DETECTOR_CHANNEL: u8 = 0;
pub const SYNC_CHANNEL: u8 = 1;
pub const CSV_HEADER: &str = "channel,timestamp_ps";

#[derive(Debug, Error)]
pub enum TimeTagError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("format: {0}")]
    Format(String),
    #[error("record {index}: {reason}")]
    Validation { index: usize, reason: String },
}

/// Channel/timestamp pairs in canonical file order.
pub fn records(stream: &TimeTagStream) -> Vec<(u8, Picos)> {
    let (d, s) = (&stream.detector_events, &stream.sync_events);
    let mut out = Vec::with_capacity(d.len() + s.len());
    let (mut i, mut j) = (0, 0);
    while i < d.len() || j < s.len() {
        if j >= s.len() || (i < d.len() && d[i] <= s[j]) {
            out.push((DETECTOR_CHANNEL, d[i]));
            i += 1;
        } else {
            out.push((SYNC_CHANNEL, s[j]));
            j += 1;
        }
    }
    out
}

pub fn encode(stream: &TimeTagStream) -> Vec<u8> {
    let recs = records(stream);
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * recs.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&CHANNEL_COUNT.to_le_bytes());
    out.extend_from_slice(&stream.duration.to_le_bytes());
    out.extend_from_slice(&stream.metadata.seed.to_le_bytes());
    out.extend_from_slice(&stream.metadata.digest);
    out.extend_from_slice(&(recs.len() as u64).to_le_bytes());
    for (channel, t) in recs {
        out.push(channel);
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<TimeTagStream, TimeTagError> {
    if bytes.len() < HEADER_LEN {
        return Err(TimeTagError::Format(format!(
            "file too short for a header ({} bytes)",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(TimeTagError::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(TimeTagError::Format(format!("unsupported version {version}")));
    }
    let channels = u16::from_le_bytes([bytes[6], bytes[7]]);
    if channels != CHANNEL_COUNT {
        return Err(TimeTagError::Format(format!("unsupported channel count {channels}")));
    }
    let duration = u64_at(bytes, 8);
    let seed = u64_at(bytes, 16);
    let digest: [u8; 32] = bytes[24..56].try_into().expect("32 bytes");
    let count = u64_at(bytes, 56);
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(RECORD_LEN) || (body.len() / RECORD_LEN) as u64 != count {
        return Err(TimeTagError::Format(format!(
            "header promises {count} records, body holds {} bytes",
            body.len()
        )));
    }
    let recs = body
        .chunks_exact(RECORD_LEN)
        .map(|r| (r[0], u64::from_le_bytes(r[1..].try_into().expect("8 bytes"))));
    assemble(recs, duration, StreamMetadata { seed, digest })
}

/// Validates records in file order and splits them into channels.
fn assemble(
    recs: impl IntoIterator<Item = (u8, Picos)>,
    duration: Picos,
    metadata: StreamMetadata,
) -> Result<TimeTagStream, TimeTagError> {
    let mut stream = TimeTagStream {
        duration,
        metadata,
        ..Default::default()
    };
    let mut previous: Option<Picos> = None;
    for (index, (channel, t)) in recs.into_iter().enumerate() {
        let fail = |reason: String| Err(TimeTagError::Validation { index, reason });
        if previous.is_some_and(|p| t < p) {
            return fail(format!("timestamp {t} ps precedes the previous record"));
        }
        if t > duration {
            return fail(format!("timestamp {t} ps is after the end of the run ({duration} ps)"));
        }
        let lane = match channel {
            DETECTOR_CHANNEL => &mut stream.detector_events,
            SYNC_CHANNEL => &mut stream.sync_events,
            other => return fail(format!("unknown channel {other}")),
        };
        if lane.last().is_some_and(|&p| p == t) {
            return fail(format!("duplicate timestamp {t} ps on channel {channel}"));
        }
        lane.push(t);
        previous = Some(t);
    }
    Ok(stream)
}

pub fn to_csv(stream: &TimeTagStream) -> String {
    use std::fmt::Write;
    let mut out = format!(
        "# duration_ps={} seed={} digest={}\n{CSV_HEADER}\n",
        stream.duration,
        stream.metadata.seed,
        stream.metadata.digest_hex()
    );
    for (c, t) in records(stream) {
        writeln!(out, "{c},{t}").expect("string write");
    }
    out
}

pub fn parse_csv(text: &str) -> Result<TimeTagStream, TimeTagError> {
    let mut lines = text.lines().peekable();
    let mut duration = None;
    let mut metadata = StreamMetadata::default();
    if let Some(first) = lines.peek().filter(|l| l.starts_with('#')) {
        for field in first.trim_start_matches('#').split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| TimeTagError::Format(format!("bad metadata field `{field}`")))?;
            let bad = || TimeTagError::Format(format!("bad metadata value `{field}`"));
            match key {
                "duration_ps" => duration = Some(value.parse().map_err(|_| bad())?),
                "seed" => metadata.seed = value.parse().map_err(|_| bad())?,
                "digest" => {
                    let raw = hex::decode(value).map_err(|_| bad())?;
                    metadata.digest = raw.try_into().map_err(|_| bad())?;
                }
                _ => return Err(TimeTagError::Format(format!("unknown metadata key `{key}`"))),
            }
        }
        lines.next();
    }
    match lines.next().map(str::trim) {
        Some(CSV_HEADER) => {}
        other => {
            return Err(TimeTagError::Format(format!(
                "expected header `{CSV_HEADER}`, found {other:?}"
            )))
        }
    }
    let mut recs = Vec::new();
    for (index, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let bad = || TimeTagError::Validation {
            index,
            reason: format!("malformed record `{line}`"),
        };
        let (c, t) = line.trim().split_once(',').ok_or_else(bad)?;
        recs.push((c.trim().parse::<u8>().map_err(|_| bad())?, t.trim().parse::<u64>().map_err(|_| bad())?));
    }
    let duration = duration.unwrap_or_else(|| recs.iter().map(|r| r.1).max().unwrap_or(0));
    assemble(recs, duration, metadata)
}

/// Writes the canonical binary encoding.
pub fn write_stream(stream: &TimeTagStream, path: &Path) -> Result<(), TimeTagError> {
    fs::write(path, encode(stream))?;
    Ok(())
}

pub fn write_csv(stream: &TimeTagStream, path: &Path) -> Result<(), TimeTagError> {
    fs::write(path, to_csv(stream))?;
    Ok(())
}

/// Reads a binary or CSV file; the format is recognised by the magic bytes.
pub fn read_stream(path: &Path) -> Result<TimeTagStream, TimeTagError> {
    let bytes = fs::read(path)?;
    from_bytes(&bytes)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TimeTagStream, TimeTagError> {
    if bytes.starts_with(&MAGIC) {
        return decode(bytes);
    }
    let looks_textual = bytes
        .iter()
        .take(64)
        .all(|b| b.is_ascii_graphic() || b.is_ascii_whitespace());
    match std::str::from_utf8(bytes) {
        Ok(text) if looks_textual => parse_csv(text),
        _ => decode(bytes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TimeTagStream {
        TimeTagStream {
            detector_events: vec![5, 100, 2_000],
            sync_events: vec![0, 100, 1_000],
            duration: 3_000,
            metadata: StreamMetadata {
                seed: 42,
                digest: [7; 32],
            },
        }
    }

    #[test]
    fn empty_stream_is_header_only() {
        let bytes = encode(&TimeTagStream::default());
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(decode(&bytes).unwrap(), TimeTagStream::default());
    }

    #[test]
    fn binary_round_trip_and_canonical_order() {
        let s = sample();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 6 * RECORD_LEN);
        assert_eq!(decode(&bytes).unwrap(), s);
        assert_eq!(encode(&s), bytes);
        let order: Vec<(u8, u64)> = records(&s);
        assert_eq!(order, vec![(1, 0), (0, 5), (0, 100), (1, 100), (1, 1_000), (0, 2_000)]);
    }

    #[test]
    fn csv_round_trip_and_cross_format() {
        let s = sample();
        let text = to_csv(&s);
        assert_eq!(parse_csv(&text).unwrap(), s);
        assert_eq!(from_bytes(text.as_bytes()).unwrap(), from_bytes(&encode(&s)).unwrap());
    }

    #[test]
    fn bare_csv_with_three_records() {
        let s = parse_csv("channel,timestamp_ps\n0,10\n1,20\n0,30\n").unwrap();
        assert_eq!(s.detector_events, vec![10, 30]);
        assert_eq!(s.sync_events, vec![20]);
        assert_eq!(s.duration, 30);
    }

    #[test]
    fn rejects_bad_magic_version_and_order() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(TimeTagError::Format(_))));
        let mut bytes = encode(&sample());
        bytes[4] = 9;
        assert!(matches!(decode(&bytes), Err(TimeTagError::Format(_))));
        let err = parse_csv("channel,timestamp_ps\n0,10\n0,30\n1,20\n").unwrap_err();
        assert!(matches!(err, TimeTagError::Validation { index: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("record 2"));
        let dup = parse_csv("channel,timestamp_ps\n0,10\n0,10\n").unwrap_err();
        assert!(matches!(dup, TimeTagError::Validation { index: 1, .. }));
        let chan = parse_csv("channel,timestamp_ps\n4,10\n").unwrap_err();
        assert!(matches!(chan, TimeTagError::Validation { index: 0, .. }));
    }

    #[test]
    fn truncated_body_is_a_format_error() {
        let bytes = encode(&sample());
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(TimeTagError::Format(_))
        ));
    }
}
