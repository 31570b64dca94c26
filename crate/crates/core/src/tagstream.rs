//! Time-tag streams and the `.bpl` file format.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "BPL1"
//!      4     2  version (1)
//!      6     2  reserved (0)
//!      8     8  record count
//!     16   9*n  records: u8 channel, u64 timestamp [ps]
//! ```
//!
//! Timestamps have a fixed 1 ps resolution.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"BPL1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 9;
/// Timestamp resolution of format version 1 [ps].
pub const RESOLUTION_PS: u64 = 1;

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TimeTag {
    pub channel: u8,
    /// Detection time [ps].
    pub timestamp: u64,
}

impl TimeTag {
    pub fn new(channel: u8, timestamp: u64) -> Self {
        TimeTag { channel, timestamp }
    }
}

/// An ordered sequence of detection events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagStream {
    tags: Vec<TimeTag>,
}

impl TagStream {
    pub fn new(tags: Vec<TimeTag>) -> Self {
        TagStream { tags }
    }

    pub fn tags(&self) -> &[TimeTag] {
        &self.tags
    }

    pub fn into_tags(self) -> Vec<TimeTag> {
        self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Distinct channel ids present in the stream.
    pub fn channels(&self) -> BTreeSet<u8> {
        self.tags.iter().map(|t| t.channel).collect()
    }

    /// Timestamps of one channel, in stream order.
    pub fn channel_times(&self, channel: u8) -> Vec<u64> {
        self.tags
            .iter()
            .filter(|t| t.channel == channel)
            .map(|t| t.timestamp)
            .collect()
    }

    pub fn count(&self, channel: u8) -> usize {
        self.tags.iter().filter(|t| t.channel == channel).count()
    }

    /// Time between the first and the last tag [ps], or 0 for fewer than two tags.
    pub fn span_ps(&self) -> u64 {
        let min = self.tags.iter().map(|t| t.timestamp).min();
        let max = self.tags.iter().map(|t| t.timestamp).max();
        match (min, max) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// True when every channel's timestamps are nondecreasing.
    pub fn is_channel_sorted(&self) -> bool {
        let mut last = [None::<u64>; 256];
        self.tags.iter().all(|t| {
            let slot = &mut last[t.channel as usize];
            let ok = slot.is_none_or(|prev| prev <= t.timestamp);
            *slot = Some(t.timestamp);
            ok
        })
    }

    /// True when the whole stream is nondecreasing in time.
    pub fn is_time_sorted(&self) -> bool {
        self.tags.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }
}

impl FromIterator<TimeTag> for TagStream {
    fn from_iter<I: IntoIterator<Item = TimeTag>>(iter: I) -> Self {
        TagStream::new(iter.into_iter().collect())
    }
}

/// Encodes `stream` and returns the number of bytes written.
pub fn write_stream<W: Write>(stream: &TagStream, mut sink: W) -> Result<u64> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[8..16].copy_from_slice(&(stream.len() as u64).to_le_bytes());
    sink.write_all(&header)?;

    let mut buf = Vec::with_capacity(RECORD_LEN * 8192);
    for chunk in stream.tags.chunks(8192) {
        buf.clear();
        for tag in chunk {
            buf.push(tag.channel);
            buf.extend_from_slice(&tag.timestamp.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok((HEADER_LEN + RECORD_LEN * stream.len()) as u64)
}

/// Decodes a stream written by [`write_stream`].
pub fn read_stream<R: Read>(mut source: R) -> Result<TagStream> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Decodes a complete in-memory `.bpl` image.
pub fn decode(bytes: &[u8]) -> Result<TagStream> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[0..4] != MAGIC {
            return Err(Error::BadMagic { found: bytes[0..4].try_into().unwrap() });
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    let expected = count.saturating_mul(RECORD_LEN as u64);
    let found = body.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes(found - expected));
    }
    let tags = body
        .chunks_exact(RECORD_LEN)
        .map(|r| TimeTag {
            channel: r[0],
            timestamp: u64::from_le_bytes(r[1..9].try_into().unwrap()),
        })
        .collect();
    Ok(TagStream { tags })
}

/// Reads `channel,timestamp_ps` rows. A header line is optional.
pub fn read_csv<R: Read>(source: R) -> Result<TagStream> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let mut tags = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let record = record.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        if record.len() != 2 {
            return Err(Error::Csv {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        if i == 0 && &record[0] == "channel" {
            continue;
        }
        let channel = record[0].parse::<u8>().map_err(|e| Error::Csv {
            line,
            message: format!("channel {:?}: {e}", &record[0]),
        })?;
        let timestamp = record[1].parse::<u64>().map_err(|e| Error::Csv {
            line,
            message: format!("timestamp {:?}: {e}", &record[1]),
        })?;
        tags.push(TimeTag { channel, timestamp });
    }
    Ok(TagStream { tags })
}

pub fn write_csv<W: Write>(stream: &TagStream, mut sink: W) -> Result<()> {
    writeln!(sink, "channel,timestamp_ps")?;
    for t in &stream.tags {
        writeln!(sink, "{},{}", t.channel, t.timestamp)?;
    }
    sink.flush()?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a `.bpl` file, or a CSV file when the extension is `.csv`.
pub fn load(path: &Path) -> Result<TagStream> {
    if is_csv(path) {
        read_csv(BufReader::new(File::open(path)?))
    } else {
        let bytes = std::fs::read(path)?;
        decode(&bytes)
    }
}

/// Saves in the format implied by the extension (`.csv` or binary).
pub fn save(stream: &TagStream, path: &Path) -> Result<u64> {
    let file = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_csv(stream, file)?;
        Ok(std::fs::metadata(path)?.len())
    } else {
        write_stream(stream, file)
    }
}

/// Merges streams into one globally time-sorted stream.
///
/// Each input only needs to be sorted per channel. Ties are broken by
/// `(timestamp, channel, input index)` and are otherwise stable.
pub fn merge_sorted(streams: &[TagStream]) -> TagStream {
    // Split every input into its per-channel runs, then k-way merge the runs.
    let mut runs: Vec<(u8, usize, Vec<u64>)> = Vec::new();
    for (input, stream) in streams.iter().enumerate() {
        let mut by_channel: Vec<Vec<u64>> = vec![Vec::new(); 256];
        for t in &stream.tags {
            by_channel[t.channel as usize].push(t.timestamp);
        }
        for (ch, times) in by_channel.into_iter().enumerate() {
            if !times.is_empty() {
                runs.push((ch as u8, input, times));
            }
        }
    }

    let total = runs.iter().map(|r| r.2.len()).sum();
    let mut out = Vec::with_capacity(total);
    // Heap key: (timestamp, channel, input, run index); run index is unique
    // per (channel, input), so the order is total.
    let mut heap = BinaryHeap::with_capacity(runs.len());
    let mut cursor = vec![0usize; runs.len()];
    for (r, (ch, input, times)) in runs.iter().enumerate() {
        heap.push(Reverse((times[0], *ch, *input, r)));
    }
    while let Some(Reverse((ts, ch, input, r))) = heap.pop() {
        out.push(TimeTag { channel: ch, timestamp: ts });
        cursor[r] += 1;
        if let Some(&next) = runs[r].2.get(cursor[r]) {
            heap.push(Reverse((next, ch, input, r)));
        }
    }
    TagStream { tags: out }
}
