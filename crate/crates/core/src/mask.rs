//! Change masks and the subsequence algebra used by the mutation operators.
//!
//! A mask selects which cells of the query are replaced by the NUN's values.
//! Bits are packed channel-major (channel 0's `length` bits first); this is
//! also the flattening order seen by single-point crossover. A common mask is
//! stored as a single channel and activates whole time rows when applied.

use std::fmt;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeriesInstance;

pub type MaskBits = BitVec<u64, Lsb0>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    /// One bit per time step, shared by every channel.
    Common,
    /// One bit per (time step, channel) cell.
    Independent,
}

/// A maximal run of active cells `[start, start + length)` in one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[usize; 3]", from = "[usize; 3]")]
pub struct Subsequence {
    pub start: usize,
    pub channel: usize,
    pub length: usize,
}

impl Subsequence {
    pub fn new(start: usize, channel: usize, length: usize) -> Self {
        Self {
            start,
            channel,
            length,
        }
    }

    /// One past the last active time index.
    pub fn end(&self) -> usize {
        self.start + self.length
    }

    pub fn last(&self) -> usize {
        self.end() - 1
    }
}

impl From<Subsequence> for [usize; 3] {
    fn from(s: Subsequence) -> Self {
        [s.start, s.channel, s.length]
    }
}

impl From<[usize; 3]> for Subsequence {
    fn from([start, channel, length]: [usize; 3]) -> Self {
        Subsequence::new(start, channel, length)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChangeMask {
    kind: MaskKind,
    length: usize,
    channels: usize,
    bits: MaskBits,
}

impl fmt::Debug for ChangeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChangeMask({:?}, L={}, C={}, ", self.kind, self.length, self.channels)?;
        for c in 0..self.channels {
            if c > 0 {
                f.write_str("|")?;
            }
            for t in 0..self.length {
                f.write_str(if self.get(t, c) { "1" } else { "0" })?;
            }
        }
        f.write_str(")")
    }
}

impl ChangeMask {
    /// All-zero mask. `channels` is ignored for common masks.
    pub fn zeros(kind: MaskKind, length: usize, channels: usize) -> Self {
        let channels = match kind {
            MaskKind::Common => 1,
            MaskKind::Independent => channels,
        };
        Self {
            kind,
            length,
            channels,
            bits: bitvec![u64, Lsb0; 0; length * channels],
        }
    }

    pub fn ones(kind: MaskKind, length: usize, channels: usize) -> Self {
        let mut m = Self::zeros(kind, length, channels);
        m.bits.fill(true);
        m
    }

    /// Builds a mask from channel-major bits.
    pub fn from_bits(kind: MaskKind, length: usize, channels: usize, bits: &[bool]) -> Result<Self> {
        let mut m = Self::zeros(kind, length, channels);
        if bits.len() != m.bits.len() {
            return Err(Error::dims(m.bits.len(), bits.len()));
        }
        for (i, b) in bits.iter().enumerate() {
            m.bits.set(i, *b);
        }
        Ok(m)
    }

    /// Parses a common mask from a string of `0`/`1` characters.
    pub fn common_from_str(s: &str) -> Result<Self> {
        let bits = parse_bits(s)?;
        Self::from_bits(MaskKind::Common, bits.len(), 1, &bits)
    }

    /// Parses an independent mask from one `0`/`1` string per channel.
    pub fn independent_from_strs(rows: &[&str]) -> Result<Self> {
        let length = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut bits = Vec::with_capacity(length * rows.len());
        for r in rows {
            if r.len() != length {
                return Err(Error::dims(length, r.len()));
            }
            bits.extend(parse_bits(r)?);
        }
        Self::from_bits(MaskKind::Independent, length, rows.len(), &bits)
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Stored channel count (1 for common masks).
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of genome positions: `L` for common, `L·C` for independent masks.
    pub fn positions(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut BitSlice<u64, Lsb0> {
        &mut self.bits
    }

    pub fn get(&self, time: usize, channel: usize) -> bool {
        self.bits[channel * self.length + time]
    }

    pub fn set(&mut self, time: usize, channel: usize, value: bool) {
        let idx = channel * self.length + time;
        self.bits.set(idx, value);
    }

    pub fn popcount(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn same_layout(&self, other: &ChangeMask) -> bool {
        self.kind == other.kind && self.length == other.length && self.channels == other.channels
    }

    /// Maximal runs of ones along the time axis, sorted by `(channel, start)`.
    pub fn decompose(&self) -> Vec<Subsequence> {
        let mut subs = Vec::new();
        for c in 0..self.channels {
            let row = &self.bits[c * self.length..(c + 1) * self.length];
            let mut t = 0;
            while let Some(off) = row[t..].first_one() {
                let start = t + off;
                let run = row[start..].first_zero().unwrap_or(self.length - start);
                subs.push(Subsequence::new(start, c, run));
                t = start + run;
                if t >= self.length {
                    break;
                }
            }
        }
        subs
    }

    /// Union of the supports of `subs`.
    pub fn reconstruct(subs: &[Subsequence], kind: MaskKind, length: usize, channels: usize) -> Result<Self> {
        let mut m = Self::zeros(kind, length, channels);
        for s in subs {
            if s.length == 0 || s.end() > length || s.channel >= m.channels {
                return Err(Error::OutOfBounds(format!(
                    "({}, {}, {}) does not fit L={length}, C={}",
                    s.start, s.channel, s.length, m.channels
                )));
            }
            let base = s.channel * length;
            m.bits[base + s.start..base + s.end()].fill(true);
        }
        Ok(m)
    }

    /// Number of maximal runs, counting one that starts at time 0.
    pub fn count_subsequences(&self) -> usize {
        let mut count = 0;
        for c in 0..self.channels {
            let row = &self.bits[c * self.length..(c + 1) * self.length];
            let mut prev = false;
            for b in row.iter().by_vals() {
                if b && !prev {
                    count += 1;
                }
                prev = b;
            }
        }
        count
    }

    /// Expands a common mask to an independent `L×C` mask with each time row
    /// replicated across channels. Independent masks with matching channel
    /// count are returned unchanged.
    pub fn broadcast(&self, channels: usize) -> Result<ChangeMask> {
        match self.kind {
            MaskKind::Independent => {
                if self.channels != channels {
                    return Err(Error::dims(channels, self.channels));
                }
                Ok(self.clone())
            }
            MaskKind::Common => {
                let mut bits = MaskBits::with_capacity(self.length * channels);
                for _ in 0..channels {
                    bits.extend_from_bitslice(&self.bits);
                }
                Ok(ChangeMask {
                    kind: MaskKind::Independent,
                    length: self.length,
                    channels,
                    bits,
                })
            }
        }
    }

    /// Substitutes `nun` values into `x` wherever the mask is active.
    pub fn apply(&self, x: &TimeSeriesInstance, nun: &TimeSeriesInstance) -> Result<TimeSeriesInstance> {
        let (length, channels) = x.shape();
        nun.check_shape(length, channels)?;
        if self.length != length || (self.kind == MaskKind::Independent && self.channels != channels) {
            return Err(Error::dims(
                format!("mask for {length}x{channels}"),
                format!("{:?} mask {}x{}", self.kind, self.length, self.channels),
            ));
        }
        let mut values = x.values().to_vec();
        let donor = nun.values();
        for c in 0..channels {
            let mask_row = match self.kind {
                MaskKind::Common => 0,
                MaskKind::Independent => c,
            };
            let row = &self.bits[mask_row * length..(mask_row + 1) * length];
            for t in row.iter_ones() {
                let idx = c * length + t;
                values[idx] = donor[idx];
            }
        }
        Ok(TimeSeriesInstance::from_parts_unchecked(length, channels, values))
    }

    /// Mask as `0`/`1` strings, one per stored channel.
    pub fn to_strings(&self) -> Vec<String> {
        (0..self.channels)
            .map(|c| (0..self.length).map(|t| if self.get(t, c) { '1' } else { '0' }).collect())
            .collect()
    }
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidValue(format!("mask character `{other}`"))),
        })
        .collect()
}

/// Run-length form of a mask as written to front files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMask {
    pub kind: MaskKind,
    pub length: usize,
    pub channels: usize,
    pub subsequences: Vec<Subsequence>,
}

impl From<&ChangeMask> for EncodedMask {
    fn from(m: &ChangeMask) -> Self {
        EncodedMask {
            kind: m.kind,
            length: m.length,
            channels: m.channels,
            subsequences: m.decompose(),
        }
    }
}

impl TryFrom<EncodedMask> for ChangeMask {
    type Error = Error;

    fn try_from(e: EncodedMask) -> Result<Self> {
        ChangeMask::reconstruct(&e.subsequences, e.kind, e.length, e.channels)
    }
}

impl Serialize for ChangeMask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        EncodedMask::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChangeMask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let enc = EncodedMask::deserialize(deserializer)?;
        ChangeMask::try_from(enc).map_err(serde::de::Error::custom)
    }
}
