//! Seeded synthetic datasets for tests and demos.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LabeledDataset, TimeSeriesInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Two classes: noisy sine waves vs. square waves of the same period.
    SineSquare,
    /// Three classes: cylinder, bell and funnel shaped bumps.
    Cbf,
}

impl SynthKind {
    pub fn class_count(self) -> usize {
        match self {
            SynthKind::SineSquare => 2,
            SynthKind::Cbf => 3,
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine-square" => Ok(SynthKind::SineSquare),
            "cbf" => Ok(SynthKind::Cbf),
            other => Err(Error::InvalidValue(format!("unknown synthetic dataset `{other}`"))),
        }
    }
}

/// `count` instances with labels assigned round-robin over the classes.
pub fn generate(kind: SynthKind, length: usize, channels: usize, count: usize, seed: u64) -> Result<LabeledDataset> {
    if length < 8 || channels == 0 {
        return Err(Error::InvalidValue("synthetic series need L >= 8 and C >= 1".into()));
    }
    let k = kind.class_count();
    if count < k {
        return Err(Error::InvalidValue(format!("need at least {k} instances")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances = (0..count)
        .map(|i| {
            let label = i % k;
            let chans: Vec<Vec<f64>> = (0..channels)
                .map(|c| match kind {
                    SynthKind::SineSquare => sine_square(&mut rng, length, c, label),
                    SynthKind::Cbf => cbf(&mut rng, length, label),
                })
                .collect();
            TimeSeriesInstance::from_channels(&chans).map(|x| x.with_label(label))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(instances, k)
}

/// Train and test splits drawn from disjoint seeds.
pub fn generate_split(
    kind: SynthKind,
    length: usize,
    channels: usize,
    train: usize,
    test: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    Ok((
        generate(kind, length, channels, train, seed)?,
        generate(kind, length, channels, test, seed ^ 0x9E37_79B9_7F4A_7C15)?,
    ))
}

fn sine_square(rng: &mut ChaCha8Rng, length: usize, channel: usize, label: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, 0.15).expect("valid sigma");
    let phase = channel as f64 * PI / 4.0 + rng.gen_range(-0.3..0.3);
    let amplitude = rng.gen_range(0.8..1.2);
    (0..length)
        .map(|t| {
            let s = (2.0 * PI * 2.0 * t as f64 / length as f64 + phase).sin();
            let shape = if label == 0 { s } else { s.signum() };
            amplitude * shape + noise.sample(rng)
        })
        .collect()
}

fn cbf(rng: &mut ChaCha8Rng, length: usize, label: usize) -> Vec<f64> {
    let std = Normal::new(0.0, 1.0).expect("valid sigma");
    let scale = length as f64 / 128.0;
    let a = rng.gen_range(16.0..32.0) * scale;
    let b = (a + rng.gen_range(32.0..96.0) * scale).min(length as f64 - 1.0);
    let height = 6.0 + std.sample(rng);
    (0..length)
        .map(|t| {
            let t = t as f64;
            let inside = t >= a && t <= b;
            let shape = if !inside {
                0.0
            } else {
                match label {
                    0 => 1.0,
                    1 => (t - a) / (b - a),
                    _ => (b - t) / (b - a),
                }
            };
            height * shape + std.sample(rng)
        })
        .collect()
}
