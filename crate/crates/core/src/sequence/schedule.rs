use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{meta, ArrayData, Meta};
use crate::{Error, Result};

pub const FA_MAX_DEG: f64 = 74.0;
pub const TR_MIN_MS: f64 = 12.1;
pub const TR_MAX_MS: f64 = 15.0;
pub const TE_MS: f64 = 2.0;
pub const TI_MS: f64 = 21.0;

const LOBE_MIN: usize = 100;
const LOBE_MAX: usize = 250;
const TR_MODES: usize = 3;

/// Per-TR acquisition parameters of an inversion-prepared FISP train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSchedule {
    /// Flip angle per TR, degrees.
    pub flip_deg: Vec<f64>,
    /// Repetition time per TR, ms.
    pub tr_ms: Vec<f64>,
    pub te_ms: f64,
    pub ti_ms: f64,
    pub seed: u64,
}

impl SequenceSchedule {
    pub fn len(&self) -> usize {
        self.flip_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flip_deg.is_empty()
    }

    /// Keeps the first `len` TRs.
    pub fn truncate(&self, len: usize) -> SequenceSchedule {
        let len = len.min(self.len());
        SequenceSchedule {
            flip_deg: self.flip_deg[..len].to_vec(),
            tr_ms: self.tr_ms[..len].to_vec(),
            ..self.clone()
        }
    }

    /// Packs FA and TR into an `L x 2` array plus meta for persistence.
    pub fn to_container(&self) -> (ArrayData, Meta) {
        let mut v = Vec::with_capacity(2 * self.len());
        for (fa, tr) in self.flip_deg.iter().zip(&self.tr_ms) {
            v.push(*fa);
            v.push(*tr);
        }
        let arr = ndarray::Array2::from_shape_vec((self.len(), 2), v)
            .expect("2 columns")
            .into_dyn();
        let m = meta([
            ("kind", serde_json::json!("schedule")),
            ("L", self.len().into()),
            ("seed", self.seed.into()),
            ("te_ms", self.te_ms.into()),
            ("ti_ms", self.ti_ms.into()),
        ]);
        (ArrayData::F64(arr), m)
    }

    pub fn from_container(arr: ArrayData, meta: &Meta) -> Result<SequenceSchedule> {
        let a = arr.into_f64()?;
        if a.ndim() != 2 || a.shape()[1] != 2 {
            return Err(Error::DimensionMismatch(format!(
                "schedule must be L x 2, found {:?}",
                a.shape()
            )));
        }
        let num = |k: &str| {
            meta.get(k)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::Header(format!("schedule meta missing {k}")))
        };
        let rows = a.shape()[0];
        Ok(SequenceSchedule {
            flip_deg: (0..rows).map(|i| a[[i, 0]]).collect(),
            tr_ms: (0..rows).map(|i| a[[i, 1]]).collect(),
            te_ms: num("te_ms")?,
            ti_ms: num("ti_ms")?,
            seed: meta.get("seed").and_then(|v| v.as_u64()).unwrap_or(0),
        })
    }
}

/// Generates a seeded FISP schedule of length `len`.
///
/// The flip-angle train is a sequence of half-sine lobes of random length and
/// amplitude inside `[0, 74]` degrees; TR is a smooth sum of a few slow
/// sinusoids mapped into `[12.1, 15.0]` ms. Entry `t` depends only on the seed
/// and `t`, so a shorter schedule is a prefix of a longer one.
pub fn make_schedule(len: usize, seed: u64) -> SequenceSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let modes: Vec<(f64, f64, f64)> = (0..TR_MODES)
        .map(|_| {
            let amp = rng.gen_range(0.3..1.0);
            let period = rng.gen_range(150.0..900.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (amp, period, phase)
        })
        .collect();
    let amp_sum: f64 = modes.iter().map(|m| m.0).sum();
    let tr_ms = (0..len)
        .map(|t| {
            let s: f64 = modes
                .iter()
                .map(|&(a, p, ph)| a * (std::f64::consts::TAU * t as f64 / p + ph).sin())
                .sum();
            let unit = 0.5 + 0.5 * s / amp_sum;
            (TR_MIN_MS + (TR_MAX_MS - TR_MIN_MS) * unit).clamp(TR_MIN_MS, TR_MAX_MS)
        })
        .collect();

    let mut flip_deg = Vec::with_capacity(len);
    while flip_deg.len() < len {
        let lobe = rng.gen_range(LOBE_MIN..=LOBE_MAX);
        let peak = rng.gen_range(10.0..FA_MAX_DEG);
        for i in 0..lobe {
            if flip_deg.len() == len {
                break;
            }
            let phase = std::f64::consts::PI * (i as f64 + 0.5) / lobe as f64;
            flip_deg.push((peak * phase.sin()).clamp(0.0, FA_MAX_DEG));
        }
    }

    SequenceSchedule {
        flip_deg,
        tr_ms,
        te_ms: TE_MS,
        ti_ms: TI_MS,
        seed,
    }
}
