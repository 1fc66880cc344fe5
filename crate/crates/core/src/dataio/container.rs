//! Binary measurement files and JSON training checkpoints.
//!
//! Measurement layout (all integers little-endian):
//!
//! | offset | size    | content                          |
//! |--------|---------|----------------------------------|
//! | 0      | 8       | magic `REFPRMAG`                 |
//! | 8      | 4       | format version (`1`)             |
//! | 12     | 4       | side `D`                         |
//! | 16     | 4       | oversampling factor `s`          |
//! | 20     | 8·D·D   | magnitudes, `f64`, row-major     |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, Measurement, Oversampling};
use crate::reflearn::{AdamState, HistoryRecord, StopReason, TrainConfig, TrainOutcome};

pub const MEASUREMENT_MAGIC: &[u8; 8] = b"REFPRMAG";
const MEASUREMENT_VERSION: u32 = 1;
const MEASUREMENT_HEADER: usize = 20;

pub fn encode_measurement(y: &Measurement) -> Vec<u8> {
    let mut out = Vec::with_capacity(MEASUREMENT_HEADER + 8 * y.data().len());
    out.extend_from_slice(MEASUREMENT_MAGIC);
    out.extend_from_slice(&MEASUREMENT_VERSION.to_le_bytes());
    out.extend_from_slice(&(y.side() as u32).to_le_bytes());
    out.extend_from_slice(&(y.oversampling().factor() as u32).to_le_bytes());
    for v in y.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_measurement(bytes: &[u8]) -> Result<Measurement> {
    if bytes.len() < MEASUREMENT_HEADER {
        return Err(Error::Length {
            expected: MEASUREMENT_HEADER,
            actual: bytes.len(),
        });
    }
    if &bytes[..8] != MEASUREMENT_MAGIC {
        return Err(Error::Format("not a measurement file (bad magic)".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let version = word(8);
    if version != MEASUREMENT_VERSION {
        return Err(Error::Format(format!(
            "unsupported measurement version {version}"
        )));
    }
    let side = word(12) as usize;
    let oversampling =
        Oversampling::from_factor(word(16) as usize).map_err(|e| Error::Format(e.to_string()))?;
    let expected = MEASUREMENT_HEADER + 8 * side * side;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes[MEASUREMENT_HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Measurement::new(side, oversampling, data)
}

pub fn write_measurement(y: &Measurement, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_measurement(y)).map_err(|e| Error::io(path, e))
}

pub fn read_measurement(path: impl AsRef<Path>) -> Result<Measurement> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_measurement(&bytes)
}

/// Training checkpoint. The reference is stored at full precision so that
/// reloading it reproduces evaluations exactly; a PGM copy is only for
/// viewing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub dataset: String,
    pub config: TrainConfig,
    pub reference: Image,
    pub adam: AdamState,
    pub history: Vec<HistoryRecord>,
    pub stop: StopReason,
}

pub const CHECKPOINT_FORMAT: &str = "refphase-checkpoint-v1";

impl Checkpoint {
    pub fn new(dataset: impl Into<String>, config: TrainConfig, outcome: TrainOutcome) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            dataset: dataset.into(),
            config,
            reference: outcome.reference,
            adam: outcome.adam,
            history: outcome.history,
            stop: outcome.stop,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "unknown checkpoint format {:?}",
                ckpt.format
            )));
        }
        // re-validate what serde cannot
        let reference = Image::from_vec(ckpt.reference.side(), ckpt.reference.data().to_vec())?;
        reference.check_unit_range("checkpoint reference")?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}
