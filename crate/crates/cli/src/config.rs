//! JSON experiment files.
//!
//! ```json
//! {
//!   "train_ref": { "data": "data/mnist.gz", "n_train": 100, "out": "runs/ref" },
//!   "evaluate": { "data": "data/mnist.gz", "skip": 100, "n_test": 100,
//!                 "methods": "none,simple,learned:runs/ref/checkpoint.json",
//!                 "out_dir": "runs/eval" }
//! }
//! ```
//!
//! Keys are the long flag names with `-` replaced by `_`. Unknown keys are
//! rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub measure: Option<Value>,
    pub make_ref: Option<Value>,
    pub reconstruct: Option<Value>,
    pub train_ref: Option<Value>,
    pub evaluate: Option<Value>,
    pub gradcheck: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Decodes one section, rejecting keys that do not name a flag.
pub fn section<T>(value: Option<&Value>, name: &str) -> Result<T>
where
    T: DeserializeOwned + Serialize + Default,
{
    let Some(value) = value else {
        return Ok(T::default());
    };
    let Some(entries) = value.as_object() else {
        bail!("config section {name} must be an object");
    };
    let known = serde_json::to_value(T::default())?;
    for key in entries.keys() {
        if known.get(key).is_none() {
            bail!("unknown key {name}.{key} in config");
        }
    }
    serde_json::from_value(value.clone()).with_context(|| format!("config section {name}"))
}
