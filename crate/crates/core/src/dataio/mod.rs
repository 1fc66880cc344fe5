//! File formats: IDX datasets, PGM/PNG images, CSV tables, measurement
//! containers and training checkpoints.

mod container;
mod csv;
mod idx;
mod pgm;

use std::path::Path;

pub use container::{
    decode_measurement, encode_measurement, read_measurement, write_measurement, Checkpoint,
    CHECKPOINT_FORMAT, MEASUREMENT_MAGIC,
};
pub use csv::{
    format_significant, history_csv, metrics_csv, write_history_csv, write_metrics_csv,
    MetricRecord, HISTORY_HEADER, METRICS_HEADER,
};
pub use idx::{encode_idx_images, parse_idx_images, read_idx_images, IdxDataset};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, read_pgm_dir, write_pgm, write_png, PgmDepth};

use crate::error::{Error, Result};
use crate::image::Image;

/// Loads a dataset from an IDX file (plain or gzipped) or a directory of PGM
/// files.
pub fn load_images(path: impl AsRef<Path>) -> Result<Vec<Image>> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_dir() {
        read_pgm_dir(path)
    } else {
        Ok(read_idx_images(path)?.items)
    }
}
