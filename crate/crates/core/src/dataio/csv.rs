//! CSV output for evaluation tables and training curves.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reflearn::HistoryRecord;

pub const METRICS_HEADER: &str = "dataset,method,oversampling,mse_mean,mse_stddev,n_images,seed";
pub const HISTORY_HEADER: &str = "step,train_mse,val_mse";

/// One cell of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub dataset: String,
    pub method: String,
    pub oversampling: usize,
    pub mse_mean: f64,
    pub mse_stddev: f64,
    pub n_images: usize,
    pub seed: u64,
}

/// `printf("%.{digits}g")`: `digits` significant digits, trailing zeros
/// removed, scientific notation when the exponent is below -4 or at least
/// `digits`.
pub fn format_significant(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_csv(rows: &[MetricRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.dataset),
            csv_field(&r.method),
            r.oversampling,
            format_significant(r.mse_mean, 6),
            format_significant(r.mse_stddev, 6),
            r.n_images,
            r.seed
        );
    }
    out
}

pub fn write_metrics_csv(rows: &[MetricRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, metrics_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn history_csv(history: &[HistoryRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    let cell = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    for h in history {
        let _ = writeln!(out, "{},{},{}", h.step, cell(h.train_mse), cell(h.val_mse));
    }
    out
}

pub fn write_history_csv(history: &[HistoryRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}
