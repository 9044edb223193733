//! Output artifacts shared by the command-line subcommands: json files,
//! histograms and the `meta.json` that accompanies every run directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::beltrami::HistogramBin;
use crate::error::{Error, Result};

/// Bumped whenever a file layout changes.
pub const SCHEMA_VERSION: &str = "teichmap/1";

/// Bins of every emitted `|mu|` histogram.
pub const HISTOGRAM_BINS: usize = 20;

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `lo,hi,count,fraction` rows.
pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    let mut s = String::from("lo,hi,count,fraction\n");
    for b in bins {
        let _ = writeln!(s, "{},{},{},{:.17e}", b.lo, b.hi, b.count, b.fraction);
    }
    write_text(path, &s)
}

#[derive(Debug, Serialize)]
struct Meta<'a, C: Serialize> {
    schema: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    files: &'a [&'a str],
}

/// `meta.json`: schema id, crate version, the subcommand and its full
/// configuration, and the files written next to it.
pub fn write_meta<C: Serialize>(dir: &Path, command: &str, config: &C, files: &[&str]) -> Result<()> {
    write_json(
        &dir.join("meta.json"),
        &Meta {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            files,
        },
    )
}

/// Index of the fullest bin and the fraction of mass in it.
pub fn histogram_mode(bins: &[HistogramBin]) -> Option<(usize, f64)> {
    bins.iter()
        .enumerate()
        .max_by(|a, b| a.1.count.cmp(&b.1.count).then(b.0.cmp(&a.0)))
        .map(|(i, b)| (i, b.fraction))
}

/// Counts rise to a single peak and fall after it. Empty bins at either end
/// and plateaus are allowed.
pub fn is_unimodal(bins: &[HistogramBin]) -> bool {
    let Some((mode, _)) = histogram_mode(bins) else {
        return false;
    };
    bins[..=mode].windows(2).all(|w| w[0].count <= w[1].count)
        && bins[mode..].windows(2).all(|w| w[0].count >= w[1].count)
}
