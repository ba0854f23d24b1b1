//! Result files: `summary.json` (manifest), `ber.csv`, `plotdata.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vfd_core::numerics::GENERATOR_NAME;
use vfd_core::sim::{BerRecord, CampaignResult, ScenarioConfig};

use crate::config::render;

pub const BER_HEADER: &str = "scheme,snr_db,bit_errors,bits_total,ber,realizations";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot serialise summary: {0}")]
    Json(#[from] serde_json::Error),
}

/// Everything needed to reproduce a run's numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    pub generator: String,
    pub base_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub redraws: u64,
}

impl RunManifest {
    pub fn new(config: &ScenarioConfig, started_unix: u64, finished_unix: u64, redraws: u64) -> Self {
        Self {
            config: render(config),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            generator: GENERATOR_NAME.to_string(),
            base_seed: config.base_seed,
            started_unix,
            finished_unix,
            redraws,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct PeSummary {
    pub scheme: String,
    pub snr_db: f64,
    /// Mean estimate per slot, starting at slot 1.
    pub mean_pe: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
pub struct Summary {
    pub manifest: RunManifest,
    pub pe: Vec<PeSummary>,
}

/// BER with 12 significant digits.
pub fn format_ber(ber: f64) -> String {
    format!("{ber:.11e}")
}

pub fn ber_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(BER_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme.name(),
            r.snr_db,
            r.bit_errors,
            r.bits_total,
            format_ber(r.ber()),
            r.realizations
        );
    }
    out
}

/// One row per SNR point, one BER column per scheme in configuration order.
pub fn plot_csv(config: &ScenarioConfig, result: &CampaignResult) -> String {
    let mut out = String::from("snr_db");
    for s in &config.schemes {
        out.push(',');
        out.push_str(s.name());
    }
    out.push('\n');
    for &snr in &config.snr_grid_db {
        out.push_str(&snr.to_string());
        for &s in &config.schemes {
            out.push(',');
            if let Some(r) = result.record(s, snr) {
                out.push_str(&format_ber(r.ber()));
            }
        }
        out.push('\n');
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<(), OutputError> {
    fs::write(&path, contents).map_err(|source| OutputError::Io { path, source })
}

/// Writes the manifest first, then the result tables.
pub fn emit_results(
    config: &ScenarioConfig,
    result: &CampaignResult,
    manifest: &RunManifest,
    out_dir: &Path,
) -> Result<(), OutputError> {
    fs::create_dir_all(out_dir).map_err(|source| OutputError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let summary = Summary {
        manifest: manifest.clone(),
        pe: result
            .records
            .iter()
            .map(|r| PeSummary {
                scheme: r.scheme.name().to_string(),
                snr_db: r.snr_db,
                mean_pe: r.mean_pe.clone(),
            })
            .collect(),
    };
    write(out_dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    write(out_dir.join("ber.csv"), &ber_csv(&result.records))?;
    write(out_dir.join("plotdata.csv"), &plot_csv(config, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vfd_core::sim::Scheme;

    fn record(scheme: Scheme, snr_db: f64, errors: u64) -> BerRecord {
        BerRecord {
            scheme,
            snr_db,
            bit_errors: errors,
            bits_total: 3 * 2560,
            realizations: 3,
            mean_pe: vec![None, Some(0.1)],
        }
    }

    #[test]
    fn ber_has_twelve_significant_digits() {
        assert_eq!(format_ber(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_ber(0.0), "0.00000000000e0");
        let csv = ber_csv(&[record(Scheme::CrcSdf, 4.0, 7)]);
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row, format!("crc-sdf,4,7,7680,{},3", format_ber(7.0 / 7680.0)));
    }

    #[test]
    fn plot_columns_follow_schemes() {
        let config = ScenarioConfig {
            schemes: vec![Scheme::PerfectRelay, Scheme::CrcSdf],
            snr_grid_db: vec![0.0, 2.0],
            ..ScenarioConfig::default()
        };
        let result = CampaignResult {
            records: vec![
                record(Scheme::PerfectRelay, 0.0, 1),
                record(Scheme::CrcSdf, 0.0, 2),
                record(Scheme::PerfectRelay, 2.0, 0),
                record(Scheme::CrcSdf, 2.0, 1),
            ],
            redraws: 0,
        };
        let csv = plot_csv(&config, &result);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "snr_db,perfect-relay,crc-sdf");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,0.00000000000e0,"));
    }
}
