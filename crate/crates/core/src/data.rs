//! Bundled reference tables: colour-matching functions, the D65 spectrum and
//! the MacAdam ellipses.
//!
//! Tables are compiled into the binary. Setting `PROLAB_DATA_DIR` makes the
//! loaders read files of the same names from that directory instead; the
//! SHA-256 of whatever was loaded is reported so runs can be reproduced.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable overriding the bundled data location.
pub const DATA_DIR_ENV: &str = "PROLAB_DATA_DIR";

/// A versioned data file with its pinned digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataFile {
    pub name: &'static str,
    pub sha256: &'static str,
    bundled: &'static str,
}

pub const CMF_1931: DataFile = DataFile {
    name: "cie1931_2deg_5nm.csv",
    sha256: "db739bfead6b70bc981a906521a7916669c4de327179be0a69e5a54fdf734873",
    bundled: include_str!("../data/cie1931_2deg_5nm.csv"),
};

pub const D65_SPD: DataFile = DataFile {
    name: "d65_5nm.csv",
    sha256: "df1967557e0f0f905d4e644ef7dacdc785753604a6b687529f094a6f58bd8424",
    bundled: include_str!("../data/d65_5nm.csv"),
};

pub const MACADAM_1942: DataFile = DataFile {
    name: "macadam1942.csv",
    sha256: "4f06ec3f3e0ea35ec0e2b3f1301267386549bcc9a70e1fd8aa473b99541b79ca",
    bundled: include_str!("../data/macadam1942.csv"),
};

pub const ALL_FILES: [DataFile; 3] = [CMF_1931, D65_SPD, MACADAM_1942];

/// Text of a loaded file and its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loaded {
    pub name: String,
    pub source: String,
    pub sha256: String,
    #[serde(skip)]
    pub text: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl DataFile {
    pub fn load(&self) -> Result<Loaded> {
        let (text, source) = match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => {
                let path = PathBuf::from(dir).join(self.name);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
                (text, path.display().to_string())
            }
            None => (self.bundled.to_string(), "bundled".to_string()),
        };
        let sha256 = sha256_hex(text.as_bytes());
        if sha256 != self.sha256 {
            log::warn!("{} ({source}) has sha256 {sha256}, expected {}", self.name, self.sha256);
        }
        Ok(Loaded { name: self.name.to_string(), source, sha256, text })
    }
}

/// Parses a comma-separated table with `#` comment lines and one header row.
fn parse_table(loaded: &Loaded, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = loaded
        .text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    rows.next().ok_or_else(|| Error::Data(format!("{}: missing header", loaded.name)))?;
    rows.enumerate()
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(format!("{} row {}: {e}", loaded.name, i + 1)))?;
            if vals.len() != columns {
                return Err(Error::Data(format!(
                    "{} row {}: expected {columns} columns, got {}",
                    loaded.name,
                    i + 1,
                    vals.len()
                )));
            }
            Ok(vals)
        })
        .collect()
}

/// Observer and illuminant sampled on a common wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub wavelengths: Vec<f64>,
    pub cmf: Vec<[f64; 3]>,
    pub illuminant: Vec<f64>,
    pub sources: Vec<Loaded>,
}

impl SpectralData {
    pub fn load() -> Result<Self> {
        let cmf_file = CMF_1931.load()?;
        let spd_file = D65_SPD.load()?;
        let cmf_rows = parse_table(&cmf_file, 4)?;
        let spd_rows = parse_table(&spd_file, 2)?;
        if cmf_rows.len() != spd_rows.len() || cmf_rows.len() < 2 {
            return Err(Error::Data("observer and illuminant grids differ".into()));
        }
        for (a, b) in cmf_rows.iter().zip(&spd_rows) {
            if a[0] != b[0] {
                return Err(Error::Data(format!("wavelength mismatch {} vs {}", a[0], b[0])));
            }
        }
        Ok(Self {
            wavelengths: cmf_rows.iter().map(|r| r[0]).collect(),
            cmf: cmf_rows.iter().map(|r| [r[1], r[2], r[3]]).collect(),
            illuminant: spd_rows.iter().map(|r| r[1]).collect(),
            sources: vec![cmf_file, spd_file],
        })
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }
}

/// A chromaticity discrimination ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacAdamEllipse {
    pub x: f64,
    pub y: f64,
    /// Semi-major axis in chromaticity units.
    pub a: f64,
    /// Semi-minor axis in chromaticity units.
    pub b: f64,
    /// Orientation of the major axis, degrees from the x axis.
    pub theta_deg: f64,
}

pub fn macadam_ellipses() -> Result<(Vec<MacAdamEllipse>, Loaded)> {
    let file = MACADAM_1942.load()?;
    let rows = parse_table(&file, 5)?;
    let ellipses = rows
        .iter()
        .map(|r| MacAdamEllipse { x: r[0], y: r[1], a: r[2] * 1e-3, b: r[3] * 1e-3, theta_deg: r[4] })
        .collect();
    Ok((ellipses, file))
}
