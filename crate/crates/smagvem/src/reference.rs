//! Published midline velocity profiles of the lid-driven cavity.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, SolverError};

const BUNDLED: &str = include_str!("../data/reference_profiles.csv");
const BUNDLED_SHA256: &str = include_str!("../data/reference_profiles.sha256");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReferenceSource {
    Erturk,
    Ghia,
}

impl ReferenceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Erturk => "erturk",
            Self::Ghia => "ghia",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "erturk" => Ok(Self::Erturk),
            "ghia" => Ok(Self::Ghia),
            other => Err(SolverError::Reference(format!("unknown source `{other}`"))),
        }
    }
}

impl fmt::Display for ReferenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Samples of `u_x(0.5, y)` and `u_y(x, 0.5)`, ordinates increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    pub source: ReferenceSource,
    pub re: f64,
    pub ux_at_x05: Vec<(f64, f64)>,
    pub uy_at_y05: Vec<(f64, f64)>,
}

impl ReferenceProfile {
    pub fn ys(&self) -> Vec<f64> {
        self.ux_at_x05.iter().map(|s| s.0).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.uy_at_y05.iter().map(|s| s.0).collect()
    }

    /// Reference values, `u` samples first.
    pub fn values(&self) -> Vec<f64> {
        self.ux_at_x05.iter().chain(&self.uy_at_y05).map(|s| s.1).collect()
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    source: String,
    re: f64,
    axis: String,
    coord: f64,
    value: f64,
}

/// All profiles in a CSV with header `source,re,axis,coord,value`.
pub fn parse_profiles(text: &str) -> Result<Vec<ReferenceProfile>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut map: BTreeMap<(ReferenceSource, u64), ReferenceProfile> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| SolverError::Reference(format!("row {}: {e}", line + 2)))?;
        let source = ReferenceSource::parse(&row.source)?;
        let p = map.entry((source, row.re.to_bits())).or_insert_with(|| ReferenceProfile {
            source,
            re: row.re,
            ux_at_x05: Vec::new(),
            uy_at_y05: Vec::new(),
        });
        match row.axis.as_str() {
            "u" => p.ux_at_x05.push((row.coord, row.value)),
            "v" => p.uy_at_y05.push((row.coord, row.value)),
            other => return Err(SolverError::Reference(format!("row {}: unknown axis `{other}`", line + 2))),
        }
    }
    let profiles: Vec<ReferenceProfile> = map.into_values().collect();
    for p in &profiles {
        for samples in [&p.ux_at_x05, &p.uy_at_y05] {
            let ok = !samples.is_empty()
                && samples.windows(2).all(|w| w[0].0 < w[1].0)
                && samples.iter().all(|s| (0.0..=1.0).contains(&s.0));
            if !ok {
                return Err(SolverError::Reference(format!(
                    "{} Re = {}: ordinates must be strictly increasing in [0, 1]",
                    p.source, p.re
                )));
            }
        }
    }
    Ok(profiles)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The bundled tables, after checking their checksum.
pub fn bundled_profiles() -> Result<Vec<ReferenceProfile>> {
    let actual = sha256_hex(BUNDLED.as_bytes());
    if actual != BUNDLED_SHA256.trim() {
        return Err(SolverError::Reference(format!("checksum mismatch: {actual}")));
    }
    parse_profiles(BUNDLED)
}

pub fn bundled_checksum() -> &'static str {
    BUNDLED_SHA256.trim()
}

/// Profile for `(source, re)`.
pub fn find_profile(profiles: &[ReferenceProfile], source: ReferenceSource, re: f64) -> Result<&ReferenceProfile> {
    profiles
        .iter()
        .find(|p| p.source == source && p.re == re)
        .ok_or_else(|| SolverError::Config(format!("no {source} reference data at Re = {re}")))
}

/// Erturk where available, otherwise Ghia.
pub fn preferred_profile(profiles: &[ReferenceProfile], re: f64) -> Result<&ReferenceProfile> {
    find_profile(profiles, ReferenceSource::Erturk, re).or_else(|_| find_profile(profiles, ReferenceSource::Ghia, re))
}
