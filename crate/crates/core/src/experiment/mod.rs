//! Batch experiments driven by INI configs.

mod config;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use config::{CurveSpec, ExperimentConfig, Schedule};
pub use run::{hash_outputs, run, FileRecord, RunManifest, StageTime, DEFAULT_OUT_DIR};

use crate::barcode2d::BarcodeError;
use crate::curves::CurveError;
use crate::entropy::EntropyError;
use crate::measures::MeasureError;

/// Slack allowed in every pairwise chain-check inequality.
pub const CHAIN_TOLERANCE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("unknown experiment kind {0:?}")]
    UnknownKind(String),
}

impl ConfigError {
    pub(crate) fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Barcode(#[from] BarcodeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Pipeline(_) => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    VolumeGrowth,
    BarcodeEntropy,
    ChordMeasure,
    MetricEntropyLb,
    PeriodicMeasures,
    ChainCheck,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::VolumeGrowth,
        Kind::BarcodeEntropy,
        Kind::ChordMeasure,
        Kind::MetricEntropyLb,
        Kind::PeriodicMeasures,
        Kind::ChainCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::VolumeGrowth => "volume-growth",
            Kind::BarcodeEntropy => "barcode-entropy",
            Kind::ChordMeasure => "chord-measure",
            Kind::MetricEntropyLb => "metric-entropy-lb",
            Kind::PeriodicMeasures => "periodic-measures",
            Kind::ChainCheck => "chain-check",
        }
    }

    pub fn needs_curves(self) -> bool {
        self != Kind::PeriodicMeasures
    }

    fn summary(self) -> &'static str {
        match self {
            Kind::VolumeGrowth => "growth of the length of L_k inside U_eta, one fit per eta",
            Kind::BarcodeEntropy => "bigon-reduction barcode of (L_k, L) and growth of b_eps",
            Kind::ChordMeasure => "empirical measures of approximate k_max-chords as U_eta shrinks",
            Kind::MetricEntropyLb => "growth of greedy (eta, k)-separated chord sets",
            Kind::PeriodicMeasures => {
                "eta-periodic orbit measures and exact rational periodic orbits"
            }
            Kind::ChainCheck => {
                "barcode, volume and separated-chord slopes against the reference entropy"
            }
        }
    }

    fn parameters(self) -> &'static [(&'static str, &'static str)] {
        const CURVES: (&str, &str) = ("curves.l0, curves.l", "source curve and target curve");
        const KMAX: (&str, &str) = ("schedule.k_max", "last iterate (>= 4)");
        const SAG: (&str, &str) = ("schedule.max_sag", "refinement tolerance for evolving L_0");
        const ETA: (&str, &str) = (
            "schedule.eta",
            "decreasing neighborhood radii of L, each < 0.25",
        );
        const EPS: (&str, &str) = ("schedule.eps", "epsilon schedule for bar counts b_eps");
        const SEP: (&str, &str) = ("schedule.separation", "Bowen separation radius");
        const REGION: (&str, &str) = (
            "schedule.region",
            "radius of the target neighborhood U for chords",
        );
        const SAMPLES: (&str, &str) = ("schedule.samples", "number of seeds");
        const RES: (&str, &str) = ("schedule.resolution", "grid resolution R (power of two)");
        match self {
            Kind::VolumeGrowth => &[CURVES, ETA, KMAX, SAG],
            Kind::BarcodeEntropy => &[CURVES, EPS, KMAX, SAG],
            Kind::ChordMeasure => &[CURVES, ETA, KMAX, SAMPLES, RES],
            Kind::MetricEntropyLb => &[CURVES, SEP, REGION, KMAX, SAMPLES],
            Kind::PeriodicMeasures => &[
                ETA,
                KMAX,
                SAMPLES,
                RES,
                (
                    "schedule.denominator",
                    "denominator q of the rational points (a/q, b/q)",
                ),
            ],
            Kind::ChainCheck => &[CURVES, ETA, EPS, SEP, REGION, KMAX, SAMPLES, SAG],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownKind(s.to_string()))
    }
}

/// One line per kind.
pub fn list_experiments() -> String {
    Kind::ALL
        .iter()
        .map(|k| format!("{:<18} {}\n", k.name(), k.summary()))
        .collect()
}

pub fn describe(kind: &str) -> Result<String, ConfigError> {
    let kind: Kind = kind.parse()?;
    let mut out = format!("{}: {}\n\nparameters:\n", kind.name(), kind.summary());
    for (key, doc) in kind.parameters() {
        out.push_str(&format!("  {key:<22} {doc}\n"));
    }
    out.push_str(
        "  seed                   top-level; all randomness derives from it (default 0)\n",
    );
    out.push_str("  output.dir             output directory\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_roundtrip() {
        assert_eq!(Kind::ALL.len(), 6);
        for k in Kind::ALL {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
        assert_eq!(list_experiments().lines().count(), 6);
    }

    #[test]
    fn describe_mentions_parameters() {
        let d = describe("barcode-entropy").unwrap();
        assert!(d.contains("eps") && d.contains("k_max"));
        assert!(matches!(describe("nope"), Err(ConfigError::UnknownKind(_))));
    }
}
