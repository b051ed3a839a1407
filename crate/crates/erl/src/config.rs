//! Scenario configuration: the JSON file format, command-line overrides and
//! per-scenario defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use erl_core::catmap::{SegmentTarget, ThresholdScheme};
use erl_core::{systems, CylinderUnion, MarkovMeasure, NeighborhoodSystem, Word};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Cantor,
    Dichotomy,
    Cluster,
    Tower,
    Catmap,
    Audit,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Cantor,
        Scenario::Dichotomy,
        Scenario::Cluster,
        Scenario::Tower,
        Scenario::Catmap,
        Scenario::Audit,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Cantor => "cantor",
            Scenario::Dichotomy => "dichotomy",
            Scenario::Cluster => "cluster",
            Scenario::Tower => "tower",
            Scenario::Catmap => "catmap",
            Scenario::Audit => "audit",
            Scenario::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Cantor => "Localized escape rate and return ratio for the middle-thirds Cantor set under x -> 3x mod 1",
            Scenario::Dichotomy => "Periodic versus non-periodic points: extremal index and localized rate along point cylinders",
            Scenario::Cluster => "Cluster-size law of one hole: direct counts against the law derived from return levels",
            Scenario::Tower => "Localized escape rates on a base system and on a tower over it with a bounded roof",
            Scenario::Catmap => "Monte Carlo exceedance rates into shrinking tubes around a segment for the cat map",
            Scenario::Audit => "Unconditional vs conditional rate, entry/return identity, and the block survival bound",
            Scenario::Custom => "Localized rate, extremal index and coarse bound for a user-supplied system and family",
        }
    }

    pub fn topic(self) -> &'static str {
        match self {
            Scenario::Cantor => "localized escape rate",
            Scenario::Dichotomy => "extremal index",
            Scenario::Cluster => "cluster statistics",
            Scenario::Tower => "inducing",
            Scenario::Catmap => "exceedance rates",
            Scenario::Audit => "identities and bounds",
            Scenario::Custom => "localized escape rate",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite-alphabet stationary Markov measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Doubling {},
    Tripling {},
    GoldenMean {},
    Uniform { m: usize },
    Bernoulli { p: Vec<f64> },
    Markov { transitions: Vec<Vec<f64>> },
}

impl SystemSpec {
    pub fn build(&self) -> Result<MarkovMeasure, RunError> {
        Ok(match self {
            SystemSpec::Doubling {} => systems::doubling(),
            SystemSpec::Tripling {} => systems::tripling(),
            SystemSpec::GoldenMean {} => systems::golden_mean(),
            SystemSpec::Uniform { m } => MarkovMeasure::uniform(*m)?,
            SystemSpec::Bernoulli { p } => MarkovMeasure::bernoulli(p)?,
            SystemSpec::Markov { transitions } => MarkovMeasure::new(transitions.clone())?,
        })
    }

    /// Independent symbols, so mixing coefficients vanish past the hole depth.
    pub fn is_bernoulli(&self) -> bool {
        match self {
            SystemSpec::Doubling {} | SystemSpec::Tripling {} | SystemSpec::Uniform { .. } | SystemSpec::Bernoulli { .. } => true,
            SystemSpec::GoldenMean {} => false,
            SystemSpec::Markov { transitions } => transitions.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

/// A nested family of holes. Words are strings of decimal digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Words over `{0, 2}` of length `n` (tripling only).
    Cantor {},
    /// Cylinders of the periodic point `word word word …`.
    Point { word: String },
    /// Cylinders of a point given by its digit expansion.
    Prefix { digits: String },
    /// Cylinders of the binary expansion of `√2 − 1`.
    Sqrt2 {},
    /// Holes listed explicitly, one list of equal-length words per hole.
    Explicit { holes: Vec<Vec<String>> },
}

pub fn parse_word(s: &str) -> Result<Vec<u8>, RunError> {
    s.chars()
        .map(|c| {
            c.to_digit(10).map(|d| d as u8).ok_or_else(|| RunError::Config(format!("word {s:?} must consist of decimal digits")))
        })
        .collect()
}

impl FamilySpec {
    pub fn build(&self, mu: &MarkovMeasure, n_min: usize, n_max: usize) -> Result<NeighborhoodSystem, RunError> {
        let depths: Vec<usize> = (n_min..=n_max).collect();
        Ok(match self {
            FamilySpec::Cantor {} => systems::cantor_system(mu, n_min, n_max)?,
            FamilySpec::Point { word } => systems::point_family(mu, &parse_word(word)?, depths)?,
            FamilySpec::Prefix { digits } => {
                let seq = parse_word(digits)?;
                if seq.len() < n_max {
                    return Err(RunError::Config(format!("prefix has {} digits, n_max is {n_max}", seq.len())));
                }
                NeighborhoodSystem::prefix_family(mu, &seq, &depths, format!("prefix {digits}"))?
            }
            FamilySpec::Sqrt2 {} => systems::sqrt2_family(mu, depths)?,
            FamilySpec::Explicit { holes } => {
                let mut built = Vec::with_capacity(holes.len());
                for words in holes {
                    let words: Vec<Vec<u8>> = words.iter().map(|w| parse_word(w)).collect::<Result<_, _>>()?;
                    let depth = words.first().map_or(0, Vec::len);
                    built.push(CylinderUnion::new(mu, depth, words.into_iter().map(Word).collect())?);
                }
                NeighborhoodSystem::new(mu, built, "explicit")?
            }
        })
    }

    /// The periodic word, when the family shrinks to a periodic point.
    pub fn periodic_word(&self) -> Option<Vec<u8>> {
        match self {
            FamilySpec::Point { word } => parse_word(word).ok(),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleSpec {
    Radians(f64),
    Named(Direction),
}

/// A slope as a number or a ratio string such as `"1/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlopeSpec {
    Number(f64),
    Ratio(String),
}

impl SlopeSpec {
    fn value(&self) -> Result<f64, RunError> {
        match self {
            SlopeSpec::Number(x) => Ok(*x),
            SlopeSpec::Ratio(s) => {
                let bad = || RunError::Config(format!("slope {s:?} is not a number or p/q ratio"));
                match s.split_once('/') {
                    Some((p, q)) => {
                        let p = f64::from_str(p.trim()).map_err(|_| bad())?;
                        let q = f64::from_str(q.trim()).map_err(|_| bad())?;
                        if q == 0.0 {
                            return Err(bad());
                        }
                        Ok(p / q)
                    }
                    None => f64::from_str(s.trim()).map_err(|_| bad()),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub p1: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<AngleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<SlopeSpec>,
    pub length: f64,
}

impl SegmentSpec {
    pub fn build(&self) -> Result<SegmentTarget, RunError> {
        let seg = match (&self.angle, &self.slope) {
            (Some(AngleSpec::Named(Direction::Stable)), None) => SegmentTarget::stable(self.p1, self.length),
            (Some(AngleSpec::Named(Direction::Unstable)), None) => SegmentTarget::unstable(self.p1, self.length),
            (Some(AngleSpec::Radians(a)), None) => SegmentTarget::from_angle(self.p1, *a, self.length),
            (None, Some(s)) => SegmentTarget::from_slope(self.p1, s.value()?, self.length),
            _ => return Err(RunError::Config("segment needs exactly one of \"angle\" and \"slope\"".into())),
        };
        Ok(seg?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedThresholds {
    #[serde(rename = "log_n")]
    LogN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Named(NamedThresholds),
    Explicit(Vec<f64>),
}

/// `{"u": "log_n", "n": [...]}` or `{"u": [u_1, u_2, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub u: ThresholdSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
}

impl SchemeSpec {
    pub fn build(&self) -> Result<ThresholdScheme, RunError> {
        match (&self.u, &self.n) {
            (ThresholdSpec::Named(NamedThresholds::LogN), Some(n)) => Ok(ThresholdScheme::logarithmic(n)?),
            (ThresholdSpec::Named(NamedThresholds::LogN), None) => {
                Err(RunError::Config("scheme \"log_n\" needs an \"n\" list".into()))
            }
            (ThresholdSpec::Explicit(u), None) => Ok(ThresholdScheme::new(u.clone())?),
            (ThresholdSpec::Explicit(_), Some(_)) => Err(RunError::Config("explicit thresholds take no \"n\" list".into())),
        }
    }
}

/// Check tolerances. Every field has a default, so a config may list only
/// the ones it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Localized-rate limit for the Cantor family against 1/3.
    pub localized: f64,
    /// Localized-rate limit for periodic points against `1 - θ`.
    pub periodic: f64,
    /// Localized-rate limit for non-periodic points against 1.
    pub generic: f64,
    /// Extremal index estimates against their target.
    pub extremal_index: f64,
    /// Values that hold exactly, such as return ratios and identities.
    pub exact: f64,
    /// `|ρ(U) - ρ_U(U)|`.
    pub rate_gap: f64,
    /// Direct against derived cluster-size law, and the mean-size identity.
    pub cluster: f64,
    /// Base against tower localized rate.
    pub inducing: f64,
    /// Upper end of the coarse bound on localized ratios.
    pub coarse_upper: f64,
    /// Accepted range of the last generic cat-map normalized rate.
    pub catmap_generic: [f64; 2],
    /// Aligned cat-map segments through a fixed point, against `1 - 1/λ`.
    pub catmap_periodic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            localized: 0.02,
            periodic: 0.03,
            generic: 0.05,
            extremal_index: 0.02,
            exact: 1e-10,
            rate_gap: 1e-8,
            cluster: 0.02,
            inducing: 0.05,
            coarse_upper: 1.05,
            catmap_generic: [0.8, 1.15],
            catmap_periodic: 0.08,
        }
    }
}

/// The configuration file. Omitted fields take per-scenario defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub system: Option<SystemSpec>,
    pub family: Option<FamilySpec>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub k: Option<usize>,
    pub k_schedule: Option<Vec<usize>>,
    pub ell_max: Option<usize>,
    pub t_max: Option<usize>,
    pub samples: Option<u64>,
    pub roof: Option<Vec<usize>>,
    pub segment: Option<SegmentSpec>,
    pub scheme: Option<SchemeSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerances: Option<Tolerances>,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses a config, or the manifest of an earlier run. Syntax and schema
    /// errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).or_else(|e| {
            let manifest: Option<serde_json::Value> = serde_json::from_str(text).ok();
            match manifest.as_ref().and_then(|m| m.get("artifact").and(m.get("config"))) {
                Some(cfg) => Self::deserialize(cfg).map_err(|e| RunError::Config(format!("invalid manifest config: {e}"))),
                None => Err(RunError::Config(format!("invalid config: {e}"))),
            }
        })
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub word: Option<String>,
    pub k: Option<usize>,
    pub samples: Option<u64>,
    pub t_max: Option<usize>,
}

/// A fully resolved run configuration, echoed into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub scenario: Scenario,
    pub system: SystemSpec,
    pub family: FamilySpec,
    pub n_min: usize,
    pub n_max: usize,
    pub k: usize,
    pub k_schedule: Vec<usize>,
    pub ell_max: usize,
    pub t_max: usize,
    pub samples: u64,
    pub roof: Vec<usize>,
    pub segment: SegmentSpec,
    pub scheme: SchemeSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub tolerances: Tolerances,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl Resolved {
    pub fn new(scenario: Scenario, cfg: ScenarioConfig, ov: Overrides) -> Result<Self, RunError> {
        if let Some(s) = cfg.scenario {
            if s != scenario {
                return Err(RunError::Config(format!("config is for scenario {s}, command line asks for {scenario}")));
            }
        }
        let (system, family, n_min, n_max) = match scenario {
            Scenario::Cantor | Scenario::Cluster => {
                (SystemSpec::Tripling {}, FamilySpec::Cantor {}, 2, if scenario == Scenario::Cluster { 8 } else { 10 })
            }
            Scenario::Dichotomy | Scenario::Tower | Scenario::Audit => (
                SystemSpec::Doubling {},
                FamilySpec::Point { word: "0".into() },
                if scenario == Scenario::Tower { 3 } else { 2 },
                14,
            ),
            Scenario::Catmap => (SystemSpec::Doubling {}, FamilySpec::Point { word: "0".into() }, 1, 1),
            Scenario::Custom => {
                if cfg.system.is_none() || cfg.family.is_none() {
                    return Err(RunError::Config("custom scenario needs \"system\" and \"family\" in the config".into()));
                }
                (SystemSpec::Doubling {}, FamilySpec::Sqrt2 {}, 8, 20)
            }
        };
        let mut family = cfg.family.unwrap_or(family);
        if let Some(word) = ov.word {
            parse_word(&word)?;
            family = FamilySpec::Point { word };
        }
        let resolved = Resolved {
            scenario,
            system: cfg.system.unwrap_or(system),
            family,
            n_min: ov.n_min.or(cfg.n_min).unwrap_or(n_min),
            n_max: ov.n_max.or(cfg.n_max).unwrap_or(n_max),
            k: ov.k.or(cfg.k).unwrap_or(12),
            k_schedule: cfg.k_schedule.unwrap_or_else(|| vec![5, 10, 20]),
            ell_max: cfg.ell_max.unwrap_or(erl_core::cluster::DEFAULT_ELL_MAX),
            t_max: ov.t_max.or(cfg.t_max).unwrap_or(2000),
            samples: ov.samples.or(cfg.samples).unwrap_or(if scenario == Scenario::Tower { 20_000 } else { 100_000 }),
            roof: cfg.roof.unwrap_or_else(|| vec![1, 2]),
            segment: cfg.segment.unwrap_or(SegmentSpec {
                p1: [0.13, 0.29],
                angle: None,
                slope: Some(SlopeSpec::Ratio("1/2".into())),
                length: 0.3,
            }),
            scheme: cfg
                .scheme
                .unwrap_or(SchemeSpec { u: ThresholdSpec::Named(NamedThresholds::LogN), n: Some(vec![50, 100, 200, 400, 800]) }),
            seed: ov.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
            out: ov.out.or(cfg.out).unwrap_or_else(|| PathBuf::from(format!("erl-out/{scenario}"))),
            tolerances: cfg.tolerances.unwrap_or_default(),
        };
        if resolved.n_min == 0 || resolved.n_min > resolved.n_max {
            return Err(RunError::Config(format!("need 1 <= n_min <= n_max, got {}..{}", resolved.n_min, resolved.n_max)));
        }
        Ok(resolved)
    }
}
