use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::FiniteLandscape;
use crate::error::{Error, Result};
use crate::transform::Family;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CwFigures,
    CwCrossover,
    CwRfcw,
    EhrenfestGaps,
    SpectralSlope,
    AnnealCompare,
    MhSample,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::CwFigures,
        Experiment::CwCrossover,
        Experiment::CwRfcw,
        Experiment::EhrenfestGaps,
        Experiment::SpectralSlope,
        Experiment::AnnealCompare,
        Experiment::MhSample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CwFigures => "cw-figures",
            Experiment::CwCrossover => "cw-crossover",
            Experiment::CwRfcw => "cw-rfcw",
            Experiment::EhrenfestGaps => "ehrenfest-gaps",
            Experiment::SpectralSlope => "spectral-slope",
            Experiment::AnnealCompare => "anneal-compare",
            Experiment::MhSample => "mh-sample",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::CwFigures => "Curie-Weiss free-energy and mean-field curves, roots, convexification checks",
            Experiment::CwCrossover => "exact and Eyring-Kramers crossover times of the magnetization chain",
            Experiment::CwRfcw => "random-field Curie-Weiss critical points and grid barriers",
            Experiment::EhrenfestGaps => "Ehrenfest urn spectral gaps against the classical and modified bounds",
            Experiment::SpectralSlope => "slope of log spectral gap against beta on a landscape",
            Experiment::AnnealCompare => "improved versus classical cooling: tail of the hitting time of the ground set",
            Experiment::MhSample => "Metropolis-Hastings occupation and hitting times against exact values",
        }
    }

    pub fn stochastic(self) -> bool {
        matches!(self, Experiment::AnnealCompare | Experiment::MhSample)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default)]
    pub curie_weiss: CurieWeissSection,
    #[serde(default)]
    pub rfcw: RfcwSection,
    #[serde(default)]
    pub ehrenfest: EhrenfestSection,
    #[serde(default)]
    pub landscape: LandscapeSection,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub slope: SlopeSection,
    #[serde(default)]
    pub anneal: AnnealSection,
    #[serde(default)]
    pub sample: SampleSection,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurieWeissSection {
    pub beta: f64,
    pub h: f64,
    pub family: String,
    pub thresholds: Vec<f64>,
    pub grid_points: usize,
    pub sizes: Vec<usize>,
}

impl Default for CurieWeissSection {
    fn default() -> Self {
        Self {
            beta: 1.5,
            h: -0.05,
            family: "linear".into(),
            thresholds: vec![-0.4, -0.2],
            grid_points: 2001,
            sizes: vec![100, 200, 400],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfcwSection {
    pub theta: f64,
    pub beta: f64,
    pub family: String,
    pub grid: usize,
    /// Defaults to evenly spaced levels between the minimum and saddle energies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl Default for RfcwSection {
    fn default() -> Self {
        Self {
            theta: 0.3,
            beta: 2.0,
            family: "linear".into(),
            grid: 400,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EhrenfestSection {
    pub beta: f64,
    pub d_min: usize,
    pub d_max: usize,
    pub bounds_d_min: usize,
    pub bounds_d_max: usize,
    pub bounds_step: usize,
}

impl Default for EhrenfestSection {
    fn default() -> Self {
        Self {
            beta: 2.0,
            d_min: 8,
            d_max: 64,
            bounds_d_min: 32,
            bounds_d_max: 256,
            bounds_step: 8,
        }
    }
}

/// Exactly one of `file`, `energies` (a path graph) or `builtin`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

/// Path landscape with a shallow well at 3 and the ground state at 13.
pub const DOUBLE_WELL_20: [f64; 20] = [
    3.0, 2.0, 1.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0,
];

impl LandscapeSection {
    /// `base` resolves relative file paths.
    pub fn resolve(&self, base: &Path) -> Result<FiniteLandscape> {
        let given = [self.file.is_some(), self.energies.is_some(), self.builtin.is_some()];
        match given.iter().filter(|&&g| g).count() {
            0 => FiniteLandscape::path(DOUBLE_WELL_20.to_vec()),
            1 => {
                if let Some(f) = &self.file {
                    FiniteLandscape::load(base.join(f))
                } else if let Some(e) = &self.energies {
                    FiniteLandscape::path(e.clone())
                } else {
                    match self.builtin.as_deref() {
                        Some("double-well-20") => FiniteLandscape::path(DOUBLE_WELL_20.to_vec()),
                        Some(other) => Err(Error::Config(format!("landscape.builtin: unknown landscape '{other}'"))),
                        None => unreachable!(),
                    }
                }
            }
            _ => Err(Error::Config("landscape: give only one of file, energies, builtin".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    pub family: String,
}

impl Default for TransformSection {
    fn default() -> Self {
        Self { family: "linear".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Fixed,
    RunningMinimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub kind: PolicyKind,
    /// Threshold; defaults to the minimal energy of the landscape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Fixed,
            c: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleChoice {
    /// Run the improved and the classical schedule side by side.
    Compare,
    Improved,
    Classical,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub kind: ScheduleChoice,
    pub slack: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            kind: ScheduleChoice::Compare,
            slack: 6.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlopeSection {
    pub betas: Vec<f64>,
}

impl Default for SlopeSection {
    fn default() -> Self {
        Self {
            betas: (0..=15).map(|i| 10.0 + 2.0 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealSection {
    pub x0: usize,
    pub t_points: usize,
}

impl Default for AnnealSection {
    fn default() -> Self {
        Self { x0: 3, t_points: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub x0: usize,
    pub epsilon: f64,
    /// Defaults to the minimizers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<usize>>,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            x0: 3,
            epsilon: 0.5,
            target: None,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            format_version: FORMAT_VERSION,
            seed: experiment.stochastic().then_some(1),
            output_dir: None,
            horizon: None,
            reps: None,
            curie_weiss: Default::default(),
            rfcw: Default::default(),
            ehrenfest: Default::default(),
            landscape: Default::default(),
            transform: Default::default(),
            policy: Default::default(),
            schedule: Default::default(),
            slope: Default::default(),
            anneal: Default::default(),
            sample: Default::default(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(match self.experiment {
            Experiment::MhSample => 20_000.0,
            _ => 2_000.0,
        })
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(2000)
    }

    /// Schema-level range checks that need no landscape.
    fn check(&self) -> Result<()> {
        let positive = |key: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{key} must be positive and finite, got {v}")))
            }
        };
        let family = |key: &str, s: &str| -> Result<Family> {
            s.parse::<Family>().map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{key}: {m}")),
                e => e,
            })
        };
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "format_version {} not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.experiment.stochastic() && self.seed.is_none() {
            return Err(Error::Config(format!("seed is required for {}", self.experiment)));
        }
        if let Some(h) = self.horizon {
            positive("horizon", h)?;
        }
        if self.reps == Some(0) {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        match self.experiment {
            Experiment::CwFigures | Experiment::CwCrossover => {
                let s = &self.curie_weiss;
                positive("curie_weiss.beta", s.beta)?;
                if !s.h.is_finite() {
                    return Err(Error::Config("curie_weiss.h must be finite".into()));
                }
                family("curie_weiss.family", &s.family)?;
                if s.grid_points < 3 {
                    return Err(Error::Config("curie_weiss.grid_points must be at least 3".into()));
                }
                if let Some(&n) = s.sizes.iter().find(|&&n| n < 2 || n % 2 != 0) {
                    return Err(Error::Config(format!("curie_weiss.sizes: {n} must be even and >= 2")));
                }
                if let Some(c) = s.thresholds.iter().find(|c| !c.is_finite()) {
                    return Err(Error::Config(format!("curie_weiss.thresholds: {c} is not finite")));
                }
            }
            Experiment::CwRfcw => {
                positive("rfcw.theta", self.rfcw.theta)?;
                positive("rfcw.beta", self.rfcw.beta)?;
                family("rfcw.family", &self.rfcw.family)?;
                if self.rfcw.grid < 3 {
                    return Err(Error::Config("rfcw.grid must be at least 3".into()));
                }
            }
            Experiment::EhrenfestGaps => {
                let s = &self.ehrenfest;
                positive("ehrenfest.beta", s.beta)?;
                if s.d_min < 2 || s.d_max < s.d_min + 1 || s.d_max > crate::ehrenfest::MAX_EXACT_DIMENSION {
                    return Err(Error::Config(format!(
                        "ehrenfest: need 2 <= d_min < d_max <= {}",
                        crate::ehrenfest::MAX_EXACT_DIMENSION
                    )));
                }
                if s.bounds_d_min < 2 || s.bounds_d_max <= s.bounds_d_min || s.bounds_step == 0 {
                    return Err(Error::Config("ehrenfest: need 2 <= bounds_d_min < bounds_d_max and bounds_step >= 1".into()));
                }
            }
            Experiment::SpectralSlope => {
                family("transform.family", &self.transform.family)?;
                if self.slope.betas.len() < 3 {
                    return Err(Error::Config("slope.betas needs at least three values".into()));
                }
                for &b in &self.slope.betas {
                    positive("slope.betas", b)?;
                }
            }
            Experiment::AnnealCompare => {
                family("transform.family", &self.transform.family)?;
                positive("schedule.slack", self.schedule.slack)?;
                if self.anneal.t_points < 2 {
                    return Err(Error::Config("anneal.t_points must be at least 2".into()));
                }
            }
            Experiment::MhSample => {
                family("transform.family", &self.transform.family)?;
                positive("sample.epsilon", self.sample.epsilon)?;
            }
        }
        if let Some(c) = self.policy.c {
            if !c.is_finite() {
                return Err(Error::Config("policy.c must be finite".into()));
            }
        }
        Ok(())
    }
}
