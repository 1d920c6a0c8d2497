//! Experiment configuration documents.
//!
//! Configs are JSON objects with a `schema_version` field. Unknown fields
//! are rejected at every level, and [`ExperimentConfig::validate`] reports
//! every offending field at once.

use std::path::{Path, PathBuf};

use cdmalab_core::{BpParams, EnsembleSpec, MessageInit, Modulation, PdParams, Regularity};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// BER of exact and BP detection on simulated instances.
    DetectSweep,
    /// Random- and informed-init cavity branches over the noise grid.
    PopdynScan,
    /// Monte Carlo field moments against their predictions.
    MomentCheck,
    /// Clique ground-state census of unmodulated instances.
    NaesatCensus,
    /// BPSK against unmodulated cavity branches.
    EquivalenceCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::DetectSweep => "detect_sweep",
            ExperimentKind::PopdynScan => "popdyn_scan",
            ExperimentKind::MomentCheck => "moment_check",
            ExperimentKind::NaesatCensus => "naesat_census",
            ExperimentKind::EquivalenceCheck => "equivalence_check",
        }
    }
}

/// Code ensemble as written in a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub chips: usize,
    #[serde(rename = "C")]
    pub user_degree: usize,
    #[serde(rename = "L")]
    pub chip_degree: usize,
    pub modulation: String,
    #[serde(default = "default_regularity")]
    pub regularity: String,
}

fn default_regularity() -> String {
    Regularity::FullyRegular.as_str().to_owned()
}

impl SpecConfig {
    pub fn to_spec(&self) -> Result<EnsembleSpec> {
        let mut problems = Vec::new();
        let modulation = Modulation::parse(&self.modulation);
        if modulation.is_none() {
            problems.push(format!(
                "spec.modulation: unknown value `{}`",
                self.modulation
            ));
        }
        let regularity = Regularity::parse(&self.regularity);
        if regularity.is_none() {
            problems.push(format!(
                "spec.regularity: unknown value `{}`",
                self.regularity
            ));
        }
        let (Some(modulation), Some(regularity)) = (modulation, regularity) else {
            return Err(Error::Config(problems));
        };
        let spec = EnsembleSpec {
            users: self.users,
            chips: self.chips,
            user_degree: self.user_degree,
            chip_degree: self.chip_degree,
            modulation,
            regularity,
        };
        spec.validate()
            .map_err(|e| Error::Config(vec![format!("spec: {e}")]))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &EnsembleSpec) -> Self {
        SpecConfig {
            users: spec.users,
            chips: spec.chips,
            user_degree: spec.user_degree,
            chip_degree: spec.chip_degree,
            modulation: spec.modulation.as_str().to_owned(),
            regularity: spec.regularity.as_str().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BpInitConfig {
    #[default]
    Uninformed,
    Informed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
    pub init: BpInitConfig,
    /// Also run exhaustive enumeration when `K` allows it.
    pub exact: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let bp = BpParams::default();
        DetectorConfig {
            max_iterations: bp.max_iterations,
            tolerance: bp.tolerance,
            damping: bp.damping,
            init: BpInitConfig::Uninformed,
            exact: true,
        }
    }
}

impl DetectorConfig {
    pub fn bp_params(&self) -> BpParams {
        BpParams {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            damping: self.damping,
            init: match self.init {
                BpInitConfig::Uninformed => MessageInit::Uninformed,
                BpInitConfig::Informed => MessageInit::Informed,
            },
            ..BpParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopdynConfig {
    pub population_size: usize,
    pub max_sweeps: usize,
    pub window: usize,
    pub tolerance: f64,
    pub field_cap: f64,
    pub measure_sweeps: usize,
    pub samples: usize,
    /// Bins of the label-conditioned symmetry check.
    pub symmetry_bins: usize,
    /// Label permutations behind the symmetry noise floor.
    pub symmetry_resamples: usize,
}

impl Default for PopdynConfig {
    fn default() -> Self {
        let pd = PdParams::default();
        PopdynConfig {
            population_size: pd.population_size,
            max_sweeps: pd.max_sweeps,
            window: pd.window,
            tolerance: pd.tolerance,
            field_cap: pd.field_cap,
            measure_sweeps: pd.measure_sweeps,
            samples: pd.samples,
            symmetry_bins: 40,
            symmetry_resamples: 200,
        }
    }
}

impl PopdynConfig {
    pub fn params(&self, seed: u64) -> PdParams {
        PdParams {
            population_size: self.population_size,
            max_sweeps: self.max_sweeps,
            window: self.window,
            tolerance: self.tolerance,
            field_cap: self.field_cap,
            seed,
            measure_sweeps: self.measure_sweeps,
            samples: self.samples,
        }
    }
}

/// User-supplied affine map from the per-chip free energy to spectral
/// efficiency: `scale * f + offset + load_coefficient * α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineHook {
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub load_coefficient: f64,
}

impl AffineHook {
    pub fn apply(&self, free_energy: f64, load: f64) -> f64 {
        self.scale * free_energy + self.offset + self.load_coefficient * load
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub spec: SpecConfig,
    pub sigma0_grid: Vec<f64>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub popdyn: PopdynConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Chip degrees scanned by `popdyn_scan`; defaults to `spec.L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_efficiency: Option<AffineHook>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: origin.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = Self::from_json(&text, path)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every field, collecting all problems into one
    /// [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            problems.push(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            ));
        }
        let spec = match self.spec.to_spec() {
            Ok(spec) => Some(spec),
            Err(Error::Config(p)) => {
                problems.extend(p);
                None
            }
            Err(e) => return Err(e),
        };
        if self.sigma0_grid.is_empty() {
            problems.push("sigma0_grid: must not be empty".into());
        }
        for (i, s) in self.sigma0_grid.iter().enumerate() {
            if !(*s > 0.0) || !s.is_finite() {
                problems.push(format!(
                    "sigma0_grid[{i}]: {s} is not a positive finite noise level"
                ));
            }
        }
        if self.sigma0_grid.windows(2).any(|w| !(w[0] < w[1])) {
            problems.push("sigma0_grid: must be strictly increasing".into());
        }
        if self.trials == 0 {
            problems.push("trials: must be at least 1".into());
        }

        let d = &self.detector;
        if d.max_iterations == 0 {
            problems.push("detector.max_iterations: must be at least 1".into());
        }
        if !(d.tolerance > 0.0) {
            problems.push("detector.tolerance: must be positive".into());
        }
        if !(0.0..1.0).contains(&d.damping) {
            problems.push(format!("detector.damping: {} outside [0, 1)", d.damping));
        }

        let p = &self.popdyn;
        if p.population_size < 2 {
            problems.push("popdyn.population_size: must be at least 2".into());
        }
        if p.window == 0 {
            problems.push("popdyn.window: must be positive".into());
        }
        if p.max_sweeps == 0 {
            problems.push("popdyn.max_sweeps: must be positive".into());
        }
        if !(p.tolerance > 0.0) {
            problems.push("popdyn.tolerance: must be positive".into());
        }
        if !(p.field_cap > 0.0) {
            problems.push("popdyn.field_cap: must be positive".into());
        }
        if p.measure_sweeps < 2 {
            problems.push("popdyn.measure_sweeps: must be at least 2".into());
        }
        if p.samples < 2 {
            problems.push("popdyn.samples: must be at least 2".into());
        }
        if p.symmetry_bins == 0 {
            problems.push("popdyn.symmetry_bins: must be positive".into());
        }

        if let Some(hook) = &self.spectral_efficiency {
            if !hook.scale.is_finite()
                || !hook.offset.is_finite()
                || !hook.load_coefficient.is_finite()
            {
                problems.push("spectral_efficiency: constants must be finite".into());
            }
        }

        if let Some(ls) = &self.l_values {
            if self.experiment != ExperimentKind::PopdynScan {
                problems.push("l_values: only used by popdyn_scan".into());
            }
            if ls.is_empty() {
                problems.push("l_values: must not be empty".into());
            }
            for (i, &l) in ls.iter().enumerate() {
                if l == 0 || l > cdmalab_core::factor::MAX_ENUMERATED_NEIGHBOURS {
                    problems.push(format!(
                        "l_values[{i}]: {l} outside 1..={}",
                        cdmalab_core::factor::MAX_ENUMERATED_NEIGHBOURS
                    ));
                }
            }
        }

        if let Some(spec) = spec {
            match self.experiment {
                ExperimentKind::PopdynScan | ExperimentKind::EquivalenceCheck => {
                    if spec.regularity != Regularity::FullyRegular {
                        problems.push(
                            "spec.regularity: population dynamics needs fully-regular".into(),
                        );
                    }
                    if spec.chip_degree > cdmalab_core::factor::MAX_ENUMERATED_NEIGHBOURS {
                        problems.push(format!(
                            "spec.L: {} exceeds {}",
                            spec.chip_degree,
                            cdmalab_core::factor::MAX_ENUMERATED_NEIGHBOURS
                        ));
                    }
                }
                ExperimentKind::NaesatCensus => {
                    if spec.modulation != Modulation::Unmodulated {
                        problems.push("spec.modulation: the census needs unmodulated codes".into());
                    }
                    if spec.users > cdmalab_core::landscape::MAX_CENSUS_USERS {
                        problems.push(format!(
                            "spec.K: {} exceeds the census limit {}",
                            spec.users,
                            cdmalab_core::landscape::MAX_CENSUS_USERS
                        ));
                    }
                }
                ExperimentKind::MomentCheck => {
                    if self.trials < 2 {
                        problems.push("trials: the moment check needs at least 2".into());
                    }
                }
                ExperimentKind::DetectSweep => {}
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn ensemble(&self) -> Result<EnsembleSpec> {
        self.spec.to_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "experiment": "detect_sweep",
        "spec": {"K": 12, "N": 6, "C": 3, "L": 6, "modulation": "bpsk"},
        "sigma0_grid": [0.5, 1.0]
    }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.trials, 1);
        assert_eq!(c.seed, 0);
        assert_eq!(c.popdyn, PopdynConfig::default());
        assert_eq!(c.ensemble().unwrap().regularity, Regularity::FullyRegular);
    }

    #[test]
    fn round_trips_through_json() {
        let c = ExperimentConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        let again = ExperimentConfig::from_json(&c.to_json(), Path::new("c.json")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"sigma0_grid\"", "\"colour\": 1, \"sigma0_grid\"");
        assert!(matches!(
            ExperimentConfig::from_json(&text, Path::new("c.json")),
            Err(Error::Json { .. })
        ));
        let nested = MINIMAL.replace("\"modulation\"", "\"gain\": 2, \"modulation\"");
        assert!(ExperimentConfig::from_json(&nested, Path::new("c.json")).is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = ExperimentConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        c.schema_version = 7;
        c.sigma0_grid = vec![];
        c.trials = 0;
        c.detector.damping = 1.5;
        let Err(Error::Config(problems)) = c.validate() else {
            panic!("expected a config error");
        };
        let fields: Vec<&str> = problems
            .iter()
            .map(|p| p.split(':').next().unwrap())
            .collect();
        assert_eq!(
            fields,
            [
                "schema_version",
                "sigma0_grid",
                "trials",
                "detector.damping"
            ]
        );
    }
}
