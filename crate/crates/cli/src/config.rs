//! JSON run configuration.

use distwave_core::data::DataFunction;
use distwave_core::numerics::linspace;
use distwave_core::potential::PotentialSpec;
use distwave_core::spectral::TableConfig;
use distwave_core::verify::{DecayVariant, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    /// Dotted field path, `.` for the document root.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    List(Vec<f64>),
    Range { start: f64, end: f64, count: usize },
}

impl Times {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Times::List(v) => v.clone(),
            Times::Range { start, end, count } => linspace(*start, *end, *count),
        }
    }

    fn max(&self) -> f64 {
        self.values().into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "zero_data")]
    pub f: DataFunction,
    #[serde(default = "zero_data")]
    pub g: DataFunction,
}

fn zero_data() -> DataFunction {
    DataFunction::Zero
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Verification {
    Dispersive {
        scenario: String,
        sigma: f64,
        times: Times,
        #[serde(default = "yes")]
        acceptance: bool,
    },
    Energy {
        scenario: String,
        #[serde(default)]
        k: usize,
        #[serde(default)]
        l: usize,
        times: Times,
        #[serde(default = "yes")]
        acceptance: bool,
    },
    VectorField {
        scenario: String,
        m: usize,
        #[serde(default)]
        k: usize,
        times: Times,
        #[serde(default = "yes")]
        acceptance: bool,
    },
    LocalEnergyDecay {
        scenario: String,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        k: usize,
        #[serde(default)]
        l: usize,
        #[serde(default = "cos_variant")]
        variant: DecayVariant,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_saturation")]
        saturation_time: f64,
        #[serde(default = "default_decay_dt")]
        dt: f64,
        times: Times,
        #[serde(default = "yes")]
        acceptance: bool,
    },
    DivergenceForm {
        scenario: String,
        #[serde(default)]
        k: usize,
        #[serde(default)]
        l: usize,
        times: Times,
        #[serde(default = "yes")]
        acceptance: bool,
    },
}

fn cos_variant() -> DecayVariant {
    DecayVariant::Cos
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_saturation() -> f64 {
    40.0
}
fn default_decay_dt() -> f64 {
    0.25
}

impl Verification {
    pub fn scenario(&self) -> &str {
        match self {
            Verification::Dispersive { scenario, .. }
            | Verification::Energy { scenario, .. }
            | Verification::VectorField { scenario, .. }
            | Verification::LocalEnergyDecay { scenario, .. }
            | Verification::DivergenceForm { scenario, .. } => scenario,
        }
    }

    pub fn acceptance(&self) -> bool {
        match self {
            Verification::Dispersive { acceptance, .. }
            | Verification::Energy { acceptance, .. }
            | Verification::VectorField { acceptance, .. }
            | Verification::LocalEnergyDecay { acceptance, .. }
            | Verification::DivergenceForm { acceptance, .. } => *acceptance,
        }
    }

    /// Largest time at which the spectral propagator is evaluated.
    pub fn max_time(&self) -> f64 {
        match self {
            Verification::LocalEnergyDecay {
                times, saturation_time, ..
            } => times.max().max(2.0 * saturation_time),
            Verification::Dispersive { times, .. }
            | Verification::Energy { times, .. }
            | Verification::VectorField { times, .. }
            | Verification::DivergenceForm { times, .. } => times.max(),
        }
    }

    /// File stem for the report and plot data.
    pub fn label(&self, index: usize) -> String {
        let kind = match self {
            Verification::Dispersive { sigma, .. } => format!("dispersive_sigma{sigma}"),
            Verification::Energy { k, l, .. } => format!("energy_k{k}_l{l}"),
            Verification::VectorField { m, k, .. } => format!("vector_field_m{m}_k{k}"),
            Verification::LocalEnergyDecay { m, variant, .. } => {
                let v = match variant {
                    DecayVariant::Cos => "cos",
                    DecayVariant::Sin => "sin",
                };
                format!("local_energy_decay_{v}_m{m}")
            }
            Verification::DivergenceForm { k, l, .. } => format!("divergence_form_k{k}_l{l}"),
        };
        format!("{index:02}_{kind}_{}", self.scenario())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub snapshot_times: Times,
    /// Every n-th x sample is written to the snapshot file.
    pub snapshot_stride: usize,
    pub energy_times: Times,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            snapshot_times: Times::List(vec![0.0, 5.0, 10.0]),
            snapshot_stride: 10,
            energy_times: Times::Range {
                start: 0.0,
                end: 50.0,
                count: 26,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub scenario: Option<String>,
    pub times: Vec<f64>,
    pub dx: f64,
    /// Ratio dt/dx.
    pub courant: f64,
    /// Spacings for the convergence-order fit at the last comparison time.
    pub refinement: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            scenario: None,
            times: vec![5.0, 10.0, 20.0],
            dx: 0.01,
            courant: 0.5,
            refinement: vec![0.08, 0.04, 0.02],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub stride: usize,
    pub commutator_time: f64,
    /// Centre and width of the frequency bump used for identity checks.
    pub bump_center: f64,
    pub bump_width: f64,
    pub diagonal_points: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            stride: 16,
            commutator_time: 5.0,
            bump_center: 2.5,
            bump_width: 0.4,
            diagonal_points: vec![1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: TableConfig,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub verifications: Vec<Verification>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::at(".", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// Largest propagation time requested anywhere in the configuration.
    pub fn max_time(&self) -> f64 {
        let mut t = 0.0f64;
        if !self.scenarios.is_empty() {
            t = t
                .max(self.evolution.snapshot_times.max())
                .max(self.evolution.energy_times.max())
                .max(self.kernel.commutator_time);
        }
        if self.oracle.scenario.is_some() {
            t = self.oracle.times.iter().cloned().fold(t, f64::max);
        }
        self.verifications.iter().fold(t, |m, v| m.max(v.max_time()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid
            .validate()
            .map_err(|e| ConfigError::at("grid", e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            if !seen.insert(s.name.as_str()) {
                return Err(ConfigError::at(format!("scenarios[{i}].name"), format!("duplicate scenario {:?}", s.name)));
            }
        }
        for (i, v) in self.verifications.iter().enumerate() {
            if self.scenario(v.scenario()).is_none() {
                return Err(ConfigError::at(
                    format!("verifications[{i}].scenario"),
                    format!("unknown scenario {:?}", v.scenario()),
                ));
            }
        }
        if let Some(name) = &self.oracle.scenario {
            if self.scenario(name).is_none() {
                return Err(ConfigError::at("oracle.scenario", format!("unknown scenario {name:?}")));
            }
        }
        if self.evolution.snapshot_stride == 0 {
            return Err(ConfigError::at("evolution.snapshot_stride", "must be positive"));
        }
        if self.kernel.stride == 0 {
            return Err(ConfigError::at("kernel.stride", "must be positive"));
        }
        let t = self.max_time();
        if t > self.grid.t_max {
            return Err(ConfigError::at(
                "grid.t_max",
                format!("requested time {t} exceeds t_max {}; the frequency grid would not resolve it", self.grid.t_max),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"potential": {"kind": "zero"}}"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.grid, TableConfig::default());
        assert_eq!(c.output, PathBuf::from("out"));
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = RunConfig::from_json(r#"{"potential": {"kind": "zero"}, "grid": {"dx": "a"}}"#).unwrap_err();
        assert_eq!(e.path, "grid.dx");
        let e = RunConfig::from_json(r#"{"potential": {"kind": "zero"}, "grid": {"dxx": 1}}"#).unwrap_err();
        assert_eq!(e.path, "grid.dxx");
        let e = RunConfig::from_json(
            r#"{"potential": {"kind": "zero"},
                "scenarios": [{"name": "a"}],
                "verifications": [{"kind": "energy", "scenario": "b", "times": [1]}]}"#,
        )
        .unwrap_err();
        assert_eq!(e.path, "verifications[0].scenario");
        let e = RunConfig::from_json(
            r#"{"potential": {"kind": "zero"}, "grid": {"t_max": 10},
                "scenarios": [{"name": "a"}],
                "verifications": [{"kind": "energy", "scenario": "a", "times": {"start": 0, "end": 20, "count": 3}}]}"#,
        )
        .unwrap_err();
        assert_eq!(e.path, "grid.t_max");
        assert!(RunConfig::from_json("{").is_err());
    }

    #[test]
    fn labels_are_distinct() {
        let v = Verification::Dispersive {
            scenario: "gauss".into(),
            sigma: 0.5,
            times: Times::List(vec![1.0]),
            acceptance: true,
        };
        assert_eq!(v.label(3), "03_dispersive_sigma0.5_gauss");
    }
}
