//! Scenario files: TOML with one table per stage. Unknown keys are errors.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use ionparity::ion_model::DeviceParams;
use ionparity::protocols::ProtocolKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// `time_parity`, `spatial_parity` or `galilean_boost`.
    pub protocols: Vec<String>,
    pub device: DeviceSection,
    pub init: InitSection,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub flags: FlagsSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub preset: Option<String>,
    pub lamb_dicke: Option<f64>,
    pub heating: Option<f64>,
    pub phonon_loss: Option<f64>,
    pub dephasing: Option<f64>,
    pub emission: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    /// p₀Δ.
    pub p0: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    /// Simulated speed of light in Δν. Mutually exclusive with `omega_tilde`.
    pub c: Option<f64>,
    /// Sweep over Ω̃/ν; c follows from ηΩ̃ of the studied drive.
    pub omega_tilde: Option<Vec<f64>>,
    #[serde(default)]
    pub v_over_c: f64,
    /// Final frame-a displacement ct in units of Δ.
    pub ct_final: f64,
    /// Number of evenly spaced samples on [0, ct_final], ends included.
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// Step in 1/ν.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_fock")]
    pub fock_cutoff: usize,
}

fn default_dt() -> f64 {
    2.0 * PI / 200.0
}

fn default_fock() -> usize {
    40
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            fock_cutoff: default_fock(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "yes")]
    pub fidelity_csv: bool,
    /// Sample indices at which position distributions are written.
    /// Negative indices count from the end.
    #[serde(default)]
    pub distributions_at: Vec<i64>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
}

fn yes() -> bool {
    true
}

fn default_x_min() -> f64 {
    -10.0
}

fn default_x_max() -> f64 {
    10.0
}

fn default_x_points() -> usize {
    801
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            fidelity_csv: true,
            distributions_at: Vec::new(),
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    /// Simulate the A(k) readout on the final state.
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_k_max")]
    pub k_max: f64,
    #[serde(default = "default_k_points")]
    pub k_points: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
}

fn default_k_max() -> f64 {
    8.0
}

fn default_k_points() -> usize {
    257
}

fn default_shots() -> u64 {
    1000
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            enabled: false,
            k_max: default_k_max(),
            k_points: default_k_points(),
            shots: default_shots(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlagsSection {
    #[serde(default)]
    pub rwa_only: bool,
    #[serde(default)]
    pub noise_off: bool,
    #[serde(default)]
    pub shot_noise: bool,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn protocol_kinds(&self) -> Result<Vec<ProtocolKind>, ConfigError> {
        self.protocols
            .iter()
            .map(|p| match p.parse::<ProtocolKind>() {
                Ok(ProtocolKind::General) | Err(_) => Err(field(
                    "protocols",
                    format!("`{p}` is not one of time_parity, spatial_parity, galilean_boost"),
                )),
                Ok(k) => Ok(k),
            })
            .collect()
    }

    /// Preset with explicit overrides applied.
    pub fn device(&self) -> Result<DeviceParams, ConfigError> {
        let d = &self.device;
        let mut dev = match &d.preset {
            Some(name) => DeviceParams::preset(name)
                .ok_or_else(|| field("device.preset", format!("unknown preset `{name}`")))?,
            None => {
                let eta = d
                    .lamb_dicke
                    .ok_or_else(|| field("device.lamb_dicke", "required without a preset"))?;
                DeviceParams {
                    label: "custom".into(),
                    lamb_dicke: eta,
                    heating: 0.0,
                    phonon_loss: 0.0,
                    dephasing: 0.0,
                    emission: 0.0,
                }
            }
        };
        let overrides = [
            ("device.lamb_dicke", d.lamb_dicke, &mut dev.lamb_dicke),
            ("device.heating", d.heating, &mut dev.heating),
            ("device.phonon_loss", d.phonon_loss, &mut dev.phonon_loss),
            ("device.dephasing", d.dephasing, &mut dev.dephasing),
            ("device.emission", d.emission, &mut dev.emission),
        ];
        for (name, value, slot) in overrides {
            if let Some(v) = value {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(field(name, format!("must be non-negative, got {v}")));
                }
                *slot = v;
            }
        }
        dev.validate()
            .map_err(|e| field("device", e.to_string()))?;
        Ok(dev)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(field("name", "must not be empty"));
        }
        if self.protocols.is_empty() {
            return Err(field("protocols", "list at least one protocol"));
        }
        self.protocol_kinds()?;
        self.device()?;
        if !(self.init.p0 >= 0.0 && self.init.p0.is_finite()) {
            return Err(field("init.p0", "must be non-negative"));
        }
        let ev = &self.evolution;
        match (&ev.c, &ev.omega_tilde) {
            (Some(_), Some(_)) => {
                return Err(field("evolution.c", "give either c or omega_tilde, not both"))
            }
            (None, None) => return Err(field("evolution.c", "give c or omega_tilde")),
            (Some(c), None) if !(*c > 0.0 && c.is_finite()) => {
                return Err(field("evolution.c", "must be positive"))
            }
            (None, Some(list)) => {
                if list.is_empty() || list.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(field("evolution.omega_tilde", "need positive values"));
                }
            }
            _ => {}
        }
        if !ev.v_over_c.is_finite() {
            return Err(field("evolution.v_over_c", "must be finite"));
        }
        if 1.0 + ev.v_over_c / 2.0 == 0.0 {
            return Err(field("evolution.v_over_c", "v = −2c leaves no ancilla coupling"));
        }
        if !(ev.ct_final >= 0.0 && ev.ct_final.is_finite()) {
            return Err(field("evolution.ct_final", "must be non-negative"));
        }
        if ev.samples < 1 {
            return Err(field("evolution.samples", "need at least one sample"));
        }
        let ig = &self.integrator;
        if !(ig.dt > 0.0 && ig.dt.is_finite()) {
            return Err(field("integrator.dt", "must be positive"));
        }
        if ig.fock_cutoff < 2 {
            return Err(field("integrator.fock_cutoff", "must be at least 2"));
        }
        let out = &self.output;
        if !(out.x_max > out.x_min) || out.x_points < 2 {
            return Err(field("output.x_points", "need x_min < x_max and at least two points"));
        }
        for &i in &out.distributions_at {
            let n = ev.samples as i64;
            if i >= n || i < -n {
                return Err(field(
                    "output.distributions_at",
                    format!("index {i} outside {} samples", ev.samples),
                ));
            }
        }
        let m = &self.measurement;
        if m.enabled {
            ionparity::measurement::KGrid::new(m.k_max, m.k_points)
                .map_err(|e| field("measurement.k_points", e.to_string()))?;
            if self.flags.shot_noise && m.shots == 0 {
                return Err(field("measurement.shots", "must be positive"));
            }
        }
        Ok(())
    }

    /// Sample indices for distribution files, resolved and deduplicated.
    pub fn distribution_indices(&self) -> Vec<usize> {
        let n = self.evolution.samples as i64;
        let mut idx: Vec<usize> = self
            .output
            .distributions_at
            .iter()
            .map(|&i| if i < 0 { (n + i) as usize } else { i as usize })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub fock_cutoff: Option<usize>,
    pub dt: Option<f64>,
    pub noise_off: bool,
    pub rwa_only: bool,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if let Some(n) = self.fock_cutoff {
            cfg.integrator.fock_cutoff = n;
        }
        if let Some(dt) = self.dt {
            cfg.integrator.dt = dt;
        }
        cfg.flags.noise_off |= self.noise_off;
        cfg.flags.rwa_only |= self.rwa_only;
        if let Some(seed) = self.seed {
            cfg.flags.seed = seed;
        }
        cfg.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
protocols = ["time_parity"]
[device]
preset = "ca40_innsbruck"
[init]
p0 = 1.0
[evolution]
c = 1e-3
ct_final = 2.0
samples = 3
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.integrator.fock_cutoff, 40);
        assert!(cfg.output.fidelity_csv);
        assert!(!cfg.flags.rwa_only);
        assert_eq!(cfg.device().unwrap().lamb_dicke, 0.06);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("p0 = 1.0", "p0 = 1.0\nmomentum = 2.0");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn negative_rate_names_the_field() {
        let text = MINIMAL.replace("preset = \"ca40_innsbruck\"", "preset = \"ca40_innsbruck\"\nheating = -1e-7");
        match ScenarioConfig::from_toml(&text) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "device.heating"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_errors() {
        let both = MINIMAL.replace("c = 1e-3", "c = 1e-3\nomega_tilde = [0.01]");
        assert!(ScenarioConfig::from_toml(&both).is_err());
        let general = MINIMAL.replace("[\"time_parity\"]", "[\"general\"]");
        assert!(ScenarioConfig::from_toml(&general).is_err());
        let idx = MINIMAL.replace("samples = 3", "samples = 3\n[output]\ndistributions_at = [3]");
        assert!(ScenarioConfig::from_toml(&idx).is_err());
        let custom = MINIMAL.replace("preset = \"ca40_innsbruck\"", "heating = 0.0");
        assert!(ScenarioConfig::from_toml(&custom).is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let o = Overrides {
            fock_cutoff: Some(30),
            noise_off: true,
            seed: Some(9),
            ..Default::default()
        };
        o.apply(&mut cfg).unwrap();
        assert_eq!(cfg.integrator.fock_cutoff, 30);
        assert!(cfg.flags.noise_off);
        assert_eq!(cfg.flags.seed, 9);
        let bad = Overrides {
            dt: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.apply(&mut cfg).is_err());
    }

    #[test]
    fn negative_distribution_indices_count_from_end() {
        let text = MINIMAL.replace("samples = 3", "samples = 3\n[output]\ndistributions_at = [0, -1, 2]");
        let cfg = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.distribution_indices(), vec![0, 2]);
    }
}
