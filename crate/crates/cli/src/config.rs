//! Flat key-value experiment configuration: parsing, validation, and
//! lossless round-trip serialization.

use serde::{Deserialize, Serialize};

/// Problem family an experiment belongs to; selects forward model, inverse
/// pipeline, and certificate modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    HeatPotential,
    WaveSource,
    WavePotentialDamping,
    BoundaryDamping,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::HeatPotential => "heat-potential",
            Problem::WaveSource => "wave-source",
            Problem::WavePotentialDamping => "wave-potential-damping",
            Problem::BoundaryDamping => "boundary-damping",
        }
    }
}

/// Named convolution kernels for the deconvolution subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    One,
    ExpDecay,
    CosThree,
    ExpImaginary,
}

/// Perturbation shape scaled by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Parabola,
    FirstMode,
    Constant,
}

/// Stability modulus family used by `certify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulusKind {
    Hoelder,
    LogPower,
}

fn default_forward_nodes() -> usize {
    0 // replaced by 2 * inversion_nodes - 1 during validation
}
fn default_probes() -> usize {
    4
}
fn default_s() -> f64 {
    3.0
}
fn default_amplitude() -> f64 {
    0.3
}
fn default_kappa() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.5
}
fn default_profile() -> ProfileKind {
    ProfileKind::FirstMode
}
fn default_kernel() -> KernelKind {
    KernelKind::ExpDecay
}
fn default_coefficients() -> Vec<f64> {
    vec![1.0, 0.0, 0.5]
}
fn default_out_dir() -> String {
    "out".into()
}

/// One experiment, fully described by a flat TOML file. Unknown keys are
/// rejected so misspellings never fall back to defaults silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Nodes per direction of the inversion grid.
    pub inversion_nodes: usize,
    /// Nodes per direction of the forward (data synthesis) grid; defaults
    /// to 2 * inversion_nodes - 1, and must at least double the resolution.
    #[serde(default = "default_forward_nodes")]
    pub forward_nodes: usize,
    pub tau: f64,
    /// Time step on the inversion grid; the forward grid halves it.
    pub dt: f64,
    /// Seed of the portable noise generator; required for reproducibility.
    pub seed: u64,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_profile")]
    pub profile: ProfileKind,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    /// Spectral coefficients of the planted source (wave-source problem).
    #[serde(default = "default_coefficients")]
    pub source_coefficients: Vec<f64>,
    /// Sweep amplitudes, largest first.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Certificate modulus; `None` selects the problem's designated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_parameter: Option<f64>,
    #[serde(default = "default_out_dir")]
    pub output_dir: String,
}

/// A config violation with enough context to fix it.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.constraint)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        if config.forward_nodes == 0 {
            config.forward_nodes = 2 * config.inversion_nodes - 1;
        }
        let violations = config.validate();
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }

    pub fn serialize(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        let mut push = |key: &str, constraint: String| {
            errors.push(ConfigError { key: key.into(), constraint });
        };
        if self.inversion_nodes < 3 {
            push("inversion_nodes", "must be at least 3".into());
        }
        // Inverse-crime guard: data must come from a strictly finer grid,
        // at least doubling the cell resolution in each direction.
        if self.forward_nodes < 2 * self.inversion_nodes - 1 {
            push(
                "forward_nodes",
                format!(
                    "inverse-crime guard: forward grid must at least double the \
                     inversion resolution (need >= {}, got {})",
                    2 * self.inversion_nodes - 1,
                    self.forward_nodes
                ),
            );
        }
        if !(self.tau > 0.0) {
            push("tau", format!("must be positive, got {}", self.tau));
        }
        if !(self.dt > 0.0) {
            push("dt", format!("must be positive, got {}", self.dt));
        }
        if self.probes == 0 {
            push("probes", "must be positive".into());
        }
        if !(self.s >= 1.0) {
            push("s", format!("must be at least 1, got {}", self.s));
        }
        if self.noise_level < 0.0 {
            push("noise_level", "must be nonnegative".into());
        }
        if !(self.kappa > 0.0) {
            push("kappa", "must be positive".into());
        }
        if !(self.delta > 0.0) {
            push("delta", "must be positive".into());
        }
        if self.amplitudes.windows(2).any(|w| w[0] <= w[1]) {
            push("amplitudes", "must be strictly decreasing".into());
        }
        if self.amplitudes.iter().any(|&a| a < 0.0) {
            push("amplitudes", "must be nonnegative".into());
        }
        if let Some(p) = self.modulus_parameter {
            if !(p > 0.0) {
                push("modulus_parameter", "must be positive".into());
            }
        }
        if self.output_dir.is_empty() {
            push("output_dir", "must be nonempty".into());
        }
        errors
    }
}
