//! Experiment configuration: JSON schema types, semantic validation
//! with field-path error messages, and coupling construction.

use serde::{Deserialize, Serialize};

use ising_core::coupling::{
    self, read_matrix, CouplingMatrix, RegularKind, WignerLaw,
};
use ising_core::meanfield::ModelParams;
use ising_core::sampler::{InitKind, SamplerConfig};

/// A validation failure naming the offending config field.
#[derive(Debug)]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(field: &str, reason: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub beta: f64,
    #[serde(default)]
    pub b: f64,
}

impl ParamsSpec {
    pub fn to_params(&self, prefix: &str) -> Result<ModelParams, ValidationError> {
        ModelParams::new(self.beta, self.b)
            .map_err(|e| invalid(&format!("{prefix}.beta"), e.to_string()))
    }
}

/// Builder description (ensemble + parameters + seed) or a matrix
/// file path.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CouplingSpec {
    fn need_n(&self) -> Result<usize, ValidationError> {
        self.n.ok_or_else(|| invalid("coupling.n", "required"))
    }

    /// Build the coupling matrix, translating parameter problems into
    /// field-path validation errors.
    pub fn build(&self, default_seed: u64) -> Result<CouplingMatrix, ValidationError> {
        if let Some(path) = &self.file {
            if self.ensemble.is_some() {
                return Err(invalid(
                    "coupling",
                    "give either `file` or `ensemble`, not both",
                ));
            }
            return read_matrix(std::path::Path::new(path))
                .map_err(|e| invalid("coupling.file", e.to_string()));
        }
        let ensemble = self
            .ensemble
            .as_deref()
            .ok_or_else(|| invalid("coupling.ensemble", "required (or give `file`)"))?;
        let seed = self.seed.unwrap_or(default_seed);
        let lift = |field: &'static str| {
            move |e: ising_core::Error| invalid(field, e.to_string())
        };
        match ensemble {
            "complete" => {
                let n = self.need_n()?;
                coupling::build_regular(n, n.saturating_sub(1), RegularKind::Complete, seed)
                    .map_err(lift("coupling.n"))
            }
            "curie-weiss" => {
                let n = self.need_n()?;
                if n < 2 {
                    return Err(invalid("coupling.n", "needs n >= 2"));
                }
                let k = coupling::build_regular(n, n - 1, RegularKind::Complete, seed)
                    .map_err(lift("coupling.n"))?;
                Ok(k.rescaled((n as f64 - 1.0) / n as f64))
            }
            "random-regular" | "circulant" | "bipartite-regular" => {
                let n = self.need_n()?;
                let d = self.d.ok_or_else(|| invalid("coupling.d", "required"))?;
                let kind = match ensemble {
                    "random-regular" => RegularKind::RandomRegular,
                    "circulant" => RegularKind::Circulant,
                    _ => RegularKind::BipartiteRegular,
                };
                coupling::build_regular(n, d, kind, seed).map_err(lift("coupling.d"))
            }
            "erdos-renyi" => {
                let n = self.need_n()?;
                let p = self.p.ok_or_else(|| invalid("coupling.p", "required"))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(invalid(
                        "coupling.p",
                        format!("must lie in (0, 1], got {p}"),
                    ));
                }
                coupling::build_erdos_renyi(n, p, seed).map_err(lift("coupling.p"))
            }
            "sbm" => {
                let sizes = self
                    .block_sizes
                    .as_ref()
                    .ok_or_else(|| invalid("coupling.block_sizes", "required"))?;
                let prob = self
                    .prob
                    .as_ref()
                    .ok_or_else(|| invalid("coupling.prob", "required"))?;
                coupling::build_sbm(sizes, prob, seed).map_err(lift("coupling.prob"))
            }
            "block-spin" => {
                let n = self.need_n()?;
                let a = self.a.ok_or_else(|| invalid("coupling.a", "required"))?;
                let b = self.b.ok_or_else(|| invalid("coupling.b", "required"))?;
                coupling::build_block_spin(n, a, b).map_err(lift("coupling.a"))
            }
            "wigner-exponential" | "wigner-uniform" => {
                let n = self.need_n()?;
                let mean = self
                    .mean
                    .ok_or_else(|| invalid("coupling.mean", "required"))?;
                let law = if ensemble == "wigner-exponential" {
                    WignerLaw::Exponential { mean }
                } else {
                    WignerLaw::Uniform { mean }
                };
                coupling::build_wigner(n, law, seed).map_err(lift("coupling.mean"))
            }
            "line-graph-complete" => {
                let m = self.m.ok_or_else(|| invalid("coupling.m", "required"))?;
                coupling::build_line_graph_complete(m).map_err(lift("coupling.m"))
            }
            other => Err(invalid(
                "coupling.ensemble",
                format!("unknown ensemble `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "default_burn_in")]
    pub burn_in_sweeps: usize,
    #[serde(default = "default_thin")]
    pub thin_sweeps: usize,
    pub n_samples: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_init")]
    pub init: String,
}

fn default_burn_in() -> usize {
    200
}
fn default_thin() -> usize {
    1
}
fn default_chains() -> usize {
    4
}
fn default_init() -> String {
    "random".into()
}

impl SamplerSpec {
    pub fn to_config(&self) -> Result<SamplerConfig, ValidationError> {
        let init = match self.init.as_str() {
            "all_plus" => InitKind::AllPlus,
            "all_minus" => InitKind::AllMinus,
            "random" => InitKind::Random,
            "cold_at_t" => InitKind::ColdAtT,
            other => {
                return Err(invalid(
                    "sampler.init",
                    format!("unknown init `{other}` (all_plus, all_minus, random, cold_at_t)"),
                ))
            }
        };
        if self.thin_sweeps == 0 || self.n_samples == 0 || self.n_chains == 0 {
            return Err(invalid(
                "sampler",
                "n_samples, n_chains and thin_sweeps must be positive",
            ));
        }
        Ok(SamplerConfig {
            burn_in_sweeps: self.burn_in_sweeps,
            thin_sweeps: self.thin_sweeps,
            n_samples: self.n_samples,
            n_chains: self.n_chains,
            master_seed: self.master_seed,
            init,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub statistic: String,
    pub limit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// Thresholds used by the named experiments; every gate the runners
/// apply is read from here, not hard-coded.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consecutive_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_params: Option<Vec<ParamsSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gating: Option<bool>,
}

fn default_experiment() -> String {
    "single".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| invalid("<config>", format!("does not match the schema: {e}")))?;
        if cfg.name.is_empty() {
            return Err(invalid("name", "must be nonempty"));
        }
        let known = [
            "single",
            "cw-rate",
            "critical-rate",
            "disjoint-limit",
            "meanfield-gap",
            "line-graph-shift",
            "concentration",
        ];
        if !known.contains(&cfg.experiment.as_str()) {
            return Err(invalid(
                "experiment",
                format!("unknown experiment `{}`", cfg.experiment),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("<config>", format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        if let Some(c) = &cfg.coupling {
            if let Some(f) = &c.file {
                if !std::path::Path::new(f).exists() {
                    return Err(invalid("coupling.file", format!("{f} does not exist")));
                }
            }
        }
        Ok(cfg)
    }
}
