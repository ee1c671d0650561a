//! Experiment configuration: a flat key=value file with `[section]` headers,
//! overridable from the command line, resolved into oracles/quantizers/
//! schedules. The JSON sidecar written next to each trace embeds the
//! resolved config plus the generated problem instance and is the canonical
//! replay artifact.

use qgrad::optimizer::{StepSchedule, StoppingRule};
use qgrad::problems::{
    generate_flow_network, generate_task_allocation, generate_tcp, ObjectiveOracle,
    ProblemInstance,
};
use qgrad::quantization::{QuantizationSet, SIGN_ENUMERATION_CAP};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {0}")]
    Parse(String),
    #[error("[{section}] {key}: {message}")]
    Field { section: &'static str, key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    fn field(section: &'static str, key: &str, message: impl Into<String>) -> Self {
        ConfigError::Field { section, key: key.to_string(), message: message.into() }
    }
}

/// Problem family plus generator parameters (or a file reference).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    Tcp {
        sources: usize,
        links: usize,
        density: f64,
        utility_scale: f64,
        capacity: f64,
        rate_min: f64,
        rate_max: f64,
    },
    Task {
        machines: usize,
        tasks: usize,
        coeff_min: f64,
        coeff_max: f64,
        cap: f64,
        demand: Vec<f64>,
    },
    Netflow {
        nodes: usize,
        extra_edges: usize,
        rho_min: f64,
        rho_max: f64,
        injection_scale: f64,
    },
    Quadratic {
        dims: usize,
        scale: f64,
        orthant: bool,
    },
    Scalar,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantizerSpec {
    Sign,
    Minimal,
    Circular { n: usize },
    NormalBasis,
    File { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub quantizer: QuantizerSpec,
    pub schedule: StepSchedule,
    pub stopping: Option<StoppingRule>,
    pub max_iter: usize,
    pub seed: u64,
    pub record_x: bool,
    /// Output path stem; `.csv` / `.json` are appended.
    pub output: PathBuf,
    /// Start iterate: a scalar fill value or a full vector.
    pub x0: X0Spec,
    /// α for the recorded L_α column.
    pub l_alpha: f64,
    /// Keep γ as the unit-direction step even for tcp+sign runs (the
    /// default for that pair interprets γ per coordinate, matching the flow
    /// experiments: effective step γ·√N).
    pub unit_step: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Fill(f64),
    Vector(Vec<f64>),
}

impl Default for ExperimentConfig {
    /// The flow-control experiment shape: S=20 sources, N=100 links,
    /// density 1/2, utilities 1000·log(1+q), unit capacities, rates in
    /// \[0,1\], sign quantizer, γ = 0.1, 10^4 iterations.
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemSpec::Tcp {
                sources: 20,
                links: 100,
                density: 0.5,
                utility_scale: 1000.0,
                capacity: 1.0,
                rate_min: 0.0,
                rate_max: 1.0,
            },
            quantizer: QuantizerSpec::Sign,
            schedule: StepSchedule::Constant { gamma: 0.1 },
            stopping: None,
            max_iter: 10_000,
            seed: 1,
            record_x: false,
            output: PathBuf::from("qgrad-run"),
            x0: X0Spec::Fill(0.0),
            l_alpha: 1.0,
            unit_step: false,
        }
    }
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

/// Parses the `[section]` / `key = value` format. `#` starts a comment.
fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::from("");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
        } else if let Some((key, value)) = line.split_once('=') {
            if current.is_empty() {
                return Err(ConfigError::Parse(format!(
                    "line {}: key outside any [section]",
                    lineno + 1
                )));
            }
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        } else {
            return Err(ConfigError::Parse(format!(
                "line {}: expected `key = value` or `[section]`, got {line:?}",
                lineno + 1
            )));
        }
    }
    Ok(sections)
}

struct Section<'a> {
    name: &'static str,
    map: Option<&'a BTreeMap<String, String>>,
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.map.and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| ConfigError::field(self.name, key, format!("{e} (got {raw:?})"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .get(key)
            .ok_or_else(|| ConfigError::field(self.name, key, "missing"))?;
        raw.parse()
            .map_err(|e| ConfigError::field(self.name, key, format!("{e} (got {raw:?})")))
    }
}

impl ExperimentConfig {
    /// Parses config text, then applies `section.key=value` overrides.
    pub fn from_str_with_overrides(
        text: &str,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut sections = parse_sections(text)?;
        for ov in overrides {
            let (path, value) = ov.split_once('=').ok_or_else(|| {
                ConfigError::Parse(format!("override {ov:?} must look like section.key=value"))
            })?;
            let (section, key) = path.trim().split_once('.').ok_or_else(|| {
                ConfigError::Parse(format!("override key {path:?} must be section.key"))
            })?;
            sections
                .entry(section.trim().to_string())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_sections(&sections)
    }

    fn from_sections(sections: &Sections) -> Result<Self, ConfigError> {
        let defaults = ExperimentConfig::default();
        let sec = |name: &'static str| Section { name, map: sections.get(name) };

        let problem = {
            let s = sec("problem");
            match s.parse::<String>("family", "tcp".into())?.as_str() {
                "tcp" => ProblemSpec::Tcp {
                    sources: s.parse("sources", 20)?,
                    links: s.parse("links", 100)?,
                    density: s.parse("density", 0.5)?,
                    utility_scale: s.parse("utility_scale", 1000.0)?,
                    capacity: s.parse("capacity", 1.0)?,
                    rate_min: s.parse("rate_min", 0.0)?,
                    rate_max: s.parse("rate_max", 1.0)?,
                },
                "task" => ProblemSpec::Task {
                    machines: s.parse("machines", 4)?,
                    tasks: s.parse("tasks", 2)?,
                    coeff_min: s.parse("coeff_min", 1.0)?,
                    coeff_max: s.parse("coeff_max", 5.0)?,
                    cap: s.parse("cap", 3.0)?,
                    demand: parse_vector(s.get("demand").unwrap_or("2,2"))
                        .map_err(|e| ConfigError::field("problem", "demand", e))?,
                },
                "netflow" => ProblemSpec::Netflow {
                    nodes: s.parse("nodes", 8)?,
                    extra_edges: s.parse("extra_edges", 6)?,
                    rho_min: s.parse("rho_min", 0.5)?,
                    rho_max: s.parse("rho_max", 2.0)?,
                    injection_scale: s.parse("injection_scale", 1.0)?,
                },
                "quadratic" => ProblemSpec::Quadratic {
                    dims: s.parse("dims", 4)?,
                    scale: s.parse("scale", 1.0)?,
                    orthant: s.parse("orthant", false)?,
                },
                "scalar" => ProblemSpec::Scalar,
                "file" => ProblemSpec::File { path: PathBuf::from(s.require::<String>("path")?) },
                other => {
                    return Err(ConfigError::field(
                        "problem",
                        "family",
                        format!("unknown family {other:?}"),
                    ))
                }
            }
        };

        let quantizer = {
            let s = sec("quantizer");
            match s.parse::<String>("kind", "sign".into())?.as_str() {
                "sign" => QuantizerSpec::Sign,
                "minimal" => QuantizerSpec::Minimal,
                "circular" => QuantizerSpec::Circular { n: s.require("n")? },
                "normal_basis" | "normal-basis" => QuantizerSpec::NormalBasis,
                "file" => QuantizerSpec::File { path: PathBuf::from(s.require::<String>("path")?) },
                other => {
                    return Err(ConfigError::field(
                        "quantizer",
                        "kind",
                        format!("unknown kind {other:?}"),
                    ))
                }
            }
        };

        let schedule = {
            let s = sec("schedule");
            match s.parse::<String>("kind", "constant".into())?.as_str() {
                "constant" => StepSchedule::constant(s.parse("gamma", 0.1)?)
                    .map_err(|e| ConfigError::field("schedule", "gamma", e.to_string()))?,
                "power" => StepSchedule::power(s.parse("gamma0", 1.0)?, s.parse("p", 0.6)?)
                    .map_err(|e| ConfigError::field("schedule", "p", e.to_string()))?,
                other => {
                    return Err(ConfigError::field(
                        "schedule",
                        "kind",
                        format!("unknown kind {other:?}"),
                    ))
                }
            }
        };

        let stopping = {
            let s = sec("stopping");
            let rule = match s.parse::<String>("rule", "none".into())?.as_str() {
                "none" => None,
                "grad_norm" | "grad-norm" => {
                    Some(StoppingRule::GradNorm { epsilon: s.require("epsilon")? })
                }
                "l_alpha" | "l-alpha" => Some(StoppingRule::LAlpha {
                    epsilon: s.require("epsilon")?,
                    alpha: s.parse("alpha", 1.0)?,
                }),
                "gap" => Some(StoppingRule::Gap { epsilon: s.require("epsilon")? }),
                "max_iter" | "max-iter" => {
                    Some(StoppingRule::MaxIter { iters: s.require("iters")? })
                }
                other => {
                    return Err(ConfigError::field(
                        "stopping",
                        "rule",
                        format!("unknown rule {other:?}"),
                    ))
                }
            };
            if let Some(rule) = &rule {
                rule.validate()
                    .map_err(|e| ConfigError::field("stopping", "epsilon", e.to_string()))?;
            }
            rule
        };

        let s = sec("run");
        let x0 = match s.get("x0") {
            None => defaults.x0.clone(),
            Some(raw) if raw.contains(',') => X0Spec::Vector(
                parse_vector(raw).map_err(|e| ConfigError::field("run", "x0", e))?,
            ),
            Some(raw) => X0Spec::Fill(
                raw.parse()
                    .map_err(|e| ConfigError::field("run", "x0", format!("{e}")))?,
            ),
        };
        Ok(ExperimentConfig {
            problem,
            quantizer,
            schedule,
            stopping,
            max_iter: s.parse("max_iter", defaults.max_iter)?,
            seed: s.parse("seed", defaults.seed)?,
            record_x: s.parse("record_x", defaults.record_x)?,
            output: PathBuf::from(s.parse::<String>("output", "qgrad-run".into())?),
            x0,
            l_alpha: s.parse("l_alpha", defaults.l_alpha)?,
            unit_step: s.parse("unit_step", defaults.unit_step)?,
        })
    }

    /// Generates/loads the problem instance this config describes.
    pub fn build_instance(&self) -> Result<ProblemInstance, ConfigError> {
        let seed = self.seed;
        let fail = |e: String| ConfigError::Invalid(e);
        Ok(match &self.problem {
            ProblemSpec::Tcp {
                sources,
                links,
                density,
                utility_scale,
                capacity,
                rate_min,
                rate_max,
            } => ProblemInstance::Tcp(
                generate_tcp(
                    seed,
                    *sources,
                    *links,
                    *density,
                    *utility_scale,
                    *capacity,
                    (*rate_min, *rate_max),
                )
                .map_err(|e| fail(e.to_string()))?,
            ),
            ProblemSpec::Task { machines, tasks, coeff_min, coeff_max, cap, demand } => {
                ProblemInstance::TaskAllocation(generate_task_allocation(
                    seed,
                    *machines,
                    *tasks,
                    (*coeff_min, *coeff_max),
                    *cap,
                    demand.clone(),
                ))
            }
            ProblemSpec::Netflow { nodes, extra_edges, rho_min, rho_max, injection_scale } => {
                ProblemInstance::NetworkFlow(
                    generate_flow_network(
                        seed,
                        *nodes,
                        *extra_edges,
                        (*rho_min, *rho_max),
                        *injection_scale,
                    )
                    .map_err(|e| fail(e.to_string()))?,
                )
            }
            ProblemSpec::Quadratic { dims, scale, orthant } => {
                let domain = if *orthant {
                    qgrad::Domain::NonnegativeOrthant
                } else {
                    qgrad::Domain::Unconstrained
                };
                qgrad::problems::generate_quadratic(seed, *dims, *scale, domain)
            }
            ProblemSpec::Scalar => ProblemInstance::ScalarBenchmark,
            ProblemSpec::File { path } => {
                ProblemInstance::load(path).map_err(|e| fail(e.to_string()))?
            }
        })
    }

    /// Builds the quantizer in the instance's dimension.
    pub fn build_quantizer(&self, dims: usize) -> Result<QuantizationSet, ConfigError> {
        let fail = |e: qgrad::quantization::QuantizationError| ConfigError::Invalid(e.to_string());
        let set = match &self.quantizer {
            QuantizerSpec::Sign => {
                if dims > SIGN_ENUMERATION_CAP {
                    QuantizationSet::sign_compact(dims).map_err(fail)?
                } else {
                    QuantizationSet::sign(dims).map_err(fail)?
                }
            }
            QuantizerSpec::Minimal => QuantizationSet::minimal(dims).map_err(fail)?,
            QuantizerSpec::Circular { n } => {
                let set = QuantizationSet::circular(*n).map_err(fail)?;
                if dims != 2 {
                    return Err(ConfigError::Invalid(format!(
                        "circular quantizers live in the plane; problem dimension is {dims}"
                    )));
                }
                set
            }
            QuantizerSpec::NormalBasis => QuantizationSet::normal_basis(dims).map_err(fail)?,
            QuantizerSpec::File { path } => QuantizationSet::from_file(path).map_err(fail)?,
        };
        if set.dims() != dims {
            return Err(ConfigError::Invalid(format!(
                "quantizer dimension {} does not match problem dimension {dims}",
                set.dims()
            )));
        }
        Ok(set)
    }

    /// Start iterate in the instance's dimension, projected feasible.
    pub fn build_x0(&self, oracle: &dyn ObjectiveOracle) -> Result<Vec<f64>, ConfigError> {
        let dims = oracle.dims();
        let x0 = match &self.x0 {
            X0Spec::Fill(v) => vec![*v; dims],
            X0Spec::Vector(v) => {
                if v.len() != dims {
                    return Err(ConfigError::Invalid(format!(
                        "x0 has {} entries, problem dimension is {dims}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        Ok(qgrad::optimizer::project(&x0, &oracle.domain()))
    }

    /// Per-coordinate step convention: tcp runs with the sign quantizer
    /// interpret γ as the per-coordinate step, so the unit-direction
    /// schedule is scaled by √N. `unit_step = true` disables this.
    pub fn gamma_scale(&self, dims: usize) -> f64 {
        let tcp_sign = matches!(self.problem, ProblemSpec::Tcp { .. })
            && matches!(self.quantizer, QuantizerSpec::Sign);
        if tcp_sign && !self.unit_step {
            (dims as f64).sqrt()
        } else {
            1.0
        }
    }

    /// The schedule actually driven (γ times the per-coordinate scale).
    pub fn effective_schedule(&self, dims: usize) -> StepSchedule {
        let scale = self.gamma_scale(dims);
        match self.schedule {
            StepSchedule::Constant { gamma } => StepSchedule::Constant { gamma: gamma * scale },
            StepSchedule::Power { gamma0, p } => StepSchedule::Power { gamma0: gamma0 * scale, p },
        }
    }

}

fn parse_vector(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|tok| tok.trim().parse::<f64>().map_err(|e| format!("{e} (got {tok:?})")))
        .collect()
}
