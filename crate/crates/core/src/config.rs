//! JSON run configuration and the experiment it describes.

use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::objectives::{
    parse_libsvm, read_cache, reference_minimizer, synthetic_covtype_like, Dataset, LossSign, ProblemSpec,
    ReferenceSolution,
};
use crate::sadom::{derive_hyperparameters, Hyperparameters, RunOptions, StopRule};
use crate::topology::{multi_gossip_chi, multi_gossip_rounds, tune_geometric_radius, warmup_chi, GraphKind, GraphSequenceSpec};
use crate::zeroth_order::{OracleConfig, Scheme};

/// Rounds sampled when `χ` is estimated rather than supplied.
pub const WARMUP_ROUNDS: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Logistic regression on LIBSVM data, or on the synthetic stand-in when no
    /// path is given.
    Logreg {
        #[serde(default)]
        libsvm_path: Option<PathBuf>,
        #[serde(default = "default_dim")]
        dim: usize,
        /// Keep only the first `samples` rows (synthetic: generate this many).
        #[serde(default)]
        samples: Option<usize>,
        kappa: f64,
        #[serde(default)]
        loss_sign: LossSign,
    },
    Quadratic { d: usize, mu: f64, l: f64 },
    NonsmoothAbs { d: usize, samples_per_node: usize, mu: f64 },
}

fn default_dim() -> usize {
    54
}

const DEFAULT_SYNTHETIC_SAMPLES: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    #[serde(default)]
    pub radius: Option<f64>,
    /// Geometric only: tune the radius so the warm-up `χ` approaches this.
    #[serde(default)]
    pub target_chi: Option<f64>,
    #[serde(default = "default_period")]
    pub reseed_period: u64,
    #[serde(default)]
    pub graphs: Vec<Vec<(usize, usize)>>,
}

fn default_period() -> u64 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "sadom")]
    Sadom,
    #[serde(rename = "zo-sadom")]
    ZoSadom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpOverrides {
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub chi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub nodes: usize,
    pub graph: GraphConfig,
    pub algorithm: Algorithm,
    #[serde(default = "OracleConfig::exact")]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub hp_overrides: HpOverrides,
    #[serde(default)]
    pub multi_gossip: bool,
    pub stop: StopRule,
    #[serde(default = "default_monitor")]
    pub monitor_period: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Reference-solver tolerance; the problem kind's default when absent.
    #[serde(default)]
    pub reference_tol: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub record_wall_clock: bool,
}

fn default_monitor() -> u64 {
    10
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // go through the text parser for line/column positions
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path`, applies `key.path=value` overrides, then validates.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if overrides.is_empty() {
            return Self::from_json(&text);
        }
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }
}

/// Sets `a.b.c=value` entries in a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut cur = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = cur
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("override `{key}`: `{}` is not an object", parts[..i].join("."))))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Loads a LIBSVM text file, or a binary cache when the extension is `cache`.
pub fn load_dataset(path: &Path, dim: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let ds = if path.extension().is_some_and(|e| e == "cache") {
        read_cache(BufReader::new(file))?
    } else {
        parse_libsvm(BufReader::new(file), dim)?
    };
    Ok(ds)
}

/// Builds the per-node objectives described by `cfg`.
pub fn build_problem(cfg: &ProblemConfig, nodes: usize, seed: u64) -> Result<ProblemSpec> {
    let spec = match cfg {
        ProblemConfig::Logreg {
            libsvm_path,
            dim,
            samples,
            kappa,
            loss_sign,
        } => {
            let pooled = match libsvm_path {
                Some(p) => {
                    let ds = load_dataset(p, *dim)?;
                    match samples {
                        Some(m) => ds.head(*m),
                        None => ds,
                    }
                }
                None => synthetic_covtype_like(samples.unwrap_or(DEFAULT_SYNTHETIC_SAMPLES), seed),
            };
            ProblemSpec::logistic_calibrated(&pooled, nodes, *kappa, *loss_sign)?.0
        }
        ProblemConfig::Quadratic { d, mu, l } => ProblemSpec::quadratic_suite(nodes, *d, *mu, *l, seed)?,
        ProblemConfig::NonsmoothAbs { d, samples_per_node, mu } => {
            ProblemSpec::nonsmooth_suite(nodes, *d, *samples_per_node, *mu, seed)?
        }
    };
    Ok(spec)
}

/// Geometric radius used when neither `radius` nor `target_chi` is given.
pub const DEFAULT_GEOMETRIC_RADIUS: f64 = 0.5;

pub fn build_graph_spec(cfg: &GraphConfig, nodes: usize, seed: u64) -> Result<GraphSequenceSpec> {
    let mut spec = GraphSequenceSpec::new(cfg.kind, nodes);
    spec.seed = seed;
    spec.reseed_period = cfg.reseed_period;
    spec.graphs = cfg.graphs.clone();
    if cfg.kind == GraphKind::Geometric {
        spec.radius = match (cfg.radius, cfg.target_chi) {
            (Some(r), _) => r,
            (None, Some(target)) => tune_geometric_radius(nodes, target, seed, WARMUP_ROUNDS)?.0,
            (None, None) => DEFAULT_GEOMETRIC_RADIUS,
        };
    }
    spec.validate()?;
    Ok(spec)
}

/// Everything a run needs, resolved from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: RunConfig,
    pub spec: ProblemSpec,
    pub reference: ReferenceSolution,
    pub graph: GraphSequenceSpec,
    /// `χ` of the graph sequence (supplied or estimated).
    pub chi: f64,
    pub chi_estimated: bool,
    pub gossip_rounds: u32,
    /// `L` handed to the hyperparameter formulas.
    pub l: f64,
    pub hp: Hyperparameters,
    pub oracle: OracleConfig,
    pub options: RunOptions,
}

impl Experiment {
    pub fn build(config: &RunConfig) -> Result<Self> {
        Self::build_with_reference(config, None)
    }

    /// As [`Experiment::build`], reusing a previously computed reference.
    pub fn build_with_reference(config: &RunConfig, reference: Option<ReferenceSolution>) -> Result<Self> {
        let mut oracle = config.oracle.clone();
        match config.algorithm {
            Algorithm::ZoSadom if oracle.scheme == Scheme::Exact => {
                return Err(Error::Config("zo-sadom needs oracle.scheme other than exact".into()))
            }
            Algorithm::Sadom if oracle.scheme != Scheme::Exact => {
                return Err(Error::Config("sadom uses exact gradients; set oracle.scheme to exact".into()))
            }
            Algorithm::Sadom => {
                oracle = OracleConfig {
                    seed: config.seed,
                    ..OracleConfig::exact()
                };
            }
            Algorithm::ZoSadom => {}
        }
        oracle.validate()?;
        if config.nodes == 0 {
            return Err(Error::Config("nodes must be positive".into()));
        }

        let mut spec = build_problem(&config.problem, config.nodes, config.seed)?;
        let reference = match reference {
            Some(r) if r.x_star.len() == spec.d => r,
            Some(_) => return Err(Error::Config("cached reference has the wrong dimension".into())),
            None => reference_minimizer(&spec, config.reference_tol)?,
        };
        let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; spec.d]);
        if x0.len() != spec.d {
            return Err(Error::Config(format!("x0 has length {}, expected {}", x0.len(), spec.d)));
        }
        spec.set_feasible_radius(ProblemSpec::default_feasible_radius(&x0, &reference.x_star));

        let graph = build_graph_spec(&config.graph, config.nodes, config.seed)?;
        let (chi, chi_estimated) = match config.hp_overrides.chi {
            Some(c) => (c, false),
            None => (warmup_chi(&graph, WARMUP_ROUNDS, 1.0)?, true),
        };
        let (gossip_rounds, chi_eff) = if config.multi_gossip {
            let t = multi_gossip_rounds(chi);
            (t, multi_gossip_chi(chi, t))
        } else {
            (1, chi)
        };

        let l = match (config.algorithm, spec.lipschitz_grad) {
            (Algorithm::Sadom, Some(l)) => l,
            (Algorithm::Sadom, None) => {
                return Err(Error::Config("sadom needs a smooth problem; use zo-sadom".into()))
            }
            (Algorithm::ZoSadom, smooth) => {
                let m2 = spec.lipschitz_value.expect("radius set above");
                let l_gamma = (spec.d as f64).sqrt() * m2 / oracle.gamma;
                smooth.map_or(l_gamma, |l| l.min(l_gamma))
            }
        };
        let hp = derive_hyperparameters(spec.mu, l.max(spec.mu), chi_eff, config.hp_overrides.beta)?;
        let options = RunOptions {
            monitor_period: config.monitor_period,
            gossip_rounds,
            x0: Some(x0),
            record_wall_clock: config.record_wall_clock,
        };
        Ok(Self {
            config: config.clone(),
            spec,
            reference,
            graph,
            chi,
            chi_estimated,
            gossip_rounds,
            l,
            hp,
            oracle,
            options,
        })
    }

    /// Header comment lines for the CSV output.
    pub fn comments(&self) -> Vec<String> {
        let source = if self.chi_estimated { "estimated" } else { "supplied" };
        vec![
            format!("chi={:.16e} ({source})", self.chi),
            format!("gossip_rounds={}", self.gossip_rounds),
            format!("mu={:.16e} L={:.16e} beta={:.16e}", self.spec.mu, self.l, self.hp.beta),
        ]
    }
}
