use std::path::{Path, PathBuf};

use pnn_core::pnn::{LossKind, ModelKind, ModelSpec};
use pnn_core::systems::{IntegratorConfig, RenderConfig, SystemSpec};
use pnn_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "PNN_OUTPUT_ROOT";

fn one() -> usize {
    1
}

fn default_eps() -> f64 {
    0.02
}

/// How the initial states of the trajectories are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// Explicit states, one trajectory each.
    States(Vec<Vec<f64>>),
    /// One two-body trajectory starting at periapsis.
    Kepler { a: f64, e: f64 },
    /// One Ablowitz–Ladik trajectory from `u = 2 + 0.2 cos 2πx`, `v = 0`.
    AlProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Observation step.
    pub h: f64,
    pub initial: Initial,
    /// Training steps per trajectory (`train_steps + 1` states).
    pub train_steps: usize,
    /// Test steps continuing from the end of the training data.
    #[serde(default)]
    pub test_steps: usize,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Rendered frames replace states as observations.
    #[serde(default)]
    pub render: Option<RenderConfig>,
    /// States are stored every `h / refine`; training uses every
    /// `refine`-th, the rest serve as between-grid ground truth.
    #[serde(default = "one")]
    pub refine: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    /// VPT threshold.
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec { eps: default_eps() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: SystemSpec,
    pub data: DataSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialise")
    }

    /// Dimension of one observation: pixels for rendered data, else the
    /// state dimension.
    pub fn observation_dim(&self) -> usize {
        match &self.data.render {
            Some(r) => r.width * r.height,
            None => self.system.dim(),
        }
    }

    /// Output directory: explicit flag, then config, then
    /// `$PNN_OUTPUT_ROOT/<name>`, then `runs/<name>`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output {
            return p.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(&self.name)
    }

    /// Initial states in the system's coordinates.
    pub fn initial_states(&self) -> CliResult<Vec<Vec<f64>>> {
        match &self.data.initial {
            Initial::States(s) => Ok(s.clone()),
            Initial::Kepler { a, e } => Ok(vec![self.system.two_body_periapsis(*a, *e)?]),
            Initial::AlProfile => match self.system {
                SystemSpec::AblowitzLadik { sites } => Ok(vec![SystemSpec::al_initial_state(sites)]),
                _ => Err(CliError::config(
                    "`al_profile` initial states need the ablowitz_ladik system",
                )),
            },
        }
    }

    /// Every cross-field check, before anything is computed.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!(
                "experiment name `{}` must be a plain non-empty word",
                self.name
            ));
        }
        self.system.validate()?;
        let d = &self.data;
        if !(d.h > 0.0 && d.h.is_finite()) {
            return bad(format!("step h = {} must be positive", d.h));
        }
        if d.train_steps == 0 {
            return bad("train_steps must be at least 1".into());
        }
        if d.refine == 0 {
            return bad("refine must be at least 1".into());
        }
        d.integrator.validate()?;
        let states = self.initial_states()?;
        if states.is_empty() {
            return bad("at least one initial state is required".into());
        }
        for s in &states {
            if s.len() != self.system.dim() {
                return bad(format!(
                    "initial state has {} entries but {} is {}-dimensional",
                    s.len(),
                    self.system.name(),
                    self.system.dim()
                ));
            }
            self.system.check_domain(s)?;
        }
        if let Some(r) = &d.render {
            r.validate()?;
            if !matches!(self.system, SystemSpec::TwoBody { .. }) {
                return bad("rendering is only defined for the two_body system".into());
            }
        }
        self.model.validate(self.observation_dim())?;
        self.train.validate()?;
        if let Some(LossKind::Alternative { .. }) = self.train.loss {
            if !matches!(self.model.theta, Some(pnn_core::pnn::ThetaSpec::Ae { .. })) {
                return bad("the alternative loss needs an autoencoder θ".into());
            }
        }
        if !(self.eval.eps > 0.0) {
            return bad("eval.eps must be positive".into());
        }
        Ok(())
    }
}

/// Command-line overrides; flags beat the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub iterations: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub log_interval: Option<usize>,
    pub train_steps: Option<usize>,
    pub test_steps: Option<usize>,
    /// Swap the model kind, dropping the part it does not use: a bare
    /// SympNet keeps `phi`, a VPNN keeps `theta`.
    pub model: Option<ModelKind>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.iterations {
            cfg.train.iterations = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.seed {
            cfg.train.seed = v;
        }
        if let Some(v) = self.log_interval {
            cfg.train.log_interval = v;
        }
        if let Some(v) = self.train_steps {
            cfg.data.train_steps = v;
        }
        if let Some(v) = self.test_steps {
            cfg.data.test_steps = v;
        }
        if let Some(kind) = self.model {
            cfg.model.model = kind;
            match kind {
                ModelKind::Sympnet => cfg.model.theta = None,
                ModelKind::Vpnn => cfg.model.phi = None,
                ModelKind::Pnn => {}
            }
        }
    }
}
