//! Experiment configuration: one TOML file per experiment, with command-line
//! overrides applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use helmtrial::domains::{Sampling, SamplingMeasure, Shape, SPEED_OF_SOUND};
use helmtrial::network::Architecture;
use helmtrial::oracle::{FemOptions, OracleMethod};
use helmtrial::training::{GradScope, LambdaSchedule, TrainConfig};

use crate::CliError;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "HELMTRIAL_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodConfig {
    #[default]
    Trial,
    SoftFixed {
        lambda: f64,
    },
    SoftDynamic {
        alpha: f64,
        #[serde(default = "one_f64")]
        lambda0: f64,
        #[serde(default = "one_usize")]
        update_period: usize,
        #[serde(default)]
        grad_scope: GradScope,
    },
}

fn one_f64() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Trial => "trial",
            MethodConfig::SoftFixed { .. } => "soft-fixed",
            MethodConfig::SoftDynamic { .. } => "soft-dynamic",
        }
    }

    /// The multiplier schedule of a soft method.
    pub fn schedule(&self) -> Option<(LambdaSchedule, GradScope)> {
        match *self {
            MethodConfig::Trial => None,
            MethodConfig::SoftFixed { lambda } => Some((LambdaSchedule::Fixed { lambda }, GradScope::All)),
            MethodConfig::SoftDynamic {
                alpha,
                lambda0,
                update_period,
                grad_scope,
            } => Some((
                LambdaSchedule::Dynamic {
                    alpha,
                    lambda0,
                    update_period,
                },
                grad_scope,
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodKind {
    Trial,
    SoftFixed,
    SoftDynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub width: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_f64")]
    pub input_scale: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 6,
            width: 90,
            seed: 0,
            input_scale: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn architecture(&self) -> Result<Architecture, CliError> {
        let mut arch = Architecture::uniform(self.hidden_layers, self.width)?;
        arch.input_scale = self.input_scale;
        arch.validate()?;
        Ok(arch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    /// Smoothness exponent of the rectangle's equivalent distance.
    pub smoothness: u32,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self { smoothness: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub method: OracleMethod,
    /// Finite element edge as a fraction of the six-per-wavelength limit.
    pub refine: f64,
    /// Also solve with finite elements where a closed form exists and report the difference.
    pub crosscheck: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            method: OracleMethod::Auto,
            refine: 12.0,
            crosscheck: true,
        }
    }
}

impl OracleConfig {
    pub fn fem_options(&self, c: f64, f: f64) -> Result<FemOptions, CliError> {
        Ok(FemOptions::for_frequency(c, f, self.refine)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Evaluation grid points per axis.
    pub grid: usize,
    /// Output root; falls back to the environment, then `out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { grid: 101, dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub frequencies: Vec<f64>,
    pub speed_of_sound: f64,
    pub domain: Shape,
    /// Collocation sampling; the per-shape defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub trial: TrialConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            frequencies: vec![300.0],
            speed_of_sound: SPEED_OF_SOUND,
            domain: Shape::unit_rect(),
            sampling: None,
            method: MethodConfig::Trial,
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            trial: TrialConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Command-line values that replace their configuration counterparts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub method: Option<MethodKind>,
    pub frequencies: Vec<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub sampling: Option<SamplingMeasure>,
    pub grad_scope: Option<GradScope>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.frequencies.is_empty() {
            return bad("at least one frequency is required".into());
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return bad(format!("frequency must be positive and finite, got {f}"));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return bad(format!("speed of sound must be positive, got {}", self.speed_of_sound));
        }
        if self.output.grid < 2 {
            return bad("output grid needs at least 2 points per axis".into());
        }
        if !(self.oracle.refine >= 1.0) {
            return bad("oracle refine must be at least 1".into());
        }
        self.domain.validate()?;
        self.network.architecture()?;
        self.train.lbfgs.validate()?;
        if let Some((schedule, _)) = self.method.schedule() {
            schedule.validate()?;
        }
        helmtrial::domains::DomainSpec::new(self.domain.clone(), self.effective_sampling())?;
        Ok(())
    }

    pub fn effective_sampling(&self) -> Sampling {
        self.sampling.clone().unwrap_or_else(|| match self.domain {
            Shape::Rect { .. } => Sampling::full_rect(),
            _ => Sampling::full_curved(),
        })
    }

    /// Output root: the configured directory, then the environment, then `out`.
    pub fn output_root(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Directory for one method, domain and frequency.
    pub fn run_dir(&self, method: &str, f: f64) -> PathBuf {
        self.output_root().join(format!("{method}-{}-{f}Hz", self.domain.name()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(kind) = o.method {
            let same = matches!(
                (kind, &self.method),
                (MethodKind::Trial, MethodConfig::Trial)
                    | (MethodKind::SoftFixed, MethodConfig::SoftFixed { .. })
                    | (MethodKind::SoftDynamic, MethodConfig::SoftDynamic { .. })
            );
            if !same {
                self.method = match kind {
                    MethodKind::Trial => MethodConfig::Trial,
                    MethodKind::SoftFixed => MethodConfig::SoftFixed { lambda: 1.0 },
                    MethodKind::SoftDynamic => MethodConfig::SoftDynamic {
                        alpha: 0.1,
                        lambda0: 1.0,
                        update_period: 1,
                        grad_scope: GradScope::All,
                    },
                };
            }
        }
        if !o.frequencies.is_empty() {
            self.frequencies = o.frequencies.clone();
        }
        if let Some(seed) = o.seed {
            self.network.seed = seed;
            let mut s = self.effective_sampling();
            s.seed = seed;
            self.sampling = Some(s);
        }
        if let Some(m) = o.sampling {
            let mut s = self.effective_sampling();
            s.measure = m;
            self.sampling = Some(s);
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
        let needs = |flag: &str, method: &str| CliError::Config(format!("{flag} requires the {method} method"));
        if let Some(l) = o.lambda {
            match &mut self.method {
                MethodConfig::SoftFixed { lambda } => *lambda = l,
                MethodConfig::SoftDynamic { lambda0, .. } => *lambda0 = l,
                MethodConfig::Trial => return Err(needs("--lambda", "soft-fixed or soft-dynamic")),
            }
        }
        if let Some(a) = o.alpha {
            match &mut self.method {
                MethodConfig::SoftDynamic { alpha, .. } => *alpha = a,
                _ => return Err(needs("--alpha", "soft-dynamic")),
            }
        }
        if let Some(scope) = o.grad_scope {
            match &mut self.method {
                MethodConfig::SoftDynamic { grad_scope, .. } => *grad_scope = scope,
                _ => return Err(needs("--lambda-grad-scope", "soft-dynamic")),
            }
        }
        self.validate()
    }
}
