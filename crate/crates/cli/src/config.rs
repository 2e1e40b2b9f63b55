//! Scenario files: one TOML document with `catalog`, `episode`, `arrivals`,
//! `policy` and `experiment` tables. See `configs/scenario.toml` for a
//! complete annotated file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use freshprice::adp::{Continuation, TrainSettings, DEFAULT_RIDGE};
use freshprice::arrivals::{estimate_rate_profile, MINUTES_PER_DAY};
use freshprice::policies::lattice::DEFAULT_GRID_POINTS;
use freshprice::policies::SolverSettings;
use freshprice::{ArrivalModel, EpisodeConfig, Market, OrderLog, RateProfile, SkuCatalog};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub catalog: SkuCatalog,
    pub episode: EpisodeConfig,
    pub arrivals: ArrivalsConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    /// Largest basket enumerated; required above 16 SKUs.
    #[serde(default)]
    pub max_basket_size: Option<usize>,
}

/// Exactly one of `lambda`, `log_path`, `profile_path`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsConfig {
    /// Constant arrival rate per unit of epoch time.
    pub lambda: Option<f64>,
    /// Order log to estimate a per-minute profile from. Epoch lengths are
    /// then read as minutes.
    pub log_path: Option<PathBuf>,
    pub window_length: Option<f64>,
    pub period_minutes: Option<f64>,
    /// A profile previously written by `estimate-lambda`.
    pub profile_path: Option<PathBuf>,
    /// Profile time (minutes into the period) at which epoch 1 starts.
    #[serde(default)]
    pub horizon_start: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default = "default_policy_name")]
    pub name: String,
    #[serde(default)]
    pub fixed: FixedConfig,
    #[serde(default)]
    pub myopic: MyopicConfig,
    #[serde(default)]
    pub guardrail: GuardrailConfig,
    #[serde(default)]
    pub adp: AdpConfig,
}

fn default_policy_name() -> String {
    "guardrail".into()
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            name: default_policy_name(),
            fixed: FixedConfig::default(),
            myopic: MyopicConfig::default(),
            guardrail: GuardrailConfig::default(),
            adp: AdpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedConfig {
    /// Defaults to the episode's initial prices.
    pub prices: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MyopicConfig {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl Default for MyopicConfig {
    fn default() -> Self {
        MyopicConfig {
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardrailConfig {
    /// Demand tolerance relative to expected arrivals per epoch.
    #[serde(default = "default_demand_tol")]
    pub demand_tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_demand_tol() -> f64 {
    1e-6
}

fn default_max_sweeps() -> usize {
    50
}

impl Default for GuardrailConfig {
    fn default() -> Self {
        GuardrailConfig {
            demand_tol: default_demand_tol(),
            max_sweeps: default_max_sweeps(),
        }
    }
}

impl GuardrailConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            demand_tol_rel: self.demand_tol,
            max_sweeps: self.max_sweeps,
            ..SolverSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationKind {
    #[default]
    CertaintyEquivalent,
    MonteCarlo,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdpConfig {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_training_episodes")]
    pub training_episodes: usize,
    /// Defaults to `base_seed` plus one million, keeping training draws apart
    /// from evaluation draws.
    pub training_seed: Option<u64>,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub refit_iterations: usize,
    /// Uniform price noise of the behavior policy; defaults to `delta_max / 2`.
    pub exploration: Option<f64>,
    #[serde(default)]
    pub continuation: ContinuationKind,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Load weights from `fit-adp` output instead of training.
    pub weights_path: Option<PathBuf>,
}

fn default_training_episodes() -> usize {
    200
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

fn default_mc_samples() -> usize {
    32
}

impl Default for AdpConfig {
    fn default() -> Self {
        AdpConfig {
            grid_points: DEFAULT_GRID_POINTS,
            training_episodes: default_training_episodes(),
            training_seed: None,
            ridge: DEFAULT_RIDGE,
            refit_iterations: 0,
            exploration: None,
            continuation: ContinuationKind::default(),
            mc_samples: default_mc_samples(),
            weights_path: None,
        }
    }
}

impl AdpConfig {
    pub fn training_seed(&self, base_seed: u64) -> u64 {
        self.training_seed
            .unwrap_or_else(|| base_seed.wrapping_add(1_000_000))
    }

    pub fn train_settings(&self, base_seed: u64) -> TrainSettings {
        TrainSettings {
            episodes: self.training_episodes,
            ridge: self.ridge,
            refit_iterations: self.refit_iterations,
            exploration: self.exploration,
            grid_points: self.grid_points,
            continuation: match self.continuation {
                ContinuationKind::CertaintyEquivalent => Continuation::CertaintyEquivalent,
                ContinuationKind::MonteCarlo => Continuation::MonteCarlo {
                    samples: self.mc_samples,
                    seed: self.training_seed(base_seed),
                },
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_num_episodes")]
    pub num_episodes: usize,
    /// Defaults to `episode.rng_seed`.
    pub base_seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_trajectory_file")]
    pub trajectory_file: String,
    #[serde(default = "default_episodes_file")]
    pub episodes_file: String,
    #[serde(default = "default_summary_file")]
    pub summary_file: String,
}

fn default_num_episodes() -> usize {
    100
}

fn default_trajectory_file() -> String {
    "trajectories.csv".into()
}

fn default_episodes_file() -> String {
    "episodes.csv".into()
}

fn default_summary_file() -> String {
    "summary.csv".into()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_episodes: default_num_episodes(),
            base_seed: None,
            threads: 0,
            trajectory_file: default_trajectory_file(),
            episodes_file: default_episodes_file(),
            summary_file: default_summary_file(),
        }
    }
}

/// A parsed scenario with its market built and relative paths resolved
/// against the config file's directory.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub market: Market,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Scenario::from_str(&text, &base_dir).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text)?;
        let arrivals = build_arrivals(&config.arrivals, base_dir)?;
        if let Some(path) = &config.policy.adp.weights_path {
            let full = base_dir.join(path);
            if !full.exists() {
                bail!("policy.adp.weights_path: {} does not exist", full.display());
            }
        }
        if config.experiment.num_episodes == 0 {
            bail!("experiment.num_episodes must be >= 1");
        }
        let market = Market::new(config.catalog.clone(), config.episode.clone(), arrivals)?
            .with_max_basket_size(config.max_basket_size);
        Ok(Scenario {
            config,
            market,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn base_seed(&self) -> u64 {
        self.config
            .experiment
            .base_seed
            .unwrap_or(self.config.episode.rng_seed)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }
}

fn build_arrivals(cfg: &ArrivalsConfig, base_dir: &Path) -> Result<ArrivalModel> {
    let sources = [
        cfg.lambda.is_some(),
        cfg.log_path.is_some(),
        cfg.profile_path.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        bail!("arrivals: specify exactly one of `lambda`, `log_path`, `profile_path`");
    }
    if let Some(lambda) = cfg.lambda {
        if !lambda.is_finite() || lambda < 0.0 {
            bail!("arrivals.lambda must be >= 0 (got {lambda})");
        }
        return Ok(ArrivalModel::Constant(lambda));
    }
    let profile = if let Some(log_path) = &cfg.log_path {
        let full = base_dir.join(log_path);
        if !full.exists() {
            bail!("arrivals.log_path: {} does not exist", full.display());
        }
        let Some(window) = cfg.window_length else {
            bail!("arrivals.window_length is required with log_path");
        };
        let log = OrderLog::read_csv(&full)?;
        estimate_rate_profile(&log, window, cfg.period_minutes.unwrap_or(MINUTES_PER_DAY))?
    } else {
        let path = cfg.profile_path.as_ref().expect("one source is set");
        let full = base_dir.join(path);
        if !full.exists() {
            bail!("arrivals.profile_path: {} does not exist", full.display());
        }
        RateProfile::read_csv(&full, cfg.window_length)?
    };
    Ok(ArrivalModel::Profile {
        profile,
        offset: cfg.horizon_start,
    })
}
