//! Run configuration: one TOML file with `[channel]`, `[beam]`, `[link]`,
//! `[agent]`, `[phase]` and `[output]` sections. Every key has a default
//! matching the simulated scenario, so an empty file (or no file at all)
//! reproduces the standard two-phase protocol. Unknown keys are rejected at
//! parse time and numeric ranges are validated before any simulation starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{fnv1a64, OllaSign, QlConfig, RewardKind};
use crate::beams::BeamConfig;
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::link::LinkConfig;

/// Which policy the `train` command builds, and which parameters the agents
/// use in both phases.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// `qlamc`, `table` or `olla`.
    pub kind: AgentKind,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_max: f64,
    pub epsilon_min: f64,
    /// Reward the learner maximizes: `bler` (target-gated) or `se`.
    pub reward: RewardKind,
    /// Per-(state, action) BLER estimator: `0` keeps the cumulative
    /// block-error ratio, a value in `(0, 1]` switches to an exponentially
    /// weighted window with that smoothing factor.
    pub bler_smoothing: f64,
    /// Step size of the outer-loop offset on a NACK.
    pub olla_delta_up_db: f64,
    /// Anti-windup bound on the outer-loop offset.
    pub olla_clamp_db: f64,
    /// Outer-loop sign convention: `standard` or `as_printed`.
    pub olla_sign: OllaSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Qlamc,
    Table,
    Olla,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            kind: AgentKind::Qlamc,
            learning_rate: 0.9,
            discount: 0.1,
            epsilon_max: 0.5,
            epsilon_min: 0.05,
            reward: RewardKind::Se,
            bler_smoothing: 0.0,
            olla_delta_up_db: 0.1,
            olla_clamp_db: 3.0,
            olla_sign: OllaSign::Standard,
        }
    }
}

/// Phase protocol: one long learning run, many short paired deployment runs.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub learning_frames: u64,
    pub deployment_frames: u64,
    pub deployment_runs: usize,
    pub ttis_per_frame: usize,
    pub mcs_decision_period_ttis: usize,
    pub learning_start_distance_m: f64,
    pub learning_max_distance_m: f64,
    pub learning_speed_kmh: f64,
    /// Uniform range of the deployment start distance from the BS.
    pub deployment_start_distance_m: [f64; 2],
    /// Uniform range of the deployment speed.
    pub deployment_speed_kmh: [f64; 2],
    /// Deployment tracks reflect at this outer radius (and at the 10 m clamp).
    pub deployment_outer_bound_m: f64,
    /// Which policies the `deploy` command evaluates; `qlamc` entries consume
    /// the supplied Q-table files, `olla` expands to the three step variants.
    pub deploy_agents: Vec<String>,
    pub seed: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            learning_frames: 32_000,
            deployment_frames: 125,
            deployment_runs: 200,
            ttis_per_frame: 10,
            mcs_decision_period_ttis: 1,
            learning_start_distance_m: 20.0,
            learning_max_distance_m: 100.0,
            learning_speed_kmh: 5.0,
            deployment_start_distance_m: [25.0, 90.0],
            deployment_speed_kmh: [10.0, 20.0],
            deployment_outer_bound_m: 150.0,
            deploy_agents: vec!["qlamc".into(), "table".into(), "olla".into()],
            seed: 1,
        }
    }
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_frames == 0 || self.deployment_frames == 0 {
            return Err(Error::config("phase frame counts must be >= 1"));
        }
        if self.deployment_runs == 0 {
            return Err(Error::config("phase.deployment_runs must be >= 1"));
        }
        if self.ttis_per_frame == 0 {
            return Err(Error::config("phase.ttis_per_frame must be >= 1"));
        }
        if self.mcs_decision_period_ttis == 0
            || self.ttis_per_frame % self.mcs_decision_period_ttis != 0
        {
            return Err(Error::config(
                "phase.mcs_decision_period_ttis must divide phase.ttis_per_frame",
            ));
        }
        if !(self.learning_start_distance_m >= 10.0
            && self.learning_max_distance_m > self.learning_start_distance_m)
        {
            return Err(Error::config(
                "phase learning track needs 10 <= start < max distance",
            ));
        }
        if !(self.learning_speed_kmh >= 0.0) {
            return Err(Error::config("phase.learning_speed_kmh must be >= 0"));
        }
        let [d0, d1] = self.deployment_start_distance_m;
        if !(d0 >= 10.0 && d1 >= d0) {
            return Err(Error::config(
                "phase.deployment_start_distance_m must be an increasing range above 10 m",
            ));
        }
        let [s0, s1] = self.deployment_speed_kmh;
        if !(s0 >= 0.0 && s1 >= s0) {
            return Err(Error::config("phase.deployment_speed_kmh must be an increasing range"));
        }
        if !(self.deployment_outer_bound_m > d1) {
            return Err(Error::config(
                "phase.deployment_outer_bound_m must exceed the start-distance range",
            ));
        }
        if self.deploy_agents.is_empty() {
            return Err(Error::config("phase.deploy_agents must list at least one agent"));
        }
        for a in &self.deploy_agents {
            if !matches!(a.as_str(), "qlamc" | "table" | "olla") {
                return Err(Error::config(format!(
                    "phase.deploy_agents entries must be qlamc|table|olla, got '{a}'"
                )));
            }
        }
        Ok(())
    }
}

/// Artifact destinations.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Also write the per-TTI trace CSV during deployment.
    pub write_tti_trace: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), write_tti_trace: false }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub beam: BeamConfig,
    pub link: LinkConfig,
    pub agent: AgentConfig,
    pub phase: PhaseConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.beam.validate()?;
        self.link.validate()?;
        self.phase.validate()?;
        self.ql_config().validate()?;
        if !(self.agent.olla_delta_up_db > 0.0) {
            return Err(Error::config("agent.olla_delta_up_db must be positive"));
        }
        if !(self.agent.olla_clamp_db > 0.0) {
            return Err(Error::config("agent.olla_clamp_db must be positive"));
        }
        if self.output.dir.is_empty() {
            return Err(Error::config("output.dir must not be empty"));
        }
        Ok(())
    }

    /// The learner parameters implied by the `[agent]` and `[link]` sections.
    pub fn ql_config(&self) -> QlConfig {
        QlConfig {
            learning_rate: self.agent.learning_rate,
            discount: self.agent.discount,
            epsilon_max: self.agent.epsilon_max,
            epsilon_min: self.agent.epsilon_min,
            reward: self.agent.reward,
            target_bler: self.link.target_bler,
            bler_smoothing: self.agent.bler_smoothing,
        }
    }

    /// Hash stamped into Q-table files: covers every field that changes the
    /// meaning of the stored values.
    pub fn qtable_config_hash(&self) -> u64 {
        let canon = format!(
            "n_cqi={};snr=[{},{}];bler=({},{});target={};alpha={};gamma={};reward={};smooth={}",
            self.link.n_cqi,
            self.link.snr_min_db,
            self.link.snr_max_db,
            self.link.bler_slope,
            self.link.bler_gap_db,
            self.link.target_bler,
            self.agent.learning_rate,
            self.agent.discount,
            self.agent.reward.as_str(),
            self.agent.bler_smoothing,
        );
        fnv1a64(canon.as_bytes())
    }
}
