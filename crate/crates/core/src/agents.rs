//! The three link-adaptation policies behind one decision interface:
//! a tabular Q-learning agent that learns the CQI-to-MCS mapping online,
//! a fixed lookup table, and an outer-loop offset controller on top of the
//! same table.
//!
//! The Q-learning agent treats the quantized SNR report as its state and the
//! MCS as its action. Every decision runs one temporal-difference update
//! `Q(s,a) <- (1-a)Q(s,a) + a[r + g*max_a' Q(s',a')]` once the next state is
//! observed, with one of two reward functions: a target-gated reward that
//! pays `m*r` only while the estimated BLER stays at or below the target, or
//! the plain expected spectral efficiency `(1-BLER)*m*r`.

use rand::{Rng, RngExt};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::link::{cqi_quantize, CqiConfig, IllaTable, McsEntry};

/// Action-value table plus per-cell visit counts, row-major over
/// `n_states x n_actions`, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visit_counts: Vec<u64>,
    n_states: usize,
    n_actions: usize,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            values: vec![0.0; n_states * n_actions],
            visit_counts: vec![0; n_states * n_actions],
            n_states,
            n_actions,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn value(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.visit_counts[state * self.n_actions + action]
    }

    pub fn state_visits(&self, state: usize) -> u64 {
        (0..self.n_actions).map(|a| self.visits(state, a)).sum()
    }

    /// Greedy action for `state`: the argmax over the row, ties resolved to
    /// the entry with the lowest MCS index.
    pub fn greedy_action(&self, state: usize, mcs_list: &[McsEntry]) -> usize {
        debug_assert_eq!(mcs_list.len(), self.n_actions);
        let mut best = 0usize;
        for a in 1..self.n_actions {
            let v = self.value(state, a);
            let b = self.value(state, best);
            if v > b || (v == b && mcs_list[a].index < mcs_list[best].index) {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.value(state, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Q-learning hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct QlConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_max: f64,
    pub epsilon_min: f64,
    pub reward: RewardKind,
    pub target_bler: f64,
    /// How the per-(state, action) BLER estimate is maintained: `0` keeps
    /// the cumulative block-error ratio (errored / received, the converging
    /// estimator), a value in `(0, 1]` applies an exponentially weighted
    /// window with that smoothing factor instead.
    pub bler_smoothing: f64,
}

impl Default for QlConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.9,
            discount: 0.1,
            epsilon_max: 0.5,
            epsilon_min: 0.05,
            reward: RewardKind::Se,
            target_bler: 0.1,
            bler_smoothing: 0.0,
        }
    }
}

impl QlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::config(format!(
                "agent.learning_rate must lie in [0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::config(format!(
                "agent.discount must lie in [0, 1], got {}",
                self.discount
            )));
        }
        if !(0.0 < self.epsilon_min && self.epsilon_min <= self.epsilon_max && self.epsilon_max <= 1.0) {
            return Err(Error::config(
                "agent epsilon bounds must satisfy 0 < epsilon_min <= epsilon_max <= 1",
            ));
        }
        if !(self.target_bler > 0.0 && self.target_bler < 1.0) {
            return Err(Error::config("agent.target_bler must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.bler_smoothing) {
            return Err(Error::config("agent.bler_smoothing must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Which reward the learner maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// `m*r` while the BLER estimate meets the target, -1 otherwise.
    Bler,
    /// Expected spectral efficiency `(1 - BLER) * m * r`.
    Se,
}

impl RewardKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewardKind::Bler => "bler",
            RewardKind::Se => "se",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bler" => Ok(RewardKind::Bler),
            "se" => Ok(RewardKind::Se),
            other => Err(Error::config(format!("unknown reward kind '{other}'"))),
        }
    }
}

/// Target-gated reward: `m*r` if the BLER estimate is at or below the target
/// (inclusive), -1 otherwise.
pub fn reward_bler(bler_estimate: f64, mcs: &McsEntry, target_bler: f64) -> f64 {
    if bler_estimate <= target_bler {
        mcs.nominal_efficiency()
    } else {
        -1.0
    }
}

/// Spectral-efficiency reward: `(1 - BLER) * m * r`.
pub fn reward_se(bler_estimate: f64, mcs: &McsEntry) -> f64 {
    (1.0 - bler_estimate) * mcs.nominal_efficiency()
}

/// One temporal-difference update; returns the new value and bumps the visit
/// count of `(state, action)`.
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    cfg: &QlConfig,
) -> f64 {
    let alpha = cfg.learning_rate;
    let idx = state * q.n_actions + action;
    let old = q.values[idx];
    let new = (1.0 - alpha) * old + alpha * (reward + cfg.discount * q.max_value(next_state));
    q.values[idx] = new;
    q.visit_counts[idx] += 1;
    new
}

/// Epsilon-greedy action selection over a Q-table row: the greedy action
/// with probability `1 - epsilon`, a uniformly random one otherwise.
pub fn select_action_epsilon_greedy<R: Rng>(
    q: &QTable,
    state: usize,
    epsilon: f64,
    mcs_list: &[McsEntry],
    rng: &mut R,
) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.n_actions)
    } else {
        q.greedy_action(state, mcs_list)
    }
}

/// Exploration-rate schedule: exponential decay from `epsilon_max`, floored
/// at `epsilon_min`, with the decay factor anchored so the floor is reached
/// halfway through the configured horizon. A constant schedule (deployment)
/// uses `EpsilonSchedule::constant`.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonSchedule {
    epsilon_max: f64,
    epsilon_min: f64,
    decay: f64,
}

impl EpsilonSchedule {
    pub fn training(epsilon_max: f64, epsilon_min: f64, total_decisions: u64) -> Self {
        let half = (total_decisions / 2).max(1) as f64;
        let decay = (epsilon_min / epsilon_max).powf(1.0 / half);
        Self { epsilon_max, epsilon_min, decay }
    }

    pub fn constant(epsilon: f64) -> Self {
        Self { epsilon_max: epsilon, epsilon_min: epsilon, decay: 1.0 }
    }

    pub fn at(&self, decision_index: u64) -> f64 {
        (self.epsilon_max * self.decay.powf(decision_index as f64)).max(self.epsilon_min)
    }
}

/// Sign convention for the outer-loop update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OllaSign {
    /// A NACK lowers the effective SNR so the next selection backs off;
    /// steady state holds the NACK rate at the target.
    Standard,
    /// The update applied with the literal printed sign, where a NACK raises
    /// the offset instead.
    AsPrinted,
}

/// Outer-loop state: a dB offset added to the measured SNR before the table
/// lookup, nudged on every ACK/NACK so the error rate settles at the target.
/// The offset is clamped to `+-clamp_db` so long all-ACK stretches (e.g. in
/// deep saturation) cannot wind the loop up arbitrarily far.
#[derive(Debug, Clone, Copy)]
pub struct OllaState {
    pub delta_olla_db: f64,
    pub delta_up_db: f64,
    pub delta_down_db: f64,
    pub target_bler: f64,
    pub sign: OllaSign,
    pub clamp_db: f64,
}

/// Default anti-windup bound on the outer-loop offset.
pub const OLLA_CLAMP_DB: f64 = 3.0;

impl OllaState {
    pub fn new(delta_up_db: f64, target_bler: f64, sign: OllaSign) -> Result<Self> {
        Self::with_clamp(delta_up_db, target_bler, sign, OLLA_CLAMP_DB)
    }

    pub fn with_clamp(delta_up_db: f64, target_bler: f64, sign: OllaSign, clamp_db: f64) -> Result<Self> {
        if !(delta_up_db > 0.0) {
            return Err(Error::config("agent.olla_delta_up_db must be positive"));
        }
        if !(target_bler > 0.0 && target_bler < 1.0) {
            return Err(Error::config("olla target_bler must lie in (0, 1)"));
        }
        if !(clamp_db > 0.0) {
            return Err(Error::config("agent.olla_clamp_db must be positive"));
        }
        let delta_down_db = delta_up_db / (1.0 / target_bler - 1.0);
        Ok(Self { delta_olla_db: 0.0, delta_up_db, delta_down_db, target_bler, sign, clamp_db })
    }

    /// Apply one ACK/NACK to the offset and return the new value.
    pub fn update(&mut self, ack: bool) -> f64 {
        let e_blk = if ack { 0.0 } else { 1.0 };
        let correction = self.delta_up_db * e_blk - self.delta_down_db * (1.0 - e_blk);
        match self.sign {
            OllaSign::AsPrinted => self.delta_olla_db += correction,
            OllaSign::Standard => self.delta_olla_db -= correction,
        }
        self.delta_olla_db = self.delta_olla_db.clamp(-self.clamp_db, self.clamp_db);
        self.delta_olla_db
    }
}

/// Apply the outer-loop offset, then run the ordinary table selection on the
/// adjusted SNR.
pub fn olla_adjust_and_select<'a>(state: &OllaState, snr_db: f64, illa: &'a IllaTable) -> &'a McsEntry {
    illa.select(snr_db + state.delta_olla_db)
}

/// Record the learner keeps between taking an action and observing the next
/// state: the outcome, the refreshed BLER estimate it implies, and the
/// (state, action) pair awaiting its update.
#[derive(Debug, Clone, Copy)]
pub struct Feedback {
    pub ack: bool,
    pub bler_estimate: f64,
    pub mcs_position: usize,
    pub state_cqi: usize,
}

/// What an agent decided for one report.
#[derive(Debug, Clone, Copy)]
pub struct AgentDecision {
    /// Position of the chosen entry in the efficiency-ordered MCS list.
    pub mcs_position: usize,
    /// The state the agent derived from the report (CQI or table bin).
    pub state: usize,
}

/// Common decision interface for the three policies. `decide` is called at
/// every MCS decision point with the current SNR report; `observe` receives
/// the ACK/NACK of every transmitted TTI.
pub trait AmcAgent {
    fn label(&self) -> String;
    fn decide(&mut self, snr_db: f64) -> AgentDecision;
    fn observe(&mut self, ack: bool);
    /// State-space cardinality, for reporting; `None` for the baselines.
    fn cardinality(&self) -> Option<usize> {
        None
    }
    /// Reward kind, for reporting; `None` for the baselines.
    fn reward_kind(&self) -> Option<RewardKind> {
        None
    }
}

/// The Q-learning link-adaptation agent.
pub struct QlAmcAgent {
    q: QTable,
    cfg: QlConfig,
    cqi: CqiConfig,
    mcs_list: Vec<McsEntry>,
    schedule: EpsilonSchedule,
    decision_index: u64,
    estimator: BlerEstimator,
    pending: Option<Feedback>,
    awaiting_outcome: Option<(usize, usize)>,
    rng: ChaCha8Rng,
}

/// Per-(state, action) BLER estimate: either the cumulative block-error
/// ratio (errored over received, the converging estimator) or an
/// exponentially weighted window when a nonzero smoothing is configured.
#[derive(Debug, Clone)]
struct BlerEstimator {
    smoothing: f64,
    nacks: Vec<u64>,
    totals: Vec<u64>,
    ewma: Vec<f64>,
}

impl BlerEstimator {
    fn new(cells: usize, smoothing: f64) -> Self {
        Self {
            smoothing,
            nacks: vec![0; cells],
            totals: vec![0; cells],
            ewma: vec![f64::NAN; cells],
        }
    }

    fn record(&mut self, idx: usize, ack: bool) -> f64 {
        self.totals[idx] += 1;
        if !ack {
            self.nacks[idx] += 1;
        }
        if self.smoothing == 0.0 {
            self.nacks[idx] as f64 / self.totals[idx] as f64
        } else {
            let sample = if ack { 0.0 } else { 1.0 };
            let est = &mut self.ewma[idx];
            if est.is_nan() {
                *est = sample;
            } else {
                *est = (1.0 - self.smoothing) * *est + self.smoothing * sample;
            }
            *est
        }
    }
}

impl QlAmcAgent {
    pub fn new(
        q: QTable,
        cfg: QlConfig,
        cqi: CqiConfig,
        mcs_list: Vec<McsEntry>,
        schedule: EpsilonSchedule,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        cqi.validate()?;
        if q.n_states() != cqi.n_cqi || q.n_actions() != mcs_list.len() {
            return Err(Error::qtable(format!(
                "table is {}x{} but the configuration implies {}x{}",
                q.n_states(),
                q.n_actions(),
                cqi.n_cqi,
                mcs_list.len()
            )));
        }
        let cells = q.n_states() * q.n_actions();
        Ok(Self {
            q,
            cfg,
            cqi,
            mcs_list,
            schedule,
            decision_index: 0,
            estimator: BlerEstimator::new(cells, cfg.bler_smoothing),
            pending: None,
            awaiting_outcome: None,
            rng,
        })
    }

    pub fn table(&self) -> &QTable {
        &self.q
    }

    pub fn into_table(self) -> QTable {
        self.q
    }

    pub fn current_epsilon(&self) -> f64 {
        self.schedule.at(self.decision_index)
    }

    pub fn config(&self) -> &QlConfig {
        &self.cfg
    }
}

impl AmcAgent for QlAmcAgent {
    fn label(&self) -> String {
        format!("qlamc_{}_{}", self.cqi.n_cqi, self.cfg.reward.as_str())
    }

    fn decide(&mut self, snr_db: f64) -> AgentDecision {
        let state = cqi_quantize(snr_db, &self.cqi);
        // Complete the pending update now that the next state is known.
        if let Some(fb) = self.pending.take() {
            let reward = match self.cfg.reward {
                RewardKind::Bler => {
                    reward_bler(fb.bler_estimate, &self.mcs_list[fb.mcs_position], self.cfg.target_bler)
                }
                RewardKind::Se => reward_se(fb.bler_estimate, &self.mcs_list[fb.mcs_position]),
            };
            q_update(&mut self.q, fb.state_cqi, fb.mcs_position, reward, state, &self.cfg);
        }
        let epsilon = self.schedule.at(self.decision_index);
        self.decision_index += 1;
        let action = select_action_epsilon_greedy(&self.q, state, epsilon, &self.mcs_list, &mut self.rng);
        self.awaiting_outcome = Some((state, action));
        AgentDecision { mcs_position: action, state }
    }

    fn observe(&mut self, ack: bool) {
        let Some((state, action)) = self.awaiting_outcome else {
            return;
        };
        let idx = state * self.q.n_actions() + action;
        let est = self.estimator.record(idx, ack);
        self.pending = Some(Feedback {
            ack,
            bler_estimate: est,
            mcs_position: action,
            state_cqi: state,
        });
    }

    fn cardinality(&self) -> Option<usize> {
        Some(self.cqi.n_cqi)
    }

    fn reward_kind(&self) -> Option<RewardKind> {
        Some(self.cfg.reward)
    }
}

/// Fixed lookup-table policy: selection is a pure function of the report.
pub struct TableAgent {
    illa: IllaTable,
}

impl TableAgent {
    pub fn new(illa: IllaTable) -> Self {
        Self { illa }
    }
}

impl AmcAgent for TableAgent {
    fn label(&self) -> String {
        "table".to_string()
    }

    fn decide(&mut self, snr_db: f64) -> AgentDecision {
        let pos = self.illa.select_position(snr_db);
        AgentDecision { mcs_position: pos, state: pos }
    }

    fn observe(&mut self, _ack: bool) {}
}

/// Outer-loop policy: table selection on the offset-corrected SNR, with the
/// offset nudged on every outcome.
pub struct OllaAgent {
    illa: IllaTable,
    state: OllaState,
    label: String,
}

impl OllaAgent {
    pub fn new(illa: IllaTable, state: OllaState, label: impl Into<String>) -> Self {
        Self { illa, state, label: label.into() }
    }

    pub fn olla_state(&self) -> &OllaState {
        &self.state
    }
}

impl AmcAgent for OllaAgent {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn decide(&mut self, snr_db: f64) -> AgentDecision {
        let pos = self.illa.select_position(snr_db + self.state.delta_olla_db);
        AgentDecision { mcs_position: pos, state: pos }
    }

    fn observe(&mut self, ack: bool) {
        self.state.update(ack);
    }
}

const QTABLE_MAGIC: &str = "qtable v1";

/// 64-bit FNV-1a, used to stamp Q-table files with the configuration that
/// produced them.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl QTable {
    /// Serialize as the versioned flat-text format: a header carrying the
    /// dimensions, reward kind and config hash, then the values row-major,
    /// then the visit counts.
    pub fn write_to<W: Write>(&self, w: &mut W, reward: RewardKind, config_hash: u64) -> std::io::Result<()> {
        writeln!(w, "{QTABLE_MAGIC}")?;
        writeln!(w, "states {}", self.n_states)?;
        writeln!(w, "actions {}", self.n_actions)?;
        writeln!(w, "reward {}", reward.as_str())?;
        writeln!(w, "config_hash {config_hash:016x}")?;
        writeln!(w, "values")?;
        for s in 0..self.n_states {
            let mut line = String::new();
            for a in 0..self.n_actions {
                if a > 0 {
                    line.push(' ');
                }
                write!(line, "{}", self.value(s, a)).unwrap();
            }
            writeln!(w, "{line}")?;
        }
        writeln!(w, "visits")?;
        for s in 0..self.n_states {
            let mut line = String::new();
            for a in 0..self.n_actions {
                if a > 0 {
                    line.push(' ');
                }
                write!(line, "{}", self.visits(s, a)).unwrap();
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<(Self, RewardKind, u64)> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::qtable(format!("unexpected end of file, expected {what}")))?
                .map_err(Error::Io)
        };
        let magic = next("header")?;
        if magic.trim() != QTABLE_MAGIC {
            return Err(Error::qtable(format!("unsupported header '{}'", magic.trim())));
        }
        let parse_kv = |line: &str, key: &str| -> Result<String> {
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::qtable(format!("expected '{key} ...', got '{line}'")))?;
            Ok(rest.trim().to_string())
        };
        let n_states: usize = parse_kv(&next("states")?, "states")?
            .parse()
            .map_err(|e| Error::qtable(format!("bad states count: {e}")))?;
        let n_actions: usize = parse_kv(&next("actions")?, "actions")?
            .parse()
            .map_err(|e| Error::qtable(format!("bad actions count: {e}")))?;
        let reward = RewardKind::parse(&parse_kv(&next("reward")?, "reward")?)
            .map_err(|e| Error::qtable(e.to_string()))?;
        let config_hash = u64::from_str_radix(&parse_kv(&next("config_hash")?, "config_hash")?, 16)
            .map_err(|e| Error::qtable(format!("bad config hash: {e}")))?;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::qtable("table dimensions must be positive"));
        }
        if next("values marker")?.trim() != "values" {
            return Err(Error::qtable("expected 'values' section"));
        }
        let mut table = QTable::zeros(n_states, n_actions);
        for s in 0..n_states {
            let line = next("value row")?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::qtable(format!("bad value: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != n_actions {
                return Err(Error::qtable(format!(
                    "value row {s} has {} entries, expected {n_actions}",
                    row.len()
                )));
            }
            table.values[s * n_actions..(s + 1) * n_actions].copy_from_slice(&row);
        }
        if next("visits marker")?.trim() != "visits" {
            return Err(Error::qtable("expected 'visits' section"));
        }
        for s in 0..n_states {
            let line = next("visit row")?;
            let row: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|e| Error::qtable(format!("bad visit count: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != n_actions {
                return Err(Error::qtable(format!(
                    "visit row {s} has {} entries, expected {n_actions}",
                    row.len()
                )));
            }
            table.visit_counts[s * n_actions..(s + 1) * n_actions].copy_from_slice(&row);
        }
        Ok((table, reward, config_hash))
    }

    pub fn save(&self, path: &Path, reward: RewardKind, config_hash: u64) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf, reward, config_hash)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, RewardKind, u64)> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
