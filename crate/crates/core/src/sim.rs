//! Frame orchestration, UE mobility and the two-phase Monte Carlo protocol.
//!
//! Every frame opens with one beam sweep over a fresh channel snapshot, then
//! runs the data TTIs against the frozen beam pair while the channel keeps
//! evolving (Doppler phase referenced to the sweep instant, angles refreshed
//! from the moving UE every TTI). The learning phase is a single long run
//! that trains the Q-table on a radial out-and-back track; the deployment
//! phase replays many short runs with randomized tracks, evaluating every
//! policy against bit-identical channel realizations by re-seeding the
//! channel and outcome streams per agent.
//!
//! Monte Carlo runs are independent: with the `parallel` feature they are
//! dispatched on a rayon pool, otherwise they execute in a plain loop. The
//! per-run seed derivation makes both paths produce identical output.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::agents::{
    AmcAgent, EpsilonSchedule, OllaAgent, OllaState, QTable, QlAmcAgent,
    RewardKind, TableAgent,
};
use crate::beams::{beam_sweep, dft_codebook, effective_channel, snr_db, BeamPair, Codebook};
use crate::channel::{ChannelModel, ScattererSet, ShadowingProcess};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::link::{build_illa_table, BlerModel, IllaTable, McsEntry};

/// Timing of one frame: a beam-sweep slot followed by the data TTIs.
///
/// The frame spans `round(t_ss / T_s)` OFDM symbols. Data TTIs get an equal
/// integer share and the sweep slot absorbs the remainder, so frame duration
/// is exact and the sweep window always occupies at least one TTI-equivalent
/// slot in which no data flows.
#[derive(Debug, Clone, Copy)]
pub struct FrameSchedule {
    pub t_ss_ms: f64,
    pub ttis_per_frame: usize,
    pub mcs_decision_period_ttis: usize,
    symbols_per_frame: u64,
    symbols_per_tti: u64,
    sweep_symbols: u64,
    symbol_period_s: f64,
}

impl FrameSchedule {
    pub fn new(
        t_ss_ms: f64,
        ttis_per_frame: usize,
        mcs_decision_period_ttis: usize,
        symbol_period_s: f64,
    ) -> Result<Self> {
        if ttis_per_frame == 0 {
            return Err(Error::config("phase.ttis_per_frame must be >= 1"));
        }
        if mcs_decision_period_ttis == 0 || ttis_per_frame % mcs_decision_period_ttis != 0 {
            return Err(Error::config(
                "phase.mcs_decision_period_ttis must divide phase.ttis_per_frame",
            ));
        }
        if !(t_ss_ms > 0.0) || !(symbol_period_s > 0.0) {
            return Err(Error::config("frame timing requires positive t_ss and symbol period"));
        }
        let symbols_per_frame = (t_ss_ms * 1e-3 / symbol_period_s).round() as u64;
        let slots = ttis_per_frame as u64 + 1;
        if symbols_per_frame < slots {
            return Err(Error::config(format!(
                "frame of {symbols_per_frame} symbols cannot host {slots} slots"
            )));
        }
        let symbols_per_tti = symbols_per_frame / slots;
        let sweep_symbols = symbols_per_frame - symbols_per_tti * ttis_per_frame as u64;
        Ok(Self {
            t_ss_ms,
            ttis_per_frame,
            mcs_decision_period_ttis,
            symbols_per_frame,
            symbols_per_tti,
            sweep_symbols,
            symbol_period_s,
        })
    }

    pub fn symbols_per_frame(&self) -> u64 {
        self.symbols_per_frame
    }

    pub fn symbols_per_tti(&self) -> u64 {
        self.symbols_per_tti
    }

    pub fn sweep_symbols(&self) -> u64 {
        self.sweep_symbols
    }

    /// Frame-local symbol timestamp at which data TTI `tti` starts.
    pub fn tti_symbol_offset(&self, tti: usize) -> u64 {
        self.sweep_symbols + tti as u64 * self.symbols_per_tti
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.symbols_per_frame as f64 * self.symbol_period_s
    }

    pub fn symbol_period_s(&self) -> f64 {
        self.symbol_period_s
    }
}

/// UE movement pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilityMode {
    /// Move radially away from the BS to `max_distance_m`, then back to the
    /// start distance, repeating.
    RadialOutAndBack { start_distance_m: f64, max_distance_m: f64 },
    /// Straight-line motion in a fixed direction, reflecting at the 10 m
    /// clamp and at `outer_bound_m`.
    RandomRectilinear { outer_bound_m: f64 },
}

/// Stateful UE track: position stepped slot by slot.
#[derive(Debug, Clone)]
pub struct MobilityTrack {
    position_m: [f64; 2],
    direction: [f64; 2],
    speed_mps: f64,
    mode: MobilityMode,
}

/// Distance below which the UE never approaches the BS.
pub const MIN_BS_DISTANCE_M: f64 = 10.0;

impl MobilityTrack {
    pub fn radial_out_and_back(start_distance_m: f64, max_distance_m: f64, speed_mps: f64) -> Result<Self> {
        if !(start_distance_m >= MIN_BS_DISTANCE_M && max_distance_m > start_distance_m) {
            return Err(Error::config(
                "radial track needs min_distance <= start < max_distance",
            ));
        }
        Ok(Self {
            position_m: [start_distance_m, 0.0],
            direction: [1.0, 0.0],
            speed_mps,
            mode: MobilityMode::RadialOutAndBack { start_distance_m, max_distance_m },
        })
    }

    pub fn random_rectilinear(
        start_m: [f64; 2],
        direction_rad: f64,
        speed_mps: f64,
        outer_bound_m: f64,
    ) -> Result<Self> {
        let r = (start_m[0].powi(2) + start_m[1].powi(2)).sqrt();
        if r < MIN_BS_DISTANCE_M || r > outer_bound_m {
            return Err(Error::config("rectilinear track must start inside the service annulus"));
        }
        Ok(Self {
            position_m: start_m,
            direction: [direction_rad.cos(), direction_rad.sin()],
            speed_mps,
            mode: MobilityMode::RandomRectilinear { outer_bound_m },
        })
    }

    pub fn position(&self) -> [f64; 2] {
        self.position_m
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.direction[0] * self.speed_mps, self.direction[1] * self.speed_mps]
    }

    pub fn distance_from_bs(&self) -> f64 {
        (self.position_m[0].powi(2) + self.position_m[1].powi(2)).sqrt()
    }

    /// Step the track forward, reversing direction at the mode's bounds.
    pub fn advance(&mut self, dt_s: f64) {
        self.position_m[0] += self.direction[0] * self.speed_mps * dt_s;
        self.position_m[1] += self.direction[1] * self.speed_mps * dt_s;
        let r = self.distance_from_bs();
        match self.mode {
            MobilityMode::RadialOutAndBack { start_distance_m, max_distance_m } => {
                if (r >= max_distance_m && self.direction[0] > 0.0)
                    || (r <= start_distance_m && self.direction[0] < 0.0)
                {
                    self.direction[0] = -self.direction[0];
                }
            }
            MobilityMode::RandomRectilinear { outer_bound_m } => {
                if r <= MIN_BS_DISTANCE_M || r >= outer_bound_m {
                    self.direction = [-self.direction[0], -self.direction[1]];
                }
            }
        }
    }
}

/// One transmitted TTI in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtiRecord {
    pub frame: u64,
    pub tti: usize,
    pub snr_db: f64,
    pub state: usize,
    pub mcs_index: u8,
    pub ack: bool,
}

/// Per-run aggregates and (optionally) the full per-TTI trace.
#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub nack_count: u64,
    pub tti_count: u64,
    /// Accumulated `ack * m * r`.
    pub se_sum: f64,
    /// Information bits of the acknowledged transport blocks.
    pub bits_delivered: u64,
    pub per_tti_trace: Vec<TtiRecord>,
}

impl RunMetrics {
    pub fn mean_bler(&self) -> f64 {
        if self.tti_count == 0 {
            0.0
        } else {
            self.nack_count as f64 / self.tti_count as f64
        }
    }

    pub fn mean_spectral_efficiency(&self) -> f64 {
        if self.tti_count == 0 {
            0.0
        } else {
            self.se_sum / self.tti_count as f64
        }
    }
}

/// Everything immutable that a run needs, shared read-only across parallel
/// runs.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub channel: ChannelModel,
    pub w_tx: Codebook,
    pub w_rx: Codebook,
    pub schedule: FrameSchedule,
    pub bler_model: BlerModel,
    pub mcs_list: Vec<McsEntry>,
    pub illa: IllaTable,
    pub noise_mw: f64,
    pub symbol_power_mw: f64,
    /// Information bits per transport block, for throughput accounting.
    pub info_bits_per_tb: u32,
}

impl SimParams {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let channel = ChannelModel::new(cfg.channel.clone())?;
        let half_az = (cfg.channel.azimuth_spread_deg / 2.0).to_radians();
        let az_mean = cfg.channel.azimuth_mean_deg.to_radians();
        let sector = (az_mean - half_az, az_mean + half_az);
        let w_tx = dft_codebook(channel.bs_geometry(), cfg.beam.n_beams_tx, sector)?;
        let w_rx = dft_codebook(channel.ue_geometry(), cfg.beam.n_beams_rx, sector)?;
        let schedule = FrameSchedule::new(
            cfg.beam.t_ss_ms,
            cfg.phase.ttis_per_frame,
            cfg.phase.mcs_decision_period_ttis,
            cfg.channel.symbol_period_s(),
        )?;
        let bler_model = cfg.link.bler_model();
        let mcs_list = crate::link::mcs_table();
        let illa = build_illa_table(&cfg.link.analysis_bler_model(), &mcs_list, cfg.link.target_bler)?;
        Ok(Self {
            channel,
            w_tx,
            w_rx,
            schedule,
            bler_model,
            mcs_list,
            illa,
            noise_mw: cfg.link.noise_power_mw(),
            symbol_power_mw: cfg.link.symbol_power_mw(cfg.channel.subcarrier_spacing_khz),
            info_bits_per_tb: cfg.link.n_info_bits,
        })
    }
}

/// Mutable per-run channel state walked frame by frame.
#[derive(Debug, Clone)]
pub struct ChannelRunState {
    pub set: ScattererSet,
    pub shadowing: ShadowingProcess,
    pub track: MobilityTrack,
    pub frame_index: u64,
    pub pair: Option<BeamPair>,
    last_large_scale_pos: [f64; 2],
}

impl ChannelRunState {
    pub fn init<R: Rng>(params: &SimParams, track: MobilityTrack, rng: &mut R) -> Self {
        let pos = track.position();
        let set = params.channel.draw_scatterer_set(pos, rng);
        let cfg = params.channel.config();
        let shadowing =
            ShadowingProcess::with_value(cfg.shadowing_std_db, cfg.shadowing_corr_dist_m, set.shadowing_db);
        Self { set, shadowing, track, frame_index: 0, pair: None, last_large_scale_pos: pos }
    }
}

/// Run one frame: refresh the large-scale state, sweep beams on the frame's
/// opening snapshot, then walk the data TTIs with the pair frozen, feeding
/// each outcome back to the agent. Returns per-frame statistics; TTI records
/// are appended to `metrics`.
pub fn run_frame(
    params: &SimParams,
    state: &mut ChannelRunState,
    agent: &mut dyn AmcAgent,
    outcome_rng: &mut ChaCha8Rng,
    channel_rng: &mut ChaCha8Rng,
    metrics: &mut RunMetrics,
    collect_trace: bool,
) -> FrameStats {
    let schedule = &params.schedule;
    let pos = state.track.position();
    let moved = {
        let dx = pos[0] - state.last_large_scale_pos[0];
        let dy = pos[1] - state.last_large_scale_pos[1];
        (dx * dx + dy * dy).sqrt()
    };
    if state.frame_index > 0 {
        params
            .channel
            .update_large_scale(&mut state.set, &mut state.shadowing, pos, moved, channel_rng);
    }
    state.last_large_scale_pos = pos;

    // Beam sweep on the frame-opening snapshot; the channel is held constant
    // for the whole sweep window.
    let h0 = params.channel.channel_at(&state.set, pos, state.track.velocity(), 0);
    let pair = beam_sweep(&h0, &params.w_tx, &params.w_rx, params.noise_mw, state.frame_index);
    state.pair = Some(pair);
    state.track.advance(schedule.sweep_symbols() as f64 * schedule.symbol_period_s());

    let mut stats = FrameStats {
        frame: state.frame_index,
        snr_db_sum: 0.0,
        nacks: 0,
        se_sum: 0.0,
        first_tti_snr_db: 0.0,
        last_tti_snr_db: 0.0,
        sweep_snr_db: snr_db(pair.effective_channel, params.noise_mw, params.symbol_power_mw),
    };

    let mut current_position = 0usize;
    let mut current_state = 0usize;
    // The report driving a decision is the latest measurement available when
    // the MCS must be signaled: the sweep's own SNR for the first data TTI,
    // then each TTI's measurement for the next decision point.
    let mut report_snr = stats.sweep_snr_db;
    for tti in 0..schedule.ttis_per_frame {
        let t = schedule.tti_symbol_offset(tti);
        let h = params
            .channel
            .channel_at(&state.set, state.track.position(), state.track.velocity(), t);
        let h_eff = effective_channel(&h, &pair, &params.w_tx, &params.w_rx);
        let snr = snr_db(h_eff, params.noise_mw, params.symbol_power_mw);

        if tti % schedule.mcs_decision_period_ttis == 0 {
            let d = agent.decide(report_snr);
            current_position = d.mcs_position;
            current_state = d.state;
        }
        report_snr = snr;
        let mcs = &params.mcs_list[current_position];
        let bler = params.bler_model.bler(snr, mcs);
        let ack = outcome_rng.random::<f64>() >= bler;
        agent.observe(ack);

        metrics.tti_count += 1;
        if !ack {
            metrics.nack_count += 1;
            stats.nacks += 1;
        } else {
            metrics.se_sum += mcs.nominal_efficiency();
            metrics.bits_delivered += params.info_bits_per_tb as u64;
            stats.se_sum += mcs.nominal_efficiency();
        }
        if collect_trace {
            metrics.per_tti_trace.push(TtiRecord {
                frame: state.frame_index,
                tti,
                snr_db: snr,
                state: current_state,
                mcs_index: mcs.index,
                ack,
            });
        }
        stats.snr_db_sum += snr;
        if tti == 0 {
            stats.first_tti_snr_db = snr;
        }
        if tti == schedule.ttis_per_frame - 1 {
            stats.last_tti_snr_db = snr;
        }
        state.track.advance(schedule.symbols_per_tti() as f64 * schedule.symbol_period_s());
    }
    // Carry the Doppler phase across the frame boundary: the next frame's
    // time origin resets to its own sweep instant, so fold one frame's worth
    // of rotation into the stored gains.
    params.channel.advance_gain_phases(
        &mut state.set,
        state.track.position(),
        state.track.velocity(),
        schedule.symbols_per_frame() as f64 * schedule.symbol_period_s(),
    );
    state.frame_index += 1;
    stats
}

/// Per-frame statistics emitted by [`run_frame`].
#[derive(Debug, Clone, Copy)]
pub struct FrameStats {
    pub frame: u64,
    pub snr_db_sum: f64,
    pub nacks: u64,
    pub se_sum: f64,
    pub first_tti_snr_db: f64,
    pub last_tti_snr_db: f64,
    pub sweep_snr_db: f64,
}

/// One line of the learning trace.
#[derive(Debug, Clone, Copy)]
pub struct LearningFrameStat {
    pub frame: u64,
    pub epsilon: f64,
    pub mean_snr_db: f64,
    pub nacks: u64,
    pub mean_se: f64,
}

const TAG_LEARNING: u64 = 0;
const TAG_DEPLOYMENT: u64 = 1;

const PURPOSE_SCENARIO: u64 = 0;
const PURPOSE_CHANNEL: u64 = 1;
const PURPOSE_OUTCOME: u64 = 2;
const PURPOSE_AGENT_BASE: u64 = 3;

/// Independent ChaCha stream for (phase, run, purpose), all derived from the
/// one master seed.
fn stream_rng(master_seed: u64, tag: u64, run: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((tag << 56) | (run << 8) | purpose);
    rng
}

/// Output of the learning phase.
pub struct LearningOutput {
    pub table: QTable,
    pub trace: Vec<LearningFrameStat>,
    pub final_epsilon: f64,
}

/// Train a fresh Q-table: a single long run on the radial out-and-back
/// track with the decaying exploration schedule.
pub fn run_learning_phase(cfg: &RunConfig) -> Result<LearningOutput> {
    let params = SimParams::from_config(cfg)?;
    let phase = &cfg.phase;
    let speed_mps = phase.learning_speed_kmh / 3.6;
    let track = MobilityTrack::radial_out_and_back(
        phase.learning_start_distance_m,
        phase.learning_max_distance_m,
        speed_mps,
    )?;
    let master = phase.seed;
    let mut channel_rng = stream_rng(master, TAG_LEARNING, 0, PURPOSE_CHANNEL);
    let mut outcome_rng = stream_rng(master, TAG_LEARNING, 0, PURPOSE_OUTCOME);
    let agent_rng = stream_rng(master, TAG_LEARNING, 0, PURPOSE_AGENT_BASE);

    let decisions_per_frame =
        (phase.ttis_per_frame / phase.mcs_decision_period_ttis) as u64;
    let total_decisions = phase.learning_frames * decisions_per_frame;
    let ql_cfg = cfg.ql_config();
    let schedule = EpsilonSchedule::training(ql_cfg.epsilon_max, ql_cfg.epsilon_min, total_decisions);
    let mut agent = QlAmcAgent::new(
        QTable::zeros(cfg.link.n_cqi, params.mcs_list.len()),
        ql_cfg,
        cfg.link.cqi_config(),
        params.mcs_list.clone(),
        schedule,
        agent_rng,
    )?;

    let mut state = ChannelRunState::init(&params, track, &mut channel_rng);
    let mut metrics = RunMetrics::default();
    let mut trace = Vec::with_capacity(phase.learning_frames as usize);
    for _ in 0..phase.learning_frames {
        let epsilon = agent.current_epsilon();
        let fstats = run_frame(
            &params,
            &mut state,
            &mut agent,
            &mut outcome_rng,
            &mut channel_rng,
            &mut metrics,
            false,
        );
        trace.push(LearningFrameStat {
            frame: fstats.frame,
            epsilon,
            mean_snr_db: fstats.snr_db_sum / phase.ttis_per_frame as f64,
            nacks: fstats.nacks,
            mean_se: fstats.se_sum / phase.ttis_per_frame as f64,
        });
    }
    let final_epsilon = agent.current_epsilon();
    Ok(LearningOutput { table: agent.into_table(), trace, final_epsilon })
}

/// A policy to evaluate in the deployment phase.
#[derive(Debug, Clone)]
pub enum AgentSpec {
    Qlamc { table: QTable, reward: RewardKind },
    Table,
    Olla { delta_up_db: f64, label: String },
}

impl AgentSpec {
    /// The three outer-loop variants compared in the deployment phase (the
    /// sign convention and clamp come from the run configuration at build
    /// time).
    pub fn olla_trio() -> Vec<AgentSpec> {
        vec![
            AgentSpec::Olla { delta_up_db: 0.01, label: "olla1".into() },
            AgentSpec::Olla { delta_up_db: 0.1, label: "olla2".into() },
            AgentSpec::Olla { delta_up_db: 1.0, label: "olla3".into() },
        ]
    }

    fn build(&self, cfg: &RunConfig, params: &SimParams, agent_rng: ChaCha8Rng) -> Result<Box<dyn AmcAgent>> {
        match self {
            AgentSpec::Qlamc { table, reward } => {
                if table.n_actions() != params.mcs_list.len() {
                    return Err(Error::qtable(format!(
                        "q-table has {} actions but the MCS set has {}",
                        table.n_actions(),
                        params.mcs_list.len()
                    )));
                }
                let mut ql_cfg = cfg.ql_config();
                ql_cfg.reward = *reward;
                // Deployment keeps learning with the exploration rate pinned
                // at its floor.
                let schedule = EpsilonSchedule::constant(ql_cfg.epsilon_min);
                let cqi = crate::link::CqiConfig {
                    n_cqi: table.n_states(),
                    snr_min_db: cfg.link.snr_min_db,
                    snr_max_db: cfg.link.snr_max_db,
                };
                Ok(Box::new(QlAmcAgent::new(
                    table.clone(),
                    ql_cfg,
                    cqi,
                    params.mcs_list.clone(),
                    schedule,
                    agent_rng,
                )?))
            }
            AgentSpec::Table => Ok(Box::new(TableAgent::new(params.illa.clone()))),
            AgentSpec::Olla { delta_up_db, label } => {
                let state = OllaState::with_clamp(
                    *delta_up_db,
                    cfg.link.target_bler,
                    cfg.agent.olla_sign,
                    cfg.agent.olla_clamp_db,
                )?;
                Ok(Box::new(OllaAgent::new(params.illa.clone(), state, label.clone())))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            AgentSpec::Qlamc { table, reward } => {
                format!("qlamc_{}_{}", table.n_states(), reward.as_str())
            }
            AgentSpec::Table => "table".into(),
            AgentSpec::Olla { label, .. } => label.clone(),
        }
    }
}

/// Per-run, per-agent result.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: usize,
    pub agent: String,
    pub mean_bler: f64,
    pub mean_se: f64,
    pub trace: Vec<TtiRecord>,
}

/// Aggregated deployment result for one agent.
#[derive(Debug, Clone)]
pub struct AgentSummary {
    pub label: String,
    pub cardinality: Option<usize>,
    pub reward: Option<RewardKind>,
    pub mean_bler: f64,
    pub mean_se: f64,
    pub per_run_se: Vec<f64>,
    pub per_run_bler: Vec<f64>,
}

/// Full deployment output: per-(run, agent) records in run-major order plus
/// per-agent aggregates.
pub struct DeploymentOutput {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<AgentSummary>,
}

/// Evaluate the given policies over `deployment_runs` paired Monte Carlo
/// runs. Every agent of a run sees the same scatterer set, shadowing path,
/// mobility track and outcome-uniform stream; only its own decisions differ.
pub fn run_deployment_phase(cfg: &RunConfig, specs: &[AgentSpec]) -> Result<DeploymentOutput> {
    if specs.is_empty() {
        return Err(Error::config("deployment needs at least one agent"));
    }
    let params = SimParams::from_config(cfg)?;
    for spec in specs {
        if let AgentSpec::Qlamc { table, .. } = spec {
            if table.n_actions() != params.mcs_list.len() {
                return Err(Error::qtable(format!(
                    "q-table has {} actions but the MCS set has {}",
                    table.n_actions(),
                    params.mcs_list.len()
                )));
            }
        }
    }
    let n_runs = cfg.phase.deployment_runs;
    let run_ids: Vec<usize> = (0..n_runs).collect();

    let simulate = |run_id: &usize| -> Result<Vec<RunRecord>> {
        simulate_deployment_run(cfg, &params, specs, *run_id)
    };

    #[cfg(feature = "parallel")]
    let per_run: Vec<Vec<RunRecord>> = run_ids.par_iter().map(simulate).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let per_run: Vec<Vec<RunRecord>> = run_ids.iter().map(simulate).collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(n_runs * specs.len());
    for run in per_run {
        records.extend(run);
    }

    let mut summaries = Vec::with_capacity(specs.len());
    for spec in specs {
        let label = spec.label();
        let per_run_se: Vec<f64> = records
            .iter()
            .filter(|r| r.agent == label)
            .map(|r| r.mean_se)
            .collect();
        let per_run_bler: Vec<f64> = records
            .iter()
            .filter(|r| r.agent == label)
            .map(|r| r.mean_bler)
            .collect();
        let n = per_run_se.len() as f64;
        let (cardinality, reward) = match spec {
            AgentSpec::Qlamc { table, reward } => (Some(table.n_states()), Some(*reward)),
            _ => (None, None),
        };
        summaries.push(AgentSummary {
            label,
            cardinality,
            reward,
            mean_bler: per_run_bler.iter().sum::<f64>() / n,
            mean_se: per_run_se.iter().sum::<f64>() / n,
            per_run_se,
            per_run_bler,
        });
    }
    Ok(DeploymentOutput { records, summaries })
}

fn simulate_deployment_run(
    cfg: &RunConfig,
    params: &SimParams,
    specs: &[AgentSpec],
    run_id: usize,
) -> Result<Vec<RunRecord>> {
    let master = cfg.phase.seed;
    let phase = &cfg.phase;
    // Scenario draws are shared by construction: same stream, same order.
    let mut scenario_rng = stream_rng(master, TAG_DEPLOYMENT, run_id as u64, PURPOSE_SCENARIO);
    let start_dist = scenario_rng
        .random_range(phase.deployment_start_distance_m[0]..=phase.deployment_start_distance_m[1]);
    let start_angle = scenario_rng.random_range(0.0..std::f64::consts::TAU);
    let heading = scenario_rng.random_range(0.0..std::f64::consts::TAU);
    let speed_kmh =
        scenario_rng.random_range(phase.deployment_speed_kmh[0]..=phase.deployment_speed_kmh[1]);
    let start = [start_dist * start_angle.cos(), start_dist * start_angle.sin()];

    let mut records = Vec::with_capacity(specs.len());
    for (agent_idx, spec) in specs.iter().enumerate() {
        // Re-seeding the channel and outcome streams per agent replays the
        // exact same realization for every policy.
        let mut channel_rng = stream_rng(master, TAG_DEPLOYMENT, run_id as u64, PURPOSE_CHANNEL);
        let mut outcome_rng = stream_rng(master, TAG_DEPLOYMENT, run_id as u64, PURPOSE_OUTCOME);
        let agent_rng = stream_rng(
            master,
            TAG_DEPLOYMENT,
            run_id as u64,
            PURPOSE_AGENT_BASE + agent_idx as u64,
        );
        let track = MobilityTrack::random_rectilinear(
            start,
            heading,
            speed_kmh / 3.6,
            phase.deployment_outer_bound_m,
        )?;
        let mut state = ChannelRunState::init(params, track, &mut channel_rng);
        let mut agent = spec.build(cfg, params, agent_rng)?;
        let mut metrics = RunMetrics::default();
        for _ in 0..phase.deployment_frames {
            run_frame(
                params,
                &mut state,
                agent.as_mut(),
                &mut outcome_rng,
                &mut channel_rng,
                &mut metrics,
                cfg.output.write_tti_trace,
            );
        }
        records.push(RunRecord {
            run_id,
            agent: spec.label(),
            mean_bler: metrics.mean_bler(),
            mean_se: metrics.mean_spectral_efficiency(),
            trace: metrics.per_tti_trace,
        });
    }
    Ok(records)
}

/// Empirical CDF over per-run values: ascending sample points with a step of
/// `1/n` at each.
pub fn aggregate_cdf(per_run_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if per_run_values.is_empty() {
        return Err(Error::config("cdf needs at least one value"));
    }
    let mut sorted = per_run_values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect())
}
