//! Link-level abstraction: the MCS action set, a parametric BLER-vs-SNR
//! model standing in for the full NR coding chain, transmission outcome
//! sampling, spectral-efficiency accounting and the SNR-to-CQI quantizer.
//!
//! The BLER model is a logistic in SNR(dB) with its midpoint anchored at the
//! Shannon-limit SNR of each scheme's nominal efficiency plus a fixed
//! implementation gap. Both the slope and the gap are exposed in the
//! configuration because no real decoding takes place here.

use num_complex::Complex64;
use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// One modulation-and-coding scheme: the agent's action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    /// MCS index in TS 38.214 Table 5.1.3.1-1 (64QAM table).
    pub index: u8,
    /// Bits per modulation symbol (2 = QPSK, 4 = 16QAM, 6 = 64QAM).
    pub modulation_bits: u8,
    /// Code rate in (0, 1).
    pub code_rate: f64,
}

impl McsEntry {
    const fn new(index: u8, modulation_bits: u8, rate_x1024: u16) -> Self {
        Self { index, modulation_bits, code_rate: rate_x1024 as f64 / 1024.0 }
    }

    /// Nominal spectral efficiency `m * r` in bits/s/Hz.
    pub fn nominal_efficiency(&self) -> f64 {
        self.modulation_bits as f64 * self.code_rate
    }
}

/// The 25-action MCS set: indexes 3 through 27 of TS 38.214 Table 5.1.3.1-1,
/// ordered by ascending nominal efficiency. Note that under this ordering the
/// 3GPP indexes 16 and 17 swap places: 16QAM 658/1024 (2.5703 bit/s/Hz) is
/// marginally more efficient than 64QAM 438/1024 (2.5664 bit/s/Hz).
pub fn mcs_table() -> Vec<McsEntry> {
    let mut entries = vec![
        McsEntry::new(3, 2, 251),
        McsEntry::new(4, 2, 308),
        McsEntry::new(5, 2, 379),
        McsEntry::new(6, 2, 449),
        McsEntry::new(7, 2, 526),
        McsEntry::new(8, 2, 602),
        McsEntry::new(9, 2, 679),
        McsEntry::new(10, 4, 340),
        McsEntry::new(11, 4, 378),
        McsEntry::new(12, 4, 434),
        McsEntry::new(13, 4, 490),
        McsEntry::new(14, 4, 553),
        McsEntry::new(15, 4, 616),
        McsEntry::new(16, 4, 658),
        McsEntry::new(17, 6, 438),
        McsEntry::new(18, 6, 466),
        McsEntry::new(19, 6, 517),
        McsEntry::new(20, 6, 567),
        McsEntry::new(21, 6, 616),
        McsEntry::new(22, 6, 666),
        McsEntry::new(23, 6, 719),
        McsEntry::new(24, 6, 772),
        McsEntry::new(25, 6, 822),
        McsEntry::new(26, 6, 873),
        McsEntry::new(27, 6, 910),
    ];
    entries.sort_by(|a, b| {
        a.nominal_efficiency()
            .total_cmp(&b.nominal_efficiency())
            .then(a.index.cmp(&b.index))
    });
    entries
}

/// Number of actions in the default MCS set.
pub const N_MCS: usize = 25;

/// Logistic BLER-vs-SNR abstraction.
#[derive(Debug, Clone, Copy, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlerModel {
    /// Logistic slope per dB; larger is steeper.
    pub slope_per_db: f64,
    /// Implementation gap in dB added to the Shannon-limit midpoint.
    pub implementation_gap_db: f64,
}

impl Default for BlerModel {
    fn default() -> Self {
        Self { slope_per_db: 1.5, implementation_gap_db: 2.0 }
    }
}

impl BlerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_per_db > 0.0) {
            return Err(Error::config("link.bler model slope_per_db must be positive"));
        }
        Ok(())
    }

    /// SNR (dB) at which the scheme reaches 50% BLER:
    /// `10*log10(2^(m*r) - 1) + gap`.
    pub fn snr50_db(&self, mcs: &McsEntry) -> f64 {
        10.0 * (2f64.powf(mcs.nominal_efficiency()) - 1.0).log10() + self.implementation_gap_db
    }

    /// Block error probability at the given SNR, in [0, 1], strictly
    /// decreasing in SNR.
    pub fn bler(&self, snr_db: f64, mcs: &McsEntry) -> f64 {
        1.0 / (1.0 + (self.slope_per_db * (snr_db - self.snr50_db(mcs))).exp())
    }

    /// SNR (dB) at which the scheme reaches the given BLER target.
    pub fn snr_at_bler(&self, target: f64, mcs: &McsEntry) -> f64 {
        self.snr50_db(mcs) + ((1.0 - target) / target).ln() / self.slope_per_db
    }
}

/// Configuration of the SNR-to-CQI quantizer.
#[derive(Debug, Clone, Copy, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CqiConfig {
    pub n_cqi: usize,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
}

impl Default for CqiConfig {
    fn default() -> Self {
        Self { n_cqi: 30, snr_min_db: -5.0, snr_max_db: 40.0 }
    }
}

impl CqiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cqi < 2 {
            return Err(Error::config(format!("link.n_cqi must be >= 2, got {}", self.n_cqi)));
        }
        if !(self.snr_max_db > self.snr_min_db) {
            return Err(Error::config("link.snr_max_db must exceed link.snr_min_db"));
        }
        Ok(())
    }
}

/// Quantize an SNR report to a CQI in `[0, n_cqi - 1]`: clamped at the
/// configured bounds, uniform-width bins in between.
pub fn cqi_quantize(snr_db: f64, cfg: &CqiConfig) -> usize {
    if snr_db <= cfg.snr_min_db {
        return 0;
    }
    if snr_db >= cfg.snr_max_db {
        return cfg.n_cqi - 1;
    }
    let raw = ((snr_db - cfg.snr_min_db) * (cfg.n_cqi as f64 - 1.0)
        / (cfg.snr_max_db - cfg.snr_min_db))
        .floor() as usize;
    raw.min(cfg.n_cqi - 1)
}

/// Result of transmitting one transport block.
#[derive(Debug, Clone, Copy)]
pub struct TransmissionOutcome {
    pub ack: bool,
    pub mcs_used: McsEntry,
    pub snr_db_at_tx: f64,
    /// `m*r` when acknowledged, zero otherwise (single-block accounting).
    pub realized_efficiency: f64,
}

/// Sample the outcome of one TTI: ACK with probability `1 - BLER`.
pub fn transmit<R: Rng>(
    snr_db: f64,
    mcs: &McsEntry,
    model: &BlerModel,
    rng: &mut R,
) -> TransmissionOutcome {
    let bler = model.bler(snr_db, mcs);
    let ack = rng.random::<f64>() >= bler;
    TransmissionOutcome {
        ack,
        mcs_used: *mcs,
        snr_db_at_tx: snr_db,
        realized_efficiency: if ack { mcs.nominal_efficiency() } else { 0.0 },
    }
}

/// Expected spectral efficiency `(1 - BLER) * m * r` in bits/s/Hz.
pub fn spectral_efficiency(bler: f64, mcs: &McsEntry) -> f64 {
    (1.0 - bler) * mcs.nominal_efficiency()
}

/// Fixed lookup table mapping a measured SNR directly to an MCS: per-scheme
/// switching thresholds are the SNRs at which the BLER model reaches the
/// target, and a report selects the most efficient scheme whose threshold it
/// clears. Below every threshold the most robust scheme is used.
#[derive(Debug, Clone)]
pub struct IllaTable {
    entries: Vec<McsEntry>,
    thresholds_db: Vec<f64>,
    pub target_bler: f64,
}

/// Derive the lookup table from the BLER model at the given target.
pub fn build_illa_table(model: &BlerModel, mcs_list: &[McsEntry], target_bler: f64) -> Result<IllaTable> {
    model.validate()?;
    if mcs_list.is_empty() {
        return Err(Error::config("illa table needs a nonempty MCS list"));
    }
    if !(target_bler > 0.0 && target_bler < 1.0) {
        return Err(Error::config("link.target_bler must lie in (0, 1)"));
    }
    let thresholds_db: Vec<f64> =
        mcs_list.iter().map(|m| model.snr_at_bler(target_bler, m)).collect();
    for w in thresholds_db.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::config(
                "illa table requires thresholds strictly increasing across the MCS list",
            ));
        }
    }
    Ok(IllaTable { entries: mcs_list.to_vec(), thresholds_db, target_bler })
}

impl IllaTable {
    /// Position (in the efficiency-ordered list) of the scheme selected for
    /// this SNR; doubles as the table's CQI since each CQI maps to one MCS.
    pub fn select_position(&self, snr_db: f64) -> usize {
        let mut pos = 0;
        for (i, thr) in self.thresholds_db.iter().enumerate() {
            if snr_db >= *thr {
                pos = i;
            }
        }
        pos
    }

    pub fn select(&self, snr_db: f64) -> &McsEntry {
        &self.entries[self.select_position(snr_db)]
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn thresholds_db(&self) -> &[f64] {
        &self.thresholds_db
    }
}

/// Link-section configuration: quantizer, BLER model, target and the power
/// budget. `tx_power_dbm` is the total base-station power; the per-symbol
/// power divides it across the `bandwidth / subcarrier spacing` resource
/// elements of the carrier, while `noise_power_dbm` is already per
/// subcarrier.
///
/// `calibration_margin_db` models the gap between the conditions under which
/// the lookup-table thresholds were derived and the live fading link: curve
/// analysis for a fixed table bakes in a safety margin (worst-case fading
/// assumptions), so the table switches up this many dB later than the live
/// link requires. The margin keeps the fixed table safely under the BLER
/// target at the cost of efficiency; outer-loop correction and learned link
/// adaptation recover that cost. Zero makes the table perfectly calibrated.
#[derive(Debug, Clone, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub n_cqi: usize,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub bler_slope: f64,
    pub bler_gap_db: f64,
    pub calibration_margin_db: f64,
    pub target_bler: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_mhz: f64,
    /// Information bits per transport block.
    pub n_info_bits: u32,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            n_cqi: 30,
            snr_min_db: -5.0,
            snr_max_db: 40.0,
            bler_slope: 3.0,
            bler_gap_db: 2.0,
            calibration_margin_db: 1.8,
            target_bler: 0.1,
            tx_power_dbm: 43.0,
            noise_power_dbm: -123.185,
            bandwidth_mhz: 1440.0,
            n_info_bits: 1024,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.cqi_config().validate()?;
        self.bler_model().validate()?;
        if !(self.target_bler > 0.0 && self.target_bler < 1.0) {
            return Err(Error::config("link.target_bler must lie in (0, 1)"));
        }
        if !(self.bandwidth_mhz > 0.0) {
            return Err(Error::config("link.bandwidth_mhz must be positive"));
        }
        if self.n_info_bits == 0 {
            return Err(Error::config("link.n_info_bits must be >= 1"));
        }
        Ok(())
    }

    pub fn cqi_config(&self) -> CqiConfig {
        CqiConfig { n_cqi: self.n_cqi, snr_min_db: self.snr_min_db, snr_max_db: self.snr_max_db }
    }

    /// The model the live link follows.
    pub fn bler_model(&self) -> BlerModel {
        BlerModel { slope_per_db: self.bler_slope, implementation_gap_db: self.bler_gap_db }
    }

    /// The model the threshold analysis sees: pessimistic by the calibration
    /// margin.
    pub fn analysis_bler_model(&self) -> BlerModel {
        BlerModel {
            slope_per_db: self.bler_slope,
            implementation_gap_db: self.bler_gap_db + self.calibration_margin_db,
        }
    }

    /// Per-symbol transmit power in linear mW.
    pub fn symbol_power_mw(&self, subcarrier_spacing_khz: f64) -> f64 {
        let n_re = self.bandwidth_mhz * 1e6 / (subcarrier_spacing_khz * 1e3);
        10f64.powf(self.tx_power_dbm / 10.0) / n_re
    }

    /// Noise power in linear mW.
    pub fn noise_power_mw(&self) -> f64 {
        10f64.powf(self.noise_power_dbm / 10.0)
    }
}

/// Convenience wrapper: dB-domain SNR for an effective channel under this
/// link budget.
pub fn snr_db_for(link: &LinkConfig, subcarrier_spacing_khz: f64, h_eff: Complex64) -> f64 {
    crate::beams::snr_db(h_eff, link.noise_power_mw(), link.symbol_power_mw(subcarrier_spacing_khz))
}
