//! CSV artifact writers and the aggregate summary table.
//!
//! All writers render to a `String` first and write it in one call, so a
//! given result always produces byte-identical files. Floating-point fields
//! use Rust's shortest-roundtrip formatting: re-parsing a CSV reproduces the
//! in-memory values exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::link::{BlerModel, IllaTable, McsEntry};
use crate::sim::{aggregate_cdf, DeploymentOutput, LearningFrameStat};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// `run,agent,mean_bler,mean_se` — one row per (run, agent).
pub fn render_per_run_csv(out: &DeploymentOutput) -> String {
    let mut s = String::from("run,agent,mean_bler,mean_se\n");
    for rec in &out.records {
        let _ = writeln!(s, "{},{},{},{}", rec.run_id, rec.agent, rec.mean_bler, rec.mean_se);
    }
    s
}

pub fn write_per_run_csv(path: &Path, out: &DeploymentOutput) -> Result<()> {
    write_file(path, &render_per_run_csv(out))
}

/// `agent,cardinality,reward,mean_bler,mean_se` — one row per agent.
/// Baselines carry `-` in the cardinality and reward columns.
pub fn render_aggregate_csv(out: &DeploymentOutput) -> String {
    let mut s = String::from("agent,cardinality,reward,mean_bler,mean_se\n");
    for a in &out.summaries {
        let card = a.cardinality.map_or("-".to_string(), |c| c.to_string());
        let reward = a.reward.map_or("-", |r| r.as_str());
        let _ = writeln!(s, "{},{},{},{},{}", a.label, card, reward, a.mean_bler, a.mean_se);
    }
    s
}

pub fn write_aggregate_csv(path: &Path, out: &DeploymentOutput) -> Result<()> {
    write_file(path, &render_aggregate_csv(out))
}

/// `agent,value,probability` — the empirical CDF of per-run mean spectral
/// efficiency, one block per agent.
pub fn render_cdf_csv(out: &DeploymentOutput) -> Result<String> {
    let mut s = String::from("agent,value,probability\n");
    for a in &out.summaries {
        for (v, p) in aggregate_cdf(&a.per_run_se)? {
            let _ = writeln!(s, "{},{},{}", a.label, v, p);
        }
    }
    Ok(s)
}

pub fn write_cdf_csv(path: &Path, out: &DeploymentOutput) -> Result<()> {
    write_file(path, &render_cdf_csv(out)?)
}

/// `frame,epsilon,mean_snr_db,nacks,mean_se` — the learning-phase trace.
pub fn render_learning_trace_csv(trace: &[LearningFrameStat]) -> String {
    let mut s = String::from("frame,epsilon,mean_snr_db,nacks,mean_se\n");
    for f in trace {
        let _ = writeln!(s, "{},{},{},{},{}", f.frame, f.epsilon, f.mean_snr_db, f.nacks, f.mean_se);
    }
    s
}

pub fn write_learning_trace_csv(path: &Path, trace: &[LearningFrameStat]) -> Result<()> {
    write_file(path, &render_learning_trace_csv(trace))
}

/// `run,agent,frame,tti,snr_db,state,mcs_index,ack` — per-TTI trace.
pub fn render_tti_trace_csv(out: &DeploymentOutput) -> String {
    let mut s = String::from("run,agent,frame,tti,snr_db,state,mcs_index,ack\n");
    for rec in &out.records {
        for t in &rec.trace {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                rec.run_id,
                rec.agent,
                t.frame,
                t.tti,
                t.snr_db,
                t.state,
                t.mcs_index,
                u8::from(t.ack)
            );
        }
    }
    s
}

pub fn write_tti_trace_csv(path: &Path, out: &DeploymentOutput) -> Result<()> {
    write_file(path, &render_tti_trace_csv(out))
}

/// `mcs_index,snr_db,bler` — one BLER curve per MCS on a fixed dB grid.
pub fn render_bler_curves_csv(
    model: &BlerModel,
    mcs_list: &[McsEntry],
    snr_min_db: f64,
    snr_max_db: f64,
    step_db: f64,
) -> String {
    let mut s = String::from("mcs_index,snr_db,bler\n");
    let n_steps = ((snr_max_db - snr_min_db) / step_db).round() as usize;
    for mcs in mcs_list {
        for k in 0..=n_steps {
            let snr = snr_min_db + k as f64 * step_db;
            let _ = writeln!(s, "{},{},{}", mcs.index, snr, model.bler(snr, mcs));
        }
    }
    s
}

pub fn write_bler_curves_csv(
    path: &Path,
    model: &BlerModel,
    mcs_list: &[McsEntry],
    snr_min_db: f64,
    snr_max_db: f64,
    step_db: f64,
) -> Result<()> {
    write_file(path, &render_bler_curves_csv(model, mcs_list, snr_min_db, snr_max_db, step_db))
}

/// `mcs_index,modulation_bits,code_rate,efficiency,snr50_db,threshold_db` —
/// the MCS set with the model midpoints and lookup-table thresholds.
pub fn render_mcs_table_csv(model: &BlerModel, illa: &IllaTable) -> String {
    let mut s = String::from("mcs_index,modulation_bits,code_rate,efficiency,snr50_db,threshold_db\n");
    for (mcs, thr) in illa.entries().iter().zip(illa.thresholds_db()) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            mcs.index,
            mcs.modulation_bits,
            mcs.code_rate,
            mcs.nominal_efficiency(),
            model.snr50_db(mcs),
            thr
        );
    }
    s
}

pub fn write_mcs_table_csv(path: &Path, model: &BlerModel, illa: &IllaTable) -> Result<()> {
    write_file(path, &render_mcs_table_csv(model, illa))
}

/// Human-readable aggregate table with columns Type, Cardinality, Reward,
/// BLER and SE (four decimals).
pub fn format_summary_table(out: &DeploymentOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>11} {:>7} {:>8} {:>9}", "Type", "Cardinality", "Reward", "BLER", "SE");
    for a in &out.summaries {
        let kind = if a.label.starts_with("qlamc") {
            "QL-AMC".to_string()
        } else if a.label == "table" {
            "Table".to_string()
        } else if let Some(n) = a.label.strip_prefix("olla") {
            format!("OLLA {n}")
        } else {
            a.label.clone()
        };
        let card = a.cardinality.map_or("-".to_string(), |c| c.to_string());
        let reward = a
            .reward
            .map_or("-".to_string(), |r| r.as_str().to_uppercase());
        let _ = writeln!(
            s,
            "{:<10} {:>11} {:>7} {:>8.4} {:>9.4}",
            kind, card, reward, a.mean_bler, a.mean_se
        );
    }
    s
}
