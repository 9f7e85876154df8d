//! `qlamc` command line: train a Q-table on the learning track, compare the
//! policies over paired deployment runs, or export the BLER curves and
//! lookup-table thresholds. All outputs are CSV plus a printed summary; a
//! given (config, seed) always produces byte-identical artifacts.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlamc::agents::QTable;
use qlamc::config::{AgentKind, RunConfig};
use qlamc::error::Error;
use qlamc::report;
use qlamc::sim::{run_deployment_phase, run_learning_phase, AgentSpec};

#[derive(Parser)]
#[command(name = "qlamc", version, about = "Link adaptation simulator: Q-learning AMC vs fixed-table and outer-loop baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML run configuration; defaults apply for every omitted key (and an
    /// omitted file altogether runs the built-in scenario).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output.dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Master seed (overrides the config's `phase.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing output files instead of refusing.
    #[arg(long)]
    overwrite: bool,
    /// Size of the worker pool for parallel runs; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learning phase and persist the trained Q-table.
    Train {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the configured agents over paired Monte Carlo runs.
    Deploy {
        #[command(flatten)]
        common: CommonOpts,
        /// Trained Q-table files, one per Q-learning agent to evaluate.
        #[arg(long = "qtables", num_args = 0.., value_name = "FILE")]
        qtables: Vec<PathBuf>,
        /// Also write the per-TTI trace CSV.
        #[arg(long)]
        trace: bool,
    },
    /// Export the BLER curves and the lookup-table threshold derivation.
    Curves {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { common } => cmd_train(common),
        Command::Deploy { common, qtables, trace } => cmd_deploy(common, qtables, trace),
        Command::Curves { common } => cmd_curves(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &CommonOpts) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &common.out_dir {
        cfg.output.dir = dir.display().to_string();
    }
    if let Some(seed) = common.seed {
        cfg.phase.seed = seed;
    }
    cfg.validate()?;
    init_pool(common.parallel);
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn init_pool(threads: usize) {
    if threads > 0 {
        // Ignore the error when a pool already exists (repeated invocation
        // inside one process, e.g. tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_pool(threads: usize) {
    if threads > 1 {
        eprintln!("note: built without the 'parallel' feature; running sequentially");
    }
}

/// Refuse to clobber existing artifacts unless --overwrite was given.
fn check_outputs(paths: &[PathBuf], overwrite: bool) -> Result<(), Error> {
    if overwrite {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(Error::config(format!(
                "output {} already exists; pass --overwrite to replace it",
                p.display()
            )));
        }
    }
    Ok(())
}

fn cmd_train(common: CommonOpts) -> Result<(), Error> {
    let cfg = load_config(&common)?;
    if cfg.agent.kind != AgentKind::Qlamc {
        return Err(Error::config(
            "train requires agent.kind = \"qlamc\" (the baselines have nothing to train)",
        ));
    }
    let out_dir = PathBuf::from(&cfg.output.dir);
    let qtable_path = out_dir.join(format!(
        "qtable_{}_{}.qt",
        cfg.link.n_cqi,
        cfg.agent.reward.as_str()
    ));
    let trace_path = out_dir.join("learning_trace.csv");
    check_outputs(&[qtable_path.clone(), trace_path.clone()], common.overwrite)?;

    let output = run_learning_phase(&cfg)?;
    std::fs::create_dir_all(&out_dir)?;
    output.table.save(&qtable_path, cfg.agent.reward, cfg.qtable_config_hash())?;
    report::write_learning_trace_csv(&trace_path, &output.trace)?;
    println!(
        "trained {} states x {} actions over {} frames (final epsilon {:.3})",
        output.table.n_states(),
        output.table.n_actions(),
        cfg.phase.learning_frames,
        output.final_epsilon
    );
    println!("wrote {}", qtable_path.display());
    println!("wrote {}", trace_path.display());
    Ok(())
}

fn cmd_deploy(common: CommonOpts, qtables: Vec<PathBuf>, trace: bool) -> Result<(), Error> {
    let mut cfg = load_config(&common)?;
    if trace {
        cfg.output.write_tti_trace = true;
    }
    let specs = assemble_agents(&cfg, &qtables)?;

    let out_dir = PathBuf::from(&cfg.output.dir);
    let per_run_path = out_dir.join("per_run.csv");
    let aggregate_path = out_dir.join("aggregate.csv");
    let cdf_path = out_dir.join("cdf.csv");
    let tti_path = out_dir.join("tti_trace.csv");
    let mut outputs = vec![per_run_path.clone(), aggregate_path.clone(), cdf_path.clone()];
    if cfg.output.write_tti_trace {
        outputs.push(tti_path.clone());
    }
    check_outputs(&outputs, common.overwrite)?;

    let out = run_deployment_phase(&cfg, &specs)?;
    std::fs::create_dir_all(&out_dir)?;
    report::write_per_run_csv(&per_run_path, &out)?;
    report::write_aggregate_csv(&aggregate_path, &out)?;
    report::write_cdf_csv(&cdf_path, &out)?;
    if cfg.output.write_tti_trace {
        report::write_tti_trace_csv(&tti_path, &out)?;
    }
    print!("{}", report::format_summary_table(&out));
    Ok(())
}

/// Expand the configured agent list into concrete specs: each `qlamc` entry
/// consumes the supplied Q-table files, `olla` expands to its three step
/// variants.
fn assemble_agents(cfg: &RunConfig, qtables: &[PathBuf]) -> Result<Vec<AgentSpec>, Error> {
    let mut specs = Vec::new();
    for kind in &cfg.phase.deploy_agents {
        match kind.as_str() {
            "qlamc" => {
                if qtables.is_empty() {
                    return Err(Error::config(
                        "deploy_agents includes 'qlamc' but no --qtables files were given",
                    ));
                }
                for path in qtables {
                    let (table, reward, hash) = QTable::load(path).map_err(|e| {
                        Error::config(format!("cannot load q-table {}: {e}", path.display()))
                    })?;
                    if hash != cfg.qtable_config_hash() {
                        eprintln!(
                            "note: {} was trained under a different configuration (hash mismatch)",
                            path.display()
                        );
                    }
                    specs.push(AgentSpec::Qlamc { table, reward });
                }
            }
            "table" => specs.push(AgentSpec::Table),
            "olla" => specs.extend(AgentSpec::olla_trio()),
            other => {
                return Err(Error::config(format!("unknown deploy agent kind '{other}'")));
            }
        }
    }
    Ok(specs)
}

fn cmd_curves(common: CommonOpts) -> Result<(), Error> {
    let cfg = load_config(&common)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    let curves_path = out_dir.join("bler_curves.csv");
    let table_path = out_dir.join("mcs_table.csv");
    check_outputs(&[curves_path.clone(), table_path.clone()], common.overwrite)?;

    let mcs = qlamc::link::mcs_table();
    let live = cfg.link.bler_model();
    let analysis = cfg.link.analysis_bler_model();
    let illa = qlamc::link::build_illa_table(&analysis, &mcs, cfg.link.target_bler)?;
    std::fs::create_dir_all(&out_dir)?;
    report::write_bler_curves_csv(&curves_path, &live, &mcs, -10.0, 50.0, 0.1)?;
    report::write_mcs_table_csv(&table_path, &analysis, &illa)?;
    println!("wrote {}", curves_path.display());
    println!("wrote {}", table_path.display());
    Ok(())
}
