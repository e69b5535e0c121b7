//! `sweep-h`: run the configured topology across a grid of local-iteration
//! counts H and delay ratios r, emitting one long-format trace CSV plus a
//! time-to-target summary per (r, H) pair.

use crate::config::{even_partition, ExperimentConfig, Mode, Overrides};
use crate::error::CliError;
use crate::output::{CsvWriter, Field};
use rayon::prelude::*;
use std::path::PathBuf;
use treecoca_core::losses::duality_gap;
use treecoca_core::model::ConvergenceTrace;
use treecoca_core::tree_solver::run_root;

pub fn run(config: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    config.check_mode(Mode::SweepH)?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep-h needs a [sweep] section".into()))?;
    if sweep.h_values.is_empty() || sweep.r_values.is_empty() {
        return Err(CliError::Config(
            "sweep needs nonempty h-values and r-values".into(),
        ));
    }
    let dataset = config.build_dataset()?;
    let seed = config.seed.unwrap_or(0);
    let topo_cfgs = config.topology_configs()?;
    if topo_cfgs.len() != 1 {
        return Err(CliError::Config("sweep-h runs exactly one topology".into()));
    }
    let base = topo_cfgs[0];
    if base.t_lp.unwrap_or(0.0) <= 0.0 {
        return Err(CliError::Config(
            "sweep-h needs topology.t-lp > 0 (delay = r * t_lp)".into(),
        ));
    }
    let initial_gap =
        duality_gap(&dataset, &vec![0.0; dataset.len()]).map_err(CliError::runtime)?;
    let target = sweep.target_gap_fraction * initial_gap;

    let pairs: Vec<(f64, u32)> = sweep
        .r_values
        .iter()
        .flat_map(|&r| sweep.h_values.iter().map(move |&h| (r, h)))
        .collect();
    let traces: Vec<ConvergenceTrace> = pairs
        .par_iter()
        .map(|&(r, h)| -> Result<ConvergenceTrace, CliError> {
            let mut cfg = base.clone();
            cfg.delay = None;
            cfg.delay_ratio = Some(r);
            let topology = cfg.build(Some(h))?;
            let partition = even_partition(&dataset, &topology)?;
            let result = run_root(&topology, &dataset, &partition, cfg.rounds, seed)
                .map_err(CliError::runtime)?;
            Ok(result.trace)
        })
        .collect::<Result<_, _>>()?;

    let out_dir = config.out_dir();
    let echo = config.echo_toml();
    let note = format!("seed: {seed}, target_gap: {target:e}");

    let mut long = CsvWriter::new(&echo, &note, overrides.deterministic);
    long.header(&["r", "h", "round", "sim_time", "gap"]);
    for ((r, h), trace) in pairs.iter().zip(&traces) {
        for row in &trace.rows {
            long.row(&[
                Field::Float(*r),
                Field::Int(*h as u64),
                Field::Int(row.round as u64),
                Field::Float(row.sim_time),
                Field::Float(row.gap),
            ]);
        }
    }
    let long_path = out_dir.join("sweep.csv");
    long.finish(&long_path)?;

    let mut summary = CsvWriter::new(&echo, &note, overrides.deterministic);
    summary.header(&["r", "h", "time_to_target"]);
    for ((r, h), trace) in pairs.iter().zip(&traces) {
        let t = trace.time_to_gap(target).unwrap_or(f64::INFINITY);
        summary.row(&[Field::Float(*r), Field::Int(*h as u64), Field::Float(t)]);
    }
    let summary_path = out_dir.join("sweep_summary.csv");
    summary.finish(&summary_path)?;
    Ok(vec![long_path, summary_path])
}
