//! `optimize-h`: evaluate the delay-aware convergence objective per delay
//! ratio and report the minimizing local-iteration count.

use crate::config::{ExperimentConfig, Mode, Overrides};
use crate::error::CliError;
use crate::output::{CsvWriter, Field};
use std::path::PathBuf;
use treecoca_core::delay_opt::{optimal_h, DelayScenario};

pub fn run(config: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    config.check_mode(Mode::OptimizeH)?;
    let opt = config
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Config("optimize-h needs an [optimize] section".into()))?;
    if opt.r_values.is_empty() {
        return Err(CliError::Config("optimize needs nonempty r-values".into()));
    }
    if opt.h_max < 1 {
        return Err(CliError::Config("optimize needs h-max >= 1".into()));
    }
    let base = DelayScenario::new(
        opt.c,
        opt.k,
        opt.delta,
        opt.t_total,
        opt.t_lp,
        opt.t_cp,
        0.0,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let mut rs = opt.r_values.clone();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut csv = CsvWriter::new(
        &config.echo_toml(),
        "grid search over H",
        overrides.deterministic,
    );
    csv.header(&["r", "h_star", "log_objective"]);
    for &r in &rs {
        let scenario = base
            .with_delay_ratio(r)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let best = optimal_h(&scenario, opt.h_max);
        csv.row(&[
            Field::Float(r),
            Field::Int(best.h_star as u64),
            Field::Float(best.log_value),
        ]);
    }
    let path = config.out_dir().join("optimal_h.csv");
    csv.finish(&path)?;
    Ok(vec![path])
}
