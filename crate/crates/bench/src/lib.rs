//! Shared fixtures for the criterion benchmarks.

use treecoca_core::ingest::{synth_gaussian, LabelModel};
use treecoca_core::losses::LossSpec;
use treecoca_core::model::Dataset;

/// The synthetic regression instance the experiments use.
pub fn bench_dataset(d: usize, m: usize) -> Dataset {
    synth_gaussian(
        d,
        m,
        2024,
        0.1,
        LossSpec::squared(),
        LabelModel::LinearPlusNoise {
            w_scale: 1.0,
            noise_sigma: 0.1,
        },
    )
    .expect("valid synthetic instance")
}
