//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! The file carries the dataset source, one or more named topologies, solver
//! and delay parameters, and per-command sections. Flags win over file
//! values. The fully resolved config is echoed into every output CSV as
//! comment lines, which is enough to re-run the experiment bit-identically.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use treecoca_core::ingest::{load_csv, synth_gaussian, ColumnRef, CsvSchema, LabelModel};
use treecoca_core::losses::LossSpec;
use treecoca_core::model::{
    build_topology, partition_evenly, DataPartition, Dataset, EdgeDecl, NodeDecl, TopologySpec,
    TreeTopology,
};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Run,
    CompareTopologies,
    SweepH,
    OptimizeH,
    BoundOverlay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// Optional declaration of intent; when present it must match the
    /// subcommand being run.
    pub mode: Option<Mode>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Inclusive seed range `[first, last]` for multi-seed commands.
    pub seeds: Option<[u64; 2]>,
    pub dataset: DatasetConfig,
    pub topology: Option<TopologyConfig>,
    /// Alternative to `topology`: several named topologies run side by side.
    pub topologies: Option<Vec<TopologyConfig>>,
    pub sweep: Option<SweepConfig>,
    pub optimize: Option<OptimizeConfig>,
    pub bound: Option<BoundConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DatasetConfig {
    pub source: SourceKind,
    /// Regularization parameter; required, no default.
    pub lambda: f64,
    pub loss: LossName,
    pub gamma: Option<f64>,
    // synthetic
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub data_seed: Option<u64>,
    pub label_model: Option<LabelModelName>,
    pub w_scale: Option<f64>,
    pub noise_sigma: Option<f64>,
    // csv
    pub path: Option<PathBuf>,
    pub delimiter: Option<String>,
    pub has_header: Option<bool>,
    pub label_column: Option<ColumnName>,
    pub feature_columns: Option<Vec<ColumnName>>,
    pub standardize: Option<bool>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum LossName {
    Squared,
    SmoothHinge,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum LabelModelName {
    LinearPlusNoise,
    Signs,
}

/// A column by index or by header name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnName {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TopologyConfig {
    pub name: Option<String>,
    pub shape: ShapeKind,
    /// Star: number of leaves.
    pub leaves: Option<usize>,
    /// Two-layer: subcenter count and leaves per subcenter.
    pub subcenters: Option<usize>,
    pub leaves_per_subcenter: Option<usize>,
    /// Root outer iterations R.
    pub rounds: u32,
    /// Leaf coordinate steps H per call.
    pub local_iters: Option<u32>,
    /// Inner iterations T at subcenters (two-layer).
    pub inner_rounds: Option<u32>,
    pub t_lp: Option<f64>,
    pub t_cp: Option<f64>,
    /// Root<->child round-trip delay in seconds, or a multiple of t_lp.
    pub delay: Option<f64>,
    pub delay_ratio: Option<f64>,
    pub subcenter_delay: Option<f64>,
    /// Explicit node list (shape = "explicit").
    pub nodes: Option<Vec<NodeConfig>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Star,
    TwoLayer,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct NodeConfig {
    /// Index of the parent in this list; omit for the root.
    pub parent: Option<usize>,
    pub delay: Option<f64>,
    pub t_lp: Option<f64>,
    pub t_cp: Option<f64>,
    pub iterations: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepConfig {
    pub h_values: Vec<u32>,
    pub r_values: Vec<f64>,
    /// Target gap as a fraction of the initial gap.
    pub target_gap_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OptimizeConfig {
    pub c: f64,
    pub k: usize,
    pub delta: f64,
    pub t_total: f64,
    pub t_lp: f64,
    pub t_cp: f64,
    pub h_max: u32,
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BoundConfig {
    /// Allowed overshoot of the empirical mean relative to the bound
    /// (default 0.05).
    pub tolerance: Option<f64>,
    /// Coordinate steps for the fallback reference optimum (non-ridge,
    /// default 1_000_000).
    pub reference_steps: Option<u32>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub seeds: Option<[u64; 2]>,
    pub out_dir: Option<PathBuf>,
    pub deterministic: bool,
    pub debug_consistency: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply_overrides(&mut self, ov: &Overrides) {
        if let Some(seed) = ov.seed {
            self.seed = Some(seed);
        }
        if let Some(seeds) = ov.seeds {
            self.seeds = Some(seeds);
        }
        if let Some(dir) = &ov.out_dir {
            self.out_dir = Some(dir.clone());
        }
    }

    pub fn check_mode(&self, expected: Mode) -> Result<(), CliError> {
        match &self.mode {
            Some(m)
                if *m != expected && !(expected == Mode::Run && *m == Mode::CompareTopologies) =>
            {
                Err(CliError::Config(format!(
                    "config declares mode {m:?}, command expects {expected:?}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The list of seeds for multi-seed commands (inclusive range).
    pub fn seed_list(&self) -> Result<Vec<u64>, CliError> {
        match self.seeds {
            Some([first, last]) if first <= last => Ok((first..=last).collect()),
            Some([first, last]) => Err(CliError::Config(format!(
                "seed range {first}..{last} is empty"
            ))),
            None => Ok(vec![self.seed.unwrap_or(0)]),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Full resolved config serialized for the output CSV comment block.
    pub fn echo_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("<unserializable config: {e}>"))
    }

    pub fn build_dataset(&self) -> Result<Dataset, CliError> {
        let d = &self.dataset;
        let loss = match d.loss {
            LossName::Squared => LossSpec::squared(),
            LossName::SmoothHinge => {
                let gamma = d.gamma.ok_or_else(|| {
                    CliError::Config("smooth-hinge loss requires dataset.gamma".into())
                })?;
                LossSpec::smooth_hinge(gamma)
                    .map_err(|e| CliError::Config(format!("dataset.gamma: {e}")))?
            }
        };
        match d.source {
            SourceKind::Synthetic => {
                let dim =
                    d.d.ok_or_else(|| CliError::Config("synthetic dataset needs d".into()))?;
                let m =
                    d.m.ok_or_else(|| CliError::Config("synthetic dataset needs m".into()))?;
                let label_model = match d.label_model.unwrap_or(LabelModelName::LinearPlusNoise) {
                    LabelModelName::LinearPlusNoise => LabelModel::LinearPlusNoise {
                        w_scale: d.w_scale.unwrap_or(1.0),
                        noise_sigma: d.noise_sigma.unwrap_or(0.1),
                    },
                    LabelModelName::Signs => LabelModel::Signs,
                };
                synth_gaussian(
                    dim,
                    m,
                    d.data_seed.unwrap_or(0),
                    d.lambda,
                    loss,
                    label_model,
                )
                .map_err(|e| CliError::Config(format!("synthetic dataset: {e}")))
            }
            SourceKind::Csv => {
                let path = d
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::Config("csv dataset needs path".into()))?;
                let delimiter = match d.delimiter.as_deref() {
                    None => b',',
                    Some(s) if s.len() == 1 => s.as_bytes()[0],
                    Some(s) => {
                        return Err(CliError::Config(format!(
                            "delimiter must be one byte, got {s:?}"
                        )))
                    }
                };
                let to_ref = |c: &ColumnName| match c {
                    ColumnName::Index(i) => ColumnRef::Index(*i),
                    ColumnName::Name(n) => ColumnRef::Name(n.clone()),
                };
                let schema =
                    CsvSchema {
                        feature_columns: d
                            .feature_columns
                            .as_ref()
                            .map(|cols| cols.iter().map(to_ref).collect()),
                        label_column: d.label_column.as_ref().map(to_ref).ok_or_else(|| {
                            CliError::Config("csv dataset needs label-column".into())
                        })?,
                        delimiter,
                        has_header: d.has_header.unwrap_or(false),
                        standardize: d.standardize.unwrap_or(true),
                    };
                load_csv(path, &schema, d.lambda, loss)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    /// All topologies to run: the single `topology` or the `topologies` list.
    pub fn topology_configs(&self) -> Result<Vec<&TopologyConfig>, CliError> {
        match (&self.topology, &self.topologies) {
            (Some(t), None) => Ok(vec![t]),
            (None, Some(list)) if !list.is_empty() => Ok(list.iter().collect()),
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either topology or topologies, not both".into(),
            )),
            _ => Err(CliError::Config("config needs a topology".into())),
        }
    }
}

impl TopologyConfig {
    pub fn label(&self, index: usize) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("topology{index}"))
    }

    fn resolved_delay(&self) -> Result<f64, CliError> {
        match (self.delay, self.delay_ratio) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either delay or delay-ratio, not both".into(),
            )),
            (Some(d), None) => Ok(d),
            (None, Some(r)) => Ok(r * self.t_lp.unwrap_or(0.0)),
            (None, None) => Ok(0.0),
        }
    }

    /// Builds and validates the topology, optionally overriding H (sweeps).
    pub fn build(&self, h_override: Option<u32>) -> Result<TreeTopology, CliError> {
        let spec = self.to_spec(h_override)?;
        build_topology(&spec).map_err(|e| CliError::Config(format!("topology: {e}")))
    }

    fn to_spec(&self, h_override: Option<u32>) -> Result<TopologySpec, CliError> {
        let h = match (h_override, self.local_iters) {
            (Some(h), _) => h,
            (None, Some(h)) => h,
            (None, None) if self.shape != ShapeKind::Explicit => {
                return Err(CliError::Config("topology needs local-iters".into()))
            }
            _ => 0,
        };
        let t_lp = self.t_lp.unwrap_or(0.0);
        let t_cp = self.t_cp.unwrap_or(0.0);
        let delay = self.resolved_delay()?;
        match self.shape {
            ShapeKind::Star => {
                let leaves = self
                    .leaves
                    .ok_or_else(|| CliError::Config("star topology needs leaves".into()))?;
                Ok(TopologySpec::star(
                    leaves,
                    h,
                    self.rounds,
                    t_lp,
                    t_cp,
                    delay,
                ))
            }
            ShapeKind::TwoLayer => {
                let subs = self.subcenters.ok_or_else(|| {
                    CliError::Config("two-layer topology needs subcenters".into())
                })?;
                let per = self.leaves_per_subcenter.ok_or_else(|| {
                    CliError::Config("two-layer topology needs leaves-per-subcenter".into())
                })?;
                Ok(TopologySpec::two_layer(
                    subs,
                    per,
                    h,
                    self.inner_rounds.unwrap_or(1),
                    self.rounds,
                    t_lp,
                    t_cp,
                    delay,
                    self.subcenter_delay.unwrap_or(0.0),
                ))
            }
            ShapeKind::Explicit => {
                let nodes = self
                    .nodes
                    .as_ref()
                    .ok_or_else(|| CliError::Config("explicit topology needs nodes".into()))?;
                let mut spec = TopologySpec::default();
                for (child, n) in nodes.iter().enumerate() {
                    spec.nodes.push(NodeDecl {
                        t_lp: n.t_lp,
                        t_cp: n.t_cp,
                        iterations: Some(match h_override {
                            Some(h) if n.t_lp.is_some() => h,
                            _ => n.iterations,
                        }),
                    });
                    if let Some(parent) = n.parent {
                        spec.edges.push(EdgeDecl {
                            parent,
                            child,
                            delay: n.delay.unwrap_or(0.0),
                        });
                    }
                }
                Ok(spec)
            }
        }
    }
}

/// Even split of the dataset over a topology's leaves.
pub fn even_partition(
    dataset: &Dataset,
    topology: &TreeTopology,
) -> Result<DataPartition, CliError> {
    partition_evenly(dataset.len(), topology.leaves())
        .map_err(|e| CliError::Config(format!("partition: {e}")))
}
