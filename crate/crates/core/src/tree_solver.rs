//! Recursive distributed dual coordinate ascent over a worker tree, with
//! simulated-time accounting.
//!
//! Every non-leaf node runs synchronous rounds: all children of one inner
//! iteration receive the same `(alpha, w)` snapshot, work on disjoint
//! coordinate blocks, and the parent applies each returned update scaled by
//! `1/K` (K = its direct child count) so the averaged step cannot overshoot.
//! Leaves run the sampled coordinate ascent of `local_sdca`. The root loop is
//! the same aggregation with fresh objective rows appended per round.
//!
//! Simulated clock: a leaf call costs `H * t_lp`; a non-leaf round costs its
//! slowest child's call plus that edge's round-trip delay, plus its own
//! aggregation time `t_cp`, repeated for its configured iteration count.
//! For a star this is exactly `(t_lp*H + t_delay + t_cp) * rounds`.

use crate::linalg;
use crate::local_sdca::{local_sdca, verify_update, LeafUpdate, SdcaError};
use crate::losses::{dual_objective, primal_objective, ObjectiveError};
use crate::model::{
    ConvergenceTrace, DataPartition, Dataset, DualState, NodeId, NodeKind, PartitionError,
    TraceRow, TreeTopology,
};
use crate::rng::leaf_stream;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Sdca(#[from] SdcaError),
    #[error("maintained w drifted from A*alpha at round {round} (|w - A alpha| = {drift})")]
    InconsistentState { round: u32, drift: f64 },
    #[error("node {0} is not part of this topology")]
    UnknownNode(NodeId),
}

/// Update returned by one node call: `delta_alpha` is aligned with the node's
/// subtree column list, `delta_w = A * delta_alpha`, `elapsed` is the
/// simulated seconds the call consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUpdate {
    pub delta_alpha: Vec<f64>,
    pub delta_w: Vec<f64>,
    pub elapsed: f64,
}

/// Output of a root run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: DualState,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    /// Recompute `A * delta_alpha` after every node call and fail on drift.
    /// O(d*m) per call, so off by default outside of debugging.
    pub check_consistency: bool,
}

/// Per-leaf RNG streams for one root outer round. Each leaf continues its own
/// stream across repeated invocations within the round, so results do not
/// depend on sibling scheduling.
pub struct LeafStreams {
    streams: Vec<Option<ChaCha20Rng>>,
}

impl LeafStreams {
    pub fn new(topology: &TreeTopology, seed: u64, round: u64) -> Self {
        let mut streams: Vec<Option<ChaCha20Rng>> = (0..topology.len()).map(|_| None).collect();
        for &leaf in topology.leaves() {
            streams[leaf] = Some(leaf_stream(seed, leaf as u64, round));
        }
        Self { streams }
    }

    fn get(&mut self, leaf: NodeId) -> &mut ChaCha20Rng {
        self.streams[leaf]
            .as_mut()
            .expect("stream requested for non-leaf node")
    }
}

/// Simulated seconds consumed by one full call of the given node: `H * t_lp`
/// for a leaf, and `iters * (max_k(child_time + delay_k) + t_cp)` for a
/// non-leaf (the root's count is its full run length R).
pub fn simulated_round_time(topology: &TreeTopology, node: NodeId) -> f64 {
    let n = topology.node(node);
    match n.kind {
        NodeKind::Leaf => n.iterations as f64 * n.t_lp,
        NodeKind::Internal | NodeKind::Root => n.iterations as f64 * one_round_time(topology, node),
    }
}

/// Cost of a single inner iteration at a non-leaf node.
fn one_round_time(topology: &TreeTopology, node: NodeId) -> f64 {
    let n = topology.node(node);
    let slowest = n
        .children
        .iter()
        .map(|&c| simulated_round_time(topology, c) + topology.node(c).delay_to_parent)
        .fold(0.0f64, f64::max);
    slowest + n.t_cp
}

/// One solver instance bound to a dataset, topology, and partition.
pub struct TreeSolver<'a> {
    dataset: &'a Dataset,
    topology: &'a TreeTopology,
    partition: &'a DataPartition,
    /// Subtree column lists; a non-leaf's list is the concatenation of its
    /// children's lists, so every child occupies a contiguous range of it.
    subtree_cols: Vec<Vec<usize>>,
    /// Child (offset, len) ranges within the parent's column list.
    child_ranges: Vec<Vec<(usize, usize)>>,
    options: SolverOptions,
}

impl<'a> TreeSolver<'a> {
    pub fn new(
        dataset: &'a Dataset,
        topology: &'a TreeTopology,
        partition: &'a DataPartition,
    ) -> Result<Self, SolverError> {
        Self::with_options(dataset, topology, partition, SolverOptions::default())
    }

    pub fn with_options(
        dataset: &'a Dataset,
        topology: &'a TreeTopology,
        partition: &'a DataPartition,
        options: SolverOptions,
    ) -> Result<Self, SolverError> {
        partition.validate_against(topology)?;
        let mut subtree_cols: Vec<Vec<usize>> = vec![Vec::new(); topology.len()];
        let mut child_ranges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); topology.len()];
        fill_cols(
            topology,
            partition,
            topology.root(),
            &mut subtree_cols,
            &mut child_ranges,
        );
        Ok(Self {
            dataset,
            topology,
            partition,
            subtree_cols,
            child_ranges,
            options,
        })
    }

    /// The column indices owned by a node's subtree, in aggregation order.
    pub fn subtree_cols(&self, node: NodeId) -> &[usize] {
        &self.subtree_cols[node]
    }

    /// Scatters a subtree-aligned delta into a dense length-m vector.
    pub fn scatter(&self, node: NodeId, aligned: &[f64]) -> Vec<f64> {
        let cols = self.subtree_cols(node);
        let mut dense = vec![0.0; self.dataset.len()];
        for (j, &c) in cols.iter().enumerate() {
            dense[c] = aligned[j];
        }
        dense
    }

    /// One full call of `node` (a leaf or internal node) against the given
    /// snapshot. `alpha_sub` is aligned with `subtree_cols(node)`; `w` must be
    /// consistent with the full dual vector the snapshot was taken from.
    pub fn node_update(
        &self,
        node: NodeId,
        alpha_sub: &[f64],
        w: &[f64],
        streams: &mut LeafStreams,
    ) -> Result<NodeUpdate, SolverError> {
        if node >= self.topology.len() {
            return Err(SolverError::UnknownNode(node));
        }
        match self.topology.kind(node) {
            NodeKind::Leaf => {
                let n = self.topology.node(node);
                let block = self.partition.block(node);
                let leaf: LeafUpdate = local_sdca(
                    self.dataset,
                    block,
                    alpha_sub,
                    w,
                    n.iterations,
                    streams.get(node),
                )?;
                if self.options.check_consistency {
                    verify_update(self.dataset, block, &leaf)?;
                }
                Ok(NodeUpdate {
                    delta_alpha: leaf.delta_alpha,
                    delta_w: leaf.delta_w,
                    elapsed: n.iterations as f64 * n.t_lp,
                })
            }
            NodeKind::Internal | NodeKind::Root => {
                let n = self.topology.node(node);
                let mut alpha = alpha_sub.to_vec();
                let mut w_local = w.to_vec();
                for _ in 0..n.iterations {
                    self.aggregate_round(node, &mut alpha, &mut w_local, streams)?;
                }
                Ok(NodeUpdate {
                    delta_alpha: linalg::sub(&alpha, alpha_sub),
                    delta_w: linalg::sub(&w_local, w),
                    elapsed: simulated_round_time(self.topology, node),
                })
            }
        }
    }

    /// One synchronous aggregation round at a non-leaf node: children all see
    /// the entry snapshot, per-child alpha updates land immediately (blocks
    /// are disjoint), and w takes the 1/K-scaled sum of child primal deltas.
    fn aggregate_round(
        &self,
        node: NodeId,
        alpha: &mut [f64],
        w: &mut [f64],
        streams: &mut LeafStreams,
    ) -> Result<(), SolverError> {
        let children = self.topology.children(node);
        let inv_k = 1.0 / children.len() as f64;
        let w_snapshot = w.to_vec();
        let mut sum_dw = vec![0.0; w.len()];
        for (k, &child) in children.iter().enumerate() {
            let (off, len) = self.child_ranges[node][k];
            let child_alpha = alpha[off..off + len].to_vec();
            let upd = self.node_update(child, &child_alpha, &w_snapshot, streams)?;
            for (j, slot) in alpha[off..off + len].iter_mut().enumerate() {
                *slot += inv_k * upd.delta_alpha[j];
            }
            linalg::axpy(&mut sum_dw, 1.0, &upd.delta_w);
        }
        linalg::axpy(w, inv_k, &sum_dw);
        Ok(())
    }

    /// Runs `rounds` root outer iterations from `alpha = 0, w = 0`, recording
    /// one trace row per round. Identical seeds give identical traces.
    pub fn run(&self, rounds: u32, seed: u64) -> Result<RunResult, SolverError> {
        self.run_with(rounds, seed, |_, _, _| {})
    }

    /// Like `run`, with a per-round observer receiving `(round, alpha, w)`
    /// at each root boundary.
    pub fn run_with(
        &self,
        rounds: u32,
        seed: u64,
        mut observer: impl FnMut(u32, &[f64], &[f64]),
    ) -> Result<RunResult, SolverError> {
        let root = self.topology.root();
        let m = self.dataset.len();
        // Root state lives in the root's aggregation order; dense global
        // vectors are materialized at round boundaries for the trace.
        let mut alpha_sub = vec![0.0; m];
        let mut w = vec![0.0; self.dataset.dim()];
        let round_cost = one_round_time(self.topology, root);
        let mut trace = ConvergenceTrace::default();
        let mut alpha_dense = vec![0.0; m];
        for round in 1..=rounds {
            let mut streams = LeafStreams::new(self.topology, seed, round as u64 - 1);
            self.aggregate_round(root, &mut alpha_sub, &mut w, &mut streams)?;
            for (j, &c) in self.subtree_cols[root].iter().enumerate() {
                alpha_dense[c] = alpha_sub[j];
            }
            let w_exact = self.dataset.map_dual(&alpha_dense);
            let drift = linalg::norm(&linalg::sub(&w, &w_exact));
            if drift > 1e-9 * (1.0 + linalg::norm(&w_exact)) {
                return Err(SolverError::InconsistentState { round, drift });
            }
            let dual = dual_objective(self.dataset, &alpha_dense)?;
            let primal = primal_objective(self.dataset, &w_exact)?;
            trace.rows.push(TraceRow {
                round,
                sim_time: round as f64 * round_cost,
                dual_obj: dual,
                primal_obj: primal,
                gap: primal - dual,
            });
            observer(round, &alpha_dense, &w);
        }
        Ok(RunResult {
            final_state: DualState {
                alpha: alpha_dense,
                w,
                sim_time: rounds as f64 * round_cost,
                rng_seed: seed,
            },
            trace,
        })
    }
}

fn fill_cols(
    topology: &TreeTopology,
    partition: &DataPartition,
    node: NodeId,
    subtree_cols: &mut Vec<Vec<usize>>,
    child_ranges: &mut Vec<Vec<(usize, usize)>>,
) {
    if topology.kind(node) == NodeKind::Leaf {
        subtree_cols[node] = partition.block(node).to_vec();
        return;
    }
    let mut cols = Vec::new();
    let mut ranges = Vec::new();
    for &child in topology.children(node) {
        fill_cols(topology, partition, child, subtree_cols, child_ranges);
        ranges.push((cols.len(), subtree_cols[child].len()));
        cols.extend_from_slice(&subtree_cols[child]);
    }
    subtree_cols[node] = cols;
    child_ranges[node] = ranges;
}

/// Convenience entry point: Algorithm "run from the root" with default options.
pub fn run_root(
    topology: &TreeTopology,
    dataset: &Dataset,
    partition: &DataPartition,
    rounds: u32,
    seed: u64,
) -> Result<RunResult, SolverError> {
    TreeSolver::new(dataset, topology, partition)?.run(rounds, seed)
}
