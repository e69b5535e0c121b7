//! Shared domain types: the dataset, its leaf partition, the worker tree,
//! and solver run state.

use crate::linalg;
use crate::losses::{LossKind, LossSpec};
use std::collections::BTreeMap;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("dataset must have at least one point and one feature (d={d}, m={m})")]
    Empty { d: usize, m: usize },
    #[error("regularization parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("feature buffer has {got} entries, expected d*m = {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("{got} labels for {expected} data points")]
    LabelCount { expected: usize, got: usize },
    #[error("non-finite value in column {0}")]
    NonFinite(usize),
    #[error("smooth hinge requires labels in {{-1, +1}}; label {value} at index {index}")]
    BadHingeLabel { index: usize, value: f64 },
}

/// A regularized loss-minimization instance.
///
/// Features are stored column-major: column `i` is the datum `x_i`. On
/// construction every column is scaled by `1 / max_i ||x_i||` whenever that
/// maximum exceeds one, so `||x_i|| <= 1` always holds afterwards (the
/// convergence constants assume it); the applied factor is kept in `scale`.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    lambda: f64,
    loss: LossSpec,
    d: usize,
    m: usize,
    col_norms_sq: Vec<f64>,
    scale: f64,
}

impl Dataset {
    pub fn new(
        d: usize,
        m: usize,
        mut features: Vec<f64>,
        labels: Vec<f64>,
        lambda: f64,
        loss: LossSpec,
    ) -> Result<Self, DatasetError> {
        if d == 0 || m == 0 {
            return Err(DatasetError::Empty { d, m });
        }
        if lambda <= 0.0 {
            return Err(DatasetError::NonPositiveLambda(lambda));
        }
        if features.len() != d * m {
            return Err(DatasetError::BadShape {
                expected: d * m,
                got: features.len(),
            });
        }
        if labels.len() != m {
            return Err(DatasetError::LabelCount {
                expected: m,
                got: labels.len(),
            });
        }
        for i in 0..m {
            if features[i * d..(i + 1) * d].iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite(i));
            }
        }
        if loss.kind() == LossKind::SmoothHinge {
            for (i, &y) in labels.iter().enumerate() {
                if y != 1.0 && y != -1.0 {
                    return Err(DatasetError::BadHingeLabel { index: i, value: y });
                }
            }
        }
        let max_norm = (0..m)
            .map(|i| linalg::norm(&features[i * d..(i + 1) * d]))
            .fold(0.0f64, f64::max);
        let scale = if max_norm > 1.0 {
            for v in features.iter_mut() {
                *v /= max_norm;
            }
            max_norm
        } else {
            1.0
        };
        let col_norms_sq = (0..m)
            .map(|i| linalg::norm_sq(&features[i * d..(i + 1) * d]))
            .collect();
        Ok(Self {
            features,
            labels,
            lambda,
            loss,
            d,
            m,
            col_norms_sq,
            scale,
        })
    }

    pub fn from_columns(
        columns: &[Vec<f64>],
        labels: Vec<f64>,
        lambda: f64,
        loss: LossSpec,
    ) -> Result<Self, DatasetError> {
        let m = columns.len();
        let d = columns.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(d * m);
        for col in columns {
            if col.len() != d {
                return Err(DatasetError::BadShape {
                    expected: d * m,
                    got: col.len() * m,
                });
            }
            flat.extend_from_slice(col);
        }
        Self::new(d, m, flat, labels, lambda, loss)
    }

    /// Number of data points `m`.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The product `lambda * m` that scales the dual map.
    pub fn lambda_m(&self) -> f64 {
        self.lambda * self.m as f64
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// The (scaled) datum `x_i`.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.col_norms_sq[i]
    }

    /// The factor the raw columns were divided by at load time (1 when the
    /// input already satisfied the unit-ball constraint).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `w(alpha) = A alpha` with `A_i = x_i / (lambda m)`.
    pub fn map_dual(&self, alpha: &[f64]) -> Vec<f64> {
        debug_assert_eq!(alpha.len(), self.m);
        let inv = 1.0 / self.lambda_m();
        let mut w = vec![0.0; self.d];
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                linalg::axpy(&mut w, a * inv, self.column(i));
            }
        }
        w
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("{m} data points cannot cover {leaves} leaves")]
    FewerIndicesThanLeaves { m: usize, leaves: usize },
    #[error("column {0} is assigned to more than one leaf")]
    Overlap(usize),
    #[error("columns are not fully covered: {covered} of {m} assigned")]
    Incomplete { covered: usize, m: usize },
    #[error("column index {0} is out of range")]
    OutOfRange(usize),
    #[error("assignment does not match the topology's leaves (node {0})")]
    LeafMismatch(NodeId),
    #[error("no leaves were given")]
    NoLeaves,
}

/// Assignment of data columns to leaf workers. Index sets are disjoint,
/// sorted, and jointly cover `0..m`; only leaves hold data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPartition {
    blocks: BTreeMap<NodeId, Vec<usize>>,
    m: usize,
}

impl DataPartition {
    pub fn new(blocks: BTreeMap<NodeId, Vec<usize>>, m: usize) -> Result<Self, PartitionError> {
        if blocks.is_empty() {
            return Err(PartitionError::NoLeaves);
        }
        let mut seen = vec![false; m];
        let mut covered = 0;
        for cols in blocks.values() {
            for &c in cols {
                if c >= m {
                    return Err(PartitionError::OutOfRange(c));
                }
                if seen[c] {
                    return Err(PartitionError::Overlap(c));
                }
                seen[c] = true;
                covered += 1;
            }
        }
        if covered != m {
            return Err(PartitionError::Incomplete { covered, m });
        }
        let mut blocks = blocks;
        for cols in blocks.values_mut() {
            cols.sort_unstable();
        }
        Ok(Self { blocks, m })
    }

    /// Checks the assignment against a topology: every leaf appears exactly
    /// once and no internal node holds data.
    pub fn validate_against(&self, topology: &TreeTopology) -> Result<(), PartitionError> {
        for leaf in topology.leaves() {
            if !self.blocks.contains_key(leaf) {
                return Err(PartitionError::LeafMismatch(*leaf));
            }
        }
        for node in self.blocks.keys() {
            if !topology.leaves().contains(node) {
                return Err(PartitionError::LeafMismatch(*node));
            }
        }
        Ok(())
    }

    pub fn block(&self, leaf: NodeId) -> &[usize] {
        &self.blocks[&leaf]
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.blocks.keys().copied()
    }

    /// Size of the largest block.
    pub fn max_block_len(&self) -> usize {
        self.blocks.values().map(Vec::len).max().unwrap_or(0)
    }
}

/// Splits `0..m` into contiguous blocks of size `floor(m/L)` or `ceil(m/L)`,
/// one per leaf in the given order; the first `m mod L` leaves receive the
/// larger blocks.
pub fn partition_evenly(m: usize, leaves: &[NodeId]) -> Result<DataPartition, PartitionError> {
    if leaves.is_empty() {
        return Err(PartitionError::NoLeaves);
    }
    if m < leaves.len() {
        return Err(PartitionError::FewerIndicesThanLeaves {
            m,
            leaves: leaves.len(),
        });
    }
    let l = leaves.len();
    let base = m / l;
    let extra = m % l;
    let mut blocks = BTreeMap::new();
    let mut start = 0;
    for (k, &leaf) in leaves.iter().enumerate() {
        let size = base + usize::from(k < extra);
        blocks.insert(leaf, (start..start + size).collect());
        start += size;
    }
    DataPartition::new(blocks, m)
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("edge list contains a cycle (or a node with two parents)")]
    CycleDetected,
    #[error("more than one root declared")]
    MultipleRoots,
    #[error("negative delay or compute time on node {0}")]
    NegativeDelay(NodeId),
    #[error("missing or zero iteration count on node {0}")]
    MissingIterationCount(NodeId),
    #[error("edge references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("the edge list declares no nodes")]
    EmptyTopology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Internal,
    Leaf,
}

/// Per-node attributes in a topology description. Leaves need `t_lp` (seconds
/// per coordinate step) and `iterations = H`; non-leaves need `t_cp` (seconds
/// per aggregation update) and `iterations = T` (R at the root). Missing
/// compute times default to zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeDecl {
    pub t_lp: Option<f64>,
    pub t_cp: Option<f64>,
    pub iterations: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDecl {
    pub parent: NodeId,
    pub child: NodeId,
    /// Round-trip delay in seconds for one parent<->child exchange.
    pub delay: f64,
}

/// A structured topology description: node ids are dense integers in
/// declaration order, edges carry the communication delays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopologySpec {
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<EdgeDecl>,
}

impl TopologySpec {
    /// Star network: node 0 is the root with `leaves` direct leaf children.
    pub fn star(leaves: usize, h: u32, r: u32, t_lp: f64, t_cp: f64, delay: f64) -> Self {
        let mut spec = TopologySpec::default();
        spec.nodes.push(NodeDecl {
            t_cp: Some(t_cp),
            iterations: Some(r),
            ..Default::default()
        });
        for i in 0..leaves {
            spec.nodes.push(NodeDecl {
                t_lp: Some(t_lp),
                iterations: Some(h),
                ..Default::default()
            });
            spec.edges.push(EdgeDecl {
                parent: 0,
                child: i + 1,
                delay,
            });
        }
        spec
    }

    /// Two-layer tree: a root over `subcenters` internal nodes, each over
    /// `leaves_per` leaves. Root<->subcenter edges use `root_delay`,
    /// subcenter<->leaf edges use `sub_delay`.
    #[allow(clippy::too_many_arguments)]
    pub fn two_layer(
        subcenters: usize,
        leaves_per: usize,
        h: u32,
        t: u32,
        r: u32,
        t_lp: f64,
        t_cp: f64,
        root_delay: f64,
        sub_delay: f64,
    ) -> Self {
        let mut spec = TopologySpec::default();
        spec.nodes.push(NodeDecl {
            t_cp: Some(t_cp),
            iterations: Some(r),
            ..Default::default()
        });
        for _ in 0..subcenters {
            let sub_id = spec.nodes.len();
            spec.nodes.push(NodeDecl {
                t_cp: Some(t_cp),
                iterations: Some(t),
                ..Default::default()
            });
            spec.edges.push(EdgeDecl {
                parent: 0,
                child: sub_id,
                delay: root_delay,
            });
            for _ in 0..leaves_per {
                let leaf_id = spec.nodes.len();
                spec.nodes.push(NodeDecl {
                    t_lp: Some(t_lp),
                    iterations: Some(h),
                    ..Default::default()
                });
                spec.edges.push(EdgeDecl {
                    parent: sub_id,
                    child: leaf_id,
                    delay: sub_delay,
                });
            }
        }
        spec
    }
}

#[derive(Debug, Clone)]
pub struct TopologyNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Round-trip delay on the edge to the parent (0 for the root).
    pub delay_to_parent: f64,
    /// Seconds per inner coordinate step (leaves; 0 elsewhere).
    pub t_lp: f64,
    /// Seconds per aggregation update (non-leaves; 0 at leaves).
    pub t_cp: f64,
    /// H for leaves, T for internal nodes, R for the root.
    pub iterations: u32,
}

/// A validated rooted tree of workers. A depth-1 tree (root with only leaf
/// children) is the star network.
#[derive(Debug, Clone)]
pub struct TreeTopology {
    nodes: Vec<TopologyNode>,
    root: NodeId,
    leaves: Vec<NodeId>,
}

/// Validates a topology description into a `TreeTopology`.
pub fn build_topology(spec: &TopologySpec) -> Result<TreeTopology, TopologyError> {
    let n = spec.nodes.len();
    if n == 0 {
        return Err(TopologyError::EmptyTopology);
    }
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut delay: Vec<f64> = vec![0.0; n];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for e in &spec.edges {
        if e.parent >= n {
            return Err(TopologyError::UnknownNode(e.parent));
        }
        if e.child >= n {
            return Err(TopologyError::UnknownNode(e.child));
        }
        if e.child == e.parent || parent[e.child].is_some() {
            // A self-edge or a second incoming edge closes a cycle.
            return Err(TopologyError::CycleDetected);
        }
        parent[e.child] = Some(e.parent);
        delay[e.child] = e.delay;
        children[e.parent].push(e.child);
    }
    let roots: Vec<NodeId> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let root = match roots.as_slice() {
        [] => return Err(TopologyError::CycleDetected),
        [r] => *r,
        _ => return Err(TopologyError::MultipleRoots),
    };
    // Reachability from the root; an unreachable node sits on a directed cycle.
    let mut reached = vec![false; n];
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        if reached[u] {
            continue;
        }
        reached[u] = true;
        stack.extend(children[u].iter().copied());
    }
    if reached.iter().any(|r| !r) {
        return Err(TopologyError::CycleDetected);
    }

    let mut nodes = Vec::with_capacity(n);
    let mut leaves = Vec::new();
    for id in 0..n {
        let kind = if id == root {
            NodeKind::Root
        } else if children[id].is_empty() {
            NodeKind::Leaf
        } else {
            NodeKind::Internal
        };
        let decl = &spec.nodes[id];
        let t_lp = decl.t_lp.unwrap_or(0.0);
        let t_cp = decl.t_cp.unwrap_or(0.0);
        if delay[id] < 0.0 || t_lp < 0.0 || t_cp < 0.0 {
            return Err(TopologyError::NegativeDelay(id));
        }
        let iterations = match decl.iterations {
            Some(it) if it >= 1 => it,
            _ => return Err(TopologyError::MissingIterationCount(id)),
        };
        if kind == NodeKind::Leaf {
            leaves.push(id);
        }
        nodes.push(TopologyNode {
            id,
            kind,
            parent: parent[id],
            children: children[id].clone(),
            delay_to_parent: delay[id],
            t_lp,
            t_cp,
            iterations,
        });
    }
    Ok(TreeTopology {
        nodes,
        root,
        leaves,
    })
}

impl TreeTopology {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &TopologyNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf ids in declaration order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// True when every child of the root is a leaf (the star network).
    pub fn is_star(&self) -> bool {
        self.nodes[self.root]
            .children
            .iter()
            .all(|&c| self.nodes[c].kind == NodeKind::Leaf)
    }
}

/// Solver state: the dual vector, the maintained primal iterate `w = A alpha`,
/// and the simulated wall clock.
#[derive(Debug, Clone)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub w: Vec<f64>,
    pub sim_time: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("negative duality gap {gap} at round {round}")]
    NegativeGap { round: u32, gap: f64 },
    #[error("dual objective decreased from {prev} to {cur} at round {round}")]
    DualDecreased { round: u32, prev: f64, cur: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub round: u32,
    pub sim_time: f64,
    pub dual_obj: f64,
    pub primal_obj: f64,
    pub gap: f64,
}

/// Per-round record of a solver run, one row per root outer iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    /// Gap nonnegativity (within 1e-9) and monotone dual ascent (within 1e-10).
    pub fn check_invariants(&self) -> Result<(), TraceError> {
        let mut prev = f64::NEG_INFINITY;
        for row in &self.rows {
            if row.gap < -1e-9 {
                return Err(TraceError::NegativeGap {
                    round: row.round,
                    gap: row.gap,
                });
            }
            if row.dual_obj < prev - 1e-10 {
                return Err(TraceError::DualDecreased {
                    round: row.round,
                    prev,
                    cur: row.dual_obj,
                });
            }
            prev = row.dual_obj;
        }
        Ok(())
    }

    /// Simulated time of the first row whose gap is at or below `target`
    /// (`None` if the run never got there; callers rank that as +inf).
    pub fn time_to_gap(&self, target: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.gap <= target)
            .map(|r| r.sim_time)
    }
}
