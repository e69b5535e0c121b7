//! Distributed dual coordinate ascent over tree-structured worker networks.
//!
//! The crate simulates CoCoA-style synchronous dual coordinate ascent on an
//! arbitrary rooted tree of workers where only leaves hold data, tracks a
//! simulated communication clock with per-edge delays, evaluates the
//! recursive geometric convergence bounds for the same runs, and tunes the
//! number of local iterations for the fastest convergence in simulated time.
//!
//! Module map:
//! - [`model`]: dataset, partition, topology, and trace types
//! - [`losses`]: objectives, conjugates, and the exact coordinate update
//! - [`local_sdca`]: the leaf-level sampled coordinate ascent
//! - [`tree_solver`]: the recursive solver and the simulated clock
//! - [`theory`]: theta factors, rho_min, and bound curves
//! - [`delay_opt`]: local-iteration tuning under a time budget
//! - [`ingest`]: CSV loading and seeded Gaussian synthesis
//! - [`reference`]: high-accuracy reference optima

pub mod delay_opt;
pub mod ingest;
pub mod linalg;
pub mod local_sdca;
pub mod losses;
pub mod model;
pub mod reference;
pub mod rng;
pub mod theory;
pub mod tree_solver;

pub use delay_opt::{gap_objective, log_gap_objective, optimal_h, DelayScenario, OptimalH};
pub use ingest::{load_csv, synth_gaussian, ColumnRef, CsvSchema, LabelModel};
pub use local_sdca::{local_sdca, LeafUpdate};
pub use losses::{
    coordinate_max, dual_objective, duality_gap, primal_objective, LossKind, LossSpec,
};
pub use model::{
    build_topology, partition_evenly, ConvergenceTrace, DataPartition, Dataset, DualState,
    EdgeDecl, NodeDecl, NodeId, NodeKind, TopologySpec, TraceRow, TreeTopology,
};
pub use reference::{dual_optimum_value, ridge_dual_optimum, ridge_primal_optimum};
pub use theory::{
    bound_curve_star, bound_curve_tree, node_theta, rho_min, theta_leaf, theta_local, BoundParams,
};
pub use tree_solver::{
    run_root, simulated_round_time, LeafStreams, NodeUpdate, RunResult, SolverOptions, TreeSolver,
};
