//! The delay-aware objective against the simulator: ranking candidate H
//! values by predicted end-of-budget gap must agree with ranking them by
//! simulated time-to-target on the extremes (best and worst candidate),
//! for a star whose bound constants are measured from the data.

use treecoca_core::delay_opt::{log_gap_objective, DelayScenario};
use treecoca_core::ingest::{synth_gaussian, LabelModel};
use treecoca_core::losses::{duality_gap, LossSpec};
use treecoca_core::model::{build_topology, partition_evenly, TopologySpec};
use treecoca_core::theory::rho_min;
use treecoca_core::tree_solver::run_root;

#[test]
fn predicted_and_simulated_h_rankings_agree_on_the_extremes() {
    let (d, m, k, lambda) = (30, 150, 3, 0.1);
    let dataset = synth_gaussian(
        d,
        m,
        515,
        lambda,
        LossSpec::squared(),
        LabelModel::LinearPlusNoise {
            w_scale: 1.0,
            noise_sigma: 0.1,
        },
    )
    .unwrap();
    let initial = duality_gap(&dataset, &vec![0.0; m]).unwrap();
    let target = 1e-3 * initial;
    let h_values = [5u32, 25, 125, 625];
    let budgets = [2000u32, 420, 90, 24];
    let (t_lp, t_cp) = (4e-5, 5e-4);

    // Bound constants measured from the data: C from rho_min over the three
    // blocks, delta = s/m_tilde with the exact maximizer (s = 1).
    let probe = build_topology(&TopologySpec::star(k, 1, 1, t_lp, t_cp, 0.0)).unwrap();
    let partition = partition_evenly(m, probe.leaves()).unwrap();
    let blocks: Vec<Vec<usize>> = probe
        .leaves()
        .iter()
        .map(|&l| partition.block(l).to_vec())
        .collect();
    let rho = rho_min(&dataset, &blocks).unwrap();
    let lmg = lambda * m as f64;
    let c = lmg / (rho + lmg);
    let delta = 1.0 / partition.max_block_len() as f64;

    for r in [1.0f64, 1e4] {
        let scenario = DelayScenario::new(c, k, delta, 1.0, t_lp, t_cp, r * t_lp).unwrap();
        let predicted: Vec<f64> = h_values
            .iter()
            .map(|&h| log_gap_objective(&scenario, h))
            .collect();
        let rank = |values: &[f64]| -> (usize, usize) {
            let best = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let worst = values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            (best, worst)
        };
        let (pred_best, pred_worst) = rank(&predicted);

        let mut best_votes = [0usize; 4];
        let mut worst_votes = [0usize; 4];
        for seed in 0..5u64 {
            let times: Vec<f64> = h_values
                .iter()
                .zip(&budgets)
                .map(|(&h, &budget)| {
                    let topo =
                        build_topology(&TopologySpec::star(k, h, budget, t_lp, t_cp, r * t_lp))
                            .unwrap();
                    let res = run_root(&topo, &dataset, &partition, budget, seed).unwrap();
                    res.trace.time_to_gap(target).unwrap_or(f64::INFINITY)
                })
                .collect();
            let (sim_best, sim_worst) = rank(&times);
            best_votes[sim_best] += 1;
            worst_votes[sim_worst] += 1;
        }
        let sim_best = best_votes
            .iter()
            .enumerate()
            .max_by_key(|(_, &v)| v)
            .unwrap()
            .0;
        let sim_worst = worst_votes
            .iter()
            .enumerate()
            .max_by_key(|(_, &v)| v)
            .unwrap()
            .0;
        assert_eq!(
            sim_best, pred_best,
            "r={r}: simulator favors H={} but the objective favors H={}",
            h_values[sim_best], h_values[pred_best]
        );
        assert_eq!(
            sim_worst, pred_worst,
            "r={r}: simulator condemns H={} but the objective condemns H={}",
            h_values[sim_worst], h_values[pred_worst]
        );
    }
}
