//! End-to-end evaluation: scenario -> network -> CTMN -> stationary
//! distribution -> report, plus the deployment/policy sweep grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctmn::{explore, generate_global_space, FeasibleSpace, RateMatrix};
use crate::deploy::{generate_deployment, DeploymentSpec};
use crate::metrics::{scenario_report, solve_equilibrium, throughput, ScenarioReport, Stationary};
use crate::policy::Policy;
use crate::scenario::ScenarioConfig;
use crate::Result;

/// Everything produced by one scenario evaluation.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub space: FeasibleSpace,
    pub q: RateMatrix,
    pub stationary: Stationary,
    pub report: ScenarioReport,
}

/// Full pipeline for one scenario. `base_dir` resolves relative resource
/// paths (the MCS table override).
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: Option<&std::path::Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let net = cfg.to_network(base_dir)?;
    let global = generate_global_space(&net, cfg.solver.state_cap)?;
    let (space, q) = explore(&net, cfg.solver.state_cap)?;
    let stationary = solve_equilibrium(&q)?;
    let wlans = throughput(&stationary, &space, &net)?;
    let report = scenario_report(wlans, space.len(), global.len());
    Ok(RunOutput {
        config: cfg.clone(),
        space,
        q,
        stationary,
        report,
    })
}

/// One aggregate sweep result. `error` is set (and the metric fields zeroed)
/// when the evaluation failed; failures never abort the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub wlans: usize,
    pub seed: u64,
    pub policy: Policy,
    pub throughput_mbps: f64,
    pub min_wlan_throughput_mbps: f64,
    pub jain_index: f64,
    pub proportional_fairness: f64,
    pub feasible_states: usize,
    pub error: Option<String>,
}

/// Evaluates the grid wlan_counts x seeds x policies over deployments drawn
/// from `template` (seed and WLAN count overridden per cell; the policy is
/// applied to every WLAN). Cells evaluate in parallel; the returned rows are
/// sorted by (wlans, seed, policy) regardless of execution order.
pub fn sweep(
    template: &DeploymentSpec,
    wlan_counts: &[usize],
    seeds: &[u64],
    policies: &[Policy],
) -> Vec<SweepRow> {
    let mut grid = Vec::new();
    for &m in wlan_counts {
        for &seed in seeds {
            for &policy in policies {
                grid.push((m, seed, policy));
            }
        }
    }
    let mut rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(m, seed, policy)| evaluate_cell(template, m, seed, policy))
        .collect();
    rows.sort_by(|a, b| {
        (a.wlans, a.seed, a.policy.to_string()).cmp(&(b.wlans, b.seed, b.policy.to_string()))
    });
    rows
}

fn evaluate_cell(template: &DeploymentSpec, m: usize, seed: u64, policy: Policy) -> SweepRow {
    let mut row = SweepRow {
        wlans: m,
        seed,
        policy,
        throughput_mbps: 0.0,
        min_wlan_throughput_mbps: 0.0,
        jain_index: 0.0,
        proportional_fairness: 0.0,
        feasible_states: 0,
        error: None,
    };
    let spec = DeploymentSpec {
        wlans: m,
        seed,
        ..template.clone()
    };
    let result = generate_deployment(&spec)
        .map(|cfg| cfg.with_policy(policy))
        .and_then(|cfg| run_scenario(&cfg, None));
    match result {
        Ok(out) => {
            row.throughput_mbps = out.report.total_throughput_bps / 1e6;
            row.min_wlan_throughput_mbps = out
                .report
                .wlans
                .iter()
                .map(|w| w.throughput_bps / 1e6)
                .fold(f64::INFINITY, f64::min);
            row.jain_index = out.report.jain_index;
            row.proportional_fairness = out.report.proportional_fairness;
            row.feasible_states = out.report.feasible_states;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Outcome of comparing two policies on the same deployment with a draw
/// margin on total throughput.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    FirstBest,
    SecondBest,
    Draw,
}

/// Classifies a paired comparison: a draw unless the totals differ by more
/// than `margin_mbps`.
pub fn classify(first_mbps: f64, second_mbps: f64, margin_mbps: f64) -> Verdict {
    let d = first_mbps - second_mbps;
    if d > margin_mbps {
        Verdict::FirstBest
    } else if d < -margin_mbps {
        Verdict::SecondBest
    } else {
        Verdict::Draw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_template() -> DeploymentSpec {
        DeploymentSpec {
            map_width_m: 40.0,
            map_height_m: 40.0,
            n_sys: 2,
            widths: vec![1, 2],
            ..DeploymentSpec::default()
        }
    }

    #[test]
    fn sweep_grid_size_and_order() {
        let rows = sweep(
            &small_template(),
            &[1, 2],
            &[10, 11, 12],
            &[Policy::Am, Policy::Pu],
        );
        assert_eq!(rows.len(), 12);
        let tags: Vec<(usize, u64, Policy)> =
            rows.iter().map(|r| (r.wlans, r.seed, r.policy)).collect();
        let mut sorted = tags.clone();
        sorted.sort_by_key(|t| (t.0, t.1, t.2.to_string()));
        assert_eq!(tags, sorted);
        assert!(rows.iter().all(|r| r.error.is_none()));
        assert!(rows.iter().all(|r| r.throughput_mbps > 0.0));
    }

    #[test]
    fn sweep_is_deterministic() {
        let rows1 = sweep(&small_template(), &[2], &[3, 4], &[Policy::Op, Policy::Am]);
        let rows2 = sweep(&small_template(), &[2], &[3, 4], &[Policy::Op, Policy::Am]);
        assert_eq!(rows1, rows2);
    }

    #[test]
    fn sweep_records_failures_as_rows() {
        // Impossible density: every cell errors but the sweep completes.
        let template = DeploymentSpec {
            map_width_m: 5.0,
            map_height_m: 5.0,
            min_ap_distance_m: 10.0,
            ..small_template()
        };
        let rows = sweep(&template, &[3], &[1], &[Policy::Am]);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_some());
        assert_eq!(rows[0].throughput_mbps, 0.0);
    }

    #[test]
    fn classification_margin() {
        assert_eq!(classify(10.0, 9.0, 0.5), Verdict::FirstBest);
        assert_eq!(classify(9.0, 10.0, 0.5), Verdict::SecondBest);
        assert_eq!(classify(10.0, 9.8, 0.5), Verdict::Draw);
    }
}
