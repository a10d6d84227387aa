//! Stationary distribution of the CTMN and the derived per-WLAN metrics:
//! throughput, airtime, expected bandwidth, and fairness.

use nalgebra::DMatrix;

use crate::ctmn::{FeasibleSpace, RateMatrix};
use crate::error::Error;
use crate::network::Network;
use crate::propagation::{sinr_db, NodePosition};
use crate::Result;

/// States at or below this size are solved densely by LU factorization;
/// larger chains fall back to uniformized power iteration.
pub const DENSE_SOLVE_LIMIT: usize = 5000;

const NORMALIZATION_TOL: f64 = 1e-10;
const RESIDUAL_REL_TOL: f64 = 1e-9;

/// Stationary distribution over the feasible states.
#[derive(Clone, Debug)]
pub struct Stationary {
    pub pi: Vec<f64>,
}

impl Stationary {
    pub fn get(&self, state: usize) -> f64 {
        self.pi[state]
    }
}

/// Per-WLAN results.
#[derive(Clone, Debug)]
pub struct WlanReport {
    pub name: String,
    pub throughput_bps: f64,
    pub airtime: f64,
    pub expected_bandwidth_mhz: f64,
    /// For every state where this WLAN is active: (state index, SINR dB,
    /// capture-effect pass).
    pub sinr_by_state: Vec<(usize, f64, bool)>,
    pub starved: bool,
}

/// Whole-scenario results.
#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub wlans: Vec<WlanReport>,
    pub total_throughput_bps: f64,
    pub jain_index: f64,
    /// Sum of log10 of per-WLAN throughput in Mbps; -inf when any WLAN
    /// starves (see `starved` flags).
    pub proportional_fairness: f64,
    pub feasible_states: usize,
    pub global_states: usize,
}

/// Solves pi * Q = 0 with sum(pi) = 1.
///
/// One balance equation is replaced by the normalization constraint and the
/// system is solved directly for small chains; larger chains use power
/// iteration on the uniformized kernel. Both paths end with the same
/// residual contract; a residual failure is reported as a reducibility
/// diagnostic listing the states unreachable from the all-idle state.
pub fn solve_equilibrium(q: &RateMatrix) -> Result<Stationary> {
    let n = q.n();
    if n == 0 {
        return Err(Error::Domain("empty state space".into()));
    }
    if n == 1 {
        return Ok(Stationary { pi: vec![1.0] });
    }
    let pi = if n <= DENSE_SOLVE_LIMIT {
        solve_dense(q)
    } else {
        Some(solve_iterative(q))
    };
    let pi = match pi {
        Some(pi) if check_solution(q, &pi) => pi,
        _ => {
            // Retry iteratively before diagnosing: LU can fail on
            // near-singular but well-posed chains.
            let pi = solve_iterative(q);
            if check_solution(q, &pi) {
                pi
            } else {
                return Err(diagnose_reducibility(q));
            }
        }
    };
    Ok(Stationary { pi })
}

fn solve_dense(q: &RateMatrix) -> Option<Vec<f64>> {
    let n = q.n();
    let dense = q.to_dense();
    // a = Q^T with the last row replaced by the normalization constraint.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = dense[j][i];
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.lu();
    let x = lu.solve(&b)?;
    let mut pi: Vec<f64> = x.iter().copied().collect();
    // Clamp tiny negative round-off and renormalize.
    for v in &mut pi {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if total <= 0.0 {
        return None;
    }
    for v in &mut pi {
        *v /= total;
    }
    Some(pi)
}

fn solve_iterative(q: &RateMatrix) -> Vec<f64> {
    let n = q.n();
    let lam = q.max_exit_rate() * 1.1 + 1.0;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..200_000 {
        // next = pi * (I + Q/lam)
        next.copy_from_slice(&pi);
        for t in &q.transitions {
            let flow = pi[t.from] * t.rate / lam;
            next[t.from] -= flow;
            next[t.to] += flow;
        }
        let total: f64 = next.iter().sum();
        let mut delta = 0.0f64;
        for (a, b) in next.iter_mut().zip(pi.iter()) {
            *a /= total;
            delta = delta.max((*a - b).abs());
        }
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-14 {
            break;
        }
    }
    pi
}

fn check_solution(q: &RateMatrix, pi: &[f64]) -> bool {
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || pi.iter().any(|&v| v < 0.0) {
        return false;
    }
    residual_inf(q, pi) <= RESIDUAL_REL_TOL * q.max_rate().max(1.0)
}

/// The infinity norm of pi * Q.
pub fn residual_inf(q: &RateMatrix, pi: &[f64]) -> f64 {
    let mut r = vec![0.0f64; q.n()];
    for t in &q.transitions {
        let flow = pi[t.from] * t.rate;
        r[t.from] -= flow;
        r[t.to] += flow;
    }
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn diagnose_reducibility(q: &RateMatrix) -> Error {
    // Forward reachability from the all-idle state.
    let n = q.n();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for t in q.transitions_from(s) {
            if !seen[t.to] {
                seen[t.to] = true;
                stack.push(t.to);
            }
        }
    }
    let unreachable: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    Error::Reducible {
        reason: if unreachable.is_empty() {
            "stationary solve failed the residual check on an irreducible chain".into()
        } else {
            "states unreachable from the all-idle state".into()
        },
        unreachable,
    }
}

/// Per-WLAN throughput in bit/s:
/// Gamma_w = E[L] * sum_s 1{sinr_w(s) > CE} * mu_w(s) * pi_s * (1 - eta),
/// where E[L] is the useful bits of one successful exchange and mu_w(s) uses
/// the width WLAN w transmits with in state s. The SINR in a state is taken
/// at the WLAN's worst-placed STA with every other active WLAN interfering.
pub fn throughput(pi: &Stationary, space: &FeasibleSpace, net: &Network) -> Result<Vec<WlanReport>> {
    let payload_bits = net.phy.payload_bits() as f64;
    let eta = net.phy.packet_error_rate;
    let mut reports = Vec::with_capacity(net.wlans.len());
    for (w, setup) in net.wlans.iter().enumerate() {
        let sta = &setup.wlan.stas[setup.worst_sta];
        let mut gamma = 0.0;
        let mut airtime = 0.0;
        let mut bw = 0.0;
        let mut sinr_by_state = Vec::new();
        for (si, state) in space.states.iter().enumerate() {
            let Some(ch) = state.channel_of(w) else {
                continue;
            };
            let p = pi.get(si);
            airtime += p;
            bw += p * ch.bandwidth_mhz();
            let interferers: Vec<(NodePosition, _)> = (0..net.wlans.len())
                .filter(|&j| j != w)
                .filter_map(|j| state.channel_of(j).map(|c| (net.wlans[j].wlan.ap, c)))
                .collect();
            let sinr = sinr_db(
                &setup.wlan.ap,
                sta,
                &ch,
                &interferers,
                &net.radio,
                net.scheme.n_sys(),
            )?;
            let pass = sinr > net.radio.capture_effect_db;
            sinr_by_state.push((si, sinr, pass));
            if pass {
                let mu = setup.link_for(ch.width())?.departure_rate;
                gamma += payload_bits * mu * p * (1.0 - eta);
            }
        }
        reports.push(WlanReport {
            name: setup.wlan.name.clone(),
            throughput_bps: gamma,
            airtime,
            expected_bandwidth_mhz: bw,
            sinr_by_state,
            starved: gamma <= 0.0,
        });
    }
    Ok(reports)
}

/// Jain index and proportional fairness over per-WLAN throughputs (bit/s).
/// Proportional fairness sums log10 of the throughput in Mbit/s and is -inf
/// when any WLAN has zero throughput.
pub fn fairness(throughputs_bps: &[f64]) -> (f64, f64) {
    let m = throughputs_bps.len() as f64;
    let sum: f64 = throughputs_bps.iter().sum();
    let sq: f64 = throughputs_bps.iter().map(|g| g * g).sum();
    let jain = if sq > 0.0 { sum * sum / (m * sq) } else { 1.0 };
    let prop = throughputs_bps
        .iter()
        .map(|&g| if g > 0.0 { (g / 1e6).log10() } else { f64::NEG_INFINITY })
        .sum();
    (jain, prop)
}

/// Assembles the scenario-level report.
pub fn scenario_report(
    wlans: Vec<WlanReport>,
    feasible_states: usize,
    global_states: usize,
) -> ScenarioReport {
    let gammas: Vec<f64> = wlans.iter().map(|r| r.throughput_bps).collect();
    let (jain, prop) = fairness(&gammas);
    ScenarioReport {
        total_throughput_bps: gammas.iter().sum(),
        jain_index: jain,
        proportional_fairness: prop,
        wlans,
        feasible_states,
        global_states,
    }
}
