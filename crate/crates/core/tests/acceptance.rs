//! Acceptance gate. Each criterion prints one PASS/FAIL line and asserts.
//!
//! Known documented discrepancies are kept as failing assertions on purpose
//! (see the fixture comments): the engine's deterministic results are
//! asserted in the passing tests, and the external reference values it
//! cannot reproduce are asserted in the `reference_*` tests so the mismatch
//! stays visible instead of being papered over.

use std::path::{Path, PathBuf};

use dcb_ctmn::ctmn::{alpha_from_empty, explore, gillespie_sample};
use dcb_ctmn::deploy::{generate_deployment, DeploymentSpec, PolicyAssignment};
use dcb_ctmn::metrics::solve_equilibrium;
use dcb_ctmn::propagation::sensed_free_set;
use dcb_ctmn::runner::run_scenario;
use dcb_ctmn::{Channel, Policy, ScenarioConfig};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn fixture(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(&scenario_dir().join(name)).expect("fixture parses")
}

fn feasible_count(cfg: &ScenarioConfig) -> usize {
    run_scenario(cfg, None).unwrap().report.feasible_states
}

fn check(criterion: &str, ok: bool, detail: &str) {
    println!(
        "acceptance: {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{criterion}: {detail}");
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

#[test]
fn criterion1_state_space_counts() {
    let mut ok = true;
    let mut notes = Vec::new();
    for (fix, expected) in [
        ("scenario_i.toml", [("OP", 4), ("SCB", 3), ("AM", 5), ("PU", 10)]),
        ("scenario_ii.toml", [("OP", 4), ("SCB", 3), ("AM", 3), ("PU", 6)]),
    ] {
        let cfg = fixture(fix);
        for (pol, want) in expected {
            let got = feasible_count(&cfg.with_policy(pol.parse().unwrap()));
            if got != want {
                ok = false;
                notes.push(format!("{fix} {pol}: got {got}, want {want}"));
            }
        }
    }
    // Policy combinations whose engine counts match the reference values.
    for (combo, want) in [(["AM", "AM", "AM"], 5), (["PU", "PU", "PU"], 14)] {
        let got = feasible_count(&iv_with(combo));
        if got != want {
            ok = false;
            notes.push(format!("iv {combo:?}: got {got}, want {want}"));
        }
    }
    // PU-AM-PU has two conflicting reference counts (25 and 14); record
    // which one the deterministic engine result matches.
    let pu_am_pu = feasible_count(&iv_with(["PU", "AM", "PU"]));
    notes.push(format!(
        "iv PU-AM-PU: engine {pu_am_pu}, matches reference 14, not 25"
    ));
    ok &= pu_am_pu == 14;
    check(
        "criterion 1 (state-space counts)",
        ok,
        &if notes.is_empty() { "all counts exact".into() } else { notes.join("; ") },
    );
}

#[test]
fn criterion1_scenario_iv_reference_counts() {
    // Documented discrepancy: these three reference counts are mutually
    // inconsistent with the reference throughputs for the same scenario,
    // which this engine reproduces to five significant figures from its
    // 14-state chains. Kept failing so the mismatch stays visible.
    let mut ok = true;
    let mut notes = Vec::new();
    for (combo, reference) in [
        (["AM", "PU", "AM"], 10),
        (["AM", "AM", "PU"], 9),
        (["AM", "PU", "PU"], 12),
    ] {
        let got = feasible_count(&iv_with(combo));
        if got != reference {
            ok = false;
            notes.push(format!("iv {combo:?}: engine {got}, reference {reference}"));
        }
    }
    check(
        "criterion 1 (scenario iv reference counts; known discrepancy)",
        ok,
        &notes.join("; "),
    );
}

fn iv_with(policies: [&str; 3]) -> ScenarioConfig {
    let mut cfg = fixture("scenario_iv.toml");
    for (w, p) in cfg.wlan.iter_mut().zip(policies) {
        w.policy = p.parse().unwrap();
    }
    cfg
}

#[test]
fn criterion2_alpha_vectors() {
    // Scenario II, transitions out of the all-idle state. The candidate
    // order is width ascending: ([p], [1-2]).
    let cfg = fixture("scenario_ii.toml");
    let mut ok = true;
    let mut notes = Vec::new();
    let expect: [(&str, Vec<(u8, u8, u32, u32)>); 4] = [
        ("OP", vec![(1, 1, 1, 1)]),
        ("SCB", vec![(1, 2, 1, 1)]),
        ("AM", vec![(1, 2, 1, 1)]),
        ("PU", vec![(1, 1, 1, 2), (1, 2, 1, 2)]),
    ];
    for (pol, want_a) in expect {
        let net = cfg.with_policy(pol.parse().unwrap()).to_network(None).unwrap();
        let (_, q) = explore(&net, 1_000_000).unwrap();
        for wlan in 0..2 {
            let p = net.wlans[wlan].wlan.allocation.primary();
            let want: Vec<(Channel, (u32, u32))> = want_a
                .iter()
                .map(|&(lo, hi, n, d)| {
                    // Width-1 entries sit on the WLAN's own primary.
                    let c = if lo == hi {
                        Channel::new(p, p).unwrap()
                    } else {
                        Channel::new(lo, hi).unwrap()
                    };
                    (c, (n, d))
                })
                .collect();
            let got: Vec<(Channel, (u32, u32))> = alpha_from_empty(&q, wlan)
                .into_iter()
                .map(|(c, r)| (c, (r.num, r.den)))
                .collect();
            if got != want {
                ok = false;
                notes.push(format!("{pol} wlan {wlan}: got {got:?}, want {want:?}"));
            }
        }
    }
    check(
        "criterion 2 (empty-state alpha vectors, exact rationals)",
        ok,
        &if notes.is_empty() { "OP 1/0, SCB+AM 0/1, PU 1/2+1/2".into() } else { notes.join("; ") },
    );
}

#[test]
fn criterion3_scenario_iii_t3_occupancy() {
    let cfg = fixture("scenario_iii_t3.toml");
    let out = run_scenario(&cfg, None).unwrap();
    // Occupancy of B (declaration index 1) over all states where B is active.
    let b_active: f64 = out
        .space
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.channel_of(1).is_some())
        .map(|(i, _)| out.stationary.get(i))
        .sum();
    let ok = (b_active - 0.5015).abs() <= 0.005;
    check(
        "criterion 3 (scenario iii-t3 B occupancy 0.5015 +/- 0.005)",
        ok,
        &format!("B occupancy = {b_active:.4}"),
    );
}

#[test]
fn criterion3_scenario_ii_reference_equilibrium() {
    // Documented discrepancy: the reference dominant-state probabilities
    // (0.9802 OP, 0.9702 PU) are not reproducible from the same parameters
    // that reproduce this scenario's reference throughputs; the engine gets
    // 0.9809 and 0.9709. Kept failing at the stated +/- 0.0005 tolerance.
    let cfg = fixture("scenario_ii.toml");
    let mut ok = true;
    let mut notes = Vec::new();
    for (pol, reference) in [("OP", 0.9802f64), ("PU", 0.9702f64)] {
        let out = run_scenario(&cfg.with_policy(pol.parse().unwrap()), None).unwrap();
        let max_pi = out.stationary.pi.iter().cloned().fold(0.0, f64::max);
        if (max_pi - reference).abs() > 0.0005 {
            ok = false;
        }
        notes.push(format!("{pol}: engine {max_pi:.5}, reference {reference}"));
    }
    check(
        "criterion 3 (scenario ii dominant pi; known discrepancy)",
        ok,
        &notes.join("; "),
    );
}

#[test]
fn criterion4_throughput_fixtures() {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut check_gamma = |label: &str, cfg: &ScenarioConfig, want_mbps: &[f64]| {
        let out = run_scenario(cfg, None).unwrap();
        for (w, &want) in out.report.wlans.iter().zip(want_mbps) {
            let got = w.throughput_bps / 1e6;
            if !within(got, want, 0.05) {
                ok = false;
                notes.push(format!("{label} {}: got {got:.2}, want {want:.2}", w.name));
            }
        }
        out
    };
    let i = fixture("scenario_i.toml");
    check_gamma("I OP", &i.with_policy(Policy::Op), &[109.36, 109.36]);
    check_gamma("I SCB", &i.with_policy(Policy::Scb), &[132.75, 132.75]);
    check_gamma("I AM", &i.with_policy(Policy::Am), &[206.68, 199.67]);
    check_gamma("I PU", &i.with_policy(Policy::Pu), &[142.70, 142.00]);
    let ii = fixture("scenario_ii.toml");
    check_gamma("II OP", &ii.with_policy(Policy::Op), &[109.36, 109.36]);
    check_gamma("II SCB", &ii.with_policy(Policy::Scb), &[102.65, 102.65]);
    check_gamma("II AM", &ii.with_policy(Policy::Am), &[102.65, 102.65]);
    check_gamma("II PU", &ii.with_policy(Policy::Pu), &[109.30, 109.30]);
    let out = check_gamma(
        "IV AM-AM-AM",
        &iv_with(["AM", "AM", "AM"]),
        &[199.96, 3.58, 199.96],
    );
    if !within(out.report.total_throughput_bps / 1e6, 403.49, 0.05) {
        ok = false;
        notes.push(format!(
            "IV total: got {:.2}, want 403.49",
            out.report.total_throughput_bps / 1e6
        ));
    }
    if (out.report.jain_index - 0.67853).abs() > 0.01 {
        ok = false;
        notes.push(format!("IV jain: got {:.5}, want 0.67853", out.report.jain_index));
    }
    let out = run_scenario(&iv_with(["AM", "PU", "AM"]), None).unwrap();
    if !within(out.report.proportional_fairness, 6.16, 0.05) {
        ok = false;
        notes.push(format!(
            "IV AM-PU-AM prop fairness: got {:.3}, want ~6.16",
            out.report.proportional_fairness
        ));
    }
    check(
        "criterion 4 (fixture throughputs +/-5%, jain +/-0.01)",
        ok,
        &if notes.is_empty() { "all targets met".into() } else { notes.join("; ") },
    );
}

#[test]
fn criterion5_oracle_equivalence() {
    // Gillespie occupancy vs solver, 100 s horizon. The 3-sigma band uses a
    // binomial-style deviation with the regeneration-cycle count estimated
    // from the horizon and the slowest departure rate, floored at 1000.
    let start = std::time::Instant::now();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut cases: Vec<ScenarioConfig> = Vec::new();
    for f in [
        "scenario_i.toml",
        "scenario_ii.toml",
        "scenario_iii_t1.toml",
        "scenario_iii_t2.toml",
        "scenario_iii_t3.toml",
        "scenario_iii_t4.toml",
        "scenario_iv.toml",
    ] {
        cases.push(fixture(f));
    }
    for seed in 0..20u64 {
        let spec = DeploymentSpec {
            map_width_m: 40.0,
            map_height_m: 40.0,
            wlans: 3,
            n_sys: 4,
            widths: vec![1, 2, 4],
            policy: PolicyAssignment::Named("random".into()),
            seed,
            ..DeploymentSpec::default()
        };
        cases.push(generate_deployment(&spec).unwrap());
    }
    for cfg in &cases {
        let out = run_scenario(cfg, None).unwrap();
        let occ = gillespie_sample(&out.q, 100.0, 0xACCE55 + cfg.name.len() as u64).unwrap();
        let min_mu = out
            .q
            .transitions
            .iter()
            .filter(|t| matches!(t.kind, dcb_ctmn::ctmn::TransitionKind::Backward))
            .map(|t| t.rate)
            .fold(f64::INFINITY, f64::min);
        let cycles = (100.0 * min_mu).max(1000.0);
        for (i, (&p, &o)) in out.stationary.pi.iter().zip(occ.iter()).enumerate() {
            let sigma = (p * (1.0 - p) / cycles).sqrt();
            let dev = (o - p).abs();
            worst = worst.max(dev - 3.0 * sigma);
            if dev > 3.0 * sigma + 1e-6 {
                ok = false;
                println!(
                    "  oracle mismatch in '{}', state {i}: pi = {p:.5}, occupancy = {o:.5}",
                    cfg.name
                );
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 30.0;
    check(
        "criterion 5 (gillespie oracle within 3 sigma, < 30 s)",
        ok,
        &format!("{} scenarios in {:.1} s, worst slack {worst:.2e}", cases.len(), elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion6_property_suites() {
    // The per-module property suites (policy nesting, pi residual and
    // normalization, Q row sums, deployment constraints over 100 seeds) run
    // in the unit tests; this test covers the composite properties.
    let mut ok = true;
    let mut notes = Vec::new();

    // Single-channel invariance: width-1 scenarios give identical reports
    // across all four policies, 10 seeds.
    for seed in 0..10u64 {
        let spec = DeploymentSpec {
            map_width_m: 60.0,
            map_height_m: 60.0,
            wlans: 3,
            n_sys: 1,
            widths: vec![1],
            seed,
            ..DeploymentSpec::default()
        };
        let cfg = generate_deployment(&spec).unwrap();
        let reference: Vec<f64> = run_scenario(&cfg.with_policy(Policy::Op), None)
            .unwrap()
            .report
            .wlans
            .iter()
            .map(|w| w.throughput_bps)
            .collect();
        for pol in [Policy::Scb, Policy::Am, Policy::Pu] {
            let got: Vec<f64> = run_scenario(&cfg.with_policy(pol), None)
                .unwrap()
                .report
                .wlans
                .iter()
                .map(|w| w.throughput_bps)
                .collect();
            if got != reference {
                ok = false;
                notes.push(format!("seed {seed}: {pol} != OP"));
            }
        }
    }

    // Scenario II: SCB and AM build identical rate matrices.
    let ii = fixture("scenario_ii.toml");
    let dense = |p: Policy| {
        let net = ii.with_policy(p).to_network(None).unwrap();
        explore(&net, 1_000_000).unwrap().1.to_dense()
    };
    if dense(Policy::Scb) != dense(Policy::Am) {
        ok = false;
        notes.push("scenario ii: SCB and AM matrices differ".into());
    }

    // Scenario IV all-AM: the mirrored outer WLANs get equal throughput.
    let out = run_scenario(&iv_with(["AM", "AM", "AM"]), None).unwrap();
    let (a, c) = (
        out.report.wlans[0].throughput_bps,
        out.report.wlans[2].throughput_bps,
    );
    if (a - c).abs() > 1e-6 * a.abs() {
        ok = false;
        notes.push(format!("scenario iv symmetry: A = {a}, C = {c}"));
    }

    // Sensed-free-set antitonicity: adding an interferer never frees a
    // channel that was busy.
    let radio = dcb_ctmn::RadioConfig::default();
    let alloc = Channel::new(1, 4).unwrap();
    let me = dcb_ctmn::NodePosition::new(0.0, 0.0);
    for d in [5.0, 12.0, 25.0, 60.0] {
        let one = vec![(dcb_ctmn::NodePosition::new(d, 0.0), Channel::new(1, 2).unwrap())];
        let mut two = one.clone();
        two.push((dcb_ctmn::NodePosition::new(0.0, d), Channel::new(3, 4).unwrap()));
        let f1 = sensed_free_set(&me, &alloc, &one, &radio, 4).unwrap();
        let f2 = sensed_free_set(&me, &alloc, &two, &radio, 4).unwrap();
        if !f2.iter().all(|b| f1.contains(b)) {
            ok = false;
            notes.push(format!("antitonicity broken at d = {d}"));
        }
    }

    check(
        "criterion 6 (composite property suites)",
        ok,
        &if notes.is_empty() { "all properties hold".into() } else { notes.join("; ") },
    );
}
