//! Command-line front end: evaluate scenarios, run deployment/policy sweeps,
//! generate random deployments, dump CTMNs, and compare sweep results.
//!
//! Exit codes: 0 success, 1 validation error (bad file or parameters),
//! 2 runtime error. Worker count for sweeps comes from `--workers` or the
//! `DCB_CTMN_WORKERS` environment variable (default: all cores).
//!
//! CSV contracts (schema version 1, headers emitted exactly once):
//!
//! `run` writes one row per WLAN followed by one aggregate row:
//! `scenario,row,wlan,policy,throughput_mbps,airtime,bandwidth_mhz,jain_index,proportional_fairness,feasible_states,global_states`
//! where `row` is `wlan` or `aggregate`; fields that do not apply are empty.
//!
//! `sweep` writes one aggregate row per grid cell:
//! `wlans,seed,policy,throughput_mbps,min_wlan_throughput_mbps,jain_index,proportional_fairness,feasible_states,error`
//!
//! `compare` writes one row per paired deployment:
//! `wlans,seed,first_policy,second_policy,first_mbps,second_mbps,verdict`

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcb_ctmn::ctmn::dump as dump_ctmn_text;
use dcb_ctmn::deploy::{generate_deployment, DeploymentSpec};
use dcb_ctmn::runner::{classify, run_scenario, sweep, RunOutput, SweepRow, Verdict};
use dcb_ctmn::{Error, Policy, ScenarioConfig};

#[derive(Parser)]
#[command(name = "dcb-ctmn", version, about = "Analytical DCB WLAN evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArg {
    /// Write output here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario file and emit per-WLAN and aggregate CSV rows.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        out: OutputArg,
        /// Override every WLAN's policy (OP, SCB, AM, PU).
        #[arg(long)]
        policy: Option<Policy>,
        /// Override the global state-space cap.
        #[arg(long)]
        state_cap: Option<usize>,
        /// Also write the CTMN debug dump to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Evaluate a deployment spec over a wlans x seeds x policies grid.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        out: OutputArg,
        /// WLAN counts, comma separated (default: the spec's count).
        #[arg(long, value_delimiter = ',')]
        wlans: Vec<usize>,
        /// Seeds, comma separated (default: the spec's seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Policies, comma separated (default: OP,SCB,AM,PU).
        #[arg(long, value_delimiter = ',')]
        policies: Vec<Policy>,
        /// Worker threads (overrides DCB_CTMN_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Generate a random deployment from a spec and emit the scenario file.
    Generate {
        spec: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Print the feasible states and transitions of a scenario's CTMN.
    DumpCtmn {
        scenario: PathBuf,
        #[command(flatten)]
        out: OutputArg,
        #[arg(long)]
        policy: Option<Policy>,
    },
    /// Pair two policies from a sweep CSV by (wlans, seed) and classify each
    /// deployment as first-best, second-best, or a draw within the margin.
    Compare {
        csv: PathBuf,
        #[arg(long)]
        first: Policy,
        #[arg(long)]
        second: Policy,
        /// Draw margin on total throughput, Mbps.
        #[arg(long, default_value_t = 0.5)]
        margin_mbps: f64,
        #[command(flatten)]
        out: OutputArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Config(_) | Error::Parse(_) | Error::Domain(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            scenario,
            out,
            policy,
            state_cap,
            dump,
        } => {
            let mut cfg = load_scenario(&scenario, policy)?;
            if let Some(cap) = state_cap {
                cfg.solver.state_cap = cap;
            }
            let result = run_scenario(&cfg, scenario.parent())?;
            if let Some(path) = dump {
                let net = cfg.to_network(scenario.parent())?;
                let text = dump_ctmn_text(&result.space, &result.q, &net.wlan_names());
                std::fs::write(path, text)?;
            }
            write_out(&out, &run_csv(&result)?)
        }
        Command::Sweep {
            spec,
            out,
            wlans,
            seeds,
            policies,
            workers,
        } => {
            configure_workers(workers)?;
            let template = DeploymentSpec::from_path(&spec)?;
            let wlans = if wlans.is_empty() { vec![template.wlans] } else { wlans };
            let seeds = if seeds.is_empty() { vec![template.seed] } else { seeds };
            let policies = if policies.is_empty() {
                vec![Policy::Op, Policy::Scb, Policy::Am, Policy::Pu]
            } else {
                policies
            };
            let rows = sweep(&template, &wlans, &seeds, &policies);
            write_out(&out, &sweep_csv(&rows)?)
        }
        Command::Generate { spec, out } => {
            let spec = DeploymentSpec::from_path(&spec)?;
            let cfg = generate_deployment(&spec)?;
            write_out(&out, &cfg.to_toml()?)
        }
        Command::DumpCtmn {
            scenario,
            out,
            policy,
        } => {
            let cfg = load_scenario(&scenario, policy)?;
            let result = run_scenario(&cfg, scenario.parent())?;
            let net = cfg.to_network(scenario.parent())?;
            write_out(&out, &dump_ctmn_text(&result.space, &result.q, &net.wlan_names()))
        }
        Command::Compare {
            csv,
            first,
            second,
            margin_mbps,
            out,
        } => {
            let text = compare_csv(&csv, first, second, margin_mbps)?;
            write_out(&out, &text)
        }
    }
}

fn load_scenario(path: &Path, policy: Option<Policy>) -> Result<ScenarioConfig, Error> {
    let cfg = ScenarioConfig::from_path(path)?;
    Ok(match policy {
        Some(p) => cfg.with_policy(p),
        None => cfg,
    })
}

fn configure_workers(flag: Option<usize>) -> Result<(), Error> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("DCB_CTMN_WORKERS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::Config(format!("DCB_CTMN_WORKERS: '{v}' is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("worker count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

fn write_out(out: &OutputArg, text: &str) -> Result<(), Error> {
    match &out.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn run_csv(result: &RunOutput) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "row",
        "wlan",
        "policy",
        "throughput_mbps",
        "airtime",
        "bandwidth_mhz",
        "jain_index",
        "proportional_fairness",
        "feasible_states",
        "global_states",
    ])
    .map_err(csv_err)?;
    let name = &result.config.name;
    for (wcfg, rep) in result.config.wlan.iter().zip(&result.report.wlans) {
        w.write_record([
            name.as_str(),
            "wlan",
            &rep.name,
            &wcfg.policy.to_string(),
            &fmt(rep.throughput_bps / 1e6),
            &fmt(rep.airtime),
            &fmt(rep.expected_bandwidth_mhz),
            "",
            "",
            "",
            "",
        ])
        .map_err(csv_err)?;
    }
    let r = &result.report;
    w.write_record([
        name.as_str(),
        "aggregate",
        "",
        "",
        &fmt(r.total_throughput_bps / 1e6),
        "",
        "",
        &fmt(r.jain_index),
        &fmt(r.proportional_fairness),
        &r.feasible_states.to_string(),
        &r.global_states.to_string(),
    ])
    .map_err(csv_err)?;
    finish(w)
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "wlans",
        "seed",
        "policy",
        "throughput_mbps",
        "min_wlan_throughput_mbps",
        "jain_index",
        "proportional_fairness",
        "feasible_states",
        "error",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            &r.wlans.to_string(),
            &r.seed.to_string(),
            &r.policy.to_string(),
            &fmt(r.throughput_mbps),
            &fmt(r.min_wlan_throughput_mbps),
            &fmt(r.jain_index),
            &fmt(r.proportional_fairness),
            &r.feasible_states.to_string(),
            r.error.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn compare_csv(path: &Path, first: Policy, second: Policy, margin: f64) -> Result<String, Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err_parse)?;
    let mut firsts = std::collections::BTreeMap::new();
    let mut seconds = std::collections::BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err_parse)?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        if !get(8).is_empty() {
            continue; // errored sweep cells carry no throughput
        }
        let key: (u64, u64) = (
            get(0).parse().map_err(|_| bad_row(&rec))?,
            get(1).parse().map_err(|_| bad_row(&rec))?,
        );
        let mbps: f64 = get(3).parse().map_err(|_| bad_row(&rec))?;
        if get(2) == first.to_string() {
            firsts.insert(key, mbps);
        } else if get(2) == second.to_string() {
            seconds.insert(key, mbps);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "wlans",
        "seed",
        "first_policy",
        "second_policy",
        "first_mbps",
        "second_mbps",
        "verdict",
    ])
    .map_err(csv_err)?;
    let (mut n_first, mut n_second, mut n_draw) = (0u32, 0u32, 0u32);
    for (key, a) in &firsts {
        let Some(b) = seconds.get(key) else { continue };
        let verdict = match classify(*a, *b, margin) {
            Verdict::FirstBest => {
                n_first += 1;
                "first"
            }
            Verdict::SecondBest => {
                n_second += 1;
                "second"
            }
            Verdict::Draw => {
                n_draw += 1;
                "draw"
            }
        };
        w.write_record([
            &key.0.to_string(),
            &key.1.to_string(),
            &first.to_string(),
            &second.to_string(),
            &fmt(*a),
            &fmt(*b),
            verdict,
        ])
        .map_err(csv_err)?;
    }
    eprintln!(
        "compare: {first} best in {n_first}, {second} best in {n_second}, draws {n_draw} (margin {margin} Mbps)"
    );
    finish(w)
}

fn bad_row(rec: &csv::StringRecord) -> Error {
    Error::Parse(format!("sweep csv: malformed row {rec:?}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(e.to_string())
}

fn csv_err_parse(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, Error> {
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}
