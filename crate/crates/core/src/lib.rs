//! Analytical engine for spatially distributed IEEE 802.11ac/ax WLANs using
//! dynamic channel bonding (DCB), modeled as continuous-time Markov networks.
//!
//! The pipeline is:
//!
//! 1. [`scenario`] parses or generates a scenario (WLAN geometry, channel
//!    allocations, radio and PHY parameters).
//! 2. [`network`] resolves per-WLAN link budgets and per-width MCS.
//! 3. [`ctmn`] explores the feasible state space and assembles the sparse
//!    transition-rate matrix (forward transitions at the backoff rate, backward
//!    at the state-dependent departure rate).
//! 4. [`metrics`] solves the stationary distribution and derives per-WLAN
//!    throughput, airtime, bandwidth usage and fairness indices.
//!
//! [`ctmn::gillespie_sample`] provides an independent stochastic-simulation
//! oracle for the stationary solver.

pub mod channelization;
pub mod ctmn;
pub mod deploy;
pub mod error;
pub mod metrics;
pub mod network;
pub mod phy;
pub mod policy;
pub mod propagation;
pub mod runner;
pub mod scenario;

pub use channelization::{Allocation, Channel, ChannelizationScheme};
pub use ctmn::{FeasibleSpace, NetState, RateMatrix};
pub use deploy::DeploymentSpec;
pub use error::Error;
pub use metrics::{ScenarioReport, Stationary, WlanReport};
pub use network::Network;
pub use phy::{McsTable, PhyParams};
pub use policy::Policy;
pub use propagation::{NodePosition, RadioConfig};
pub use runner::{run_scenario, RunOutput, SweepRow};
pub use scenario::ScenarioConfig;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
