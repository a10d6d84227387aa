//! Scenario files: a TOML schema covering the channelization, radio and
//! MAC/PHY parameters (defaults prefilled), the WLAN list, and solver
//! options. Parsing round-trips: `parse(emit(c)) == c`.
//!
//! Schema sketch:
//!
//! ```toml
//! name = "example"
//! n_sys = 4
//!
//! [radio]                 # optional, defaults apply
//! tx_power_dbm = 15.0
//!
//! [phy]                   # optional, defaults apply
//! packet_error_rate = 0.1
//!
//! [solver]                # optional
//! state_cap = 1000000
//!
//! [[wlan]]
//! name = "A"
//! ap = { x = 0.0, y = 0.0 }
//! stas = [{ x = 1.0, y = 0.0 }]
//! channel = [1, 4]
//! primary = 2
//! policy = "AM"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channelization::{Allocation, Channel, ChannelizationScheme};
use crate::ctmn::DEFAULT_GLOBAL_CAP;
use crate::error::Error;
use crate::network::{Network, Wlan};
use crate::phy::{McsTable, PhyParams};
use crate::policy::Policy;
use crate::propagation::{NodePosition, RadioConfig};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WlanConfig {
    pub name: String,
    pub ap: NodePosition,
    pub stas: Vec<NodePosition>,
    /// Allocated channel as `[lo, hi]` in basic-channel indices.
    pub channel: [u8; 2],
    pub primary: u8,
    pub policy: Policy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Abort when the global state space exceeds this many states.
    pub state_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            state_cap: DEFAULT_GLOBAL_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n_sys: u8,
    pub radio: RadioConfig,
    pub phy: PhyParams,
    pub solver: SolverOptions,
    /// Optional path to an MCS table override (see `McsTable::from_file`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_table: Option<String>,
    pub wlan: Vec<WlanConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: String::new(),
            n_sys: 8,
            radio: RadioConfig::default(),
            phy: PhyParams::default(),
            solver: SolverOptions::default(),
            mcs_table: None,
            wlan: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if cfg.name.is_empty() {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Field-naming validation; building the network re-checks everything.
    pub fn validate(&self) -> Result<()> {
        let scheme = ChannelizationScheme::new(self.n_sys)
            .map_err(|e| Error::Config(format!("n_sys: {e}")))?;
        self.radio
            .validate()
            .map_err(|e| Error::Config(format!("radio: {e}")))?;
        self.phy
            .validate()
            .map_err(|e| Error::Config(format!("phy: {e}")))?;
        let mut names = std::collections::HashSet::new();
        for w in &self.wlan {
            let ctx = |e| Error::Config(format!("wlan '{}': {e}", w.name));
            if !names.insert(w.name.as_str()) {
                return Err(Error::Config(format!("wlan '{}': duplicate name", w.name)));
            }
            if w.stas.is_empty() {
                return Err(Error::Config(format!(
                    "wlan '{}': stas must contain at least one entry",
                    w.name
                )));
            }
            let ch = Channel::new(w.channel[0], w.channel[1]).map_err(ctx)?;
            Allocation::new(ch, w.primary, &scheme).map_err(ctx)?;
        }
        Ok(())
    }

    /// Builds the runnable network, resolving the MCS table override
    /// relative to `base_dir` when it is a relative path.
    pub fn to_network(&self, base_dir: Option<&Path>) -> Result<Network> {
        let scheme = ChannelizationScheme::new(self.n_sys)?;
        let mcs = match &self.mcs_table {
            None => McsTable::default(),
            Some(p) => {
                let p = Path::new(p);
                let resolved = match (p.is_relative(), base_dir) {
                    (true, Some(dir)) => dir.join(p),
                    _ => p.to_path_buf(),
                };
                McsTable::from_file(&resolved)?
            }
        };
        let wlans = self
            .wlan
            .iter()
            .map(|w| {
                let ch = Channel::new(w.channel[0], w.channel[1])?;
                Ok(Wlan {
                    name: w.name.clone(),
                    ap: w.ap,
                    stas: w.stas.clone(),
                    allocation: Allocation::new(ch, w.primary, &scheme)?,
                    policy: w.policy,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Network::assemble(wlans, scheme, self.radio, self.phy, mcs)
    }

    /// The same scenario with every WLAN's policy replaced.
    pub fn with_policy(&self, policy: Policy) -> ScenarioConfig {
        let mut c = self.clone();
        for w in &mut c.wlan {
            w.policy = policy;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_sys = 4

[[wlan]]
name = "A"
ap = { x = 0.0, y = 0.0 }
stas = [{ x = 1.0, y = 0.0 }]
channel = [1, 4]
primary = 2
policy = "AM"
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.phy.cw_min, 16);
        assert_eq!(cfg.radio.cca_dbm, -82.0);
        assert_eq!(cfg.radio.tx_power_dbm, 15.0);
        assert_eq!(cfg.solver.state_cap, DEFAULT_GLOBAL_CAP);
        assert_eq!(cfg.wlan.len(), 1);
        assert_eq!(cfg.wlan[0].policy, Policy::Am);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let emitted = cfg.to_toml().unwrap();
        let reparsed = ScenarioConfig::from_toml(&emitted).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn validation_names_the_offender() {
        // Primary outside the allocation.
        let bad = MINIMAL.replace("primary = 2", "primary = 5");
        let err = ScenarioConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("wlan 'A'"), "{err}");
        // Duplicate names.
        let dup = format!("{MINIMAL}\n{}", &MINIMAL[MINIMAL.find("[[wlan]]").unwrap()..]);
        let err = ScenarioConfig::from_toml(&dup).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        // Unknown field.
        let unk = format!("{MINIMAL}\nbogus = 1\n");
        assert!(ScenarioConfig::from_toml(&unk).is_err());
        // Misaligned channel.
        let mis = MINIMAL.replace("channel = [1, 4]", "channel = [2, 3]").replace("primary = 2", "primary = 3");
        assert!(ScenarioConfig::from_toml(&mis).is_err());
    }

    #[test]
    fn builds_a_network() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let net = cfg.to_network(None).unwrap();
        assert_eq!(net.wlans.len(), 1);
        assert_eq!(net.scheme.n_sys(), 4);
    }
}
