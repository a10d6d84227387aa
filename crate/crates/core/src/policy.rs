//! DCB policy selection: given an allocation, the candidate transmission
//! channels nested around the primary, and the set of currently idle basic
//! channels, decide which channel(s) a transmitter picks and with what
//! probability.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channelization::{candidate_tx_channels, Allocation, Channel, ChannelizationScheme};
use crate::error::Error;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Policy {
    /// Only-primary: always the 20 MHz primary channel.
    Op,
    /// Static channel bonding: the full allocated channel or nothing.
    Scb,
    /// Always-max: the widest candidate whose basic channels are all idle.
    Am,
    /// Probabilistic uniform: one of the fully idle candidates, uniformly.
    Pu,
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OP" => Ok(Policy::Op),
            "SCB" => Ok(Policy::Scb),
            "AM" => Ok(Policy::Am),
            "PU" => Ok(Policy::Pu),
            _ => Err(Error::Config(format!(
                "unknown policy '{s}' (expected OP, SCB, AM or PU)"
            ))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Policy::Op => "OP",
            Policy::Scb => "SCB",
            Policy::Am => "AM",
            Policy::Pu => "PU",
        };
        f.write_str(s)
    }
}

/// Exact selection probability, kept rational so PU weights like 1/3 never
/// round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Channels the policy would start transmitting on given the idle basic
/// channels (`free[b-1]` nonzero means basic channel b is idle), with exact
/// probabilities summing to 1. Empty when the policy declines to transmit;
/// in particular always empty when the primary is busy.
pub fn select(
    policy: Policy,
    alloc: &Allocation,
    scheme: &ChannelizationScheme,
    free: &[u8],
) -> Result<Vec<(Channel, Ratio)>> {
    if free.len() != usize::from(scheme.n_sys()) {
        return Err(Error::Domain(format!(
            "free set has {} entries for {} system channels",
            free.len(),
            scheme.n_sys()
        )));
    }
    let is_free = |ch: &Channel| ch.basics().all(|b| free[(b - 1) as usize] != 0);
    let primary_ch = Channel::new(alloc.primary(), alloc.primary())?;
    if !is_free(&primary_ch) {
        return Ok(Vec::new());
    }
    let candidates = candidate_tx_channels(alloc, scheme);
    let idle: Vec<Channel> = candidates.into_iter().filter(|c| is_free(c)).collect();
    // Primary is idle, so the width-1 candidate is always present.
    debug_assert!(!idle.is_empty());
    Ok(match policy {
        Policy::Op => vec![(primary_ch, Ratio::ONE)],
        Policy::Scb => {
            if idle.last() == Some(&alloc.channel()) {
                vec![(alloc.channel(), Ratio::ONE)]
            } else {
                Vec::new()
            }
        }
        Policy::Am => vec![(*idle.last().expect("nonempty"), Ratio::ONE)],
        Policy::Pu => {
            let den = idle.len() as u32;
            idle.into_iter().map(|c| (c, Ratio { num: 1, den })).collect()
        }
    })
}
