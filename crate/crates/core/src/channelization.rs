//! Basic channels, valid bonded channels under the 11ac/ax channelization
//! scheme, and per-WLAN channel allocations.
//!
//! A bonded channel is a contiguous run of 20 MHz basic channels whose width
//! is a power of two and whose position is aligned to its own width, exactly
//! as in the 11ac/ax channelization. Basic channels are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A contiguous, width-aligned run of basic 20 MHz channels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Channel {
    lo: u8,
    hi: u8,
}

impl Channel {
    /// Builds a channel `[lo, hi]`, validating the power-of-two width and the
    /// alignment rule `(lo - 1) % width == 0`.
    pub fn new(lo: u8, hi: u8) -> Result<Self> {
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!(
                "channel [{lo}, {hi}]: requires 1 <= lo <= hi"
            )));
        }
        let width = (hi - lo + 1) as u32;
        if !width.is_power_of_two() {
            return Err(Error::Config(format!(
                "channel [{lo}, {hi}]: width {width} is not a power of two"
            )));
        }
        if u32::from(lo - 1) % width != 0 {
            return Err(Error::Config(format!(
                "channel [{lo}, {hi}]: block is not aligned to its width {width}"
            )));
        }
        Ok(Channel { lo, hi })
    }

    pub fn lo(&self) -> u8 {
        self.lo
    }

    pub fn hi(&self) -> u8 {
        self.hi
    }

    /// Width in basic channels.
    pub fn width(&self) -> u8 {
        self.hi - self.lo + 1
    }

    pub fn bandwidth_mhz(&self) -> f64 {
        f64::from(self.width()) * 20.0
    }

    pub fn contains(&self, basic: u8) -> bool {
        self.lo <= basic && basic <= self.hi
    }

    pub fn is_subset_of(&self, other: &Channel) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// True iff the index ranges intersect.
    pub fn overlaps(&self, other: &Channel) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Iterates the basic-channel indices inside this channel.
    pub fn basics(&self) -> impl Iterator<Item = u8> {
        self.lo..=self.hi
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.lo == self.hi {
            write!(f, "[{}]", self.lo)
        } else {
            write!(f, "[{}-{}]", self.lo, self.hi)
        }
    }
}

/// Free-standing overlap check; symmetric and reflexive.
pub fn channels_overlap(a: &Channel, b: &Channel) -> bool {
    a.overlaps(b)
}

/// The system channelization: every valid bonded channel within `n_sys`
/// basic channels, in canonical order (ascending width, then ascending lo).
///
/// The canonical ordering is fixed so that transition-probability indexing
/// and state discovery order are reproducible across runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelizationScheme {
    n_sys: u8,
    valid: Vec<Channel>,
}

impl ChannelizationScheme {
    pub fn new(n_sys: u8) -> Result<Self> {
        let valid = enumerate_valid_channels(n_sys)?;
        Ok(ChannelizationScheme { n_sys, valid })
    }

    pub fn n_sys(&self) -> u8 {
        self.n_sys
    }

    /// All valid channels in canonical order; always `2 * n_sys - 1` of them.
    pub fn valid_channels(&self) -> &[Channel] {
        &self.valid
    }

    pub fn is_valid(&self, ch: &Channel) -> bool {
        ch.hi <= self.n_sys
    }
}

/// Enumerates every aligned power-of-two block within `[1, n_sys]`,
/// ordered by ascending width then ascending lo.
pub fn enumerate_valid_channels(n_sys: u8) -> Result<Vec<Channel>> {
    if n_sys < 1 || !(n_sys as u32).is_power_of_two() {
        return Err(Error::Config(format!(
            "n_sys = {n_sys}: system channel count must be a power of two >= 1"
        )));
    }
    let mut out = Vec::with_capacity(2 * usize::from(n_sys) - 1);
    let mut width = 1u8;
    while width <= n_sys {
        let mut lo = 1u8;
        while lo + width - 1 <= n_sys {
            out.push(Channel::new(lo, lo + width - 1)?);
            lo += width;
        }
        if width > n_sys / 2 {
            break;
        }
        width *= 2;
    }
    Ok(out)
}

/// A WLAN's allocated channel plus its primary basic channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    channel: Channel,
    primary: u8,
}

impl Allocation {
    pub fn new(channel: Channel, primary: u8, scheme: &ChannelizationScheme) -> Result<Self> {
        if !scheme.is_valid(&channel) {
            return Err(Error::Config(format!(
                "allocation {channel}: outside the {}-channel system band",
                scheme.n_sys()
            )));
        }
        if !channel.contains(primary) {
            return Err(Error::Config(format!(
                "primary {primary} lies outside the allocated channel {channel}"
            )));
        }
        Ok(Allocation { channel, primary })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn primary(&self) -> u8 {
        self.primary
    }
}

/// All valid channels that are subsets of the allocation and contain the
/// primary, ordered by ascending width.
///
/// These are the transmission channels a node may ever pick; the candidates
/// are nested around the primary, so there is exactly one per width.
pub fn candidate_tx_channels(alloc: &Allocation, scheme: &ChannelizationScheme) -> Vec<Channel> {
    scheme
        .valid_channels()
        .iter()
        .filter(|c| c.is_subset_of(&alloc.channel()) && c.contains(alloc.primary()))
        .copied()
        .collect()
}
