//! Network assembly: WLAN descriptions plus the setup-time link budget that
//! fixes each WLAN's MCS (and hence departure rate) per channel width.

use crate::channelization::{candidate_tx_channels, Allocation, Channel, ChannelizationScheme};
use crate::error::Error;
use crate::phy::{width_slot, McsTable, PhyParams};
use crate::policy::Policy;
use crate::propagation::{sinr_db, NodePosition, RadioConfig};
use crate::Result;

/// One WLAN: a downlink AP with one or more STAs, an allocated channel with
/// its primary, and a DCB policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Wlan {
    pub name: String,
    pub ap: NodePosition,
    pub stas: Vec<NodePosition>,
    pub allocation: Allocation,
    pub policy: Policy,
}

/// Per-width link parameters fixed at setup from the isolated link budget of
/// the worst-placed STA. `None` means no MCS closes the budget at that width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthLink {
    pub mcs_index: u8,
    pub bits_per_symbol: f64,
    pub departure_rate: f64,
    pub isolated_sinr_db: f64,
}

/// A WLAN with its precomputed per-width links. `links[slot]` is `Some` only
/// for widths that are candidate transmission widths and close the budget.
#[derive(Clone, Debug)]
pub struct WlanSetup {
    pub wlan: Wlan,
    pub links: [Option<WidthLink>; 4],
    /// Index into `stas` of the STA with the weakest isolated link.
    pub worst_sta: usize,
}

impl WlanSetup {
    pub fn link_for(&self, width: u8) -> Result<&WidthLink> {
        let slot = width_slot(width)?;
        self.links[slot].as_ref().ok_or_else(|| {
            Error::Infeasible(format!(
                "wlan '{}': no MCS closes the link budget at width {} ({} MHz)",
                self.wlan.name,
                width,
                u32::from(width) * 20
            ))
        })
    }
}

/// The full scenario ready for state-space exploration.
#[derive(Clone, Debug)]
pub struct Network {
    pub wlans: Vec<WlanSetup>,
    pub scheme: ChannelizationScheme,
    pub radio: RadioConfig,
    pub phy: PhyParams,
    pub mcs: McsTable,
}

impl Network {
    /// Validates the WLAN set and runs the setup-time MCS selection.
    ///
    /// The MCS per width is chosen from the isolated SINR (no interferers)
    /// of the worst-placed STA; it stays fixed afterwards. Widths that are
    /// not candidates for the WLAN's allocation are left unset. A width
    /// whose budget fails does not abort setup; it errors only if the
    /// policy later selects it.
    pub fn assemble(
        wlans: Vec<Wlan>,
        scheme: ChannelizationScheme,
        radio: RadioConfig,
        phy: PhyParams,
        mcs: McsTable,
    ) -> Result<Network> {
        radio.validate()?;
        phy.validate()?;
        let mut seen = std::collections::HashSet::new();
        for w in &wlans {
            if w.name.is_empty() {
                return Err(Error::Config("wlan name must be nonempty".into()));
            }
            if !seen.insert(w.name.as_str()) {
                return Err(Error::Config(format!("duplicate wlan name '{}'", w.name)));
            }
            if w.stas.is_empty() {
                return Err(Error::Config(format!(
                    "wlan '{}' must have at least one STA",
                    w.name
                )));
            }
            if !scheme.is_valid(&w.allocation.channel()) {
                return Err(Error::Config(format!(
                    "wlan '{}': allocation {} exceeds the {}-channel system",
                    w.name,
                    w.allocation.channel(),
                    scheme.n_sys()
                )));
            }
        }

        let setups = wlans
            .into_iter()
            .map(|w| setup_wlan(w, &scheme, &radio, &phy, &mcs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Network {
            wlans: setups,
            scheme,
            radio,
            phy,
            mcs,
        })
    }

    pub fn wlan_names(&self) -> Vec<&str> {
        self.wlans.iter().map(|s| s.wlan.name.as_str()).collect()
    }
}

fn setup_wlan(
    wlan: Wlan,
    scheme: &ChannelizationScheme,
    radio: &RadioConfig,
    phy: &PhyParams,
    mcs: &McsTable,
) -> Result<WlanSetup> {
    let candidates = candidate_tx_channels(&wlan.allocation, scheme);
    let mut links: [Option<WidthLink>; 4] = [None; 4];
    let mut worst_sta = 0usize;
    let mut worst_sinr = f64::INFINITY;
    for ch in &candidates {
        // The worst STA can differ per width only through the noise floor,
        // which shifts all STAs equally, so rank once at width 1.
        let slot = width_slot(ch.width())?;
        let mut min_sinr = f64::INFINITY;
        let mut min_idx = 0usize;
        for (i, sta) in wlan.stas.iter().enumerate() {
            let s = sinr_db(&wlan.ap, sta, ch, &[], radio, scheme.n_sys())?;
            if s < min_sinr {
                min_sinr = s;
                min_idx = i;
            }
        }
        if ch.width() == 1 {
            worst_sta = min_idx;
            worst_sinr = min_sinr;
        }
        if let Some(entry) = mcs.select(min_sinr, ch.width(), radio.noise_dbm)? {
            links[slot] = Some(WidthLink {
                mcs_index: entry.index,
                bits_per_symbol: entry.bits_per_symbol(ch.width())?,
                departure_rate: phy.departure_rate(entry, ch.width())?,
                isolated_sinr_db: min_sinr,
            });
        }
    }
    let _ = worst_sinr;
    Ok(WlanSetup {
        wlan,
        links,
        worst_sta,
    })
}

/// Convenience: the width-1 primary channel of a WLAN.
pub fn primary_channel(wlan: &Wlan) -> Channel {
    Channel::new(wlan.allocation.primary(), wlan.allocation.primary())
        .expect("validated allocation has a valid primary")
}
