//! Path loss, per-basic-channel transmit/receive power including
//! adjacent-channel leakage, CCA sensing, and SINR at receivers.
//!
//! The path-loss model is a dual-slope log-distance model for 5 GHz indoor
//! environments. Transmit power is split evenly across bonded basic channels
//! (a loss of `bonding_loss_db_per_doubling` per doubling), and each basic
//! channel immediately adjacent to the transmission channel receives half of
//! the in-band power per Hertz (-3 dB).
//!
//! CCA sensing sums co-channel (in-band) interference linearly across all
//! active transmitters; adjacent-channel leakage contributes to receiver-side
//! interference (SINR) but not to the carrier-sense decision. Including the
//! -3 dB leakage in the sensing sum would make single-channel and full-channel
//! transmissions indistinguishable to a neighbor's CCA, which contradicts the
//! feasible-state structure this model has to reproduce.

use serde::{Deserialize, Serialize};

use crate::channelization::Channel;
use crate::error::Error;
use crate::Result;

const NEAR_INTERCEPT_DB: f64 = 53.2;
const NEAR_SLOPE_DB: f64 = 25.8;
const FAR_INTERCEPT_DB: f64 = 56.4;
const FAR_SLOPE_DB: f64 = 29.1;

/// Leakage into each basic channel adjacent to the transmission channel,
/// relative to the in-band per-channel power.
const ADJACENT_LEAK_DB: f64 = 3.0;

/// A node location in meters. `z` defaults to zero for planar deployments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

impl NodePosition {
    pub fn new(x: f64, y: f64) -> Self {
        NodePosition { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &NodePosition) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Radio parameters shared by every node in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub cca_dbm: f64,
    pub capture_effect_db: f64,
    pub noise_dbm: f64,
    pub bonding_loss_db_per_doubling: f64,
    pub break_distance_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_power_dbm: 15.0,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            cca_dbm: -82.0,
            capture_effect_db: 20.0,
            noise_dbm: -95.0,
            bonding_loss_db_per_doubling: 3.0,
            break_distance_m: 9.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cca_dbm <= self.noise_dbm {
            return Err(Error::Config(format!(
                "radio.cca_dbm ({}) must exceed radio.noise_dbm ({})",
                self.cca_dbm, self.noise_dbm
            )));
        }
        if self.capture_effect_db <= 0.0 {
            return Err(Error::Config(
                "radio.capture_effect_db must be positive".into(),
            ));
        }
        if self.bonding_loss_db_per_doubling < 0.0 {
            return Err(Error::Config(
                "radio.bonding_loss_db_per_doubling must be nonnegative".into(),
            ));
        }
        if self.break_distance_m <= 0.0 {
            return Err(Error::Config(
                "radio.break_distance_m must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Noise power over a transmission of the given width, in dBm.
    /// `noise_dbm` is per 20 MHz; total noise scales with bandwidth.
    pub fn noise_dbm_for_width(&self, width: u8) -> f64 {
        self.noise_dbm + 10.0 * f64::from(width).log10()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Dual-slope log-distance path loss at 5 GHz, in dB.
pub fn path_loss_db(d: f64, break_distance_m: f64) -> Result<f64> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::Domain(format!("path loss distance {d} must be > 0")));
    }
    Ok(if d <= break_distance_m {
        NEAR_INTERCEPT_DB + NEAR_SLOPE_DB * d.log10()
    } else {
        FAR_INTERCEPT_DB + FAR_SLOPE_DB * d.log10()
    })
}

/// Per-basic-channel transmit power: the total power less the bonding loss
/// per doubling. With a 3 dB loss this is an even split of total power.
pub fn per_channel_tx_power_dbm(p_tx_dbm: f64, width: u8, loss_db_per_doubling: f64) -> Result<f64> {
    if width < 1 || !(width as u32).is_power_of_two() {
        return Err(Error::Domain(format!(
            "channel width {width} must be a power of two"
        )));
    }
    Ok(p_tx_dbm - loss_db_per_doubling * f64::from(width).log2())
}

/// Linear-scale (mW) power per basic channel, indexed 1..=n_sys.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerMap {
    mw: Vec<f64>,
}

impl PowerMap {
    pub fn zeros(n_sys: u8) -> Self {
        PowerMap {
            mw: vec![0.0; usize::from(n_sys)],
        }
    }

    pub fn n_sys(&self) -> u8 {
        self.mw.len() as u8
    }

    pub fn get_mw(&self, basic: u8) -> f64 {
        self.mw[usize::from(basic) - 1]
    }

    pub fn add_mw(&mut self, basic: u8, mw: f64) {
        self.mw[usize::from(basic) - 1] += mw;
    }

    /// Sum of linear power over the basic channels of `ch`, in mW.
    pub fn sum_over(&self, ch: &Channel) -> f64 {
        ch.basics().map(|b| self.get_mw(b)).sum()
    }

    pub fn scale(&self, factor: f64) -> PowerMap {
        PowerMap {
            mw: self.mw.iter().map(|p| p * factor).collect(),
        }
    }
}

/// Power emitted per basic channel at the 0 m reference, before path loss.
///
/// In-band channels carry the per-channel split power; the single basic
/// channel on each side of the transmission channel carries 3 dB less.
/// Leakage falling outside `[1, n_sys]` is dropped.
pub fn emitted_power_map(tx_channel: &Channel, radio: &RadioConfig, n_sys: u8) -> Result<PowerMap> {
    let per_ch = per_channel_tx_power_dbm(
        radio.tx_power_dbm,
        tx_channel.width(),
        radio.bonding_loss_db_per_doubling,
    )?;
    let mut map = PowerMap::zeros(n_sys);
    let in_band_mw = dbm_to_mw(per_ch);
    for b in tx_channel.basics() {
        map.add_mw(b, in_band_mw);
    }
    let leak_mw = dbm_to_mw(per_ch - ADJACENT_LEAK_DB);
    if tx_channel.lo() > 1 {
        map.add_mw(tx_channel.lo() - 1, leak_mw);
    }
    if tx_channel.hi() < n_sys {
        map.add_mw(tx_channel.hi() + 1, leak_mw);
    }
    Ok(map)
}

/// Emitted map attenuated by the link budget between `tx` and `rx`
/// (path loss plus antenna gains), in linear mW per basic channel.
pub fn received_power_map(
    tx: &NodePosition,
    rx: &NodePosition,
    tx_channel: &Channel,
    radio: &RadioConfig,
    n_sys: u8,
) -> Result<PowerMap> {
    let d = tx.distance(rx);
    if d <= 0.0 {
        return Err(Error::Domain(
            "received power between coincident positions".into(),
        ));
    }
    let gain_db = radio.tx_gain_db + radio.rx_gain_db - path_loss_db(d, radio.break_distance_m)?;
    Ok(emitted_power_map(tx_channel, radio, n_sys)?.scale(dbm_to_mw(gain_db)))
}

/// Co-channel (in-band only) received power, used for the CCA decision.
fn co_channel_power_map(
    tx: &NodePosition,
    rx: &NodePosition,
    tx_channel: &Channel,
    radio: &RadioConfig,
    n_sys: u8,
) -> Result<PowerMap> {
    let d = tx.distance(rx);
    if d <= 0.0 {
        return Err(Error::Domain("sensing at a coincident position".into()));
    }
    let per_ch = per_channel_tx_power_dbm(
        radio.tx_power_dbm,
        tx_channel.width(),
        radio.bonding_loss_db_per_doubling,
    )?;
    let rx_dbm = per_ch + radio.tx_gain_db + radio.rx_gain_db
        - path_loss_db(d, radio.break_distance_m)?;
    let mut map = PowerMap::zeros(n_sys);
    for b in tx_channel.basics() {
        map.add_mw(b, dbm_to_mw(rx_dbm));
    }
    Ok(map)
}

/// The basic channels of `allocation` sensed idle at `sensing_pos` given the
/// active transmitters. Interference from distinct transmitters accumulates
/// linearly per basic channel; a channel is free iff the sum stays below CCA.
pub fn sensed_free_set(
    sensing_pos: &NodePosition,
    allocation: &Channel,
    active: &[(NodePosition, Channel)],
    radio: &RadioConfig,
    n_sys: u8,
) -> Result<Vec<u8>> {
    let mut total = PowerMap::zeros(n_sys);
    for (pos, ch) in active {
        let map = co_channel_power_map(pos, sensing_pos, ch, radio, n_sys)?;
        for b in 1..=n_sys {
            total.add_mw(b, map.get_mw(b));
        }
    }
    let cca_mw = dbm_to_mw(radio.cca_dbm);
    Ok(allocation
        .basics()
        .filter(|&b| total.get_mw(b) < cca_mw)
        .collect())
}

/// SINR in dB perceived at `sta` for a transmission from `ap` on
/// `tx_channel`, given the other active transmitters.
///
/// Signal and interference are summed linearly over the basic channels of the
/// transmission channel (leakage included on the interference side); noise is
/// per-20 MHz scaled to the transmission bandwidth.
pub fn sinr_db(
    ap: &NodePosition,
    sta: &NodePosition,
    tx_channel: &Channel,
    interferers: &[(NodePosition, Channel)],
    radio: &RadioConfig,
    n_sys: u8,
) -> Result<f64> {
    let signal_mw = received_power_map(ap, sta, tx_channel, radio, n_sys)?.sum_over(tx_channel);
    let mut interference_mw = 0.0;
    for (pos, ch) in interferers {
        interference_mw +=
            received_power_map(pos, sta, ch, radio, n_sys)?.sum_over(tx_channel);
    }
    let noise_mw = dbm_to_mw(radio.noise_dbm_for_width(tx_channel.width()));
    Ok(mw_to_dbm(signal_mw / (interference_mw + noise_mw)))
}
