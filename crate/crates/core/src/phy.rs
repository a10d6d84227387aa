//! MCS selection, 11ax data rates and packet-duration arithmetic, and the
//! CTMN rate constants: the backoff (attempt) rate lambda and the departure
//! rate mu.
//!
//! Durations are held as exact integer nanoseconds so that the integer
//! OFDM-symbol ceilings never suffer float drift; rates are derived in s^-1
//! only at the end.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub const WIDTHS: [u8; 4] = [1, 2, 4, 8];

/// Index into per-width tables for a power-of-two width in basic channels.
pub fn width_slot(width: u8) -> Result<usize> {
    match width {
        1 => Ok(0),
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        _ => Err(Error::Domain(format!(
            "width {width} basic channels is not one of 1/2/4/8"
        ))),
    }
}

/// Data subcarrier count for 20/40/80/160 MHz transmissions.
pub fn subcarriers(width: u8) -> Result<u32> {
    Ok([234, 468, 980, 1960][width_slot(width)?])
}

/// One row of the MCS table: modulation bits, coding rate (exact rational)
/// and the minimum receiver sensitivity per channel width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    pub modulation_bits: u32,
    pub coding_num: u32,
    pub coding_den: u32,
    /// Minimum sensitivity in dBm at 20/40/80/160 MHz.
    pub min_sensitivity_dbm: [f64; 4],
}

impl McsEntry {
    /// Bits per OFDM symbol as an exact rational (num, den), single spatial
    /// stream: Y_sc * Y_m * Y_c.
    pub fn bits_per_symbol_rational(&self, width: u8) -> Result<(u64, u64)> {
        let ysc = u64::from(subcarriers(width)?);
        Ok((
            ysc * u64::from(self.modulation_bits) * u64::from(self.coding_num),
            u64::from(self.coding_den),
        ))
    }

    /// Bits per OFDM symbol as a float, for reporting.
    pub fn bits_per_symbol(&self, width: u8) -> Result<f64> {
        let (num, den) = self.bits_per_symbol_rational(width)?;
        Ok(num as f64 / den as f64)
    }

    /// SINR required at the given width: the sensitivity floor referred to
    /// the bandwidth-scaled noise power.
    pub fn required_sinr_db(&self, width: u8, noise_dbm: f64) -> Result<f64> {
        let slot = width_slot(width)?;
        let noise_w = noise_dbm + 10.0 * f64::from(width).log10();
        Ok(self.min_sensitivity_dbm[slot] - noise_w)
    }
}

/// The 11ax single-stream MCS set (indices 0-11) with the standard
/// minimum-sensitivity requirements per channel width.
///
/// Sensitivities follow the 802.11 receiver minimum input level table:
/// -82 dBm for MCS 0 at 20 MHz, +3 dB per bandwidth doubling, up to
/// -52 dBm for MCS 11 at 20 MHz. Overridable via a table file (see
/// [`McsTable::from_file`]).
#[derive(Clone, Debug, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl Default for McsTable {
    fn default() -> Self {
        let rows: [(u32, u32, u32, f64); 12] = [
            (1, 1, 2, -82.0),
            (2, 1, 2, -79.0),
            (2, 3, 4, -77.0),
            (4, 1, 2, -74.0),
            (4, 3, 4, -70.0),
            (6, 2, 3, -66.0),
            (6, 3, 4, -65.0),
            (6, 5, 6, -64.0),
            (8, 3, 4, -59.0),
            (8, 5, 6, -57.0),
            (10, 3, 4, -54.0),
            (10, 5, 6, -52.0),
        ];
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, &(ym, num, den, s20))| McsEntry {
                index: i as u8,
                modulation_bits: ym,
                coding_num: num,
                coding_den: den,
                min_sensitivity_dbm: [s20, s20 + 3.0, s20 + 6.0, s20 + 9.0],
            })
            .collect();
        McsTable { entries }
    }
}

impl McsTable {
    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn get(&self, index: u8) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    /// Parses a whitespace-separated table file. Columns:
    /// `index  modulation_bits  coding_num/coding_den  s20  s40  s80  s160`.
    /// Lines starting with `#` are comments.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_table(&text)
    }

    pub fn from_str_table(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!(
                    "mcs table line {}: expected 7 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad = |f: &str| Error::Parse(format!("mcs table line {}: bad field '{f}'", lineno + 1));
            let index: u8 = fields[0].parse().map_err(|_| bad(fields[0]))?;
            let ym: u32 = fields[1].parse().map_err(|_| bad(fields[1]))?;
            let (num, den) = fields[2]
                .split_once('/')
                .ok_or_else(|| bad(fields[2]))
                .and_then(|(n, d)| {
                    Ok((
                        n.parse::<u32>().map_err(|_| bad(fields[2]))?,
                        d.parse::<u32>().map_err(|_| bad(fields[2]))?,
                    ))
                })?;
            let mut sens = [0.0; 4];
            for (i, f) in fields[3..].iter().enumerate() {
                sens[i] = f.parse().map_err(|_| bad(f))?;
            }
            entries.push(McsEntry {
                index,
                modulation_bits: ym,
                coding_num: num,
                coding_den: den,
                min_sensitivity_dbm: sens,
            });
        }
        if entries.is_empty() {
            return Err(Error::Parse("mcs table: no entries".into()));
        }
        let table = McsTable { entries };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for pair in self.entries.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.index <= a.index {
                return Err(Error::Config("mcs table: indices must increase".into()));
            }
            let ra = a.modulation_bits as f64 * a.coding_num as f64 / a.coding_den as f64;
            let rb = b.modulation_bits as f64 * b.coding_num as f64 / b.coding_den as f64;
            if rb < ra {
                return Err(Error::Config("mcs table: rates must be nondecreasing".into()));
            }
            for w in 0..4 {
                if b.min_sensitivity_dbm[w] < a.min_sensitivity_dbm[w] {
                    return Err(Error::Config(
                        "mcs table: sensitivities must be nondecreasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Highest-index entry whose SINR requirement at the given width is met
    /// by the isolated-link SINR; `None` if no entry qualifies.
    pub fn select(&self, isolated_sinr_db: f64, width: u8, noise_dbm: f64) -> Result<Option<&McsEntry>> {
        let mut best = None;
        for e in &self.entries {
            if isolated_sinr_db >= e.required_sinr_db(width, noise_dbm)? {
                best = Some(e);
            }
        }
        Ok(best)
    }
}

/// MAC/PHY timing and framing parameters with stock 11ax defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyParams {
    pub slot_us: f64,           // T_e
    pub sifs_us: f64,           // T_SIFS
    pub difs_us: f64,           // T_DIFS
    pub pifs_us: f64,           // T_PIFS (parsed, unused by the analytical model)
    pub legacy_preamble_us: f64, // T_PHY-leg
    pub he_su_preamble_us: f64,  // T_PHY-HE-SU
    pub legacy_symbol_us: f64,   // sigma_leg
    pub ofdm_symbol_us: f64,     // sigma
    pub frame_bits: u64,         // L_D
    pub frames_per_ampdu: u64,   // N_a
    pub back_bits: u64,          // L_BACK
    pub rts_bits: u64,           // L_RTS
    pub cts_bits: u64,           // L_CTS
    pub service_bits: u64,       // L_SF
    pub mpdu_delimiter_bits: u64, // L_MD
    pub mac_header_bits: u64,    // L_MH
    pub tail_bits: u64,          // L_TB
    pub cw_min: u32,
    pub backoff_stages: u32, // m; accepted but unused (memoryless attempt rate)
    pub packet_error_rate: f64, // eta
    pub legacy_bits_per_symbol: u64, // r_leg
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            slot_us: 9.0,
            sifs_us: 16.0,
            difs_us: 34.0,
            pifs_us: 25.0,
            legacy_preamble_us: 20.0,
            he_su_preamble_us: 164.0,
            legacy_symbol_us: 4.0,
            ofdm_symbol_us: 16.0,
            frame_bits: 12_000,
            frames_per_ampdu: 64,
            back_bits: 432,
            rts_bits: 160,
            cts_bits: 112,
            service_bits: 16,
            mpdu_delimiter_bits: 32,
            mac_header_bits: 320,
            tail_bits: 18,
            cw_min: 16,
            backoff_stages: 5,
            packet_error_rate: 0.1,
            legacy_bits_per_symbol: 24,
        }
    }
}

fn us_to_ns(us: f64) -> u64 {
    (us * 1000.0).round() as u64
}

impl PhyParams {
    pub fn validate(&self) -> Result<()> {
        if self.cw_min < 2 {
            return Err(Error::Config("phy.cw_min must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.packet_error_rate) {
            return Err(Error::Config(
                "phy.packet_error_rate must be in [0, 1)".into(),
            ));
        }
        for (name, v) in [
            ("slot_us", self.slot_us),
            ("sifs_us", self.sifs_us),
            ("difs_us", self.difs_us),
            ("legacy_preamble_us", self.legacy_preamble_us),
            ("he_su_preamble_us", self.he_su_preamble_us),
            ("legacy_symbol_us", self.legacy_symbol_us),
            ("ofdm_symbol_us", self.ofdm_symbol_us),
        ] {
            if v <= 0.0 {
                return Err(Error::Config(format!("phy.{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Useful bits per successful A-MPDU exchange: E[L] = N_a * L_D.
    pub fn payload_bits(&self) -> u64 {
        self.frames_per_ampdu * self.frame_bits
    }

    /// Legacy-mode control frame duration in ns:
    /// preamble + ceil((L_SF + payload + L_TB) / r_leg) legacy symbols.
    pub fn control_frame_duration_ns(&self, payload_bits: u64) -> u64 {
        let bits = self.service_bits + payload_bits + self.tail_bits;
        let symbols = bits.div_ceil(self.legacy_bits_per_symbol);
        us_to_ns(self.legacy_preamble_us) + symbols * us_to_ns(self.legacy_symbol_us)
    }

    pub fn t_rts_ns(&self) -> u64 {
        self.control_frame_duration_ns(self.rts_bits)
    }

    pub fn t_cts_ns(&self) -> u64 {
        self.control_frame_duration_ns(self.cts_bits)
    }

    pub fn t_back_ns(&self) -> u64 {
        self.control_frame_duration_ns(self.back_bits)
    }

    /// A-MPDU data frame duration in ns at the given MCS and width.
    pub fn data_duration_ns(&self, mcs: &McsEntry, width: u8) -> Result<u64> {
        let (rate_num, rate_den) = mcs.bits_per_symbol_rational(width)?;
        let bits = self.service_bits
            + self.frames_per_ampdu
                * (self.mpdu_delimiter_bits + self.mac_header_bits + self.frame_bits)
            + self.tail_bits;
        // ceil(bits / (rate_num / rate_den)) with exact integers.
        let symbols = (bits * rate_den).div_ceil(rate_num);
        Ok(us_to_ns(self.he_su_preamble_us) + symbols * us_to_ns(self.ofdm_symbol_us))
    }

    /// Full successful-exchange duration in ns:
    /// RTS + SIFS + CTS + SIFS + DATA + SIFS + BACK + DIFS + T_e.
    pub fn success_duration_ns(&self, mcs: &McsEntry, width: u8) -> Result<u64> {
        Ok(self.t_rts_ns()
            + us_to_ns(self.sifs_us)
            + self.t_cts_ns()
            + us_to_ns(self.sifs_us)
            + self.data_duration_ns(mcs, width)?
            + us_to_ns(self.sifs_us)
            + self.t_back_ns()
            + us_to_ns(self.difs_us)
            + us_to_ns(self.slot_us))
    }

    /// Departure rate mu = 1 / T_suc, in transitions per second.
    pub fn departure_rate(&self, mcs: &McsEntry, width: u8) -> Result<f64> {
        Ok(1e9 / self.success_duration_ns(mcs, width)? as f64)
    }

    /// Backoff (attempt) rate lambda = 1 / (E[B] * T_e) with
    /// E[B] = (CW_min - 1) / 2 slots, in s^-1.
    pub fn backoff_rate(&self) -> f64 {
        let expected_backoff_ns = f64::from(self.cw_min - 1) / 2.0 * self.slot_us * 1000.0;
        1e9 / expected_backoff_ns
    }
}
