//! Seeded random deployments: APs uniform in a rectangle subject to a
//! pairwise minimum distance, STAs uniform on an annulus around their AP,
//! allocations drawn per WLAN.
//!
//! The generator is ChaCha8 seeded with the spec's `seed`, so deployments
//! are reproducible across platforms. Draw order per WLAN i (in order):
//! AP position (rejection-sampled x, y pairs), then each STA (angle, then
//! radius), then the primary channel, then the allocation width, then the
//! policy when `policy = "random"`. Changing any count therefore only
//! perturbs draws from that WLAN onward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::policy::Policy;
use crate::propagation::NodePosition;
use crate::scenario::{ScenarioConfig, WlanConfig};
use crate::Result;

const PLACEMENT_RETRY_CAP: u32 = 10_000;

/// How policies are assigned to generated WLANs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", untagged)]
pub enum PolicyAssignment {
    /// One policy for every WLAN, e.g. `policy = "AM"`, or `"random"` for a
    /// uniform draw per WLAN.
    Named(String),
    /// Explicit per-WLAN list, length M.
    PerWlan(Vec<Policy>),
}

impl Default for PolicyAssignment {
    fn default() -> Self {
        PolicyAssignment::Named("AM".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentSpec {
    pub map_width_m: f64,
    pub map_height_m: f64,
    /// Number of WLANs (M).
    pub wlans: usize,
    pub stas_per_wlan: usize,
    pub min_ap_distance_m: f64,
    pub sta_distance_min_m: f64,
    pub sta_distance_max_m: f64,
    pub n_sys: u8,
    pub seed: u64,
    pub policy: PolicyAssignment,
    /// Candidate allocation widths, drawn uniformly.
    pub widths: Vec<u8>,
}

impl Default for DeploymentSpec {
    fn default() -> Self {
        DeploymentSpec {
            map_width_m: 100.0,
            map_height_m: 100.0,
            wlans: 2,
            stas_per_wlan: 1,
            min_ap_distance_m: 10.0,
            sta_distance_min_m: 1.0,
            sta_distance_max_m: 5.0,
            n_sys: 8,
            seed: 0,
            policy: PolicyAssignment::default(),
            widths: vec![1, 2, 4, 8],
        }
    }
}

impl DeploymentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: DeploymentSpec =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wlans == 0 {
            return Err(Error::Config("deployment: wlans must be >= 1".into()));
        }
        if self.stas_per_wlan == 0 {
            return Err(Error::Config("deployment: stas_per_wlan must be >= 1".into()));
        }
        if self.map_width_m <= 0.0 || self.map_height_m <= 0.0 {
            return Err(Error::Config("deployment: map dimensions must be positive".into()));
        }
        if self.min_ap_distance_m < 0.0 {
            return Err(Error::Config("deployment: min_ap_distance_m must be >= 0".into()));
        }
        if !(self.sta_distance_min_m > 0.0 && self.sta_distance_max_m >= self.sta_distance_min_m) {
            return Err(Error::Config(
                "deployment: sta distance range must satisfy 0 < min <= max".into(),
            ));
        }
        if !(self.n_sys as u32).is_power_of_two() {
            return Err(Error::Config("deployment: n_sys must be a power of two".into()));
        }
        if self.widths.is_empty()
            || self
                .widths
                .iter()
                .any(|&w| !(w as u32).is_power_of_two() || w > self.n_sys)
        {
            return Err(Error::Config(format!(
                "deployment: widths must be powers of two <= n_sys, got {:?}",
                self.widths
            )));
        }
        if let PolicyAssignment::Named(name) = &self.policy {
            if name != "random" {
                name.parse::<Policy>()?;
            }
        }
        if let PolicyAssignment::PerWlan(list) = &self.policy {
            if list.len() != self.wlans {
                return Err(Error::Config(format!(
                    "deployment: policy list has {} entries for {} wlans",
                    list.len(),
                    self.wlans
                )));
            }
        }
        Ok(())
    }
}

/// Generates the deployment. Fully determined by `spec` (including the
/// seed); fails with a density diagnostic when AP placement cannot satisfy
/// the minimum distance within the retry cap.
pub fn generate_deployment(spec: &DeploymentSpec) -> Result<ScenarioConfig> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut wlans = Vec::with_capacity(spec.wlans);
    let mut aps: Vec<NodePosition> = Vec::with_capacity(spec.wlans);
    for i in 0..spec.wlans {
        let ap = place_ap(&mut rng, spec, &aps)?;
        aps.push(ap);
        let mut stas = Vec::with_capacity(spec.stas_per_wlan);
        for _ in 0..spec.stas_per_wlan {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            // Uniform over the annulus area.
            let (r1, r2) = (spec.sta_distance_min_m, spec.sta_distance_max_m);
            let r = (rng.gen::<f64>() * (r2 * r2 - r1 * r1) + r1 * r1).sqrt();
            stas.push(NodePosition::new(ap.x + r * theta.cos(), ap.y + r * theta.sin()));
        }
        let primary = rng.gen_range(1..=spec.n_sys);
        let width = spec.widths[rng.gen_range(0..spec.widths.len())];
        // The aligned block of this width containing the primary is unique.
        let lo = ((primary - 1) / width) * width + 1;
        let policy = match &spec.policy {
            PolicyAssignment::Named(name) if name == "random" => {
                [Policy::Op, Policy::Scb, Policy::Am, Policy::Pu][rng.gen_range(0..4)]
            }
            PolicyAssignment::Named(name) => name.parse()?,
            PolicyAssignment::PerWlan(list) => list[i],
        };
        wlans.push(WlanConfig {
            name: format!("W{}", i + 1),
            ap,
            stas,
            channel: [lo, lo + width - 1],
            primary,
            policy,
        });
    }
    let cfg = ScenarioConfig {
        name: format!("deployment_seed{}", spec.seed),
        n_sys: spec.n_sys,
        wlan: wlans,
        ..ScenarioConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn place_ap(
    rng: &mut ChaCha8Rng,
    spec: &DeploymentSpec,
    placed: &[NodePosition],
) -> Result<NodePosition> {
    for _ in 0..PLACEMENT_RETRY_CAP {
        let p = NodePosition::new(
            rng.gen::<f64>() * spec.map_width_m,
            rng.gen::<f64>() * spec.map_height_m,
        );
        if placed
            .iter()
            .all(|q| p.distance(q) >= spec.min_ap_distance_m)
        {
            return Ok(p);
        }
    }
    Err(Error::Infeasible(format!(
        "could not place {} APs at min distance {} m in a {} x {} m map \
         (density too high after {} retries)",
        spec.wlans, spec.min_ap_distance_m, spec.map_width_m, spec.map_height_m,
        PLACEMENT_RETRY_CAP
    )))
}
