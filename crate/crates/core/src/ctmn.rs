//! CTMN construction: the global state space, the feasible-space exploration
//! with forward and backward transitions, and the transition-rate matrix.
//!
//! Discovery order is part of the contract: states are explored FIFO and
//! WLANs are processed in declaration order inside each state, so two runs of
//! the same scenario produce identical spaces and matrices.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channelization::{candidate_tx_channels, Channel};
use crate::error::Error;
use crate::network::Network;
use crate::policy::{select, Ratio};
use crate::propagation::{sensed_free_set, NodePosition};
use crate::Result;

pub const DEFAULT_GLOBAL_CAP: usize = 1_000_000;

/// One network state: which WLANs transmit and on which channel. Index i
/// holds WLAN i's transmission channel, `None` when it is idle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetState(Vec<Option<Channel>>);

impl NetState {
    pub fn empty(n_wlans: usize) -> Self {
        NetState(vec![None; n_wlans])
    }

    pub fn channel_of(&self, wlan: usize) -> Option<Channel> {
        self.0[wlan]
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|c| c.is_some()).count()
    }

    fn with(&self, wlan: usize, ch: Option<Channel>) -> NetState {
        let mut v = self.0.clone();
        v[wlan] = ch;
        NetState(v)
    }

    /// Text form like `{A:[1-2], C:[3]}` given WLAN names; `{}` when empty.
    pub fn label(&self, names: &[&str]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|ch| format!("{}:{}", names[i], ch)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// The global space Psi: every channelization-valid combination of idle and
/// transmitting WLANs, regardless of carrier sensing.
#[derive(Clone, Debug)]
pub struct GlobalSpace {
    pub states: Vec<NetState>,
    index: HashSet<NetState>,
}

impl GlobalSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &NetState) -> bool {
        self.index.contains(s)
    }
}

/// Cartesian product over WLANs of {idle} and the candidate transmission
/// channels, in canonical order. Aborts when the product exceeds `cap`.
pub fn generate_global_space(net: &Network, cap: usize) -> Result<GlobalSpace> {
    let per_wlan: Vec<Vec<Option<Channel>>> = net
        .wlans
        .iter()
        .map(|s| {
            let mut opts = vec![None];
            opts.extend(
                candidate_tx_channels(&s.wlan.allocation, &net.scheme)
                    .into_iter()
                    .map(Some),
            );
            opts
        })
        .collect();
    let mut size: usize = 1;
    for opts in &per_wlan {
        size = size.saturating_mul(opts.len());
        if size > cap {
            return Err(Error::StateCap {
                size: size as u128,
                cap: cap as u128,
            });
        }
    }
    let mut states = Vec::with_capacity(size);
    states.push(NetState::empty(per_wlan.len()));
    for (i, opts) in per_wlan.iter().enumerate() {
        let prev = std::mem::take(&mut states);
        for s in prev {
            for opt in opts {
                states.push(s.with(i, *opt));
            }
        }
    }
    let index = states.iter().cloned().collect();
    Ok(GlobalSpace { states, index })
}

/// The feasible space S in discovery order.
#[derive(Clone, Debug)]
pub struct FeasibleSpace {
    pub states: Vec<NetState>,
    index: HashMap<NetState, usize>,
}

impl FeasibleSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &NetState) -> Option<usize> {
        self.index.get(s).copied()
    }

    fn insert(&mut self, s: NetState) -> usize {
        let id = self.states.len();
        self.states.push(s.clone());
        self.index.insert(s, id);
        id
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransitionKind {
    /// WLAN started transmitting; the rate is alpha * lambda.
    Forward { alpha: Ratio },
    /// WLAN finished; the rate is mu at the width it was using.
    Backward,
}

/// One off-diagonal entry of Q with its provenance.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub wlan: usize,
    pub channel: Channel,
    pub kind: TransitionKind,
}

/// Sparse transition-rate matrix over the feasible space. Diagonal entries
/// are implicit: Q[i][i] = -(sum of row i's off-diagonal rates).
#[derive(Clone, Debug)]
pub struct RateMatrix {
    n: usize,
    pub transitions: Vec<Transition>,
    rows: Vec<Vec<usize>>,
}

impl RateMatrix {
    fn new(n: usize) -> Self {
        RateMatrix {
            n,
            transitions: Vec::new(),
            rows: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn grow_to(&mut self, n: usize) {
        self.n = n;
        self.rows.resize(n, Vec::new());
    }

    fn push(&mut self, t: Transition) {
        debug_assert!(t.from < self.n && t.to < self.n && t.from != t.to);
        debug_assert!(t.rate >= 0.0);
        self.rows[t.from].push(self.transitions.len());
        self.transitions.push(t);
    }

    pub fn transitions_from(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.rows[state].iter().map(|&i| &self.transitions[i])
    }

    /// Sum of off-diagonal rates leaving `state` (the negated diagonal).
    pub fn exit_rate(&self, state: usize) -> f64 {
        self.transitions_from(state).map(|t| t.rate).sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.transitions.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    /// Largest total exit rate across states; the uniformization constant
    /// must exceed it.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    /// Dense Q with the zero-sum diagonal filled in. Entries for parallel
    /// transitions (same source and target via different channels) add up.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.n]; self.n];
        for t in &self.transitions {
            q[t.from][t.to] += t.rate;
            q[t.from][t.from] -= t.rate;
        }
        q
    }
}

/// Explores the feasible space from the all-idle state per the construction
/// algorithm: FIFO over states; inside a state, WLANs in declaration order;
/// active WLANs contribute a backward transition (discovering the target if
/// new), idle WLANs a forward transition per policy-selected channel, rate
/// alpha * lambda, into the matching global state.
pub fn explore(net: &Network, cap: usize) -> Result<(FeasibleSpace, RateMatrix)> {
    let global = generate_global_space(net, cap)?;
    let n_wlans = net.wlans.len();
    let lambda = net.phy.backoff_rate();

    let mut space = FeasibleSpace {
        states: Vec::new(),
        index: HashMap::new(),
    };
    space.insert(NetState::empty(n_wlans));
    let mut q = RateMatrix::new(1);
    let mut queue: VecDeque<usize> = VecDeque::from([0]);

    while let Some(k) = queue.pop_front() {
        let state = space.states[k].clone();
        let active: Vec<(usize, NodePosition, Channel)> = (0..n_wlans)
            .filter_map(|i| state.channel_of(i).map(|ch| (i, net.wlans[i].wlan.ap, ch)))
            .collect();
        for i in 0..n_wlans {
            let setup = &net.wlans[i];
            match state.channel_of(i) {
                Some(ch) => {
                    let target = state.with(i, None);
                    let to = match space.index_of(&target) {
                        Some(id) => id,
                        None => {
                            let id = space.insert(target);
                            q.grow_to(space.len());
                            queue.push_back(id);
                            id
                        }
                    };
                    let mu = setup.link_for(ch.width())?.departure_rate;
                    q.push(Transition {
                        from: k,
                        to,
                        rate: mu,
                        wlan: i,
                        channel: ch,
                        kind: TransitionKind::Backward,
                    });
                }
                None => {
                    let others: Vec<(NodePosition, Channel)> = active
                        .iter()
                        .filter(|(j, _, _)| *j != i)
                        .map(|(_, pos, ch)| (*pos, *ch))
                        .collect();
                    let free = {
                        let free_list = sensed_free_set(
                            &setup.wlan.ap,
                            &setup.wlan.allocation.channel(),
                            &others,
                            &net.radio,
                            net.scheme.n_sys(),
                        )?;
                        let mut mask = vec![0u8; usize::from(net.scheme.n_sys())];
                        for b in free_list {
                            mask[usize::from(b) - 1] = 1;
                        }
                        mask
                    };
                    for (ch, alpha) in
                        select(setup.wlan.policy, &setup.wlan.allocation, &net.scheme, &free)?
                    {
                        // The link budget must close at the selected width.
                        let _ = setup.link_for(ch.width())?;
                        let target = state.with(i, Some(ch));
                        if !global.contains(&target) {
                            return Err(Error::Internal(format!(
                                "forward target {} missing from the global space",
                                target.label(&net.wlan_names())
                            )));
                        }
                        let to = match space.index_of(&target) {
                            Some(id) => id,
                            None => {
                                let id = space.insert(target);
                                q.grow_to(space.len());
                                queue.push_back(id);
                                id
                            }
                        };
                        q.push(Transition {
                            from: k,
                            to,
                            rate: alpha.value() * lambda,
                            wlan: i,
                            channel: ch,
                            kind: TransitionKind::Forward { alpha },
                        });
                    }
                }
            }
        }
    }
    Ok((space, q))
}

/// Forward transitions leaving the all-idle state for one WLAN, as exact
/// (channel, alpha) pairs. Empty when the WLAN never starts from idle.
pub fn alpha_from_empty(q: &RateMatrix, wlan: usize) -> Vec<(Channel, Ratio)> {
    q.transitions_from(0)
        .filter(|t| t.wlan == wlan)
        .filter_map(|t| match t.kind {
            TransitionKind::Forward { alpha } => Some((t.channel, alpha)),
            TransitionKind::Backward => None,
        })
        .collect()
}

/// Time-weighted state occupancy of the jump process over `horizon_s`
/// seconds, starting from the all-idle state. Deterministic for a fixed
/// seed; the generator is ChaCha8.
pub fn gillespie_sample(q: &RateMatrix, horizon_s: f64, seed: u64) -> Result<Vec<f64>> {
    if !(horizon_s > 0.0) {
        return Err(Error::Domain("simulation horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut occupancy = vec![0.0; q.n()];
    let mut state = 0usize;
    let mut t = 0.0f64;
    while t < horizon_s {
        let exits: Vec<&Transition> = q.transitions_from(state).collect();
        let total: f64 = exits.iter().map(|tr| tr.rate).sum();
        if total <= 0.0 {
            // Absorbing state: it holds the rest of the horizon.
            occupancy[state] += horizon_s - t;
            break;
        }
        let dwell = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / total;
        let dwell = dwell.min(horizon_s - t);
        occupancy[state] += dwell;
        t += dwell;
        let mut pick = rng.gen::<f64>() * total;
        let mut next = exits[exits.len() - 1].to;
        for tr in &exits {
            pick -= tr.rate;
            if pick <= 0.0 {
                next = tr.to;
                break;
            }
        }
        state = next;
    }
    for v in &mut occupancy {
        *v /= horizon_s;
    }
    Ok(occupancy)
}

/// Line-oriented dump of states and transitions, for diffing and external
/// graph rendering. States are 1-based in the output to match the usual
/// hand-drawn numbering.
pub fn dump(space: &FeasibleSpace, q: &RateMatrix, names: &[&str]) -> String {
    let mut out = String::new();
    for (i, s) in space.states.iter().enumerate() {
        out.push_str(&format!("state s{} {}\n", i + 1, s.label(names)));
    }
    for t in &q.transitions {
        let (kind, extra) = match t.kind {
            TransitionKind::Forward { alpha } => ("forward", format!(" alpha={alpha}")),
            TransitionKind::Backward => ("backward", String::new()),
        };
        out.push_str(&format!(
            "trans s{} -> s{} wlan={} channel={} kind={}{} rate={:.6}\n",
            t.from + 1,
            t.to + 1,
            names[t.wlan],
            t.channel,
            kind,
            extra,
            t.rate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channelization::{Allocation, ChannelizationScheme};
    use crate::network::Wlan;
    use crate::phy::{McsTable, PhyParams};
    use crate::policy::Policy;
    use crate::propagation::RadioConfig;
    use approx::assert_relative_eq;

    fn net_two_overlapping(policy_a: Policy, policy_b: Policy) -> Network {
        // Both WLANs share [1-2]; APs 10 m apart so each senses the other.
        let sch = ChannelizationScheme::new(2).unwrap();
        let ch = Channel::new(1, 2).unwrap();
        let mk = |name: &str, x: f64, p: u8, policy| Wlan {
            name: name.into(),
            ap: NodePosition::new(x, 0.0),
            stas: vec![NodePosition::new(x + 1.0, 0.0)],
            allocation: Allocation::new(ch, p, &sch).unwrap(),
            policy,
        };
        Network::assemble(
            vec![mk("A", 0.0, 1, policy_a), mk("B", 10.0, 2, policy_b)],
            sch,
            RadioConfig::default(),
            PhyParams::default(),
            McsTable::default(),
        )
        .unwrap()
    }

    fn single_wlan_net(policy: Policy) -> Network {
        let sch = ChannelizationScheme::new(1).unwrap();
        let ch = Channel::new(1, 1).unwrap();
        Network::assemble(
            vec![Wlan {
                name: "A".into(),
                ap: NodePosition::new(0.0, 0.0),
                stas: vec![NodePosition::new(1.0, 0.0)],
                allocation: Allocation::new(ch, 1, &sch).unwrap(),
                policy,
            }],
            sch,
            RadioConfig::default(),
            PhyParams::default(),
            McsTable::default(),
        )
        .unwrap()
    }

    #[test]
    fn global_space_is_a_cartesian_product() {
        // A has candidates of widths 1 and 2, B likewise: (1+2)^2 = 9.
        let net = net_two_overlapping(Policy::Am, Policy::Am);
        let g = generate_global_space(&net, DEFAULT_GLOBAL_CAP).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.contains(&NetState::empty(2)));
        // Closed under deactivation.
        for s in &g.states {
            for i in 0..2 {
                if s.channel_of(i).is_some() {
                    assert!(g.contains(&s.with(i, None)));
                }
            }
        }
    }

    #[test]
    fn global_space_cap_triggers() {
        let net = net_two_overlapping(Policy::Am, Policy::Am);
        match generate_global_space(&net, 8) {
            Err(Error::StateCap { size, cap }) => {
                assert!(size > cap);
                assert_eq!(cap, 8);
            }
            other => panic!("expected StateCap, got {other:?}"),
        }
    }

    #[test]
    fn single_wlan_two_state_chain() {
        let net = single_wlan_net(Policy::Am);
        let (space, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
        assert_eq!(space.len(), 2);
        assert!(space.states[0].is_empty());
        assert_eq!(q.transitions.len(), 2);
        let lam = net.phy.backoff_rate();
        let mu = net.wlans[0].link_for(1).unwrap().departure_rate;
        assert_relative_eq!(q.exit_rate(0), lam, epsilon = 1e-9);
        assert_relative_eq!(q.exit_rate(1), mu, epsilon = 1e-9);
    }

    #[test]
    fn overlap_chain_shapes_per_policy() {
        // Shared [1-2] with primaries 1 and 2. OP transmits width 1 on
        // disjoint primaries, so both can be active: 4 states. SCB and AM
        // bond the full channel and exclude each other: 3. PU mixes both
        // behaviors: 6.
        for (pol, expect) in [
            (Policy::Op, 4),
            (Policy::Scb, 3),
            (Policy::Am, 3),
            (Policy::Pu, 6),
        ] {
            let net = net_two_overlapping(pol, pol);
            let (space, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
            assert_eq!(space.len(), expect, "policy {pol}");
            if matches!(pol, Policy::Scb | Policy::Am) {
                assert!(space.states.iter().all(|s| s.active_count() <= 1));
            }
            // Feasibility closure and row structure.
            for (i, s) in space.states.iter().enumerate() {
                for w in 0..2 {
                    if s.channel_of(w).is_some() {
                        assert!(space.index_of(&s.with(w, None)).is_some());
                    }
                }
                let dense = q.to_dense();
                let row_sum: f64 = dense[i].iter().sum();
                assert!(row_sum.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn alpha_weights_from_empty() {
        let net = net_two_overlapping(Policy::Pu, Policy::Pu);
        let (_, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
        for wlan in 0..2 {
            let alphas = alpha_from_empty(&q, wlan);
            assert_eq!(alphas.len(), 2);
            for (_, a) in &alphas {
                assert_eq!((a.num, a.den), (1, 2));
            }
        }
        // Forward rates halve lambda.
        let lam = net.phy.backoff_rate();
        for t in q.transitions_from(0) {
            assert_relative_eq!(t.rate, lam / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn transitions_differ_by_one_wlan() {
        let net = net_two_overlapping(Policy::Pu, Policy::Am);
        let (space, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
        for t in &q.transitions {
            let a = &space.states[t.from];
            let b = &space.states[t.to];
            let diff: Vec<usize> = (0..2).filter(|&i| a.channel_of(i) != b.channel_of(i)).collect();
            assert_eq!(diff, vec![t.wlan]);
            match t.kind {
                TransitionKind::Forward { .. } => {
                    assert!(a.channel_of(t.wlan).is_none());
                    assert_eq!(b.channel_of(t.wlan), Some(t.channel));
                }
                TransitionKind::Backward => {
                    assert_eq!(a.channel_of(t.wlan), Some(t.channel));
                    assert!(b.channel_of(t.wlan).is_none());
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let build = || {
            let net = net_two_overlapping(Policy::Pu, Policy::Pu);
            let (space, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
            dump(&space, &q, &net.wlan_names())
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn gillespie_two_state_symmetric() {
        // Birth-death with lambda = mu occupies each state half the time.
        let mut net = single_wlan_net(Policy::Op);
        let mu = net.wlans[0].link_for(1).unwrap().departure_rate;
        // Tune cw_min so lambda == mu.
        net.phy.cw_min = (2.0 / (mu * net.phy.slot_us * 1e-6) + 1.0).round() as u32;
        let lam = net.phy.backoff_rate();
        assert_relative_eq!(lam, mu, max_relative = 0.01);
        let (_, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
        let occ = gillespie_sample(&q, 200.0, 7).unwrap();
        assert_relative_eq!(occ.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert!((occ[0] - 0.5).abs() < 0.03, "occ = {occ:?}");
    }

    #[test]
    fn gillespie_seed_determinism() {
        let net = net_two_overlapping(Policy::Pu, Policy::Pu);
        let (_, q) = explore(&net, DEFAULT_GLOBAL_CAP).unwrap();
        let a = gillespie_sample(&q, 10.0, 42).unwrap();
        let b = gillespie_sample(&q, 10.0, 42).unwrap();
        assert_eq!(a, b);
        let c = gillespie_sample(&q, 10.0, 43).unwrap();
        assert_ne!(a, c);
    }
}
