//! Conditional beacon miss probabilities and relay selection.
//!
//! Everything here is conditioned on one channel realization: no bits are
//! simulated. The beacon is a codeword at Hamming distance `d` from its
//! nearest competitor; phase 1 carries a `d1` share, phase 2 (relayed
//! parity) the remaining `d2`. A link with gain `g` at SNR `ρ` fails a
//! distance-`k` segment with probability `Q(√(2kρg))`, and phase-2
//! combining adds SNRs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, MultiuserChannelSet, RelayMetrics};
use crate::error::{domain, positive, Error, Result};
use crate::numerics::{q, Probability};

/// Largest pair count handled by exact subset enumeration.
pub const MUCSA_EXACT_MAX_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// SNR without fading, `P_p / N_0`, linear.
    pub rho: f64,
    /// Level of cooperation `N1 / N`.
    pub alpha: f64,
    pub d: u32,
    pub d1: u32,
    pub d2: u32,
    /// Normalized primary power `P_p`. Informational: `rho` already folds it in.
    pub power_budget: f64,
    pub info_bits: Option<u32>,
    pub block_length: Option<u32>,
}

impl ProtocolConfig {
    /// Splits `d` proportionally: `d1 = round(α·d)` clamped to `[1, d-1]`.
    pub fn new(rho: f64, alpha: f64, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(domain("d", "at least 2", d as f64));
        }
        let d1 = ((alpha * d as f64).round() as u32).clamp(1, d - 1);
        ProtocolConfig::with_split(rho, alpha, d1, d - d1)
    }

    pub fn with_split(rho: f64, alpha: f64, d1: u32, d2: u32) -> Result<Self> {
        let cfg = ProtocolConfig {
            rho,
            alpha,
            d: d1 + d2,
            d1,
            d2,
            power_budget: 1.0,
            info_bits: None,
            block_length: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same code split at another SNR.
    pub fn at_rho(&self, rho: f64) -> Self {
        ProtocolConfig { rho, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        positive("rho", self.rho)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain("alpha", "in (0, 1)", self.alpha));
        }
        if self.d1 < 1 {
            return Err(domain("d1", "at least 1", self.d1 as f64));
        }
        if self.d2 < 1 {
            return Err(domain("d2", "at least 1", self.d2 as f64));
        }
        if self.d1 + self.d2 != self.d {
            return Err(Error::Invalid(format!(
                "d1 + d2 must equal d, got {} + {} != {}",
                self.d1, self.d2, self.d
            )));
        }
        positive("power_budget", self.power_budget)?;
        if let (Some(k), Some(n)) = (self.info_bits, self.block_length) {
            if k as f64 > self.alpha * n as f64 {
                return Err(Error::Invalid(format!(
                    "info_bits {k} exceeds alpha * block_length = {}",
                    self.alpha * n as f64
                )));
            }
        }
        Ok(())
    }

    /// `2·d1·ρ`, the phase-1 SNR multiplier.
    #[inline]
    fn a1(&self) -> f64 {
        2.0 * self.d1 as f64 * self.rho
    }

    #[inline]
    fn a2(&self) -> f64 {
        2.0 * self.d2 as f64 * self.rho
    }

    #[inline]
    fn a_full(&self) -> f64 {
        2.0 * self.d as f64 * self.rho
    }

    /// Failure probability of the full-length direct transmission.
    #[inline]
    fn q_full(&self, g: f64) -> f64 {
        q((self.a_full() * g).sqrt())
    }

    /// Failure probability of phase 1 alone.
    #[inline]
    fn q_phase1(&self, g: f64) -> f64 {
        q((self.a1() * g).sqrt())
    }

    /// Failure probability after combining phase 1 with relayed parity.
    #[inline]
    fn q_relayed(&self, g_direct: f64, g_relay: f64) -> f64 {
        q((self.a1() * g_direct + self.a2() * g_relay).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "nc")]
    Nc,
    #[serde(rename = "csa")]
    Csa,
    #[serde(rename = "ocsa")]
    Ocsa,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Nc, Scheme::Csa, Scheme::Ocsa];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nc => "nc",
            Scheme::Csa => "csa",
            Scheme::Ocsa => "ocsa",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nc" => Ok(Scheme::Nc),
            "csa" => Ok(Scheme::Csa),
            "ocsa" => Ok(Scheme::Ocsa),
            other => Err(Error::Invalid(format!(
                "unknown scheme '{other}' (expected nc, csa or ocsa)"
            ))),
        }
    }
}

/// Phase-1 decoding outcome at the two secondaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeStatus {
    pub t_success: bool,
    pub r_success: bool,
}

impl NodeStatus {
    /// In branch order SS, SF, FS, FF (transmitter first).
    pub const ALL: [NodeStatus; 4] = [
        NodeStatus::new(true, true),
        NodeStatus::new(true, false),
        NodeStatus::new(false, true),
        NodeStatus::new(false, false),
    ];

    pub const fn new(t_success: bool, r_success: bool) -> Self {
        NodeStatus {
            t_success,
            r_success,
        }
    }

    fn index(self) -> usize {
        match (self.t_success, self.r_success) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }
    }
}

/// Sender of the phase-2 parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelayIdentity {
    Primary,
    SecondaryTx,
    SecondaryRx,
    /// CSA only: both secondaries decoded and both relay.
    BothSecondaries,
    /// CSA only: neither secondary decoded, nobody relays.
    None,
}

/// Probabilities of the four phase-1 outcomes; failures are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatusProbs {
    pub ss: Probability,
    pub sf: Probability,
    pub fs: Probability,
    pub ff: Probability,
}

impl StatusProbs {
    fn from_failures(q_t: f64, q_r: f64) -> Self {
        let p = Probability::from_expansion;
        StatusProbs {
            ss: p((1.0 - q_t) * (1.0 - q_r)),
            sf: p((1.0 - q_t) * q_r),
            fs: p(q_t * (1.0 - q_r)),
            ff: p(q_t * q_r),
        }
    }

    pub fn get(&self, status: NodeStatus) -> Probability {
        [self.ss, self.sf, self.fs, self.ff][status.index()]
    }
}

/// Conditional detection probabilities for one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Phase-2 sender for each phase-1 branch, in [`NodeStatus::ALL`] order.
    pub relays: [RelayIdentity; 4],
    pub p_miss_t: Probability,
    pub p_miss_r: Probability,
    pub p_joint_success: Probability,
    pub status_probs: StatusProbs,
}

impl TrialOutcome {
    pub fn relay(&self, status: NodeStatus) -> RelayIdentity {
        self.relays[status.index()]
    }
}

/// Pairwise error probability of the full beacon over a direct link.
/// `1 − (1 − a)(1 − b)`, never below `a`.
#[inline]
fn either_fails(a: f64, b: f64) -> f64 {
    a + b * (1.0 - a)
}

/// Joint success as the complement of the joint failure. Near 1 the
/// failure terms keep their precision, and every scheme sums them in the
/// same order (T_t-side, both-fail, T_r-side), so orderings between schemes
/// that hold term by term also hold after rounding.
#[inline]
fn joint_from_failure(fail: f64) -> Probability {
    Probability::from_expansion(1.0 - fail)
}

pub fn nc_conditional_miss(cfg: &ProtocolConfig, gain: f64) -> Probability {
    Probability::from_expansion(cfg.q_full(gain))
}

/// A non-beacon codeword decoded as the beacon: same distance, same value.
pub fn false_alarm_conditional(cfg: &ProtocolConfig, gain: f64) -> Probability {
    nc_conditional_miss(cfg, gain)
}

pub fn nc_outcome(cfg: &ProtocolConfig, ch: &ChannelSet) -> TrialOutcome {
    let q_t = cfg.q_full(ch.g_pt);
    let q_r = cfg.q_full(ch.g_pr);
    let status_probs = StatusProbs::from_failures(q_t, q_r);
    TrialOutcome {
        relays: [RelayIdentity::Primary; 4],
        p_miss_t: Probability::from_expansion(q_t),
        p_miss_r: Probability::from_expansion(q_r),
        p_joint_success: joint_from_failure(either_fails(q_t, q_r)),
        status_probs,
    }
}

pub fn csa_phase1_status_probs(cfg: &ProtocolConfig, ch: &ChannelSet) -> StatusProbs {
    StatusProbs::from_failures(cfg.q_phase1(ch.g_pt), cfg.q_phase1(ch.g_pr))
}

pub fn csa_conditional_miss(cfg: &ProtocolConfig, ch: &ChannelSet) -> TrialOutcome {
    csa_outcome_scaled(cfg, ch, 1.0)
}

/// CSA with the relay transmitting at `relay_scale` times the primary power.
pub fn csa_outcome_scaled(cfg: &ProtocolConfig, ch: &ChannelSet, relay_scale: f64) -> TrialOutcome {
    let q_t = cfg.q_phase1(ch.g_pt);
    let q_r = cfg.q_phase1(ch.g_pr);
    let s = StatusProbs::from_failures(q_t, q_r);
    let relayed_t = cfg.q_relayed(ch.g_pt, relay_scale * ch.g_tr);
    let relayed_r = cfg.q_relayed(ch.g_pr, relay_scale * ch.g_tr);
    let (sf, fs, ff) = (s.sf.value(), s.fs.value(), s.ff.value());
    TrialOutcome {
        relays: [
            RelayIdentity::BothSecondaries,
            RelayIdentity::SecondaryTx,
            RelayIdentity::SecondaryRx,
            RelayIdentity::None,
        ],
        p_miss_t: Probability::from_expansion(relayed_t * fs + ff),
        p_miss_r: Probability::from_expansion(relayed_r * sf + ff),
        p_joint_success: joint_from_failure(fs * relayed_t + ff + sf * relayed_r),
        status_probs: s,
    }
}

/// Picks the phase-2 sender among the nodes holding the beacon.
///
/// The primary always competes; a secondary competes only if it decoded
/// phase 1. The largest metric wins, and exact ties go to the earlier of
/// Primary, SecondaryTx, SecondaryRx.
pub fn ocsa_select_relay<M: RelayMetrics + ?Sized>(m: &M, status: NodeStatus) -> RelayIdentity {
    let (t_p, t_t, t_r) = m.triple();
    let (mut relay, mut best) = (RelayIdentity::Primary, t_p);
    if status.t_success && t_t > best {
        relay = RelayIdentity::SecondaryTx;
        best = t_t;
    }
    if status.r_success && t_r > best {
        relay = RelayIdentity::SecondaryRx;
    }
    relay
}

pub fn ocsa_conditional_miss(cfg: &ProtocolConfig, ch: &ChannelSet) -> TrialOutcome {
    ocsa_outcome_with(cfg, ch, &ch.metrics())
}

/// OCSA outcome when relays are chosen from `metrics`, which may be noisy
/// estimates of the true ones. Detection always uses the true gains of
/// whichever node actually relays.
pub fn ocsa_outcome_with<M: RelayMetrics + ?Sized>(
    cfg: &ProtocolConfig,
    ch: &ChannelSet,
    metrics: &M,
) -> TrialOutcome {
    let s = csa_phase1_status_probs(cfg, ch);
    let relays = NodeStatus::ALL.map(|st| ocsa_select_relay(metrics, st));
    let qf_t = cfg.q_full(ch.g_pt);
    let qf_r = cfg.q_full(ch.g_pr);

    // T_r failed; the sender reaches it over g_pr (primary) or g_tr.
    let q_r_sf = match relays[1] {
        RelayIdentity::SecondaryTx => cfg.q_relayed(ch.g_pr, ch.g_tr),
        _ => qf_r,
    };
    let q_t_fs = match relays[2] {
        RelayIdentity::SecondaryRx => cfg.q_relayed(ch.g_pt, ch.g_tr),
        _ => qf_t,
    };

    let (sf, fs, ff) = (s.sf.value(), s.fs.value(), s.ff.value());
    TrialOutcome {
        relays,
        p_miss_t: Probability::from_expansion(fs * q_t_fs + ff * qf_t),
        p_miss_r: Probability::from_expansion(sf * q_r_sf + ff * qf_r),
        p_joint_success: joint_from_failure(fs * q_t_fs + ff * either_fails(qf_t, qf_r) + sf * q_r_sf),
        status_probs: s,
    }
}

pub fn outcome(scheme: Scheme, cfg: &ProtocolConfig, ch: &ChannelSet) -> TrialOutcome {
    match scheme {
        Scheme::Nc => nc_outcome(cfg, ch),
        Scheme::Csa => csa_conditional_miss(cfg, ch),
        Scheme::Ocsa => ocsa_conditional_miss(cfg, ch),
    }
}

/// Per-user miss and per-pair joint success probabilities under MU-CSA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiuserOutcome {
    pub p_miss: Vec<Probability>,
    pub p_joint_success: Vec<Probability>,
}

/// Conditional probabilities for one secondary pair under MU-CSA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub p_miss_t: Probability,
    pub p_miss_r: Probability,
    pub p_joint_success: Probability,
}

/// Probability of each phase-1 success set; bit `i` of the index is set
/// when user `i` decoded.
fn success_set_weights(cfg: &ProtocolConfig, mch: &MultiuserChannelSet) -> Result<Vec<f64>> {
    let pairs = mch.pairs();
    if pairs > MUCSA_EXACT_MAX_PAIRS {
        return Err(Error::SubsetExplosion {
            pairs,
            max: MUCSA_EXACT_MAX_PAIRS,
        });
    }
    let mut weight = Vec::with_capacity(1 << mch.users());
    weight.push(1.0);
    for i in 0..mch.users() {
        let f = cfg.q_phase1(mch.g_p(i));
        let len = weight.len();
        weight.extend_from_within(..len);
        for (k, w) in weight.iter_mut().enumerate() {
            *w *= if k < len { f } else { 1.0 - f };
        }
    }
    Ok(weight)
}

/// Miss probability of user `m` for every success set.
fn miss_by_set(cfg: &ProtocolConfig, mch: &MultiuserChannelSet, weight: &[f64], m: usize) -> Vec<f64> {
    let relay_gain = cfg.a2() / mch.users() as f64;
    let direct = cfg.a1() * mch.g_p(m);
    let mut relayed = vec![0.0; weight.len()];
    let mut miss = vec![1.0; weight.len()];
    for mask in 1..weight.len() {
        let low = mask.trailing_zeros() as usize;
        relayed[mask] = relayed[mask & (mask - 1)] + mch.g_uu(low, m);
        miss[mask] = if mask & (1 << m) != 0 {
            0.0
        } else if weight[mask] == 0.0 {
            1.0
        } else {
            q((direct + relay_gain * relayed[mask]).sqrt())
        };
    }
    miss
}

fn pair_from_sets(weight: &[f64], miss_t: &[f64], miss_r: &[f64]) -> PairOutcome {
    let (mut mt, mut mr, mut joint) = (0.0, 0.0, 0.0);
    for ((&w, &a), &b) in weight.iter().zip(miss_t).zip(miss_r) {
        mt += w * a;
        mr += w * b;
        joint += w * (1.0 - a) * (1.0 - b);
    }
    PairOutcome {
        p_miss_t: Probability::from_expansion(mt),
        p_miss_r: Probability::from_expansion(mr),
        p_joint_success: Probability::from_expansion(joint),
    }
}

/// Exact MU-CSA probabilities for pair `pair` by enumerating every phase-1
/// success set. Each successful secondary relays at `P_p / 2M`.
pub fn mucsa_pair_outcome(
    cfg: &ProtocolConfig,
    mch: &MultiuserChannelSet,
    pair: usize,
) -> Result<PairOutcome> {
    if pair >= mch.pairs() {
        return Err(Error::Range {
            what: "pair index",
            value: pair as u64,
            max: mch.pairs() as u64 - 1,
        });
    }
    let weight = success_set_weights(cfg, mch)?;
    let (t, r) = mch.pair_users(pair);
    Ok(pair_from_sets(
        &weight,
        &miss_by_set(cfg, mch, &weight, t),
        &miss_by_set(cfg, mch, &weight, r),
    ))
}

/// Exact MU-CSA probabilities for every user and pair.
pub fn mucsa_outcome(cfg: &ProtocolConfig, mch: &MultiuserChannelSet) -> Result<MultiuserOutcome> {
    let weight = success_set_weights(cfg, mch)?;
    let mut p_miss = vec![Probability::ZERO; mch.users()];
    let mut p_joint_success = Vec::with_capacity(mch.pairs());
    for pair in 0..mch.pairs() {
        let (t, r) = mch.pair_users(pair);
        let o = pair_from_sets(
            &weight,
            &miss_by_set(cfg, mch, &weight, t),
            &miss_by_set(cfg, mch, &weight, r),
        );
        p_miss[t] = o.p_miss_t;
        p_miss[r] = o.p_miss_r;
        p_joint_success.push(o.p_joint_success);
    }
    Ok(MultiuserOutcome {
        p_miss,
        p_joint_success,
    })
}

/// Conditional miss probability of user `m` (0-based) under MU-CSA.
pub fn mucsa_conditional_miss(
    cfg: &ProtocolConfig,
    mch: &MultiuserChannelSet,
    m: usize,
) -> Result<Probability> {
    if m >= mch.users() {
        return Err(Error::Range {
            what: "user index",
            value: m as u64,
            max: mch.users() as u64 - 1,
        });
    }
    Ok(mucsa_outcome(cfg, mch)?.p_miss[m])
}

/// Unbiased MU-CSA estimate for any number of pairs: phase-1 outcomes are
/// drawn from `rng` and only phase 2 is conditioned on.
pub fn mucsa_sampled_outcome<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    mch: &MultiuserChannelSet,
    rng: &mut R,
) -> MultiuserOutcome {
    let n = mch.users();
    let relay_gain = cfg.a2() / n as f64;
    let decoded: Vec<bool> = (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            u >= cfg.q_phase1(mch.g_p(i))
        })
        .collect();
    let any = decoded.iter().any(|&s| s);
    let miss: Vec<f64> = (0..n)
        .map(|m| {
            if decoded[m] {
                0.0
            } else if !any {
                1.0
            } else {
                let g: f64 = (0..n).filter(|&i| decoded[i]).map(|i| mch.g_uu(i, m)).sum();
                q((cfg.a1() * mch.g_p(m) + relay_gain * g).sqrt())
            }
        })
        .collect();
    let joint = (0..mch.pairs())
        .map(|p| {
            let (t, r) = mch.pair_users(p);
            Probability::from_expansion((1.0 - miss[t]) * (1.0 - miss[r]))
        })
        .collect();
    MultiuserOutcome {
        p_miss: miss.into_iter().map(Probability::from_expansion).collect(),
        p_joint_success: joint,
    }
}

/// Backoff timer start value `β / t`: the best metric expires first.
pub fn backoff_init(beta: f64, t: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("metric", t)?;
    Ok(beta / t)
}
