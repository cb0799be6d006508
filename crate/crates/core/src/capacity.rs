//! Secondary-link capacity bounds, estimation and MAC overhead losses.
//!
//! Capacities are in bits per channel use. For each channel realization the
//! scheme's conditional detection probabilities set the probabilities that
//! the secondaries perceive the channel as idle, and the received power at
//! the secondary receiver is `P = ρ·g_tr`.

use serde::{Deserialize, Serialize};

use crate::channel::{
    perturb_metrics, sample_multiuser_weighted, sample_weighted, ChannelSet, GainSampler,
    LinkLambdas, MetricTriple, MultiuserLambdas, NoisyMetricTriple, RelayMetrics,
};
use crate::error::{domain, nonnegative, positive, Error, Result};
use crate::mc::{accumulate, map_trials, Estimate, McSettings};
use crate::numerics::{q, Probability};
use crate::protocols::{
    mucsa_pair_outcome, mucsa_sampled_outcome, ocsa_outcome_with, ocsa_select_relay, outcome,
    NodeStatus, PairOutcome, ProtocolConfig, RelayIdentity, Scheme, TrialOutcome,
};
use crate::stream::{Purpose, StreamFactory};

/// Primary spectral activity around the secondaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityModel {
    /// `Pr(θ_t = 1)`: the channel is free near the transmitter.
    pub p_theta_t: Probability,
    /// `Pr(θ_t = θ_r = 1)`.
    pub p_theta_joint: Probability,
    /// Coherence time in channel uses.
    pub t_c: u32,
}

impl ActivityModel {
    pub fn new(p_theta_t: f64, p_theta_joint: f64, t_c: u32) -> Result<Self> {
        let a = ActivityModel {
            p_theta_t: Probability::new(p_theta_t)?,
            p_theta_joint: Probability::new(p_theta_joint)?,
            t_c,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_theta_joint > self.p_theta_t {
            return Err(Error::Invalid(format!(
                "p_theta_joint ({}) cannot exceed p_theta_t ({})",
                self.p_theta_joint, self.p_theta_t
            )));
        }
        if self.t_c == 0 {
            return Err(domain("t_c", "at least 1", 0.0));
        }
        Ok(())
    }

    fn penalty(&self) -> f64 {
        1.0 / (self.t_c as f64 * std::f64::consts::LN_2)
    }
}

/// `(Pr(S_t = 1), Pr(S_t = S_r = 1))`.
pub fn state_probs(
    activity: &ActivityModel,
    p_miss_t: Probability,
    p_joint_success: Probability,
) -> (Probability, Probability) {
    (
        activity.p_theta_t.and(p_miss_t.complement()),
        activity.p_theta_joint.and(p_joint_success),
    )
}

/// `p·log2(1 + P/p)`, extended by 0 at `p = 0`.
fn p_log(p: f64, power: f64, denom: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (power / denom).ln_1p() / std::f64::consts::LN_2
    }
}

pub fn capacity_upper(power: f64, p_joint: Probability) -> f64 {
    p_log(p_joint.value(), power, p_joint.value())
}

/// Returned raw: the coherence penalty can make it negative.
pub fn capacity_lower(power: f64, p_joint: Probability, p_t: Probability, t_c: u32) -> Result<f64> {
    nonnegative("received power", power)?;
    if p_joint > p_t {
        return Err(Error::Invalid(format!(
            "Pr(S_t=S_r=1) = {p_joint} exceeds Pr(S_t=1) = {p_t}"
        )));
    }
    if t_c == 0 {
        return Err(domain("t_c", "at least 1", 0.0));
    }
    if p_t.value() == 0.0 && power > 0.0 {
        return Err(domain("Pr(S_t=1)", "positive when the received power is", 0.0));
    }
    Ok(lower_unchecked(power, p_joint.value(), p_t.value(), t_c))
}

fn lower_unchecked(power: f64, p_joint: f64, p_t: f64, t_c: u32) -> f64 {
    p_log(p_joint, power, p_t) - 1.0 / (t_c as f64 * std::f64::consts::LN_2)
}

/// Lower and upper bound for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

fn bounds_from(activity: &ActivityModel, power: f64, p_miss_t: Probability, p_joint: Probability) -> BoundPair {
    let (p_t, p_j) = state_probs(activity, p_miss_t, p_joint);
    BoundPair {
        lower: p_log(p_j.value(), power, p_t.value()) - activity.penalty(),
        upper: capacity_upper(power, p_j),
    }
}

fn trial_bounds(activity: &ActivityModel, cfg: &ProtocolConfig, ch: &ChannelSet, o: &TrialOutcome) -> BoundPair {
    bounds_from(activity, cfg.rho * ch.g_tr, o.p_miss_t, o.p_joint_success)
}

/// Bounds for one channel realization under `scheme`.
pub fn realization_bounds(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    ch: &ChannelSet,
) -> BoundPair {
    trial_bounds(activity, cfg, ch, &outcome(scheme, cfg, ch))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CapacityMode {
    Ergodic,
    Outage { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub scheme: String,
    pub rho: f64,
    pub mode: CapacityMode,
    pub lower: f64,
    pub upper: f64,
    /// Standard errors of the ergodic means; absent for quantiles.
    pub lower_std_error: Option<f64>,
    pub upper_std_error: Option<f64>,
}

fn check_inputs(activity: &ActivityModel, cfg: &ProtocolConfig, lambdas: &LinkLambdas) -> Result<()> {
    activity.validate()?;
    cfg.validate()?;
    LinkLambdas::new(lambdas.pt, lambdas.pr, lambdas.tr).map(|_| ())
}

fn draw(streams: &StreamFactory, lambdas: &LinkLambdas, trial: u64) -> ChannelSet {
    sample_weighted(lambdas, &GainSampler::Plain, &mut streams.stream(trial, Purpose::Channel)).0
}

pub fn ergodic_capacity(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    mc: &McSettings,
) -> Result<CapacityEstimate> {
    check_inputs(activity, cfg, lambdas)?;
    let streams = StreamFactory::new(mc.seed);
    let accs = accumulate(mc, 2, |t, out| {
        let b = realization_bounds(scheme, activity, cfg, &draw(&streams, lambdas, t));
        out[0] = b.lower;
        out[1] = b.upper;
    })?;
    Ok(ergodic_estimate(scheme.name(), cfg.rho, accs[0].estimate(), accs[1].estimate()))
}

fn ergodic_estimate(scheme: &str, rho: f64, lower: Estimate, upper: Estimate) -> CapacityEstimate {
    CapacityEstimate {
        scheme: scheme.to_string(),
        rho,
        mode: CapacityMode::Ergodic,
        lower: lower.mean,
        upper: upper.mean,
        lower_std_error: Some(lower.std_error),
        upper_std_error: Some(upper.std_error),
    }
}

/// Per-realization bounds of `scheme`, in trial order.
pub fn realization_samples(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    mc: &McSettings,
) -> Result<Vec<BoundPair>> {
    check_inputs(activity, cfg, lambdas)?;
    let streams = StreamFactory::new(mc.seed);
    map_trials(mc, |t| realization_bounds(scheme, activity, cfg, &draw(&streams, lambdas, t)))
}

/// Largest `c` with empirical `Pr(C < c) ≤ ε`: the sample of 0-based rank
/// `⌊ε·n⌋`.
pub fn lower_quantile(sorted: &[f64], epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon, sorted.len() as u64)?;
    let k = ((epsilon * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    Ok(sorted[k])
}

fn check_epsilon(epsilon: f64, n: u64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("epsilon", "in (0, 1)", epsilon));
    }
    let needed = (100.0 / epsilon).ceil() as u64;
    if n < needed {
        return Err(Error::Range {
            what: "outage estimate needs n_trials >= 100/epsilon; n_trials",
            value: n,
            max: needed,
        });
    }
    Ok(())
}

/// ε-outage bounds for each requested `ε`, from one set of draws.
pub fn outage_capacities(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    epsilons: &[f64],
    mc: &McSettings,
) -> Result<Vec<CapacityEstimate>> {
    for &e in epsilons {
        check_epsilon(e, mc.n_trials)?;
    }
    let samples = realization_samples(scheme, activity, cfg, lambdas, mc)?;
    outage_from_samples(scheme.name(), cfg.rho, &samples, epsilons)
}

fn outage_from_samples(
    scheme: &str,
    rho: f64,
    samples: &[BoundPair],
    epsilons: &[f64],
) -> Result<Vec<CapacityEstimate>> {
    let mut lower: Vec<f64> = samples.iter().map(|b| b.lower).collect();
    let mut upper: Vec<f64> = samples.iter().map(|b| b.upper).collect();
    lower.sort_by(f64::total_cmp);
    upper.sort_by(f64::total_cmp);
    epsilons
        .iter()
        .map(|&epsilon| {
            Ok(CapacityEstimate {
                scheme: scheme.to_string(),
                rho,
                mode: CapacityMode::Outage { epsilon },
                lower: lower_quantile(&lower, epsilon)?,
                upper: lower_quantile(&upper, epsilon)?,
                lower_std_error: None,
                upper_std_error: None,
            })
        })
        .collect()
}

pub fn outage_capacity(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    epsilon: f64,
    mc: &McSettings,
) -> Result<CapacityEstimate> {
    Ok(outage_capacities(scheme, activity, cfg, lambdas, &[epsilon], mc)?.remove(0))
}

/// Whether noisy estimates change the relay picked for this status.
pub fn wrong_relay_event<M: RelayMetrics + ?Sized>(
    true_m: &MetricTriple,
    noisy_m: &M,
    status: NodeStatus,
) -> bool {
    ocsa_select_relay(true_m, status) != ocsa_select_relay(noisy_m, status)
}

/// Probability, over status outcomes at `cfg.rho`, that `noisy_m` picks a
/// different relay than the true metrics.
pub fn wrong_relay_given(cfg: &ProtocolConfig, ch: &ChannelSet, noisy_m: &NoisyMetricTriple) -> f64 {
    let o = ocsa_outcome_with(cfg, ch, noisy_m);
    let m = ch.metrics();
    NodeStatus::ALL
        .iter()
        .filter(|&&st| o.relay(st) != ocsa_select_relay(&m, st))
        .map(|&st| o.status_probs.get(st).value())
        .sum()
}

/// `(1/3)·E[Q(|t_p−t_t|/√(2σ²)) + Q(|t_p−t_r|/√(2σ²))]` over channel draws.
pub fn wrong_relay_bound(sigma: f64, lambdas: &LinkLambdas, mc: &McSettings) -> Result<Estimate> {
    nonnegative("sigma", sigma)?;
    LinkLambdas::new(lambdas.pt, lambdas.pr, lambdas.tr)?;
    if sigma == 0.0 {
        mc.validate()?;
        return Ok(Estimate {
            mean: 0.0,
            std_error: 0.0,
            n: mc.n_trials,
        });
    }
    let streams = StreamFactory::new(mc.seed);
    let scale = 1.0 / (2.0 * sigma * sigma).sqrt();
    let accs = accumulate(mc, 1, |t, out| {
        let m = draw(&streams, lambdas, t).metrics();
        out[0] = (q((m.t_p - m.t_t).abs() * scale) + q((m.t_p - m.t_r).abs() * scale)) / 3.0;
    })?;
    Ok(accs[0].estimate())
}

/// Outcome of OCSA with noisy metric estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperfectEstimate {
    pub sigma: f64,
    /// Ergodic bounds with relays chosen from noisy metrics.
    pub capacity: CapacityEstimate,
    /// `E[(C^U − C̃^U) / C^U]`, realizations with `C^U = 0` counted as 0.
    pub relative_loss: Estimate,
    /// Status-weighted probability of a wrong relay at `cfg.rho`.
    pub wrong_relay: Estimate,
}

pub fn imperfect_capacity(
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    sigma: f64,
    mc: &McSettings,
) -> Result<ImperfectEstimate> {
    check_inputs(activity, cfg, lambdas)?;
    nonnegative("sigma", sigma)?;
    let streams = StreamFactory::new(mc.seed);
    let accs = accumulate(mc, 4, |t, out| {
        let ch = draw(&streams, lambdas, t);
        let m = ch.metrics();
        let noisy = perturb_metrics(&m, sigma, &mut streams.stream(t, Purpose::Noise))
            .expect("sigma checked");
        let o_noisy = ocsa_outcome_with(cfg, &ch, &noisy);
        let b = trial_bounds(activity, cfg, &ch, &o_noisy);
        let perfect = trial_bounds(activity, cfg, &ch, &ocsa_outcome_with(cfg, &ch, &m)).upper;
        out[0] = b.lower;
        out[1] = b.upper;
        out[2] = if perfect > 0.0 {
            (perfect - b.upper) / perfect
        } else {
            0.0
        };
        out[3] = wrong_relay_given(cfg, &ch, &noisy);
    })?;
    Ok(ImperfectEstimate {
        sigma,
        capacity: ergodic_estimate("ocsa", cfg.rho, accs[0].estimate(), accs[1].estimate()),
        relative_loss: accs[2].estimate(),
        wrong_relay: accs[3].estimate(),
    })
}

/// MAC overheads of OCSA: channel hold time, feedback time and the backoff
/// timer constant, all in the same time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadParams {
    pub t_cr: f64,
    pub t_fb: f64,
    pub beta: f64,
}

impl OverheadParams {
    pub fn new(t_cr: f64, t_fb: f64, beta: f64) -> Result<Self> {
        let o = OverheadParams { t_cr, t_fb, beta };
        o.validate()?;
        Ok(o)
    }

    /// Builds overheads from the normalized loads `w1 = T_FB/T_CR` and
    /// `w2 = β/(T_CR·λ_pt)`.
    pub fn from_loads(t_cr: f64, w1: f64, w2: f64, lambda_pt: f64) -> Result<Self> {
        positive("lambda_pt", lambda_pt)?;
        nonnegative("w1", w1)?;
        nonnegative("w2", w2)?;
        OverheadParams::new(t_cr, w1 * t_cr, w2 * t_cr * lambda_pt)
    }

    pub fn validate(&self) -> Result<()> {
        positive("t_cr", self.t_cr)?;
        nonnegative("t_fb", self.t_fb)?;
        nonnegative("beta", self.beta)?;
        Ok(())
    }

    pub fn w1(&self) -> f64 {
        self.t_fb / self.t_cr
    }

    pub fn w2(&self, lambda_pt: f64) -> f64 {
        self.beta / (self.t_cr * lambda_pt)
    }

    /// `T_CR / (T_CR + T_FB + β/t)`.
    pub fn discount(&self, t_relay: f64) -> Result<f64> {
        positive("relay metric", t_relay)?;
        Ok(self.t_cr / (self.t_cr + self.t_fb + self.beta / t_relay))
    }
}

pub fn throughput(overhead: &OverheadParams, t_relay: f64, c_tilde: f64) -> Result<f64> {
    overhead.validate()?;
    nonnegative("capacity", c_tilde)?;
    Ok(overhead.discount(t_relay)? * c_tilde)
}

pub fn throughput_loss_bound(w1: f64, w2: f64) -> Result<f64> {
    nonnegative("w1", w1)?;
    nonnegative("w2", w2)?;
    Ok(w1 / (1.0 + w1) + (1.0 + w1) * (w2 / (1.0 + w1)).exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputEstimate {
    pub w1: f64,
    pub w2: f64,
    /// `E[(C̃ − R) / C̃]`.
    pub relative_loss: Estimate,
    pub capacity_lower: Estimate,
    pub capacity_upper: Estimate,
    pub throughput_lower: Estimate,
    pub throughput_upper: Estimate,
    pub loss_bound: f64,
}

/// OCSA throughput with relays picked from metrics perturbed by `sigma`.
/// The backoff delay is set by the true metric of the node that relays,
/// averaged over phase-1 outcomes.
pub fn throughput_estimate(
    overhead: &OverheadParams,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    sigma: f64,
    mc: &McSettings,
) -> Result<ThroughputEstimate> {
    overhead.validate()?;
    check_inputs(activity, cfg, lambdas)?;
    nonnegative("sigma", sigma)?;
    let streams = StreamFactory::new(mc.seed);
    let accs = accumulate(mc, 5, |t, out| {
        let ch = draw(&streams, lambdas, t);
        let m = ch.metrics();
        let noisy = perturb_metrics(&m, sigma, &mut streams.stream(t, Purpose::Noise))
            .expect("sigma checked");
        let o = ocsa_outcome_with(cfg, &ch, &noisy);
        let b = trial_bounds(activity, cfg, &ch, &o);
        let discount: f64 = NodeStatus::ALL
            .iter()
            .map(|&st| {
                let t_relay = match o.relay(st) {
                    RelayIdentity::SecondaryTx => m.t_t,
                    RelayIdentity::SecondaryRx => m.t_r,
                    _ => m.t_p,
                };
                let f = if overhead.t_fb == 0.0 && overhead.beta == 0.0 {
                    1.0
                } else {
                    overhead.t_cr / (overhead.t_cr + overhead.t_fb + overhead.beta / t_relay)
                };
                o.status_probs.get(st).value() * f
            })
            .sum();
        // Status probabilities sum to 1 only up to rounding; keep the
        // no-overhead case exact.
        let discount = if overhead.t_fb == 0.0 && overhead.beta == 0.0 {
            1.0
        } else {
            discount
        };
        out[0] = 1.0 - discount;
        out[1] = b.lower;
        out[2] = b.upper;
        out[3] = discount * b.lower;
        out[4] = discount * b.upper;
    })?;
    Ok(ThroughputEstimate {
        w1: overhead.w1(),
        w2: overhead.w2(lambdas.pt),
        relative_loss: accs[0].estimate(),
        capacity_lower: accs[1].estimate(),
        capacity_upper: accs[2].estimate(),
        throughput_lower: accs[3].estimate(),
        throughput_upper: accs[4].estimate(),
        loss_bound: throughput_loss_bound(overhead.w1(), overhead.w2(lambdas.pt))?,
    })
}

/// Ergodic bounds for pair `pair` of a multiuser network, each pair
/// considered alone on the channel.
pub fn multiuser_pair_capacity(
    pair: usize,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &MultiuserLambdas,
    sampled_status: bool,
    mc: &McSettings,
) -> Result<CapacityEstimate> {
    activity.validate()?;
    cfg.validate()?;
    if pair >= lambdas.pairs() {
        return Err(Error::Range {
            what: "pair index",
            value: pair as u64,
            max: lambdas.pairs() as u64 - 1,
        });
    }
    if !sampled_status {
        let probe = crate::channel::MultiuserChannelSet::new(
            lambdas.pairs(),
            vec![1.0; lambdas.users()],
            vec![1.0; lambdas.users() * lambdas.users()],
        )?;
        mucsa_pair_outcome(cfg, &probe, pair)?;
    }
    let streams = StreamFactory::new(mc.seed);
    let accs = accumulate(mc, 2, |t, out| {
        let (mch, _) = sample_multiuser_weighted(
            lambdas,
            &GainSampler::Plain,
            &mut streams.stream(t, Purpose::Channel),
        );
        let o = if sampled_status {
            let s = mucsa_sampled_outcome(cfg, &mch, &mut streams.stream(t, Purpose::Status));
            let (tx, rx) = mch.pair_users(pair);
            PairOutcome {
                p_miss_t: s.p_miss[tx],
                p_miss_r: s.p_miss[rx],
                p_joint_success: s.p_joint_success[pair],
            }
        } else {
            mucsa_pair_outcome(cfg, &mch, pair).expect("pair count checked")
        };
        let (tx, rx) = mch.pair_users(pair);
        let b = bounds_from(activity, cfg.rho * mch.g_uu(tx, rx), o.p_miss_t, o.p_joint_success);
        out[0] = b.lower;
        out[1] = b.upper;
    })?;
    Ok(ergodic_estimate("mu-csa", cfg.rho, accs[0].estimate(), accs[1].estimate()))
}

/// Number of realizations where the lower bound exceeds the upper bound.
pub fn bound_order_violations(
    scheme: Scheme,
    activity: &ActivityModel,
    cfg: &ProtocolConfig,
    lambdas: &LinkLambdas,
    mc: &McSettings,
) -> Result<u64> {
    Ok(realization_samples(scheme, activity, cfg, lambdas, mc)?
        .iter()
        .filter(|b| b.lower > b.upper)
        .count() as u64)
}
