//! Fading realizations, relay metrics and their noisy estimates.
//!
//! Every link power gain `|γ|²` is exponential with mean `λ`, so gains are
//! drawn directly as scaled exponential variates. Links are always drawn in
//! declaration order (`pt`, `pr`, `tr`; multiuser: primary links first, then
//! the upper triangle row by row) so a stream position identifies a link.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{nonnegative, positive, Error, Result};

/// How the mean power gain of one link is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkParams {
    Lambda(f64),
    PathLoss(PathLoss),
}

/// Log-normal shadowing value and distance-based path loss of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLoss {
    pub shadowing: f64,
    pub distance: f64,
    pub pathloss_exponent: f64,
}

impl LinkParams {
    /// Mean power gain `λ = S·d^(-ζ)`, or the direct value.
    pub fn lambda(&self) -> Result<f64> {
        match *self {
            LinkParams::Lambda(l) => positive("lambda", l),
            LinkParams::PathLoss(PathLoss {
                shadowing,
                distance,
                pathloss_exponent,
            }) => {
                positive("shadowing", shadowing)?;
                positive("distance", distance)?;
                positive("pathloss_exponent", pathloss_exponent)?;
                positive("lambda", shadowing * distance.powf(-pathloss_exponent))
            }
        }
    }
}

impl From<f64> for LinkParams {
    fn from(l: f64) -> Self {
        LinkParams::Lambda(l)
    }
}

/// Resolved mean gains of the three links of a single secondary pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkLambdas {
    pub pt: f64,
    pub pr: f64,
    pub tr: f64,
}

impl LinkLambdas {
    pub fn new(pt: f64, pr: f64, tr: f64) -> Result<Self> {
        Ok(LinkLambdas {
            pt: positive("lambda_pt", pt)?,
            pr: positive("lambda_pr", pr)?,
            tr: positive("lambda_tr", tr)?,
        })
    }

    pub fn from_params(pt: LinkParams, pr: LinkParams, tr: LinkParams) -> Result<Self> {
        LinkLambdas::new(pt.lambda()?, pr.lambda()?, tr.lambda()?)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        LinkLambdas::new(self.pt, self.pr, self.tr).map(|_| ())
    }
}

/// One joint realization of the link power gains. `g_tr` serves both
/// directions of the secondary link.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelSet {
    pub g_pt: f64,
    pub g_pr: f64,
    pub g_tr: f64,
}

impl ChannelSet {
    pub fn new(g_pt: f64, g_pr: f64, g_tr: f64) -> Result<Self> {
        Ok(ChannelSet {
            g_pt: nonnegative("g_pt", g_pt)?,
            g_pr: nonnegative("g_pr", g_pr)?,
            g_tr: nonnegative("g_tr", g_tr)?,
        })
    }

    #[inline]
    pub fn g_rt(&self) -> f64 {
        self.g_tr
    }

    pub fn metrics(&self) -> MetricTriple {
        relay_metrics(self)
    }
}

/// Two-hop relay metrics of the primary, secondary transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricTriple {
    pub t_p: f64,
    pub t_t: f64,
    pub t_r: f64,
}

/// Metric estimates as seen by the competing nodes; may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoisyMetricTriple {
    pub t_p: f64,
    pub t_t: f64,
    pub t_r: f64,
    pub sigma: f64,
}

/// Anything relay selection can rank.
pub trait RelayMetrics {
    /// `(t_p, t_t, t_r)`.
    fn triple(&self) -> (f64, f64, f64);
}

impl RelayMetrics for MetricTriple {
    fn triple(&self) -> (f64, f64, f64) {
        (self.t_p, self.t_t, self.t_r)
    }
}

impl RelayMetrics for NoisyMetricTriple {
    fn triple(&self) -> (f64, f64, f64) {
        (self.t_p, self.t_t, self.t_r)
    }
}

pub fn relay_metrics(ch: &ChannelSet) -> MetricTriple {
    MetricTriple {
        t_p: ch.g_pt + ch.g_pr,
        t_t: ch.g_pt + ch.g_tr,
        t_r: ch.g_pr + ch.g_tr,
    }
}

/// Adds independent `N(0, σ²)` estimation noise to each metric.
pub fn perturb_metrics<R: Rng + ?Sized>(
    m: &MetricTriple,
    sigma: f64,
    rng: &mut R,
) -> Result<NoisyMetricTriple> {
    nonnegative("sigma", sigma)?;
    let mut noisy = |t: f64| {
        let z: f64 = rng.sample(StandardNormal);
        if sigma == 0.0 {
            t
        } else {
            t + sigma * z
        }
    };
    Ok(NoisyMetricTriple {
        t_p: noisy(m.t_p),
        t_t: noisy(m.t_t),
        t_r: noisy(m.t_r),
        sigma,
    })
}

/// Received SNR for a link whose gain already includes `λ`.
#[inline]
pub fn instantaneous_snr(rho: f64, gain: f64) -> f64 {
    rho * gain
}

/// Importance-sampling proposal for one exponential gain.
///
/// A defensive mixture of the nominal law and copies shrunk by each factor
/// in `scales`. Deep fades, which dominate high-SNR miss probabilities, are
/// sampled often, while the nominal component caps every likelihood ratio
/// at `1 / nominal_weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSampler {
    pub nominal_weight: f64,
    pub scales: Vec<f64>,
}

impl Default for MixtureSampler {
    fn default() -> Self {
        MixtureSampler {
            nominal_weight: 0.5,
            scales: (1..=10).map(|k| 10f64.powf(-0.5 * k as f64)).collect(),
        }
    }
}

impl MixtureSampler {
    pub fn new(nominal_weight: f64, scales: Vec<f64>) -> Result<Self> {
        if !(nominal_weight > 0.0 && nominal_weight <= 1.0) {
            return Err(crate::error::domain(
                "nominal_weight",
                "in (0, 1]",
                nominal_weight,
            ));
        }
        if scales.is_empty() && nominal_weight < 1.0 {
            return Err(Error::Invalid(
                "mixture needs at least one scale when nominal_weight < 1".into(),
            ));
        }
        for &s in &scales {
            positive("mixture scale", s)?;
        }
        Ok(MixtureSampler {
            nominal_weight,
            scales,
        })
    }

    /// Likelihood ratio nominal/proposal at normalized gain `x = g/λ`.
    pub fn likelihood_ratio(&self, x: f64) -> f64 {
        if self.scales.is_empty() {
            return 1.0;
        }
        let k = self.scales.len() as f64;
        let shrunk: f64 = self
            .scales
            .iter()
            .map(|&s| (-x * (1.0 / s - 1.0)).exp() / s)
            .sum();
        1.0 / (self.nominal_weight + (1.0 - self.nominal_weight) / k * shrunk)
    }

    fn draw<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let e: f64 = rng.sample(Exp1);
        let scale = if u < self.nominal_weight || self.scales.is_empty() {
            1.0
        } else {
            let frac = (u - self.nominal_weight) / (1.0 - self.nominal_weight);
            let idx = ((frac * self.scales.len() as f64) as usize).min(self.scales.len() - 1);
            self.scales[idx]
        };
        let x = scale * e;
        (lambda * x, self.likelihood_ratio(x))
    }
}

/// How trial gains are drawn.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum GainSampler {
    /// Nominal exponential law, unit weights.
    #[default]
    Plain,
    /// Mixture proposal with likelihood-ratio weights.
    Mixture(MixtureSampler),
}

impl GainSampler {
    /// Returns `(gain, likelihood ratio)`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> (f64, f64) {
        match self {
            GainSampler::Plain => {
                let e: f64 = rng.sample(Exp1);
                (lambda * e, 1.0)
            }
            GainSampler::Mixture(m) => m.draw(lambda, rng),
        }
    }
}

pub fn sample_channel_set<R: Rng + ?Sized>(lambdas: &LinkLambdas, rng: &mut R) -> Result<ChannelSet> {
    lambdas.validate()?;
    Ok(sample_weighted(lambdas, &GainSampler::Plain, rng).0)
}

/// Draws a realization and its likelihood ratio under `sampler`.
pub(crate) fn sample_weighted<R: Rng + ?Sized>(
    lambdas: &LinkLambdas,
    sampler: &GainSampler,
    rng: &mut R,
) -> (ChannelSet, f64) {
    let (g_pt, w_pt) = sampler.draw(lambdas.pt, rng);
    let (g_pr, w_pr) = sampler.draw(lambdas.pr, rng);
    let (g_tr, w_tr) = sampler.draw(lambdas.tr, rng);
    (ChannelSet { g_pt, g_pr, g_tr }, w_pt * w_pr * w_tr)
}

/// Mean gains for `M` secondary pairs. Users `0..M` are transmitters and
/// `M..2M` receivers; pair `m` is `(m, M + m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiuserLambdas {
    pairs: usize,
    primary: Vec<f64>,
    /// Row-major `2M × 2M`, symmetric, diagonal ignored.
    mutual: Vec<f64>,
}

impl MultiuserLambdas {
    pub fn new(pairs: usize, primary: Vec<f64>, mutual: Vec<f64>) -> Result<Self> {
        if pairs == 0 {
            return Err(Error::Invalid("number of pairs must be at least 1".into()));
        }
        let n = 2 * pairs;
        if primary.len() != n || mutual.len() != n * n {
            return Err(Error::Invalid(format!(
                "{pairs} pairs need {n} primary lambdas and a {n}x{n} mutual matrix"
            )));
        }
        for &l in &primary {
            positive("lambda", l)?;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                positive("lambda", mutual[i * n + j])?;
                if mutual[i * n + j] != mutual[j * n + i] {
                    return Err(Error::Invalid(format!(
                        "mutual lambda matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(MultiuserLambdas {
            pairs,
            primary,
            mutual,
        })
    }

    /// Every link with the same mean gain.
    pub fn uniform(pairs: usize, lambda: f64) -> Result<Self> {
        let n = 2 * pairs;
        MultiuserLambdas::new(pairs, vec![lambda; n], vec![lambda; n * n])
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn users(&self) -> usize {
        2 * self.pairs
    }

    pub fn primary(&self, i: usize) -> f64 {
        self.primary[i]
    }

    pub fn mutual(&self, i: usize, j: usize) -> f64 {
        self.mutual[i * self.users() + j]
    }
}

/// One realization of all multiuser link gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiuserChannelSet {
    pairs: usize,
    g_p: Vec<f64>,
    g_uu: Vec<f64>,
}

impl MultiuserChannelSet {
    pub fn new(pairs: usize, g_p: Vec<f64>, g_uu: Vec<f64>) -> Result<Self> {
        let n = 2 * pairs;
        if pairs == 0 || g_p.len() != n || g_uu.len() != n * n {
            return Err(Error::Invalid(format!(
                "{pairs} pairs need {n} primary gains and a {n}x{n} mutual matrix"
            )));
        }
        for &g in g_p.iter().chain(&g_uu) {
            nonnegative("gain", g)?;
        }
        for i in 0..n {
            for j in 0..i {
                if g_uu[i * n + j] != g_uu[j * n + i] {
                    return Err(Error::Invalid(format!(
                        "mutual gain matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(MultiuserChannelSet { pairs, g_p, g_uu })
    }

    /// Single-pair view: user 0 is the transmitter, user 1 the receiver.
    pub fn from_pair(ch: &ChannelSet) -> Self {
        MultiuserChannelSet {
            pairs: 1,
            g_p: vec![ch.g_pt, ch.g_pr],
            g_uu: vec![0.0, ch.g_tr, ch.g_tr, 0.0],
        }
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn users(&self) -> usize {
        2 * self.pairs
    }

    #[inline]
    pub fn g_p(&self, i: usize) -> f64 {
        self.g_p[i]
    }

    #[inline]
    pub fn g_uu(&self, i: usize, j: usize) -> f64 {
        self.g_uu[i * self.users() + j]
    }

    /// Transmitter and receiver user indices of pair `m`.
    pub fn pair_users(&self, m: usize) -> (usize, usize) {
        (m, self.pairs + m)
    }
}

pub fn sample_multiuser<R: Rng + ?Sized>(
    lambdas: &MultiuserLambdas,
    rng: &mut R,
) -> MultiuserChannelSet {
    sample_multiuser_weighted(lambdas, &GainSampler::Plain, rng).0
}

pub(crate) fn sample_multiuser_weighted<R: Rng + ?Sized>(
    lambdas: &MultiuserLambdas,
    sampler: &GainSampler,
    rng: &mut R,
) -> (MultiuserChannelSet, f64) {
    let n = lambdas.users();
    let mut weight = 1.0;
    let g_p = (0..n)
        .map(|i| {
            let (g, w) = sampler.draw(lambdas.primary(i), rng);
            weight *= w;
            g
        })
        .collect();
    let mut g_uu = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (g, w) = sampler.draw(lambdas.mutual(i, j), rng);
            weight *= w;
            g_uu[i * n + j] = g;
            g_uu[j * n + i] = g;
        }
    }
    (
        MultiuserChannelSet {
            pairs: lambdas.pairs,
            g_p,
            g_uu,
        },
        weight,
    )
}
