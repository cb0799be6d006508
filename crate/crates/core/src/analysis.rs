//! Monte Carlo curves of miss and joint-success probabilities over SNR.
//!
//! Trials sample channels only and average the closed-form conditional
//! probabilities from [`crate::protocols`]. One channel draw per trial is
//! reused at every grid point, and any two sweeps with the same seed see the
//! same draws, so comparisons between schemes are made on common random
//! numbers.

use serde::{Deserialize, Serialize};

use crate::channel::{
    sample_multiuser_weighted, sample_weighted, GainSampler, LinkLambdas, MultiuserLambdas,
};
use crate::error::{positive, Error, Result};
use crate::mc::{accumulate, Estimate, McSettings};
use crate::numerics::{fit_diversity_slope, SlopeFit};
use crate::protocols::{
    csa_conditional_miss, mucsa_pair_outcome, mucsa_sampled_outcome, nc_outcome,
    ocsa_conditional_miss, outcome, PairOutcome, ProtocolConfig, Scheme,
};
use crate::stream::{Purpose, StreamFactory};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Protocol evaluated by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepScheme {
    Nc,
    Csa,
    Ocsa,
    /// Multiuser CSA, reported for pair 0. With `sampled_status` the
    /// phase-1 outcomes are drawn instead of enumerated.
    MuCsa { sampled_status: bool },
}

impl SweepScheme {
    pub fn label(&self) -> &'static str {
        match self {
            SweepScheme::Nc => "nc",
            SweepScheme::Csa => "csa",
            SweepScheme::Ocsa => "ocsa",
            SweepScheme::MuCsa { .. } => "mu-csa",
        }
    }

    fn single_pair(&self) -> Option<Scheme> {
        match self {
            SweepScheme::Nc => Some(Scheme::Nc),
            SweepScheme::Csa => Some(Scheme::Csa),
            SweepScheme::Ocsa => Some(Scheme::Ocsa),
            SweepScheme::MuCsa { .. } => None,
        }
    }
}

impl From<Scheme> for SweepScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Nc => SweepScheme::Nc,
            Scheme::Csa => SweepScheme::Csa,
            Scheme::Ocsa => SweepScheme::Ocsa,
        }
    }
}

/// Link statistics for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Links {
    Pair(LinkLambdas),
    Multiuser(MultiuserLambdas),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scheme: SweepScheme,
    pub rho_grid_db: Vec<f64>,
    pub links: Links,
    /// Code split template; its `rho` is replaced by each grid point.
    pub cfg: ProtocolConfig,
    pub mc: McSettings,
    pub sampler: GainSampler,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.mc.validate()?;
        for w in self.rho_grid_db.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Invalid(format!(
                    "rho grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &db in &self.rho_grid_db {
            positive("rho", db_to_linear(db))?;
        }
        match (&self.scheme, &self.links) {
            (SweepScheme::MuCsa { .. }, Links::Multiuser(_)) => Ok(()),
            (SweepScheme::MuCsa { .. }, Links::Pair(_)) => Err(Error::Invalid(
                "mu-csa needs multiuser link statistics".into(),
            )),
            (_, Links::Multiuser(_)) => Err(Error::Invalid(format!(
                "{} needs single-pair link statistics",
                self.scheme.label()
            ))),
            (_, Links::Pair(l)) => LinkLambdas::new(l.pt, l.pr, l.tr).map(|_| ()),
        }
    }

    fn configs(&self) -> Vec<ProtocolConfig> {
        self.rho_grid_db
            .iter()
            .map(|&db| self.cfg.at_rho(db_to_linear(db)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rho_db: f64,
    pub miss_t: Estimate,
    pub miss_r: Estimate,
    pub joint_success: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub points: Vec<SweepPoint>,
}

/// Averages the conditional probabilities of `spec.scheme` over channel
/// draws at every grid point. False-alarm curves coincide with miss curves.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cfgs = spec.configs();
    let k = cfgs.len();
    let streams = StreamFactory::new(spec.mc.seed);
    let sampler = &spec.sampler;

    let accs = match (&spec.links, spec.scheme) {
        (Links::Pair(lambdas), scheme) => {
            let scheme = scheme.single_pair().expect("validated");
            accumulate(&spec.mc, 3 * k, |t, out| {
                let (ch, w) = sample_weighted(lambdas, sampler, &mut streams.stream(t, Purpose::Channel));
                for (i, cfg) in cfgs.iter().enumerate() {
                    let o = outcome(scheme, cfg, &ch);
                    out[3 * i] = w * o.p_miss_t.value();
                    out[3 * i + 1] = w * o.p_miss_r.value();
                    out[3 * i + 2] = w * o.p_joint_success.value();
                }
            })?
        }
        (Links::Multiuser(lambdas), SweepScheme::MuCsa { sampled_status }) => {
            if !sampled_status {
                // Surface the subset limit before spawning trials.
                let probe = crate::channel::MultiuserChannelSet::new(
                    lambdas.pairs(),
                    vec![1.0; lambdas.users()],
                    vec![1.0; lambdas.users() * lambdas.users()],
                )?;
                mucsa_pair_outcome(&cfgs[0], &probe, 0)?;
            }
            accumulate(&spec.mc, 3 * k, |t, out| {
                let (mch, w) =
                    sample_multiuser_weighted(lambdas, sampler, &mut streams.stream(t, Purpose::Channel));
                let mut status = streams.stream(t, Purpose::Status);
                for (i, cfg) in cfgs.iter().enumerate() {
                    let o = if sampled_status {
                        let s = mucsa_sampled_outcome(cfg, &mch, &mut status);
                        PairOutcome {
                            p_miss_t: s.p_miss[0],
                            p_miss_r: s.p_miss[lambdas.pairs()],
                            p_joint_success: s.p_joint_success[0],
                        }
                    } else {
                        mucsa_pair_outcome(cfg, &mch, 0).expect("pair count checked")
                    };
                    out[3 * i] = w * o.p_miss_t.value();
                    out[3 * i + 1] = w * o.p_miss_r.value();
                    out[3 * i + 2] = w * o.p_joint_success.value();
                }
            })?
        }
        _ => unreachable!("validated"),
    };

    let points = spec
        .rho_grid_db
        .iter()
        .enumerate()
        .map(|(i, &rho_db)| SweepPoint {
            rho_db,
            miss_t: accs[3 * i].estimate(),
            miss_r: accs[3 * i + 1].estimate(),
            joint_success: accs[3 * i + 2].estimate(),
        })
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        points,
    })
}

pub fn estimate_miss_curve(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep(spec)
}

pub fn estimate_joint_success_curve(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep(spec)
}

/// Diversity orders of the two secondaries' miss probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityEstimate {
    pub t: SlopeFit,
    pub r: SlopeFit,
}

/// Fits the miss curves of `result` over grid points in `[lo, hi]` dB.
pub fn diversity_from(result: &SweepResult, window_db: (f64, f64)) -> Result<DiversityEstimate> {
    let inside: Vec<&SweepPoint> = result
        .points
        .iter()
        .filter(|p| p.rho_db >= window_db.0 - 1e-9 && p.rho_db <= window_db.1 + 1e-9)
        .collect();
    if inside.len() < 3 {
        return Err(Error::Invalid(format!(
            "fit window [{}, {}] dB holds {} grid points, need at least 3",
            window_db.0,
            window_db.1,
            inside.len()
        )));
    }
    let fit = |pick: fn(&SweepPoint) -> f64| -> Result<SlopeFit> {
        let mut pts = Vec::with_capacity(inside.len());
        for p in &inside {
            let v = pick(p);
            if !(v > 0.0) {
                return Err(Error::NonPositiveEstimate {
                    rho_db: p.rho_db,
                    value: v,
                });
            }
            pts.push((db_to_linear(p.rho_db), v));
        }
        fit_diversity_slope(&pts)
    };
    Ok(DiversityEstimate {
        t: fit(|p| p.miss_t.mean)?,
        r: fit(|p| p.miss_r.mean)?,
    })
}

pub fn estimate_diversity(spec: &SweepSpec, window_db: (f64, f64)) -> Result<DiversityEstimate> {
    diversity_from(&run_sweep(spec)?, window_db)
}

/// Average NC miss probability over a link with mean gain `lambda`:
/// `½[1 − (1 + 1/(dρλ))^(−1/2)]`.
pub fn nc_miss_closed_form(d: u32, rho: f64, lambda: f64) -> Result<f64> {
    positive("rho", rho)?;
    positive("lambda", lambda)?;
    if d == 0 {
        return Err(crate::error::domain("d", "at least 1", 0.0));
    }
    let x = 1.0 / (d as f64 * rho * lambda);
    Ok(-0.5 * (-0.5 * x.ln_1p()).exp_m1())
}

/// Counts of realizations where a pointwise ordering fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DominanceReport {
    pub realizations: u64,
    pub ocsa_miss_t_above_nc: u64,
    pub ocsa_miss_r_above_nc: u64,
    pub ocsa_joint_below_csa: u64,
    pub ocsa_joint_below_nc: u64,
}

impl DominanceReport {
    pub fn clean(&self) -> bool {
        self.ocsa_miss_t_above_nc == 0
            && self.ocsa_miss_r_above_nc == 0
            && self.ocsa_joint_below_csa == 0
            && self.ocsa_joint_below_nc == 0
    }
}

/// Checks OCSA against NC and CSA on every drawn realization at one SNR.
pub fn dominance_audit(
    lambdas: &LinkLambdas,
    cfg: &ProtocolConfig,
    mc: &McSettings,
) -> Result<DominanceReport> {
    cfg.validate()?;
    let streams = StreamFactory::new(mc.seed);
    let accs = accumulate(mc, 4, |t, out| {
        let (ch, _) = sample_weighted(lambdas, &GainSampler::Plain, &mut streams.stream(t, Purpose::Channel));
        let nc = nc_outcome(cfg, &ch);
        let csa = csa_conditional_miss(cfg, &ch);
        let oc = ocsa_conditional_miss(cfg, &ch);
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        out[0] = flag(oc.p_miss_t > nc.p_miss_t);
        out[1] = flag(oc.p_miss_r > nc.p_miss_r);
        out[2] = flag(oc.p_joint_success < csa.p_joint_success);
        out[3] = flag(oc.p_joint_success < nc.p_joint_success);
    })?;
    let count = |i: usize| {
        let e = accs[i].estimate();
        (e.mean * e.n as f64).round() as u64
    };
    Ok(DominanceReport {
        realizations: mc.n_trials,
        ocsa_miss_t_above_nc: count(0),
        ocsa_miss_r_above_nc: count(1),
        ocsa_joint_below_csa: count(2),
        ocsa_joint_below_nc: count(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::MixtureSampler;

    fn spec(scheme: SweepScheme, grid: Vec<f64>, n: u64, sampler: GainSampler) -> SweepSpec {
        SweepSpec {
            scheme,
            rho_grid_db: grid,
            links: Links::Pair(LinkLambdas::new(1.0, 2.0, 3.0).unwrap()),
            cfg: ProtocolConfig::new(1.0, 0.5, 2).unwrap(),
            mc: McSettings::new(n, 17).with_threads(1),
            sampler,
        }
    }

    #[test]
    fn closed_form_limits() {
        assert!(nc_miss_closed_form(2, 1e-12, 1.0).unwrap() > 0.4999);
        let hi = nc_miss_closed_form(2, 1e8, 1.0).unwrap();
        // ≈ 1 / (4 d ρ λ) at high SNR.
        assert!((hi * 8e8 - 1.0).abs() < 1e-6);
        assert!(nc_miss_closed_form(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn nc_sweep_matches_closed_form() {
        for sampler in [GainSampler::Plain, GainSampler::Mixture(MixtureSampler::default())] {
            let r = run_sweep(&spec(SweepScheme::Nc, vec![0.0, 10.0, 20.0], 100_000, sampler)).unwrap();
            for p in &r.points {
                let exact = nc_miss_closed_form(2, db_to_linear(p.rho_db), 1.0).unwrap();
                assert!(
                    (p.miss_t.mean - exact).abs() <= 4.0 * p.miss_t.std_error,
                    "{} dB: {} ± {} vs {}",
                    p.rho_db,
                    p.miss_t.mean,
                    p.miss_t.std_error,
                    exact
                );
            }
        }
    }

    #[test]
    fn grid_must_increase() {
        let s = spec(SweepScheme::Nc, vec![10.0, 10.0, 20.0], 10, GainSampler::Plain);
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn scheme_and_links_must_agree() {
        let mut s = spec(SweepScheme::MuCsa { sampled_status: false }, vec![0.0], 10, GainSampler::Plain);
        assert!(run_sweep(&s).is_err());
        s.scheme = SweepScheme::Csa;
        s.links = Links::Multiuser(MultiuserLambdas::uniform(2, 1.0).unwrap());
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn too_many_pairs_is_reported() {
        let mut s = spec(SweepScheme::MuCsa { sampled_status: false }, vec![0.0], 10, GainSampler::Plain);
        s.links = Links::Multiuser(MultiuserLambdas::uniform(7, 1.0).unwrap());
        assert!(matches!(run_sweep(&s), Err(Error::SubsetExplosion { .. })));
        s.scheme = SweepScheme::MuCsa { sampled_status: true };
        assert!(run_sweep(&s).is_ok());
    }

    #[test]
    fn common_draws_give_exact_dominance() {
        let grid = vec![0.0, 10.0, 20.0, 30.0];
        let mix = GainSampler::Mixture(MixtureSampler::default());
        let nc = run_sweep(&spec(SweepScheme::Nc, grid.clone(), 20_000, mix.clone())).unwrap();
        let csa = run_sweep(&spec(SweepScheme::Csa, grid.clone(), 20_000, mix.clone())).unwrap();
        let oc = run_sweep(&spec(SweepScheme::Ocsa, grid, 20_000, mix)).unwrap();
        for ((n, c), o) in nc.points.iter().zip(&csa.points).zip(&oc.points) {
            assert!(o.miss_t.mean <= n.miss_t.mean);
            assert!(o.miss_r.mean <= n.miss_r.mean);
            assert!(o.joint_success.mean >= c.joint_success.mean);
            assert!(o.joint_success.mean >= n.joint_success.mean);
        }
    }

    #[test]
    fn standard_error_shrinks_with_trials() {
        let a = run_sweep(&spec(SweepScheme::Csa, vec![10.0], 20_000, GainSampler::Plain)).unwrap();
        let b = run_sweep(&spec(SweepScheme::Csa, vec![10.0], 80_000, GainSampler::Plain)).unwrap();
        let ratio = a.points[0].miss_t.std_error / b.points[0].miss_t.std_error;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let mut s = spec(SweepScheme::Ocsa, vec![0.0, 20.0], 30_000, GainSampler::Mixture(MixtureSampler::default()));
        let one = run_sweep(&s).unwrap();
        s.mc = s.mc.with_threads(3);
        let three = run_sweep(&s).unwrap();
        assert_eq!(one.points, three.points);
    }

    #[test]
    fn nc_diversity_is_one() {
        let grid: Vec<f64> = (10..=20).map(|k| 2.0 * k as f64).collect();
        let s = spec(SweepScheme::Nc, grid, 50_000, GainSampler::Mixture(MixtureSampler::default()));
        let d = estimate_diversity(&s, (20.0, 40.0)).unwrap();
        assert!((d.t.diversity - 1.0).abs() < 0.05, "{}", d.t.diversity);
    }

    #[test]
    fn window_needs_three_points() {
        let r = run_sweep(&spec(SweepScheme::Nc, vec![0.0, 10.0, 20.0], 100, GainSampler::Plain)).unwrap();
        assert!(diversity_from(&r, (5.0, 20.0)).is_err());
        assert!(diversity_from(&r, (0.0, 20.0)).is_ok());
    }

    #[test]
    fn audit_finds_no_violations() {
        let l = LinkLambdas::new(1.0, 2.0, 3.0).unwrap();
        let cfg = ProtocolConfig::new(10.0, 0.5, 2).unwrap();
        let r = dominance_audit(&l, &cfg, &McSettings::new(50_000, 3)).unwrap();
        assert_eq!(r.realizations, 50_000);
        assert!(r.clean(), "{r:?}");
    }
}
