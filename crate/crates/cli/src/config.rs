//! Experiment configuration: TOML (or JSON) files plus dotted-key overrides.

use std::path::Path;

use clap::ValueEnum;
use csa_core::analysis::SweepScheme;
use csa_core::capacity::ActivityModel;
use csa_core::channel::{GainSampler, LinkLambdas, LinkParams, MixtureSampler, MultiuserLambdas};
use csa_core::mc::McSettings;
use csa_core::protocols::{ProtocolConfig, Scheme};
use serde::{Deserialize, Serialize};
use toml_edit::{DocumentMut, Item, TableLike};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MissSweep,
    JointSweep,
    Diversity,
    CapacityErgodic,
    CapacityOutage,
    Imperfect,
    Throughput,
    Multiuser,
    Selfcheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MissSweep => "miss-sweep",
            ExperimentKind::JointSweep => "joint-sweep",
            ExperimentKind::Diversity => "diversity",
            ExperimentKind::CapacityErgodic => "capacity-ergodic",
            ExperimentKind::CapacityOutage => "capacity-outage",
            ExperimentKind::Imperfect => "imperfect",
            ExperimentKind::Throughput => "throughput",
            ExperimentKind::Multiuser => "multiuser",
            ExperimentKind::Selfcheck => "selfcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Nc,
    Csa,
    Ocsa,
    MuCsa,
}

impl SchemeName {
    pub fn single_pair(self) -> Option<Scheme> {
        match self {
            SchemeName::Nc => Some(Scheme::Nc),
            SchemeName::Csa => Some(Scheme::Csa),
            SchemeName::Ocsa => Some(Scheme::Ocsa),
            SchemeName::MuCsa => None,
        }
    }
}

fn default_schemes() -> Vec<SchemeName> {
    vec![SchemeName::Nc, SchemeName::Csa, SchemeName::Ocsa]
}

/// Everything an experiment run needs. Every section is optional; `seed`
/// and `n_trials` are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub n_trials: u64,
    /// Worker threads; 0 picks one per core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeName>,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub links: LinksSection,
    #[serde(default)]
    pub multiuser: MultiuserSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub activity: ActivitySection,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub imperfect: ImperfectSection,
    #[serde(default)]
    pub throughput: ThroughputSection,
    #[serde(default)]
    pub diversity: DiversitySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub alpha: f64,
    pub d: u32,
    /// Explicit phase lengths; override the split implied by `alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<u32>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            alpha: 0.5,
            d: 2,
            d1: None,
            d2: None,
        }
    }
}

/// SNR grid in dB: an explicit list, or `start..=stop` by `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_db: Option<Vec<f64>>,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            rho_db: None,
            start_db: 0.0,
            stop_db: 40.0,
            step_db: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinksSection {
    pub pt: LinkParams,
    pub pr: LinkParams,
    pub tr: LinkParams,
}

impl Default for LinksSection {
    fn default() -> Self {
        LinksSection {
            pt: 1.0.into(),
            pr: 2.0.into(),
            tr: 3.0.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiuserSection {
    /// Pair count used by sweeps that include `mu-csa`.
    pub pairs: usize,
    /// Mean gain of every link unless `primary`/`mutual` are given.
    pub lambda: f64,
    /// `2·pairs` primary-to-user gains; transmitters first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary: Option<Vec<f64>>,
    /// Row-major `2·pairs × 2·pairs` symmetric matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutual: Option<Vec<f64>>,
    pub sampled_status: bool,
    /// Pair counts compared by the `multiuser` experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_counts: Option<Vec<usize>>,
    /// Pair whose capacity the `multiuser` experiment reports.
    pub pair_index: usize,
}

impl Default for MultiuserSection {
    fn default() -> Self {
        MultiuserSection {
            pairs: 2,
            lambda: 1.0,
            primary: None,
            mutual: None,
            sampled_status: false,
            pair_counts: None,
            pair_index: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Plain,
    #[default]
    Mixture,
}

/// Gain sampler for miss and joint-success sweeps. Capacity experiments
/// always sample the nominal law.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub kind: SamplerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nominal_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivitySection {
    pub p_theta_t: f64,
    pub p_theta_joint: f64,
    pub t_c: u32,
}

impl Default for ActivitySection {
    fn default() -> Self {
        ActivitySection {
            p_theta_t: 0.7,
            p_theta_joint: 0.7,
            t_c: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySection {
    pub epsilons: Vec<f64>,
    /// Report negative lower bounds as 0.
    pub clamp_lower: bool,
}

impl Default for CapacitySection {
    fn default() -> Self {
        CapacitySection {
            epsilons: vec![0.01, 0.05, 0.1],
            clamp_lower: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImperfectSection {
    /// Metric estimation noise variances.
    pub sigma2: Vec<f64>,
}

impl Default for ImperfectSection {
    fn default() -> Self {
        ImperfectSection {
            sigma2: vec![1.0, 0.1, 0.01],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThroughputSection {
    pub t_cr: f64,
    /// Feedback load `T_FB / T_CR`.
    pub w1: Vec<f64>,
    /// Backoff load `β / (T_CR·λ_pt)`.
    pub w2: Vec<f64>,
    pub sigma2: f64,
}

impl Default for ThroughputSection {
    fn default() -> Self {
        let grid = vec![0.0, 0.075, 0.15, 0.225, 0.3];
        ThroughputSection {
            t_cr: 1.0,
            w1: grid.clone(),
            w2: grid,
            sigma2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiversitySection {
    pub window_db: [f64; 2],
}

impl Default for DiversitySection {
    fn default() -> Self {
        DiversitySection {
            window_db: [20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Reads a config file, applies `key=value` overrides and parses it.
    /// Files ending in `.json` are read as JSON; anything else as TOML.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let toml_text = if path.extension().is_some_and(|e| e == "json") {
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            cfg.to_toml()?
        } else {
            text
        };
        Self::from_toml_with(&toml_text, overrides)
            .map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: DocumentMut = text
            .parse()
            .map_err(|e: toml_edit::TomlError| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::from_str(&doc.to_string()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The config minus settings that cannot change results (thread
    /// count, output destination); echoed into JSON output.
    pub fn plan(&self) -> ExperimentConfig {
        let mut p = self.clone();
        p.threads = 0;
        p.output.path = None;
        p
    }

    pub fn mc(&self) -> McSettings {
        McSettings::new(self.n_trials, self.seed).with_threads(self.threads)
    }

    /// Protocol parameters at linear SNR `rho`.
    pub fn protocol_at(&self, rho: f64) -> Result<ProtocolConfig, CliError> {
        let p = &self.protocol;
        let cfg = match (p.d1, p.d2) {
            (None, None) => ProtocolConfig::new(rho, p.alpha, p.d)?,
            (Some(d1), d2) => ProtocolConfig::with_split(rho, p.alpha, d1, d2.unwrap_or(p.d.saturating_sub(d1)))?,
            (None, Some(d2)) => ProtocolConfig::with_split(rho, p.alpha, p.d.saturating_sub(d2), d2)?,
        };
        Ok(cfg)
    }

    pub fn rho_grid_db(&self) -> Result<Vec<f64>, CliError> {
        if let Some(list) = &self.grid.rho_db {
            return Ok(list.clone());
        }
        let g = &self.grid;
        if !(g.step_db > 0.0) || !(g.stop_db >= g.start_db) {
            return Err(CliError::Config(format!(
                "grid needs step_db > 0 and stop_db >= start_db, got start {} stop {} step {}",
                g.start_db, g.stop_db, g.step_db
            )));
        }
        let n = ((g.stop_db - g.start_db) / g.step_db + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| g.start_db + i as f64 * g.step_db).collect())
    }

    pub fn lambdas(&self) -> Result<LinkLambdas, CliError> {
        let l = &self.links;
        Ok(LinkLambdas::from_params(l.pt, l.pr, l.tr)?)
    }

    /// Multiuser gains for `pairs` pairs.
    pub fn multiuser_lambdas(&self, pairs: usize) -> Result<MultiuserLambdas, CliError> {
        let m = &self.multiuser;
        match (&m.primary, &m.mutual) {
            (None, None) => Ok(MultiuserLambdas::uniform(pairs, m.lambda)?),
            (Some(p), Some(u)) if pairs == m.pairs => {
                Ok(MultiuserLambdas::new(pairs, p.clone(), u.clone())?)
            }
            (Some(_), Some(_)) => Err(CliError::Config(format!(
                "explicit multiuser gains describe {} pairs, {} requested",
                m.pairs, pairs
            ))),
            _ => Err(CliError::Config(
                "multiuser.primary and multiuser.mutual must be given together".into(),
            )),
        }
    }

    pub fn sweep_scheme(&self, s: SchemeName) -> SweepScheme {
        match s.single_pair() {
            Some(p) => p.into(),
            None => SweepScheme::MuCsa {
                sampled_status: self.multiuser.sampled_status,
            },
        }
    }

    pub fn gain_sampler(&self) -> Result<GainSampler, CliError> {
        let s = &self.sampler;
        Ok(match s.kind {
            SamplerKind::Plain => GainSampler::Plain,
            SamplerKind::Mixture => {
                let d = MixtureSampler::default();
                GainSampler::Mixture(MixtureSampler::new(
                    s.nominal_weight.unwrap_or(d.nominal_weight),
                    s.scales.clone().unwrap_or(d.scales),
                )?)
            }
        })
    }

    pub fn activity(&self) -> Result<ActivityModel, CliError> {
        let a = &self.activity;
        Ok(ActivityModel::new(a.p_theta_t, a.p_theta_joint, a.t_c)?)
    }

    /// Single-pair schemes; `mu-csa` belongs to the `multiuser` experiment.
    pub fn pair_schemes(&self) -> Result<Vec<Scheme>, CliError> {
        self.schemes
            .iter()
            .map(|s| {
                s.single_pair().ok_or_else(|| {
                    CliError::Config(
                        "capacity experiments take nc, csa and ocsa; use the multiuser experiment for mu-csa".into(),
                    )
                })
            })
            .collect()
    }
}

/// Sets `a.b.c = value` in `doc`, creating tables as needed. The value is
/// parsed as a TOML value and falls back to a bare string.
fn apply_override(doc: &mut DocumentMut, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').map(str::trim).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` has an empty component")));
    }
    let raw = raw.trim();
    let value: toml_edit::Value = raw.parse().unwrap_or_else(|_| raw.into());
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut cur: &mut dyn TableLike = doc.as_table_mut();
    for part in parents {
        if cur.get(part).is_none() {
            cur.insert(part, toml_edit::table());
        }
        cur = cur
            .get_mut(part)
            .and_then(Item::as_table_like_mut)
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    cur.insert(last, Item::Value(value));
    Ok(())
}
