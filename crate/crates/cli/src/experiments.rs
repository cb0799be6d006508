//! One table-producing function per experiment kind.

use csa_core::analysis::{db_to_linear, diversity_from, run_sweep, Links, SweepResult, SweepSpec};
use csa_core::capacity::{
    ergodic_capacity, imperfect_capacity, multiuser_pair_capacity, outage_capacities,
    throughput_estimate, wrong_relay_bound, CapacityEstimate, OverheadParams,
};

use crate::config::{ExperimentConfig, ExperimentKind, SchemeName};
use crate::output::Table;
use crate::{selfcheck, CliError};

/// Runs `kind`, printing one summary line per grid point to stderr.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Table, CliError> {
    match kind {
        ExperimentKind::MissSweep => miss_sweep(cfg),
        ExperimentKind::JointSweep => joint_sweep(cfg),
        ExperimentKind::Diversity => diversity(cfg),
        ExperimentKind::CapacityErgodic => capacity_ergodic(cfg),
        ExperimentKind::CapacityOutage => capacity_outage(cfg),
        ExperimentKind::Imperfect => imperfect(cfg),
        ExperimentKind::Throughput => throughput(cfg),
        ExperimentKind::Multiuser => multiuser(cfg),
        ExperimentKind::Selfcheck => Ok(selfcheck::run().table),
    }
}

fn sweep(cfg: &ExperimentConfig, scheme: SchemeName) -> Result<SweepResult, CliError> {
    let links = match scheme {
        SchemeName::MuCsa => Links::Multiuser(cfg.multiuser_lambdas(cfg.multiuser.pairs)?),
        _ => Links::Pair(cfg.lambdas()?),
    };
    let spec = SweepSpec {
        scheme: cfg.sweep_scheme(scheme),
        rho_grid_db: cfg.rho_grid_db()?,
        links,
        cfg: cfg.protocol_at(1.0)?,
        mc: cfg.mc(),
        sampler: cfg.gain_sampler()?,
    };
    Ok(run_sweep(&spec)?)
}

fn miss_sweep(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["rho_db", "scheme", "node", "p_miss", "stderr"]);
    for &s in &cfg.schemes {
        let r = sweep(cfg, s)?;
        let label = r.spec.scheme.label();
        for p in &r.points {
            eprintln!(
                "miss-sweep {label} {} dB: p_miss_t {:.4e} p_miss_r {:.4e}",
                p.rho_db, p.miss_t.mean, p.miss_r.mean
            );
            for (node, e) in [("t", p.miss_t), ("r", p.miss_r)] {
                t.push(vec![p.rho_db.into(), label.into(), node.into(), e.mean.into(), e.std_error.into()]);
            }
        }
    }
    Ok(t)
}

fn joint_sweep(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["rho_db", "scheme", "p_joint_success", "stderr"]);
    for &s in &cfg.schemes {
        let r = sweep(cfg, s)?;
        let label = r.spec.scheme.label();
        for p in &r.points {
            eprintln!("joint-sweep {label} {} dB: p_joint {:.6}", p.rho_db, p.joint_success.mean);
            t.push(vec![
                p.rho_db.into(),
                label.into(),
                p.joint_success.mean.into(),
                p.joint_success.std_error.into(),
            ]);
        }
    }
    Ok(t)
}

fn diversity(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["scheme", "node", "diversity", "intercept", "residual", "points"]);
    let [lo, hi] = cfg.diversity.window_db;
    for &s in &cfg.schemes {
        let r = sweep(cfg, s)?;
        let label = r.spec.scheme.label();
        let d = diversity_from(&r, (lo, hi))?;
        eprintln!("diversity {label}: t {:.4} r {:.4}", d.t.diversity, d.r.diversity);
        for (node, f) in [("t", &d.t), ("r", &d.r)] {
            t.push(vec![
                label.into(),
                node.into(),
                f.diversity.into(),
                f.intercept.into(),
                f.residual.into(),
                f.points.len().into(),
            ]);
        }
    }
    Ok(t)
}

fn lower_shown(cfg: &ExperimentConfig, x: f64) -> f64 {
    if cfg.capacity.clamp_lower {
        x.max(0.0)
    } else {
        x
    }
}

fn capacity_ergodic(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["rho_db", "scheme", "lower", "lower_stderr", "upper", "upper_stderr"]);
    let (activity, lambdas, mc) = (cfg.activity()?, cfg.lambdas()?, cfg.mc());
    let schemes = cfg.pair_schemes()?;
    for db in cfg.rho_grid_db()? {
        let pcfg = cfg.protocol_at(db_to_linear(db))?;
        for &s in &schemes {
            let e = ergodic_capacity(s, &activity, &pcfg, &lambdas, &mc)?;
            eprintln!("capacity-ergodic {s} {db} dB: [{:.6}, {:.6}]", e.lower, e.upper);
            push_ergodic(&mut t, cfg, db, s.name(), &e);
        }
    }
    Ok(t)
}

fn push_ergodic(t: &mut Table, cfg: &ExperimentConfig, db: f64, label: &str, e: &CapacityEstimate) {
    t.push(vec![
        db.into(),
        label.into(),
        lower_shown(cfg, e.lower).into(),
        e.lower_std_error.unwrap_or(0.0).into(),
        e.upper.into(),
        e.upper_std_error.unwrap_or(0.0).into(),
    ]);
}

fn capacity_outage(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["rho_db", "scheme", "epsilon", "lower", "upper"]);
    let (activity, lambdas, mc) = (cfg.activity()?, cfg.lambdas()?, cfg.mc());
    let schemes = cfg.pair_schemes()?;
    for db in cfg.rho_grid_db()? {
        let pcfg = cfg.protocol_at(db_to_linear(db))?;
        for &s in &schemes {
            let est = outage_capacities(s, &activity, &pcfg, &lambdas, &cfg.capacity.epsilons, &mc)?;
            eprintln!(
                "capacity-outage {s} {db} dB: {}",
                est.iter()
                    .zip(&cfg.capacity.epsilons)
                    .map(|(e, eps)| format!("eps {eps} [{:.5}, {:.5}]", e.lower, e.upper))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            for (e, &eps) in est.iter().zip(&cfg.capacity.epsilons) {
                t.push(vec![db.into(), s.name().into(), eps.into(), lower_shown(cfg, e.lower).into(), e.upper.into()]);
            }
        }
    }
    Ok(t)
}

fn imperfect(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "rho_db",
        "sigma2",
        "lower",
        "upper",
        "relative_loss",
        "relative_loss_stderr",
        "wrong_relay",
        "wrong_relay_stderr",
        "wrong_relay_bound",
        "wrong_relay_bound_stderr",
    ]);
    let (activity, lambdas, mc) = (cfg.activity()?, cfg.lambdas()?, cfg.mc());
    for db in cfg.rho_grid_db()? {
        let pcfg = cfg.protocol_at(db_to_linear(db))?;
        for &s2 in &cfg.imperfect.sigma2 {
            if !(s2 >= 0.0) {
                return Err(CliError::Config(format!("imperfect.sigma2 must be nonnegative, got {s2}")));
            }
            let sigma = s2.sqrt();
            let e = imperfect_capacity(&activity, &pcfg, &lambdas, sigma, &mc)?;
            let b = wrong_relay_bound(sigma, &lambdas, &mc)?;
            eprintln!(
                "imperfect {db} dB sigma2 {s2}: loss {:.3e} wrong relay {:.4} (bound {:.4})",
                e.relative_loss.mean, e.wrong_relay.mean, b.mean
            );
            t.push(vec![
                db.into(),
                s2.into(),
                lower_shown(cfg, e.capacity.lower).into(),
                e.capacity.upper.into(),
                e.relative_loss.mean.into(),
                e.relative_loss.std_error.into(),
                e.wrong_relay.mean.into(),
                e.wrong_relay.std_error.into(),
                b.mean.into(),
                b.std_error.into(),
            ]);
        }
    }
    Ok(t)
}

fn throughput(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "rho_db",
        "w1",
        "w2",
        "relative_loss",
        "relative_loss_stderr",
        "loss_bound",
        "capacity_lower",
        "capacity_upper",
        "throughput_lower",
        "throughput_upper",
    ]);
    let (activity, lambdas, mc) = (cfg.activity()?, cfg.lambdas()?, cfg.mc());
    let tp = &cfg.throughput;
    if !(tp.sigma2 >= 0.0) {
        return Err(CliError::Config(format!("throughput.sigma2 must be nonnegative, got {}", tp.sigma2)));
    }
    for db in cfg.rho_grid_db()? {
        let pcfg = cfg.protocol_at(db_to_linear(db))?;
        for &w1 in &tp.w1 {
            for &w2 in &tp.w2 {
                let o = OverheadParams::from_loads(tp.t_cr, w1, w2, lambdas.pt)?;
                let e = throughput_estimate(&o, &activity, &pcfg, &lambdas, tp.sigma2.sqrt(), &mc)?;
                eprintln!(
                    "throughput {db} dB w1 {w1} w2 {w2}: loss {:.5} (bound {:.5})",
                    e.relative_loss.mean, e.loss_bound
                );
                t.push(vec![
                    db.into(),
                    w1.into(),
                    w2.into(),
                    e.relative_loss.mean.into(),
                    e.relative_loss.std_error.into(),
                    e.loss_bound.into(),
                    lower_shown(cfg, e.capacity_lower.mean).into(),
                    e.capacity_upper.mean.into(),
                    lower_shown(cfg, e.throughput_lower.mean).into(),
                    e.throughput_upper.mean.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn multiuser(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["rho_db", "pairs", "lower", "lower_stderr", "upper", "upper_stderr"]);
    let (activity, mc) = (cfg.activity()?, cfg.mc());
    let m = &cfg.multiuser;
    let counts = m.pair_counts.clone().unwrap_or_else(|| vec![m.pairs]);
    for db in cfg.rho_grid_db()? {
        let pcfg = cfg.protocol_at(db_to_linear(db))?;
        for &pairs in &counts {
            let lambdas = cfg.multiuser_lambdas(pairs)?;
            let e = multiuser_pair_capacity(m.pair_index, &activity, &pcfg, &lambdas, m.sampled_status, &mc)?;
            eprintln!("multiuser {db} dB M={pairs}: [{:.6}, {:.6}]", e.lower, e.upper);
            t.push(vec![
                db.into(),
                pairs.into(),
                lower_shown(cfg, e.lower).into(),
                e.lower_std_error.unwrap_or(0.0).into(),
                e.upper.into(),
                e.upper_std_error.unwrap_or(0.0).into(),
            ]);
        }
    }
    Ok(t)
}
