//! Estimators checked against oracles written independently of the crate's
//! expansions.

use csa_core::analysis::nc_miss_closed_form;
use csa_core::channel::{ChannelSet, MetricTriple};
use csa_core::numerics::gaussian_q;
use csa_core::protocols::{outcome, ProtocolConfig, Scheme};
use csa_core::stream::{Purpose, StreamFactory};
use rand::Rng;

fn q(x: f64) -> f64 {
    gaussian_q(x).unwrap().value()
}

/// `∫ Q(√(2dρg)) e^{-g/λ}/λ dg` by composite Simpson after `g = t²`.
fn nc_average_by_simpson(d: u32, rho: f64, lambda: f64) -> f64 {
    let a = 2.0 * d as f64 * rho;
    let f = |t: f64| q((a * t * t).sqrt()) * (-t * t / lambda).exp() * 2.0 * t / lambda;
    let upper = (40.0 * lambda).sqrt();
    let n = 200_000;
    let h = upper / n as f64;
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn nc_closed_form_matches_quadrature() {
    for (d, db, lambda) in [(2, 0.0, 1.0), (2, 20.0, 2.0), (4, 10.0, 0.5), (3, 35.0, 3.0)] {
        let rho = 10f64.powf(db / 10.0);
        let exact = nc_miss_closed_form(d, rho, lambda).unwrap();
        let simpson = nc_average_by_simpson(d, rho, lambda);
        assert!((exact - simpson).abs() <= 1e-9 * exact.max(1e-3), "d={d} {db} dB: {exact} vs {simpson}");
    }
}

/// One protocol run with explicit decoding events: phase-1 outcomes, the
/// phase-2 sender, and each failed node's decoding of the combined
/// codeword. Returns (T_t detected, T_r detected).
fn simulate_once<R: Rng>(scheme: Scheme, cfg: &ProtocolConfig, ch: &ChannelSet, rng: &mut R) -> (bool, bool) {
    let a1 = 2.0 * cfg.d1 as f64 * cfg.rho;
    let a2 = 2.0 * cfg.d2 as f64 * cfg.rho;
    let full = 2.0 * cfg.d as f64 * cfg.rho;
    let decodes = |rng: &mut R, p_fail: f64| rng.random::<f64>() >= p_fail;
    match scheme {
        Scheme::Nc => (
            decodes(rng, q((full * ch.g_pt).sqrt())),
            decodes(rng, q((full * ch.g_pr).sqrt())),
        ),
        Scheme::Csa => {
            let t1 = decodes(rng, q((a1 * ch.g_pt).sqrt()));
            let r1 = decodes(rng, q((a1 * ch.g_pr).sqrt()));
            match (t1, r1) {
                (true, true) => (true, true),
                (true, false) => (true, decodes(rng, q((a1 * ch.g_pr + a2 * ch.g_tr).sqrt()))),
                (false, true) => (decodes(rng, q((a1 * ch.g_pt + a2 * ch.g_tr).sqrt())), true),
                (false, false) => (false, false),
            }
        }
        Scheme::Ocsa => {
            let t1 = decodes(rng, q((a1 * ch.g_pt).sqrt()));
            let r1 = decodes(rng, q((a1 * ch.g_pr).sqrt()));
            let m = MetricTriple { t_p: ch.g_pt + ch.g_pr, t_t: ch.g_pt + ch.g_tr, t_r: ch.g_pr + ch.g_tr };
            // Largest metric among nodes holding the beacon.
            let mut holders = vec![("p", m.t_p)];
            if t1 {
                holders.push(("t", m.t_t));
            }
            if r1 {
                holders.push(("r", m.t_r));
            }
            let sender = holders.iter().fold(holders[0], |best, &h| if h.1 > best.1 { h } else { best }).0;
            let t = t1 || match sender {
                "r" => decodes(rng, q((a1 * ch.g_pt + a2 * ch.g_tr).sqrt())),
                _ => decodes(rng, q((full * ch.g_pt).sqrt())),
            };
            let r = r1 || match sender {
                "t" => decodes(rng, q((a1 * ch.g_pr + a2 * ch.g_tr).sqrt())),
                _ => decodes(rng, q((full * ch.g_pr).sqrt())),
            };
            (t, r)
        }
    }
}

#[test]
fn expansions_match_event_simulation() {
    let n = 400_000u64;
    let channels = [
        ChannelSet::new(0.05, 0.3, 1.2).unwrap(),
        ChannelSet::new(0.4, 0.02, 0.1).unwrap(),
        ChannelSet::new(0.01, 0.015, 3.0).unwrap(),
    ];
    let streams = StreamFactory::new(2718);
    for (ci, ch) in channels.iter().enumerate() {
        for (db, alpha, d) in [(0.0, 0.5, 2), (5.0, 0.25, 4)] {
            let cfg = ProtocolConfig::new(10f64.powf(db / 10.0), alpha, d).unwrap();
            for scheme in Scheme::ALL {
                let expected = outcome(scheme, &cfg, ch);
                let mut rng = streams.stream(ci as u64, Purpose::Status);
                let (mut miss_t, mut miss_r, mut joint) = (0u64, 0u64, 0u64);
                for _ in 0..n {
                    let (t, r) = simulate_once(scheme, &cfg, ch, &mut rng);
                    miss_t += u64::from(!t);
                    miss_r += u64::from(!r);
                    joint += u64::from(t && r);
                }
                for (name, count, p) in [
                    ("miss_t", miss_t, expected.p_miss_t.value()),
                    ("miss_r", miss_r, expected.p_miss_r.value()),
                    ("joint", joint, expected.p_joint_success.value()),
                ] {
                    let freq = count as f64 / n as f64;
                    let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
                    assert!(
                        (freq - p).abs() <= 4.5 * se,
                        "{scheme} channel {ci} {db} dB {name}: simulated {freq} vs expansion {p}"
                    );
                }
            }
        }
    }
}
