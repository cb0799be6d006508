//! Deterministic identity checks that need no configuration.

use csa_core::channel::MetricTriple;
use csa_core::numerics::{alternating_moment, lemma1_integral};
use csa_core::protocols::{ocsa_select_relay, NodeStatus, RelayIdentity};

use crate::output::Table;

pub struct SelfCheck {
    pub table: Table,
    pub passed: bool,
}

struct Check {
    name: &'static str,
    cases: u64,
    failures: u64,
    detail: String,
}

/// `A(M, n)` vanishes below `n = M` and equals `(-1)^M M!` at `n = M`.
fn alternating_moments() -> Check {
    let (mut cases, mut failures) = (0, 0);
    for m in 1..=15u32 {
        for n in 0..=m {
            cases += 1;
            let expected: i128 = if n < m {
                0
            } else {
                let f: i128 = (1..=i128::from(m)).product();
                if m % 2 == 0 { f } else { -f }
            };
            if alternating_moment(m, n) != Ok(expected) {
                failures += 1;
            }
        }
    }
    Check {
        name: "alternating-moment",
        cases,
        failures,
        detail: "0 <= n <= M <= 15".into(),
    }
}

/// Log-log slope of the product integral between rho = 1e4 and 1e6.
fn lemma1_slopes() -> Check {
    let mut failures = 0;
    let mut slopes = Vec::new();
    for m in 1..=3usize {
        let k = vec![1.0; m];
        let slope = match (lemma1_integral(&k, 1e4), lemma1_integral(&k, 1e6)) {
            (Ok(a), Ok(b)) => (b.value().ln() - a.value().ln()) / 100f64.ln(),
            _ => f64::NAN,
        };
        if !((slope + m as f64).abs() <= 0.1) {
            failures += 1;
        }
        slopes.push(format!("M={m}: {slope:.4}"));
    }
    Check {
        name: "lemma1-slope",
        cases: 3,
        failures,
        detail: slopes.join("; "),
    }
}

/// Relay choice against a direct reading of the selection rules over every
/// status and every metric pattern on {1, 2, 3}, ties included.
fn tie_breaks() -> Check {
    let (mut cases, mut failures) = (0, 0);
    let vals = [1.0, 2.0, 3.0];
    for status in NodeStatus::ALL {
        for &t_p in &vals {
            for &t_t in &vals {
                for &t_r in &vals {
                    cases += 1;
                    let m = MetricTriple { t_p, t_t, t_r };
                    let tx_wins = status.t_success
                        && t_t > t_p
                        && (!status.r_success || t_t >= t_r);
                    let rx_wins = status.r_success
                        && t_r > t_p
                        && (!status.t_success || t_r > t_t);
                    let expected = if tx_wins {
                        RelayIdentity::SecondaryTx
                    } else if rx_wins {
                        RelayIdentity::SecondaryRx
                    } else {
                        RelayIdentity::Primary
                    };
                    let scaled = MetricTriple { t_p: 7.5 * t_p, t_t: 7.5 * t_t, t_r: 7.5 * t_r };
                    if ocsa_select_relay(&m, status) != expected
                        || ocsa_select_relay(&scaled, status) != expected
                    {
                        failures += 1;
                    }
                }
            }
        }
    }
    Check {
        name: "relay-tie-break",
        cases,
        failures,
        detail: "4 statuses x 27 metric patterns, plus scaling".into(),
    }
}

pub fn run() -> SelfCheck {
    let mut table = Table::new(&["check", "cases", "failures", "pass", "detail"]);
    let mut passed = true;
    for c in [alternating_moments(), lemma1_slopes(), tie_breaks()] {
        let ok = c.failures == 0;
        passed &= ok;
        eprintln!("selfcheck {}: {}", c.name, if ok { "pass" } else { "FAIL" });
        table.push(vec![c.name.into(), c.cases.into(), c.failures.into(), ok.into(), c.detail.into()]);
    }
    SelfCheck { table, passed }
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        let r = super::run();
        assert!(r.passed, "{:?}", r.table);
        assert_eq!(r.table.rows.len(), 3);
    }
}
