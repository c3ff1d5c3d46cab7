//! Self-check suite behind `qstatten validate`.
//!
//! Every check reports the worst value it measured next to its tolerance, so
//! the table shows how much headroom each invariant has.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};

use crate::channel::RngStream;
use crate::estimator::{params_to_density, CholeskyParams};
use crate::metrics::{concurrence, fidelity, negativity};
use crate::povm::{
    product_povm, qutrit_fiducial, sic_povm, validate_povm, weyl_heisenberg_orbit, PovmSet,
};
use crate::qlinalg::{hermitian_eigvals, PureState, C64};
use crate::states::{phase_sample, Family};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    /// Worst defect observed; the check passes when it does not exceed `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }

    /// `tolerance - measured`; negative for failures.
    pub fn margin(&self) -> f64 {
        self.tolerance - self.measured
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<40} measured {:>10.3e}  tolerance {:>8.1e}  margin {:>10.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.margin()
        )
    }
}

/// Inputs that fault-injection tests replace.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub qutrit_fiducial: [C64; 3],
    pub seed: u64,
}

impl Default for Fixtures {
    fn default() -> Self {
        Fixtures {
            qutrit_fiducial: qutrit_fiducial(),
            seed: 20_240_501,
        }
    }
}

/// The default fiducial with its last amplitude perturbed, which breaks the
/// equal-overlap property.
pub fn corrupted_fiducial() -> [C64; 3] {
    let mut f = qutrit_fiducial();
    f[2] = C64::new(0.05, 0.0);
    f
}

const POVM_TOL: f64 = 1e-10;
const METRIC_TOL: f64 = 1e-10;
const RATIO_TOL: f64 = 1e-9;
const FUZZ_TOL: f64 = 1e-10;
const FUZZ_SAMPLES: usize = 10_000;

fn povm_checks(label: &str, povm: &PovmSet, out: &mut Vec<CheckOutcome>) {
    let r = validate_povm(povm);
    let mut push = |what: &str, measured: f64| {
        out.push(CheckOutcome {
            name: format!("{label} {what}"),
            measured,
            tolerance: POVM_TOL,
        })
    };
    push("hermiticity", r.hermiticity_defect);
    push("positivity", (-r.min_eigenvalue).max(0.0));
    push("completeness", r.completeness_defect);
    if let Some(d) = r.sic_overlap_defect {
        push("sic-overlap", d);
    }
}

fn random_pure(rng: &mut RngStream, n: usize) -> PureState {
    let amps = (0..n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    PureState::normalized(amps).expect("nonzero Gaussian vector")
}

fn metric_checks(fx: &Fixtures, out: &mut Vec<CheckOutcome>) {
    let worst = |vals: Vec<f64>| vals.into_iter().fold(0.0, f64::max);

    let phi = phase_sample(Family::Phi);
    let c = worst(
        phi.states
            .iter()
            .map(|s| concurrence(&s.density()).map_or(f64::INFINITY, |c| (c.value - 1.0).abs()))
            .collect(),
    );
    out.push(CheckOutcome {
        name: "concurrence of phi family = 1".into(),
        measured: c,
        tolerance: METRIC_TOL,
    });

    let theta = phase_sample(Family::Theta);
    let n = worst(
        theta
            .states
            .iter()
            .map(|s| {
                negativity(&s.density(), 3, 3).map_or(f64::INFINITY, |n| (n.value - 1.0).abs())
            })
            .collect(),
    );
    out.push(CheckOutcome {
        name: "negativity of theta family = 1".into(),
        measured: n,
        tolerance: METRIC_TOL,
    });

    let mut rng = RngStream::derive(fx.seed, &[1]);
    let ratio = worst(
        (0..100)
            .map(|_| {
                let rho = random_pure(&mut rng, 4).density();
                match (concurrence(&rho), negativity(&rho, 2, 2)) {
                    (Ok(c), Ok(n)) => (n.value - c.value / 2.0).abs(),
                    _ => f64::INFINITY,
                }
            })
            .collect(),
    );
    out.push(CheckOutcome {
        name: "negativity = concurrence/2 (pure)".into(),
        measured: ratio,
        tolerance: RATIO_TOL,
    });

    let self_f = worst(
        (0..100)
            .map(|i| {
                let rho = random_pure(&mut rng, if i % 2 == 0 { 3 } else { 9 }).density();
                fidelity(&rho, &rho).map_or(f64::INFINITY, |f| (f.value - 1.0).abs())
            })
            .collect(),
    );
    out.push(CheckOutcome {
        name: "fidelity(rho, rho) = 1".into(),
        measured: self_f,
        tolerance: 1e-8,
    });
}

fn fuzz_check(fx: &Fixtures, out: &mut Vec<CheckOutcome>) {
    for d in [2usize, 3, 4, 9] {
        let mut rng = RngStream::derive(fx.seed, &[2, d as u64]);
        let samples = if d == 9 {
            FUZZ_SAMPLES / 10
        } else {
            FUZZ_SAMPLES
        };
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let t = CholeskyParams::random(d, &mut rng);
            let defect = match params_to_density(&t) {
                Ok(rho) => {
                    let m = rho.matrix();
                    let trace = (m.trace() - C64::new(1.0, 0.0)).norm();
                    let neg = hermitian_eigvals(m).map_or(f64::INFINITY, |ev| (-ev[0]).max(0.0));
                    trace.max(neg).max(m.hermiticity_defect())
                }
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(defect);
        }
        out.push(CheckOutcome {
            name: format!("params_to_density d={d} ({samples} draws)"),
            measured: worst,
            tolerance: FUZZ_TOL,
        });
    }
}

pub fn run_checks_with(fx: &Fixtures) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let q2 = sic_povm(2).expect("d = 2");
    let q3 = match weyl_heisenberg_orbit(&fx.qutrit_fiducial) {
        Ok(p) => p,
        Err(_) => {
            out.push(CheckOutcome {
                name: "qutrit SIC construction".into(),
                measured: f64::INFINITY,
                tolerance: 0.0,
            });
            return out;
        }
    };
    povm_checks("qubit SIC", &q2, &mut out);
    povm_checks("qutrit SIC", &q3, &mut out);
    povm_checks("two-qubit product", &product_povm(&q2, &q2), &mut out);
    povm_checks("two-qutrit product", &product_povm(&q3, &q3), &mut out);
    metric_checks(fx, &mut out);
    fuzz_check(fx, &mut out);
    out
}

pub fn run_checks() -> Vec<CheckOutcome> {
    run_checks_with(&Fixtures::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_defaults() {
        let table = run_checks();
        assert!(table.len() >= 20);
        for c in &table {
            assert!(c.passed(), "{c}");
            assert!(c.margin() >= 0.0);
        }
    }

    #[test]
    fn corrupted_fiducial_fails_by_name() {
        let fx = Fixtures {
            qutrit_fiducial: corrupted_fiducial(),
            ..Fixtures::default()
        };
        let failed: Vec<String> = run_checks_with(&fx)
            .into_iter()
            .filter(|c| !c.passed())
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, vec!["qutrit SIC sic-overlap".to_string()]);
    }

    #[test]
    fn report_line_shows_margin() {
        let c = CheckOutcome {
            name: "x".into(),
            measured: 2e-10,
            tolerance: 1e-10,
        };
        let line = c.to_string();
        assert!(
            line.starts_with("FAIL") && line.contains("margin"),
            "{line}"
        );
    }
}
