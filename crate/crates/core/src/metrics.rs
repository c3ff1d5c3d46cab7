//! Figures of merit for reconstructed states: fidelity, two-qubit
//! concurrence, and negativity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{
    clamped_sqrts, hermitian_eigvals, partial_transpose, psd_sqrt, trace_norm, ComplexMatrix,
    DensityMatrix, PureState, C64,
};

/// Raw values may overshoot `[0, 1]` by this much before being clamped.
pub const METRIC_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Fidelity,
    Concurrence,
    Negativity,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Fidelity => "fidelity",
            MetricKind::Concurrence => "concurrence",
            MetricKind::Negativity => "negativity",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" => Ok(MetricKind::Fidelity),
            "concurrence" => Ok(MetricKind::Concurrence),
            "negativity" => Ok(MetricKind::Negativity),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
}

fn checked(kind: MetricKind, raw: f64) -> Result<MetricValue> {
    if !(-METRIC_SLACK..=1.0 + METRIC_SLACK).contains(&raw) {
        return Err(Error::MetricOutOfRange {
            metric: kind.name(),
            value: raw,
        });
    }
    Ok(MetricValue {
        kind,
        value: raw.clamp(0.0, 1.0),
    })
}

/// `(Tr sqrt(sqrt(a) b sqrt(a)))^2`
pub fn fidelity(rho_in: &DensityMatrix, rho_x: &DensityMatrix) -> Result<MetricValue> {
    if rho_in.dim() != rho_x.dim() {
        return Err(Error::invalid(format!(
            "fidelity of states with dimensions {} and {}",
            rho_in.dim(),
            rho_x.dim()
        )));
    }
    let s = psd_sqrt(rho_in.matrix())?;
    let inner = &(&s * rho_x.matrix()) * &s;
    let root_trace: f64 = clamped_sqrts(&hermitian_eigvals(&inner)?, 1.0).iter().sum();
    checked(MetricKind::Fidelity, root_trace * root_trace)
}

/// `<psi|rho|psi>`, which equals the general fidelity when one argument is pure.
pub fn fidelity_pure(psi: &PureState, rho: &DensityMatrix) -> Result<MetricValue> {
    if psi.dim() != rho.dim() {
        return Err(Error::invalid(format!(
            "fidelity of states with dimensions {} and {}",
            psi.dim(),
            rho.dim()
        )));
    }
    checked(MetricKind::Fidelity, rho.expectation(psi))
}

fn sigma_y_sigma_y() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m
}

/// Wootters concurrence of a two-qubit state.
///
/// The `lambda_i` are the square roots of the eigenvalues of `rho * rho_tilde`;
/// they are computed from the Hermitian `sqrt(rho) rho_tilde sqrt(rho)`, which
/// has the same spectrum.
pub fn concurrence(rho: &DensityMatrix) -> Result<MetricValue> {
    if rho.dim() != 4 {
        return Err(Error::invalid(format!(
            "concurrence needs a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let yy = sigma_y_sigma_y();
    let tilde = &(&yy * &rho.matrix().conj()) * &yy;
    let s = psd_sqrt(rho.matrix())?;
    let r = &(&s * &tilde) * &s;
    let r = (&r + &r.dagger()).scale(0.5);
    let mut lambdas = clamped_sqrts(&hermitian_eigvals(&r)?, 1.0);
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    checked(MetricKind::Concurrence, c.max(0.0))
}

/// `(||rho^{T_A}||_1 - 1) / 2`, transposing the first factor.
pub fn negativity(rho: &DensityMatrix, dim_a: usize, dim_b: usize) -> Result<MetricValue> {
    if rho.dim() != dim_a * dim_b {
        return Err(Error::invalid(format!(
            "state of dimension {} is not {dim_a}x{dim_b}",
            rho.dim()
        )));
    }
    let pt = partial_transpose(rho.matrix(), dim_a, dim_b)?;
    let n = (trace_norm(&pt)? - 1.0) / 2.0;
    // The upper bound for a d x d system is (d - 1) / 2; in scope that is 1.
    let bound = (dim_a.min(dim_b) as f64 - 1.0) / 2.0;
    if n > bound.max(1.0) + METRIC_SLACK || n < -METRIC_SLACK {
        return Err(Error::MetricOutOfRange {
            metric: "negativity",
            value: n,
        });
    }
    Ok(MetricValue {
        kind: MetricKind::Negativity,
        value: n.max(0.0),
    })
}

/// Strict `C > 1/sqrt(2)`.
pub fn chsh_violation_possible(c: &MetricValue) -> Result<bool> {
    if c.kind != MetricKind::Concurrence {
        return Err(Error::invalid(format!(
            "CHSH threshold applies to concurrence, not {}",
            c.kind
        )));
    }
    Ok(c.value > std::f64::consts::FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::tensor_product;
    use crate::qlinalg::test_util::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn ket(v: &[(f64, f64)]) -> PureState {
        PureState::normalized(v.iter().map(|&(r, i)| C64::new(r, i)).collect()).unwrap()
    }

    fn phi_state(phi: f64) -> PureState {
        let e = C64::from_polar(FRAC_1_SQRT_2, phi);
        PureState::new(vec![
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::default(),
            C64::default(),
            e,
        ])
        .unwrap()
    }

    fn local_unitary<R: rand::Rng>(rng: &mut R, da: usize, db: usize) -> ComplexMatrix {
        tensor_product(&random_unitary(rng, da), &random_unitary(rng, db))
    }

    #[test]
    fn fidelity_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let rho = random_density(&mut rng, 3);
        assert!((fidelity(&rho, &rho).unwrap().value - 1.0).abs() < 1e-9);
        let zero = ket(&[(1.0, 0.0), (0.0, 0.0)]).density();
        let one = ket(&[(0.0, 0.0), (1.0, 0.0)]).density();
        assert!(fidelity(&zero, &one).unwrap().value.abs() < 1e-12);
        assert!(fidelity(&zero, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn fidelity_pure_shortcut_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [2, 3, 4, 9] {
            for _ in 0..10 {
                let psi = random_pure(&mut rng, d);
                let rho = random_density(&mut rng, d);
                let a = fidelity(&psi.density(), &rho).unwrap().value;
                let b = fidelity(&rho, &psi.density()).unwrap().value;
                let c = fidelity_pure(&psi, &rho).unwrap().value;
                assert!((a - c).abs() < 1e-9, "d={d}: {a} vs {c}");
                assert!((b - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fidelity_symmetric_and_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for d in [2, 3, 4] {
            for _ in 0..10 {
                let a = random_density(&mut rng, d);
                let b = random_density(&mut rng, d);
                let fab = fidelity(&a, &b).unwrap().value;
                let fba = fidelity(&b, &a).unwrap().value;
                assert!((fab - fba).abs() < 1e-9);
                let u = random_unitary(&mut rng, d);
                let f2 = fidelity(&a.conjugate_by(&u), &b.conjugate_by(&u))
                    .unwrap()
                    .value;
                assert!((fab - f2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn concurrence_of_phi_family() {
        for j in 0..100 {
            let phi = 2.0 * PI * j as f64 / 100.0;
            let c = concurrence(&phi_state(phi).density()).unwrap().value;
            assert!((c - 1.0).abs() < 1e-10, "phi={phi} c={c}");
        }
    }

    #[test]
    fn concurrence_zero_cases() {
        assert!(
            concurrence(&DensityMatrix::maximally_mixed(4))
                .unwrap()
                .value
                < 1e-12
        );
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let a = random_pure(&mut rng, 2);
            let b = random_pure(&mut rng, 2);
            let prod = a.tensor(&b).density();
            assert!(concurrence(&prod).unwrap().value <= 1e-9);
            assert!(negativity(&prod, 2, 2).unwrap().value <= 1e-9);
        }
        assert!(concurrence(&DensityMatrix::maximally_mixed(9)).is_err());
    }

    #[test]
    fn negativity_cases() {
        let bell = phi_state(0.0).density();
        assert!((negativity(&bell, 2, 2).unwrap().value - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let a = random_pure(&mut rng, 3);
            let b = random_pure(&mut rng, 3);
            assert!(negativity(&a.tensor(&b).density(), 3, 3).unwrap().value <= 1e-9);
        }
        assert!(negativity(&bell, 3, 3).is_err());
    }

    #[test]
    fn negativity_is_half_concurrence_on_pure_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let rho = random_pure(&mut rng, 4).density();
            let c = concurrence(&rho).unwrap().value;
            let n = negativity(&rho, 2, 2).unwrap().value;
            assert!((n - c / 2.0).abs() < 1e-9, "n={n} c={c}");
        }
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 4);
            let u = local_unitary(&mut rng, 2, 2);
            let r2 = rho.conjugate_by(&u);
            let (c1, c2) = (
                concurrence(&rho).unwrap().value,
                concurrence(&r2).unwrap().value,
            );
            assert!((c1 - c2).abs() < 1e-9);
            let (n1, n2) = (
                negativity(&rho, 2, 2).unwrap().value,
                negativity(&r2, 2, 2).unwrap().value,
            );
            assert!((n1 - n2).abs() < 1e-9);
        }
        for _ in 0..10 {
            let rho = random_pure(&mut rng, 9).density();
            let u = local_unitary(&mut rng, 3, 3);
            let n1 = negativity(&rho, 3, 3).unwrap().value;
            let n2 = negativity(&rho.conjugate_by(&u), 3, 3).unwrap().value;
            assert!((n1 - n2).abs() < 1e-9);
        }
    }

    #[test]
    fn chsh_threshold() {
        let c = |v| MetricValue {
            kind: MetricKind::Concurrence,
            value: v,
        };
        assert!(chsh_violation_possible(&c(1.0)).unwrap());
        assert!(!chsh_violation_possible(&c(0.70)).unwrap());
        assert!(!chsh_violation_possible(&c(FRAC_1_SQRT_2)).unwrap());
        let f = MetricValue {
            kind: MetricKind::Fidelity,
            value: 1.0,
        };
        assert!(chsh_violation_possible(&f).is_err());
    }

    #[test]
    fn out_of_band_values_are_errors() {
        assert!(checked(MetricKind::Fidelity, 1.0 + 1e-6).is_err());
        assert_eq!(
            checked(MetricKind::Fidelity, 1.0 + 1e-10).unwrap().value,
            1.0
        );
        assert_eq!(checked(MetricKind::Fidelity, -1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn metric_names_round_trip() {
        for k in [
            MetricKind::Fidelity,
            MetricKind::Concurrence,
            MetricKind::Negativity,
        ] {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
        assert!("purity".parse::<MetricKind>().is_err());
    }
}
