//! Deterministic input-state samples.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::qlinalg::{PureState, C64};

pub const QUBIT_SAMPLE_SIZE: usize = 220;
pub const PHASE_SAMPLE_SIZE: usize = 100;
const QUTRIT_POLAR_STEPS: usize = 6;
const QUTRIT_PHASE_STEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateParams {
    Bloch {
        theta: f64,
        phi: f64,
    },
    Qutrit {
        theta1: f64,
        theta2: f64,
        phi1: f64,
        phi2: f64,
    },
    Phase {
        phi: f64,
    },
}

impl fmt::Display for StateParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateParams::Bloch { theta, phi } => write!(f, "theta={theta:.17e};phi={phi:.17e}"),
            StateParams::Qutrit {
                theta1,
                theta2,
                phi1,
                phi2,
            } => write!(
                f,
                "theta1={theta1:.17e};theta2={theta2:.17e};phi1={phi1:.17e};phi2={phi2:.17e}"
            ),
            StateParams::Phase { phi } => write!(f, "phi={phi:.17e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateSample {
    pub label: String,
    pub states: Vec<PureState>,
    pub parameters: Vec<StateParams>,
}

impl StateSample {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, PureState::dim)
    }

    /// Keeps the first `n` states.
    pub fn truncated(mut self, n: usize) -> Self {
        self.states.truncate(n);
        self.parameters.truncate(n);
        self
    }

    /// Keeps `n` states at evenly spaced indices `floor(i * len / n)`.
    pub fn subsampled(self, n: usize) -> Self {
        let len = self.len();
        if n >= len {
            return self;
        }
        let pick: Vec<usize> = (0..n).map(|i| i * len / n).collect();
        StateSample {
            label: self.label,
            states: pick.iter().map(|&i| self.states[i].clone()).collect(),
            parameters: pick.iter().map(|&i| self.parameters[i]).collect(),
        }
    }

    /// One row per state: label, parameters, then `re,im` amplitude pairs.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# label\tparameters\tamplitudes(re,im)...")?;
        for (i, (psi, p)) in self.states.iter().zip(&self.parameters).enumerate() {
            write!(out, "{}[{i}]\t{p}", self.label)?;
            for z in psi.amplitudes() {
                write!(out, "\t{:.17e},{:.17e}", z.re, z.im)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`
pub fn bloch_qubit(theta: f64, phi: f64) -> PureState {
    PureState::normalized(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
    .expect("unit vector")
}

/// 220 points of a spherical Fibonacci lattice.
pub fn qubit_sample() -> StateSample {
    let n = QUBIT_SAMPLE_SIZE;
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let mut states = Vec::with_capacity(n);
    let mut parameters = Vec::with_capacity(n);
    for i in 0..n {
        let z = 1.0 - (2 * i + 1) as f64 / n as f64;
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = (2.0 * PI * i as f64 / golden).rem_euclid(2.0 * PI);
        states.push(bloch_qubit(theta, phi));
        parameters.push(StateParams::Bloch { theta, phi });
    }
    StateSample {
        label: "qubit_bloch".into(),
        states,
        parameters,
    }
}

pub fn qutrit_state(theta1: f64, theta2: f64, phi1: f64, phi2: f64) -> PureState {
    PureState::normalized(vec![
        C64::new(theta1.cos(), 0.0),
        C64::from_polar(theta1.sin() * theta2.cos(), phi1),
        C64::from_polar(theta1.sin() * theta2.sin(), phi2),
    ])
    .expect("unit vector")
}

/// 6 x 6 x 12 x 12 = 5184 qutrits; polar angles at `(j + 1/2) pi / 12`,
/// phases at `2 pi j / 12`, with `theta1` outermost and `phi2` innermost.
pub fn qutrit_grid() -> StateSample {
    let polar: Vec<f64> = (0..QUTRIT_POLAR_STEPS)
        .map(|j| (j as f64 + 0.5) * PI / 12.0)
        .collect();
    let phase: Vec<f64> = (0..QUTRIT_PHASE_STEPS)
        .map(|j| 2.0 * PI * j as f64 / 12.0)
        .collect();
    let mut states = Vec::with_capacity(5184);
    let mut parameters = Vec::with_capacity(5184);
    for &theta1 in &polar {
        for &theta2 in &polar {
            for &phi1 in &phase {
                for &phi2 in &phase {
                    states.push(qutrit_state(theta1, theta2, phi1, phi2));
                    parameters.push(StateParams::Qutrit {
                        theta1,
                        theta2,
                        phi1,
                        phi2,
                    });
                }
            }
        }
    }
    StateSample {
        label: "qutrit_grid".into(),
        states,
        parameters,
    }
}

/// `(|00> + e^{i phi}|11>) / sqrt(2)`
pub fn phi_family(phi: f64) -> PureState {
    let zero = C64::new(0.0, 0.0);
    PureState::normalized(vec![
        C64::new(FRAC_1_SQRT_2, 0.0),
        zero,
        zero,
        C64::from_polar(FRAC_1_SQRT_2, phi),
    ])
    .expect("unit vector")
}

/// `(e^{i phi}|02> + |11> + e^{i phi}|20>) / sqrt(3)`
pub fn theta_family(phi: f64) -> PureState {
    let a = 1.0 / 3f64.sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); 9];
    amps[2] = C64::from_polar(a, phi);
    amps[4] = C64::new(a, 0.0);
    amps[6] = C64::from_polar(a, phi);
    PureState::normalized(amps).expect("unit vector")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Phi,
    Theta,
}

/// 100 members with `phi_j = 2 pi j / 100`.
pub fn phase_sample(family: Family) -> StateSample {
    let (label, make): (&str, fn(f64) -> PureState) = match family {
        Family::Phi => ("phi_family", phi_family),
        Family::Theta => ("theta_family", theta_family),
    };
    let mut states = Vec::with_capacity(PHASE_SAMPLE_SIZE);
    let mut parameters = Vec::with_capacity(PHASE_SAMPLE_SIZE);
    for j in 0..PHASE_SAMPLE_SIZE {
        let phi = 2.0 * PI * j as f64 / PHASE_SAMPLE_SIZE as f64;
        states.push(make(phi));
        parameters.push(StateParams::Phase { phi });
    }
    StateSample {
        label: label.into(),
        states,
        parameters,
    }
}

/// Names the bundled samples in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    QubitBloch,
    QutritGrid,
    PhiFamily,
    ThetaFamily,
}

impl SampleKind {
    pub fn build(self) -> StateSample {
        match self {
            SampleKind::QubitBloch => qubit_sample(),
            SampleKind::QutritGrid => qutrit_grid(),
            SampleKind::PhiFamily => phase_sample(Family::Phi),
            SampleKind::ThetaFamily => phase_sample(Family::Theta),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SampleKind::QubitBloch => 2,
            SampleKind::QutritGrid => 3,
            SampleKind::PhiFamily => 4,
            SampleKind::ThetaFamily => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleKind::QubitBloch => "qubit_bloch",
            SampleKind::QutritGrid => "qutrit_grid",
            SampleKind::PhiFamily => "phi_family",
            SampleKind::ThetaFamily => "theta_family",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{concurrence, negativity};
    use crate::qlinalg::ComplexMatrix;

    fn assert_amps(psi: &PureState, expect: &[(f64, f64)], tol: f64) {
        for (z, &(re, im)) in psi.amplitudes().iter().zip(expect) {
            assert!(
                (z.re - re).abs() < tol && (z.im - im).abs() < tol,
                "{psi:?}"
            );
        }
    }

    /// Reduced state of the first (`first = true`) or second factor of a d x d pure state.
    fn reduced(psi: &PureState, d: usize, first: bool) -> ComplexMatrix {
        let a = psi.amplitudes();
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    let (x, y) = if first {
                        (a[i * d + k], a[j * d + k])
                    } else {
                        (a[k * d + i], a[k * d + j])
                    };
                    acc += x * y.conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn bloch_poles_and_equator() {
        assert_amps(&bloch_qubit(0.0, 0.0), &[(1.0, 0.0), (0.0, 0.0)], 1e-15);
        assert_amps(&bloch_qubit(PI, 0.0), &[(0.0, 0.0), (1.0, 0.0)], 1e-15);
        let h = FRAC_1_SQRT_2;
        assert_amps(&bloch_qubit(PI / 2.0, 0.0), &[(h, 0.0), (h, 0.0)], 1e-15);
    }

    #[test]
    fn qubit_sample_is_near_uniform_and_deterministic() {
        let s = qubit_sample();
        assert_eq!(s.len(), 220);
        let mut mean = [0.0; 3];
        for p in &s.parameters {
            let StateParams::Bloch { theta, phi } = *p else {
                panic!()
            };
            mean[0] += theta.sin() * phi.cos();
            mean[1] += theta.sin() * phi.sin();
            mean[2] += theta.cos();
        }
        let mag = mean.iter().map(|m| (m / 220.0).powi(2)).sum::<f64>().sqrt();
        assert!(mag <= 0.02, "mean Bloch vector {mag}");
        let again = qubit_sample();
        assert_eq!(s.states, again.states);
        for psi in &s.states {
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qutrit_grid_size_norm_and_distinct() {
        let s = qutrit_grid();
        assert_eq!(s.len(), 5184);
        for psi in &s.states {
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let f = s.states[i].inner(&s.states[j]).norm_sqr();
                assert!(f < 1.0 - 1e-9, "states {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn phi_family_members() {
        let h = FRAC_1_SQRT_2;
        assert_amps(
            &phi_family(0.0),
            &[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)],
            1e-15,
        );
        assert_amps(
            &phi_family(PI),
            &[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (-h, 0.0)],
            1e-15,
        );
    }

    #[test]
    fn theta_family_at_zero() {
        let a = 1.0 / 3f64.sqrt();
        let mut expect = [(0.0, 0.0); 9];
        expect[2] = (a, 0.0);
        expect[4] = (a, 0.0);
        expect[6] = (a, 0.0);
        assert_amps(&theta_family(0.0), &expect, 1e-15);
    }

    #[test]
    fn families_have_maximally_mixed_marginals() {
        for (family, d) in [(Family::Phi, 2), (Family::Theta, 3)] {
            let s = phase_sample(family);
            let target = ComplexMatrix::identity(d).scale(1.0 / d as f64);
            for psi in &s.states {
                assert!((psi.norm() - 1.0).abs() < 1e-12);
                for first in [true, false] {
                    assert!(reduced(psi, d, first).max_abs_diff(&target) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn phase_samples_are_maximally_entangled() {
        let s = phase_sample(Family::Phi);
        assert_eq!(s.len(), 100);
        let StateParams::Phase { phi: first } = s.parameters[0] else {
            panic!()
        };
        let StateParams::Phase { phi: second } = s.parameters[1] else {
            panic!()
        };
        assert_eq!(first, 0.0);
        assert!((second - 2.0 * PI / 100.0).abs() < 1e-15);
        for psi in &s.states {
            assert!((concurrence(&psi.density()).unwrap().value - 1.0).abs() < 1e-10);
        }
        for psi in &phase_sample(Family::Theta).states {
            assert!((negativity(&psi.density(), 3, 3).unwrap().value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sample_table_format() {
        let s = phase_sample(Family::Phi).truncated(2);
        let mut buf = Vec::new();
        s.write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("phi_family[0]\tphi=0"));
        assert_eq!(lines[1].split('\t').count(), 2 + 4);
    }

    #[test]
    fn subsample_is_evenly_spaced() {
        let s = qutrit_grid().subsampled(4);
        assert_eq!(s.len(), 4);
        let full = qutrit_grid();
        for (i, p) in s.parameters.iter().enumerate() {
            assert_eq!(*p, full.parameters[i * full.len() / 4]);
        }
        assert_eq!(qubit_sample().subsampled(1000).len(), QUBIT_SAMPLE_SIZE);
    }
}
