//! SIC-POVMs for qubits and qutrits and their two-party products.
//!
//! Operator order is part of the count-file contract:
//! - qubit: tetrahedron vertices (1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1), each over sqrt(3);
//! - qutrit: Weyl-Heisenberg orbit `X^a Z^b |f>` with `(a, b)` in lexicographic order;
//! - products: `M_j (x) M_k` with `j` outer, `k` inner.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::qlinalg::{hermitian_eigvals, tensor_product, ComplexMatrix, DensityMatrix, C64};

pub const POVM_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PovmSet {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    symmetric: bool,
}

impl PovmSet {
    /// Wraps an operator list. Only shapes are checked here; use
    /// [`validate_povm`] for the measurement invariants.
    pub fn from_operators(operators: Vec<ComplexMatrix>, symmetric: bool) -> Result<Self> {
        let dim = match operators.first() {
            Some(m) => m.rows(),
            None => return Err(Error::invalid("a POVM needs at least one operator")),
        };
        if operators.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::invalid(
                "POVM operators must all be square of equal size",
            ));
        }
        Ok(PovmSet {
            dim,
            operators,
            symmetric,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Whether the SIC overlap law is claimed for this set.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Born-rule probabilities `Tr(M_k rho)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::invalid(format!(
                "state dimension {} does not match POVM dimension {}",
                rho.dim(),
                self.dim
            )));
        }
        Ok(self.probabilities_of(rho.matrix()))
    }

    pub(crate) fn probabilities_of(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.operators
            .iter()
            .map(|m| m.trace_product(rho).re)
            .collect()
    }
}

fn qubit_sic() -> PovmSet {
    let s = 1.0 / 3f64.sqrt();
    let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let operators = dirs
        .iter()
        .map(|[x, y, z]| {
            // (I + x X + y Y + z Z) / 4
            let data = vec![
                C64::new((1.0 + z) / 4.0, 0.0),
                C64::new(x / 4.0, -y / 4.0),
                C64::new(x / 4.0, y / 4.0),
                C64::new((1.0 - z) / 4.0, 0.0),
            ];
            ComplexMatrix::from_vec(2, 2, data).expect("2x2")
        })
        .collect();
    PovmSet {
        dim: 2,
        operators,
        symmetric: true,
    }
}

/// Default qutrit fiducial `(|0> - |1>)/sqrt(2)`.
pub fn qutrit_fiducial() -> [C64; 3] {
    [
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::new(-FRAC_1_SQRT_2, 0.0),
        C64::new(0.0, 0.0),
    ]
}

/// Scaled projectors onto the orbit `X^a Z^b |fiducial>`, `(a, b)` lexicographic.
/// The fiducial is normalized first; whether the result is actually a SIC is
/// for [`validate_povm`] to decide.
pub fn weyl_heisenberg_orbit(fiducial: &[C64; 3]) -> Result<PovmSet> {
    let norm = fiducial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::invalid("fiducial vector is zero"));
    }
    let f: Vec<C64> = fiducial.iter().map(|z| z / norm).collect();
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut operators = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            // Z^b: |j> -> w^{bj} |j>, then X^a: |j> -> |j+a>
            let mut psi = [C64::new(0.0, 0.0); 3];
            for (j, fj) in f.iter().enumerate() {
                psi[(j + a) % 3] = fj * omega.powu((b * j) as u32);
            }
            operators.push(ComplexMatrix::outer(&psi, &psi).scale(1.0 / 3.0));
        }
    }
    Ok(PovmSet {
        dim: 3,
        operators,
        symmetric: true,
    })
}

/// SIC-POVM with `d^2` operators for `d` in {2, 3}.
pub fn sic_povm(d: usize) -> Result<PovmSet> {
    match d {
        2 => Ok(qubit_sic()),
        3 => weyl_heisenberg_orbit(&qutrit_fiducial()),
        _ => Err(Error::invalid(format!(
            "SIC-POVM only available for d = 2 or 3, got {d}"
        ))),
    }
}

/// All `P_j (x) Q_k`, `j` outer.
pub fn product_povm(p: &PovmSet, q: &PovmSet) -> PovmSet {
    let operators = p
        .operators
        .iter()
        .flat_map(|a| q.operators.iter().map(move |b| tensor_product(a, b)))
        .collect();
    PovmSet {
        dim: p.dim * q.dim,
        operators,
        symmetric: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PovmCheck {
    Hermiticity,
    Positivity,
    Completeness,
    SicOverlap,
}

impl fmt::Display for PovmCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PovmCheck::Hermiticity => "hermiticity",
            PovmCheck::Positivity => "positivity",
            PovmCheck::Completeness => "completeness",
            PovmCheck::SicOverlap => "sic-overlap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: PovmCheck,
    /// Size of the defect (max-norm distance or negative eigenvalue magnitude).
    pub magnitude: f64,
    pub operator: Option<usize>,
}

/// Worst-case measurements for each invariant, plus the violations beyond tolerance.
#[derive(Debug, Clone)]
pub struct PovmReport {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub completeness_defect: f64,
    pub sic_overlap_defect: Option<f64>,
    pub violations: Vec<Violation>,
}

impl PovmReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest measured defect across all checks.
    pub fn worst_defect(&self) -> f64 {
        self.hermiticity_defect
            .max((-self.min_eigenvalue).max(0.0))
            .max(self.completeness_defect)
            .max(self.sic_overlap_defect.unwrap_or(0.0))
    }
}

pub fn validate_povm(povm: &PovmSet) -> PovmReport {
    let d = povm.dim;
    let mut violations = Vec::new();
    let mut herm_worst = 0.0f64;
    let mut min_eig = f64::INFINITY;

    for (k, m) in povm.operators.iter().enumerate() {
        let defect = m.hermiticity_defect();
        herm_worst = herm_worst.max(defect);
        if defect > POVM_TOL {
            violations.push(Violation {
                check: PovmCheck::Hermiticity,
                magnitude: defect,
                operator: Some(k),
            });
            continue;
        }
        if let Ok(ev) = hermitian_eigvals(m) {
            let lo = ev[0];
            min_eig = min_eig.min(lo);
            if lo < -POVM_TOL {
                violations.push(Violation {
                    check: PovmCheck::Positivity,
                    magnitude: -lo,
                    operator: Some(k),
                });
            }
        }
    }

    let mut sum = ComplexMatrix::zeros(d, d);
    for m in &povm.operators {
        sum = &sum + m;
    }
    let completeness = sum.max_abs_diff(&ComplexMatrix::identity(d));
    if completeness > POVM_TOL {
        violations.push(Violation {
            check: PovmCheck::Completeness,
            magnitude: completeness,
            operator: None,
        });
    }

    let sic_overlap_defect = povm.symmetric.then(|| {
        let df = d as f64;
        let denom = df * df * (df + 1.0);
        let mut worst = 0.0f64;
        for (j, a) in povm.operators.iter().enumerate() {
            for (k, b) in povm.operators.iter().enumerate() {
                let expect = if j == k {
                    (df + 1.0) / denom
                } else {
                    1.0 / denom
                };
                worst = worst.max((a.trace_product(b) - expect).norm());
            }
        }
        if povm.operators.len() != d * d {
            worst = worst.max(1.0);
        }
        if worst > POVM_TOL {
            violations.push(Violation {
                check: PovmCheck::SicOverlap,
                magnitude: worst,
                operator: None,
            });
        }
        worst
    });

    PovmReport {
        hermiticity_defect: herm_worst,
        min_eigenvalue: if min_eig.is_finite() { min_eig } else { 0.0 },
        completeness_defect: completeness,
        sic_overlap_defect,
        violations,
    }
}
