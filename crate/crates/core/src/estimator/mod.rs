//! Least-squares state reconstruction over Cholesky-parameterized density
//! matrices, `rho = T^dag T / Tr(T^dag T)` with `T` lower triangular.

mod optim;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{round_half_up, CountVector, RngStream};
use crate::error::{Error, Result};
use crate::povm::PovmSet;
use crate::qlinalg::{ComplexMatrix, DensityMatrix, C64};

pub use optim::StopRule;

/// Real parameters of the lower-triangular factor `T`.
///
/// Layout: the `d` real diagonal entries first, then `(re, im)` pairs for the
/// strictly lower entries in row-major order. Length is always `d^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyParams {
    dim: usize,
    t: Vec<f64>,
}

impl CholeskyParams {
    pub fn new(dim: usize, t: Vec<f64>) -> Result<Self> {
        if dim == 0 || t.len() != dim * dim {
            return Err(Error::invalid(format!(
                "{} Cholesky parameters given for dimension {dim}",
                t.len()
            )));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("Cholesky parameters must be finite"));
        }
        Ok(CholeskyParams { dim, t })
    }

    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        CholeskyParams {
            dim,
            t: (0..dim * dim)
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn scaled(&self, c: f64) -> Self {
        CholeskyParams {
            dim: self.dim,
            t: self.t.iter().map(|x| x * c).collect(),
        }
    }

    pub fn lower_factor(&self) -> ComplexMatrix {
        lower_factor(self.dim, &self.t)
    }
}

fn lower_factor(d: usize, t: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(t[i], 0.0);
    }
    let mut idx = d;
    for i in 1..d {
        for j in 0..i {
            m[(i, j)] = C64::new(t[idx], t[idx + 1]);
            idx += 2;
        }
    }
    m
}

/// `T^dag T` and its trace.
fn gram(d: usize, t: &[f64]) -> (ComplexMatrix, ComplexMatrix, f64) {
    let tm = lower_factor(d, t);
    let s = &tm.dagger() * &tm;
    let tr = t.iter().map(|x| x * x).sum();
    (tm, s, tr)
}

pub fn params_to_density(params: &CholeskyParams) -> Result<DensityMatrix> {
    let (_, s, tr) = gram(params.dim, &params.t);
    if !(tr >= 1e-300) {
        return Err(Error::DegenerateParameters(tr));
    }
    let mut rho = s.scale(1.0 / tr);
    // T^dag T is Hermitian up to round-off; make it exact.
    for i in 0..params.dim {
        rho[(i, i)] = C64::new(rho[(i, i)].re, 0.0);
        for j in 0..i {
            rho[(i, j)] = rho[(j, i)].conj();
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelCounts {
    /// `e_k = N Tr(M_k rho)` without rounding; smooth, used with BFGS.
    #[default]
    Continuous,
    /// `e_k = round_half_up(N Tr(M_k rho))`; piecewise constant, Nelder-Mead.
    Rounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub parameter_tolerance: f64,
    pub model_counts: ModelCounts,
    /// Fit the model to the observed total `sum_k m_k` instead of the nominal
    /// number of produced photons.
    pub renormalize_counts: bool,
    pub gradient: GradientMode,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            restarts: 5,
            max_iterations: 500,
            objective_tolerance: 1e-12,
            parameter_tolerance: 1e-10,
            model_counts: ModelCounts::Continuous,
            renormalize_counts: true,
            gradient: GradientMode::Analytic,
        }
    }
}

impl ReconstructionOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.objective_tolerance > 0.0 && self.parameter_tolerance > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }

    fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iterations: self.max_iterations,
            objective_tolerance: self.objective_tolerance,
            parameter_tolerance: self.parameter_tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    /// Sum of squared count residuals, in counts^2.
    pub objective_value: f64,
    pub iterations_used: usize,
    pub restarts_used: usize,
    pub converged: bool,
}

/// The fitted model: `e_k(t) = scale * Tr(M_k rho(t))` against `measured`.
struct LsProblem {
    dim: usize,
    /// `Tr(M_k rho) = sum_j coeff[k][j] * features(rho)[j]`
    coeffs: Vec<Vec<f64>>,
    operators: Vec<ComplexMatrix>,
    measured: Vec<f64>,
    scale: f64,
    mode: ModelCounts,
}

/// Real coordinates of a Hermitian matrix such that `Tr(A B)` is a dot product:
/// diagonal, then `(2 Re, 2 Im)` of each upper entry.
fn hermitian_features(a: &ComplexMatrix, out: &mut Vec<f64>) {
    let d = a.rows();
    out.clear();
    for i in 0..d {
        out.push(a[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            out.push(a[(i, j)].re);
            out.push(a[(i, j)].im);
        }
    }
}

impl LsProblem {
    fn new(
        measured: &CountVector,
        povm: &PovmSet,
        produced: u64,
        options: &ReconstructionOptions,
    ) -> Result<Self> {
        if measured.len() != povm.eta() {
            return Err(Error::invalid(format!(
                "{} counts given for a POVM with {} outcomes",
                measured.len(),
                povm.eta()
            )));
        }
        let scale = if options.renormalize_counts {
            measured.total() as f64
        } else {
            produced as f64
        };
        let mut coeffs = Vec::with_capacity(povm.eta());
        let mut buf = Vec::new();
        for m in povm.operators() {
            hermitian_features(m, &mut buf);
            // Off-diagonal terms appear twice in the trace, with conjugate phases.
            let d = povm.dim();
            let c: Vec<f64> = buf
                .iter()
                .enumerate()
                .map(|(j, &v)| if j < d { v } else { 2.0 * v })
                .collect();
            coeffs.push(c);
        }
        Ok(LsProblem {
            dim: povm.dim(),
            coeffs,
            operators: povm.operators().to_vec(),
            measured: measured.as_slice().iter().map(|&m| m as f64).collect(),
            scale,
            mode: options.model_counts,
        })
    }

    fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        let mut feat = Vec::with_capacity(self.dim * self.dim);
        hermitian_features(rho, &mut feat);
        self.coeffs
            .iter()
            .map(|c| c.iter().zip(&feat).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Objective in counts^2 at a normalized `rho`.
    fn objective_at(&self, rho: &ComplexMatrix) -> f64 {
        self.probabilities(rho)
            .iter()
            .zip(&self.measured)
            .map(|(&q, &m)| {
                let e = match self.mode {
                    ModelCounts::Continuous => self.scale * q,
                    ModelCounts::Rounded => round_half_up(self.scale * q) as f64,
                };
                (e - m) * (e - m)
            })
            .sum()
    }

    /// Objective divided by `scale^2`; this is what the optimizers see.
    fn normalized(&self, t: &[f64]) -> f64 {
        let (_, s, tr) = gram(self.dim, t);
        if !(tr >= 1e-300) {
            return f64::INFINITY;
        }
        self.objective_at(&s.scale(1.0 / tr)) / (self.scale * self.scale)
    }

    /// Normalized continuous objective and its analytic gradient.
    ///
    /// With `G = sum_k 2 (q_k - y_k) M_k` and `H = (G - Tr(G rho) I) / Tr(S)`,
    /// the differential is `2 Re Tr(H T^dag dT)`.
    fn normalized_with_gradient(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim;
        let (tm, s, tr) = gram(d, t);
        if !(tr >= 1e-300) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        }
        let rho = s.scale(1.0 / tr);
        let probs = self.probabilities(&rho);
        let mut f = 0.0;
        let mut gmat = ComplexMatrix::zeros(d, d);
        for (k, (&q, &m)) in probs.iter().zip(&self.measured).enumerate() {
            let r = q - m / self.scale;
            f += r * r;
            let w = 2.0 * r;
            let op = &self.operators[k];
            for i in 0..d {
                for j in 0..d {
                    gmat[(i, j)] += op[(i, j)] * w;
                }
            }
        }
        let shift = gmat.trace_product(&rho).re;
        for i in 0..d {
            gmat[(i, i)] -= C64::new(shift, 0.0);
        }
        // W = H T^dag
        let w = (&gmat * &tm.dagger()).scale(1.0 / tr);
        for i in 0..d {
            grad[i] = 2.0 * w[(i, i)].re;
        }
        let mut idx = d;
        for i in 1..d {
            for j in 0..i {
                let wji = w[(j, i)];
                grad[idx] = 2.0 * wji.re;
                grad[idx + 1] = -2.0 * wji.im;
                idx += 2;
            }
        }
        f
    }
}

/// Sum of squared residuals `sum_k (e_k(t) - m_k)^2`.
pub fn ls_objective(
    params: &CholeskyParams,
    measured: &CountVector,
    povm: &PovmSet,
    produced: u64,
    options: &ReconstructionOptions,
) -> Result<f64> {
    if params.dim != povm.dim() {
        return Err(Error::invalid(
            "parameter dimension does not match the POVM",
        ));
    }
    let rho = params_to_density(params)?;
    ls_objective_at(&rho, measured, povm, produced, options)
}

/// [`ls_objective`] evaluated directly at a density matrix.
pub fn ls_objective_at(
    rho: &DensityMatrix,
    measured: &CountVector,
    povm: &PovmSet,
    produced: u64,
    options: &ReconstructionOptions,
) -> Result<f64> {
    if rho.dim() != povm.dim() {
        return Err(Error::invalid("state dimension does not match the POVM"));
    }
    let problem = LsProblem::new(measured, povm, produced, options)?;
    Ok(problem.objective_at(rho.matrix()))
}

/// Multi-start least-squares fit.
///
/// Each restart begins at parameters drawn uniformly from `[-1, 1]`. The best
/// final objective wins; ties within 1e-9 go to the earlier restart. When the
/// model scale is zero (no photons produced, or nothing detected with
/// renormalized counts) the objective is constant and the first starting
/// point is returned as the estimate.
pub fn reconstruct(
    measured: &CountVector,
    povm: &PovmSet,
    produced: u64,
    options: &ReconstructionOptions,
    rng: &mut RngStream,
) -> Result<ReconstructionResult> {
    options.validate()?;
    let problem = LsProblem::new(measured, povm, produced, options)?;
    let d = povm.dim();

    if problem.scale == 0.0 {
        let start = CholeskyParams::random(d, rng);
        let rho_hat = params_to_density(&start)?;
        let objective_value = problem.objective_at(rho_hat.matrix());
        return Ok(ReconstructionResult {
            rho_hat,
            objective_value,
            iterations_used: 0,
            restarts_used: 1,
            converged: true,
        });
    }

    let rule = options.stop_rule();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations_used = 0;
    let mut converged = false;
    for _ in 0..options.restarts {
        let start = CholeskyParams::random(d, rng).t;
        let outcome = match (options.model_counts, options.gradient) {
            (ModelCounts::Rounded, _) => {
                optim::nelder_mead(|t| problem.normalized(t), start, 0.2, rule)
            }
            (ModelCounts::Continuous, GradientMode::Analytic) => {
                optim::bfgs(|t, g| problem.normalized_with_gradient(t, g), start, rule)
            }
            (ModelCounts::Continuous, GradientMode::CentralDifference) => optim::bfgs(
                |t, g| {
                    optim::central_difference(|x| problem.normalized(x), t, g);
                    problem.normalized(t)
                },
                start,
                rule,
            ),
        };
        iterations_used += outcome.iterations;
        converged |= outcome.converged;
        let f = outcome.f * problem.scale * problem.scale;
        let better = match &best {
            None => f.is_finite(),
            Some((bf, _)) => f < bf - 1e-9 * bf.abs().max(1.0),
        };
        if better {
            best = Some((f, outcome.x));
        }
    }

    let (_, t) = best.ok_or(Error::DegenerateParameters(0.0))?;
    let rho_hat = params_to_density(&CholeskyParams::new(d, t)?)?;
    let objective_value = problem.objective_at(rho_hat.matrix());
    Ok(ReconstructionResult {
        rho_hat,
        objective_value,
        iterations_used,
        restarts_used: options.restarts,
        converged,
    })
}
