//! Sweeps over fiber lengths: channel simulation, reconstruction and metrics
//! for every state of a sample at every grid point.

mod config;
mod output;

pub use config::{
    apply_override, load_scenario, load_scenarios, parse_override, FiberAxis, LengthGrid,
    ScenarioConfig, System,
};
pub use output::{read_results, write_results, write_results_many, ResultRow, CSV_HEADER};

use crate::channel::{draw_measured_counts, FiberSpec, RngStream};
use crate::error::{Error, Result};
use crate::estimator::reconstruct;
use crate::exec::{map_indexed, Execution};
use crate::metrics::{concurrence, fidelity_pure, negativity, MetricKind};
use crate::states::StateSample;

const PURPOSE_CHANNEL: u64 = 0;
const PURPOSE_ESTIMATOR: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean: f64,
    /// Sample standard deviation, `n - 1` denominator.
    pub sd: f64,
    pub n: usize,
    /// Share of states whose best restart met the stopping rule.
    pub converged_fraction: f64,
}

impl CellStats {
    /// Mean and SD by a plain left-to-right pass, so the result depends only
    /// on the order of `values`.
    pub fn from_values(values: &[f64], converged: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        CellStats {
            mean,
            sd,
            n,
            converged_fraction: converged as f64 / n as f64,
        }
    }

    pub fn standard_error(&self) -> f64 {
        self.sd / (self.n as f64).sqrt()
    }
}

/// Aggregated metrics on a 1- or 2-axis length grid.
///
/// Grid points are row-major: with two axes, point `(i, j)` has index
/// `i * axes[1].len() + j`. `cells[point][m]` belongs to `metrics[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<Vec<f64>>,
    pub metrics: Vec<MetricKind>,
    pub cells: Vec<Vec<CellStats>>,
}

impl SweepResult {
    pub fn points(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    /// Lengths at grid point `index`, one per axis.
    pub fn lengths_at(&self, index: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a[index]],
            [a, b] => vec![a[index / b.len()], b[index % b.len()]],
            _ => unreachable!("sweeps have one or two axes"),
        }
    }

    pub fn metric_index(&self, metric: MetricKind) -> Result<usize> {
        self.metrics
            .iter()
            .position(|&m| m == metric)
            .ok_or_else(|| Error::invalid(format!("metric {metric} not in result")))
    }

    /// Cell for `metric` at the given per-axis indices.
    pub fn cell(&self, metric: MetricKind, at: &[usize]) -> Result<CellStats> {
        let m = self.metric_index(metric)?;
        if at.len() != self.axes.len() || at.iter().zip(&self.axes).any(|(&i, a)| i >= a.len()) {
            return Err(Error::invalid(format!("grid index {at:?} out of range")));
        }
        let index = at
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.len() + i);
        Ok(self.cells[index][m])
    }

    /// The cell whose lengths equal `lengths` exactly.
    pub fn cell_at_lengths(&self, metric: MetricKind, lengths: &[f64]) -> Result<CellStats> {
        let at: Option<Vec<usize>> = self
            .axes
            .iter()
            .zip(lengths)
            .map(|(a, l)| a.iter().position(|x| x == l))
            .collect();
        match at {
            Some(at) if at.len() == self.axes.len() => self.cell(metric, &at),
            _ => Err(Error::invalid(format!("no grid point at {lengths:?}"))),
        }
    }
}

struct UnitOutcome {
    values: Vec<f64>,
    converged: bool,
}

fn build_sample(config: &ScenarioConfig) -> StateSample {
    let sample = config.sample.build();
    match config.sample_limit {
        Some(n) => sample.subsampled(n),
        None => sample,
    }
}

/// Channel and estimator streams for one (grid point, state) unit.
pub fn unit_streams(seed: u64, fibers: &[FiberSpec], state_index: usize) -> (RngStream, RngStream) {
    let mut labels = [
        fibers[0].length.to_bits(),
        fibers.get(1).map_or(u64::MAX, |f| f.length.to_bits()),
        state_index as u64,
        PURPOSE_CHANNEL,
    ];
    let channel = RngStream::derive(seed, &labels);
    labels[3] = PURPOSE_ESTIMATOR;
    (channel, RngStream::derive(seed, &labels))
}

/// Photon budget the nominal (non-renormalized) model is fitted with.
pub fn nominal_scale(config: &ScenarioConfig, povm: &crate::povm::PovmSet) -> u64 {
    config.produced * config.channel.setting_operator.count_scale(povm)
}

fn run_unit(
    config: &ScenarioConfig,
    sample: &StateSample,
    povm: &crate::povm::PovmSet,
    fibers: &[FiberSpec],
    state_index: usize,
) -> Result<UnitOutcome> {
    let psi = &sample.states[state_index];
    let (mut channel_rng, mut estimator_rng) = unit_streams(config.seed, fibers, state_index);
    let counts = draw_measured_counts(
        &psi.density(),
        povm,
        config.produced,
        fibers,
        &config.channel,
        &mut channel_rng,
    )?;
    let fit = reconstruct(
        &counts,
        povm,
        nominal_scale(config, povm),
        &config.estimator,
        &mut estimator_rng,
    )?;

    let d = config.system.local_dim();
    let values = config
        .metrics
        .iter()
        .map(|m| {
            Ok(match m {
                MetricKind::Fidelity => fidelity_pure(psi, &fit.rho_hat)?.value,
                MetricKind::Concurrence => concurrence(&fit.rho_hat)?.value,
                MetricKind::Negativity => negativity(&fit.rho_hat, d, d)?.value,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(UnitOutcome {
        values,
        converged: fit.converged,
    })
}

fn run_grid(config: &ScenarioConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let sample = build_sample(config);
    let povm = config.system.povm();
    let axes: Vec<Vec<f64>> = config
        .fibers
        .iter()
        .map(|f| f.lengths_km.values().to_vec())
        .collect();
    let points: Vec<Vec<FiberSpec>> = match axes.as_slice() {
        [a] => a
            .iter()
            .map(|&l| Ok(vec![config.fibers[0].spec_at(l)?]))
            .collect::<Result<_>>()?,
        [a, b] => a
            .iter()
            .flat_map(|&l1| b.iter().map(move |&l2| (l1, l2)))
            .map(|(l1, l2)| {
                Ok(vec![
                    config.fibers[0].spec_at(l1)?,
                    config.fibers[1].spec_at(l2)?,
                ])
            })
            .collect::<Result<_>>()?,
        _ => return Err(Error::Config("sweeps take one or two fibers".into())),
    };

    let per_point = sample.len();
    let outcomes = map_indexed(points.len() * per_point, exec, |unit| {
        run_unit(
            config,
            &sample,
            &povm,
            &points[unit / per_point],
            unit % per_point,
        )
    })
    .into_iter()
    .collect::<Result<Vec<UnitOutcome>>>()?;

    let mut cells = Vec::with_capacity(points.len());
    let mut values = vec![0.0; per_point];
    for chunk in outcomes.chunks(per_point) {
        let converged = chunk.iter().filter(|u| u.converged).count();
        let mut row = Vec::with_capacity(config.metrics.len());
        for m in 0..config.metrics.len() {
            for (v, u) in values.iter_mut().zip(chunk) {
                *v = u.values[m];
            }
            row.push(CellStats::from_values(&values, converged));
        }
        cells.push(row);
    }
    Ok(SweepResult {
        axes,
        metrics: config.metrics.clone(),
        cells,
    })
}

pub fn run_single_sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    run_single_sweep_with(config, Execution::default())
}

pub fn run_single_sweep_with(config: &ScenarioConfig, exec: Execution) -> Result<SweepResult> {
    if config.system.parties() != 1 {
        return Err(Error::Config(format!(
            "single-system sweep given {}",
            config.system.name()
        )));
    }
    run_grid(config, exec)
}

pub fn run_bipartite_sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    run_bipartite_sweep_with(config, Execution::default())
}

pub fn run_bipartite_sweep_with(config: &ScenarioConfig, exec: Execution) -> Result<SweepResult> {
    if config.system.parties() != 2 {
        return Err(Error::Config(format!(
            "bipartite sweep given {}",
            config.system.name()
        )));
    }
    run_grid(config, exec)
}

/// Dispatches on the number of parties.
pub fn run_sweep_with(config: &ScenarioConfig, exec: Execution) -> Result<SweepResult> {
    match config.system.parties() {
        1 => run_single_sweep_with(config, exec),
        _ => run_bipartite_sweep_with(config, exec),
    }
}

/// A pair of neighboring grid points whose means lie on opposite sides of
/// the level, with the linearly interpolated crossing point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub l1: f64,
    pub l2: f64,
}

/// Level crossings between horizontal and vertical neighbors of a 2-axis
/// result. A mean exactly at the level counts as above it.
pub fn threshold_contour(
    result: &SweepResult,
    metric: MetricKind,
    level: f64,
) -> Result<Vec<Crossing>> {
    let m = result.metric_index(metric)?;
    let [a, b] = result.axes.as_slice() else {
        return Err(Error::invalid("threshold contour needs a 2-axis result"));
    };
    let mean = |i: usize, j: usize| result.cells[i * b.len() + j][m].mean;
    let mut out = Vec::new();
    let mut check = |p: (usize, usize), q: (usize, usize)| {
        let (u, v) = (mean(p.0, p.1), mean(q.0, q.1));
        if (u >= level) != (v >= level) {
            let t = (level - u) / (v - u);
            out.push(Crossing {
                from: p,
                to: q,
                l1: a[p.0] + t * (a[q.0] - a[p.0]),
                l2: b[p.1] + t * (b[q.1] - b[p.1]),
            });
        }
    };
    for i in 0..a.len() {
        for j in 0..b.len() {
            if i + 1 < a.len() {
                check((i, j), (i + 1, j));
            }
            if j + 1 < b.len() {
                check((i, j), (i, j + 1));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> SweepResult {
        let axis: Vec<f64> = (0..=15).map(|i| 10.0 * i as f64).collect();
        let mut cells = Vec::new();
        for &l1 in &axis {
            for &l2 in &axis {
                cells.push(vec![CellStats {
                    mean: f(l1, l2),
                    sd: 0.0,
                    n: 1,
                    converged_fraction: 1.0,
                }]);
            }
        }
        SweepResult {
            axes: vec![axis.clone(), axis],
            metrics: vec![MetricKind::Concurrence],
            cells,
        }
    }

    #[test]
    fn contour_of_linear_field() {
        let r = synthetic(|a, b| 1.0 - (a + b) / 200.0);
        let c = threshold_contour(&r, MetricKind::Concurrence, 0.5).unwrap();
        assert!(!c.is_empty());
        for x in &c {
            assert!((x.l1 + x.l2 - 100.0).abs() < 1e-9, "{x:?}");
        }
    }

    #[test]
    fn contour_of_constant_field_is_empty() {
        let r = synthetic(|_, _| 0.9);
        assert!(threshold_contour(&r, MetricKind::Concurrence, 0.5)
            .unwrap()
            .is_empty());
        assert!(threshold_contour(&r, MetricKind::Negativity, 0.5).is_err());
        let one_axis = SweepResult {
            axes: vec![vec![0.0]],
            metrics: vec![MetricKind::Concurrence],
            cells: vec![vec![r.cells[0][0]]],
        };
        assert!(threshold_contour(&one_axis, MetricKind::Concurrence, 0.5).is_err());
    }

    #[test]
    fn cell_stats_match_hand_values() {
        let s = CellStats::from_values(&[1.0, 2.0, 3.0, 4.0], 3);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.converged_fraction, 0.75);
        assert_eq!(CellStats::from_values(&[0.7], 1).sd, 0.0);
    }

    #[test]
    fn grid_indexing() {
        let r = synthetic(|a, b| a + 1000.0 * b);
        assert_eq!(r.lengths_at(17), vec![10.0, 10.0]);
        let c = r
            .cell_at_lengths(MetricKind::Concurrence, &[30.0, 20.0])
            .unwrap();
        assert_eq!(c.mean, 30.0 + 20000.0);
        assert!(r
            .cell_at_lengths(MetricKind::Concurrence, &[35.0, 20.0])
            .is_err());
    }
}
