//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::channel::{draw_measured_counts, CountVector};
use crate::error::{Error, Result};
use crate::estimator::reconstruct;
use crate::exec::{with_threads, Execution};
use crate::experiment::{
    load_scenarios, nominal_scale, parse_override, run_sweep_with, unit_streams,
    write_results_many, ScenarioConfig, SweepResult,
};
use crate::metrics::{concurrence, fidelity_pure, negativity, MetricKind};
use crate::validation::{corrupted_fiducial, run_checks_with, Fixtures};

/// Bundled scenario files, one per figure.
pub const FIGURES: [(&str, &str); 8] = [
    ("fig1", include_str!("../configs/fig1.toml")),
    ("fig2", include_str!("../configs/fig2.toml")),
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("fig5", include_str!("../configs/fig5.toml")),
    ("fig6", include_str!("../configs/fig6.toml")),
    ("fig7", include_str!("../configs/fig7.toml")),
    ("fig8", include_str!("../configs/fig8.toml")),
];

#[derive(Debug, Parser)]
#[command(
    name = "qstatten",
    version,
    about = "Photonic state tomography over lossy fiber"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant self-checks and print a pass/fail table.
    Validate {
        /// Replace the qutrit SIC fiducial with a corrupted vector.
        #[arg(long, hide = true)]
        corrupt_fiducial: bool,
    },
    /// Simulate and reconstruct a single state, or reconstruct given counts.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
        /// Index into the sample.
        #[arg(long, default_value_t = 0)]
        state: usize,
        /// Fiber length(s) in km, comma-separated; defaults to the first grid point.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<f64>,
        /// Measured counts, comma-separated, instead of simulating them.
        #[arg(long)]
        counts: Option<CountVector>,
    },
    /// Run every scenario in a config file and write one CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the bundled figure scenarios, one CSV per figure.
    Figures {
        /// Only these figures (repeatable or comma-separated), e.g. `fig1`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Overrides the seed of every scenario.
    #[arg(long, env = "QSTATTEN_SEED")]
    pub seed: Option<u64>,
    /// Dotted KEY=VALUE applied to every scenario, e.g. `N=10` or `fibers.0.alpha=0.3`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "results")]
    pub out: PathBuf,
}

impl CommonArgs {
    fn scenarios(&self, text: &str, origin: &str) -> Result<Vec<ScenarioConfig>> {
        let mut overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(seed) = self.seed {
            overrides.push(("seed".into(), toml::Value::String(seed.to_string())));
        }
        load_scenarios(text, &overrides).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// File name for `stem` inside `dir`, restricted to a safe character set so
/// nothing is written outside the output directory.
fn output_file(dir: &Path, stem: &str) -> PathBuf {
    let safe: String = stem
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    let safe = safe.trim_start_matches('.');
    dir.join(format!(
        "{}.csv",
        if safe.is_empty() { "results" } else { safe }
    ))
}

fn summarize(config: &ScenarioConfig, result: &SweepResult) {
    let points = result.points();
    let picks = [0, points / 2, points - 1];
    for (m, metric) in result.metrics.iter().enumerate() {
        let cells: Vec<String> = picks
            .iter()
            .map(|&i| {
                let c = result.cells[i][m];
                format!(
                    "L={:?}: {:.4} +/- {:.4}",
                    result.lengths_at(i),
                    c.mean,
                    c.sd
                )
            })
            .collect();
        println!("  {} {}: {}", config.scenario, metric, cells.join("; "));
    }
}

fn run_file(
    text: &str,
    origin: &str,
    stem: &str,
    common: &CommonArgs,
    out: &OutArgs,
) -> Result<PathBuf> {
    let configs = common.scenarios(text, origin)?;
    std::fs::create_dir_all(&out.out).map_err(|e| Error::io(&out.out, e))?;
    let mut results = Vec::with_capacity(configs.len());
    for config in &configs {
        let start = Instant::now();
        let result = with_threads(common.threads, || {
            run_sweep_with(config, Execution::default())
        })?;
        println!("{} finished in {:.1?}", config.scenario, start.elapsed());
        summarize(config, &result);
        results.push(result);
    }
    let path = output_file(&out.out, stem);
    let runs: Vec<(&ScenarioConfig, &SweepResult)> = configs.iter().zip(&results).collect();
    write_results_many(&runs, &path)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn cmd_validate(corrupt: bool) -> Result<bool> {
    let mut fixtures = Fixtures::default();
    if corrupt {
        fixtures.qutrit_fiducial = corrupted_fiducial();
    }
    let table = run_checks_with(&fixtures);
    for row in &table {
        println!("{row}");
    }
    let failed = table.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {failed} failed", table.len());
    Ok(failed == 0)
}

fn cmd_reconstruct(
    run: &RunArgs,
    state: usize,
    lengths: &[f64],
    counts: Option<&CountVector>,
) -> Result<()> {
    let text = read_config(&run.config)?;
    let configs = run
        .common
        .scenarios(&text, &run.config.display().to_string())?;
    let config = &configs[0];
    let sample = config.sample.build();
    let psi = sample.states.get(state).ok_or_else(|| {
        Error::invalid(format!(
            "state {state} out of range (sample has {})",
            sample.len()
        ))
    })?;
    let lengths: Vec<f64> = if lengths.is_empty() {
        config
            .fibers
            .iter()
            .map(|f| f.lengths_km.values()[0])
            .collect()
    } else {
        lengths.to_vec()
    };
    if lengths.len() != config.fibers.len() {
        return Err(Error::invalid(format!(
            "{} length(s) given, scenario has {} fiber(s)",
            lengths.len(),
            config.fibers.len()
        )));
    }
    let fibers = config
        .fibers
        .iter()
        .zip(&lengths)
        .map(|(f, &l)| f.spec_at(l))
        .collect::<Result<Vec<_>>>()?;
    let povm = config.system.povm();
    let (mut channel_rng, mut estimator_rng) = unit_streams(config.seed, &fibers, state);
    let measured = match counts {
        Some(c) => c.clone(),
        None => draw_measured_counts(
            &psi.density(),
            &povm,
            config.produced,
            &fibers,
            &config.channel,
            &mut channel_rng,
        )?,
    };
    let fit = reconstruct(
        &measured,
        &povm,
        nominal_scale(config, &povm),
        &config.estimator,
        &mut estimator_rng,
    )?;

    println!("counts: {measured}");
    println!("objective: {:.6e}", fit.objective_value);
    println!(
        "iterations: {}  restarts: {}  converged: {}",
        fit.iterations_used, fit.restarts_used, fit.converged
    );
    println!("rho_hat:");
    let m = fit.rho_hat.matrix();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| format!("{:+.6}{:+.6}i", m[(i, j)].re, m[(i, j)].im))
            .collect();
        println!("  {}", row.join("  "));
    }
    let d = config.system.local_dim();
    for metric in &config.metrics {
        let v = match metric {
            MetricKind::Fidelity => fidelity_pure(psi, &fit.rho_hat)?,
            MetricKind::Concurrence => concurrence(&fit.rho_hat)?,
            MetricKind::Negativity => negativity(&fit.rho_hat, d, d)?,
        };
        println!("{metric}: {:.6}", v.value);
    }
    Ok(())
}

fn cmd_figures(only: &[String], common: &CommonArgs, out: &OutArgs) -> Result<()> {
    for name in only {
        if !FIGURES.iter().any(|(n, _)| n == name) {
            let known: Vec<&str> = FIGURES.iter().map(|(n, _)| *n).collect();
            return Err(Error::invalid(format!(
                "unknown figure {name:?}; known: {known:?}"
            )));
        }
    }
    for (name, text) in FIGURES {
        if only.is_empty() || only.iter().any(|n| n == name) {
            run_file(text, name, name, common, out)?;
        }
    }
    Ok(())
}

/// Runs a parsed command; `Ok(false)` means validation checks failed.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { corrupt_fiducial } => cmd_validate(corrupt_fiducial),
        Command::Reconstruct {
            run,
            state,
            lengths,
            counts,
        } => cmd_reconstruct(&run, state, &lengths, counts.as_ref()).map(|_| true),
        Command::Sweep { run, out } => {
            let text = read_config(&run.config)?;
            let stem = run
                .config
                .file_stem()
                .map_or("results".into(), |s| s.to_string_lossy().into_owned());
            run_file(
                &text,
                &run.config.display().to_string(),
                &stem,
                &run.common,
                &out,
            )
            .map(|_| true)
        }
        Command::Figures { only, common, out } => cmd_figures(&only, &common, &out).map(|_| true),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let common = CommonArgs {
            seed: None,
            overrides: vec![],
            threads: None,
        };
        let expect = [3, 3, 1, 1, 3, 3, 1, 1];
        for ((name, text), n) in FIGURES.iter().zip(expect) {
            let all = common.scenarios(text, name).unwrap();
            assert_eq!(all.len(), n, "{name}");
        }
        let fig1 = common.scenarios(FIGURES[0].1, "fig1").unwrap();
        let budgets: Vec<u64> = fig1.iter().map(|c| c.produced).collect();
        assert_eq!(budgets, vec![10, 50, 100]);
        let fig2 = common.scenarios(FIGURES[1].1, "fig2").unwrap();
        let alphas: Vec<f64> = fig2.iter().map(|c| c.fibers[0].alpha).collect();
        assert_eq!(alphas, vec![0.1, 0.3, 0.5]);
        assert!(fig2.iter().all(|c| c.produced == 50));
        let fig4 = common.scenarios(FIGURES[3].1, "fig4").unwrap();
        assert_eq!(fig4[0].metrics, vec![MetricKind::Concurrence]);
        assert_eq!((fig4[0].produced, fig4[0].fibers[1].alpha), (200, 0.2));
    }

    #[test]
    fn seed_flag_overrides_file() {
        let common = CommonArgs {
            seed: Some(u64::MAX),
            overrides: vec!["N=7".into()],
            threads: None,
        };
        let all = common.scenarios(FIGURES[0].1, "fig1").unwrap();
        assert!(all.iter().all(|c| c.seed == u64::MAX && c.produced == 7));
    }

    #[test]
    fn output_names_stay_inside_directory() {
        let dir = Path::new("/tmp/out");
        assert_eq!(output_file(dir, "fig1"), dir.join("fig1.csv"));
        assert_eq!(output_file(dir, "../../etc/x"), dir.join("_.._etc_x.csv"));
        assert_eq!(output_file(dir, ""), dir.join("results.csv"));
    }
}
