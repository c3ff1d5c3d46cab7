#![allow(dead_code)]

use qstatten::experiment::{load_scenario, ScenarioConfig};

/// Scenario text with the given system, sample, budget, metric list and fiber blocks.
pub fn scenario_text(
    system: &str,
    sample: &str,
    n: u64,
    metrics: &str,
    fibers: &[(f64, &str)],
) -> String {
    let mut s = format!(
        "scenario = \"t\"\nsystem = \"{system}\"\nN = {n}\nsample = \"{sample}\"\nmetrics = {metrics}\nseed = 42\n"
    );
    for (alpha, lengths) in fibers {
        s.push_str(&format!(
            "\n[[fibers]]\nalpha = {alpha}\nlengths_km = {lengths}\n"
        ));
    }
    s
}

pub fn scenario(
    system: &str,
    sample: &str,
    n: u64,
    metrics: &str,
    fibers: &[(f64, &str)],
) -> ScenarioConfig {
    load_scenario(&scenario_text(system, sample, n, metrics, fibers), &[]).unwrap()
}
