mod common;

use common::scenario;
use qstatten::channel::ShotNoise;
use qstatten::estimator::{params_to_density, CholeskyParams};
use qstatten::experiment::{
    run_bipartite_sweep, run_single_sweep, threshold_contour, unit_streams, FiberAxis, LengthGrid,
};
use qstatten::metrics::{fidelity_pure, MetricKind};
use qstatten::states::qubit_sample;

#[test]
fn qubit_at_zero_length_is_accurate() {
    let cfg = scenario(
        "qubit",
        "qubit_bloch",
        100,
        "[\"fidelity\"]",
        &[(0.2, "[0.0]")],
    );
    let r = run_single_sweep(&cfg).unwrap();
    let c = r.cell(MetricKind::Fidelity, &[0]).unwrap();
    assert!(c.mean >= 0.90, "{c:?}");
    assert_eq!(c.n, 220);
}

#[test]
fn zero_photons_average_the_fallback_estimates() {
    let cfg = scenario(
        "qubit",
        "qubit_bloch",
        0,
        "[\"fidelity\"]",
        &[(0.2, "[0.0, 70.0]")],
    );
    let r = run_single_sweep(&cfg).unwrap();
    let sample = qubit_sample();
    for (i, &l) in [0.0, 70.0].iter().enumerate() {
        let fiber = cfg.fibers[0].spec_at(l).unwrap();
        let expected: Vec<f64> = sample
            .states
            .iter()
            .enumerate()
            .map(|(s, psi)| {
                let (_, mut est) = unit_streams(cfg.seed, &[fiber], s);
                let rho = params_to_density(&CholeskyParams::random(2, &mut est)).unwrap();
                fidelity_pure(psi, &rho).unwrap().value
            })
            .collect();
        let mean = expected.iter().sum::<f64>() / expected.len() as f64;
        let c = r.cell(MetricKind::Fidelity, &[i]).unwrap();
        assert!((c.mean - mean).abs() < 1e-12, "{} vs {mean}", c.mean);
    }
}

#[test]
fn entangled_qubits_at_origin_keep_their_entanglement() {
    let cfg = scenario(
        "two_qubit",
        "phi_family",
        200,
        "[\"fidelity\", \"concurrence\"]",
        &[(0.2, "[0.0]"), (0.2, "[0.0]")],
    );
    let r = run_bipartite_sweep(&cfg).unwrap();
    let c = r.cell(MetricKind::Concurrence, &[0, 0]).unwrap();
    assert!(c.mean >= 0.9, "{c:?}");
    assert_eq!(
        r.metrics,
        vec![MetricKind::Fidelity, MetricKind::Concurrence]
    );
}

#[test]
fn entangled_qutrits_noiseless_negativity() {
    let mut cfg = scenario(
        "two_qutrit",
        "theta_family",
        100_000,
        "[\"negativity\"]",
        &[(0.2, "[0.0]"), (0.2, "[0.0]")],
    );
    cfg.channel.shot_noise = ShotNoise::Mean;
    cfg.sample_limit = Some(4);
    let r = run_bipartite_sweep(&cfg).unwrap();
    let c = r.cell(MetricKind::Negativity, &[0, 0]).unwrap();
    assert_eq!(c.n, 4);
    assert!(c.mean - c.sd >= 0.99 - 1e-12 && c.mean >= 0.99, "{c:?}");
}

#[test]
fn sd_grows_with_length() {
    let cfg = scenario(
        "qubit",
        "qubit_bloch",
        50,
        "[\"fidelity\"]",
        &[(0.2, "[0.0, 150.0]")],
    );
    let r = run_single_sweep(&cfg).unwrap();
    let near = r.cell(MetricKind::Fidelity, &[0]).unwrap();
    let far = r.cell(MetricKind::Fidelity, &[1]).unwrap();
    assert!(far.sd > near.sd, "{near:?} {far:?}");
}

#[test]
fn bipartite_map_is_symmetric_within_noise() {
    let cfg = scenario(
        "two_qubit",
        "phi_family",
        200,
        "[\"concurrence\"]",
        &[(0.2, "[0.0, 40.0, 80.0]"), (0.2, "[0.0, 40.0, 80.0]")],
    );
    let r = run_bipartite_sweep(&cfg).unwrap();
    // Mirrored cells are independent estimates of the same quantity; their
    // standardized differences must agree within 2 SE in the RMS sense.
    let mut z2 = Vec::new();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let a = r.cell(MetricKind::Concurrence, &[i, j]).unwrap();
            let b = r.cell(MetricKind::Concurrence, &[j, i]).unwrap();
            let se = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
            z2.push(((a.mean - b.mean) / se).powi(2));
        }
    }
    let mean_z2 = z2.iter().sum::<f64>() / z2.len() as f64;
    assert!(mean_z2 <= 4.0, "{z2:?}");
    // Crossings exist only where the threshold is actually passed.
    let contour =
        threshold_contour(&r, MetricKind::Concurrence, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    for x in contour {
        assert!(x.l1 + x.l2 > 40.0, "{x:?}");
    }
}

#[test]
fn sweeps_reject_mismatched_systems() {
    let single = scenario(
        "qubit",
        "qubit_bloch",
        10,
        "[\"fidelity\"]",
        &[(0.2, "[0.0]")],
    );
    assert!(run_bipartite_sweep(&single).is_err());
    let pair = scenario(
        "two_qubit",
        "phi_family",
        10,
        "[\"fidelity\"]",
        &[(0.2, "[0.0]"), (0.2, "[0.0]")],
    );
    assert!(run_single_sweep(&pair).is_err());

    let mut bad = single.clone();
    bad.fibers.push(FiberAxis {
        alpha: 0.2,
        lengths_km: LengthGrid::new(vec![0.0]).unwrap(),
    });
    assert!(run_single_sweep(&bad).is_err());
}

#[test]
fn cells_hold_whole_sample_and_valid_ranges() {
    let cfg = scenario(
        "qutrit",
        "qutrit_grid",
        20,
        "[\"fidelity\"]",
        &[(0.3, "[0.0, 60.0]")],
    );
    let mut cfg = cfg;
    cfg.sample_limit = Some(50);
    let r = run_single_sweep(&cfg).unwrap();
    for row in &r.cells {
        let c = row[0];
        assert_eq!(c.n, 50);
        assert!(c.sd >= 0.0 && (0.0..=1.0).contains(&c.mean));
        assert!((0.0..=1.0).contains(&c.converged_fraction));
    }
}
