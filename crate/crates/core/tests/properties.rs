use proptest::prelude::*;

use qstatten::channel::{round_half_up, survival_probability, FiberSpec};
use qstatten::estimator::{params_to_density, CholeskyParams};
use qstatten::experiment::{threshold_contour, CellStats, LengthGrid, SweepResult};
use qstatten::metrics::MetricKind;
use qstatten::qlinalg::{hermitian_eigvals, partial_transpose, ComplexMatrix, C64};

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(4), Just(9)]
}

proptest! {
    #[test]
    fn cholesky_parameters_always_give_a_state(
        (d, t) in dims().prop_flat_map(|d| (Just(d), prop::collection::vec(-1e3f64..1e3, d * d)))
    ) {
        prop_assume!(t.iter().any(|x| x.abs() > 1e-6));
        let rho = params_to_density(&CholeskyParams::new(d, t).unwrap()).unwrap();
        let m = rho.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-10 && m.trace().im.abs() < 1e-12);
        prop_assert!(m.hermiticity_defect() == 0.0);
        prop_assert!(hermitian_eigvals(m).unwrap()[0] > -1e-10);
    }

    #[test]
    fn survival_decreases_with_length(alpha in 0.01f64..1.0, a in 0.0f64..300.0, b in 0.0f64..300.0) {
        let p = |l: f64| survival_probability(&[FiberSpec::new(alpha, l).unwrap()]).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p(hi) <= p(lo));
        prop_assert!(p(lo) > 0.0 && p(lo) <= 1.0);
        let pair = survival_probability(&[FiberSpec::new(alpha, a).unwrap(), FiberSpec::new(alpha, b).unwrap()]).unwrap();
        prop_assert!((pair - p(a) * p(b)).abs() <= 1e-12 * p(a).max(1e-300).max(pair));
    }

    #[test]
    fn rounding_is_nearest(x in 0.0f64..1e9) {
        let r = round_half_up(x) as f64;
        prop_assert!((r - x).abs() <= 0.5);
    }

    #[test]
    fn length_ranges_are_valid(start in 0.0f64..50.0, span in 0.0f64..200.0, step in 0.5f64..20.0) {
        let g = LengthGrid::range(start, start + span, step).unwrap();
        let v = g.values();
        prop_assert_eq!(v[0], start);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(*v.last().unwrap() <= start + span + 1e-6 * step);
        prop_assert!(*v.last().unwrap() + step > start + span - 1e-6 * step);
    }

    #[test]
    fn partial_transpose_is_an_involution(re in prop::collection::vec(-1.0f64..1.0, 81), im in prop::collection::vec(-1.0f64..1.0, 81)) {
        let data: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect();
        let m = ComplexMatrix::from_vec(9, 9, data).unwrap();
        let back = partial_transpose(&partial_transpose(&m, 3, 3).unwrap(), 3, 3).unwrap();
        prop_assert_eq!(back.max_abs_diff(&m), 0.0);
    }

    #[test]
    fn contour_of_planar_field_lies_on_its_level_line(a in 0.5f64..2.0, b in 0.001f64..0.02, level in 0.1f64..0.9) {
        let axis: Vec<f64> = (0..=10).map(|i| 10.0 * i as f64).collect();
        let cells = axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y)))
            .map(|(x, y)| vec![CellStats { mean: a - b * (x + y), sd: 0.0, n: 1, converged_fraction: 1.0 }])
            .collect();
        let r = SweepResult { axes: vec![axis.clone(), axis], metrics: vec![MetricKind::Fidelity], cells };
        for x in threshold_contour(&r, MetricKind::Fidelity, level).unwrap() {
            prop_assert!((a - b * (x.l1 + x.l2) - level).abs() < 1e-9);
        }
    }
}
