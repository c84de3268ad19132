use l0conc::mm_core::{deviation_mass, expectation, median_of, FiniteMMSpace};
use proptest::prelude::*;

fn probability(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..100, len).prop_map(|w| {
        let total: u32 = w.iter().sum();
        w.into_iter().map(|x| x as f64 / total as f64).collect()
    })
}

/// Points on a line with random positions, so the metric is valid.
fn line_space() -> impl Strategy<Value = FiniteMMSpace> {
    (1usize..=9)
        .prop_flat_map(|n| (prop::collection::vec(0u32..20, n), probability(n)))
        .prop_map(|(pos, mu)| {
            let labels = (0..pos.len()).map(|i| i.to_string()).collect();
            FiniteMMSpace::from_metric(labels, mu, |i, j| (pos[i] as f64 - pos[j] as f64).abs() / 20.0).unwrap()
        })
}

proptest! {
    #[test]
    fn alpha_is_monotone_and_vanishes_past_diameter(space in line_space()) {
        let grid: Vec<f64> = (0..=12).map(|i| i as f64 / 10.0).collect();
        let alphas: Vec<f64> = grid.iter().map(|&e| space.concentration_alpha_exact(e).unwrap()).collect();
        prop_assert_eq!(alphas[0], 0.5);
        for w in alphas.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (e, a) in grid.iter().zip(&alphas) {
            prop_assert!((0.0..=0.5).contains(a));
            if *e >= space.diameter() && *e > 0.0 {
                prop_assert_eq!(*a, 0.0);
            }
        }
    }

    #[test]
    fn smallest_median_is_a_median(
        (mu, values) in (1usize..12).prop_flat_map(|n| (probability(n), prop::collection::vec(-5i32..5, n)))
    ) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let m = median_of(&mu, &values).unwrap();
        let above: f64 = mu.iter().zip(&values).filter(|(_, v)| **v >= m).map(|(w, _)| w).sum();
        let below: f64 = mu.iter().zip(&values).filter(|(_, v)| **v <= m).map(|(w, _)| w).sum();
        prop_assert!(above >= 0.5 - 1e-12 && below >= 0.5 - 1e-12);
        // no smaller value of f is a median
        for v in values.iter().filter(|v| **v < m) {
            let above: f64 = mu.iter().zip(&values).filter(|(_, x)| **x >= *v).map(|(w, _)| w).sum();
            let below: f64 = mu.iter().zip(&values).filter(|(_, x)| **x <= *v).map(|(w, _)| w).sum();
            prop_assert!(above < 0.5 - 1e-12 || below < 0.5 - 1e-12);
        }
    }

    #[test]
    fn deviation_mass_decreases_in_eps(
        (mu, values) in (1usize..12).prop_flat_map(|n| (probability(n), prop::collection::vec(-50i32..50, n))),
        center in -5.0f64..5.0,
    ) {
        let values: Vec<f64> = values.into_iter().map(|v| v as f64 / 10.0).collect();
        let mut prev = 1.0;
        for k in 1..=20 {
            let m = deviation_mass(&mu, &values, center, k as f64 / 2.0).unwrap();
            prop_assert!(m <= prev + 1e-15);
            prev = m;
        }
        let e = expectation(&mu, &values).unwrap();
        let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert!(e >= lo - 1e-12 && e <= hi + 1e-12);
    }
}
