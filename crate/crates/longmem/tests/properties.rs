//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use longmem::diagnostics::spectral_radius;
use longmem::fracdiff::{apply_fracdiff, apply_memory_filter, frac_weights};
use longmem::mat::Mat;
use longmem::series::TimeSeries;
use longmem::training::welch_ttest;

proptest! {
    // Recurrence weights equal the direct product at every lag.
    #[test]
    fn weights_match_direct_product(d in 0.01f64..0.99, j in 1usize..400) {
        let fw = frac_weights(d, j).unwrap();
        let mut product = 1.0f64;
        for i in 0..j {
            product *= (i as f64 - d) / (i as f64 + 1.0);
        }
        prop_assert!((fw.w[j] - product).abs() <= 1e-12 * product.abs().max(1e-300));
    }

    // Partial sums of the weights are positive and strictly decreasing.
    #[test]
    fn weight_partial_sums_decrease_to_zero(d in 0.05f64..0.49) {
        let fw = frac_weights(d, 2000).unwrap();
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        for (j, w) in fw.w.iter().enumerate() {
            sum += w;
            if j >= 1 {
                prop_assert!(sum > 0.0, "partial sum not positive at {j}");
                prop_assert!(sum < prev, "partial sum not decreasing at {j}");
            }
            prev = sum;
        }
    }

    // The memory filter is linear in its history argument.
    #[test]
    fn memory_filter_is_linear(
        d in 0.05f64..0.45,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        x in prop::collection::vec(-10.0f64..10.0, 8..40),
        y in prop::collection::vec(-10.0f64..10.0, 8..40),
    ) {
        let n = x.len().min(y.len());
        let combo: Vec<f64> = (0..n).map(|i| alpha * x[i] + beta * y[i]).collect();
        let k = 24;
        let fc = apply_memory_filter(&combo, d, k).unwrap();
        let fx = apply_memory_filter(&x[..n], d, k).unwrap();
        let fy = apply_memory_filter(&y[..n], d, k).unwrap();
        let expect = alpha * fx + beta * fy;
        prop_assert!((fc - expect).abs() < 1e-10 * (1.0 + expect.abs()));
    }

    // Differencing then integrating a short prefix restores the series:
    // conv(w, psi) is the identity, so applying both truncated filters is
    // exact while t stays below the truncation lag.
    #[test]
    fn fracdiff_round_trip_under_truncation(
        d in 0.05f64..0.45,
        series in prop::collection::vec(-5.0f64..5.0, 4..48),
    ) {
        let k = 64;
        let diffed = apply_fracdiff(&series, d, k).unwrap();
        let psi = longmem::fracdiff::frac_integration_weights(d, k).unwrap();
        for t in 0..series.len().min(k) {
            let mut acc = 0.0;
            for j in 0..=t {
                acc += psi[j] * diffed[t - j];
            }
            prop_assert!((acc - series[t]).abs() < 1e-9, "t={t}: {acc} vs {}", series[t]);
        }
    }

    // The norm-root certificate never undershoots the true radius of a
    // diagonal matrix and never exceeds the l1 norm.
    #[test]
    fn spectral_radius_bounds_for_diagonals(entries in prop::collection::vec(-2.0f64..2.0, 1..6)) {
        let m = Mat::diag(&entries);
        let rho = spectral_radius(&m, 1e-9).unwrap();
        let truth = entries.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!((rho - truth).abs() <= 1e-6 * truth.max(1e-12) + 1e-12);
    }

    // One-sided p-values of swapped samples are complementary.
    #[test]
    fn welch_p_values_are_complementary(
        a in prop::collection::vec(-5.0f64..5.0, 3..20),
        b in prop::collection::vec(-5.0f64..5.0, 3..20),
    ) {
        prop_assume!(a.iter().any(|v| (v - a[0]).abs() > 1e-9));
        let ab = welch_ttest(&a, &b).unwrap();
        let ba = welch_ttest(&b, &a).unwrap();
        prop_assert!((ab.p_one_sided + ba.p_one_sided - 1.0).abs() < 1e-9);
        prop_assert!((ab.t + ba.t).abs() < 1e-9);
    }

    // CSV round trip is lossless for arbitrary finite values.
    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e12f64..1e12, 1..40)) {
        let series = TimeSeries::univariate(values.clone());
        let back = TimeSeries::from_csv_str(&series.to_csv_string()).unwrap();
        prop_assert_eq!(back.univariate_values().unwrap(), &values[..]);
    }
}
