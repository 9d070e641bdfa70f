//! Fractional-differencing weights: values, derivatives and tail decay.
//!
//!     cargo run --example filter_weights

use longmem::diagnostics::linear_fit;
use longmem::fracdiff::{frac_integration_weights, frac_weights};

fn main() {
    let d = 0.4;
    let fw = frac_weights(d, 10_000).unwrap();
    println!("weights of (1-B)^{d} truncated at K = 10000:");
    for j in [0usize, 1, 2, 5, 10, 100, 1000, 10_000] {
        println!("  w_{j:<6} = {:+.6e}   dw_{j}/dd = {:+.6e}", fw.w[j], fw.dw[j]);
    }

    // The tail follows a power law with exponent -(d+1).
    let xs: Vec<f64> = (100..=10_000).map(|j| (j as f64).ln()).collect();
    let ys: Vec<f64> = (100..=10_000).map(|j| fw.w[j].abs().ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    println!("\ntail decay over j in [100, 10000]: slope {slope:.4} (theory {:.4}), R^2 {r2:.6}", -(d + 1.0));

    // The inverse operator's coefficients grow the memory back.
    let psi = frac_integration_weights(d, 10).unwrap();
    println!("\nfirst coefficients of (1-B)^(-{d}): {:?}", &psi[..6]);

    // Convolving the two coefficient sequences gives the identity.
    let mut conv_at_5 = 0.0;
    for j in 0..=5 {
        conv_at_5 += fw.w[j] * psi[5 - j];
    }
    println!("conv(w, psi) at lag 5 (should vanish): {conv_at_5:.2e}");
}
