//! Memory diagnostics: classification, ACF tail fit and low-frequency
//! periodogram slope for a long-memory and a short-memory series.
//!
//!     cargo run --example diagnose_memory

use longmem::diagnostics::{classify_series_memory, linear_fit, periodogram_lowfreq};
use longmem::procgen::{generate_arfima, ArfimaSpec};
use longmem::rng::Rng64;

fn report(name: &str, values: &[f64]) {
    let rep = classify_series_memory(values).unwrap();
    let (freqs, ords) = periodogram_lowfreq(values, 50).unwrap();
    let fx: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let fy: Vec<f64> = ords.iter().map(|o| o.ln()).collect();
    let (slope, _, _) = linear_fit(&fx, &fy);
    println!("{name}:");
    println!("  class                : {:?}", rep.class);
    println!("  white-noise fraction : {:.3}", rep.white_noise_fraction);
    if let Some(decay) = &rep.acf_decay {
        println!("  ACF tail fit         : {:?} rate {:.3}", decay.kind, decay.rate);
    }
    println!("  low-frequency slope  : {slope:.3}  (0 for flat spectra, -2d for memory d)");
}

fn main() {
    let long = generate_arfima(&ArfimaSpec::benchmark_long_memory(), 50_000, 1).unwrap();
    report("fractionally integrated ARMA (d = 0.4)", long.univariate_values().unwrap());

    let mut rng = Rng64::from_seed(4);
    let white: Vec<f64> = (0..50_000).map(|_| rng.normal()).collect();
    report("white noise", &white);
}
