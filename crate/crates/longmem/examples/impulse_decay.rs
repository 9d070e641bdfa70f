//! Impulse responses of the linearized cells: geometric versus polynomial
//! tails, the dichotomy that separates short from long memory.
//!
//!     cargo run --example impulse_decay

use longmem::diagnostics::{classify_decay, impulse_response, LinearSpec};
use longmem::mat::Mat;

fn classify(name: &str, spec: &LinearSpec, k: usize, tail: usize) {
    let mats = impulse_response(spec, k).unwrap();
    let coeffs: Vec<f64> = mats.iter().map(|m| m[(0, 0)]).collect();
    let c = classify_decay(&coeffs, tail).unwrap();
    println!(
        "{name:<22} {:?} rate {:+.4}  (R^2 exp {:.4} / poly {:.4})",
        c.kind, c.rate, c.fit_r2.0, c.fit_r2.1
    );
}

fn main() {
    classify(
        "plain recurrent",
        &LinearSpec::LinearRnn {
            w_zh: Mat::scalar(1.0),
            w_hh: Mat::scalar(0.7),
            w_hx: Mat::scalar(1.0),
        },
        400,
        50,
    );
    classify(
        "memory-filter cell",
        &LinearSpec::LinearMrnnf {
            w_zh: Mat::scalar(0.5),
            w_hh: Mat::scalar(0.7),
            w_hx: Mat::scalar(1.0),
            w_zm: Mat::scalar(0.8),
            w_mm: Mat::scalar(0.2),
            w_mf: Mat::scalar(0.8),
            d: vec![0.4],
            filter_len: 2400,
        },
        2000,
        100,
    );
    classify(
        "constant-gates cell",
        &LinearSpec::ConstGatesLstm {
            w_zh: Mat::scalar(1.0),
            w_ch: Mat::scalar(0.3),
            w_cx: Mat::scalar(1.0),
            gate_f: vec![0.5],
            gate_i: vec![0.8],
            gate_o: vec![0.7],
        },
        400,
        50,
    );
    classify(
        "filtered cell state",
        &LinearSpec::ConstGatesMlstm {
            w_zh: Mat::scalar(1.0),
            w_ch: Mat::scalar(-0.3),
            w_cx: Mat::scalar(1.0),
            gate_i: vec![0.8],
            gate_o: vec![0.7],
            d: vec![0.35],
            filter_len: 2400,
        },
        2000,
        100,
    );
    println!("\ngeometric tails mark short memory; the filtered cells keep polynomial tails k^-(d+1).");
}
