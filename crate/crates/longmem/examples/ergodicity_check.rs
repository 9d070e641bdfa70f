//! Sufficient-condition checks for geometric ergodicity (hence short
//! memory) of recurrent cells.
//!
//!     cargo run --example ergodicity_check

use longmem::activations::{Activation, OutputFn};
use longmem::diagnostics::{check_linear_ergodicity, check_lstm_ergodicity, check_rnn_ergodicity};
use longmem::mat::Mat;
use longmem::networks::{init_params, CellKind, CellWeights, Dims};

fn show(name: &str, verdict: &longmem::diagnostics::Verdict) {
    println!("{name}: {:?}", verdict.conclusion);
    for c in &verdict.checked_inequalities {
        println!(
            "    {:<46} {:.4} vs {:.4} [{}]",
            c.name,
            c.lhs,
            c.bound,
            if c.satisfied { "ok" } else { "violated" }
        );
    }
    for note in &verdict.notes {
        println!("    note: {note}");
    }
}

fn main() {
    // A bounded activation makes the plain cell contract for any weights.
    let mut params = init_params(CellKind::Rnn, Dims::univariate(1), 0, 1).unwrap();
    params.activation = Activation::Tanh;
    show("tanh cell, arbitrary weights", &check_rnn_ergodicity(&params, 0.99).unwrap());

    // With an identity activation the scalar weight table decides.
    params.activation = Activation::Identity;
    params.output = OutputFn::Identity;
    if let CellWeights::Rnn(p) = &mut params.weights {
        p.w_zh = Mat::scalar(1.0);
        p.w_hh = Mat::scalar(0.5);
        p.w_hx = Mat::scalar(0.3);
    }
    show("identity cell, small weights", &check_rnn_ergodicity(&params, 0.9).unwrap());

    // The gated cell is governed by its forget-gate norms.
    let mut lstm = init_params(CellKind::Lstm, Dims::univariate(1), 0, 2).unwrap();
    if let CellWeights::Lstm(p) = &mut lstm.weights {
        p.w_fh = Mat::scalar(0.2);
        p.w_fy = Mat::scalar(0.1);
        p.b_f = vec![-4.0];
    }
    show("gated cell, inhibited forget gate", &check_lstm_ergodicity(&lstm, 0.4).unwrap());

    if let CellWeights::Lstm(p) = &mut lstm.weights {
        p.b_f = vec![10.0];
    }
    show("gated cell, saturated forget gate", &check_lstm_ergodicity(&lstm, 0.999).unwrap());

    // For the linear cell the spectral-radius criterion cuts both ways.
    show("stable linear cell", &check_linear_ergodicity(&Mat::diag(&[0.7, 0.3]), 1e-6).unwrap());
    show("unstable linear cell", &check_linear_ergodicity(&Mat::diag(&[1.05, 0.3]), 1e-6).unwrap());
}
