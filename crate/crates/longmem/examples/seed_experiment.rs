//! Multi-seed comparison of a plain cell and a memory-filter cell on
//! long-memory data, with a one-sided Welch test on the per-seed RMSE.
//!
//!     cargo run --release --example seed_experiment

use longmem::networks::CellKind;
use longmem::procgen::{generate_arfima, ArfimaSpec};
use longmem::series::Split;
use longmem::training::{multi_seed_experiment, welch_ttest, StoppingRule, TrainSpec};

fn main() {
    let series = generate_arfima(&ArfimaSpec::benchmark_long_memory(), 1601, 1).unwrap();
    let data = series.with_split(Split { n_train: 900, n_val: 400, n_test: 301 }).unwrap();
    let seeds: Vec<u64> = (1..=8).collect();
    let rule = StoppingRule { max_steps: 250, ..Default::default() };

    let mut results = Vec::new();
    for (name, kind, k) in [("rnn", CellKind::Rnn, 0), ("mrnnf", CellKind::Mrnnf, 50)] {
        let spec = TrainSpec { rule, ..TrainSpec::new(kind, 4, k) };
        let exp = multi_seed_experiment(&spec, &data, &seeds).unwrap();
        println!(
            "{name:<6} rmse mean {:.4} (std {:.4}, best {:.4}) over {} seeds",
            exp.summary.rmse.mean, exp.summary.rmse.std, exp.summary.rmse.min, exp.summary.runs
        );
        results.push(exp.outcomes.iter().map(|o| o.record.test_metrics.rmse).collect::<Vec<_>>());
    }
    let tt = welch_ttest(&results[1], &results[0]).unwrap();
    println!(
        "\nWelch test (alternative: memory cell has smaller mean RMSE): \
         t = {:.3}, df = {:.1}, one-sided p = {:.4}",
        tt.t, tt.df, tt.p_one_sided
    );
}
