//! Train one memory-filter cell on a long-memory series and run one-step
//! rolling forecasts on the held-out test segment.
//!
//!     cargo run --release --example train_forecast

use longmem::networks::CellKind;
use longmem::procgen::{generate_arfima, ArfimaSpec};
use longmem::series::Split;
use longmem::training::{rolling_forecast, train, TrainSpec};

fn main() {
    let series = generate_arfima(&ArfimaSpec::benchmark_long_memory(), 1201, 1).unwrap();
    let data = series.with_split(Split { n_train: 700, n_val: 300, n_test: 201 }).unwrap();

    let mut spec = TrainSpec::new(CellKind::Mrnnf, 4, 50);
    spec.rule.max_steps = 300;
    let outcome = train(&spec, &data, 3).unwrap();
    let record = &outcome.record;
    println!(
        "trained {} for {} steps (stop: {:?}), best validation at step {}",
        spec.kind.name(),
        record.steps,
        record.stop_reason,
        record.best_step
    );
    println!(
        "loss: train {:.4} -> {:.4}, validation best {:.4}",
        record.train_losses[0],
        record.train_losses[record.steps],
        record.val_losses[record.best_step]
    );
    let m = &record.test_metrics;
    println!(
        "test metrics: rmse {:.4}, mae {:.4}, mape {}",
        m.rmse,
        m.mae,
        m.mape.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into())
    );
    if let Some(d) = outcome.checkpoint.params.fixed_d() {
        println!("learned memory parameters d = {d:?}");
    }

    let split = data.split.unwrap();
    let pred = rolling_forecast(&outcome.checkpoint, &data, split.test_range()).unwrap();
    println!("\nfirst one-step forecasts on the test segment:");
    for (row, t) in split.test_range().enumerate().take(5) {
        println!("  t = {t}: predicted {:+.4}, observed {:+.4}", pred[(row, 0)], data.row(t)[0]);
    }
}
