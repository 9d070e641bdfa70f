//! Backpropagation-through-time verified against central finite differences
//! for every cell kind.
//!
//!     cargo run --example gradient_check

use longmem::mat::Mat;
use longmem::networks::{backward, forward, init_params, CellKind, Dims};
use longmem::rng::Rng64;

fn main() {
    let dims = Dims { p_x: 2, q: 3, p_z: 2 };
    let (t_len, k, h) = (12usize, 5usize, 1e-5);
    for kind in CellKind::all() {
        let mut params = init_params(kind, dims, k, 42).unwrap();
        let mut rng = Rng64::substream(42, 1);
        params.for_each_param_mut(|v| *v = rng.uniform_in(-0.6, 0.6));
        let inputs = Mat::from_fn(t_len, dims.p_x, |_, _| rng.uniform_in(-1.0, 1.0));
        let gmat = Mat::from_fn(t_len, dims.p_z, |_, _| rng.uniform_in(-1.0, 1.0));
        let objective = |p: &longmem::networks::CellParams| -> f64 {
            let (out, _) = forward(p, &inputs).unwrap();
            out.data().iter().zip(gmat.data()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = forward(&params, &inputs).unwrap();
        let analytic = backward(&params, &cache, &gmat).unwrap().flatten();
        let flat = params.flatten();
        let mut worst = 0.0f64;
        for idx in 0..flat.len() {
            let mut v = flat.clone();
            v[idx] += h;
            let mut plus = params.clone();
            plus.assign_from_flat(&v).unwrap();
            v[idx] -= 2.0 * h;
            let mut minus = params.clone();
            minus.assign_from_flat(&v).unwrap();
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            worst = worst.max((fd - analytic[idx]).abs() / fd.abs().max(analytic[idx].abs()).max(1e-3));
        }
        println!("{:<18} {} parameters, worst relative gradient error {worst:.2e}", kind.name(), flat.len());
    }
}
