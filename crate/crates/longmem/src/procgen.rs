//! Synthetic data generation: fractionally integrated ARMA series with
//! genuine long memory, and self-exciting network processes (the cell's own
//! output fed back as input) that serve as short-memory controls.

use serde::{Deserialize, Serialize};

use crate::activations::sigmoid;
use crate::diagnostics::spectral_radius;
use crate::error::{Error, Result};
use crate::fracdiff::frac_integration_weights;
use crate::mat::Mat;
use crate::networks::{CellParams, CellWeights};
use crate::rng::Rng64;
use crate::series::TimeSeries;

/// Values this large are treated as divergence rather than waiting for
/// floating-point overflow.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Fractionally integrated ARMA specification. The AR polynomial is
/// 1 - ar[0] z - ar[1] z^2 - ...; the MA polynomial is 1 + ma[0] z + ....
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArfimaSpec {
    pub ar: Vec<f64>,
    pub d: f64,
    pub ma: Vec<f64>,
    pub noise_std: f64,
    pub burn_in: usize,
}

impl ArfimaSpec {
    /// ARMA(2,1) with d = 0.4 and unit noise; the long-memory benchmark
    /// configuration: (1 - 0.7B + 0.4B^2)(1-B)^0.4 Y_t = (1 - 0.2B) e_t.
    pub fn benchmark_long_memory() -> ArfimaSpec {
        ArfimaSpec { ar: vec![0.7, -0.4], d: 0.4, ma: vec![-0.2], noise_std: 1.0, burn_in: 2000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.d) {
            return Err(Error::Domain(format!("memory parameter d = {} outside [0, 0.5)", self.d)));
        }
        if self.noise_std < 0.0 || !self.noise_std.is_finite() {
            return Err(Error::Domain("noise_std must be a finite non-negative number".into()));
        }
        if !self.ar.is_empty() {
            let rho = spectral_radius(&companion(&self.ar), 1e-9)?;
            if rho >= 1.0 - 1e-6 {
                return Err(Error::Domain(format!(
                    "AR polynomial is not stationary: companion spectral radius {rho:.6}"
                )));
            }
        }
        Ok(())
    }
}

/// Companion matrix of the recursion x_t = sum_i ar[i] x_{t-1-i}; its
/// spectral radius is below one exactly when the AR polynomial has all roots
/// outside the unit circle.
fn companion(ar: &[f64]) -> Mat {
    let p = ar.len();
    let mut m = Mat::zeros(p, p);
    for (j, &phi) in ar.iter().enumerate() {
        m[(0, j)] = phi;
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// Generate a fractionally integrated ARMA series of length n.
///
/// The ARMA part runs by direct recursion on i.i.d. Gaussian innovations
/// (stream 0 of the seed); fractional integration applies the truncated
/// expansion of the inverse differencing operator over the whole generated
/// window (burn-in plus n, so the effective truncation length is at least
/// the burn-in everywhere); the burn-in prefix is then discarded.
/// Deterministic in (spec, n, seed).
pub fn generate_arfima(spec: &ArfimaSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Domain("series length n must be >= 1".into()));
    }
    let m = n + spec.burn_in;
    let mut rng = Rng64::substream(seed, 0);
    let mut eps = Vec::with_capacity(m);
    for _ in 0..m {
        eps.push(rng.normal_scaled(spec.noise_std));
    }
    // ARMA recursion: x_t = sum ar_i x_{t-1-i} + e_t + sum ma_j e_{t-1-j}.
    let mut x = vec![0.0; m];
    for t in 0..m {
        let mut v = eps[t];
        for (i, &phi) in spec.ar.iter().enumerate() {
            if t > i {
                v += phi * x[t - 1 - i];
            }
        }
        for (j, &theta) in spec.ma.iter().enumerate() {
            if t > j {
                v += theta * eps[t - 1 - j];
            }
        }
        x[t] = v;
    }
    if spec.d == 0.0 {
        return Ok(TimeSeries::univariate(x.split_off(spec.burn_in)));
    }
    let psi = frac_integration_weights(spec.d, m.saturating_sub(1))?;
    let mut y = vec![0.0; m];
    for t in 0..m {
        let mut acc = 0.0;
        for j in 0..=t {
            acc += psi[j] * x[t - j];
        }
        y[t] = acc;
    }
    Ok(TimeSeries::univariate(y.split_off(spec.burn_in)))
}

/// Self-exciting process specification: the cell output at t-1 is the input
/// at t, and i.i.d. Gaussian noise enters the output equation only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessSpec {
    /// State recursion s_t = W s_{t-1} + (e_t, 0): noise on the first block.
    LinearMc {
        #[serde(rename = "W")]
        w: Mat,
        /// Output dimension p; the first p state coordinates receive noise
        /// and are emitted.
        p: usize,
        noise_std: f64,
    },
    /// Cell-driven process; `params` must be an rnn or lstm cell with
    /// p_x = p_z.
    Cell { params: CellParams, noise_std: f64 },
}

/// Iterate a network process for n steps. Deterministic in (spec, n, seed).
pub fn generate_network_process(spec: &ProcessSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::Domain("series length n must be >= 1".into()));
    }
    let mut rng = Rng64::substream(seed, 0);
    match spec {
        ProcessSpec::LinearMc { w, p, noise_std } => {
            if !w.is_square() {
                return Err(Error::Shape("transition matrix must be square".into()));
            }
            if *p == 0 || *p > w.rows() {
                return Err(Error::Shape(format!("output block p = {p} incompatible with state size {}", w.rows())));
            }
            let mut state = vec![0.0; w.rows()];
            let mut rows = Vec::with_capacity(n * p);
            for t in 1..=n {
                let mut next = w.matvec(&state);
                for coord in next.iter_mut().take(*p) {
                    *coord += rng.normal_scaled(*noise_std);
                }
                check_divergence(t, &next)?;
                rows.extend_from_slice(&next[..*p]);
                state = next;
            }
            TimeSeries::multivariate(*p, rows)
        }
        ProcessSpec::Cell { params, noise_std } => {
            params.validate()?;
            let dims = params.dims;
            if dims.p_x != dims.p_z {
                return Err(Error::Shape(
                    "a self-exciting process needs matching input and output dimensions".into(),
                ));
            }
            match &params.weights {
                CellWeights::Rnn(_) | CellWeights::Lstm(_) => {}
                _ => {
                    return Err(Error::Config(
                        "process generation supports rnn and lstm cells".into(),
                    ))
                }
            }
            let mut stepper = CellStepper::new(params);
            let mut y_prev = vec![0.0; dims.p_z];
            let mut rows = Vec::with_capacity(n * dims.p_z);
            for t in 1..=n {
                let mut y = stepper.step(params, &y_prev);
                for v in y.iter_mut() {
                    *v += rng.normal_scaled(*noise_std);
                }
                check_divergence(t, &y)?;
                rows.extend_from_slice(&y);
                y_prev = y;
            }
            TimeSeries::multivariate(dims.p_z, rows)
        }
    }
}

fn check_divergence(step: usize, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
        Err(Error::Numerical(format!("process diverged at step {step}")))
    } else {
        Ok(())
    }
}

/// Single-step evaluator for the feedback loop; keeps only the state the
/// recursion needs.
struct CellStepper {
    h: Vec<f64>,
    c: Vec<f64>,
}

impl CellStepper {
    fn new(params: &CellParams) -> CellStepper {
        CellStepper { h: vec![0.0; params.dims.q], c: vec![0.0; params.dims.q] }
    }

    fn step(&mut self, params: &CellParams, input: &[f64]) -> Vec<f64> {
        match &params.weights {
            CellWeights::Rnn(p) => {
                let mut pre = p.w_hh.matvec(&self.h);
                let from_x = p.w_hx.matvec(input);
                for (j, v) in pre.iter_mut().enumerate() {
                    *v = params.activation.apply(*v + from_x[j] + p.b_h[j]);
                }
                self.h = pre;
                let mut u = p.w_zh.matvec(&self.h);
                for (j, v) in u.iter_mut().enumerate() {
                    *v = params.output.apply(*v + p.b_z[j]);
                }
                u
            }
            CellWeights::Lstm(p) => {
                let q = params.dims.q;
                let gate = |wh: &Mat, wx: &Mat, b: &[f64], h: &[f64]| -> Vec<f64> {
                    let mut pre = wh.matvec(h);
                    let from_x = wx.matvec(input);
                    for (j, v) in pre.iter_mut().enumerate() {
                        *v = sigmoid(*v + from_x[j] + b[j]);
                    }
                    pre
                };
                let f_t = gate(&p.w_fh, &p.w_fy, &p.b_f, &self.h);
                let i_t = gate(&p.w_ih, &p.w_iy, &p.b_i, &self.h);
                let o_t = gate(&p.w_oh, &p.w_oy, &p.b_o, &self.h);
                let mut ct = p.w_ch.matvec(&self.h);
                let from_x = p.w_cy.matvec(input);
                for (j, v) in ct.iter_mut().enumerate() {
                    *v = params.activation.apply(*v + from_x[j] + p.b_c[j]);
                }
                for j in 0..q {
                    self.c[j] = i_t[j] * ct[j] + f_t[j] * self.c[j];
                }
                for j in 0..q {
                    self.h[j] = o_t[j] * params.activation.apply(self.c[j]);
                }
                let mut u = p.w_zh.matvec(&self.h);
                for (j, v) in u.iter_mut().enumerate() {
                    *v = params.output.apply(*v + p.b_z[j]);
                }
                u
            }
            _ => unreachable!("guarded by generate_network_process"),
        }
    }
}
