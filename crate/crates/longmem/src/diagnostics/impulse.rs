//! Impulse-response extraction for the linearized cells: the coefficient
//! matrices A_0..A_K of y^t = sum_k A_k x^{t-k} + noise.
//!
//! Each variant admits a closed or recursive form once activations and the
//! output map are the identity:
//! - linear RNN: A_k = W_zh W_hh^k W_hx (geometric decay).
//! - linear fixed-d memory RNN: A_k = C_k + D_k, the geometric part plus the
//!   convolution of the geometric memory-unit transfer with the fractional
//!   filter taps.
//! - constant-gates LSTM: A_k = W_zh D_o G^k D_i W_cx with
//!   G = D_f + D_i W_ch D_o.
//! - constant-gates memory LSTM: A_k = W_zh D_o Theta_k D_i W_cx, where
//!   Theta_0 = I and Theta_k = C Theta_{k-1} - sum_j W_j Theta_{k-j} inverts
//!   the filtered cell-state recursion (C = D_i W_ch D_o, W_j the diagonal
//!   filter taps).
//!
//! The fixed-d memory RNN filter here uses the same index convention as the
//! forward pass (the window starts at the current observation), so these
//! responses agree with the network cells run with identity activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracdiff::frac_weights;
use crate::mat::Mat;

/// Linearized cell whose impulse response has a tractable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LinearSpec {
    LinearRnn {
        #[serde(rename = "W_zh")]
        w_zh: Mat,
        #[serde(rename = "W_hh")]
        w_hh: Mat,
        #[serde(rename = "W_hx")]
        w_hx: Mat,
    },
    LinearMrnnf {
        #[serde(rename = "W_zh")]
        w_zh: Mat,
        #[serde(rename = "W_hh")]
        w_hh: Mat,
        #[serde(rename = "W_hx")]
        w_hx: Mat,
        #[serde(rename = "W_zm")]
        w_zm: Mat,
        #[serde(rename = "W_mm")]
        w_mm: Mat,
        #[serde(rename = "W_mf")]
        w_mf: Mat,
        /// One memory parameter per input coordinate.
        d: Vec<f64>,
        /// Filter truncation lag of the underlying cell.
        filter_len: usize,
    },
    ConstGatesLstm {
        #[serde(rename = "W_zh")]
        w_zh: Mat,
        #[serde(rename = "W_ch")]
        w_ch: Mat,
        #[serde(rename = "W_cx")]
        w_cx: Mat,
        gate_f: Vec<f64>,
        gate_i: Vec<f64>,
        gate_o: Vec<f64>,
    },
    ConstGatesMlstm {
        #[serde(rename = "W_zh")]
        w_zh: Mat,
        #[serde(rename = "W_ch")]
        w_ch: Mat,
        #[serde(rename = "W_cx")]
        w_cx: Mat,
        gate_i: Vec<f64>,
        gate_o: Vec<f64>,
        /// One memory parameter per cell-state coordinate.
        d: Vec<f64>,
        filter_len: usize,
    },
}

fn check_chain(mats: &[(&str, &Mat)]) -> Result<()> {
    for pair in mats.windows(2) {
        let (name_a, a) = pair[0];
        let (name_b, b) = pair[1];
        if a.cols() != b.rows() {
            return Err(Error::Shape(format!(
                "{name_a} ({}x{}) does not compose with {name_b} ({}x{})",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
    }
    Ok(())
}

/// First K+1 impulse-response matrices A_0..A_K of a linearized cell.
pub fn impulse_response(spec: &LinearSpec, k: usize) -> Result<Vec<Mat>> {
    if k == 0 {
        return Err(Error::Domain("impulse response length K must be >= 1".into()));
    }
    match spec {
        LinearSpec::LinearRnn { w_zh, w_hh, w_hx } => {
            check_chain(&[("W_zh", w_zh), ("W_hh", w_hh), ("W_hx", w_hx)])?;
            if !w_hh.is_square() {
                return Err(Error::Shape("W_hh must be square".into()));
            }
            Ok(geometric_chain(w_zh, w_hh, w_hx, k))
        }
        LinearSpec::LinearMrnnf { w_zh, w_hh, w_hx, w_zm, w_mm, w_mf, d, filter_len } => {
            check_chain(&[("W_zh", w_zh), ("W_hh", w_hh), ("W_hx", w_hx)])?;
            check_chain(&[("W_zm", w_zm), ("W_mm", w_mm), ("W_mf", w_mf)])?;
            if !w_hh.is_square() || !w_mm.is_square() {
                return Err(Error::Shape("W_hh and W_mm must be square".into()));
            }
            if w_mf.cols() != d.len() || w_hx.cols() != d.len() {
                return Err(Error::Shape("d must have one entry per input coordinate".into()));
            }
            if *filter_len == 0 {
                return Err(Error::Domain("filter_len must be >= 1".into()));
            }
            let hidden = geometric_chain(w_zh, w_hh, w_hx, k);
            // Transfer of the memory unit: G_r = W_zm W_mm^r W_mf.
            let transfer = geometric_chain(w_zm, w_mm, w_mf, k);
            // Filter taps per input coordinate, window anchored at the
            // current observation: lag l carries w_{l+1}(d_i).
            let taps: Vec<Vec<f64>> =
                d.iter().map(|&di| frac_weights(di, *filter_len).map(|fw| fw.w)).collect::<Result<_>>()?;
            let (p_z, p_x) = (w_zh.rows(), w_hx.cols());
            let mut out = Vec::with_capacity(k + 1);
            for kk in 0..=k {
                let mut a = hidden[kk].clone();
                let l_max = kk.min(filter_len - 1);
                for l in 0..=l_max {
                    let g = &transfer[kk - l];
                    for row in 0..p_z {
                        for col in 0..p_x {
                            a[(row, col)] += g[(row, col)] * taps[col][l + 1];
                        }
                    }
                }
                out.push(a);
            }
            Ok(out)
        }
        LinearSpec::ConstGatesLstm { w_zh, w_ch, w_cx, gate_f, gate_i, gate_o } => {
            let q = w_ch.rows();
            if gate_f.len() != q || gate_i.len() != q || gate_o.len() != q || !w_ch.is_square() {
                return Err(Error::Shape("gate vectors must match the (square) W_ch dimension".into()));
            }
            check_chain(&[("W_zh", w_zh), ("W_ch", w_ch), ("W_cx", w_cx)])?;
            // c^t = G c^{t-1} + D_i W_cx x^t with G = D_f + D_i W_ch D_o.
            let mut g = Mat::diag(gate_f);
            for i in 0..q {
                for j in 0..q {
                    g[(i, j)] += gate_i[i] * w_ch[(i, j)] * gate_o[j];
                }
            }
            let left = w_zh.matmul(&Mat::diag(gate_o));
            let right = Mat::diag(gate_i).matmul(w_cx);
            Ok(geometric_chain(&left, &g, &right, k))
        }
        LinearSpec::ConstGatesMlstm { w_zh, w_ch, w_cx, gate_i, gate_o, d, filter_len } => {
            let q = w_ch.rows();
            if gate_i.len() != q || gate_o.len() != q || d.len() != q || !w_ch.is_square() {
                return Err(Error::Shape("gate and d vectors must match the (square) W_ch dimension".into()));
            }
            check_chain(&[("W_zh", w_zh), ("W_ch", w_ch), ("W_cx", w_cx)])?;
            if *filter_len == 0 {
                return Err(Error::Domain("filter_len must be >= 1".into()));
            }
            let taps: Vec<Vec<f64>> =
                d.iter().map(|&di| frac_weights(di, *filter_len).map(|fw| fw.w)).collect::<Result<_>>()?;
            // C = D_i W_ch D_o.
            let mut c = Mat::zeros(q, q);
            for i in 0..q {
                for j in 0..q {
                    c[(i, j)] = gate_i[i] * w_ch[(i, j)] * gate_o[j];
                }
            }
            // Theta_0 = I, Theta_k = C Theta_{k-1} - sum_{j=1..min(k,K)} W_j Theta_{k-j}.
            let mut thetas: Vec<Mat> = Vec::with_capacity(k + 1);
            thetas.push(Mat::identity(q));
            for kk in 1..=k {
                let mut th = c.matmul(&thetas[kk - 1]);
                for j in 1..=kk.min(*filter_len) {
                    let prev = &thetas[kk - j];
                    for row in 0..q {
                        let tap = taps[row][j];
                        if tap == 0.0 {
                            continue;
                        }
                        for col in 0..q {
                            th[(row, col)] -= tap * prev[(row, col)];
                        }
                    }
                }
                thetas.push(th);
            }
            let left = w_zh.matmul(&Mat::diag(gate_o));
            let right = Mat::diag(gate_i).matmul(w_cx);
            Ok(thetas.into_iter().map(|th| left.matmul(&th).matmul(&right)).collect())
        }
    }
}

/// A_k = L M^k R for k = 0..K.
fn geometric_chain(left: &Mat, mid: &Mat, right: &Mat, k: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(k + 1);
    let mut cur = right.clone();
    out.push(left.matmul(&cur));
    for _ in 1..=k {
        cur = mid.matmul(&cur);
        out.push(left.matmul(&cur));
    }
    out
}
