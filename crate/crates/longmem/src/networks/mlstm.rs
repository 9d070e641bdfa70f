//! Memory-filter LSTM. The forget gate is replaced by a memory gate d^t and
//! the cell state follows the filtered recursion
//!   c_i^t = - sum_{j=1}^{K} w_j(d_i^t) c_i^{t-j} + i^t_i c~^t_i,
//! with c^s = 0 for s <= 0. d^t has one coordinate per cell-state entry and
//! is either gated from [d^{t-1}, h^{t-1}, x^t] or fixed through theta_d.

use crate::activations::sigmoid;
use crate::error::{Error, Result};
use crate::fracdiff::frac_weights;
use crate::mat::Mat;

use super::{
    check_finite, d_gate_derivative, fill_frac_weights, fixed_d_values, half_sigmoid, CellParams,
    CellWeights, DMode, Gradients, KindCache, MlstmParams, StateCache,
};

pub(super) fn forward(params: &CellParams, p: &MlstmParams, inputs: &Mat) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let (p_x, q) = (params.dims.p_x, params.dims.q);
    let k = params.filter_len;

    let fixed_taps: Option<Vec<(Vec<f64>, Vec<f64>)>> = match &p.d_mode {
        DMode::Fixed { theta_d } => Some(
            fixed_d_values(theta_d)
                .iter()
                .map(|&d| frac_weights(d, k).map(|fw| (fw.w, fw.dw)))
                .collect::<Result<_>>()?,
        ),
        DMode::Dynamic { .. } => None,
    };
    let mut w_buf = vec![0.0; k + 1];
    let mut dw_buf = vec![0.0; k + 1];

    let mut h = vec![vec![0.0; q]];
    let mut c: Vec<Vec<f64>> = vec![vec![0.0; q]];
    let mut d = vec![vec![0.0; q]];
    let (mut is, mut os, mut cts, mut acts, mut dcdd) = (
        Vec::with_capacity(t_len),
        Vec::with_capacity(t_len),
        Vec::with_capacity(t_len),
        Vec::with_capacity(t_len),
        Vec::with_capacity(t_len),
    );
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);

    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let h_prev = &h[t - 1];
        let d_t: Vec<f64> = match &p.d_mode {
            DMode::Dynamic { w_d, b_d } => {
                let mut v = Vec::with_capacity(q + q + p_x);
                v.extend_from_slice(&d[t - 1]);
                v.extend_from_slice(h_prev);
                v.extend_from_slice(xt);
                let mut s = w_d.matvec(&v);
                for (j, sv) in s.iter_mut().enumerate() {
                    *sv = half_sigmoid(*sv + b_d[j]);
                }
                s
            }
            DMode::Fixed { theta_d } => fixed_d_values(theta_d),
        };
        let gate = |wh: &Mat, wx: &Mat, b: &[f64]| -> Vec<f64> {
            let mut pre = wh.matvec(h_prev);
            let from_x = wx.matvec(xt);
            for (j, v) in pre.iter_mut().enumerate() {
                *v = sigmoid(*v + from_x[j] + b[j]);
            }
            pre
        };
        let i_t = gate(&p.w_ih, &p.w_ix, &p.b_i);
        let o_t = gate(&p.w_oh, &p.w_ox, &p.b_o);
        let mut ct_pre = p.w_ch.matvec(h_prev);
        let from_x = p.w_cx.matvec(xt);
        for (j, v) in ct_pre.iter_mut().enumerate() {
            *v = params.activation.apply(*v + from_x[j] + p.b_c[j]);
        }
        // Filtered cell-state update.
        let mut c_t = vec![0.0; q];
        let mut dcdd_t = vec![0.0; q];
        for coord in 0..q {
            let (w, dw): (&[f64], &[f64]) = match &fixed_taps {
                Some(taps) => (&taps[coord].0, &taps[coord].1),
                None => {
                    fill_frac_weights(d_t[coord], &mut w_buf, &mut dw_buf);
                    (&w_buf, &dw_buf)
                }
            };
            let mut acc = 0.0;
            let mut dacc = 0.0;
            for j in 1..=k.min(t) {
                let past = c[t - j][coord];
                acc -= w[j] * past;
                dacc -= dw[j] * past;
            }
            c_t[coord] = acc + i_t[coord] * ct_pre[coord];
            dcdd_t[coord] = dacc;
        }
        check_finite(t, &c_t)?;
        let act_c: Vec<f64> = c_t.iter().map(|v| params.activation.apply(*v)).collect();
        let h_t: Vec<f64> = (0..q).map(|j| o_t[j] * act_c[j]).collect();
        let mut u = p.w_zh.matvec(&h_t);
        for (j, v) in u.iter_mut().enumerate() {
            *v = params.output.apply(*v + p.b_z[j]);
            outputs[(t - 1, j)] = *v;
        }
        check_finite(t, &u)?;
        h.push(h_t);
        c.push(c_t);
        d.push(d_t);
        is.push(i_t);
        os.push(o_t);
        cts.push(ct_pre);
        acts.push(act_c);
        dcdd.push(dcdd_t);
    }
    let cache = StateCache {
        kind: params.kind,
        dims: params.dims,
        t_len,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        kc: KindCache::Mlstm { h, c, i: is, o: os, c_tilde: cts, cell_act: acts, d, dcdd },
    };
    Ok((outputs, cache))
}

pub(super) fn backward(
    params: &CellParams,
    p: &MlstmParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::Mlstm { h, c: _, i, o, c_tilde, cell_act, d, dcdd } = &cache.kc else {
        return Err(Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let CellWeights::Mlstm(g) = &mut grads.weights else { unreachable!() };
    let (p_x, q) = (params.dims.p_x, params.dims.q);
    let k = params.filter_len;
    let t_len = cache.t_len;

    let fixed_taps: Option<Vec<Vec<f64>>> = match &p.d_mode {
        DMode::Fixed { theta_d } => Some(
            fixed_d_values(theta_d)
                .iter()
                .map(|&dv| frac_weights(dv, k).map(|fw| fw.w))
                .collect::<Result<_>>()?,
        ),
        DMode::Dynamic { .. } => None,
    };
    let mut w_buf = vec![0.0; k + 1];
    let mut dw_buf = vec![0.0; k + 1];

    // Cell-state gradients accumulate across up to K future steps.
    let mut dc_acc: Vec<Vec<f64>> = vec![vec![0.0; q]; t_len + 1];
    let mut dh_next = vec![0.0; q];
    let mut dd_next = vec![0.0; q];
    for t in (1..=t_len).rev() {
        let zt = cache.outputs.row(t - 1);
        let du: Vec<f64> = output_grads
            .row(t - 1)
            .iter()
            .zip(zt)
            .map(|(gz, z)| gz * params.output.derivative_from_output(*z))
            .collect();
        g.w_zh.add_outer(&du, &h[t]);
        for (b, v) in g.b_z.iter_mut().zip(&du) {
            *b += v;
        }
        let mut dh = dh_next;
        p.w_zh.add_matvec_t(&du, &mut dh);

        let (i_t, o_t, ct_t, act_t) = (&i[t - 1], &o[t - 1], &c_tilde[t - 1], &cell_act[t - 1]);
        let do_t: Vec<f64> = (0..q).map(|j| dh[j] * act_t[j]).collect();
        let dc: Vec<f64> = (0..q)
            .map(|j| {
                dh[j] * o_t[j] * params.activation.derivative_from_output(act_t[j]) + dc_acc[t][j]
            })
            .collect();
        let di: Vec<f64> = (0..q).map(|j| dc[j] * ct_t[j]).collect();
        let dct: Vec<f64> = (0..q).map(|j| dc[j] * i_t[j]).collect();

        // Distribute through the filter taps into past cell states, and into
        // the memory parameter via the cached d-derivative of the sum.
        for coord in 0..q {
            let w: &[f64] = match &fixed_taps {
                Some(taps) => &taps[coord],
                None => {
                    fill_frac_weights(d[t][coord], &mut w_buf, &mut dw_buf);
                    &w_buf
                }
            };
            let dcv = dc[coord];
            if dcv != 0.0 {
                for j in 1..=k.min(t - 1) {
                    dc_acc[t - j][coord] -= w[j] * dcv;
                }
            }
        }
        let mut dd: Vec<f64> = (0..q).map(|j| dc[j] * dcdd[t - 1][j] + dd_next[j]).collect();

        let h_prev = &h[t - 1];
        let xt = cache.inputs.row(t - 1);
        let mut dh_prev = vec![0.0; q];
        let gate_back = |dv: &[f64], post: &[f64], wh: &Mat, gwh: &mut Mat, gwx: &mut Mat, gb: &mut Vec<f64>, sigmoid_gate: bool, dh_prev: &mut [f64]| {
            let ds: Vec<f64> = (0..q)
                .map(|j| {
                    let deriv = if sigmoid_gate {
                        post[j] * (1.0 - post[j])
                    } else {
                        params.activation.derivative_from_output(post[j])
                    };
                    dv[j] * deriv
                })
                .collect();
            gwh.add_outer(&ds, h_prev);
            gwx.add_outer(&ds, xt);
            for (b, v) in gb.iter_mut().zip(&ds) {
                *b += v;
            }
            wh.add_matvec_t(&ds, dh_prev);
        };
        gate_back(&di, i_t, &p.w_ih, &mut g.w_ih, &mut g.w_ix, &mut g.b_i, true, &mut dh_prev);
        gate_back(&do_t, o_t, &p.w_oh, &mut g.w_oh, &mut g.w_ox, &mut g.b_o, true, &mut dh_prev);
        gate_back(&dct, ct_t, &p.w_ch, &mut g.w_ch, &mut g.w_cx, &mut g.b_c, false, &mut dh_prev);

        match (&p.d_mode, &mut g.d_mode) {
            (DMode::Dynamic { w_d, .. }, DMode::Dynamic { w_d: gw_d, b_d: gb_d }) => {
                let ds: Vec<f64> = (0..q).map(|j| dd[j] * d_gate_derivative(d[t][j])).collect();
                let mut v = Vec::with_capacity(q + q + p_x);
                v.extend_from_slice(&d[t - 1]);
                v.extend_from_slice(h_prev);
                v.extend_from_slice(xt);
                gw_d.add_outer(&ds, &v);
                for (b, val) in gb_d.iter_mut().zip(&ds) {
                    *b += val;
                }
                let mut back = vec![0.0; q + q + p_x];
                w_d.add_matvec_t(&ds, &mut back);
                dd_next = back[..q].to_vec();
                for j in 0..q {
                    dh_prev[j] += back[q + j];
                }
            }
            (DMode::Fixed { .. }, DMode::Fixed { theta_d: g_theta }) => {
                for j in 0..q {
                    g_theta[j] += dd[j] * d_gate_derivative(d[t][j]);
                }
                dd.iter_mut().for_each(|v| *v = 0.0);
                dd_next = dd;
            }
            _ => unreachable!(),
        }
        dh_next = dh_prev;
    }
    Ok(grads)
}
