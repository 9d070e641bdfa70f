//! Constant-gates cells: the gate activations are trainable constants rather
//! than functions of the state, which makes the linearized memory analysis
//! tractable while keeping the cells trainable end to end.

use crate::error::{Error, Result};
use crate::fracdiff::frac_weights;
use crate::mat::Mat;

use super::{
    check_finite, d_gate_derivative, fixed_d_values, CellParams, CellWeights,
    ConstGatesLstmParams, ConstGatesMlstmParams, Gradients, KindCache, StateCache,
};

fn candidate(params: &CellParams, w_ch: &Mat, w_cx: &Mat, b_c: &[f64], h_prev: &[f64], xt: &[f64]) -> Vec<f64> {
    let mut pre = w_ch.matvec(h_prev);
    let from_x = w_cx.matvec(xt);
    for (j, v) in pre.iter_mut().enumerate() {
        *v = params.activation.apply(*v + from_x[j] + b_c[j]);
    }
    pre
}

fn output_row(params: &CellParams, w_zh: &Mat, b_z: &[f64], h_t: &[f64], outputs: &mut Mat, t: usize) -> Vec<f64> {
    let mut u = w_zh.matvec(h_t);
    for (j, v) in u.iter_mut().enumerate() {
        *v = params.output.apply(*v + b_z[j]);
        outputs[(t - 1, j)] = *v;
    }
    u
}

pub(super) fn forward_lstm(
    params: &CellParams,
    p: &ConstGatesLstmParams,
    inputs: &Mat,
) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let q = params.dims.q;
    let mut h = vec![vec![0.0; q]];
    let mut c = vec![vec![0.0; q]];
    let mut cts = Vec::with_capacity(t_len);
    let mut acts = Vec::with_capacity(t_len);
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);
    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let ct_pre = candidate(params, &p.w_ch, &p.w_cx, &p.b_c, &h[t - 1], xt);
        let c_t: Vec<f64> =
            (0..q).map(|j| p.gate_i[j] * ct_pre[j] + p.gate_f[j] * c[t - 1][j]).collect();
        check_finite(t, &c_t)?;
        let act_c: Vec<f64> = c_t.iter().map(|v| params.activation.apply(*v)).collect();
        let h_t: Vec<f64> = (0..q).map(|j| p.gate_o[j] * act_c[j]).collect();
        let u = output_row(params, &p.w_zh, &p.b_z, &h_t, &mut outputs, t);
        check_finite(t, &u)?;
        h.push(h_t);
        c.push(c_t);
        cts.push(ct_pre);
        acts.push(act_c);
    }
    let cache = StateCache {
        kind: params.kind,
        dims: params.dims,
        t_len,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        kc: KindCache::ConstGates { h, c, c_tilde: cts, cell_act: acts, dcdd: Vec::new() },
    };
    Ok((outputs, cache))
}

pub(super) fn forward_mlstm(
    params: &CellParams,
    p: &ConstGatesMlstmParams,
    inputs: &Mat,
) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let q = params.dims.q;
    let k = params.filter_len;
    let taps: Vec<(Vec<f64>, Vec<f64>)> = fixed_d_values(&p.theta_d)
        .iter()
        .map(|&d| frac_weights(d, k).map(|fw| (fw.w, fw.dw)))
        .collect::<Result<_>>()?;
    let mut h = vec![vec![0.0; q]];
    let mut c: Vec<Vec<f64>> = vec![vec![0.0; q]];
    let mut cts = Vec::with_capacity(t_len);
    let mut acts = Vec::with_capacity(t_len);
    let mut dcdd = Vec::with_capacity(t_len);
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);
    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let ct_pre = candidate(params, &p.w_ch, &p.w_cx, &p.b_c, &h[t - 1], xt);
        let mut c_t = vec![0.0; q];
        let mut dcdd_t = vec![0.0; q];
        for coord in 0..q {
            let (w, dw) = &taps[coord];
            let mut acc = 0.0;
            let mut dacc = 0.0;
            for j in 1..=k.min(t) {
                let past = c[t - j][coord];
                acc -= w[j] * past;
                dacc -= dw[j] * past;
            }
            c_t[coord] = acc + p.gate_i[coord] * ct_pre[coord];
            dcdd_t[coord] = dacc;
        }
        check_finite(t, &c_t)?;
        let act_c: Vec<f64> = c_t.iter().map(|v| params.activation.apply(*v)).collect();
        let h_t: Vec<f64> = (0..q).map(|j| p.gate_o[j] * act_c[j]).collect();
        let u = output_row(params, &p.w_zh, &p.b_z, &h_t, &mut outputs, t);
        check_finite(t, &u)?;
        h.push(h_t);
        c.push(c_t);
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
        kc: KindCache::ConstGates { h, c, c_tilde: cts, cell_act: acts, dcdd },
    };
    Ok((outputs, cache))
}

pub(super) fn backward_lstm(
    params: &CellParams,
    p: &ConstGatesLstmParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::ConstGates { h, c, c_tilde, cell_act, .. } = &cache.kc else {
        return Err(Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let CellWeights::ConstGatesLstm(g) = &mut grads.weights else { unreachable!() };
    let q = params.dims.q;
    let mut dh_next = vec![0.0; q];
    let mut dc_next = vec![0.0; q];
    for t in (1..=cache.t_len).rev() {
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

        let (ct_t, act_t) = (&c_tilde[t - 1], &cell_act[t - 1]);
        let mut dc = vec![0.0; q];
        for j in 0..q {
            g.gate_o[j] += dh[j] * act_t[j];
            dc[j] = dh[j] * p.gate_o[j] * params.activation.derivative_from_output(act_t[j]) + dc_next[j];
            g.gate_f[j] += dc[j] * c[t - 1][j];
            g.gate_i[j] += dc[j] * ct_t[j];
        }
        let dct: Vec<f64> = (0..q).map(|j| dc[j] * p.gate_i[j]).collect();
        dc_next = (0..q).map(|j| dc[j] * p.gate_f[j]).collect();

        let ds: Vec<f64> = (0..q)
            .map(|j| dct[j] * params.activation.derivative_from_output(ct_t[j]))
            .collect();
        g.w_ch.add_outer(&ds, &h[t - 1]);
        g.w_cx.add_outer(&ds, cache.inputs.row(t - 1));
        for (b, v) in g.b_c.iter_mut().zip(&ds) {
            *b += v;
        }
        dh_next = vec![0.0; q];
        p.w_ch.add_matvec_t(&ds, &mut dh_next);
    }
    Ok(grads)
}

pub(super) fn backward_mlstm(
    params: &CellParams,
    p: &ConstGatesMlstmParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::ConstGates { h, c: _, c_tilde, cell_act, dcdd } = &cache.kc else {
        return Err(Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let CellWeights::ConstGatesMlstm(g) = &mut grads.weights else { unreachable!() };
    let q = params.dims.q;
    let k = params.filter_len;
    let t_len = cache.t_len;
    let d_vals = fixed_d_values(&p.theta_d);
    let taps: Vec<Vec<f64>> = d_vals
        .iter()
        .map(|&dv| frac_weights(dv, k).map(|fw| fw.w))
        .collect::<Result<_>>()?;
    let mut dc_acc: Vec<Vec<f64>> = vec![vec![0.0; q]; t_len + 1];
    let mut dh_next = vec![0.0; q];
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

        let (ct_t, act_t) = (&c_tilde[t - 1], &cell_act[t - 1]);
        let mut dc = vec![0.0; q];
        for j in 0..q {
            g.gate_o[j] += dh[j] * act_t[j];
            dc[j] = dh[j] * p.gate_o[j] * params.activation.derivative_from_output(act_t[j]) + dc_acc[t][j];
            g.gate_i[j] += dc[j] * ct_t[j];
            g.theta_d[j] += dc[j] * dcdd[t - 1][j] * d_gate_derivative(d_vals[j]);
        }
        for coord in 0..q {
            let dcv = dc[coord];
            if dcv != 0.0 {
                let w = &taps[coord];
                for j in 1..=k.min(t - 1) {
                    dc_acc[t - j][coord] -= w[j] * dcv;
                }
            }
        }
        let dct: Vec<f64> = (0..q).map(|j| dc[j] * p.gate_i[j]).collect();
        let ds: Vec<f64> = (0..q)
            .map(|j| dct[j] * params.activation.derivative_from_output(ct_t[j]))
            .collect();
        g.w_ch.add_outer(&ds, &h[t - 1]);
        g.w_cx.add_outer(&ds, cache.inputs.row(t - 1));
        for (b, v) in g.b_c.iter_mut().zip(&ds) {
            *b += v;
        }
        dh_next = vec![0.0; q];
        p.w_ch.add_matvec_t(&ds, &mut dh_next);
    }
    Ok(grads)
}
