//! Memory-filter RNN. A second hidden lane m^t runs on the fractionally
//! weighted input history
//!   F(x^t; d^t)_i = sum_{j=1}^{K} w_j(d^t_i) x_i^{t-j+1}
//! (window anchored at the current observation, zero-padded before the
//! series start), with the memory parameter either gated per step from
//! [d^{t-1}, h^{t-1}, m^{t-1}, x^t] or held fixed through theta_d.

use crate::error::{Error, Result};
use crate::fracdiff::frac_weights;
use crate::mat::Mat;

use super::{
    check_finite, d_gate_derivative, fill_frac_weights, fixed_d_values, half_sigmoid, CellParams,
    CellWeights, DMode, Gradients, KindCache, MrnnParams, StateCache,
};

/// Filter value and its d-derivative at one coordinate:
/// (sum_j w_j x_{t-j+1}, sum_j dw_j x_{t-j+1}).
fn filter_at(inputs: &Mat, t: usize, coord: usize, w: &[f64], dw: &[f64], k: usize) -> (f64, f64) {
    let mut val = 0.0;
    let mut dval = 0.0;
    for j in 1..=k.min(t) {
        let x = inputs[(t - j, coord)];
        val += w[j] * x;
        dval += dw[j] * x;
    }
    (val, dval)
}

pub(super) fn forward(params: &CellParams, p: &MrnnParams, inputs: &Mat) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let (p_x, q) = (params.dims.p_x, params.dims.q);
    let k = params.filter_len;

    // Fixed-d cells reuse one tap table per coordinate for the whole pass.
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
    let mut m = vec![vec![0.0; q]];
    // d^0 = 0: state before the first step is all zero, like h and m.
    let mut d = vec![vec![0.0; p_x]];
    let mut filt = Vec::with_capacity(t_len);
    let mut dfdd = Vec::with_capacity(t_len);
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);

    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let d_t: Vec<f64> = match &p.d_mode {
            DMode::Dynamic { w_d, b_d } => {
                let mut v = Vec::with_capacity(p_x + q + q + p_x);
                v.extend_from_slice(&d[t - 1]);
                v.extend_from_slice(&h[t - 1]);
                v.extend_from_slice(&m[t - 1]);
                v.extend_from_slice(xt);
                let mut s = w_d.matvec(&v);
                for (j, sv) in s.iter_mut().enumerate() {
                    *sv = half_sigmoid(*sv + b_d[j]);
                }
                s
            }
            DMode::Fixed { theta_d } => fixed_d_values(theta_d),
        };
        let mut f_t = vec![0.0; p_x];
        let mut df_t = vec![0.0; p_x];
        for i in 0..p_x {
            let (val, dval) = match &fixed_taps {
                Some(taps) => {
                    let (w, dw) = &taps[i];
                    filter_at(inputs, t, i, w, dw, k)
                }
                None => {
                    fill_frac_weights(d_t[i], &mut w_buf, &mut dw_buf);
                    filter_at(inputs, t, i, &w_buf, &dw_buf, k)
                }
            };
            f_t[i] = val;
            df_t[i] = dval;
        }
        // m^t = act(W_m [m^{t-1}, F] + b_m)
        let mut m_in = Vec::with_capacity(q + p_x);
        m_in.extend_from_slice(&m[t - 1]);
        m_in.extend_from_slice(&f_t);
        let mut m_t = p.w_m.matvec(&m_in);
        for (j, v) in m_t.iter_mut().enumerate() {
            *v = params.activation.apply(*v + p.b_m[j]);
        }
        // h^t = act(W_hh h^{t-1} + W_hx x^t + b_h)
        let mut h_t = p.w_hh.matvec(&h[t - 1]);
        let from_x = p.w_hx.matvec(xt);
        for (j, v) in h_t.iter_mut().enumerate() {
            *v = params.activation.apply(*v + from_x[j] + p.b_h[j]);
        }
        check_finite(t, &h_t)?;
        check_finite(t, &m_t)?;
        // z^t = g(W_zh h^t + W_zm m^t + b_z)
        let mut u = p.w_zh.matvec(&h_t);
        let from_m = p.w_zm.matvec(&m_t);
        for (j, v) in u.iter_mut().enumerate() {
            *v = params.output.apply(*v + from_m[j] + p.b_z[j]);
            outputs[(t - 1, j)] = *v;
        }
        check_finite(t, &u)?;
        h.push(h_t);
        m.push(m_t);
        d.push(d_t);
        filt.push(f_t);
        dfdd.push(df_t);
    }
    let cache = StateCache {
        kind: params.kind,
        dims: params.dims,
        t_len,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        kc: KindCache::Mrnn { h, m, d, filt, dfdd },
    };
    Ok((outputs, cache))
}

pub(super) fn backward(
    params: &CellParams,
    p: &MrnnParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::Mrnn { h, m, d, filt, dfdd } = &cache.kc else {
        return Err(Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let CellWeights::Mrnn(g) = &mut grads.weights else { unreachable!() };
    let (p_x, q) = (params.dims.p_x, params.dims.q);
    let mut dh_next = vec![0.0; q];
    let mut dm_next = vec![0.0; q];
    let mut dd_next = vec![0.0; p_x];
    for t in (1..=cache.t_len).rev() {
        let zt = cache.outputs.row(t - 1);
        let du: Vec<f64> = output_grads
            .row(t - 1)
            .iter()
            .zip(zt)
            .map(|(gz, z)| gz * params.output.derivative_from_output(*z))
            .collect();
        g.w_zh.add_outer(&du, &h[t]);
        g.w_zm.add_outer(&du, &m[t]);
        for (b, v) in g.b_z.iter_mut().zip(&du) {
            *b += v;
        }
        let mut dh = dh_next;
        p.w_zh.add_matvec_t(&du, &mut dh);
        let mut dm = dm_next;
        p.w_zm.add_matvec_t(&du, &mut dm);

        // Memory lane m^t = act(W_m [m^{t-1}, F] + b_m).
        let dn: Vec<f64> = (0..q)
            .map(|j| dm[j] * params.activation.derivative_from_output(m[t][j]))
            .collect();
        let mut m_in = Vec::with_capacity(q + p_x);
        m_in.extend_from_slice(&m[t - 1]);
        m_in.extend_from_slice(&filt[t - 1]);
        g.w_m.add_outer(&dn, &m_in);
        for (b, v) in g.b_m.iter_mut().zip(&dn) {
            *b += v;
        }
        let mut back_m = vec![0.0; q + p_x];
        p.w_m.add_matvec_t(&dn, &mut back_m);
        dm_next = back_m[..q].to_vec();
        let d_filter = &back_m[q..];

        // Filter to d: dF_i/dd_i was cached during the forward pass.
        let mut dd: Vec<f64> = (0..p_x).map(|i| d_filter[i] * dfdd[t - 1][i] + dd_next[i]).collect();

        // Plain lane h^t.
        let da: Vec<f64> = (0..q)
            .map(|j| dh[j] * params.activation.derivative_from_output(h[t][j]))
            .collect();
        g.w_hh.add_outer(&da, &h[t - 1]);
        g.w_hx.add_outer(&da, cache.inputs.row(t - 1));
        for (b, v) in g.b_h.iter_mut().zip(&da) {
            *b += v;
        }
        dh_next = vec![0.0; q];
        p.w_hh.add_matvec_t(&da, &mut dh_next);

        // Memory-parameter path.
        match (&p.d_mode, &mut g.d_mode) {
            (DMode::Dynamic { w_d, .. }, DMode::Dynamic { w_d: gw_d, b_d: gb_d }) => {
                let ds: Vec<f64> = (0..p_x).map(|i| dd[i] * d_gate_derivative(d[t][i])).collect();
                let mut v = Vec::with_capacity(p_x + q + q + p_x);
                v.extend_from_slice(&d[t - 1]);
                v.extend_from_slice(&h[t - 1]);
                v.extend_from_slice(&m[t - 1]);
                v.extend_from_slice(cache.inputs.row(t - 1));
                gw_d.add_outer(&ds, &v);
                for (b, val) in gb_d.iter_mut().zip(&ds) {
                    *b += val;
                }
                let mut back = vec![0.0; p_x + q + q + p_x];
                w_d.add_matvec_t(&ds, &mut back);
                dd_next = back[..p_x].to_vec();
                for j in 0..q {
                    dh_next[j] += back[p_x + j];
                    dm_next[j] += back[p_x + q + j];
                }
            }
            (DMode::Fixed { .. }, DMode::Fixed { theta_d: g_theta }) => {
                for i in 0..p_x {
                    g_theta[i] += dd[i] * d_gate_derivative(d[t][i]);
                }
                dd.iter_mut().for_each(|v| *v = 0.0);
                dd_next = dd;
            }
            _ => unreachable!(),
        }
    }
    Ok(grads)
}
