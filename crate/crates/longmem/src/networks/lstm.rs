//! Gated cell with forget/input/output gates and the additive cell-state
//! update c^t = i^t . c~^t + f^t . c^{t-1}.

use crate::activations::sigmoid;
use crate::error::{Error, Result};
use crate::mat::Mat;

use super::{check_finite, CellParams, CellWeights, Gradients, KindCache, LstmParams, StateCache};

fn gate(wh: &Mat, wx: &Mat, b: &[f64], h_prev: &[f64], xt: &[f64]) -> Vec<f64> {
    let mut pre = wh.matvec(h_prev);
    let from_x = wx.matvec(xt);
    for (j, v) in pre.iter_mut().enumerate() {
        *v = sigmoid(*v + from_x[j] + b[j]);
    }
    pre
}

pub(super) fn forward(params: &CellParams, p: &LstmParams, inputs: &Mat) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let q = params.dims.q;
    let mut h = vec![vec![0.0; q]];
    let mut c = vec![vec![0.0; q]];
    let (mut fs, mut is, mut os, mut cts, mut acts) =
        (Vec::with_capacity(t_len), Vec::with_capacity(t_len), Vec::with_capacity(t_len), Vec::with_capacity(t_len), Vec::with_capacity(t_len));
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);
    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let h_prev = &h[t - 1];
        let f_t = gate(&p.w_fh, &p.w_fy, &p.b_f, h_prev, xt);
        let i_t = gate(&p.w_ih, &p.w_iy, &p.b_i, h_prev, xt);
        let o_t = gate(&p.w_oh, &p.w_oy, &p.b_o, h_prev, xt);
        let mut ct_pre = p.w_ch.matvec(h_prev);
        let from_x = p.w_cy.matvec(xt);
        for (j, v) in ct_pre.iter_mut().enumerate() {
            *v = params.activation.apply(*v + from_x[j] + p.b_c[j]);
        }
        let c_t: Vec<f64> = (0..q).map(|j| i_t[j] * ct_pre[j] + f_t[j] * c[t - 1][j]).collect();
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
        fs.push(f_t);
        is.push(i_t);
        os.push(o_t);
        cts.push(ct_pre);
        acts.push(act_c);
    }
    let cache = StateCache {
        kind: params.kind,
        dims: params.dims,
        t_len,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        kc: KindCache::Lstm { h, c, f: fs, i: is, o: os, c_tilde: cts, cell_act: acts },
    };
    Ok((outputs, cache))
}

pub(super) fn backward(
    params: &CellParams,
    p: &LstmParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::Lstm { h, c, f, i, o, c_tilde, cell_act } = &cache.kc else {
        return Err(Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let CellWeights::Lstm(g) = &mut grads.weights else { unreachable!() };
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

        let (f_t, i_t, o_t, ct_t, act_t) =
            (&f[t - 1], &i[t - 1], &o[t - 1], &c_tilde[t - 1], &cell_act[t - 1]);
        let do_t: Vec<f64> = (0..q).map(|j| dh[j] * act_t[j]).collect();
        let mut dc: Vec<f64> = (0..q)
            .map(|j| dh[j] * o_t[j] * params.activation.derivative_from_output(act_t[j]) + dc_next[j])
            .collect();
        let di: Vec<f64> = (0..q).map(|j| dc[j] * ct_t[j]).collect();
        let dct: Vec<f64> = (0..q).map(|j| dc[j] * i_t[j]).collect();
        let df: Vec<f64> = (0..q).map(|j| dc[j] * c[t - 1][j]).collect();
        for j in 0..q {
            dc[j] *= f_t[j];
        }
        dc_next = dc;

        let h_prev = &h[t - 1];
        let xt = cache.inputs.row(t - 1);
        let mut dh_prev = vec![0.0; q];
        let gate_back = |d: &[f64], post: &[f64], wh: &Mat, gwh: &mut Mat, gwx: &mut Mat, gb: &mut Vec<f64>, is_sigmoid: bool, dh_prev: &mut [f64]| {
            let ds: Vec<f64> = (0..q)
                .map(|j| {
                    let deriv = if is_sigmoid {
                        post[j] * (1.0 - post[j])
                    } else {
                        params.activation.derivative_from_output(post[j])
                    };
                    d[j] * deriv
                })
                .collect();
            gwh.add_outer(&ds, h_prev);
            gwx.add_outer(&ds, xt);
            for (b, v) in gb.iter_mut().zip(&ds) {
                *b += v;
            }
            wh.add_matvec_t(&ds, dh_prev);
        };
        gate_back(&df, f_t, &p.w_fh, &mut g.w_fh, &mut g.w_fy, &mut g.b_f, true, &mut dh_prev);
        gate_back(&di, i_t, &p.w_ih, &mut g.w_ih, &mut g.w_iy, &mut g.b_i, true, &mut dh_prev);
        gate_back(&do_t, o_t, &p.w_oh, &mut g.w_oh, &mut g.w_oy, &mut g.b_o, true, &mut dh_prev);
        gate_back(&dct, ct_t, &p.w_ch, &mut g.w_ch, &mut g.w_cy, &mut g.b_c, false, &mut dh_prev);
        dh_next = dh_prev;
    }
    Ok(grads)
}
