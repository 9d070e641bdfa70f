//! Plain recurrent cell: h^t = act(W_hh h^{t-1} + W_hx x^t + b_h),
//! z^t = g(W_zh h^t + b_z).

use crate::error::Result;
use crate::mat::Mat;

use super::{check_finite, CellParams, Gradients, KindCache, RnnParams, StateCache};

pub(super) fn forward(params: &CellParams, p: &RnnParams, inputs: &Mat) -> Result<(Mat, StateCache)> {
    let t_len = inputs.rows();
    let q = params.dims.q;
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(t_len + 1);
    h.push(vec![0.0; q]);
    let mut outputs = Mat::zeros(t_len, params.dims.p_z);
    for t in 1..=t_len {
        let xt = inputs.row(t - 1);
        let mut pre = p.w_hh.matvec(&h[t - 1]);
        let from_x = p.w_hx.matvec(xt);
        for (j, v) in pre.iter_mut().enumerate() {
            *v += from_x[j] + p.b_h[j];
            *v = params.activation.apply(*v);
        }
        check_finite(t, &pre)?;
        let mut u = p.w_zh.matvec(&pre);
        for (j, v) in u.iter_mut().enumerate() {
            *v = params.output.apply(*v + p.b_z[j]);
            outputs[(t - 1, j)] = *v;
        }
        check_finite(t, &u)?;
        h.push(pre);
    }
    let cache = StateCache {
        kind: params.kind,
        dims: params.dims,
        t_len,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        kc: KindCache::Rnn { h },
    };
    Ok((outputs, cache))
}

pub(super) fn backward(
    params: &CellParams,
    p: &RnnParams,
    cache: &StateCache,
    output_grads: &Mat,
) -> Result<Gradients> {
    let KindCache::Rnn { h } = &cache.kc else {
        return Err(crate::error::Error::Shape("cache kind mismatch".into()));
    };
    let mut grads = params.zeros_like();
    let super::CellWeights::Rnn(g) = &mut grads.weights else { unreachable!() };
    let q = params.dims.q;
    let mut dh_next = vec![0.0; q];
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
        let da: Vec<f64> = dh
            .iter()
            .zip(&h[t])
            .map(|(d, hv)| d * params.activation.derivative_from_output(*hv))
            .collect();
        g.w_hh.add_outer(&da, &h[t - 1]);
        g.w_hx.add_outer(&da, cache.inputs.row(t - 1));
        for (b, v) in g.b_h.iter_mut().zip(&da) {
            *b += v;
        }
        dh_next = vec![0.0; q];
        p.w_hh.add_matvec_t(&da, &mut dh_next);
    }
    Ok(grads)
}
