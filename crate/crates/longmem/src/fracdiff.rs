//! Fractional-differencing weights, their derivatives in the memory
//! parameter, and the filters built from them.
//!
//! The operator (1-B)^d (B the backshift operator) expands into
//! sum_j w_j(d) B^j with w_0 = 1 and the product form
//! w_j(d) = prod_{i=0}^{j-1} (i-d)/(i+1). The weights are always computed by
//! the O(K) recurrence w_j = w_{j-1} (j-1-d)/j, never through gamma
//! functions, which keeps w_0 exact and avoids overflow at large j.
//! For 0 < d < 1 every w_j with j >= 1 is negative and |w_j| ~ j^{-d-1}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memory parameter restricted to the stationary long-memory range (0, 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MemoryParam(f64);

impl MemoryParam {
    pub fn new(d: f64) -> Result<Self> {
        if d > 0.0 && d < 0.5 {
            Ok(MemoryParam(d))
        } else {
            Err(Error::Domain(format!("memory parameter d = {d} outside (0, 0.5)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for MemoryParam {
    type Error = Error;
    fn try_from(d: f64) -> Result<Self> {
        MemoryParam::new(d)
    }
}

impl From<MemoryParam> for f64 {
    fn from(d: MemoryParam) -> f64 {
        d.0
    }
}

/// Truncated differencing weights w_0..w_K together with their derivatives
/// dw_j/dd, both filled by one coupled recurrence.
#[derive(Debug, Clone)]
pub struct FracWeights {
    pub d: f64,
    pub k: usize,
    /// w_0..w_K of (1-B)^d.
    pub w: Vec<f64>,
    /// dw_j/dd for j = 0..K (dw_0 = 0).
    pub dw: Vec<f64>,
}

fn check_domain(d: f64, k: usize) -> Result<()> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Domain(format!("differencing order d = {d} outside (0, 1)")));
    }
    if k == 0 {
        return Err(Error::Domain("truncation lag K must be >= 1".into()));
    }
    Ok(())
}

/// Weights of (1-B)^d truncated at lag K, with derivatives.
///
/// w_j = w_{j-1} (j-1-d)/j and dw_j = dw_{j-1} (j-1-d)/j - w_{j-1}/j.
pub fn frac_weights(d: f64, k: usize) -> Result<FracWeights> {
    check_domain(d, k)?;
    let mut w = Vec::with_capacity(k + 1);
    let mut dw = Vec::with_capacity(k + 1);
    w.push(1.0);
    dw.push(0.0);
    for j in 1..=k {
        let jf = j as f64;
        let factor = (jf - 1.0 - d) / jf;
        dw.push(dw[j - 1] * factor - w[j - 1] / jf);
        w.push(w[j - 1] * factor);
    }
    Ok(FracWeights { d, k, w, dw })
}

/// Just the derivative sequence dw_0..dw_K.
pub fn frac_weights_grad(d: f64, k: usize) -> Result<Vec<f64>> {
    Ok(frac_weights(d, k)?.dw)
}

/// Coefficients psi_0..psi_{len} of the inverse operator (1-B)^{-d}
/// (fractional integration), psi_j = psi_{j-1} (j-1+d)/j. Accepts d = 0,
/// which yields the identity filter.
pub fn frac_integration_weights(d: f64, len: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::Domain(format!("integration order d = {d} outside [0, 1)")));
    }
    let mut psi = Vec::with_capacity(len + 1);
    psi.push(1.0);
    for j in 1..=len {
        let jf = j as f64;
        psi.push(psi[j - 1] * (jf - 1.0 + d) / jf);
    }
    Ok(psi)
}

/// Memory filter over a most-recent-first history window:
/// F = sum_{j=1}^{K} w_j(d) x^{t-j+1}, with x^{s} = 0 for s <= 0.
///
/// `history[0]` is the current observation x^t, `history[1]` is x^{t-1}, and
/// so on; a window shorter than K is implicitly zero-padded. d = 0 is the
/// explicit zero-filter branch.
pub fn apply_memory_filter(history: &[f64], d: f64, k: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Data("memory filter needs a history window of length >= 1".into()));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let fw = frac_weights(d, k)?;
    Ok(filter_with_weights(history, &fw.w))
}

/// Same filter given precomputed weights (hot path for the network cells).
pub fn filter_with_weights(history: &[f64], w: &[f64]) -> f64 {
    let take = history.len().min(w.len().saturating_sub(1));
    let mut acc = 0.0;
    for j in 1..=take {
        acc += w[j] * history[j - 1];
    }
    acc
}

/// Coordinate-wise memory filter for vector-valued histories with one memory
/// parameter per coordinate. `history[j]` is the observation vector at lag j
/// (so `history[0]` is current).
pub fn apply_memory_filter_vec(history: &[Vec<f64>], d: &[f64], k: usize) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::Data("memory filter needs a history window of length >= 1".into()));
    }
    let dim = d.len();
    if history.iter().any(|x| x.len() != dim) {
        return Err(Error::Shape("history vectors do not match the d vector length".into()));
    }
    let mut out = vec![0.0; dim];
    for (i, &di) in d.iter().enumerate() {
        let coord: Vec<f64> = history.iter().map(|x| x[i]).collect();
        out[i] = apply_memory_filter(&coord, di, k)?;
    }
    Ok(out)
}

/// Truncated fractional differencing of a whole series:
/// out_t = sum_{j=0}^{min(t,K)} w_j(d) series_{t-j}. d = 0 is the identity.
pub fn apply_fracdiff(series: &[f64], d: f64, k: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Data("fractional differencing needs a series of length >= 1".into()));
    }
    if d == 0.0 {
        return Ok(series.to_vec());
    }
    let fw = frac_weights(d, k)?;
    let mut out = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let take = t.min(k);
        let mut acc = 0.0;
        for j in 0..=take {
            acc += fw.w[j] * series[t - j];
        }
        out.push(acc);
    }
    Ok(out)
}
