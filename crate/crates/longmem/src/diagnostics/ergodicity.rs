//! Geometric-ergodicity sufficient-condition checkers and the spectral
//! radius they lean on.
//!
//! The checkers are one-directional: a satisfied condition proves short
//! memory, a violated one proves nothing, so the negative verdict is always
//! `Inconclusive`. The only equivalence is the linear cell, where the
//! spectral-radius criterion is necessary as well as sufficient.

use serde::{Deserialize, Serialize};

use crate::activations::sigmoid;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::networks::{CellParams, CellWeights, RnnParams};

/// Spectral radius by the norm-root limit ||W^s||_1^{1/s} along s = 2^m,
/// evaluated with repeated squaring and per-step renormalization. The
/// estimates decrease monotonically, so every intermediate value is a valid
/// upper certificate.
pub fn spectral_radius(w: &Mat, tol: f64) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::Shape(format!("spectral radius needs a square matrix, got {}x{}", w.rows(), w.cols())));
    }
    if tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if w.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let norm = w.norm_l1();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut normalized = w.scale(1.0 / norm);
    let mut log_scale = norm.ln();
    let mut power = 1.0f64;
    let mut est_prev = norm;
    for _ in 0..40 {
        let sq = normalized.matmul(&normalized);
        let beta = sq.norm_l1();
        if beta == 0.0 {
            // Nilpotent: all eigenvalues are zero.
            return Ok(0.0);
        }
        normalized = sq.scale(1.0 / beta);
        log_scale = 2.0 * log_scale + beta.ln();
        power *= 2.0;
        let est = (log_scale / power).exp();
        if (est_prev - est).abs() <= tol * est.max(f64::MIN_POSITIVE) {
            return Ok(est);
        }
        est_prev = est;
    }
    Ok(est_prev)
}

pub const DEFAULT_RADIUS_TOL: f64 = 1e-6;
/// Default contraction constant for the weight checks.
pub const DEFAULT_CONTRACTION: f64 = 0.99;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckedInequality {
    pub name: String,
    pub lhs: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl CheckedInequality {
    fn new(name: impl Into<String>, lhs: f64, bound: f64) -> Self {
        CheckedInequality { name: name.into(), lhs, bound, satisfied: lhs <= bound }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    ShortMemoryProven,
    Inconclusive,
    /// Only the linear cell can earn this: its criterion is an equivalence.
    NotGeometricallyErgodic,
}

/// Outcome of an ergodicity check: the conclusion plus every inequality that
/// produced it. `ShortMemoryProven` requires all listed inequalities to hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub conclusion: Conclusion,
    pub checked_inequalities: Vec<CheckedInequality>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn from_inequalities(checked: Vec<CheckedInequality>, notes: Vec<String>) -> Verdict {
        let all_ok = checked.iter().all(|c| c.satisfied);
        Verdict {
            conclusion: if all_ok { Conclusion::ShortMemoryProven } else { Conclusion::Inconclusive },
            checked_inequalities: checked,
            notes,
        }
    }
}

fn check_contraction(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("contraction constant a = {a} outside (0, 1)")))
    }
}

fn scalar_of(m: &Mat, name: &str) -> Result<f64> {
    if m.rows() == 1 && m.cols() == 1 {
        Ok(m[(0, 0)])
    } else {
        Err(Error::Config(format!(
            "the per-weight restriction table applies to p = q = 1 only; {name} is {}x{}",
            m.rows(),
            m.cols()
        )))
    }
}

/// Weight restrictions for the plain recurrent cell.
///
/// Bounded activations (sigmoid, tanh) confine the hidden state, so the
/// process contracts regardless of the weights. Unbounded activations fall
/// back to the scalar restriction table, which requires p = q = 1.
pub fn check_rnn_ergodicity(params: &CellParams, a: f64) -> Result<Verdict> {
    check_contraction(a)?;
    params.validate()?;
    let CellWeights::Rnn(p) = &params.weights else {
        return Err(Error::Config(format!("expected an rnn checkpoint, found {}", params.kind.name())));
    };
    if params.activation.is_bounded() {
        return Ok(Verdict {
            conclusion: Conclusion::ShortMemoryProven,
            checked_inequalities: Vec::new(),
            notes: vec![format!(
                "activation {:?} is bounded and continuous, so the process is geometrically ergodic for any weights",
                params.activation
            )],
        });
    }
    rnn_table_check(p, params, a)
}

fn rnn_table_check(p: &RnnParams, params: &CellParams, a: f64) -> Result<Verdict> {
    let w_zh = scalar_of(&p.w_zh, "W_zh")?;
    let w_hh = scalar_of(&p.w_hh, "W_hh")?;
    // The process feeds the previous output back as input, so the input
    // weight plays the role of w_hy.
    let w_hy = scalar_of(&p.w_hx, "W_hx")?;
    let mut checked = vec![
        CheckedInequality::new("|w_hh| <= a", w_hh.abs(), a),
        CheckedInequality::new("|w_hy| <= a", w_hy.abs(), a),
    ];
    let notes = vec![format!(
        "activation {:?}, output {:?}: scalar restriction table",
        params.activation, params.output
    )];
    if !params.output.is_bounded() {
        // Unbounded output keeps the product terms in play.
        checked.insert(0, CheckedInequality::new("|w_zh w_hh| <= a", (w_zh * w_hh).abs(), a));
        checked.insert(1, CheckedInequality::new("|w_zh w_hy| <= a", (w_zh * w_hy).abs(), a));
    }
    Ok(Verdict::from_inequalities(checked, notes))
}

/// Forget-gate norm condition for the gated cell, with the scalar gate
/// condition as a second route when p = q = 1.
///
/// The premise that inputs are scaled to [-1, 1] is recorded in the verdict;
/// the output-boundedness constant is finite for every output map this crate
/// ships, so it is noted rather than checked.
pub fn check_lstm_ergodicity(params: &CellParams, a: f64) -> Result<Verdict> {
    check_contraction(a)?;
    params.validate()?;
    let CellWeights::Lstm(p) = &params.weights else {
        return Err(Error::Config(format!("expected an lstm checkpoint, found {}", params.kind.name())));
    };
    let mut notes = vec![
        "premise: input series scaled to [-1, 1]".to_string(),
        format!("output {:?} is bounded on bounded sets, so the output constant is finite", params.output),
    ];
    let norm_sum = p.w_fh.norm_linf() + p.w_fy.norm_linf() + b_norm_linf(&p.b_f);
    let norm_cond = CheckedInequality::new(
        "sigma(||W_fh||_linf + ||W_fy||_linf + ||b_f||_linf) <= a",
        sigmoid(norm_sum),
        a,
    );
    let scalar_cond = if params.dims.q == 1 && params.dims.p_x == 1 && params.dims.p_z == 1 {
        let w_fh = p.w_fh[(0, 0)];
        let w_fy = p.w_fy[(0, 0)];
        let b_f = p.b_f[0];
        Some(CheckedInequality::new(
            "|sigma(w_fh + w_fy + b_f)| <= a",
            sigmoid(w_fh + w_fy + b_f).abs(),
            a,
        ))
    } else {
        None
    };
    // Either sufficient condition proves short memory on its own; list the
    // one that succeeded, keep the other's value visible in the notes.
    match (norm_cond.satisfied, &scalar_cond) {
        (true, other) => {
            if let Some(sc) = other {
                notes.push(format!("scalar gate condition: {} = {:.6} vs {a}", sc.name, sc.lhs));
            }
            Ok(Verdict::from_inequalities(vec![norm_cond], notes))
        }
        (false, Some(sc)) if sc.satisfied => {
            notes.push(format!("norm condition: {} = {:.6} vs {a}", norm_cond.name, norm_cond.lhs));
            Ok(Verdict::from_inequalities(vec![scalar_cond.unwrap()], notes))
        }
        _ => {
            let mut checked = vec![norm_cond];
            checked.extend(scalar_cond);
            Ok(Verdict::from_inequalities(checked, notes))
        }
    }
}

fn b_norm_linf(b: &[f64]) -> f64 {
    b.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Linear-cell criterion: geometrically ergodic if and only if the spectral
/// radius of the transition matrix is below one.
pub fn check_linear_ergodicity(w: &Mat, tol: f64) -> Result<Verdict> {
    let rho = spectral_radius(w, tol)?;
    let cond = CheckedInequality { name: "spectral_radius(W) < 1".into(), lhs: rho, bound: 1.0, satisfied: rho < 1.0 };
    let conclusion = if cond.satisfied {
        Conclusion::ShortMemoryProven
    } else {
        Conclusion::NotGeometricallyErgodic
    };
    Ok(Verdict {
        conclusion,
        checked_inequalities: vec![cond],
        notes: vec!["the linear-cell criterion is an equivalence; failure disproves geometric ergodicity".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{Activation, OutputFn};
    use crate::networks::{init_params, CellKind, Dims};
    use crate::rng::Rng64;

    fn rot_scaled(theta: f64, s: f64) -> Mat {
        Mat::from_rows(&[
            vec![s * theta.cos(), -s * theta.sin()],
            vec![s * theta.sin(), s * theta.cos()],
        ])
        .unwrap()
    }

    #[test]
    fn radius_of_diagonal() {
        let m = Mat::diag(&[0.5, 0.3]);
        let rho = spectral_radius(&m, 1e-6).unwrap();
        assert!((rho - 0.5).abs() < 1e-6);
    }

    #[test]
    fn radius_of_scaled_rotation() {
        let m = rot_scaled(30f64.to_radians(), 0.8);
        let rho = spectral_radius(&m, 1e-6).unwrap();
        assert!((rho - 0.8).abs() < 1e-6, "rho {rho}");
    }

    #[test]
    fn radius_of_nilpotent_is_zero() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(spectral_radius(&m, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn radius_rejects_non_square() {
        assert!(spectral_radius(&Mat::zeros(2, 3), 1e-6).is_err());
    }

    // Independent eigenvalue oracle: characteristic polynomial via the
    // trace recursion, dominant modulus via simultaneous root iteration in
    // complex arithmetic.
    fn char_poly(m: &Mat) -> Vec<f64> {
        let n = m.rows();
        let mut coeffs = vec![1.0];
        let mut mk = m.clone();
        let mut c = Vec::new();
        for k in 1..=n {
            if k > 1 {
                let mut shifted = mk.clone();
                for i in 0..n {
                    shifted[(i, i)] += c[k - 2];
                }
                mk = m.matmul(&shifted);
            }
            let trace: f64 = (0..n).map(|i| mk[(i, i)]).sum();
            c.push(-trace / k as f64);
        }
        coeffs.extend(c);
        coeffs
    }

    fn poly_roots_max_modulus(coeffs: &[f64]) -> f64 {
        type C = (f64, f64);
        fn mul(a: C, b: C) -> C {
            (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
        }
        fn sub(a: C, b: C) -> C {
            (a.0 - b.0, a.1 - b.1)
        }
        fn div(a: C, b: C) -> C {
            let d = b.0 * b.0 + b.1 * b.1;
            ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
        }
        fn eval(coeffs: &[f64], z: C) -> C {
            let mut acc = (0.0, 0.0);
            for &c in coeffs {
                acc = mul(acc, z);
                acc = (acc.0 + c, acc.1);
            }
            acc
        }
        let n = coeffs.len() - 1;
        let mut roots: Vec<C> = (0..n)
            .map(|k| {
                let angle = 0.7 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (0.9 * angle.cos(), 0.9 * angle.sin())
            })
            .collect();
        for _ in 0..500 {
            let old = roots.clone();
            for i in 0..n {
                let mut denom = (1.0, 0.0);
                for j in 0..n {
                    if j != i {
                        denom = mul(denom, sub(old[i], old[j]));
                    }
                }
                roots[i] = sub(old[i], div(eval(coeffs, old[i]), denom));
            }
        }
        roots.iter().map(|r| (r.0 * r.0 + r.1 * r.1).sqrt()).fold(0.0, f64::max)
    }

    #[test]
    fn radius_matches_characteristic_polynomial_oracle() {
        let mut rng = Rng64::from_seed(71);
        for trial in 0..8 {
            let m = Mat::from_fn(4, 4, |_, _| rng.uniform_in(-1.0, 1.0));
            let rho = spectral_radius(&m, 1e-8).unwrap();
            let oracle = poly_roots_max_modulus(&char_poly(&m));
            assert!((rho - oracle).abs() < 1e-4, "trial {trial}: {rho} vs {oracle}");
        }
    }

    fn scalar_rnn(w_zh: f64, w_hh: f64, w_hx: f64, act: Activation, out: OutputFn) -> CellParams {
        let mut params = init_params(CellKind::Rnn, Dims::univariate(1), 0, 0).unwrap();
        params.activation = act;
        params.output = out;
        let CellWeights::Rnn(p) = &mut params.weights else { unreachable!() };
        p.w_zh = Mat::scalar(w_zh);
        p.w_hh = Mat::scalar(w_hh);
        p.w_hx = Mat::scalar(w_hx);
        params
    }

    #[test]
    fn tanh_rnn_is_always_proven() {
        let params = scalar_rnn(5.0, 9.0, -7.0, Activation::Tanh, OutputFn::Identity);
        let v = check_rnn_ergodicity(&params, 0.9).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        assert!(v.checked_inequalities.is_empty());
    }

    #[test]
    fn identity_rnn_table_row() {
        let params = scalar_rnn(1.0, 0.5, 0.3, Activation::Identity, OutputFn::Identity);
        let v = check_rnn_ergodicity(&params, 0.9).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        assert_eq!(v.checked_inequalities.len(), 4);

        let params = scalar_rnn(1.0, 1.2, 0.3, Activation::Identity, OutputFn::Identity);
        let v = check_rnn_ergodicity(&params, 0.9).unwrap();
        assert_eq!(v.conclusion, Conclusion::Inconclusive);
        assert!(v.checked_inequalities.iter().any(|c| c.name.contains("|w_hh|") && !c.satisfied));
    }

    #[test]
    fn bounded_output_rnn_table_row_has_two_conditions() {
        let params = scalar_rnn(3.0, 0.5, 0.3, Activation::Relu, OutputFn::Sigmoid);
        let v = check_rnn_ergodicity(&params, 0.9).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        assert_eq!(v.checked_inequalities.len(), 2);
    }

    #[test]
    fn rnn_table_requires_scalar_dims() {
        let mut params = init_params(CellKind::Rnn, Dims { p_x: 2, q: 3, p_z: 2 }, 0, 0).unwrap();
        params.activation = Activation::Identity;
        let err = check_rnn_ergodicity(&params, 0.9).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    fn scalar_lstm(w_fh: f64, w_fy: f64, b_f: f64) -> CellParams {
        let mut params = init_params(CellKind::Lstm, Dims::univariate(1), 0, 0).unwrap();
        let CellWeights::Lstm(p) = &mut params.weights else { unreachable!() };
        p.w_fh = Mat::scalar(w_fh);
        p.w_fy = Mat::scalar(w_fy);
        p.b_f = vec![b_f];
        params
    }

    #[test]
    fn lstm_zero_forget_weights_are_proven() {
        let v = check_lstm_ergodicity(&scalar_lstm(0.0, 0.0, 0.0), 0.6).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        assert!((v.checked_inequalities[0].lhs - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lstm_saturated_forget_bias_is_inconclusive() {
        let v = check_lstm_ergodicity(&scalar_lstm(0.0, 0.0, 10.0), 0.999).unwrap();
        assert_eq!(v.conclusion, Conclusion::Inconclusive);
        assert!(v.checked_inequalities[0].lhs > 0.999);
    }

    #[test]
    fn lstm_scalar_gate_condition_can_prove_alone() {
        // Strongly negative forget bias: the norm route fails (it takes
        // absolute values) but the scalar gate value is tiny.
        let v = check_lstm_ergodicity(&scalar_lstm(0.2, 0.1, -4.0), 0.4).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        assert_eq!(v.checked_inequalities.len(), 1);
        assert!(v.checked_inequalities[0].name.contains("sigma(w_fh + w_fy + b_f)"));
    }

    #[test]
    fn linear_cell_criterion_is_two_sided() {
        let v = check_linear_ergodicity(&Mat::diag(&[0.7, 0.2]), 1e-6).unwrap();
        assert_eq!(v.conclusion, Conclusion::ShortMemoryProven);
        let v = check_linear_ergodicity(&Mat::diag(&[1.05, 0.2]), 1e-6).unwrap();
        assert_eq!(v.conclusion, Conclusion::NotGeometricallyErgodic);
    }

    #[test]
    fn contraction_constant_is_validated() {
        let params = scalar_lstm(0.0, 0.0, 0.0);
        assert!(check_lstm_ergodicity(&params, 0.0).is_err());
        assert!(check_lstm_ergodicity(&params, 1.0).is_err());
    }

    #[test]
    fn shrinking_weights_preserves_norm_route_verdicts() {
        // Monotonicity of the absolute-value conditions: scaling every
        // weight toward zero never un-proves a proven verdict.
        let mut rng = Rng64::from_seed(90);
        for _ in 0..20 {
            let params = scalar_rnn(
                rng.uniform_in(-0.9, 0.9),
                rng.uniform_in(-0.9, 0.9),
                rng.uniform_in(-0.9, 0.9),
                Activation::Identity,
                OutputFn::Identity,
            );
            let v = check_rnn_ergodicity(&params, 0.95).unwrap();
            if v.conclusion == Conclusion::ShortMemoryProven {
                for _ in 0..4 {
                    let lambda = rng.uniform();
                    let mut smaller = params.clone();
                    smaller.for_each_param_mut(|w| *w *= lambda);
                    let v2 = check_rnn_ergodicity(&smaller, 0.95).unwrap();
                    assert_eq!(v2.conclusion, Conclusion::ShortMemoryProven);
                }
            }
        }
        // Same for the gated cell's norm condition with a >= 1/2.
        for _ in 0..20 {
            let params = scalar_lstm(rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0));
            let v = check_lstm_ergodicity(&params, 0.8).unwrap();
            if v.conclusion == Conclusion::ShortMemoryProven {
                let lambda = rng.uniform();
                let mut smaller = params.clone();
                smaller.for_each_param_mut(|w| *w *= lambda);
                let v2 = check_lstm_ergodicity(&smaller, 0.8).unwrap();
                assert_eq!(v2.conclusion, Conclusion::ShortMemoryProven);
            }
        }
    }
}
