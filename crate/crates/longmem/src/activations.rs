//! Elementwise activation and output functions shared by the cells, the
//! process generators and the ergodicity checkers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
    Relu,
}

/// Output map g applied to the final linear layer. Identity is the
/// regression default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFn {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's own output value.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Bounded activations make the hidden state compact, which is what the
    /// unconditional short-memory argument needs.
    pub fn is_bounded(self) -> bool {
        matches!(self, Activation::Tanh | Activation::Sigmoid)
    }
}

impl OutputFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            OutputFn::Identity => x,
            OutputFn::Sigmoid => sigmoid(x),
            OutputFn::Tanh => x.tanh(),
            OutputFn::Relu => x.max(0.0),
        }
    }

    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            OutputFn::Identity => 1.0,
            OutputFn::Sigmoid => y * (1.0 - y),
            OutputFn::Tanh => 1.0 - y * y,
            OutputFn::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, OutputFn::Sigmoid | OutputFn::Tanh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
            for &x in &[-1.3, -0.2, 0.7, 2.1] {
                let fd = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
                let an = act.derivative_from_output(act.apply(x));
                assert!((fd - an).abs() < 1e-8, "{act:?} at {x}");
            }
        }
    }
}
