//! The recurrent cells: plain RNN and LSTM, their memory-filter variants with
//! dynamic or fixed memory parameters, and the constant-gates variants used
//! for linearized memory analysis. Forward passes cache every state needed
//! for exact backpropagation through time, including the gradient flow
//! through the filter taps into the memory parameters.

mod const_gates;
mod lstm;
mod mlstm;
mod mrnn;
mod rnn;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activations::{sigmoid, Activation, OutputFn};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::Rng64;

pub const PARAMS_FORMAT: &str = "longmem-cell-params";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Rnn,
    Lstm,
    Mrnn,
    Mrnnf,
    Mlstm,
    Mlstmf,
    ConstGatesLstm,
    ConstGatesMlstm,
}

impl CellKind {
    pub fn uses_filter(self) -> bool {
        matches!(
            self,
            CellKind::Mrnn | CellKind::Mrnnf | CellKind::Mlstm | CellKind::Mlstmf | CellKind::ConstGatesMlstm
        )
    }

    pub fn all() -> [CellKind; 8] {
        [
            CellKind::Rnn,
            CellKind::Lstm,
            CellKind::Mrnn,
            CellKind::Mrnnf,
            CellKind::Mlstm,
            CellKind::Mlstmf,
            CellKind::ConstGatesLstm,
            CellKind::ConstGatesMlstm,
        ]
    }

    pub fn parse(name: &str) -> Result<CellKind> {
        match name {
            "rnn" => Ok(CellKind::Rnn),
            "lstm" => Ok(CellKind::Lstm),
            "mrnn" => Ok(CellKind::Mrnn),
            "mrnnf" => Ok(CellKind::Mrnnf),
            "mlstm" => Ok(CellKind::Mlstm),
            "mlstmf" => Ok(CellKind::Mlstmf),
            "const-gates-lstm" => Ok(CellKind::ConstGatesLstm),
            "const-gates-mlstm" => Ok(CellKind::ConstGatesMlstm),
            other => Err(Error::Config(format!("unknown cell kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Lstm => "lstm",
            CellKind::Mrnn => "mrnn",
            CellKind::Mrnnf => "mrnnf",
            CellKind::Mlstm => "mlstm",
            CellKind::Mlstmf => "mlstmf",
            CellKind::ConstGatesLstm => "const-gates-lstm",
            CellKind::ConstGatesMlstm => "const-gates-mlstm",
        }
    }
}

/// Input, hidden and output widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub p_x: usize,
    pub q: usize,
    pub p_z: usize,
}

impl Dims {
    pub fn univariate(q: usize) -> Dims {
        Dims { p_x: 1, q, p_z: 1 }
    }
}

/// Memory-parameter mode of the filter cells: a gate driven by the previous
/// state (dynamic) or a trainable constant theta_d with d = sigmoid(theta_d)/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DMode {
    Dynamic {
        #[serde(rename = "W_d")]
        w_d: Mat,
        #[serde(rename = "b_d")]
        b_d: Vec<f64>,
    },
    Fixed { theta_d: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnParams {
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "W_hh")]
    pub w_hh: Mat,
    #[serde(rename = "W_hx")]
    pub w_hx: Mat,
    #[serde(rename = "b_h")]
    pub b_h: Vec<f64>,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    #[serde(rename = "W_fh")]
    pub w_fh: Mat,
    #[serde(rename = "W_fy")]
    pub w_fy: Mat,
    #[serde(rename = "b_f")]
    pub b_f: Vec<f64>,
    #[serde(rename = "W_ih")]
    pub w_ih: Mat,
    #[serde(rename = "W_iy")]
    pub w_iy: Mat,
    #[serde(rename = "b_i")]
    pub b_i: Vec<f64>,
    #[serde(rename = "W_oh")]
    pub w_oh: Mat,
    #[serde(rename = "W_oy")]
    pub w_oy: Mat,
    #[serde(rename = "b_o")]
    pub b_o: Vec<f64>,
    #[serde(rename = "W_ch")]
    pub w_ch: Mat,
    #[serde(rename = "W_cy")]
    pub w_cy: Mat,
    #[serde(rename = "b_c")]
    pub b_c: Vec<f64>,
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
}

/// Memory-filter RNN weights. `w_m` acts on the concatenation
/// [m^{t-1}, F(x^t; d^t)]; `W_d` (dynamic mode) acts on
/// [d^{t-1}, h^{t-1}, m^{t-1}, x^t].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrnnParams {
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "W_zm")]
    pub w_zm: Mat,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
    #[serde(rename = "W_hh")]
    pub w_hh: Mat,
    #[serde(rename = "W_hx")]
    pub w_hx: Mat,
    #[serde(rename = "b_h")]
    pub b_h: Vec<f64>,
    #[serde(rename = "W_m")]
    pub w_m: Mat,
    #[serde(rename = "b_m")]
    pub b_m: Vec<f64>,
    #[serde(flatten)]
    pub d_mode: DMode,
}

/// Memory-filter LSTM weights: the forget gate is replaced by the memory
/// gate; `W_d` (dynamic mode) acts on [d^{t-1}, h^{t-1}, x^t] and d has one
/// entry per cell-state coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlstmParams {
    #[serde(rename = "W_ih")]
    pub w_ih: Mat,
    #[serde(rename = "W_ix")]
    pub w_ix: Mat,
    #[serde(rename = "b_i")]
    pub b_i: Vec<f64>,
    #[serde(rename = "W_oh")]
    pub w_oh: Mat,
    #[serde(rename = "W_ox")]
    pub w_ox: Mat,
    #[serde(rename = "b_o")]
    pub b_o: Vec<f64>,
    #[serde(rename = "W_ch")]
    pub w_ch: Mat,
    #[serde(rename = "W_cx")]
    pub w_cx: Mat,
    #[serde(rename = "b_c")]
    pub b_c: Vec<f64>,
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
    #[serde(flatten)]
    pub d_mode: DMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstGatesLstmParams {
    pub gate_f: Vec<f64>,
    pub gate_i: Vec<f64>,
    pub gate_o: Vec<f64>,
    #[serde(rename = "W_ch")]
    pub w_ch: Mat,
    #[serde(rename = "W_cx")]
    pub w_cx: Mat,
    #[serde(rename = "b_c")]
    pub b_c: Vec<f64>,
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstGatesMlstmParams {
    pub gate_i: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub theta_d: Vec<f64>,
    #[serde(rename = "W_ch")]
    pub w_ch: Mat,
    #[serde(rename = "W_cx")]
    pub w_cx: Mat,
    #[serde(rename = "b_c")]
    pub b_c: Vec<f64>,
    #[serde(rename = "W_zh")]
    pub w_zh: Mat,
    #[serde(rename = "b_z")]
    pub b_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CellWeights {
    Rnn(RnnParams),
    Lstm(LstmParams),
    Mrnn(MrnnParams),
    Mlstm(MlstmParams),
    ConstGatesLstm(ConstGatesLstmParams),
    ConstGatesMlstm(ConstGatesMlstmParams),
}

/// Full parameter set of one cell. Also serves as the gradient container:
/// [`forward`]/[`backward`] return gradients in a zeroed clone so every
/// parameter field is shape-congruent with its gradient by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellParams {
    pub kind: CellKind,
    pub dims: Dims,
    /// Filter truncation lag K; 0 for kinds without a filter.
    pub filter_len: usize,
    pub activation: Activation,
    pub output: OutputFn,
    pub weights: CellWeights,
}

// The weight payload is decoded according to `kind`: several cells share a
// subset of field names, so untagged matching would be ambiguous.
impl<'de> Deserialize<'de> for CellParams {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            kind: CellKind,
            dims: Dims,
            filter_len: usize,
            activation: Activation,
            output: OutputFn,
            weights: serde_json::Value,
        }
        let raw = Raw::deserialize(deserializer)?;
        let err = serde::de::Error::custom;
        let weights = match raw.kind {
            CellKind::Rnn => CellWeights::Rnn(serde_json::from_value(raw.weights).map_err(err)?),
            CellKind::Lstm => CellWeights::Lstm(serde_json::from_value(raw.weights).map_err(err)?),
            CellKind::Mrnn | CellKind::Mrnnf => {
                CellWeights::Mrnn(serde_json::from_value(raw.weights).map_err(err)?)
            }
            CellKind::Mlstm | CellKind::Mlstmf => {
                CellWeights::Mlstm(serde_json::from_value(raw.weights).map_err(err)?)
            }
            CellKind::ConstGatesLstm => {
                CellWeights::ConstGatesLstm(serde_json::from_value(raw.weights).map_err(err)?)
            }
            CellKind::ConstGatesMlstm => {
                CellWeights::ConstGatesMlstm(serde_json::from_value(raw.weights).map_err(err)?)
            }
        };
        Ok(CellParams {
            kind: raw.kind,
            dims: raw.dims,
            filter_len: raw.filter_len,
            activation: raw.activation,
            output: raw.output,
            weights,
        })
    }
}

pub type Gradients = CellParams;

#[derive(Debug, Serialize, Deserialize)]
struct ParamsDocument {
    format: String,
    version: u32,
    params: CellParams,
}

impl CellParams {
    pub fn to_json(&self) -> Result<String> {
        let doc = ParamsDocument {
            format: PARAMS_FORMAT.to_string(),
            version: PARAMS_VERSION,
            params: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<CellParams> {
        let doc: ParamsDocument = serde_json::from_str(text)?;
        if doc.format != PARAMS_FORMAT {
            return Err(Error::Data(format!("unexpected document format '{}'", doc.format)));
        }
        if doc.version != PARAMS_VERSION {
            return Err(Error::Data(format!("unsupported params version {}", doc.version)));
        }
        doc.params.validate()?;
        Ok(doc.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CellParams> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Effective memory parameters of a fixed-d cell.
    pub fn fixed_d(&self) -> Option<Vec<f64>> {
        let mode = match &self.weights {
            CellWeights::Mrnn(p) => Some(&p.d_mode),
            CellWeights::Mlstm(p) => Some(&p.d_mode),
            CellWeights::ConstGatesMlstm(p) => {
                return Some(p.theta_d.iter().map(|t| 0.5 * sigmoid(*t)).collect())
            }
            _ => None,
        };
        match mode {
            Some(DMode::Fixed { theta_d }) => Some(theta_d.iter().map(|t| 0.5 * sigmoid(*t)).collect()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Dims { p_x, q, p_z } = self.dims;
        if p_x == 0 || q == 0 || p_z == 0 {
            return Err(Error::Shape("all dimensions must be positive".into()));
        }
        if self.kind.uses_filter() && self.filter_len == 0 {
            return Err(Error::Domain("filter cells need filter_len K >= 1".into()));
        }
        let expect = |cond: bool, what: &str| -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::Shape(format!("{what} has inconsistent shape for dims {:?}", self.dims)))
            }
        };
        let mat = |m: &Mat, r: usize, c: usize, what: &str| expect(m.rows() == r && m.cols() == c, what);
        match (&self.weights, self.kind) {
            (CellWeights::Rnn(p), CellKind::Rnn) => {
                mat(&p.w_zh, p_z, q, "W_zh")?;
                mat(&p.w_hh, q, q, "W_hh")?;
                mat(&p.w_hx, q, p_x, "W_hx")?;
                expect(p.b_h.len() == q && p.b_z.len() == p_z, "biases")?;
            }
            (CellWeights::Lstm(p), CellKind::Lstm) => {
                for (m, name) in [(&p.w_fh, "W_fh"), (&p.w_ih, "W_ih"), (&p.w_oh, "W_oh"), (&p.w_ch, "W_ch")] {
                    mat(m, q, q, name)?;
                }
                for (m, name) in [(&p.w_fy, "W_fy"), (&p.w_iy, "W_iy"), (&p.w_oy, "W_oy"), (&p.w_cy, "W_cy")] {
                    mat(m, q, p_x, name)?;
                }
                mat(&p.w_zh, p_z, q, "W_zh")?;
                expect(
                    [&p.b_f, &p.b_i, &p.b_o, &p.b_c].iter().all(|b| b.len() == q) && p.b_z.len() == p_z,
                    "biases",
                )?;
            }
            (CellWeights::Mrnn(p), CellKind::Mrnn | CellKind::Mrnnf) => {
                mat(&p.w_zh, p_z, q, "W_zh")?;
                mat(&p.w_zm, p_z, q, "W_zm")?;
                mat(&p.w_hh, q, q, "W_hh")?;
                mat(&p.w_hx, q, p_x, "W_hx")?;
                mat(&p.w_m, q, q + p_x, "W_m")?;
                expect(p.b_h.len() == q && p.b_m.len() == q && p.b_z.len() == p_z, "biases")?;
                match (&p.d_mode, self.kind) {
                    (DMode::Dynamic { w_d, b_d }, CellKind::Mrnn) => {
                        mat(w_d, p_x, p_x + q + q + p_x, "W_d")?;
                        expect(b_d.len() == p_x, "b_d")?;
                    }
                    (DMode::Fixed { theta_d }, CellKind::Mrnnf) => expect(theta_d.len() == p_x, "theta_d")?,
                    _ => return Err(Error::Shape("d-mode does not match the cell kind".into())),
                }
            }
            (CellWeights::Mlstm(p), CellKind::Mlstm | CellKind::Mlstmf) => {
                for (m, name) in [(&p.w_ih, "W_ih"), (&p.w_oh, "W_oh"), (&p.w_ch, "W_ch")] {
                    mat(m, q, q, name)?;
                }
                for (m, name) in [(&p.w_ix, "W_ix"), (&p.w_ox, "W_ox"), (&p.w_cx, "W_cx")] {
                    mat(m, q, p_x, name)?;
                }
                mat(&p.w_zh, p_z, q, "W_zh")?;
                expect(
                    [&p.b_i, &p.b_o, &p.b_c].iter().all(|b| b.len() == q) && p.b_z.len() == p_z,
                    "biases",
                )?;
                match (&p.d_mode, self.kind) {
                    (DMode::Dynamic { w_d, b_d }, CellKind::Mlstm) => {
                        mat(w_d, q, q + q + p_x, "W_d")?;
                        expect(b_d.len() == q, "b_d")?;
                    }
                    (DMode::Fixed { theta_d }, CellKind::Mlstmf) => expect(theta_d.len() == q, "theta_d")?,
                    _ => return Err(Error::Shape("d-mode does not match the cell kind".into())),
                }
            }
            (CellWeights::ConstGatesLstm(p), CellKind::ConstGatesLstm) => {
                mat(&p.w_ch, q, q, "W_ch")?;
                mat(&p.w_cx, q, p_x, "W_cx")?;
                mat(&p.w_zh, p_z, q, "W_zh")?;
                expect(
                    p.gate_f.len() == q && p.gate_i.len() == q && p.gate_o.len() == q,
                    "gate vectors",
                )?;
                expect(p.b_c.len() == q && p.b_z.len() == p_z, "biases")?;
            }
            (CellWeights::ConstGatesMlstm(p), CellKind::ConstGatesMlstm) => {
                mat(&p.w_ch, q, q, "W_ch")?;
                mat(&p.w_cx, q, p_x, "W_cx")?;
                mat(&p.w_zh, p_z, q, "W_zh")?;
                expect(p.gate_i.len() == q && p.gate_o.len() == q && p.theta_d.len() == q, "gate vectors")?;
                expect(p.b_c.len() == q && p.b_z.len() == p_z, "biases")?;
            }
            _ => return Err(Error::Shape("weights variant does not match the cell kind".into())),
        }
        Ok(())
    }

    /// Zeroed clone; the gradient container for [`backward`].
    pub fn zeros_like(&self) -> CellParams {
        let mut g = self.clone();
        g.for_each_param_mut(|v| *v = 0.0);
        g
    }

    /// Visit every trainable scalar in a fixed order (weights, then biases,
    /// declaration order per struct).
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        let visit_mat = |m: &mut Mat, f: &mut dyn FnMut(&mut f64)| {
            for v in m.data_mut() {
                f(v);
            }
        };
        let visit_vec = |b: &mut Vec<f64>, f: &mut dyn FnMut(&mut f64)| {
            for v in b {
                f(v);
            }
        };
        let visit_dmode = |d: &mut DMode, f: &mut dyn FnMut(&mut f64)| match d {
            DMode::Dynamic { w_d, b_d } => {
                visit_mat(w_d, f);
                visit_vec(b_d, f);
            }
            DMode::Fixed { theta_d } => visit_vec(theta_d, f),
        };
        match &mut self.weights {
            CellWeights::Rnn(p) => {
                for m in [&mut p.w_zh, &mut p.w_hh, &mut p.w_hx] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_h, &mut p.b_z] {
                    visit_vec(b, &mut f);
                }
            }
            CellWeights::Lstm(p) => {
                for m in [
                    &mut p.w_fh, &mut p.w_fy, &mut p.w_ih, &mut p.w_iy, &mut p.w_oh, &mut p.w_oy,
                    &mut p.w_ch, &mut p.w_cy, &mut p.w_zh,
                ] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_f, &mut p.b_i, &mut p.b_o, &mut p.b_c, &mut p.b_z] {
                    visit_vec(b, &mut f);
                }
            }
            CellWeights::Mrnn(p) => {
                for m in [&mut p.w_zh, &mut p.w_zm, &mut p.w_hh, &mut p.w_hx, &mut p.w_m] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_z, &mut p.b_h, &mut p.b_m] {
                    visit_vec(b, &mut f);
                }
                visit_dmode(&mut p.d_mode, &mut f);
            }
            CellWeights::Mlstm(p) => {
                for m in [
                    &mut p.w_ih, &mut p.w_ix, &mut p.w_oh, &mut p.w_ox, &mut p.w_ch, &mut p.w_cx, &mut p.w_zh,
                ] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_i, &mut p.b_o, &mut p.b_c, &mut p.b_z] {
                    visit_vec(b, &mut f);
                }
                visit_dmode(&mut p.d_mode, &mut f);
            }
            CellWeights::ConstGatesLstm(p) => {
                for b in [&mut p.gate_f, &mut p.gate_i, &mut p.gate_o] {
                    visit_vec(b, &mut f);
                }
                for m in [&mut p.w_ch, &mut p.w_cx, &mut p.w_zh] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_c, &mut p.b_z] {
                    visit_vec(b, &mut f);
                }
            }
            CellWeights::ConstGatesMlstm(p) => {
                for b in [&mut p.gate_i, &mut p.gate_o, &mut p.theta_d] {
                    visit_vec(b, &mut f);
                }
                for m in [&mut p.w_ch, &mut p.w_cx, &mut p.w_zh] {
                    visit_mat(m, &mut f);
                }
                for b in [&mut p.b_c, &mut p.b_z] {
                    visit_vec(b, &mut f);
                }
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut clone = self.clone();
        clone.for_each_param_mut(|v| out.push(*v));
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let mut idx = 0usize;
        let mut overflow = false;
        self.for_each_param_mut(|v| {
            if idx < flat.len() {
                *v = flat[idx];
            } else {
                overflow = true;
            }
            idx += 1;
        });
        if overflow || idx != flat.len() {
            return Err(Error::Shape(format!(
                "flat parameter vector has length {}, cell expects {idx}",
                flat.len()
            )));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0usize;
        let mut clone = self.clone();
        clone.for_each_param_mut(|_| n += 1);
        n
    }

    pub fn max_abs_param(&self) -> f64 {
        let mut m = 0.0f64;
        let mut clone = self.clone();
        clone.for_each_param_mut(|v| m = m.max(v.abs()));
        m
    }
}

/// Initialize parameters: weights uniform in (-1/sqrt(q), 1/sqrt(q)), biases
/// zero, theta_d = 0 so the initial memory parameter sits at d = 0.25.
/// Deterministic in the seed.
pub fn init_params(kind: CellKind, dims: Dims, filter_len: usize, seed: u64) -> Result<CellParams> {
    let Dims { p_x, q, p_z } = dims;
    if p_x == 0 || q == 0 || p_z == 0 {
        return Err(Error::Shape("all dimensions must be positive".into()));
    }
    if kind.uses_filter() && filter_len == 0 {
        return Err(Error::Domain("filter cells need filter_len K >= 1".into()));
    }
    let mut rng = Rng64::from_seed(seed);
    let bound = 1.0 / (q as f64).sqrt();
    fn rand_mat(rng: &mut Rng64, r: usize, c: usize, bound: f64) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.uniform_in(-bound, bound))
    }
    fn rand_vec(rng: &mut Rng64, n: usize, bound: f64) -> Vec<f64> {
        (0..n).map(|_| rng.uniform_in(-bound, bound)).collect()
    }
    let w = |rng: &mut Rng64, r: usize, c: usize| rand_mat(rng, r, c, bound);
    let weights = match kind {
        CellKind::Rnn => CellWeights::Rnn(RnnParams {
            w_zh: w(&mut rng, p_z, q),
            w_hh: w(&mut rng, q, q),
            w_hx: w(&mut rng, q, p_x),
            b_h: vec![0.0; q],
            b_z: vec![0.0; p_z],
        }),
        CellKind::Lstm => CellWeights::Lstm(LstmParams {
            w_fh: w(&mut rng, q, q),
            w_fy: w(&mut rng, q, p_x),
            b_f: vec![0.0; q],
            w_ih: w(&mut rng, q, q),
            w_iy: w(&mut rng, q, p_x),
            b_i: vec![0.0; q],
            w_oh: w(&mut rng, q, q),
            w_oy: w(&mut rng, q, p_x),
            b_o: vec![0.0; q],
            w_ch: w(&mut rng, q, q),
            w_cy: w(&mut rng, q, p_x),
            b_c: vec![0.0; q],
            w_zh: w(&mut rng, p_z, q),
            b_z: vec![0.0; p_z],
        }),
        CellKind::Mrnn | CellKind::Mrnnf => {
            let base = MrnnParams {
                w_zh: w(&mut rng, p_z, q),
                w_zm: w(&mut rng, p_z, q),
                b_z: vec![0.0; p_z],
                w_hh: w(&mut rng, q, q),
                w_hx: w(&mut rng, q, p_x),
                b_h: vec![0.0; q],
                w_m: w(&mut rng, q, q + p_x),
                b_m: vec![0.0; q],
                d_mode: if kind == CellKind::Mrnn {
                    DMode::Dynamic { w_d: w(&mut rng, p_x, p_x + q + q + p_x), b_d: vec![0.0; p_x] }
                } else {
                    DMode::Fixed { theta_d: vec![0.0; p_x] }
                },
            };
            CellWeights::Mrnn(base)
        }
        CellKind::Mlstm | CellKind::Mlstmf => CellWeights::Mlstm(MlstmParams {
            w_ih: w(&mut rng, q, q),
            w_ix: w(&mut rng, q, p_x),
            b_i: vec![0.0; q],
            w_oh: w(&mut rng, q, q),
            w_ox: w(&mut rng, q, p_x),
            b_o: vec![0.0; q],
            w_ch: w(&mut rng, q, q),
            w_cx: w(&mut rng, q, p_x),
            b_c: vec![0.0; q],
            w_zh: w(&mut rng, p_z, q),
            b_z: vec![0.0; p_z],
            d_mode: if kind == CellKind::Mlstm {
                DMode::Dynamic { w_d: w(&mut rng, q, q + q + p_x), b_d: vec![0.0; q] }
            } else {
                DMode::Fixed { theta_d: vec![0.0; q] }
            },
        }),
        CellKind::ConstGatesLstm => CellWeights::ConstGatesLstm(ConstGatesLstmParams {
            gate_f: rand_vec(&mut rng, q, bound),
            gate_i: rand_vec(&mut rng, q, bound),
            gate_o: rand_vec(&mut rng, q, bound),
            w_ch: w(&mut rng, q, q),
            w_cx: w(&mut rng, q, p_x),
            b_c: vec![0.0; q],
            w_zh: w(&mut rng, p_z, q),
            b_z: vec![0.0; p_z],
        }),
        CellKind::ConstGatesMlstm => CellWeights::ConstGatesMlstm(ConstGatesMlstmParams {
            gate_i: rand_vec(&mut rng, q, bound),
            gate_o: rand_vec(&mut rng, q, bound),
            theta_d: vec![0.0; q],
            w_ch: w(&mut rng, q, q),
            w_cx: w(&mut rng, q, p_x),
            b_c: vec![0.0; q],
            w_zh: w(&mut rng, p_z, q),
            b_z: vec![0.0; p_z],
        }),
    };
    let params = CellParams {
        kind,
        dims,
        filter_len: if kind.uses_filter() { filter_len } else { 0 },
        activation: Activation::Tanh,
        output: OutputFn::Identity,
        weights,
    };
    params.validate()?;
    Ok(params)
}

/// Per-timestep state recorded by [`forward`] for exact BPTT. State vectors
/// (h, m, c, d) are stored with index = time and a zero row at index 0;
/// per-step quantities (gates, filter values) are stored at index time-1.
#[derive(Debug, Clone)]
pub struct StateCache {
    pub kind: CellKind,
    pub dims: Dims,
    pub t_len: usize,
    pub inputs: Mat,
    pub outputs: Mat,
    pub(crate) kc: KindCache,
}

#[derive(Debug, Clone)]
pub(crate) enum KindCache {
    Rnn {
        h: Vec<Vec<f64>>,
    },
    Lstm {
        h: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        f: Vec<Vec<f64>>,
        i: Vec<Vec<f64>>,
        o: Vec<Vec<f64>>,
        c_tilde: Vec<Vec<f64>>,
        cell_act: Vec<Vec<f64>>,
    },
    Mrnn {
        h: Vec<Vec<f64>>,
        m: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
        filt: Vec<Vec<f64>>,
        /// dF_i/dd_i at each step, so the backward pass never refits taps.
        dfdd: Vec<Vec<f64>>,
    },
    Mlstm {
        h: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        i: Vec<Vec<f64>>,
        o: Vec<Vec<f64>>,
        c_tilde: Vec<Vec<f64>>,
        cell_act: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
        /// dc_i/dd_i contribution of the filter sum at each step.
        dcdd: Vec<Vec<f64>>,
    },
    ConstGates {
        h: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        c_tilde: Vec<Vec<f64>>,
        cell_act: Vec<Vec<f64>>,
        /// Only used by the filtered variant.
        dcdd: Vec<Vec<f64>>,
    },
}

impl StateCache {
    /// Hidden-state history h^0..h^T.
    pub fn hidden_states(&self) -> &[Vec<f64>] {
        match &self.kc {
            KindCache::Rnn { h } => h,
            KindCache::Lstm { h, .. } => h,
            KindCache::Mrnn { h, .. } => h,
            KindCache::Mlstm { h, .. } => h,
            KindCache::ConstGates { h, .. } => h,
        }
    }

    /// Cell-state history c^0..c^T for the gated kinds.
    pub fn cell_states(&self) -> Option<&[Vec<f64>]> {
        match &self.kc {
            KindCache::Lstm { c, .. } => Some(c),
            KindCache::Mlstm { c, .. } => Some(c),
            KindCache::ConstGates { c, .. } => Some(c),
            _ => None,
        }
    }

    /// Memory-parameter trajectory d^0..d^T for the filter kinds.
    pub fn memory_params(&self) -> Option<&[Vec<f64>]> {
        match &self.kc {
            KindCache::Mrnn { d, .. } => Some(d),
            KindCache::Mlstm { d, .. } => Some(d),
            _ => None,
        }
    }
}

/// Run the cell over a T x p_x input matrix. Returns the T x p_z outputs and
/// the cache consumed by [`backward`].
pub fn forward(params: &CellParams, inputs: &Mat) -> Result<(Mat, StateCache)> {
    params.validate()?;
    if inputs.rows() == 0 {
        return Err(Error::Data("forward needs at least one timestep".into()));
    }
    if inputs.cols() != params.dims.p_x {
        return Err(Error::Shape(format!(
            "inputs have {} columns, cell expects p_x = {}",
            inputs.cols(),
            params.dims.p_x
        )));
    }
    if inputs.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("inputs contain non-finite values".into()));
    }
    match &params.weights {
        CellWeights::Rnn(p) => rnn::forward(params, p, inputs),
        CellWeights::Lstm(p) => lstm::forward(params, p, inputs),
        CellWeights::Mrnn(p) => mrnn::forward(params, p, inputs),
        CellWeights::Mlstm(p) => mlstm::forward(params, p, inputs),
        CellWeights::ConstGatesLstm(p) => const_gates::forward_lstm(params, p, inputs),
        CellWeights::ConstGatesMlstm(p) => const_gates::forward_mlstm(params, p, inputs),
    }
}

/// Exact gradients of sum_t <output_grads[t], z^t> with respect to every
/// parameter, for the truncated-at-K model exactly as the forward pass
/// computes it.
pub fn backward(params: &CellParams, cache: &StateCache, output_grads: &Mat) -> Result<Gradients> {
    if cache.kind != params.kind || cache.dims != params.dims {
        return Err(Error::Shape("cache does not belong to these parameters".into()));
    }
    if output_grads.rows() != cache.t_len || output_grads.cols() != params.dims.p_z {
        return Err(Error::Shape(format!(
            "output grads are {}x{}, expected {}x{}",
            output_grads.rows(),
            output_grads.cols(),
            cache.t_len,
            params.dims.p_z
        )));
    }
    match &params.weights {
        CellWeights::Rnn(p) => rnn::backward(params, p, cache, output_grads),
        CellWeights::Lstm(p) => lstm::backward(params, p, cache, output_grads),
        CellWeights::Mrnn(p) => mrnn::backward(params, p, cache, output_grads),
        CellWeights::Mlstm(p) => mlstm::backward(params, p, cache, output_grads),
        CellWeights::ConstGatesLstm(p) => const_gates::backward_lstm(params, p, cache, output_grads),
        CellWeights::ConstGatesMlstm(p) => const_gates::backward_mlstm(params, p, cache, output_grads),
    }
}

/// Mean over timesteps of the squared l2 prediction error, with its gradient
/// 2 (pred - target) / T.
pub fn loss_mse(pred: &Mat, target: &Mat) -> Result<(f64, Mat)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, target is {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let t_len = pred.rows() as f64;
    let mut loss = 0.0;
    let mut grad = Mat::zeros(pred.rows(), pred.cols());
    for idx in 0..pred.data().len() {
        let diff = pred.data()[idx] - target.data()[idx];
        loss += diff * diff;
        grad.data_mut()[idx] = 2.0 * diff / t_len;
    }
    Ok((loss / t_len, grad))
}

// Shared helpers for the cell implementations.

pub(crate) fn half_sigmoid(x: f64) -> f64 {
    0.5 * sigmoid(x)
}

/// d = sigmoid(theta)/2 for each coordinate.
pub(crate) fn fixed_d_values(theta_d: &[f64]) -> Vec<f64> {
    theta_d.iter().map(|t| half_sigmoid(*t)).collect()
}

/// Derivative of d = sigmoid(s)/2 with respect to s, written through d
/// itself: d(1 - 2d).
pub(crate) fn d_gate_derivative(d: f64) -> f64 {
    d * (1.0 - 2.0 * d)
}

pub(crate) fn check_finite(step: usize, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        Err(Error::Numerical(format!("forward pass diverged at step {step}")))
    } else {
        Ok(())
    }
}

/// In-place differencing-weight recurrence for the dynamic-d hot path.
/// `w` and `dw` must have length K+1.
pub(crate) fn fill_frac_weights(d: f64, w: &mut [f64], dw: &mut [f64]) {
    debug_assert!(d > 0.0 && d < 1.0);
    w[0] = 1.0;
    dw[0] = 0.0;
    for j in 1..w.len() {
        let jf = j as f64;
        let factor = (jf - 1.0 - d) / jf;
        dw[j] = dw[j - 1] * factor - w[j - 1] / jf;
        w[j] = w[j - 1] * factor;
    }
}
