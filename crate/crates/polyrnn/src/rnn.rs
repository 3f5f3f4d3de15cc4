//! Elman-style ReLU recurrent networks with a one-shot input convention.
//!
//! A network is the five-tuple `(A_h, A_x, b_h, A_o, b_o)`; the state
//! recursion is `h[t] = relu(A_h h[t-1] + A_x x[t] + b_h)` starting from
//! `h[-1] = 0`, and the output map is `h -> A_o h + b_o`. Every construction
//! in this crate drives the recursion with the one-shot input sequence that
//! is `x` at `t = 0` and zero afterwards, which collapses the recursion to
//! `h[0] = relu(A_x x + b_h)` followed by the autonomous update
//! `h[t] = relu(A_h h[t-1] + b_h)`.

use serde::{Deserialize, Serialize};

use crate::linalg::{relu, Matrix, Vector};
use crate::{Error, Result};

/// Weights of a ReLU RNN. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RnnWeightsJson", try_from = "RnnWeightsJson")]
pub struct RnnWeights {
    a_h: Matrix,
    a_x: Matrix,
    b_h: Vector,
    a_o: Matrix,
    b_o: Vector,
}

/// Wire schema: dimensions plus the five weight arrays in row-major order.
#[derive(Serialize, Deserialize, Clone)]
struct RnnWeightsJson {
    d_in: usize,
    d_out: usize,
    m: usize,
    a_h: Vec<f64>,
    a_x: Vec<f64>,
    b_h: Vec<f64>,
    a_o: Vec<f64>,
    b_o: Vec<f64>,
}

impl From<RnnWeights> for RnnWeightsJson {
    fn from(w: RnnWeights) -> RnnWeightsJson {
        RnnWeightsJson {
            d_in: w.input_dim(),
            d_out: w.output_dim(),
            m: w.hidden_dim(),
            a_h: w.a_h.data().to_vec(),
            a_x: w.a_x.data().to_vec(),
            b_h: w.b_h,
            a_o: w.a_o.data().to_vec(),
            b_o: w.b_o,
        }
    }
}

impl TryFrom<RnnWeightsJson> for RnnWeights {
    type Error = Error;
    fn try_from(j: RnnWeightsJson) -> Result<RnnWeights> {
        RnnWeights::new(
            Matrix::from_vec(j.m, j.m, j.a_h)?,
            Matrix::from_vec(j.m, j.d_in, j.a_x)?,
            j.b_h,
            Matrix::from_vec(j.d_out, j.m, j.a_o)?,
            j.b_o,
        )
    }
}

impl RnnWeights {
    /// Validates the five shapes against each other.
    pub fn new(
        a_h: Matrix,
        a_x: Matrix,
        b_h: Vector,
        a_o: Matrix,
        b_o: Vector,
    ) -> Result<RnnWeights> {
        let m = a_h.rows();
        if a_h.cols() != m {
            return Err(Error::DimMismatch("A_h must be square".into()));
        }
        if a_x.rows() != m || b_h.len() != m || a_o.cols() != m || b_o.len() != a_o.rows() {
            return Err(Error::DimMismatch(format!(
                "inconsistent weight shapes: A_h {}x{}, A_x {}x{}, b_h {}, A_o {}x{}, b_o {}",
                a_h.rows(),
                a_h.cols(),
                a_x.rows(),
                a_x.cols(),
                b_h.len(),
                a_o.rows(),
                a_o.cols(),
                b_o.len()
            )));
        }
        if b_h.iter().chain(b_o.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("bias entries must be finite".into()));
        }
        Ok(RnnWeights {
            a_h,
            a_x,
            b_h,
            a_o,
            b_o,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.a_h.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.a_x.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.a_o.rows()
    }

    pub fn a_h(&self) -> &Matrix {
        &self.a_h
    }

    pub fn a_x(&self) -> &Matrix {
        &self.a_x
    }

    pub fn b_h(&self) -> &[f64] {
        &self.b_h
    }

    pub fn a_o(&self) -> &Matrix {
        &self.a_o
    }

    pub fn b_o(&self) -> &[f64] {
        &self.b_o
    }

    /// One step of the full recursion `relu(A_h h + A_x x + b_h)`.
    pub fn step(&self, h_prev: &[f64], x_t: &[f64]) -> Result<Vector> {
        if h_prev.len() != self.hidden_dim() {
            return Err(Error::DimMismatch(format!(
                "step: state length {} but hidden size is {}",
                h_prev.len(),
                self.hidden_dim()
            )));
        }
        let mut pre = self.a_h.affine(h_prev, &self.b_h)?;
        let drive = self.a_x.matvec(x_t)?;
        for (p, d) in pre.iter_mut().zip(&drive) {
            *p += d;
        }
        Ok(relu(&pre))
    }

    /// Output map `A_o h + b_o`.
    pub fn output_of(&self, h: &[f64]) -> Result<Vector> {
        self.a_o.affine(h, &self.b_o)
    }

    /// Runs the one-shot input `x` for `t_max` steps, keeping all states.
    pub fn run_delta(&self, x: &[f64], t_max: usize) -> Result<HiddenTrace> {
        let mut states = Vec::with_capacity(t_max + 1);
        let mut outputs = Vec::with_capacity(t_max + 1);
        let mut h = relu(&self.a_x.affine(x, &self.b_h)?);
        outputs.push(self.output_of(&h)?);
        states.push(h.clone());
        for _ in 1..=t_max {
            h = relu(&self.a_h.affine(&h, &self.b_h)?);
            outputs.push(self.output_of(&h)?);
            states.push(h.clone());
        }
        Ok(HiddenTrace { states, outputs })
    }

    /// Streaming form of `run_delta`: only the state at time `t`,
    /// O(hidden size) memory.
    pub fn state_at(&self, x: &[f64], t: usize) -> Result<Vector> {
        let mut h = relu(&self.a_x.affine(x, &self.b_h)?);
        for _ in 1..=t {
            h = relu(&self.a_h.affine(&h, &self.b_h)?);
        }
        Ok(h)
    }

    /// Output at time `t` under the one-shot input, O(hidden size) memory.
    pub fn output_at(&self, x: &[f64], t: usize) -> Result<Vector> {
        self.output_of(&self.state_at(x, t)?)
    }

    /// Runs an arbitrary input sequence (`x[t] = 0` past the end of `xs`).
    pub fn run_sequence(&self, xs: &[Vector], t_max: usize) -> Result<HiddenTrace> {
        let zero = vec![0.0; self.input_dim()];
        let mut states = Vec::with_capacity(t_max + 1);
        let mut outputs = Vec::with_capacity(t_max + 1);
        let mut h = vec![0.0; self.hidden_dim()];
        for t in 0..=t_max {
            let x_t = xs.get(t).map_or(zero.as_slice(), Vec::as_slice);
            h = self.step(&h, x_t)?;
            outputs.push(self.output_of(&h)?);
            states.push(h.clone());
        }
        Ok(HiddenTrace { states, outputs })
    }

    /// Unrolls the one-shot run of length `t_max` into a feed-forward net
    /// with `t_max + 2` affine layers, the middle `t_max` of which share one
    /// weight pair.
    pub fn unfold(&self, t_max: usize) -> Result<FeedForwardNet> {
        if t_max == 0 {
            return Err(Error::InvalidArgument(
                "unfold needs at least one step".into(),
            ));
        }
        Ok(FeedForwardNet {
            input_layer: (self.a_x.clone(), self.b_h.clone()),
            shared_layer: (self.a_h.clone(), self.b_h.clone()),
            shared_count: t_max,
            output_layer: (self.a_o.clone(), self.b_o.clone()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    pub fn from_json(s: &str) -> Result<RnnWeights> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Full record of a one-shot run: `states[t]` and `outputs[t]` for
/// `t = 0..=t_max`, with `outputs[t] = A_o states[t] + b_o`.
#[derive(Debug, Clone)]
pub struct HiddenTrace {
    pub states: Vec<Vector>,
    pub outputs: Vec<Vector>,
}

impl HiddenTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Feed-forward network with shared middle weights: layer 1 is
/// `input_layer`, layers `2..=shared_count+1` are all `shared_layer`, and
/// layer `shared_count + 2` is `output_layer`. ReLU between layers, none
/// after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardNet {
    pub input_layer: (Matrix, Vector),
    pub shared_layer: (Matrix, Vector),
    pub shared_count: usize,
    pub output_layer: (Matrix, Vector),
}

impl FeedForwardNet {
    pub fn layer_count(&self) -> usize {
        self.shared_count + 2
    }

    /// Evaluates the network. Applies the same affine kernel as the
    /// recurrent path, so unfolded nets reproduce `run_delta` bit-exactly.
    pub fn eval(&self, x: &[f64]) -> Result<Vector> {
        let (a1, b1) = &self.input_layer;
        let mut z = a1.affine(x, b1)?;
        let (ash, bsh) = &self.shared_layer;
        for _ in 0..self.shared_count {
            z = ash.affine(&relu(&z), bsh)?;
        }
        let (ao, bo) = &self.output_layer;
        ao.affine(&relu(&z), bo)
    }
}
