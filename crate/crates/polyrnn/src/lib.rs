//! Fixed-weight ReLU recurrent networks that approximate univariate
//! polynomials to arbitrary accuracy purely by running longer.
//!
//! One network per polynomial: its size and weights are fixed at
//! construction time and the approximation error decays exponentially in
//! the number of time steps, so accuracy is a runtime knob rather than an
//! architecture knob. The building blocks are a squaring network driven by
//! a piecewise-linear interpolant refinement, multiplication via the
//! polarization identity, a five-neuron clock that pulses at times
//! `2^k - 2`, clocked concatenation realizing function composition inside
//! a single recurrence, a monomial network producing `(x, x^2, ...)`, and
//! a hold-and-clip output stage that keeps the latest readout available at
//! every time step.

pub mod calculus;
pub mod harness;
pub mod linalg;
pub mod poly;
pub mod powers;
pub mod primitives;
pub mod rnn;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("time {t} is below the validity threshold t_min = {t_min}")]
    BelowThreshold { t: usize, t_min: usize },
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use calculus::{
    clock_rnn, clock_weights, concat, dummy_rnn, multiconcat, multiconcat_tree, parallel,
    postcompose_affine, precompose_linear, BoundsLedger, ClockWeights, ConcatArtifacts,
    LevelReadout, MulticoncatArtifacts,
};
pub use harness::{decay_curve, horner_eval, sup_error, CurveRow, ErrorCurve};
pub use linalg::{block_diag, relu, BlockGrid, Matrix, Vector};
pub use poly::{
    build_poly_rnn, clip_bound, error_bound, poly_readout_rnn, smooth_output, time_decompose,
    PolyErrorBound, PolynomialSpec, SmoothedRnn, TimeIndex,
};
pub use powers::{epsilon, g_map, powers_rnn, PowersNet, ReadoutTime};
pub use primitives::{
    identity_rnn, interp_im, mult_rnn, polymap_concat_eval, polymap_eval, polymap_rnn,
    selector_matrix, square_and_identity_rnn, square_rnn,
};
pub use rnn::{FeedForwardNet, HiddenTrace, RnnWeights};
