//! Structural operations on networks: parallel composition, absorbing
//! affine maps into the input or output layer, the five-neuron clock, and
//! clocked concatenation, which realizes function composition inside a
//! single recurrent architecture.
//!
//! Concatenation keeps both subnetworks running side by side. A clock block
//! pulses at times `2^k - 2`; one step later the second subnetwork's state
//! is flushed, and on the step after that it is re-seeded from the first
//! subnetwork's current output, which travels through a pair of
//! `relu(±y - B(1 - pulse))` buffer rows. At the readout times `2^k - 2`
//! the composite therefore holds the exact two-stage composition of its
//! parts, each run for `2^(k-1) - 2` steps.

use serde::{Deserialize, Serialize};

use crate::linalg::{block_diag, stack, BlockGrid, Matrix, Vector};
use crate::rnn::RnnWeights;
use crate::{Error, Result};

/// The 5x5 clock weights. First state coordinate equals 1 exactly at times
/// `2^k - 2` for `k >= 2` and 0 otherwise; the state stays within
/// max-norm 2.
#[derive(Debug, Clone)]
pub struct ClockWeights {
    pub a_hat: Matrix,
    pub b_hat: Vector,
}

pub fn clock_weights() -> ClockWeights {
    let a_hat = Matrix::from_rows(&[
        vec![-4.0, 2.0, 0.0, 0.0, 0.0],
        vec![-4.0, 2.0, 0.0, 2.0, -0.5],
        vec![0.0, 0.0, 0.5, 0.0, -1.0],
        vec![0.0, 1.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0],
    ])
    .expect("clock shape");
    ClockWeights {
        a_hat,
        b_hat: vec![-1.0, 0.5, 1.0, -2.0, 1.0],
    }
}

/// The clock as a standalone input-free network; the single output is the
/// pulse coordinate.
pub fn clock_rnn() -> RnnWeights {
    let ClockWeights { a_hat, b_hat } = clock_weights();
    RnnWeights::new(
        a_hat,
        Matrix::zeros(5, 0),
        b_hat,
        Matrix::row_vector(&[1.0, 0.0, 0.0, 0.0, 0.0]),
        vec![0.0],
    )
    .expect("clock weights are consistent")
}

/// Runs the given networks side by side on stacked inputs: block-diagonal
/// weight matrices, stacked biases.
pub fn parallel(nets: &[&RnnWeights]) -> Result<RnnWeights> {
    if nets.is_empty() {
        return Err(Error::InvalidArgument(
            "parallel composition of zero networks".into(),
        ));
    }
    let a_h = block_diag(&nets.iter().map(|n| n.a_h()).collect::<Vec<_>>());
    let a_x = block_diag(&nets.iter().map(|n| n.a_x()).collect::<Vec<_>>());
    let a_o = block_diag(&nets.iter().map(|n| n.a_o()).collect::<Vec<_>>());
    let b_h = stack(&nets.iter().map(|n| n.b_h()).collect::<Vec<_>>());
    let b_o = stack(&nets.iter().map(|n| n.b_o()).collect::<Vec<_>>());
    RnnWeights::new(a_h, a_x, b_h, a_o, b_o)
}

/// Absorbs the linear map `A` into the input layer: the result run on `x`
/// has the same hidden trace as the original run on `A x`.
pub fn precompose_linear(net: &RnnWeights, a: &Matrix) -> Result<RnnWeights> {
    if a.rows() != net.input_dim() {
        return Err(Error::DimMismatch(format!(
            "precompose: map has {} rows but network input is {}",
            a.rows(),
            net.input_dim()
        )));
    }
    RnnWeights::new(
        net.a_h().clone(),
        net.a_x().matmul(a)?,
        net.b_h().to_vec(),
        net.a_o().clone(),
        net.b_o().to_vec(),
    )
}

/// Absorbs the affine map `y -> A y + b` into the output layer.
pub fn postcompose_affine(net: &RnnWeights, a: &Matrix, b: &[f64]) -> Result<RnnWeights> {
    if a.cols() != net.output_dim() || b.len() != a.rows() {
        return Err(Error::DimMismatch(format!(
            "postcompose: map is {}x{} with bias {}, network output is {}",
            a.rows(),
            a.cols(),
            b.len(),
            net.output_dim()
        )));
    }
    RnnWeights::new(
        net.a_h().clone(),
        net.a_x().clone(),
        net.b_h().to_vec(),
        a.matmul(net.a_o())?,
        a.affine(net.b_o(), b)?,
    )
}

/// The width-`d_in` dummy network: one hidden neuron, all weights zero,
/// output identically zero.
pub fn dummy_rnn(d_in: usize) -> RnnWeights {
    RnnWeights::new(
        Matrix::zeros(1, 1),
        Matrix::zeros(1, d_in),
        vec![0.0],
        Matrix::zeros(1, 1),
        vec![0.0],
    )
    .expect("dummy weights are consistent")
}

/// A clocked concatenation: the composite weights plus the selection
/// matrices recovering the two hidden blocks, and the bounds it was built
/// with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcatArtifacts {
    pub weights: RnnWeights,
    /// Selects the first subnetwork's hidden block; exact at every time.
    pub m_ring: Matrix,
    /// Selects the second subnetwork's hidden block; meaningful at readout
    /// times `2^k - 2`.
    pub w_ring: Matrix,
    /// Bound on the first subnetwork's output used by the buffer rows.
    pub b_f: f64,
    /// Bound on the second subnetwork's hidden state used by the reset row.
    pub b_hid_g: f64,
}

/// `rows x 5` block whose first column is constantly `value`: the outer
/// product of the all-ones vector with the clock readout row.
fn pulse_column(rows: usize, value: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, 5);
    for i in 0..rows {
        m.set(i, 0, value);
    }
    m
}

/// Concatenates `f` followed by `g` (`g.d_in == f.d_out`) under a shared
/// clock. `b_f` must bound the output of `f` on its admissible inputs and
/// `b_hid_g` the hidden state of `g` on inputs bounded by `b_f`; both are
/// caller-supplied hypotheses, not inferred.
pub fn concat(g: &RnnWeights, f: &RnnWeights, b_f: f64, b_hid_g: f64) -> Result<ConcatArtifacts> {
    if g.input_dim() != f.output_dim() {
        return Err(Error::DimMismatch(format!(
            "concat: second network expects input {} but first outputs {}",
            g.input_dim(),
            f.output_dim()
        )));
    }
    if !b_f.is_finite() || b_f <= 0.0 || !b_hid_g.is_finite() || b_hid_g <= 0.0 {
        return Err(Error::InvalidArgument(
            "concat bounds must be positive".into(),
        ));
    }
    let (m_f, d_f, m_g) = (f.hidden_dim(), f.output_dim(), g.hidden_dim());
    let clock = clock_weights();

    // Block rows/cols: f state | +buffer | -buffer | g state | clock.
    let sizes = [m_f, d_f, d_f, m_g, 5];
    let mut a_h = BlockGrid::new(&sizes, &sizes);
    a_h.set(0, 0, f.a_h())?;
    a_h.set(1, 0, f.a_o())?;
    a_h.set(1, 4, &pulse_column(d_f, b_f))?;
    a_h.set(2, 0, &f.a_o().scaled(-1.0))?;
    a_h.set(2, 4, &pulse_column(d_f, b_f))?;
    a_h.set(3, 1, g.a_x())?;
    a_h.set(3, 2, &g.a_x().scaled(-1.0))?;
    a_h.set(3, 3, g.a_h())?;
    a_h.set(3, 4, &pulse_column(m_g, -b_hid_g))?;
    a_h.set(4, 4, &clock.a_hat)?;

    let shifted_plus: Vector = f.b_o().iter().map(|v| v - b_f).collect();
    let shifted_minus: Vector = f.b_o().iter().map(|v| -v - b_f).collect();
    let b_h = stack(&[
        f.b_h(),
        &shifted_plus,
        &shifted_minus,
        g.b_h(),
        &clock.b_hat,
    ]);

    let m = m_f + 2 * d_f + m_g + 5;
    let mut a_x = BlockGrid::new(&sizes, &[f.input_dim()]);
    a_x.set(0, 0, f.a_x())?;
    let mut a_o = BlockGrid::new(&[g.output_dim()], &sizes);
    a_o.set(0, 3, g.a_o())?;

    let weights = RnnWeights::new(
        a_h.assemble(),
        a_x.assemble(),
        b_h,
        a_o.assemble(),
        g.b_o().to_vec(),
    )?;
    debug_assert_eq!(weights.hidden_dim(), m);

    let mut m_ring = BlockGrid::new(&[m_f], &sizes);
    m_ring.set(0, 0, &Matrix::identity(m_f))?;
    let mut w_ring = BlockGrid::new(&[m_g], &sizes);
    w_ring.set(0, 3, &Matrix::identity(m_g))?;

    Ok(ConcatArtifacts {
        weights,
        m_ring: m_ring.assemble(),
        w_ring: w_ring.assemble(),
        b_f,
        b_hid_g,
    })
}

/// Output and hidden-state bounds for a chain of networks: `d0` bounds the
/// external input, `d_ell[i]` the output of network `i + 1`, and `d_h`
/// every hidden state. Construction requires `d_h >= max(2, max d_ell)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsLedger {
    pub d0: f64,
    pub d_ell: Vec<f64>,
    pub d_h: f64,
}

impl BoundsLedger {
    pub fn new(d0: f64, d_ell: Vec<f64>, d_h: f64) -> Result<BoundsLedger> {
        let ledger = BoundsLedger { d0, d_ell, d_h };
        ledger.validate()?;
        Ok(ledger)
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .d_ell
            .iter()
            .chain([&self.d0, &self.d_h])
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidArgument(
                "ledger bounds must be nonnegative".into(),
            ));
        }
        let max_out = self.d_ell.iter().copied().fold(0.0f64, f64::max);
        if self.d_h < 2.0f64.max(max_out) {
            return Err(Error::InvalidArgument(format!(
                "hidden bound {} is below max(2, {})",
                self.d_h, max_out
            )));
        }
        Ok(())
    }
}

/// Affine readout recovering one level of a multiconcatenation from the
/// composite hidden state: at time `2^k - 2` (for `k >= min_k`) the value
/// `a h + b` equals the composition of the first `level` networks with the
/// i-th stage run for `2^(k - offsets[i]) - 2` steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReadout {
    pub a: Matrix,
    pub b: Vector,
    pub offsets: Vec<usize>,
    pub min_k: usize,
}

/// A multiconcatenation: the composite weights (whose own output map is the
/// last level's) plus one affine readout per level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MulticoncatArtifacts {
    pub hidden_weights: RnnWeights,
    pub level_readouts: Vec<LevelReadout>,
    /// Number of chained networks the readouts cover.
    pub levels: usize,
    /// Depth of the binary concatenation tree actually built.
    pub tree_depth: usize,
    /// Output bound of the final level, copied from the ledger.
    pub final_bound: f64,
    /// Smallest `k` at which every readout identity holds.
    pub min_k: usize,
}

struct TreeNode {
    net: RnnWeights,
    readouts: Vec<(Matrix, Vector, Vec<usize>)>,
}

/// Recursive pairing. A leaf reads itself through its own output map with
/// offset 0; an inner node embeds the left readouts through the f-selection
/// and the right readouts through the g-selection, forcing the left
/// offsets of right-side levels to the node depth and bumping the right
/// offsets by one.
fn build_tree(nets: &[RnnWeights], d_h: f64) -> Result<TreeNode> {
    if nets.len() == 1 {
        let net = nets[0].clone();
        let readout = (net.a_o().clone(), net.b_o().to_vec(), vec![0]);
        return Ok(TreeNode {
            net,
            readouts: vec![readout],
        });
    }
    let half = nets.len() / 2;
    let left = build_tree(&nets[..half], d_h)?;
    let right = build_tree(&nets[half..], d_h)?;
    let joined = concat(&right.net, &left.net, d_h, d_h)?;
    let depth = nets.len().ilog2() as usize;

    let mut readouts = Vec::with_capacity(nets.len());
    for (a, b, offs) in &left.readouts {
        readouts.push((a.matmul(&joined.m_ring)?, b.clone(), offs.clone()));
    }
    for (a, b, offs) in &right.readouts {
        let mut offsets = vec![depth; half];
        offsets.extend(offs.iter().map(|o| o + 1));
        readouts.push((a.matmul(&joined.w_ring)?, b.clone(), offsets));
    }
    Ok(TreeNode {
        net: joined.weights,
        readouts,
    })
}

fn check_chain(nets: &[RnnWeights]) -> Result<()> {
    for pair in nets.windows(2) {
        if pair[1].input_dim() != pair[0].output_dim() {
            return Err(Error::DimMismatch(format!(
                "chained networks: output {} feeds input {}",
                pair[0].output_dim(),
                pair[1].input_dim()
            )));
        }
    }
    Ok(())
}

fn assemble_artifacts(
    nets: &[RnnWeights],
    real_levels: usize,
    ledger: &BoundsLedger,
) -> Result<MulticoncatArtifacts> {
    let tree = build_tree(nets, ledger.d_h)?;
    let tree_depth = nets.len().ilog2() as usize;
    let level_readouts = tree
        .readouts
        .into_iter()
        .take(real_levels)
        .enumerate()
        .map(|(i, (a, b, offsets))| {
            let level = i + 1;
            let min_k = if level == 1 {
                2
            } else {
                level.next_power_of_two().ilog2() as usize + 2
            };
            LevelReadout {
                a,
                b,
                offsets,
                min_k,
            }
        })
        .collect();
    Ok(MulticoncatArtifacts {
        hidden_weights: tree.net,
        level_readouts,
        levels: real_levels,
        tree_depth,
        final_bound: ledger.d_ell.get(real_levels - 1).copied().unwrap_or(0.0),
        min_k: tree_depth + 2,
    })
}

/// Concatenates a power-of-two count of chained networks by recursive
/// pairing. `ledger.d_ell` must list one output bound per network.
pub fn multiconcat_tree(
    nets: &[RnnWeights],
    ledger: &BoundsLedger,
) -> Result<MulticoncatArtifacts> {
    if nets.len() < 2 || !nets.len().is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "tree concatenation needs a power-of-two count >= 2, got {} (use multiconcat for general counts)",
            nets.len()
        )));
    }
    if ledger.d_ell.len() != nets.len() {
        return Err(Error::DimMismatch(format!(
            "ledger lists {} output bounds for {} networks",
            ledger.d_ell.len(),
            nets.len()
        )));
    }
    ledger.validate()?;
    check_chain(nets)?;
    assemble_artifacts(nets, nets.len(), ledger)
}

/// Concatenates any number of chained networks, padding to the next power
/// of two with dummy networks (one matching the last output width, then
/// width-one dummies). Readouts are returned for the real levels only.
pub fn multiconcat(nets: &[RnnWeights], ledger: &BoundsLedger) -> Result<MulticoncatArtifacts> {
    if nets.is_empty() {
        return Err(Error::InvalidArgument(
            "multiconcat of zero networks".into(),
        ));
    }
    if ledger.d_ell.len() != nets.len() {
        return Err(Error::DimMismatch(format!(
            "ledger lists {} output bounds for {} networks",
            ledger.d_ell.len(),
            nets.len()
        )));
    }
    ledger.validate()?;
    check_chain(nets)?;
    let depth = (nets.len().next_power_of_two().ilog2() as usize).max(1);
    let padded_len = 1usize << depth;
    let mut padded = nets.to_vec();
    if padded.len() < padded_len {
        padded.push(dummy_rnn(nets.last().unwrap().output_dim()));
        while padded.len() < padded_len {
            padded.push(dummy_rnn(1));
        }
    }
    let mut padded_ledger = ledger.clone();
    padded_ledger.d_ell.resize(padded_len, 0.0);
    assemble_artifacts(&padded, nets.len(), &padded_ledger)
}
