//! Assembly of the monomial network: the chained power-map networks under
//! one clocked concatenation, plus a stacked affine output map that reads
//! `(x, x^2, ..., x^(2^L))` off the composite hidden state at the dyadic
//! readout times `t = 2^k - 2`.

use serde::{Deserialize, Serialize};

use crate::calculus::{multiconcat, BoundsLedger, MulticoncatArtifacts};
use crate::linalg::{Matrix, Vector};
use crate::primitives::{polymap_rnn, pow_pow2, square_and_identity_rnn};
use crate::rnn::RnnWeights;
use crate::{Error, Result};

/// The monomial network: composite hidden dynamics plus the stacked output
/// map. Coordinate 1 of the output carries `x` exactly at readout times;
/// coordinate `i >= 2` approximates `x^i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowersNet {
    pub artifacts: MulticoncatArtifacts,
    /// Stacked affine output map applied to the composite hidden state.
    pub q_pi: (Matrix, Vector),
    pub levels: usize,
    pub domain: f64,
    /// Smallest `k` for which the readout guarantees hold.
    pub min_k: usize,
}

impl PowersNet {
    /// The assembled network (hidden dynamics with the stacked output map).
    pub fn weights(&self) -> Result<RnnWeights> {
        let hw = &self.artifacts.hidden_weights;
        RnnWeights::new(
            hw.a_h().clone(),
            hw.a_x().clone(),
            hw.b_h().to_vec(),
            self.q_pi.0.clone(),
            self.q_pi.1.clone(),
        )
    }

    pub fn hidden_dim(&self) -> usize {
        self.artifacts.hidden_weights.hidden_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.q_pi.0.rows()
    }

    /// Readout times `t = 2^k - 2` from the first valid `k` upward.
    pub fn readout_times(&self) -> impl Iterator<Item = ReadoutTime> {
        (self.min_k..=MAX_READOUT_K).map(|k| ReadoutTime {
            k,
            t: (1usize << k) - 2,
        })
    }
}

/// `t = 2^k - 2` for one valid readout index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutTime {
    pub k: usize,
    pub t: usize,
}

const MAX_READOUT_K: usize = 62;

/// Builds the monomial network for powers up to `2^levels` on `[-D, D]`.
///
/// The chained stages are the square-with-passthrough network followed by
/// the level-2..=L power maps; their output bounds are `D^(2^l)` and the
/// shared hidden/reset bound is `max(2, D^(2^L))`, which dominates every
/// intermediate output and hidden state. The output map takes the
/// pass-through row first, then each level's new power rows.
pub fn powers_rnn(domain: f64, levels: usize) -> Result<PowersNet> {
    if levels == 0 {
        return Err(Error::InvalidArgument(
            "the powers network needs at least one level".into(),
        ));
    }
    if !domain.is_finite() || domain < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "domain bound must be >= 1, got {domain}"
        )));
    }
    let mut nets = vec![square_and_identity_rnn(domain)?];
    for level in 2..=levels {
        nets.push(polymap_rnn(level, domain)?);
    }
    let d_ell: Vec<f64> = (1..=levels)
        .map(|l| pow_pow2(domain, l))
        .collect::<Result<_>>()?;
    let d_h = 2.0f64.max(*d_ell.last().unwrap());
    let ledger = BoundsLedger::new(domain, d_ell, d_h)?;
    let artifacts = multiconcat(&nets, &ledger)?;

    // Stack the per-level readouts into one output map: level 1 contributes
    // its two rows swapped (pass-through first), level l >= 2 its first
    // 2^(l-1) rows (the new powers, dropping the pass-through coordinate).
    let m = artifacts.hidden_weights.hidden_dim();
    let out_dim = 1usize << levels;
    let mut a = Matrix::zeros(out_dim, m);
    let mut b = vec![0.0; out_dim];
    let mut row = 0usize;
    let first = &artifacts.level_readouts[0];
    for &src in &[1usize, 0] {
        for j in 0..m {
            a.set(row, j, first.a.get(src, j));
        }
        b[row] = first.b[src];
        row += 1;
    }
    for level in 2..=levels {
        let readout = &artifacts.level_readouts[level - 1];
        debug_assert_eq!(row, 1 << (level - 1));
        for src in 0..(1 << (level - 1)) {
            for j in 0..m {
                a.set(row, j, readout.a.get(src, j));
            }
            b[row] = readout.b[src];
            row += 1;
        }
    }
    debug_assert_eq!(row, out_dim);

    let min_k = artifacts
        .level_readouts
        .iter()
        .map(|r| r.min_k)
        .max()
        .expect("at least one level");
    Ok(PowersNet {
        artifacts,
        q_pi: (a, b),
        levels,
        domain,
        min_k,
    })
}

/// Hidden-size bound `40 * 2^L` from the construction.
pub fn powers_size_bound(levels: usize) -> usize {
    40 * (1 << levels)
}

/// The closed-form readout error `8 * 2^l * D^(2^l) * 4^(-2^k / (2l))`
/// bounding coordinate errors of level `l` at readout index `k`.
pub fn epsilon(domain: f64, level: usize, k: usize) -> Result<f64> {
    if level == 0 || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "epsilon is defined for level >= 1 and k >= 2, got level {level}, k {k}"
        )));
    }
    let range = pow_pow2(domain, level)?;
    let exponent = -(2f64.powi(k as i32)) / (2.0 * level as f64);
    Ok(8.0 * 2f64.powi(level as i32) * range * 4f64.powf(exponent))
}

/// Runs `net` under the one-shot input for `2^k - 2` steps and returns the
/// output: the oracle building block for verifying readout compositions.
pub fn g_map(net: &RnnWeights, k: usize, x: &[f64]) -> Result<Vector> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "readout indices start at k = 2".into(),
        ));
    }
    net.output_at(x, (1usize << k) - 2)
}
