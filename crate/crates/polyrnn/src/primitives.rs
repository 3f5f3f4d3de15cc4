//! The explicit primitive networks (squaring, multiplication, identity,
//! square-with-passthrough, and the power-doubling maps) together with the
//! closed-form oracles used to verify them independently.
//!
//! The squaring network realizes `D^2 (z - I_t(z))` with `z = |x| / D`,
//! where `I_t` is the piecewise-linear interpolant of `F(z) = z - z^2` on
//! the dyadic grid of step `2^-t`; its error decays as `4^-t`.
//! Multiplication reduces to two squarings through
//! `x1 x2 = ((x1+x2)/2)^2 - ((x1-x2)/2)^2`.

use crate::calculus::{parallel, postcompose_affine, precompose_linear};
use crate::linalg::{Matrix, Vector};
use crate::rnn::RnnWeights;
use crate::{Error, Result};

/// `I_m(x)` via the sawtooth recursion `H_0 = s_0(x)`,
/// `H_l = s_l(H_{l-1})` with `s_l(y) = y/2 - relu(y - 2^(-2l-1))`,
/// summed over `l < m`. This is the same arithmetic the squaring network
/// performs, so agreement there is exact.
pub fn interp_im(m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "interpolant needs at least one level".into(),
        ));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "interpolant input {x} outside [0, 1]"
        )));
    }
    let mut total = 0.0;
    let mut h = x;
    for level in 0..m {
        let threshold = 2f64.powi(-2 * level as i32 - 1);
        h = 0.5 * h.max(0.0) - (h - threshold).max(0.0);
        total += h;
    }
    Ok(total)
}

/// `I_m(x)` by direct nodal interpolation of `F(x) = x - x^2` at the points
/// `k / 2^m`: the independent cross-check for [`interp_im`].
pub fn interp_im_nodal(m: usize, x: f64) -> Result<f64> {
    if m == 0 || m > 52 {
        return Err(Error::InvalidArgument(
            "interpolant level out of range".into(),
        ));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "interpolant input {x} outside [0, 1]"
        )));
    }
    let n = (1u64 << m) as f64;
    let k = (x * n).floor().min(n - 1.0);
    let (x0, x1) = (k / n, (k + 1.0) / n);
    let f = |v: f64| v - v * v;
    Ok(f(x0) + (f(x1) - f(x0)) * (x - x0) / (x1 - x0))
}

/// The squaring network: 7 hidden neurons, valid on `[-D, D]`, output
/// within `(D^2/4) 4^-t` of `x^2` for `t >= 1`.
pub fn square_rnn(domain: f64) -> Result<RnnWeights> {
    check_domain(domain)?;
    let a_h = Matrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.5, -1.0, 0.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.5, -1.0, 0.0, -1.0, 0.0],
        vec![1.0, 1.0, -0.5, 1.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.25, -0.5],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ])?;
    let inv = 1.0 / domain;
    let a_x = Matrix::col_vector(&[inv, -inv, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let b_h = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.0];
    let d2 = domain * domain;
    let a_o = Matrix::row_vector(&[0.0, 0.0, -0.5 * d2, d2, d2, 0.0, 0.0]);
    RnnWeights::new(a_h, a_x, b_h, a_o, vec![0.0])
}

/// The multiplication network: two parallel squarings behind the input map
/// `(x1, x2) -> ((x1+x2)/2, (x1-x2)/2)` and the output difference.
/// 14 hidden neurons, error within `(D^2/2) 4^-t` on `[-D, D]^2` for
/// `t >= 1`.
pub fn mult_rnn(domain: f64) -> Result<RnnWeights> {
    check_domain(domain)?;
    let sq = square_rnn(domain)?;
    let pair = parallel(&[&sq, &sq])?;
    let averaged = precompose_linear(
        &pair,
        &Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, -0.5]])?,
    )?;
    postcompose_affine(&averaged, &Matrix::row_vector(&[1.0, -1.0]), &[0.0])
}

/// The identity network: `relu(x) - relu(-x) = x`, held exactly for all
/// time by an identity state update. 2 hidden neurons.
pub fn identity_rnn() -> RnnWeights {
    RnnWeights::new(
        Matrix::identity(2),
        Matrix::col_vector(&[1.0, -1.0]),
        vec![0.0, 0.0],
        Matrix::row_vector(&[1.0, -1.0]),
        vec![0.0],
    )
    .expect("identity weights are consistent")
}

/// Squaring and identity in parallel behind a duplicating input map:
/// outputs `(~x^2, x)` with the second coordinate exact. 9 hidden neurons.
pub fn square_and_identity_rnn(domain: f64) -> Result<RnnWeights> {
    check_domain(domain)?;
    let par = parallel(&[&square_rnn(domain)?, &identity_rnn()])?;
    precompose_linear(&par, &Matrix::col_vector(&[1.0, 1.0]))
}

fn check_domain(domain: f64) -> Result<()> {
    if !domain.is_finite() || domain < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "constructions assume a domain bound >= 1, got {domain}"
        )));
    }
    Ok(())
}

/// Input dimension of the level-`level` power map (1 for level 1, else
/// `2^(level-2) + 1`).
pub fn polymap_in_dim(level: usize) -> usize {
    if level == 1 {
        1
    } else {
        (1 << (level - 2)) + 1
    }
}

/// Output dimension of the level-`level` power map (`2^(level-1) + 1`,
/// which is 2 at level 1).
pub fn polymap_out_dim(level: usize) -> usize {
    (1 << (level - 1)) + 1
}

/// Exact evaluation of the level-`level` power map: level 1 sends `x` to
/// `(x^2, x)`; higher levels square and cross-multiply adjacent
/// coordinates, pass the last coordinate through, and prepend the product
/// of the last two, doubling the range of powers carried.
pub fn polymap_eval(level: usize, x: &[f64]) -> Result<Vector> {
    if level == 0 {
        return Err(Error::InvalidArgument("power map level starts at 1".into()));
    }
    if x.len() != polymap_in_dim(level) {
        return Err(Error::DimMismatch(format!(
            "power map level {level} expects input dimension {}, got {}",
            polymap_in_dim(level),
            x.len()
        )));
    }
    if level == 1 {
        return Ok(vec![x[0] * x[0], x[0]]);
    }
    let n = 1 << (level - 2);
    let mut out = vec![0.0; (1 << (level - 1)) + 1];
    out[0] = x[n - 1] * x[n];
    for k in 1..=n {
        out[2 * k - 1] = x[k - 1] * x[k - 1];
    }
    for k in 1..n {
        out[2 * k] = x[k - 1] * x[k];
    }
    out[1 << (level - 1)] = x[n];
    Ok(out)
}

/// The chained power maps evaluated exactly:
/// `(x^(2^(level-1)+1), ..., x^(2^level), x)`.
pub fn polymap_concat_eval(level: usize, x: f64) -> Result<Vector> {
    if level == 0 {
        return Err(Error::InvalidArgument("power map level starts at 1".into()));
    }
    let mut v = vec![x];
    for l in 1..=level {
        v = polymap_eval(l, &v)?;
    }
    Ok(v)
}

/// The 0/1 selector feeding the level-`level` power map network, rows
/// grouped as: the special product pair, the squares block, the adjacent
/// product pairs, and the pass-through row. Shape
/// `(3 * 2^(level-2) + 1) x (2^(level-2) + 1)`.
pub fn selector_matrix(level: usize) -> Result<Matrix> {
    if level < 2 {
        return Err(Error::InvalidArgument(
            "selector matrix is defined for level >= 2".into(),
        ));
    }
    let n = 1 << (level - 2);
    let mut picks = Vec::with_capacity(3 * n + 1);
    picks.extend([n - 1, n]);
    picks.extend(0..n);
    for k in 1..n {
        picks.extend([k - 1, k]);
    }
    picks.push(n);
    Ok(selector_from_picks(&picks, n + 1))
}

/// Selector rows reordered to line up with the parallel network order used
/// by [`polymap_rnn`] (multiply, square, multiply, square, ..., identity):
/// the special pair, then for each k the square input and the adjacent
/// pair, then the final square input and the pass-through.
fn selector_for_parallel(level: usize) -> Matrix {
    let n = 1 << (level - 2);
    let mut picks = Vec::with_capacity(3 * n + 1);
    picks.extend([n - 1, n]);
    for k in 1..n {
        picks.push(k - 1);
        picks.extend([k - 1, k]);
    }
    picks.push(n - 1);
    picks.push(n);
    selector_from_picks(&picks, n + 1)
}

fn selector_from_picks(picks: &[usize], cols: usize) -> Matrix {
    let mut m = Matrix::zeros(picks.len(), cols);
    for (i, &j) in picks.iter().enumerate() {
        m.set(i, j, 1.0);
    }
    m
}

/// Network approximating the level-`level` power map on the box
/// `[-D^(2^(level-1)), D^(2^(level-1))]^(2^(level-2)+1)`: alternating
/// multiplication and squaring networks (instantiated at the squared
/// bound) plus an identity lane, behind the coordinate selector. Error
/// within `(D^(2^level)/2) 4^-t` for `t >= 1`; hidden size
/// `2^(level-2) * 21 + 2`.
pub fn polymap_rnn(level: usize, domain: f64) -> Result<RnnWeights> {
    if level < 2 {
        return Err(Error::InvalidArgument(
            "power map networks start at level 2".into(),
        ));
    }
    check_domain(domain)?;
    let bound = pow_pow2(domain, level - 1)?;
    let n = 1 << (level - 2);
    let mul = mult_rnn(bound)?;
    let sq = square_rnn(bound)?;
    let id = identity_rnn();
    let mut lanes: Vec<&RnnWeights> = Vec::with_capacity(2 * n + 1);
    lanes.push(&mul);
    for _ in 1..n {
        lanes.push(&sq);
        lanes.push(&mul);
    }
    lanes.push(&sq);
    lanes.push(&id);
    precompose_linear(&parallel(&lanes)?, &selector_for_parallel(level))
}

/// `D^(2^level)` with an overflow guard; the constructions are meant for
/// domain bounds near 1 and a handful of levels.
pub fn pow_pow2(domain: f64, level: usize) -> Result<f64> {
    if level > 60 {
        return Err(Error::Overflow(format!(
            "2^{level} exceeds the supported exponent range"
        )));
    }
    let value = domain.powi(1i32 << level);
    if !value.is_finite() || value > 1e300 {
        return Err(Error::Overflow(format!(
            "domain bound {domain} raised to 2^{level} overflows double precision"
        )));
    }
    Ok(value)
}
