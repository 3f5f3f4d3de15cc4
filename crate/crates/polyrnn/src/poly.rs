//! The end-to-end polynomial network: coefficient readout over the
//! monomial network, hold-and-clip output smoothing, the dyadic time
//! decomposition, and the closed-form runtime error bound.
//!
//! Smoothing wraps a scalar-output network so that on every interval
//! `[2^k - 1, 2^(k+1) - 2]` the wrapped network emits the inner output
//! from time `2^k - 2`, clipped to `[-B, B]`: a latch pair copies the
//! clipped value on each clock pulse and a reset row clears it just before
//! the next one, so a valid approximation is available at every time step
//! instead of only at the readout times.

use serde::{Deserialize, Serialize};

use crate::calculus::{clock_weights, postcompose_affine};
use crate::linalg::{stack, BlockGrid, Matrix};
use crate::powers::powers_rnn;
use crate::primitives::identity_rnn;
use crate::rnn::RnnWeights;
use crate::{Error, Result};

/// A target polynomial `a_0 + a_1 x + ... + a_N x^N` on `[-D, D]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub coeffs: Vec<f64>,
    pub domain: f64,
}

impl PolynomialSpec {
    pub fn new(coeffs: Vec<f64>, domain: f64) -> Result<PolynomialSpec> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "a polynomial needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        if !domain.is_finite() || domain < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "domain bound must be >= 1, got {domain}"
            )));
        }
        Ok(PolynomialSpec { coeffs, domain })
    }

    /// Degree index `N` (number of coefficients minus one).
    pub fn degree_index(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `sum |a_i|`.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// A network wrapped with hold-and-clip smoothing (or, for degree <= 1,
/// the exact affine-readout network, which needs no smoothing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedRnn {
    pub weights: RnnWeights,
    /// Clip range `[-B, B]`.
    pub clip_bound: f64,
    /// Hidden size of the wrapped network (`weights` adds 11 when
    /// `smoothed` is set).
    pub inner_m: usize,
    pub smoothed: bool,
}

/// Wraps a scalar-output network with the hold-and-clip circuit. For all
/// `k >= 2` and `0 <= l <= 2^k - 1` the wrapped output at `2^k - 1 + l`
/// equals the inner output at `2^k - 2` clipped to `[-B, B]`; before `t = 3`
/// the latch is empty and the output is 0.
pub fn smooth_output(net: &RnnWeights, clip_bound: f64) -> Result<SmoothedRnn> {
    if net.output_dim() != 1 {
        return Err(Error::DimMismatch(format!(
            "smoothing applies to scalar outputs, network has {}",
            net.output_dim()
        )));
    }
    if !clip_bound.is_finite() || clip_bound <= 0.0 {
        return Err(Error::InvalidArgument(
            "clip bound must be positive and finite".into(),
        ));
    }
    let m = net.hidden_dim();
    let clock = clock_weights();
    let b = clip_bound;

    // Block rows/cols: inner state | gated copy pair | ungated copy pair |
    // latch pair | clock. The gated pair sees the clock pulse, the ungated
    // pair does not; their difference is the clipped inner output exactly
    // on pulses and zero otherwise, which feeds the latch.
    let sizes = [m, 2, 2, 2, 5];
    let mut a_h = BlockGrid::new(&sizes, &sizes);
    a_h.set(0, 0, net.a_h())?;
    let signed = Matrix::from_rows(&[
        net.a_o().row(0).to_vec(),
        net.a_o().row(0).iter().map(|v| -v).collect(),
    ])?;
    a_h.set(1, 0, &signed)?;
    a_h.set(2, 0, &signed)?;
    let mut gate = Matrix::zeros(2, 5);
    gate.set(0, 0, b);
    gate.set(1, 0, b);
    a_h.set(1, 4, &gate)?;
    a_h.set(3, 1, &Matrix::identity(2))?;
    a_h.set(3, 2, &Matrix::identity(2).scaled(-1.0))?;
    a_h.set(3, 3, &Matrix::identity(2))?;
    a_h.set(3, 4, &gate.scaled(-1.0))?;
    a_h.set(4, 4, &clock.a_hat)?;

    let bo = net.b_o()[0];
    let copy_bias = [bo - b, -bo - b];
    let b_h = stack(&[net.b_h(), &copy_bias, &copy_bias, &[0.0, 0.0], &clock.b_hat]);

    let mut a_x = BlockGrid::new(&sizes, &[net.input_dim()]);
    a_x.set(0, 0, net.a_x())?;

    let mut a_o = Matrix::zeros(1, m + 11);
    for (offset, sign) in [(m, 1.0), (m + 2, -1.0), (m + 4, 1.0)] {
        a_o.set(0, offset, sign);
        a_o.set(0, offset + 1, -sign);
    }

    let weights = RnnWeights::new(a_h.assemble(), a_x.assemble(), b_h, a_o, vec![0.0])?;
    Ok(SmoothedRnn {
        weights,
        clip_bound: b,
        inner_m: m,
        smoothed: true,
    })
}

/// `clip(y, -B, B)`.
pub fn clip(y: f64, bound: f64) -> f64 {
    y.max(-bound).min(bound)
}

/// Decomposition `t = 2^k - 1 + l` with `0 <= l <= 2^k - 1`: identifies
/// which held readout a smoothed network is emitting at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeIndex {
    pub t: usize,
    pub k: usize,
    pub l: usize,
}

pub fn time_decompose(t: usize) -> Result<TimeIndex> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "time decomposition starts at t = 1".into(),
        ));
    }
    let k = (t + 1).ilog2() as usize;
    let l = t + 1 - (1usize << k);
    debug_assert!(l < (1usize << k));
    Ok(TimeIndex { t, k, l })
}

/// The closed-form runtime error model of a built polynomial network:
/// `bound(t) = |a|_1 * C1 * 4^(-C2 t)` for `t >= t_min`. Exact
/// realizations (degree <= 1) report zero error from `t_min = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyErrorBound {
    pub c1: f64,
    pub c2: f64,
    pub t_min: usize,
    pub coeff_l1: f64,
    pub exact: bool,
}

impl PolyErrorBound {
    pub fn bound(&self, t: usize) -> Result<f64> {
        if t < self.t_min {
            return Err(Error::BelowThreshold {
                t,
                t_min: self.t_min,
            });
        }
        if self.exact {
            return Ok(0.0);
        }
        Ok(self.coeff_l1 * self.c1 * 4f64.powf(-self.c2 * t as f64))
    }
}

fn error_model(spec: &PolynomialSpec) -> Result<PolyErrorBound> {
    let n = spec.degree_index();
    if n <= 1 {
        return Ok(PolyErrorBound {
            c1: 0.0,
            c2: 0.0,
            t_min: 0,
            coeff_l1: spec.coeff_l1(),
            exact: true,
        });
    }
    let c1 = 16.0 * n as f64 * spec.domain.powi(2 * n as i32);
    if !c1.is_finite() || c1 > 1e300 {
        return Err(Error::Overflow(format!(
            "error constant overflows for degree {n} on domain bound {}",
            spec.domain
        )));
    }
    let log_n = (n as f64).log2();
    let c2 = 1.0 / (4.0 * log_n.ceil());
    let t_min = (16.0 * log_n).ceil() as usize;
    Ok(PolyErrorBound {
        c1,
        c2,
        t_min,
        coeff_l1: spec.coeff_l1(),
        exact: false,
    })
}

/// `|a|_1 C1 4^(-C2 t)` for `t >= t_min`; defined for degree >= 2.
pub fn error_bound(spec: &PolynomialSpec, t: usize) -> Result<f64> {
    let model = error_model(spec)?;
    if model.exact {
        return Err(Error::InvalidArgument(
            "the runtime bound is defined for degree >= 2; lower degrees are exact".into(),
        ));
    }
    model.bound(t)
}

/// Clip bound `sum |a_i| D^i`: an upper bound for `max |p|` on `[-D, D]`,
/// cheap to compute and sufficient for the clipping inequality (any value
/// at least the true maximum preserves it).
pub fn clip_bound(spec: &PolynomialSpec) -> Result<f64> {
    let mut total = 0.0f64;
    let mut power = 1.0f64;
    for c in &spec.coeffs {
        total += c.abs() * power;
        power *= spec.domain;
        if !total.is_finite() || !power.is_finite() {
            return Err(Error::Overflow(
                "clip bound overflows double precision".into(),
            ));
        }
    }
    Ok(total)
}

/// The unsmoothed pipeline: the monomial network postcomposed with the
/// coefficient readout `h -> a_0 + sum a_i (powers)_i`. Its output at the
/// readout times `2^k - 2` carries the polynomial approximation that
/// smoothing then holds. Degree >= 2.
pub fn poly_readout_rnn(spec: &PolynomialSpec) -> Result<RnnWeights> {
    let n = spec.degree_index();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the readout pipeline is built for degree >= 2".into(),
        ));
    }
    let levels = ((n as f64).log2().ceil() as usize).max(1);
    let powers = powers_rnn(spec.domain, levels)?;
    let mut row = spec.coeffs[1..].to_vec();
    row.resize(1 << levels, 0.0);
    postcompose_affine(
        &powers.weights()?,
        &Matrix::row_vector(&row),
        &[spec.coeffs[0]],
    )
}

/// Builds the polynomial network. Degree >= 2 goes through the monomial
/// pipeline and smoothing; degree <= 1 is realized exactly by an affine
/// readout over the identity network and is returned unsmoothed with a
/// zero error model.
pub fn build_poly_rnn(spec: &PolynomialSpec) -> Result<(SmoothedRnn, PolyErrorBound)> {
    let model = error_model(spec)?;
    if spec.degree_index() <= 1 {
        let slope = spec.coeffs.get(1).copied().unwrap_or(0.0);
        let weights = postcompose_affine(
            &identity_rnn(),
            &Matrix::row_vector(&[slope]),
            &[spec.coeffs[0]],
        )?;
        let inner_m = weights.hidden_dim();
        let clip = clip_bound(spec)?.max(f64::MIN_POSITIVE);
        return Ok((
            SmoothedRnn {
                weights,
                clip_bound: clip,
                inner_m,
                smoothed: false,
            },
            model,
        ));
    }
    let inner = poly_readout_rnn(spec)?;
    // The zero polynomial has clip bound 0; any positive bound clips its
    // exactly-zero readout to itself.
    let bound = clip_bound(spec)?.max(f64::MIN_POSITIVE);
    let smoothed = smooth_output(&inner, bound)?;
    Ok((smoothed, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::horner_eval;

    #[test]
    fn smoothing_holds_and_clips_identity() {
        for &(bound, x) in &[(10.0, 3.0), (1.0, 3.0), (5.0, -7.25)] {
            let wrapped = smooth_output(&identity_rnn(), bound).unwrap();
            assert_eq!(wrapped.weights.hidden_dim(), wrapped.inner_m + 11);
            let trace = wrapped.weights.run_delta(&[x], 126).unwrap();
            for t in 0..=2 {
                assert_eq!(trace.outputs[t][0], 0.0, "warm-up");
            }
            let want = clip(x, bound);
            for k in 2..=6u32 {
                let lo = (1usize << k) - 1;
                let hi = (1usize << (k + 1)) - 2;
                for t in lo..=hi.min(126) {
                    assert_eq!(trace.outputs[t][0], want, "B={bound} x={x} t={t}");
                }
            }
        }
    }

    #[test]
    fn smoothing_holds_across_long_horizons() {
        // Latches at t = 128, 256, 512, 1024 still fire; the clock stays
        // alive far past the point where uncompensated summation would
        // have silenced it.
        let wrapped = smooth_output(&identity_rnn(), 2.0).unwrap();
        let trace = wrapped.weights.run_delta(&[1.5], 1022).unwrap();
        for k in 2..=9u32 {
            let lo = (1usize << k) - 1;
            let hi = ((1usize << (k + 1)) - 2).min(1022);
            for t in lo..=hi {
                assert_eq!(trace.outputs[t][0], 1.5, "t={t}");
            }
        }
    }

    #[test]
    fn smoothing_rejects_vector_outputs() {
        let two = crate::calculus::parallel(&[&identity_rnn(), &identity_rnn()]).unwrap();
        assert!(smooth_output(&two, 1.0).is_err());
        assert!(smooth_output(&identity_rnn(), 0.0).is_err());
    }

    #[test]
    fn smoothed_output_matches_clipped_inner_readout() {
        let spec = PolynomialSpec::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let inner = poly_readout_rnn(&spec).unwrap();
        let (smoothed, _) = build_poly_rnn(&spec).unwrap();
        for &x in &[-1.0, -0.3, 0.45, 1.0] {
            let trace = smoothed.weights.run_delta(&[x], 100).unwrap();
            for t in 3..=100 {
                let idx = time_decompose(t).unwrap();
                let held = inner.output_at(&[x], (1 << idx.k) - 2).unwrap()[0];
                let want = clip(held, smoothed.clip_bound);
                assert!((trace.outputs[t][0] - want).abs() <= 1e-9, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn time_decompose_examples() {
        assert_eq!(time_decompose(5).unwrap(), TimeIndex { t: 5, k: 2, l: 2 });
        assert_eq!(time_decompose(7).unwrap(), TimeIndex { t: 7, k: 3, l: 0 });
        assert_eq!(time_decompose(2).unwrap(), TimeIndex { t: 2, k: 1, l: 1 });
        assert!(time_decompose(0).is_err());
        for t in 1..=4096 {
            let idx = time_decompose(t).unwrap();
            assert_eq!((1usize << idx.k) - 1 + idx.l, t);
            assert!(idx.l < (1 << idx.k));
        }
    }

    #[test]
    fn error_bound_examples() {
        let spec = PolynomialSpec::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(error_bound(&spec, 16).unwrap(), 0.125);
        let quartic = PolynomialSpec::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(error_bound(&quartic, 32).unwrap(), 0.25);
        match error_bound(&quartic, 10) {
            Err(Error::BelowThreshold { t_min, .. }) => assert_eq!(t_min, 32),
            other => panic!("expected threshold error, got {other:?}"),
        }
        // One clock-period step divides the bound by 4.
        let model = error_model(&quartic).unwrap();
        let period = (1.0 / model.c2).round() as usize;
        for t in [32usize, 40, 64] {
            let a = model.bound(t).unwrap();
            let b = model.bound(t + period).unwrap();
            assert!((b - a / 4.0).abs() <= 1e-15 * a);
        }
        let linear = PolynomialSpec::new(vec![1.0, 2.0], 1.0).unwrap();
        assert!(error_bound(&linear, 5).is_err());
    }

    #[test]
    fn clip_bound_examples() {
        let spec = PolynomialSpec::new(vec![1.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(clip_bound(&spec).unwrap(), 4.0);
        let lin = PolynomialSpec::new(vec![0.0, 1.0], 3.0).unwrap();
        assert_eq!(clip_bound(&lin).unwrap(), 3.0);
        // Always dominates the polynomial itself on a fine grid.
        let mut state = 3u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..5).map(|_| 2.0 * next()).collect();
            let spec = PolynomialSpec::new(coeffs.clone(), 1.5).unwrap();
            let bound = clip_bound(&spec).unwrap();
            for i in 0..=1000 {
                let x = -1.5 + 3.0 * i as f64 / 1000.0;
                assert!(horner_eval(&coeffs, x).abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn linear_polynomials_are_exact_at_all_times() {
        let spec = PolynomialSpec::new(vec![1.0, 2.0], 5.0).unwrap();
        let (net, model) = build_poly_rnn(&spec).unwrap();
        assert!(!net.smoothed);
        assert!(model.exact);
        assert_eq!(model.t_min, 0);
        assert_eq!(model.bound(17).unwrap(), 0.0);
        for &x in &[-5.0, -1.2, 0.0, 3.4, 5.0] {
            for t in 0..=40 {
                assert_eq!(net.weights.output_at(&[x], t).unwrap()[0], 1.0 + 2.0 * x);
            }
        }
    }

    #[test]
    fn degenerate_polynomials() {
        let constant = PolynomialSpec::new(vec![2.5], 1.0).unwrap();
        let (net, _) = build_poly_rnn(&constant).unwrap();
        for t in 0..=20 {
            assert_eq!(net.weights.output_at(&[0.7], t).unwrap()[0], 2.5);
        }
        let zero = PolynomialSpec::new(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let (net, _) = build_poly_rnn(&zero).unwrap();
        for t in 0..=40 {
            assert_eq!(net.weights.output_at(&[0.9], t).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn size_bounds_hold() {
        for n in [2usize, 3, 4, 8] {
            let coeffs = vec![1.0; n + 1];
            let spec = PolynomialSpec::new(coeffs, 1.0).unwrap();
            let (net, _) = build_poly_rnn(&spec).unwrap();
            assert!(net.weights.hidden_dim() <= 80 * n + 11, "N={n}");
            assert_eq!(net.weights.hidden_dim(), net.inner_m + 11);
        }
    }

    #[test]
    fn cubic_poly_error_decays_below_bound() {
        let spec = PolynomialSpec::new(vec![1.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        let (net, model) = build_poly_rnn(&spec).unwrap();
        assert_eq!(model.t_min, 26);
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            let p = horner_eval(&spec.coeffs, x);
            let trace = net.weights.run_delta(&[x], 100).unwrap();
            for t in model.t_min..=100 {
                let err = (trace.outputs[t][0] - p).abs();
                assert!(err <= model.bound(t).unwrap(), "x={x} t={t}");
            }
        }
    }
}
