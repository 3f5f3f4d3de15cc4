//! Verification harness: the Horner ground truth, sup-norm grid error
//! against it, and error-versus-runtime decay curves with CSV export.

use crate::poly::{error_bound, PolynomialSpec};
use crate::rnn::RnnWeights;
use crate::{Error, Result};

/// Horner-scheme evaluation of `a_0 + a_1 x + ... + a_N x^N`.
pub fn horner_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Evaluation grid on `[-D, D]`: `grid_n + 1` uniform points augmented
/// with the dyadic multiples of `D / 2^p`, `p = min(t + 1, 12)`, where the
/// interpolant residual attains its maximum (on its midpoints, hence the
/// `+ 1`). The augmentation is capped at denominator `2^12`.
pub fn error_grid(domain: f64, grid_n: usize, t: usize) -> Vec<f64> {
    let mut points = Vec::with_capacity(grid_n + 1);
    for i in 0..=grid_n {
        points.push(-domain + 2.0 * domain * i as f64 / grid_n as f64);
    }
    let p = (t + 1).min(12) as u32;
    let denom = 1i64 << p;
    for j in -denom..=denom {
        points.push(domain * j as f64 / denom as f64);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    points
}

/// Max deviation of the network output at time `t` from the polynomial over
/// the augmented grid. `net` must take scalar input to scalar output.
pub fn sup_error(net: &RnnWeights, spec: &PolynomialSpec, t: usize, grid_n: usize) -> Result<f64> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(
            "sup_error needs at least a 3-point grid".into(),
        ));
    }
    let mut worst = 0.0f64;
    for x in error_grid(spec.domain, grid_n, t) {
        let out = net.output_at(&[x], t)?[0];
        worst = worst.max((out - horner_eval(&spec.coeffs, x)).abs());
    }
    Ok(worst)
}

/// One row of an error curve. `bound` is present where the closed-form
/// runtime bound applies.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub t: usize,
    pub sup_error: f64,
    pub bound: Option<f64>,
}

/// Measured sup error per time step, with the model bound where valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorCurve {
    pub rows: Vec<CurveRow>,
}

impl ErrorCurve {
    /// All rows with a bound satisfy it.
    pub fn within_bounds(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.bound.is_none_or(|b| r.sup_error <= b))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup_error,bound,bound_valid\n");
        for row in &self.rows {
            match row.bound {
                Some(b) => out.push_str(&format!("{},{},{},true\n", row.t, row.sup_error, b)),
                None => out.push_str(&format!("{},{},,false\n", row.t, row.sup_error)),
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ErrorCurve> {
        let mut lines = text.lines();
        match lines.next() {
            Some("t,sup_error,bound,bound_valid") => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unexpected CSV header: {other:?}"
                )));
            }
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::InvalidArgument(format!("malformed CSV row: {line}")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad number: {s}")))
            };
            let t = fields[0]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad time index: {}", fields[0])))?;
            let sup_error = parse(fields[1])?;
            let bound = match (fields[2], fields[3]) {
                ("", "false") => None,
                (b, "true") => Some(parse(b)?),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "inconsistent bound columns: {line}"
                    )))
                }
            };
            rows.push(CurveRow {
                t,
                sup_error,
                bound,
            });
        }
        Ok(ErrorCurve { rows })
    }
}

/// Sweeps the sup error over `t = 0..=t_max`, reusing one trace per grid
/// point. The bound column is filled from the runtime model where it
/// applies (degree >= 2 and `t >= t_min`).
pub fn decay_curve(
    net: &RnnWeights,
    spec: &PolynomialSpec,
    t_max: usize,
    grid_n: usize,
) -> Result<ErrorCurve> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(
            "decay_curve needs at least a 3-point grid".into(),
        ));
    }
    let mut worst = vec![0.0f64; t_max + 1];
    for x in error_grid(spec.domain, grid_n, t_max) {
        let truth = horner_eval(&spec.coeffs, x);
        let trace = net.run_delta(&[x], t_max)?;
        for (t, out) in trace.outputs.iter().enumerate() {
            let err = (out[0] - truth).abs();
            if err > worst[t] {
                worst[t] = err;
            }
        }
    }
    let rows = worst
        .into_iter()
        .enumerate()
        .map(|(t, sup_error)| CurveRow {
            t,
            sup_error,
            bound: error_bound(spec, t).ok(),
        })
        .collect();
    Ok(ErrorCurve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::build_poly_rnn;
    use crate::primitives::square_rnn;

    #[test]
    fn horner_examples() {
        assert_eq!(horner_eval(&[1.0, 0.0, 1.0], 2.0), 5.0);
        assert_eq!(horner_eval(&[0.0], 123.4), 0.0);
        assert_eq!(horner_eval(&[1.0, -2.0, 0.0, 1.0], 1.0), 0.0);
    }

    #[test]
    fn sup_error_exact_identity() {
        let spec = PolynomialSpec::new(vec![0.0, 1.0], 1.0).unwrap();
        let (net, _) = build_poly_rnn(&spec).unwrap();
        for t in 0..=16 {
            assert_eq!(sup_error(&net.weights, &spec, t, 50).unwrap(), 0.0);
        }
    }

    #[test]
    fn sup_error_square_attains_the_residual_peak() {
        let sq = square_rnn(1.0).unwrap();
        let spec = PolynomialSpec::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        for t in 1..=8u32 {
            let got = sup_error(&sq, &spec, t as usize, 200).unwrap();
            let want = 2f64.powi(-2 * t as i32 - 2);
            assert!((got - want).abs() <= 1e-12, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn decay_curve_matches_bound_column() {
        let spec = PolynomialSpec::new(vec![1.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        let (net, model) = build_poly_rnn(&spec).unwrap();
        let curve = decay_curve(&net.weights, &spec, 62, 100).unwrap();
        assert_eq!(curve.rows.len(), 63);
        for row in &curve.rows {
            match row.bound {
                Some(b) => {
                    assert!(row.t >= model.t_min);
                    assert_eq!(b, model.bound(row.t).unwrap());
                }
                None => assert!(row.t < model.t_min),
            }
        }
        assert!(curve.within_bounds());
        // Errors at successive readout times do not increase.
        let at = |t: usize| curve.rows[t].sup_error;
        assert!(at(30) <= at(14) + 1e-12);
        assert!(at(62) <= at(30) + 1e-12);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let spec = PolynomialSpec::new(vec![1.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        let (net, _) = build_poly_rnn(&spec).unwrap();
        let curve = decay_curve(&net.weights, &spec, 40, 60).unwrap();
        let text = curve.to_csv();
        let back = ErrorCurve::from_csv(&text).unwrap();
        assert_eq!(back, curve);
        assert!(ErrorCurve::from_csv("nope\n1,2,3,true\n").is_err());
    }
}
