//! Dense row-major matrices and the small set of vector operations the
//! network constructions are built from.
//!
//! Every weight produced in this crate is a dyadic rational, so the dot
//! products below are usually exact in `f64`. Accumulation is fixed
//! left-to-right with Neumaier compensation: the compensation term rescues
//! sums like `2^-60 - 1/2 + 1/2` whose exact value is representable but
//! whose naive partial sums round it away. Clock and hold circuits depend
//! on exactly such cancellations, and a fixed order keeps composite
//! networks bit-identical to the component networks they embed.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Column vectors are plain `Vec<f64>`.
pub type Vector = Vec<f64>;

/// Dense matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Matrix> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimMismatch("ragged rows".into()));
        }
        Matrix::from_vec(r, c, rows.concat())
    }

    /// Single-row matrix.
    pub fn row_vector(entries: &[f64]) -> Matrix {
        Matrix {
            rows: 1,
            cols: entries.len(),
            data: entries.to_vec(),
        }
    }

    /// Single-column matrix.
    pub fn col_vector(entries: &[f64]) -> Matrix {
        Matrix {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| factor * v).collect(),
        }
    }

    /// `A v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(Error::DimMismatch(format!(
                "matvec: {}x{} matrix applied to length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v, 0.0)).collect())
    }

    /// `A v + b`, accumulated as one compensated sum per output entry.
    pub fn affine(&self, v: &[f64], b: &[f64]) -> Result<Vector> {
        if v.len() != self.cols || b.len() != self.rows {
            return Err(Error::DimMismatch(format!(
                "affine: {}x{} matrix with input length {} and bias length {}",
                self.rows,
                self.cols,
                v.len(),
                b.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v, b[i])).collect())
    }

    /// `A B`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Acc::new();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a != 0.0 {
                        acc.add(a * other.get(k, j));
                    }
                }
                out.set(i, j, acc.value());
            }
        }
        Ok(out)
    }
}

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    #[inline]
    fn new() -> Acc {
        Acc {
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    fn add(&mut self, y: f64) {
        let t = self.sum + y;
        if self.sum.abs() >= y.abs() {
            self.comp += (self.sum - t) + y;
        } else {
            self.comp += (y - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated dot product of `row` and `v` plus `bias`, left-to-right.
/// Zero coefficients are skipped; with finite inputs that never changes the
/// value and it keeps long sparse recurrences cheap.
#[inline]
fn dot(row: &[f64], v: &[f64], bias: f64) -> f64 {
    let mut acc = Acc::new();
    for (a, x) in row.iter().zip(v) {
        if *a != 0.0 {
            acc.add(a * x);
        }
    }
    acc.add(bias);
    acc.value()
}

/// Entry-wise `max(0, x)`. Maps negative zero to positive zero so traces
/// compare bit-exactly.
pub fn relu(v: &[f64]) -> Vector {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

/// Grid of blocks with declared block sizes; unset cells are zero.
/// Assembles the dense matrix realizing block displays.
pub struct BlockGrid {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    out: Matrix,
}

impl BlockGrid {
    pub fn new(row_sizes: &[usize], col_sizes: &[usize]) -> BlockGrid {
        let offsets = |sizes: &[usize]| {
            let mut off = Vec::with_capacity(sizes.len() + 1);
            let mut acc = 0;
            for s in sizes {
                off.push(acc);
                acc += s;
            }
            off.push(acc);
            off
        };
        let row_offsets = offsets(row_sizes);
        let col_offsets = offsets(col_sizes);
        let out = Matrix::zeros(*row_offsets.last().unwrap(), *col_offsets.last().unwrap());
        BlockGrid {
            row_sizes: row_sizes.to_vec(),
            col_sizes: col_sizes.to_vec(),
            row_offsets,
            col_offsets,
            out,
        }
    }

    /// Places `m` at block cell (`bi`, `bj`). The block must match the
    /// declared sizes exactly.
    pub fn set(&mut self, bi: usize, bj: usize, m: &Matrix) -> Result<&mut Self> {
        if bi >= self.row_sizes.len() || bj >= self.col_sizes.len() {
            return Err(Error::DimMismatch(format!(
                "block cell ({bi}, {bj}) out of range"
            )));
        }
        if m.rows() != self.row_sizes[bi] || m.cols() != self.col_sizes[bj] {
            return Err(Error::DimMismatch(format!(
                "block cell ({bi}, {bj}) expects {}x{}, got {}x{}",
                self.row_sizes[bi],
                self.col_sizes[bj],
                m.rows(),
                m.cols()
            )));
        }
        let (ro, co) = (self.row_offsets[bi], self.col_offsets[bj]);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                self.out.set(ro + i, co + j, m.get(i, j));
            }
        }
        Ok(self)
    }

    pub fn assemble(self) -> Matrix {
        self.out
    }
}

/// Block-diagonal assembly of the given matrices.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let row_sizes: Vec<usize> = blocks.iter().map(|m| m.rows()).collect();
    let col_sizes: Vec<usize> = blocks.iter().map(|m| m.cols()).collect();
    let mut grid = BlockGrid::new(&row_sizes, &col_sizes);
    for (i, b) in blocks.iter().enumerate() {
        grid.set(i, i, b)
            .expect("diagonal blocks match their declared sizes");
    }
    grid.assemble()
}

/// Concatenates vectors.
pub fn stack(parts: &[&[f64]]) -> Vector {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matvec_identity_and_zero() {
        let id = Matrix::identity(3);
        assert_eq!(id.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = Matrix::zeros(2, 3);
        assert_eq!(z.matvec(&[4.0, -5.0, 6.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_example() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(a.matvec(&[3.0, 2.0]).unwrap(), vec![5.0, 1.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(a.matvec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn compensated_sum_recovers_tiny_terms() {
        // 2^-60 - 1/2 + 1/2 is exactly 2^-60; a naive sum returns 0.
        let row = Matrix::row_vector(&[1.0, -0.5]);
        let v = [2f64.powi(-60), 1.0];
        let got = row.affine(&v, &[0.5]).unwrap();
        assert_eq!(got, vec![2f64.powi(-60)]);
    }

    #[test]
    fn block_grid_examples() {
        let a = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
        let b = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        let d = block_diag(&[&a, &b]);
        assert_eq!(d.data(), &[2.0, 0.0, 0.0, 3.0]);

        let single = block_diag(&[&a]);
        assert_eq!(single.data(), &[2.0]);

        let mut grid = BlockGrid::new(&[1, 1], &[1, 1]);
        grid.set(0, 0, &a).unwrap();
        grid.set(1, 1, &b).unwrap();
        assert_eq!(grid.assemble().data(), &[2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn block_grid_rejects_bad_shape() {
        let a = Matrix::zeros(2, 2);
        let mut grid = BlockGrid::new(&[1, 1], &[1, 1]);
        assert!(grid.set(0, 0, &a).is_err());
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(&[1.0, -1.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(relu(&[-3.0, -0.5]), vec![0.0, 0.0]);
        assert_eq!(relu(&[0.5, -0.25]), vec![0.5, 0.0]);
    }

    fn dyadic() -> impl Strategy<Value = f64> {
        // numerator in [-64, 64], denominator 2^0..2^6
        (-64i32..=64, 0u32..=6).prop_map(|(n, d)| n as f64 / f64::from(1u32 << d))
    }

    proptest! {
        // Assembling a block-diagonal layout and multiplying equals the
        // concatenation of the per-block products, entry-exact.
        #[test]
        fn block_diag_matvec_matches_per_block(
            dims in proptest::collection::vec((1usize..5, 1usize..5), 1..6),
            seed in any::<u64>(),
        ) {
            let total: usize = dims.iter().map(|(r, c)| r * c).sum();
            let input: usize = dims.iter().map(|(_, c)| c).sum();
            prop_assume!(total <= 64 && input <= 64);
            let mut state = seed | 1;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as i32 % 17 - 8) as f64 / 4.0
            };
            let blocks: Vec<Matrix> = dims
                .iter()
                .map(|&(r, c)| Matrix::from_vec(r, c, (0..r * c).map(|_| next()).collect()).unwrap())
                .collect();
            let refs: Vec<&Matrix> = blocks.iter().collect();
            let big = block_diag(&refs);
            let xs: Vec<Vector> = dims.iter().map(|&(_, c)| (0..c).map(|_| next()).collect()).collect();
            let x_all: Vector = xs.concat();
            let got = big.matvec(&x_all).unwrap();
            let want: Vector = blocks
                .iter()
                .zip(&xs)
                .flat_map(|(b, x)| b.matvec(x).unwrap())
                .collect();
            prop_assert_eq!(got, want);
        }

        // relu is idempotent and 1-Lipschitz in the max norm.
        #[test]
        fn relu_idempotent_and_lipschitz(
            u in proptest::collection::vec(dyadic(), 1..16),
            v in proptest::collection::vec(dyadic(), 1..16),
        ) {
            let ru = relu(&u);
            prop_assert_eq!(relu(&ru).clone(), ru.clone());
            let n = u.len().min(v.len());
            let lhs = ru[..n]
                .iter()
                .zip(&relu(&v)[..n])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let rhs = u[..n]
                .iter()
                .zip(&v[..n])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prop_assert!(lhs <= rhs);
        }
    }
}
