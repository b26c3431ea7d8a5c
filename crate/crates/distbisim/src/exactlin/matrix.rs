use num_traits::Zero;

use super::{LinAlgError, Rat};

/// Dense row-major rational matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rat::from_integer(1.into()));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, LinAlgError> {
        if rows.is_empty() {
            return Err(LinAlgError::EmptyInput);
        }
        let cols = rows[0].len();
        for r in &rows {
            if r.len() != cols {
                return Err(LinAlgError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        let nrows = rows.len();
        Ok(Matrix {
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_cols(cols: &[Vec<Rat>]) -> Result<Self, LinAlgError> {
        if cols.is_empty() {
            return Err(LinAlgError::EmptyInput);
        }
        let rows = cols[0].len();
        for c in cols {
            if c.len() != rows {
                return Err(LinAlgError::DimensionMismatch {
                    expected: rows,
                    got: c.len(),
                });
            }
        }
        let mut m = Matrix::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Rat> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Rat>> {
        (0..self.cols).map(|c| self.col(c)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinAlgError> {
        if self.cols != other.rows {
            return Err(LinAlgError::ShapeMismatch(
                self.rows, self.cols, other.rows, other.cols,
            ));
        }
        let mut out = Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// `M * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>, LinAlgError> {
        if v.len() != self.cols {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `v * M` for a row vector `v`.
    pub fn vec_mul(&self, v: &[Rat]) -> Result<Vec<Rat>, LinAlgError> {
        if v.len() != self.rows {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![Rat::zero(); self.cols];
        for (i, coef) in v.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                out[j] += coef * self.get(i, j);
            }
        }
        Ok(out)
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(Rat::is_zero)
}

/// True iff the row vector `v` lies in the left null space of `m`,
/// i.e. `v * m = 0`.
pub fn annihilates(m: &Matrix, v: &[Rat]) -> Result<bool, LinAlgError> {
    Ok(is_zero_vec(&m.vec_mul(v)?))
}

/// Solves `sum_i x_i columns[i] = target` exactly by Gaussian elimination.
/// Returns `None` when the target is outside the span. With linearly
/// independent columns the solution is unique.
pub fn solve_linear_combination(
    columns: &[Vec<Rat>],
    target: &[Rat],
) -> Result<Option<Vec<Rat>>, LinAlgError> {
    let n = columns.len();
    let dim = target.len();
    for c in columns {
        if c.len() != dim {
            return Err(LinAlgError::DimensionMismatch {
                expected: dim,
                got: c.len(),
            });
        }
    }
    // augmented rows [columns | target]
    let mut aug: Vec<Vec<Rat>> = (0..dim)
        .map(|r| {
            let mut row: Vec<Rat> = columns.iter().map(|c| c[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..dim).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, p);
        let inv = aug[row][col].clone();
        for v in aug[row].iter_mut() {
            *v /= &inv;
        }
        for r in 0..dim {
            if r != row && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c2 in 0..=n {
                    let d = &f * &aug[row][c2];
                    aug[r][c2] -= d;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
    }
    // inconsistent if a zero row has nonzero rhs
    for r in row..dim {
        if !aug[r][n].is_zero() {
            return Ok(None);
        }
    }
    let mut x = vec![Rat::zero(); n];
    for (col, p) in pivot_of_col.iter().enumerate() {
        if let Some(r) = p {
            x[col] = aug[*r][n].clone();
        }
    }
    Ok(Some(x))
}
