use num_traits::Zero;

use super::{is_zero_vec, LinAlgError, Matrix, Rat};

/// A set of linearly independent columns kept in reduced column echelon
/// form. The RCEF of a column space is unique, so two bases spanning the
/// same space compare equal and dumps are diffable.
///
/// Pivots are chosen at the lowest row index of each column and kept in
/// strictly increasing order across columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnBasis {
    rows: usize,
    cols: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
}

impl ColumnBasis {
    pub fn empty(rows: usize) -> Self {
        ColumnBasis {
            rows,
            cols: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<Rat>] {
        &self.cols
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn as_matrix(&self) -> Result<Matrix, LinAlgError> {
        if self.cols.is_empty() {
            return Err(LinAlgError::EmptyInput);
        }
        Matrix::from_cols(&self.cols)
    }

    /// Residual of `v` after eliminating all basis columns; zero iff `v`
    /// lies in the span.
    pub fn residual(&self, v: &[Rat]) -> Result<Vec<Rat>, LinAlgError> {
        if v.len() != self.rows {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut r = v.to_vec();
        for (col, &p) in self.cols.iter().zip(&self.pivots) {
            if r[p].is_zero() {
                continue;
            }
            let f = r[p].clone();
            for (ri, ci) in r.iter_mut().zip(col) {
                *ri -= &f * ci;
            }
        }
        Ok(r)
    }

    /// True iff `v` is a rational linear combination of the basis columns.
    pub fn in_span(&self, v: &[Rat]) -> Result<bool, LinAlgError> {
        Ok(is_zero_vec(&self.residual(v)?))
    }

    /// Expresses `v` in terms of the basis columns, if possible. The
    /// coefficient of column `j` is read off at its pivot row.
    pub fn coefficients(&self, v: &[Rat]) -> Result<Option<Vec<Rat>>, LinAlgError> {
        if !self.in_span(v)? {
            return Ok(None);
        }
        Ok(Some(self.pivots.iter().map(|&p| v[p].clone()).collect()))
    }

    /// A basis of the space of row vectors annihilating every column
    /// (the left null space of the basis matrix): one vector per non-pivot
    /// row, read off the reduced form.
    pub fn annihilator_basis(&self) -> Vec<Vec<Rat>> {
        let pivot_set: std::collections::BTreeSet<usize> = self.pivots.iter().copied().collect();
        let mut out = Vec::new();
        for i in 0..self.rows {
            if pivot_set.contains(&i) {
                continue;
            }
            let mut rho = vec![Rat::zero(); self.rows];
            rho[i] = Rat::from_integer(1.into());
            for (col, &p) in self.cols.iter().zip(&self.pivots) {
                rho[p] = -col[i].clone();
            }
            out.push(rho);
        }
        out
    }

    /// Inserts `v` if it is independent of the current columns, keeping the
    /// basis in RCEF. Returns true iff the rank grew.
    pub fn insert(&mut self, v: &[Rat]) -> Result<bool, LinAlgError> {
        let mut r = self.residual(v)?;
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return Ok(false);
        };
        let scale = r[p].clone();
        for x in r.iter_mut() {
            *x /= &scale;
        }
        // clear row p in the existing columns so the new pivot row is unit
        for col in self.cols.iter_mut() {
            if col[p].is_zero() {
                continue;
            }
            let f = col[p].clone();
            for (ci, ri) in col.iter_mut().zip(&r) {
                *ci -= &f * ri;
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.cols.insert(at, r);
        Ok(true)
    }
}

/// Canonical basis of the span of the given vectors.
pub fn reduce(vectors: &[Vec<Rat>]) -> Result<ColumnBasis, LinAlgError> {
    if vectors.is_empty() {
        return Err(LinAlgError::EmptyInput);
    }
    let rows = vectors[0].len();
    let mut basis = ColumnBasis::empty(rows);
    for v in vectors {
        basis.insert(v)?;
    }
    Ok(basis)
}
