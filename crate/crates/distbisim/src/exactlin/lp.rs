use num_traits::{One, Signed, Zero};

use super::{LinAlgError, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
}

/// One linear constraint `coeffs . x  <cmp>  rhs` over free rational unknowns.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) -> Self {
        Constraint { coeffs, cmp, rhs }
    }
}

/// Exact feasibility of a system of linear constraints over `n_vars` free
/// rational unknowns. Returns a witness point satisfying every constraint
/// exactly, or `None` when the system is infeasible.
///
/// Free variables are split into differences of nonnegative parts and the
/// system is solved by a phase-1 simplex.
pub fn lp_feasible(
    n_vars: usize,
    constraints: &[Constraint],
) -> Result<Option<Vec<Rat>>, LinAlgError> {
    for c in constraints {
        if c.coeffs.len() != n_vars {
            return Err(LinAlgError::DimensionMismatch {
                expected: n_vars,
                got: c.coeffs.len(),
            });
        }
    }
    // columns: x+ (n), x- (n), one slack/surplus per inequality
    let n_slack = constraints
        .iter()
        .filter(|c| c.cmp != Cmp::Eq)
        .count();
    let total = 2 * n_vars + n_slack;
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(constraints.len());
    let mut rhs: Vec<Rat> = Vec::with_capacity(constraints.len());
    let mut slack_idx = 2 * n_vars;
    for c in constraints {
        let mut row = vec![Rat::zero(); total];
        for (j, a) in c.coeffs.iter().enumerate() {
            row[j] = a.clone();
            row[n_vars + j] = -a.clone();
        }
        match c.cmp {
            Cmp::Eq => {}
            Cmp::Le => {
                row[slack_idx] = Rat::one();
                slack_idx += 1;
            }
            Cmp::Ge => {
                row[slack_idx] = -Rat::one();
                slack_idx += 1;
            }
        }
        rows.push(row);
        rhs.push(c.rhs.clone());
    }
    Ok(feasible_nonneg(&rows, &rhs).map(|x| {
        (0..n_vars)
            .map(|j| x[j].clone() - x[n_vars + j].clone())
            .collect()
    }))
}

/// Feasibility of `{ A x = b, x >= 0 }` by phase-1 simplex with Bland's
/// anti-cycling rule. Returns a witness or `None`.
pub(crate) fn feasible_nonneg(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let m = a.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let n = a[0].len();
    // tableau: m rows of n real columns + m artificial columns + rhs,
    // with rhs made nonnegative row by row
    let mut t: Vec<Vec<Rat>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let mut r: Vec<Rat> = Vec::with_capacity(n + m + 1);
        let flip = b[i].is_negative();
        for v in row {
            r.push(if flip { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            r.push(if k == i { Rat::one() } else { Rat::zero() });
        }
        r.push(if flip { -b[i].clone() } else { b[i].clone() });
        t.push(r);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // reduced costs for the phase-1 objective (sum of artificials)
    let mut obj: Vec<Rat> = vec![Rat::zero(); n + m + 1];
    for j in 0..n + m + 1 {
        let mut s = Rat::zero();
        for row in t.iter() {
            s -= &row[j];
        }
        if (n..n + m).contains(&j) {
            s += Rat::one();
        }
        obj[j] = s;
    }

    loop {
        // Bland: entering column = lowest index with negative reduced cost
        let Some(enter) = (0..n + m).find(|&j| obj[j].is_negative()) else {
            break;
        };
        // leaving row: minimum ratio, ties broken by lowest basis variable
        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for i in 0..m {
            if !t[i][enter].is_positive() {
                continue;
            }
            let ratio = &t[i][n + m] / &t[i][enter];
            let better = match &best {
                None => true,
                Some(r) => ratio < *r || (ratio == *r && basis[i] < basis[leave.unwrap()]),
            };
            if better {
                best = Some(ratio);
                leave = Some(i);
            }
        }
        // phase-1 objective is bounded below, so a pivot row always exists
        let leave = leave.expect("phase-1 simplex cannot be unbounded");
        pivot(&mut t, &mut obj, leave, enter);
        basis[leave] = enter;
    }

    // feasible iff no artificial carries positive value
    for (i, &bv) in basis.iter().enumerate() {
        if bv >= n && t[i][n + m].is_positive() {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][n + m].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<Rat>], obj: &mut [Rat], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v /= &p;
    }
    for i in 0..t.len() {
        if i == row || t[i][col].is_zero() {
            continue;
        }
        let f = t[i][col].clone();
        for j in 0..t[i].len() {
            let d = &f * &t[row][j];
            t[i][j] -= d;
        }
    }
    if !obj[col].is_zero() {
        let f = obj[col].clone();
        for j in 0..obj.len() {
            let d = &f * &t[row][j];
            obj[j] -= d;
        }
    }
}
