use num_traits::One;

use super::lp::feasible_nonneg;
use super::{LinAlgError, Rat};

/// True iff `p` is a vertex (extremal point) of the convex hull of `cloud`,
/// i.e. not expressible as a convex combination of the other points.
/// `p` must itself be a member of the cloud.
pub fn is_vertex(p: &[Rat], cloud: &[Vec<Rat>]) -> Result<bool, LinAlgError> {
    let dim = p.len();
    for q in cloud {
        if q.len() != dim {
            return Err(LinAlgError::DimensionMismatch {
                expected: dim,
                got: q.len(),
            });
        }
    }
    if !cloud.iter().any(|q| q.as_slice() == p) {
        return Err(LinAlgError::PointNotInCloud);
    }
    let others: Vec<&Vec<Rat>> = cloud.iter().filter(|q| q.as_slice() != p).collect();
    if others.is_empty() {
        return Ok(true);
    }
    // convex-combination system: sum_i w_i q_i = p, sum_i w_i = 1, w >= 0
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(dim + 1);
    let mut b: Vec<Rat> = Vec::with_capacity(dim + 1);
    for d in 0..dim {
        a.push(others.iter().map(|q| q[d].clone()).collect());
        b.push(p[d].clone());
    }
    a.push(vec![Rat::one(); others.len()]);
    b.push(Rat::one());
    Ok(feasible_nonneg(&a, &b).is_none())
}

/// The subset of `cloud` that are vertices of its convex hull.
/// Duplicate points are collapsed before testing.
pub fn hull_vertices(cloud: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>, LinAlgError> {
    if cloud.is_empty() {
        return Err(LinAlgError::EmptyInput);
    }
    let mut distinct: Vec<Vec<Rat>> = Vec::new();
    for q in cloud {
        if !distinct.contains(q) {
            distinct.push(q.clone());
        }
    }
    let mut out = Vec::new();
    for q in &distinct {
        if is_vertex(q, &distinct)? {
            out.push(q.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn midpoint_of_segment_is_not_a_vertex() {
        let cloud = vec![v(&[2, 0, 2]), v(&[2, 2, 0]), v(&[2, 1, 1])];
        assert!(!is_vertex(&v(&[2, 1, 1]), &cloud).unwrap());
        // brute-force convex-combination check confirms the endpoints
        assert!(is_vertex(&v(&[2, 0, 2]), &cloud).unwrap());
        assert!(is_vertex(&v(&[2, 2, 0]), &cloud).unwrap());
    }

    #[test]
    fn triangle_corner_is_a_vertex() {
        let cloud = vec![v(&[0, 0]), v(&[1, 0]), v(&[0, 1])];
        assert!(is_vertex(&v(&[0, 0]), &cloud).unwrap());
    }

    #[test]
    fn point_must_be_in_cloud() {
        let cloud = vec![v(&[0, 0])];
        assert_eq!(
            is_vertex(&v(&[1, 1]), &cloud),
            Err(LinAlgError::PointNotInCloud)
        );
    }

    #[test]
    fn square_corners_beat_center() {
        let cloud = vec![
            v(&[0, 0]),
            v(&[1, 0]),
            v(&[0, 1]),
            v(&[1, 1]),
            vec![rat(1, 2), rat(1, 2)],
        ];
        let hull = hull_vertices(&cloud).unwrap();
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&vec![rat(1, 2), rat(1, 2)]));
    }

    #[test]
    fn collinear_points_keep_endpoints() {
        let cloud = vec![vec![rat(0, 1)], vec![rat(1, 2)], vec![rat(1, 1)]];
        let hull = hull_vertices(&cloud).unwrap();
        assert_eq!(hull, vec![vec![rat(0, 1)], vec![rat(1, 1)]]);
    }

    #[test]
    fn duplicates_collapse() {
        let cloud = vec![v(&[0, 0]), v(&[0, 0]), v(&[1, 1])];
        let hull = hull_vertices(&cloud).unwrap();
        assert_eq!(hull.len(), 2);
    }
}
