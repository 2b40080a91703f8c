//! Bottleneck distance between persistence diagrams and distance matrices
//! built from it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GaleError, Result};
use crate::persistence::{DiagramPoint, PersistenceDiagram, PointClass};

#[inline]
fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// L∞ distance from a point to the diagonal.
#[inline]
pub fn diagonal_distance(p: &DiagramPoint) -> f64 {
    (p.death - p.birth).abs() / 2.0
}

/// Kuhn augmenting paths; true when every vertex in `left` can be matched.
fn saturates(left: &[usize], right_len: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    fn augment(
        u: usize,
        right_len: usize,
        adj: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for v in 0..right_len {
            if seen[v] || !adj(u, v) {
                continue;
            }
            seen[v] = true;
            if owner[v].map_or(true, |w| augment(w, right_len, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    if left.len() > right_len {
        return false;
    }
    let mut owner = vec![None; right_len];
    let mut seen = vec![false; right_len];
    for &u in left {
        seen.iter_mut().for_each(|s| *s = false);
        if !augment(u, right_len, &adj, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

/// Whether a matching of cost at most `delta` exists. Points farther than
/// `delta` from the diagonal must be matched to a point of the other diagram;
/// a matching covering both such sets exists iff one covers each side
/// (Mendelsohn–Dulmage), so two one-sided checks suffice.
fn feasible(a: &[DiagramPoint], b: &[DiagramPoint], delta: f64) -> bool {
    let heavy_a: Vec<usize> = (0..a.len()).filter(|&i| diagonal_distance(&a[i]) > delta).collect();
    let heavy_b: Vec<usize> = (0..b.len()).filter(|&j| diagonal_distance(&b[j]) > delta).collect();
    saturates(&heavy_a, b.len(), |i, j| linf(&a[i], &b[j]) <= delta)
        && saturates(&heavy_b, a.len(), |j, i| linf(&a[i], &b[j]) <= delta)
}

fn bottleneck_points(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(a.len() * b.len() + a.len() + b.len() + 1);
    candidates.push(0.0);
    candidates.extend(a.iter().map(diagonal_distance));
    candidates.extend(b.iter().map(diagonal_distance));
    for p in a {
        candidates.extend(b.iter().map(|q| linf(p, q)));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate is always feasible (everything to the diagonal
    // or any matching at all)
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Exact bottleneck distance over the combined diagrams; class labels are
/// ignored.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    bottleneck_points(d1.points(), d2.points())
}

/// Largest of the per-class bottleneck distances; a diagnostic only.
pub fn bottleneck_per_class(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    PointClass::ALL
        .iter()
        .map(|&c| {
            let a: Vec<DiagramPoint> = d1.of_class(c).copied().collect();
            let b: Vec<DiagramPoint> = d2.of_class(c).copied().collect();
            bottleneck_points(&a, &b)
        })
        .fold(0.0, f64::max)
}

/// Symmetric matrix of distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(GaleError::Shape(format!("distance matrix must be {n}x{n}")));
        }
        for i in 0..n {
            if values[i][i] != 0.0 {
                return Err(GaleError::Data(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = values[i][j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(GaleError::Data(format!("entry ({i}, {j}) = {v} is not a distance")));
                }
                if (v - values[j][i]).abs() > 1e-12 {
                    return Err(GaleError::Data(format!("entry ({i}, {j}) breaks symmetry")));
                }
            }
        }
        Ok(DistanceMatrix { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Mean of the off-diagonal entries of row `i` (zero for a 1x1 matrix).
    pub fn row_mean_off_diagonal(&self, i: usize) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        self.values[i].iter().sum::<f64>() / (n - 1) as f64
    }
}

/// Bottleneck distance between every pair of labeled diagrams.
pub fn pairwise_matrix(diagrams: &[(String, PersistenceDiagram)]) -> Result<DistanceMatrix> {
    if diagrams.is_empty() {
        return Err(GaleError::Data("no diagrams to compare".into()));
    }
    let n = diagrams.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| bottleneck(&diagrams[i].1, &diagrams[j].1))
        .collect();
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        values[i][j] = d;
        values[j][i] = d;
    }
    DistanceMatrix::new(diagrams.iter().map(|(l, _)| l.clone()).collect(), values)
}

pub fn row_sums(m: &DistanceMatrix) -> Vec<(String, f64)> {
    m.labels
        .iter()
        .zip(&m.values)
        .map(|(l, r)| (l.clone(), r.iter().sum()))
        .collect()
}

/// Entrywise mean of matrices sharing the same labels.
pub fn mean_matrices(ms: &[DistanceMatrix]) -> Result<DistanceMatrix> {
    let first = ms
        .first()
        .ok_or_else(|| GaleError::Data("no matrices to average".into()))?;
    for m in &ms[1..] {
        if m.labels != first.labels {
            return Err(GaleError::Alignment(format!(
                "{:?} vs {:?}",
                m.labels, first.labels
            )));
        }
    }
    let n = first.len();
    let k = ms.len() as f64;
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            values[i][j] = ms.iter().map(|m| m.values[i][j]).sum::<f64>() / k;
        }
    }
    DistanceMatrix::new(first.labels.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dg(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_points(
            points
                .iter()
                .map(|&(b, d)| {
                    let c = if d > b { PointClass::Ord0 } else { PointClass::Rel1 };
                    DiagramPoint::new(b, d, c)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = dg(&[(0.0, 1.0), (0.2, 0.5), (0.9, 0.1)]);
        assert_eq!(bottleneck(&a, &a), 0.0);
        assert_eq!(bottleneck(&dg(&[]), &dg(&[])), 0.0);
    }

    #[test]
    fn single_point_against_empty() {
        assert_eq!(bottleneck(&dg(&[(0.0, 1.0)]), &dg(&[])), 0.5);
    }

    #[test]
    fn direct_match_beats_diagonal() {
        let d = bottleneck(&dg(&[(0.0, 1.0)]), &dg(&[(0.0, 0.8)]));
        assert!((d - 0.2).abs() < 1e-15, "{d}");
    }

    #[test]
    fn class_labels_are_ignored() {
        let a = PersistenceDiagram::from_points(vec![DiagramPoint::new(0.0, 1.0, PointClass::Ord0)]).unwrap();
        let b = PersistenceDiagram::from_points(vec![DiagramPoint::new(0.0, 1.0, PointClass::Ext0)]).unwrap();
        assert_eq!(bottleneck(&a, &b), 0.0);
        assert_eq!(bottleneck_per_class(&a, &b), 0.5);
    }

    #[test]
    fn matrix_helpers() {
        let a = dg(&[(0.0, 1.0)]);
        let m = pairwise_matrix(&[("a".into(), a.clone()), ("b".into(), a)]).unwrap();
        assert_eq!(m.rows(), &[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(row_sums(&m).iter().map(|r| r.1).collect::<Vec<_>>(), vec![0.0, 0.0]);

        let m = DistanceMatrix::new(vec!["x".into(), "y".into()], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(row_sums(&m).iter().map(|r| r.1).collect::<Vec<_>>(), vec![1.0, 1.0]);
        assert_eq!(mean_matrices(&[m.clone(), m.clone()]).unwrap(), m);

        let other = DistanceMatrix::new(vec!["x".into(), "z".into()], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(mean_matrices(&[m, other]), Err(GaleError::Alignment(_))));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        assert!(DistanceMatrix::new(vec!["x".into(), "y".into()], vec![vec![0.0, 1.0], vec![0.5, 0.0]]).is_err());
    }
}
