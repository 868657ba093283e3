//! Points, center sets, clusterings and the k-means cost quantities.
//!
//! All functions here need only field arithmetic, so they are generic over
//! [`Scalar`] and give exact answers on rational inputs.

use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from rows. Rejects empty input, ragged rows, zero
    /// dimension and non-finite coordinates.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidDataset("dataset has no points".into()))?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(Error::InvalidDataset("points have dimension 0".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite_value()) {
                return Err(Error::InvalidDataset(format!(
                    "row {i}, column {j} is not finite"
                )));
            }
            coords.extend_from_slice(row);
        }
        Ok(Self { dim, coords })
    }

    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidDataset(format!(
                "{} values cannot form rows of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::InvalidDataset("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always `false`: a dataset holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.points().map(<[T]>::to_vec).collect()
    }

    /// Borrowed views of the selected rows.
    pub fn select(&self, indices: &[usize]) -> Vec<&[T]> {
        indices.iter().map(|&i| self.point(i)).collect()
    }
}

/// An ordered list of centers sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterSet<T> {
    centers: Vec<Vec<T>>,
}

impl<T: Scalar> CenterSet<T> {
    pub fn empty() -> Self {
        Self { centers: Vec::new() }
    }

    pub fn new(centers: Vec<Vec<T>>) -> Result<Self> {
        if let Some(first) = centers.first() {
            let dim = first.len();
            for c in &centers {
                if c.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: c.len(),
                    });
                }
                if !c.iter().all(Scalar::is_finite_value) {
                    return Err(Error::InvalidParameter("non-finite center".into()));
                }
            }
        }
        Ok(Self { centers })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[T] {
        &self.centers[i]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.centers.iter().map(Vec::as_slice)
    }

    pub fn as_rows(&self) -> &[Vec<T>] {
        &self.centers
    }

    /// Copy of `self` with `center` appended.
    pub fn extended(&self, center: Vec<T>) -> Self {
        let mut centers = Vec::with_capacity(self.centers.len() + 1);
        centers.extend(self.centers.iter().cloned());
        centers.push(center);
        Self { centers }
    }

    pub fn into_rows(self) -> Vec<Vec<T>> {
        self.centers
    }
}

/// A labeled partition of point indices: `assignment[i]` is the cluster of
/// point `i`, in `0..k`. Empty clusters are allowed at this layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clustering {
    assignment: Vec<usize>,
    k: usize,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if let Some(bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidParameter(format!(
                "cluster label {bad} out of range for k = {k}"
            )));
        }
        Ok(Self { assignment, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn label(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// Point indices of every cluster, in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &a) in self.assignment.iter().enumerate() {
            members[a].push(i);
        }
        members
    }

    /// Same partition with labels rewritten by `relabel[old] = new`.
    pub fn relabeled(&self, relabel: &[usize]) -> Result<Self> {
        if relabel.len() != self.k {
            return Err(Error::SizeMismatch(format!(
                "relabeling has {} entries for k = {}",
                relabel.len(),
                self.k
            )));
        }
        Self::new(
            self.assignment.iter().map(|&a| relabel[a]).collect(),
            self.k,
        )
    }
}

/// Result of serving a clustering with a center set under the best matching.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport<T> {
    pub total: T,
    /// `permutation[i]` is the center serving cluster `i`.
    pub permutation: Vec<usize>,
    pub per_cluster: Vec<T>,
}

#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let t = x.clone() - y.clone();
        acc + t.clone() * t
    })
}

/// Euclidean distance.
#[inline]
pub fn dist<T: crate::Real>(a: &[T], b: &[T]) -> T {
    sq_dist(a, b).sqrt()
}

fn check_dims<T>(points: &[&[T]], dim: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != dim) {
        Some(p) => Err(Error::Dimension {
            expected: dim,
            got: p.len(),
        }),
        None => Ok(()),
    }
}

/// Coordinate-wise mean.
pub fn centroid<T: Scalar>(points: &[&[T]]) -> Result<Vec<T>> {
    let first = points.first().ok_or(Error::EmptyCluster)?;
    let dim = first.len();
    check_dims(points, dim)?;
    let mut sum = vec![T::zero(); dim];
    for p in points {
        for (s, v) in sum.iter_mut().zip(p.iter()) {
            *s = s.clone() + v.clone();
        }
    }
    let count = T::from_count(points.len());
    Ok(sum.into_iter().map(|s| s / count.clone()).collect())
}

/// 1-means cost: sum of squared distances to the centroid.
pub fn delta<T: Scalar>(points: &[&[T]]) -> Result<T> {
    let mean = centroid(points)?;
    Ok(points
        .iter()
        .fold(T::zero(), |acc, p| acc + sq_dist(p, &mean)))
}

/// Squared distance from `point` to its nearest center, with that center's
/// index (lowest index on ties).
pub fn nearest<T: Scalar>(centers: &CenterSet<T>, point: &[T]) -> Result<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (j, c) in centers.iter().enumerate() {
        if c.len() != point.len() {
            return Err(Error::Dimension {
                expected: c.len(),
                got: point.len(),
            });
        }
        let d = sq_dist(point, c);
        if best.as_ref().is_none_or(|(_, b)| d < *b) {
            best = Some((j, d));
        }
    }
    best.ok_or(Error::NoCenters)
}

/// Sum over points of the squared distance to the nearest center.
pub fn phi<T: Scalar>(centers: &CenterSet<T>, points: &[&[T]]) -> Result<T> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    points.iter().try_fold(T::zero(), |acc, p| {
        Ok(acc + nearest(centers, p)?.1)
    })
}

/// Same as [`phi`] over a whole dataset.
pub fn phi_dataset<T: Scalar>(centers: &CenterSet<T>, data: &Dataset<T>) -> Result<T> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    data.points()
        .try_fold(T::zero(), |acc, p| Ok(acc + nearest(centers, p)?.1))
}

fn check_clustering<T: Scalar>(clustering: &Clustering, data: &Dataset<T>) -> Result<()> {
    if clustering.n() != data.len() {
        return Err(Error::SizeMismatch(format!(
            "clustering covers {} points, dataset has {}",
            clustering.n(),
            data.len()
        )));
    }
    Ok(())
}

/// `M[i][j]` = cost of serving cluster `i` entirely by center `j`.
pub fn cluster_center_costs<T: Scalar>(
    centers: &CenterSet<T>,
    clustering: &Clustering,
    data: &Dataset<T>,
) -> Result<Vec<Vec<T>>> {
    check_clustering(clustering, data)?;
    if centers.len() != clustering.k() {
        return Err(Error::SizeMismatch(format!(
            "{} centers for {} clusters",
            centers.len(),
            clustering.k()
        )));
    }
    if centers.iter().any(|c| c.len() != data.dim()) {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: centers.iter().find(|c| c.len() != data.dim()).map_or(0, <[T]>::len),
        });
    }
    let k = clustering.k();
    let mut matrix = vec![vec![T::zero(); k]; k];
    for (i, p) in data.points().enumerate() {
        let row = &mut matrix[clustering.label(i)];
        for (j, c) in centers.iter().enumerate() {
            row[j] = row[j].clone() + sq_dist(p, c);
        }
    }
    Ok(matrix)
}

/// Cost of `clustering` served by `centers` under the best bijection between
/// clusters and centers.
pub fn cost_of_clustering<T: Scalar>(
    centers: &CenterSet<T>,
    clustering: &Clustering,
    data: &Dataset<T>,
) -> Result<CostReport<T>> {
    let matrix = cluster_center_costs(centers, clustering, data)?;
    let (permutation, _) = min_cost_assignment(&matrix)?;
    let per_cluster: Vec<T> = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| matrix[i][j].clone())
        .collect();
    let total = per_cluster.iter().cloned().fold(T::zero(), |a, b| a + b);
    Ok(CostReport {
        total,
        permutation,
        per_cluster,
    })
}

/// Cost with cluster `i` served by center `i`.
pub fn identity_cost<T: Scalar>(
    centers: &CenterSet<T>,
    clustering: &Clustering,
    data: &Dataset<T>,
) -> Result<T> {
    let matrix = cluster_center_costs(centers, clustering, data)?;
    Ok(matrix
        .into_iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, row)| acc + row[i].clone()))
}

/// Centroid of every cluster; `None` for empty clusters.
pub fn cluster_centroids<T: Scalar>(
    clustering: &Clustering,
    data: &Dataset<T>,
) -> Result<Vec<Option<Vec<T>>>> {
    check_clustering(clustering, data)?;
    clustering
        .members()
        .iter()
        .map(|m| {
            if m.is_empty() {
                Ok(None)
            } else {
                centroid(&data.select(m)).map(Some)
            }
        })
        .collect()
}

/// Optimal k-means cost of a fixed clustering: `sum_i delta(O_i)`.
/// Empty clusters contribute zero.
pub fn opt_k<T: Scalar>(clustering: &Clustering, data: &Dataset<T>) -> Result<T> {
    check_clustering(clustering, data)?;
    clustering
        .members()
        .iter()
        .filter(|m| !m.is_empty())
        .try_fold(T::zero(), |acc, m| Ok(acc + delta(&data.select(m))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn ds(rows: &[&[f64]]) -> Dataset<f64> {
        Dataset::from_rows(rows).unwrap()
    }

    fn basis(d: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let a: &[f64] = &[0.0, 0.0];
        let b: &[f64] = &[2.0, 0.0];
        assert_eq!(centroid(&[a, b]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(centroid(&[&[5.0, 5.0][..]]).unwrap(), vec![5.0, 5.0]);
        let x = basis(8);
        let all: Vec<usize> = (0..8).collect();
        assert_eq!(centroid(&x.select(&all)).unwrap(), vec![0.125; 8]);
    }

    #[test]
    fn centroid_of_nothing_is_an_error() {
        let err = centroid::<f64>(&[]).unwrap_err();
        assert_eq!(err.to_string(), "empty cluster has no centroid");
        assert!(delta::<f64>(&[]).is_err());
    }

    #[test]
    fn delta_examples() {
        let a: &[f64] = &[0.0, 0.0];
        let b: &[f64] = &[2.0, 0.0];
        assert_eq!(delta(&[a, b]).unwrap(), 2.0);
        assert_eq!(delta(&[&[5.0, 5.0][..]]).unwrap(), 0.0);
        let x = basis(4);
        assert!((delta(&x.select(&[0, 1, 2, 3])).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn delta_is_exact_on_rationals() {
        let one = Ratio::from_integer(1i64);
        let zero = Ratio::from_integer(0i64);
        let rows: Vec<Vec<Ratio<i64>>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { one } else { zero }).collect())
            .collect();
        let x = Dataset::from_rows(&rows).unwrap();
        assert_eq!(delta(&x.select(&[0, 1, 2, 3])).unwrap(), Ratio::from_integer(3));
    }

    #[test]
    fn phi_examples() {
        let c = CenterSet::new(vec![vec![0.0, 0.0]]).unwrap();
        let x = ds(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert_eq!(phi_dataset(&c, &x).unwrap(), 5.0);

        let c = CenterSet::new(vec![vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let x = ds(&[&[1.0, 0.0], &[9.0, 0.0]]);
        assert_eq!(phi_dataset(&c, &x).unwrap(), 2.0);

        // centroid identity: 10 = 2 + 2 * (3 - 1)^2
        let c = CenterSet::new(vec![vec![3.0]]).unwrap();
        let x = ds(&[&[0.0], &[2.0]]);
        assert_eq!(phi_dataset(&c, &x).unwrap(), 10.0);
        assert_eq!(delta(&[x.point(0), x.point(1)]).unwrap(), 2.0);
    }

    #[test]
    fn phi_requires_centers() {
        let x = ds(&[&[1.0]]);
        assert!(matches!(
            phi_dataset(&CenterSet::empty(), &x),
            Err(Error::NoCenters)
        ));
    }

    #[test]
    fn cost_of_clustering_picks_best_matching() {
        // Cluster 0 at x=0, cluster 1 at x=10; centers at 0.5 and 10.5 (or swapped).
        let x = ds(&[&[0.0], &[10.0]]);
        let o = Clustering::new(vec![0, 1], 2).unwrap();
        let c = CenterSet::new(vec![vec![1.0], vec![10.0 + 1.0]]).unwrap();
        let report = cost_of_clustering(&c, &o, &x).unwrap();
        assert_eq!(report.total, 2.0);
        assert_eq!(report.permutation, vec![0, 1]);

        let swapped = CenterSet::new(vec![vec![11.0], vec![1.0]]).unwrap();
        let report = cost_of_clustering(&swapped, &o, &x).unwrap();
        assert_eq!(report.total, 2.0);
        assert_eq!(report.permutation, vec![1, 0]);
        assert_eq!(report.per_cluster, vec![1.0, 1.0]);
    }

    #[test]
    fn cost_of_clustering_rejects_size_mismatch() {
        let x = ds(&[&[0.0], &[1.0]]);
        let o = Clustering::new(vec![0, 1], 2).unwrap();
        let c = CenterSet::new(vec![vec![0.0]]).unwrap();
        assert!(matches!(
            cost_of_clustering(&c, &o, &x),
            Err(Error::SizeMismatch(_))
        ));
        let short = Clustering::new(vec![0], 2).unwrap();
        let c2 = CenterSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(cost_of_clustering(&c2, &short, &x).is_err());
    }

    #[test]
    fn empty_cluster_pairs_with_leftover_center() {
        let x = ds(&[&[0.0], &[1.0]]);
        let o = Clustering::new(vec![1, 1], 2).unwrap();
        let c = CenterSet::new(vec![vec![0.5], vec![100.0]]).unwrap();
        let report = cost_of_clustering(&c, &o, &x).unwrap();
        assert_eq!(report.total, 0.5);
        assert_eq!(report.permutation, vec![1, 0]);
        assert_eq!(report.per_cluster[0], 0.0);
    }

    #[test]
    fn opt_k_on_basis_split() {
        let x = basis(8);
        let o = Clustering::new(vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        assert!((opt_k(&o, &x).unwrap() - 6.0).abs() < 1e-12);
        let same = ds(&[&[2.0, 3.0], &[2.0, 3.0], &[2.0, 3.0]]);
        let o = Clustering::new(vec![0, 1, 0], 2).unwrap();
        assert_eq!(opt_k(&o, &same).unwrap(), 0.0);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::<f64>::from_rows::<Vec<f64>>(&[]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(Dataset::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(Dataset::from_rows(&[vec![f64::INFINITY]]).is_err());
        assert!(Dataset::<f64>::from_rows(&[Vec::<f64>::new()]).is_err());
        let x = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!((x.len(), x.dim()), (2, 2));
        assert_eq!(x.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn clustering_rejects_out_of_range_labels() {
        assert!(Clustering::new(vec![0, 2], 2).is_err());
        assert!(Clustering::new(vec![], 0).is_err());
        let o = Clustering::new(vec![0, 1, 1], 3).unwrap();
        assert_eq!(o.sizes(), vec![1, 2, 0]);
        assert_eq!(o.members(), vec![vec![0], vec![1, 2], vec![]]);
    }
}
