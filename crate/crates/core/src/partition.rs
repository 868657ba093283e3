//! Partition algorithms: given k centers, the cheapest clustering allowed by
//! a constraint family, and the best such clustering over a candidate list.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{solve_min_cost_flow, FlowNetwork};
use crate::geometry::{nearest, CenterSet, Clustering, Dataset};
use crate::sampling::DistanceMode;
use crate::scalar::Real;
use crate::tree::CenterVisitor;

/// Constraint on cluster sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConstraintFamily {
    /// Any partition; the optimum for fixed centers is the Voronoi partition.
    Unconstrained,
    /// Every cluster has at least `r` points.
    RGather { r: usize },
    /// Every cluster has at most `cap` points.
    RCapacity { cap: usize },
    /// Cluster `i` has exactly `sizes[i]` points.
    ExactSizes { sizes: Vec<usize> },
}

impl ConstraintFamily {
    /// Checks the family is well formed and admits a clustering of `n`
    /// points into `k` clusters.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        match self {
            ConstraintFamily::Unconstrained => Ok(()),
            ConstraintFamily::RGather { r } => {
                if *r == 0 {
                    return Err(Error::InvalidParameter("r-gather needs r >= 1".into()));
                }
                if k.saturating_mul(*r) > n {
                    return Err(Error::Infeasible(format!(
                        "r-gather with r = {r} and k = {k} needs {} points, have {n}",
                        k.saturating_mul(*r)
                    )));
                }
                Ok(())
            }
            ConstraintFamily::RCapacity { cap } => {
                if *cap == 0 {
                    return Err(Error::InvalidParameter("r-capacity needs cap >= 1".into()));
                }
                if k.saturating_mul(*cap) < n {
                    return Err(Error::Infeasible(format!(
                        "capacity {cap} over {k} clusters holds fewer than {n} points"
                    )));
                }
                Ok(())
            }
            ConstraintFamily::ExactSizes { sizes } => {
                if sizes.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "{} exact sizes given for k = {k}",
                        sizes.len()
                    )));
                }
                if sizes.contains(&0) {
                    return Err(Error::InvalidParameter("exact sizes must be positive".into()));
                }
                let total: usize = sizes.iter().sum();
                if total != n {
                    return Err(Error::Infeasible(format!(
                        "exact sizes sum to {total}, dataset has {n} points"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Per-cluster `(lower, upper)` size bounds.
    pub fn bounds(&self, n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
        match self {
            ConstraintFamily::Unconstrained => (vec![0; k], vec![n; k]),
            ConstraintFamily::RGather { r } => (vec![*r; k], vec![n; k]),
            ConstraintFamily::RCapacity { cap } => (vec![0; k], vec![(*cap).min(n); k]),
            ConstraintFamily::ExactSizes { sizes } => (sizes.clone(), sizes.clone()),
        }
    }

    /// `true` when every cluster carries the same constraint, so relabeling
    /// clusters preserves feasibility.
    pub fn is_label_symmetric(&self) -> bool {
        match self {
            ConstraintFamily::ExactSizes { sizes } => sizes.windows(2).all(|w| w[0] == w[1]),
            _ => true,
        }
    }

    pub fn is_satisfied_by(&self, clustering: &Clustering) -> bool {
        let n = clustering.n();
        let k = clustering.k();
        if self.validate(n, k).is_err() {
            return false;
        }
        let (lower, upper) = self.bounds(n, k);
        clustering
            .sizes()
            .iter()
            .zip(lower.iter().zip(&upper))
            .all(|(s, (lo, hi))| lo <= s && s <= hi)
    }
}

/// Best center set found for a constraint family, with its clustering.
/// Cluster `i` is served by center `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub centers: CenterSet<T>,
    pub clustering: Clustering,
    pub cost: T,
    pub constraint: ConstraintFamily,
    pub objective: DistanceMode,
}

/// Nearest-center assignment, ties to the lowest center index.
pub fn voronoi_partition<T: Real>(centers: &CenterSet<T>, data: &Dataset<T>) -> Result<Clustering> {
    let labels = data
        .points()
        .map(|p| nearest(centers, p).map(|(j, _)| j))
        .collect::<Result<Vec<_>>>()?;
    Clustering::new(labels, centers.len())
}

/// Cost of serving cluster `i` by center `i` under `objective`.
pub fn assignment_cost<T: Real>(
    centers: &CenterSet<T>,
    clustering: &Clustering,
    data: &Dataset<T>,
    objective: DistanceMode,
) -> Result<T> {
    if clustering.n() != data.len() || clustering.k() != centers.len() {
        return Err(Error::SizeMismatch(format!(
            "{} labels / {} centers for {} points / k = {}",
            clustering.n(),
            centers.len(),
            data.len(),
            clustering.k()
        )));
    }
    Ok(data
        .points()
        .zip(clustering.assignment())
        .fold(T::zero(), |acc, (p, &j)| acc + objective.eval(p, centers.center(j))))
}

/// Layout of the assignment network: node 0 is the source, nodes `1..=n`
/// the points, `n+1..=n+k` the centers and `n+k+1` the sink.
pub fn build_assignment_network<T: Real>(
    data: &Dataset<T>,
    centers: &CenterSet<T>,
    lower: &[usize],
    upper: &[usize],
    objective: DistanceMode,
) -> Result<FlowNetwork<T>> {
    let n = data.len();
    let k = centers.len();
    if k == 0 {
        return Err(Error::NoCenters);
    }
    if lower.len() != k || upper.len() != k {
        return Err(Error::SizeMismatch(format!(
            "{} lower / {} upper bounds for {k} centers",
            lower.len(),
            upper.len()
        )));
    }
    if let Some(i) = (0..k).find(|&i| lower[i] > upper[i]) {
        return Err(Error::Infeasible(format!(
            "center {i} has lower bound {} above its capacity {}",
            lower[i], upper[i]
        )));
    }
    let lo: usize = lower.iter().sum();
    let hi = upper.iter().fold(0usize, |a, &u| a.saturating_add(u));
    if lo > n || hi < n {
        return Err(Error::Infeasible(format!(
            "size bounds allow between {lo} and {hi} points, dataset has {n}"
        )));
    }
    if centers.iter().any(|c| c.len() != data.dim()) {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: centers.iter().map(<[T]>::len).find(|&l| l != data.dim()).unwrap_or(0),
        });
    }
    let to_i64 = |v: usize| i64::try_from(v).unwrap_or(i64::MAX);
    let sink = n + k + 1;
    let mut net = FlowNetwork::new(n + k + 2, 0, sink, to_i64(n))?;
    for i in 0..n {
        net.add_arc(0, 1 + i, 0, 1, T::zero())?;
    }
    for (i, p) in data.points().enumerate() {
        for (j, c) in centers.iter().enumerate() {
            net.add_arc(1 + i, 1 + n + j, 0, 1, objective.eval(p, c))?;
        }
    }
    for j in 0..k {
        net.add_arc(1 + n + j, sink, to_i64(lower[j]), to_i64(upper[j].min(n)), T::zero())?;
    }
    Ok(net)
}

/// Reads the clustering off a solved assignment network.
fn clustering_from_flows(flows: &[i64], n: usize, k: usize) -> Result<Clustering> {
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // point arcs follow the n source arcs, k per point
        let row = &flows[n + i * k..n + (i + 1) * k];
        let chosen: Vec<usize> = (0..k).filter(|&j| row[j] == 1).collect();
        match chosen.as_slice() {
            [j] => labels.push(*j),
            _ => {
                return Err(Error::Infeasible(format!(
                    "point {i} received flow on {} center arcs",
                    chosen.len()
                )))
            }
        }
    }
    Clustering::new(labels, k)
}

/// Cheapest clustering in `family` with cluster `i` served by center `i`.
pub fn partition_with<T: Real>(
    centers: &CenterSet<T>,
    data: &Dataset<T>,
    family: &ConstraintFamily,
    objective: DistanceMode,
) -> Result<Clustering> {
    let n = data.len();
    let k = centers.len();
    if k == 0 {
        return Err(Error::NoCenters);
    }
    family.validate(n, k)?;
    if *family == ConstraintFamily::Unconstrained {
        return voronoi_partition(centers, data);
    }
    let (lower, upper) = family.bounds(n, k);
    let net = build_assignment_network(data, centers, &lower, &upper, objective)?;
    let sol = solve_min_cost_flow(&net)?;
    clustering_from_flows(&sol.flows, n, k)
}

/// k-means partition algorithm.
pub fn partition<T: Real>(
    centers: &CenterSet<T>,
    data: &Dataset<T>,
    family: &ConstraintFamily,
) -> Result<Clustering> {
    partition_with(centers, data, family, DistanceMode::Squared)
}

/// Runs the partition algorithm on every entry and keeps the cheapest; ties
/// go to the earliest entry.
pub fn select_best_with<T: Real>(
    entries: &[CenterSet<T>],
    data: &Dataset<T>,
    family: &ConstraintFamily,
    objective: DistanceMode,
) -> Result<Solution<T>> {
    let first = entries
        .first()
        .ok_or_else(|| Error::InvalidParameter("candidate list is empty".into()))?;
    let k = first.len();
    if let Some(bad) = entries.iter().find(|c| c.len() != k) {
        return Err(Error::SizeMismatch(format!(
            "list mixes center sets of size {k} and {}",
            bad.len()
        )));
    }
    family.validate(data.len(), k)?;

    type Best<T> = Option<(usize, T, Clustering)>;
    let pick = |a: Best<T>, b: Best<T>| -> Best<T> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    };
    let best = entries
        .par_iter()
        .enumerate()
        .map(|(i, c)| -> Result<Best<T>> {
            let o = partition_with(c, data, family, objective)?;
            let cost = assignment_cost(c, &o, data, objective)?;
            Ok(Some((i, cost, o)))
        })
        .try_reduce(|| None, |a, b| Ok(pick(a, b)))?;
    let (i, cost, clustering) = best.expect("nonempty list");
    Ok(Solution {
        centers: entries[i].clone(),
        clustering,
        cost,
        constraint: family.clone(),
        objective,
    })
}

/// k-means selection over a list.
pub fn select_best<T: Real>(
    entries: &[CenterSet<T>],
    data: &Dataset<T>,
    family: &ConstraintFamily,
) -> Result<Solution<T>> {
    select_best_with(entries, data, family, DistanceMode::Squared)
}

/// Streaming form of [`select_best_with`]: partitions every list entry as the
/// tree emits it and keeps the cheapest, ties to the earliest entry.
pub struct BestPartition<'a, T> {
    pub data: &'a Dataset<T>,
    pub family: &'a ConstraintFamily,
    pub objective: DistanceMode,
}

/// Cheapest entry seen so far with its clustering and cost.
pub type BestSoFar<T> = Option<(T, Clustering, CenterSet<T>)>;

impl<T: Real> CenterVisitor<T> for BestPartition<'_, T> {
    type Acc = Result<BestSoFar<T>>;

    fn identity(&self) -> Self::Acc {
        Ok(None)
    }

    fn leaf(&self, _path: &[u64], centers: CenterSet<T>) -> Self::Acc {
        let o = partition_with(&centers, self.data, self.family, self.objective)?;
        let cost = assignment_cost(&centers, &o, self.data, self.objective)?;
        Ok(Some((cost, o, centers)))
    }

    fn combine(&self, left: Self::Acc, right: Self::Acc) -> Self::Acc {
        match (left?, right?) {
            (Some(l), Some(r)) => Ok(Some(if r.0 < l.0 { r } else { l })),
            (l, r) => Ok(l.or(r)),
        }
    }

    fn saturated(&self, acc: &Self::Acc) -> bool {
        acc.is_err()
    }
}

impl<T: Real> BestPartition<'_, T> {
    /// Turns the visitor's result into a [`Solution`].
    pub fn finish(&self, acc: <Self as CenterVisitor<T>>::Acc) -> Result<Solution<T>> {
        let (cost, clustering, centers) =
            acc?.ok_or_else(|| Error::InvalidParameter("candidate list is empty".into()))?;
        Ok(Solution {
            centers,
            clustering,
            cost,
            constraint: self.family.clone(),
            objective: self.objective,
        })
    }
}
