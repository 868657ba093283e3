//! Brute-force ground truth for small inputs: exhaustive clustering
//! enumeration, exact constrained optima, and an empirical check of list
//! quality against a target clustering.

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::geometry::{centroid, delta, opt_k, sq_dist, CenterSet, Clustering, Dataset};
use crate::listkmeans::{visit_k_means, ListParams, ParamMode};
use crate::partition::ConstraintFamily;
use crate::scalar::{Real, Scalar};
use crate::stats::binomial_lower_bound;
use crate::tree::CenterVisitor;

/// Hard limit on points for exhaustive enumeration.
pub const MAX_POINTS: usize = 14;

/// Default cap on clusterings visited.
pub const DEFAULT_CAP: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationSpec {
    pub n: usize,
    pub k: usize,
    pub family: ConstraintFamily,
    pub cap: u128,
}

impl EnumerationSpec {
    pub fn new(n: usize, k: usize, family: ConstraintFamily) -> Self {
        Self {
            n,
            k,
            family,
            cap: DEFAULT_CAP,
        }
    }

    /// Upper bound on the number of clusterings the enumeration can visit:
    /// `sum_{j<=k} S(n, j)` with label symmetry removed, `k^n` otherwise.
    pub fn count_bound(&self) -> u128 {
        if self.family.is_label_symmetric() {
            let mut row = vec![0u128; self.k + 1];
            row[0] = 1;
            for _ in 0..self.n {
                for j in (1..=self.k).rev() {
                    row[j] = (j as u128)
                        .saturating_mul(row[j])
                        .saturating_add(row[j - 1]);
                }
                row[0] = 0;
            }
            row.iter().fold(0u128, |a, &b| a.saturating_add(b))
        } else {
            (self.k as u128).saturating_pow(self.n as u32)
        }
    }
}

/// Depth-first enumeration of all clusterings of `0..n` into `k` labeled
/// clusters that satisfy the family's size bounds. When the family treats all
/// clusters alike, only canonical labelings are produced: labels appear in
/// order of their lowest-index point.
#[derive(Debug, Clone)]
pub struct ClusteringIter {
    n: usize,
    k: usize,
    lower: Vec<usize>,
    upper: Vec<usize>,
    symmetric: bool,
    labels: Vec<usize>,
    counts: Vec<usize>,
    next_try: Vec<usize>,
    pos: usize,
    done: bool,
}

impl ClusteringIter {
    fn blocks(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn feasible(&self, label: usize) -> bool {
        if self.counts[label] + 1 > self.upper[label] {
            return false;
        }
        let remaining = self.n - self.pos - 1;
        let needed: usize = (0..self.k)
            .map(|j| {
                let have = self.counts[j] + usize::from(j == label);
                self.lower[j].saturating_sub(have)
            })
            .sum();
        needed <= remaining
    }
}

impl Iterator for ClusteringIter {
    type Item = Clustering;

    fn next(&mut self) -> Option<Clustering> {
        if self.done {
            return None;
        }
        loop {
            if self.pos == self.n {
                let out = Clustering::new(self.labels.clone(), self.k).expect("labels < k");
                self.pos -= 1;
                self.counts[self.labels[self.pos]] -= 1;
                return Some(out);
            }
            let limit = if self.symmetric {
                (self.blocks() + 1).min(self.k)
            } else {
                self.k
            };
            let mut placed = false;
            while self.next_try[self.pos] < limit {
                let label = self.next_try[self.pos];
                self.next_try[self.pos] += 1;
                if self.feasible(label) {
                    self.labels[self.pos] = label;
                    self.counts[label] += 1;
                    self.pos += 1;
                    if self.pos < self.n {
                        self.next_try[self.pos] = 0;
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                if self.pos == 0 {
                    self.done = true;
                    return None;
                }
                self.pos -= 1;
                self.counts[self.labels[self.pos]] -= 1;
            }
        }
    }
}

/// All clusterings admitted by `spec`. An infeasible family yields nothing;
/// a malformed one, too many points, or a bound above `spec.cap` is an error.
pub fn enumerate_clusterings(spec: &EnumerationSpec) -> Result<ClusteringIter> {
    if spec.n == 0 || spec.n > MAX_POINTS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration supports 1..={MAX_POINTS} points, got {}",
            spec.n
        )));
    }
    let infeasible = match spec.family.validate(spec.n, spec.k) {
        Ok(()) => false,
        Err(Error::Infeasible(_)) => true,
        Err(e) => return Err(e),
    };
    let bound = spec.count_bound();
    if bound > spec.cap {
        return Err(Error::EnumerationCap {
            bound,
            cap: spec.cap,
        });
    }
    let (lower, upper) = spec.family.bounds(spec.n, spec.k);
    Ok(ClusteringIter {
        n: spec.n,
        k: spec.k,
        lower,
        upper,
        symmetric: spec.family.is_label_symmetric(),
        labels: vec![0; spec.n],
        counts: vec![0; spec.k],
        next_try: vec![0; spec.n],
        pos: 0,
        done: infeasible,
    })
}

/// Minimum of `opt_k` over the family; ties go to the first clustering in
/// enumeration order.
pub fn brute_force_opt<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    family: &ConstraintFamily,
) -> Result<(Clustering, T)> {
    family.validate(data.len(), k)?;
    let spec = EnumerationSpec::new(data.len(), k, family.clone());
    let mut best: Option<(Clustering, T)> = None;
    for o in enumerate_clusterings(&spec)? {
        let cost = opt_k(&o, data)?;
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((o, cost));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no clustering satisfies the family".into()))
}

/// Leaf check: is the target clustering served within `threshold` by the
/// center set under its best cluster-to-center matching?
///
/// Uses `sum_{x in O_i} ||x - c||² = Δ(O_i) + |O_i|·||c - Γ(O_i)||²` so a leaf
/// costs O(k²·d) instead of O(n·k·d).
pub struct TargetCheck<T> {
    sizes: Vec<T>,
    means: Vec<Option<Vec<T>>>,
    deltas: Vec<T>,
    threshold: T,
}

impl<T: Real> TargetCheck<T> {
    pub fn new(data: &Dataset<T>, target: &Clustering, threshold: T) -> Result<Self> {
        if target.n() != data.len() {
            return Err(Error::SizeMismatch(format!(
                "target clustering covers {} points, dataset has {}",
                target.n(),
                data.len()
            )));
        }
        let members = target.members();
        let mut sizes = Vec::with_capacity(members.len());
        let mut means = Vec::with_capacity(members.len());
        let mut deltas = Vec::with_capacity(members.len());
        for m in &members {
            sizes.push(T::from_count(m.len()));
            if m.is_empty() {
                means.push(None);
                deltas.push(T::zero());
            } else {
                let pts = data.select(m);
                means.push(Some(centroid(&pts)?));
                deltas.push(delta(&pts)?);
            }
        }
        Ok(Self {
            sizes,
            means,
            deltas,
            threshold,
        })
    }

    pub fn cost(&self, centers: &CenterSet<T>) -> T {
        let matrix: Vec<Vec<T>> = (0..self.sizes.len())
            .map(|i| {
                centers
                    .iter()
                    .map(|c| match &self.means[i] {
                        Some(mu) => self.deltas[i] + self.sizes[i] * sq_dist(c, mu),
                        None => T::zero(),
                    })
                    .collect()
            })
            .collect();
        min_cost_assignment(&matrix).expect("square matrix").1
    }

    pub fn accepts(&self, centers: &CenterSet<T>) -> bool {
        let cost = self.cost(centers);
        cost <= self.threshold || cost.approx_eq(&self.threshold)
    }
}

impl<T: Real> CenterVisitor<T> for TargetCheck<T> {
    type Acc = bool;

    fn identity(&self) -> bool {
        false
    }

    fn leaf(&self, _path: &[u64], centers: CenterSet<T>) -> bool {
        self.accepts(&centers)
    }

    fn combine(&self, left: bool, right: bool) -> bool {
        left || right
    }

    fn saturated(&self, acc: &bool) -> bool {
        *acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub success: bool,
}

/// Outcome of [`verify_list_quality`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub target_cost: f64,
    pub threshold: f64,
    pub epsilon: f64,
    pub mode: ParamMode,
    pub seeds: Vec<SeedOutcome>,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    /// One-sided 99% Clopper-Pearson lower bound on the rate.
    pub lower_bound_99: f64,
    /// `Some(0.5)` in exact mode, where the rate is guaranteed; `None` in
    /// practical mode.
    pub guaranteed_rate: Option<f64>,
}

/// For each seed builds a list and asks whether some entry serves the target
/// clustering within `(1 + ε)·opt_k(target)`. The target defaults to the
/// brute-force optimum of `family`.
pub fn verify_list_quality<T: Real>(
    data: &Dataset<T>,
    family: &ConstraintFamily,
    params: &ListParams,
    seeds: &[u64],
    target: Option<&Clustering>,
) -> Result<VerifyReport> {
    params.validate()?;
    let k = params.k;
    let target = match target {
        Some(t) => t.clone(),
        None => brute_force_opt(data, k, family)?.0,
    };
    if target.k() != k {
        return Err(Error::SizeMismatch(format!(
            "target has {} clusters, k = {k}",
            target.k()
        )));
    }
    let opt = opt_k(&target, data)?;
    let threshold = opt * T::from_f64_lossy(1.0 + params.epsilon);
    let check = TargetCheck::new(data, &target, threshold)?;
    let outcomes = seeds
        .par_iter()
        .map(|&seed| {
            visit_k_means(data, params, seed, &check)
                .map(|(success, _)| SeedOutcome { seed, success })
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|o| o.success).count();
    let trials = outcomes.len();
    Ok(VerifyReport {
        target_cost: opt.to_f64_lossy(),
        threshold: threshold.to_f64_lossy(),
        epsilon: params.epsilon,
        mode: params.mode,
        seeds: outcomes,
        successes,
        trials,
        rate: if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        },
        lower_bound_99: binomial_lower_bound(successes, trials, 0.99),
        guaranteed_rate: (params.mode == ParamMode::Exact).then_some(0.5),
    })
}
