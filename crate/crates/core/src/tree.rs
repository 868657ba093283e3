//! The depth-`k` sampling tree shared by list k-means and list k-median.
//!
//! A node holding `i < k` centers draws a multiset `S` of points by distance
//! sampling w.r.t. its centers, adds `M` copies of each of its centers, and
//! branches on every candidate produced from each size-`M` subset of that
//! pool. Nodes with `k` centers are leaves and are handed to a
//! [`CenterVisitor`].
//!
//! Each node's randomness comes from an [`RngStream`] keyed by its path, and
//! results are folded in path order, so output does not depend on how rayon
//! schedules subtrees.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, CenterSet, Dataset};
use crate::rng::RngStream;
use crate::sampling::{DistanceMode, SamplerState};
use crate::scalar::Real;
use crate::subsets::enumerate_subsets;

/// Subsets handed to rayon at a time; bounds memory for exhaustive nodes.
const CHUNK: usize = 4096;

/// Shape of the sampling tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpec {
    pub k: usize,
    /// `N`: distance-sampled points per node.
    pub sample_size: u64,
    /// `M`: subset size, also the number of copies of each existing center.
    pub subset_size: usize,
    /// Max subsets per node; `None` enumerates all of them.
    pub subset_budget: Option<u64>,
    /// Independent root calls.
    pub repeats: u64,
    pub mode: DistanceMode,
}

impl TreeSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.sample_size == 0 || self.subset_size == 0 || self.repeats == 0 {
            return bad("sample size, subset size and repeats must be positive");
        }
        if self.sample_size < self.subset_size as u64 {
            return bad("sample size must be at least the subset size");
        }
        if self.subset_budget == Some(0) {
            return bad("subset budget must be positive");
        }
        Ok(())
    }
}

/// Turns a subset `T` of the pool into the candidate centers branched on.
pub trait CandidateRule<T>: Sync {
    fn candidates(&self, subset: &[&[T]]) -> Vec<Vec<T>>;
}

/// The k-means rule: the centroid of `T`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanRule;

impl<T: Real> CandidateRule<T> for MeanRule {
    fn candidates(&self, subset: &[&[T]]) -> Vec<Vec<T>> {
        vec![centroid(subset).expect("subsets are nonempty")]
    }
}

/// Consumer of complete center sets. `combine` must be associative; it is
/// always called with the earlier (in path order) accumulator on the left.
pub trait CenterVisitor<T>: Sync {
    type Acc: Send;

    fn identity(&self) -> Self::Acc;

    fn leaf(&self, path: &[u64], centers: CenterSet<T>) -> Self::Acc;

    fn combine(&self, left: Self::Acc, right: Self::Acc) -> Self::Acc;

    /// Once an accumulator reports `true`, unexplored subtrees are skipped.
    fn saturated(&self, _acc: &Self::Acc) -> bool {
        false
    }
}

/// Counters gathered while exploring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Internal nodes expanded.
    pub nodes: u64,
    /// Subsets enumerated across all nodes.
    pub subsets: u64,
    /// Complete center sets emitted.
    pub leaves: u64,
}

struct Explorer<'a, T, R, V> {
    data: &'a Dataset<T>,
    spec: TreeSpec,
    rule: &'a R,
    visitor: &'a V,
    stop: AtomicBool,
    nodes: AtomicU64,
    subsets: AtomicU64,
    leaves: AtomicU64,
}

impl<T, R, V> Explorer<'_, T, R, V>
where
    T: Real,
    R: CandidateRule<T>,
    V: CenterVisitor<T>,
{
    fn emit(&self, path: &[u64], centers: CenterSet<T>) -> V::Acc {
        self.leaves.fetch_add(1, Ordering::Relaxed);
        let acc = self.visitor.leaf(path, centers);
        if self.visitor.saturated(&acc) {
            self.stop.store(true, Ordering::Relaxed);
        }
        acc
    }

    fn node(&self, centers: CenterSet<T>, state: &SamplerState<T>, stream: &RngStream) -> V::Acc {
        if self.stop.load(Ordering::Relaxed) {
            return self.visitor.identity();
        }
        if centers.len() >= self.spec.k {
            return self.emit(stream.path(), centers);
        }
        self.nodes.fetch_add(1, Ordering::Relaxed);

        let mut rng = stream.rng();
        let m = self.spec.subset_size;
        let draws = state.sample_with(self.spec.sample_size as usize, &mut rng);
        let mut pool: Vec<&[T]> = Vec::with_capacity(draws.len() + centers.len() * m);
        pool.extend(draws.iter().map(|&i| self.data.point(i)));
        for c in centers.iter() {
            pool.extend(std::iter::repeat_n(c, m));
        }

        let subsets = enumerate_subsets(pool.len(), m, self.spec.subset_budget, &mut rng)
            .expect("validated: pool is at least as large as the subset size");
        let leaf_level = centers.len() + 1 == self.spec.k;

        let mut acc = self.visitor.identity();
        let mut next_index = 0u64;
        let mut subsets = subsets.peekable();
        while subsets.peek().is_some() {
            if self.stop.load(Ordering::Relaxed) {
                break;
            }
            let chunk: Vec<(u64, Vec<usize>)> = subsets
                .by_ref()
                .take(CHUNK)
                .map(|s| {
                    next_index += 1;
                    (next_index - 1, s)
                })
                .collect();
            self.subsets.fetch_add(chunk.len() as u64, Ordering::Relaxed);
            let part = chunk
                .par_iter()
                .map(|(index, subset)| {
                    if self.stop.load(Ordering::Relaxed) {
                        return self.visitor.identity();
                    }
                    let members: Vec<&[T]> = subset.iter().map(|&p| pool[p]).collect();
                    let branch = stream.child(*index);
                    let mut acc = self.visitor.identity();
                    for (ci, candidate) in self.rule.candidates(&members).into_iter().enumerate() {
                        let child_stream = branch.child(ci as u64);
                        let child_state = if leaf_level {
                            None
                        } else {
                            Some(state.add_center(&candidate, self.data))
                        };
                        let child_centers = centers.extended(candidate);
                        let sub = match child_state {
                            Some(s) => self.node(child_centers, &s, &child_stream),
                            None => self.emit(child_stream.path(), child_centers),
                        };
                        acc = self.visitor.combine(acc, sub);
                    }
                    acc
                })
                .reduce(|| self.visitor.identity(), |a, b| self.visitor.combine(a, b));
            acc = self.visitor.combine(acc, part);
        }
        acc
    }
}

/// Explores subtrees below `centers` with the node stream `stream`
/// (one call of the recursive sampling procedure).
pub fn explore_from<T, R, V>(
    data: &Dataset<T>,
    spec: &TreeSpec,
    rule: &R,
    visitor: &V,
    centers: CenterSet<T>,
    stream: &RngStream,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    R: CandidateRule<T>,
    V: CenterVisitor<T>,
{
    spec.validate()?;
    if centers.len() > spec.k {
        return Err(Error::InvalidParameter(format!(
            "{} centers exceed k = {}",
            centers.len(),
            spec.k
        )));
    }
    if centers.iter().any(|c| c.len() != data.dim()) {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: centers.iter().map(<[T]>::len).find(|&l| l != data.dim()).unwrap_or(0),
        });
    }
    let explorer = Explorer::new(data, spec, rule, visitor);
    let mut state = SamplerState::new(data, spec.mode);
    for c in centers.iter() {
        state.add_center_in_place(c, data);
    }
    let acc = explorer.node(centers, &state, stream);
    Ok((acc, explorer.stats()))
}

/// Runs `spec.repeats` independent root calls (root `r` uses stream
/// `seed / r`) and folds their results in repeat order.
pub fn explore<T, R, V>(
    data: &Dataset<T>,
    spec: &TreeSpec,
    rule: &R,
    visitor: &V,
    seed: u64,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    R: CandidateRule<T>,
    V: CenterVisitor<T>,
{
    spec.validate()?;
    let explorer = Explorer::new(data, spec, rule, visitor);
    let root_state = SamplerState::new(data, spec.mode);
    let root = RngStream::new(seed);
    let acc = (0..spec.repeats)
        .into_par_iter()
        .map(|r| explorer.node(CenterSet::empty(), &root_state, &root.child(r)))
        .reduce(|| visitor.identity(), |a, b| visitor.combine(a, b));
    Ok((acc, explorer.stats()))
}

impl<'a, T, R, V> Explorer<'a, T, R, V> {
    fn new(data: &'a Dataset<T>, spec: &TreeSpec, rule: &'a R, visitor: &'a V) -> Self {
        Self {
            data,
            spec: *spec,
            rule,
            visitor,
            stop: AtomicBool::new(false),
            nodes: AtomicU64::new(0),
            subsets: AtomicU64::new(0),
            leaves: AtomicU64::new(0),
        }
    }

    fn stats(&self) -> TreeStats {
        TreeStats {
            nodes: self.nodes.load(Ordering::Relaxed),
            subsets: self.subsets.load(Ordering::Relaxed),
            leaves: self.leaves.load(Ordering::Relaxed),
        }
    }
}

/// Collects every leaf in canonical path order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectCenters;

impl<T: Send + Sync> CenterVisitor<T> for CollectCenters {
    type Acc = Vec<CenterSet<T>>;

    fn identity(&self) -> Self::Acc {
        Vec::new()
    }

    fn leaf(&self, _path: &[u64], centers: CenterSet<T>) -> Self::Acc {
        vec![centers]
    }

    fn combine(&self, mut left: Self::Acc, mut right: Self::Acc) -> Self::Acc {
        left.append(&mut right);
        left
    }
}

/// Collects `(path, centers)` pairs, for inspecting tree structure.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectWithPaths;

impl<T: Send + Sync> CenterVisitor<T> for CollectWithPaths {
    type Acc = Vec<(Vec<u64>, CenterSet<T>)>;

    fn identity(&self) -> Self::Acc {
        Vec::new()
    }

    fn leaf(&self, path: &[u64], centers: CenterSet<T>) -> Self::Acc {
        vec![(path.to_vec(), centers)]
    }

    fn combine(&self, mut left: Self::Acc, mut right: Self::Acc) -> Self::Acc {
        left.append(&mut right);
        left
    }
}
