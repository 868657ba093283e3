//! List k-means: a list of candidate k-center sets built by D²-sampling,
//! proxy copies of chosen centers, and centroids of size-`M` subsets.
//!
//! In `exact` mode the parameters are `N = ⌈136448·k/ε³⌉`, `M = ⌈100/ε⌉`,
//! `2^k` repeats with every subset enumerated; that is the regime carrying the
//! approximation guarantee, and it is far beyond what can be run. `practical`
//! mode takes user-chosen `N`, `M`, repeats and a per-node subset budget and is
//! best effort.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, delta, phi, CenterSet, Dataset};
use crate::rng::RngStream;
use crate::sampling::DistanceMode;
use crate::scalar::{snapped_ceil, Real};
use crate::tree::{self, CenterVisitor, CollectCenters, MeanRule, TreeSpec, TreeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    Exact,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    #[default]
    KMeans,
    KMedian,
}

/// Parameters of one list construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListParams {
    pub k: usize,
    pub epsilon: f64,
    /// `N`: points drawn by distance sampling at each node.
    pub sample_size: u64,
    /// `M`: subset size and number of proxy copies per chosen center.
    pub subset_size: usize,
    pub repeats: u64,
    /// Subsets tried per node; `null` means all of them.
    pub subset_budget: Option<u64>,
    pub mode: ParamMode,
}

pub(crate) fn check_k_epsilon(k: usize, epsilon: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    Ok(())
}

pub(crate) fn pow2_repeats(k: usize) -> Result<u64> {
    u32::try_from(k)
        .ok()
        .and_then(|k| 1u64.checked_shl(k))
        .ok_or_else(|| Error::InvalidParameter(format!("2^{k} repeats overflow")))
}

pub(crate) fn ceil_count(v: f64, what: &str) -> Result<u64> {
    let c = snapped_ceil(v);
    if !c.is_finite() || c < 1.0 || c > u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!("{what} = {v} is out of range")));
    }
    Ok(c as u64)
}

impl ListParams {
    /// Parameters carrying the approximation guarantee.
    pub fn exact(k: usize, epsilon: f64) -> Result<Self> {
        check_k_epsilon(k, epsilon)?;
        let sample_size = ceil_count(136_448.0 * k as f64 / epsilon.powi(3), "N")?;
        let subset_size = ceil_count(100.0 / epsilon, "M")? as usize;
        Ok(Self {
            k,
            epsilon,
            sample_size,
            subset_size,
            repeats: pow2_repeats(k)?,
            subset_budget: None,
            mode: ParamMode::Exact,
        })
    }

    pub fn practical(
        k: usize,
        epsilon: f64,
        sample_size: u64,
        subset_size: usize,
        repeats: u64,
        subset_budget: Option<u64>,
    ) -> Result<Self> {
        let p = Self {
            k,
            epsilon,
            sample_size,
            subset_size,
            repeats,
            subset_budget,
            mode: ParamMode::Practical,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks ranges; in exact mode also that the values equal [`ListParams::exact`].
    pub fn validate(&self) -> Result<()> {
        check_k_epsilon(self.k, self.epsilon)?;
        self.tree_spec(DistanceMode::Squared).validate()?;
        if self.mode == ParamMode::Exact {
            let expected = Self::exact(self.k, self.epsilon)?;
            if *self != expected {
                return Err(Error::InvalidParameter(format!(
                    "exact mode requires N = {}, M = {}, repeats = {} and no subset budget",
                    expected.sample_size, expected.subset_size, expected.repeats
                )));
            }
        }
        Ok(())
    }

    pub fn tree_spec(&self, mode: DistanceMode) -> TreeSpec {
        TreeSpec {
            k: self.k,
            sample_size: self.sample_size,
            subset_size: self.subset_size,
            subset_budget: self.subset_budget,
            repeats: self.repeats,
            mode,
        }
    }
}

/// The candidate list with enough metadata to reproduce it. `P` is
/// [`ListParams`] for k-means and [`crate::kmedian::MedianParams`] for
/// k-median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList<T, P = ListParams> {
    pub problem: Problem,
    pub params: P,
    pub seed: u64,
    pub stats: TreeStats,
    #[serde(rename = "centers")]
    pub entries: Vec<CenterSet<T>>,
}

impl<T, P> CandidateList<T, P> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One recursive call at depth `centers.len()` with node stream `stream`;
/// every completed center set below it goes to `sink`.
pub fn sample_centers<T, V>(
    data: &Dataset<T>,
    params: &ListParams,
    centers: CenterSet<T>,
    stream: &RngStream,
    sink: &V,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    V: CenterVisitor<T>,
{
    params.validate()?;
    tree::explore_from(
        data,
        &params.tree_spec(DistanceMode::Squared),
        &MeanRule,
        sink,
        centers,
        stream,
    )
}

/// Streams every list entry to `sink` without materializing the list.
pub fn visit_k_means<T, V>(
    data: &Dataset<T>,
    params: &ListParams,
    seed: u64,
    sink: &V,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    V: CenterVisitor<T>,
{
    params.validate()?;
    tree::explore(
        data,
        &params.tree_spec(DistanceMode::Squared),
        &MeanRule,
        sink,
        seed,
    )
}

/// Builds the full candidate list, deterministic in `seed`.
pub fn list_k_means<T: Real>(
    data: &Dataset<T>,
    params: &ListParams,
    seed: u64,
) -> Result<CandidateList<T>> {
    let (entries, stats) = visit_k_means(data, params, seed, &CollectCenters)?;
    Ok(CandidateList {
        problem: Problem::KMeans,
        params: params.clone(),
        seed,
        stats,
        entries,
    })
}

/// Fraction of `trials` uniform samples `S` of size `m` (with replacement)
/// whose centroid satisfies `Φ_{Γ(S)}(X) ≤ (1 + 1/(δ·m))·Δ(X)`.
pub fn inaba_check<T: Real>(
    data: &Dataset<T>,
    m: usize,
    delta_prob: f64,
    trials: usize,
    stream: &RngStream,
) -> Result<f64> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidParameter("m and trials must be positive".into()));
    }
    if !(delta_prob > 0.0 && delta_prob < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta_prob}"
        )));
    }
    let all: Vec<&[T]> = data.points().collect();
    let opt = delta(&all)?;
    let factor = T::from_f64_lossy(1.0 + 1.0 / (delta_prob * m as f64));
    let bound = factor * opt;
    let mut rng = stream.rng();
    let mut hits = 0usize;
    for _ in 0..trials {
        let sample: Vec<&[T]> = (0..m)
            .map(|_| data.point(rng.random_range(0..data.len())))
            .collect();
        let c = CenterSet::new(vec![centroid(&sample)?])?;
        let cost = phi(&c, &all)?;
        if cost <= bound || cost.approx_eq(&bound) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
