//! The basis-vector instance behind the list-size lower bound: `d = k·m`
//! unit vectors `e_1, …, e_d` with `m = ⌈1/√ε⌉`, clustered into `k` groups
//! of exactly `m` points each.
//!
//! Every equal partition costs `k(m-1)`; a center set `C` serving a partition
//! `O` (cluster `r` by center `r`) costs `k(m-1) + m·Σ_r ||v_r||²`, where
//! `v_r = c_r - Γ(O_r)`. Counting how many partitions one `C` can serve
//! against how many there are bounds the list length from below.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{cost_of_clustering, identity_cost, opt_k, CenterSet, Clustering, Dataset};
use crate::partition::ConstraintFamily;
use crate::scalar::{abs, snapped_ceil, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance<T> {
    pub k: usize,
    pub m: usize,
    pub data: Dataset<T>,
}

impl<T: Scalar> LowerBoundInstance<T> {
    pub fn d(&self) -> usize {
        self.k * self.m
    }

    /// All partitions into clusters of exactly `m` points.
    pub fn family(&self) -> ConstraintFamily {
        ConstraintFamily::ExactSizes {
            sizes: vec![self.m; self.k],
        }
    }

    /// Points `r·m .. (r+1)·m` in cluster `r`.
    pub fn block_clustering(&self) -> Clustering {
        let labels = (0..self.d()).map(|j| j / self.m).collect();
        Clustering::new(labels, self.k).expect("labels below k")
    }
}

/// `m = ⌈1/√ε⌉`.
pub fn group_size(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let m = snapped_ceil(1.0 / epsilon.sqrt());
    if m > usize::MAX as f64 {
        return Err(Error::InvalidParameter(format!("m overflows for epsilon {epsilon}")));
    }
    Ok(m as usize)
}

pub fn build_instance<T: Scalar>(k: usize, epsilon: f64) -> Result<LowerBoundInstance<T>> {
    let m = group_size(epsilon)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} gives m = {m}; need m >= 2"
        )));
    }
    build_instance_m(k, m)
}

/// The instance for an explicit group size.
pub fn build_instance_m<T: Scalar>(k: usize, m: usize) -> Result<LowerBoundInstance<T>> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("k and m must be positive".into()));
    }
    let d = k * m;
    let rows: Vec<Vec<T>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    Ok(LowerBoundInstance {
        k,
        m,
        data: Dataset::from_rows(&rows)?,
    })
}

/// `k(m - 1)`: the cost of every equal partition.
pub fn opt_equal_partition<T: Scalar>(k: usize, m: usize) -> T {
    T::from_count(k) * T::from_count(m.saturating_sub(1))
}

/// Upper bound on `Σ_r ||v_r||²` for center sets within `(1+ε)` of the
/// optimum: `k / (m(m-1))`.
pub fn residual_norm_bound<T: Scalar>(k: usize, m: usize) -> T {
    T::from_count(k) / (T::from_count(m) * T::from_count(m - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDecomposition<T> {
    /// `v_r[j] = c_r[j] - [e_j ∈ O_r]/m`.
    pub vectors: Vec<Vec<T>>,
    /// `Σ_r Σ_{x∈O_r} ||x - c_r||²`.
    pub cost: T,
    pub opt: T,
    /// `Σ_r ||v_r||²`.
    pub norm_sq: T,
    /// `|cost - opt - m·norm_sq|`.
    pub residual: T,
}

/// Residual vectors of `centers` against the equal partition `clustering`,
/// matching cluster `r` to center `r`.
pub fn residual_decomposition<T: Scalar>(
    centers: &CenterSet<T>,
    clustering: &Clustering,
    inst: &LowerBoundInstance<T>,
) -> Result<ResidualDecomposition<T>> {
    let d = inst.d();
    if centers.len() != inst.k || clustering.k() != inst.k {
        return Err(Error::SizeMismatch(format!(
            "need {} centers and clusters, got {} and {}",
            inst.k,
            centers.len(),
            clustering.k()
        )));
    }
    if clustering.n() != d {
        return Err(Error::SizeMismatch(format!(
            "clustering covers {} points, instance has {d}",
            clustering.n()
        )));
    }
    if clustering.sizes().iter().any(|&s| s != inst.m) {
        return Err(Error::SizeMismatch(format!(
            "clusters must all have {} points",
            inst.m
        )));
    }
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: centers.iter().map(<[T]>::len).find(|&l| l != d).unwrap_or(0),
        });
    }
    let m = T::from_count(inst.m);
    let inv_m = T::one() / m.clone();
    let vectors: Vec<Vec<T>> = (0..inst.k)
        .map(|r| {
            let c = centers.center(r);
            (0..d)
                .map(|j| {
                    if clustering.label(j) == r {
                        c[j].clone() - inv_m.clone()
                    } else {
                        c[j].clone()
                    }
                })
                .collect()
        })
        .collect();
    let norm_sq = vectors
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc + v.clone() * v.clone());
    let cost = identity_cost(centers, clustering, &inst.data)?;
    let opt = opt_k(clustering, &inst.data)?;
    let residual = abs(cost.clone() - opt.clone() - m * norm_sq.clone());
    Ok(ResidualDecomposition {
        vectors,
        cost,
        opt,
        norm_sq,
        residual,
    })
}

/// Number of points on which two equal partitions disagree once each is
/// matched to `centers` by its own cheapest cluster-to-center matching, or
/// `None` unless both are served within `(1 + ε)·k(m-1)`.
pub fn served_disagreement<T: Scalar>(
    centers: &CenterSet<T>,
    a: &Clustering,
    b: &Clustering,
    inst: &LowerBoundInstance<T>,
    epsilon: T,
) -> Result<Option<usize>> {
    let limit = (T::one() + epsilon) * opt_equal_partition::<T>(inst.k, inst.m);
    let ra = cost_of_clustering(centers, a, &inst.data)?;
    let rb = cost_of_clustering(centers, b, &inst.data)?;
    if ra.total > limit || rb.total > limit {
        return Ok(None);
    }
    let count = (0..inst.d())
        .filter(|&j| ra.permutation[a.label(j)] != rb.permutation[b.label(j)])
        .count();
    Ok(Some(count))
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn binomial(n: usize, r: usize) -> BigUint {
    factorial(n) / (factorial(r) * factorial(n - r))
}

/// `log2` of a positive big integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().expect("fits").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64 bits");
    top.log2() + shift as f64
}

fn as_string<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn opt_as_string<S: Serializer>(
    v: &Option<BigUint>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

/// Exact counts for the instance with parameters `k`, `m`. Big integers
/// serialize as decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingReport {
    pub k: usize,
    pub m: usize,
    pub d: usize,
    /// `(km)! / (m!)^k` labeled equal partitions.
    #[serde(serialize_with = "as_string")]
    pub family_size: BigUint,
    pub log2_family_size: f64,
    /// `C(km, km/2) · (km/2)! / ((m/2)!)^k` when `m` is even: how many
    /// partitions one center set can serve.
    #[serde(serialize_with = "opt_as_string")]
    pub coverage_bound: Option<BigUint>,
    pub log2_coverage_bound: Option<f64>,
    /// `family_size / coverage_bound`, a lower bound on the list length.
    pub list_bound_ratio: Option<f64>,
    pub log2_list_bound: Option<f64>,
    /// `⌈family_size / coverage_bound⌉`.
    #[serde(serialize_with = "opt_as_string")]
    pub list_bound: Option<BigUint>,
}

pub fn counting_report(k: usize, m: usize) -> Result<CountingReport> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("k and m must be positive".into()));
    }
    let d = k * m;
    let mut denom = BigUint::one();
    let fm = factorial(m);
    for _ in 0..k {
        denom *= &fm;
    }
    let family_size = factorial(d) / denom;
    let log2_family_size = log2_big(&family_size);
    let coverage_bound = m.is_multiple_of(2).then(|| {
        let half = factorial(m / 2);
        let mut den = BigUint::one();
        for _ in 0..k {
            den *= &half;
        }
        binomial(d, d / 2) * factorial(d / 2) / den
    });
    let log2_coverage_bound = coverage_bound.as_ref().map(log2_big);
    let log2_list_bound = log2_coverage_bound.map(|c| log2_family_size - c);
    let list_bound = coverage_bound.as_ref().map(|c| {
        let q = &family_size / c;
        if (&q * c) == family_size {
            q
        } else {
            q + BigUint::one()
        }
    });
    let list_bound_ratio = coverage_bound.as_ref().map(|c| {
        BigRational::new(family_size.clone().into(), c.clone().into())
            .to_f64()
            .unwrap_or(f64::INFINITY)
    });
    Ok(CountingReport {
        k,
        m,
        d,
        family_size,
        log2_family_size,
        coverage_bound,
        log2_coverage_bound,
        list_bound_ratio,
        log2_list_bound,
        list_bound,
    })
}
