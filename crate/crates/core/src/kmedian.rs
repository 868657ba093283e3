//! List k-median: the same sampling tree with linear distance weights, where
//! every subset branches on a set of 1-median candidates instead of a single
//! centroid.
//!
//! Exact mode uses `N = ⌈α·k/ε⁶⌉`, `M = ⌈β/ε⁴⌉` and `2^k` repeats. The
//! candidate generator is pluggable; [`DefaultCore`] returns the distinct
//! subset points, the centroid and a Weiszfeld 1-median, which always contains
//! a 2-approximate 1-median of the subset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, dist, CenterSet, Dataset};
use crate::listkmeans::{
    ceil_count, check_k_epsilon, pow2_repeats, CandidateList, ParamMode, Problem,
};
use crate::sampling::DistanceMode;
use crate::scalar::Real;
use crate::tree::{self, CandidateRule, CenterVisitor, CollectCenters, TreeSpec, TreeStats};

/// Relative step size at which Weiszfeld iteration stops.
pub const WEISZFELD_TOLERANCE: f64 = 1e-9;
const WEISZFELD_MAX_ITER: usize = 100_000;
const DEGENERATE_DISPLACEMENT: f64 = 1e-12;

/// `Σ_x min_{c∈C} ||x - c||`.
pub fn phi_median<T: Real>(centers: &CenterSet<T>, points: &[&[T]]) -> Result<T> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    let mut total = T::zero();
    for p in points {
        let mut best = T::infinity();
        for c in centers.iter() {
            if c.len() != p.len() {
                return Err(Error::Dimension {
                    expected: c.len(),
                    got: p.len(),
                });
            }
            best = best.min(dist(c, p));
        }
        total += best;
    }
    Ok(total)
}

fn sum_dist<T: Real>(y: &[T], points: &[&[T]]) -> T {
    points.iter().fold(T::zero(), |acc, p| acc + dist(y, p))
}

/// Result of a Weiszfeld run.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianEstimate<T> {
    pub point: Vec<T>,
    /// `Σ ||x - point||`, an upper bound on the 1-median cost.
    pub value: T,
    pub iterations: usize,
    /// The step tolerance was reached (or optimality certified) before the
    /// iteration limit.
    pub converged: bool,
    /// `false` only when the optimum is certified: a single distinct point,
    /// or an iterate on a data point passing the subgradient test.
    pub approximate: bool,
}

/// Approximate continuous 1-median by Weiszfeld iteration from the centroid.
///
/// When an iterate coincides with data points of total multiplicity `w`, the
/// pull `R = Σ (x - y)/||x - y||` of the others decides: `||R|| ≤ w` certifies
/// optimality, otherwise the iterate moves a tiny step along `R`.
pub fn delta_median<T: Real>(points: &[&[T]]) -> Result<MedianEstimate<T>> {
    let start = centroid(points)?;
    let dim = start.len();
    let spread = sum_dist(&start, points) / T::from_count(points.len());
    let scale_of = |y: &[T]| {
        let norm = y.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        norm.max(spread)
    };
    let tol = T::from_f64_lossy(WEISZFELD_TOLERANCE);
    let zero_spread = points.iter().all(|p| *p == points[0]);
    if zero_spread {
        return Ok(MedianEstimate {
            point: start,
            value: T::zero(),
            iterations: 0,
            converged: true,
            approximate: false,
        });
    }
    let mut y = start.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut certified = false;
    while iterations < WEISZFELD_MAX_ITER {
        iterations += 1;
        let mut num = vec![T::zero(); dim];
        let mut den = T::zero();
        let mut pull = vec![T::zero(); dim];
        let mut coincident = 0usize;
        for p in points {
            let d = dist(&y, p);
            if d == T::zero() {
                coincident += 1;
                continue;
            }
            let w = T::one() / d;
            den += w;
            for j in 0..dim {
                num[j] += p[j] * w;
                pull[j] += (p[j] - y[j]) * w;
            }
        }
        let next: Vec<T> = if coincident > 0 {
            let pull_norm = pull.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
            if pull_norm <= T::from_count(coincident) {
                converged = true;
                certified = true;
                break;
            }
            let step = T::from_f64_lossy(DEGENERATE_DISPLACEMENT) * scale_of(&y) / pull_norm;
            y.iter().zip(&pull).map(|(&v, &r)| v + r * step).collect()
        } else {
            num.iter().map(|&v| v / den).collect()
        };
        let moved = dist(&next, &y);
        let scale = scale_of(&next);
        y = next;
        if coincident == 0 && moved <= tol * scale {
            converged = true;
            break;
        }
    }
    let value = sum_dist(&y, points);
    let start_value = sum_dist(&start, points);
    let (point, value) = if start_value < value {
        (start, start_value)
    } else {
        (y, value)
    };
    Ok(MedianEstimate {
        point,
        value,
        iterations,
        converged,
        approximate: !certified,
    })
}

/// Source of 1-median candidates for a sampled subset.
pub trait CoreGenerator<T>: Sync {
    fn id(&self) -> CoreKind;

    /// At least one candidate for a nonempty subset.
    fn core(&self, subset: &[&[T]]) -> Vec<Vec<T>>;
}

/// Built-in generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreKind {
    /// Weiszfeld median, centroid, then the distinct subset points.
    #[default]
    Default,
    /// Only the centroid; the tree then has the k-means shape.
    Centroid,
    /// The distinct subset points.
    SubsetPoints,
}

fn push_distinct<T: Real>(out: &mut Vec<Vec<T>>, c: Vec<T>) {
    if !out.contains(&c) {
        out.push(c);
    }
}

fn truncate<T>(mut v: Vec<Vec<T>>, budget: Option<usize>) -> Vec<Vec<T>> {
    if let Some(b) = budget {
        v.truncate(b.max(1));
    }
    v
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultCore {
    pub budget: Option<usize>,
}

impl<T: Real> CoreGenerator<T> for DefaultCore {
    fn id(&self) -> CoreKind {
        CoreKind::Default
    }

    fn core(&self, subset: &[&[T]]) -> Vec<Vec<T>> {
        truncate(default_core(subset), self.budget)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CentroidCore;

impl<T: Real> CoreGenerator<T> for CentroidCore {
    fn id(&self) -> CoreKind {
        CoreKind::Centroid
    }

    fn core(&self, subset: &[&[T]]) -> Vec<Vec<T>> {
        vec![centroid(subset).expect("nonempty subset")]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SubsetPointsCore {
    pub budget: Option<usize>,
}

impl<T: Real> CoreGenerator<T> for SubsetPointsCore {
    fn id(&self) -> CoreKind {
        CoreKind::SubsetPoints
    }

    fn core(&self, subset: &[&[T]]) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        for p in subset {
            push_distinct(&mut out, p.to_vec());
        }
        truncate(out, self.budget)
    }
}

/// Weiszfeld median, centroid and the distinct points of `subset`, in that
/// order and without duplicates: at most `|subset| + 2` candidates.
pub fn default_core<T: Real>(subset: &[&[T]]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(subset.len() + 2);
    if subset.is_empty() {
        return out;
    }
    let median = delta_median(subset).expect("nonempty subset");
    push_distinct(&mut out, median.point);
    push_distinct(&mut out, centroid(subset).expect("nonempty subset"));
    for p in subset {
        push_distinct(&mut out, p.to_vec());
    }
    out
}

/// Adapts a [`CoreGenerator`] to the tree's candidate interface.
pub struct CoreRule<G>(pub G);

impl<T, G: CoreGenerator<T>> CandidateRule<T> for CoreRule<G> {
    fn candidates(&self, subset: &[&[T]]) -> Vec<Vec<T>> {
        self.0.core(subset)
    }
}

/// Parameters of one list-k-median construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianParams {
    pub k: usize,
    pub epsilon: f64,
    pub sample_size: u64,
    pub subset_size: usize,
    pub repeats: u64,
    pub subset_budget: Option<u64>,
    pub mode: ParamMode,
    pub alpha: f64,
    pub beta: f64,
    pub generator: CoreKind,
    /// Cap on candidates per subset.
    pub core_budget: Option<usize>,
}

impl MedianParams {
    pub fn exact(k: usize, epsilon: f64, alpha: f64, beta: f64) -> Result<Self> {
        check_k_epsilon(k, epsilon)?;
        check_constants(alpha, beta)?;
        Ok(Self {
            k,
            epsilon,
            sample_size: ceil_count(alpha * k as f64 / epsilon.powi(6), "N")?,
            subset_size: ceil_count(beta / epsilon.powi(4), "M")? as usize,
            repeats: pow2_repeats(k)?,
            subset_budget: None,
            mode: ParamMode::Exact,
            alpha,
            beta,
            generator: CoreKind::Default,
            core_budget: None,
        })
    }

    pub fn practical(
        k: usize,
        epsilon: f64,
        sample_size: u64,
        subset_size: usize,
        repeats: u64,
        subset_budget: Option<u64>,
        generator: CoreKind,
    ) -> Result<Self> {
        let p = Self {
            k,
            epsilon,
            sample_size,
            subset_size,
            repeats,
            subset_budget,
            mode: ParamMode::Practical,
            alpha: 1.0,
            beta: 1.0,
            generator,
            core_budget: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_k_epsilon(self.k, self.epsilon)?;
        check_constants(self.alpha, self.beta)?;
        if self.core_budget == Some(0) {
            return Err(Error::InvalidParameter("core budget must be positive".into()));
        }
        self.tree_spec().validate()?;
        if self.mode == ParamMode::Exact {
            let e = Self::exact(self.k, self.epsilon, self.alpha, self.beta)?;
            if (self.sample_size, self.subset_size, self.repeats, self.subset_budget)
                != (e.sample_size, e.subset_size, e.repeats, e.subset_budget)
            {
                return Err(Error::InvalidParameter(format!(
                    "exact mode requires N = {}, M = {}, repeats = {} and no subset budget",
                    e.sample_size, e.subset_size, e.repeats
                )));
            }
        }
        Ok(())
    }

    pub fn tree_spec(&self) -> TreeSpec {
        TreeSpec {
            k: self.k,
            sample_size: self.sample_size,
            subset_size: self.subset_size,
            subset_budget: self.subset_budget,
            repeats: self.repeats,
            mode: DistanceMode::Linear,
        }
    }
}

fn check_constants(alpha: f64, beta: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha and beta must be positive, got {alpha} and {beta}"
        )))
    }
}

/// Streams every list entry to `sink`, using the generator named in `params`.
pub fn visit_k_median<T, V>(
    data: &Dataset<T>,
    params: &MedianParams,
    seed: u64,
    sink: &V,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    V: CenterVisitor<T>,
{
    params.validate()?;
    let spec = params.tree_spec();
    let budget = params.core_budget;
    match params.generator {
        CoreKind::Default => {
            tree::explore(data, &spec, &CoreRule(DefaultCore { budget }), sink, seed)
        }
        CoreKind::Centroid => tree::explore(data, &spec, &CoreRule(CentroidCore), sink, seed),
        CoreKind::SubsetPoints => tree::explore(
            data,
            &spec,
            &CoreRule(SubsetPointsCore { budget }),
            sink,
            seed,
        ),
    }
}

/// Like [`visit_k_median`] with a caller-supplied generator.
pub fn visit_k_median_with<T, G, V>(
    data: &Dataset<T>,
    params: &MedianParams,
    generator: G,
    seed: u64,
    sink: &V,
) -> Result<(V::Acc, TreeStats)>
where
    T: Real,
    G: CoreGenerator<T>,
    V: CenterVisitor<T>,
{
    params.validate()?;
    tree::explore(data, &params.tree_spec(), &CoreRule(generator), sink, seed)
}

pub fn list_k_median<T: Real>(
    data: &Dataset<T>,
    params: &MedianParams,
    seed: u64,
) -> Result<CandidateList<T, MedianParams>> {
    let (entries, stats) = visit_k_median(data, params, seed, &CollectCenters)?;
    Ok(CandidateList {
        problem: Problem::KMedian,
        params: params.clone(),
        seed,
        stats,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::listkmeans::{list_k_means, ListParams};
    use crate::rng::RngStream;
    use rand::Rng;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    fn grid_median(pts: &[Vec<f64>]) -> f64 {
        // coarse scan then successive refinement around the best cell
        let r = refs(pts);
        let (mut cx, mut cy, mut half) = (0.5, 0.5, 2.0);
        let mut best = f64::INFINITY;
        for _ in 0..40 {
            let steps = 40;
            let (mut bx, mut by) = (cx, cy);
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = cx - half + 2.0 * half * i as f64 / steps as f64;
                    let y = cy - half + 2.0 * half * j as f64 / steps as f64;
                    let v = sum_dist(&[x, y], &r);
                    if v < best {
                        best = v;
                        bx = x;
                        by = y;
                    }
                }
            }
            cx = bx;
            cy = by;
            half *= 0.25;
        }
        best
    }

    #[test]
    fn phi_median_examples() {
        let c = CenterSet::new(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(phi_median(&c, &[&[3.0, 4.0]]).unwrap(), 5.0);
        let pts = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        let all = CenterSet::new(pts.clone()).unwrap();
        assert_eq!(phi_median(&all, &refs(&pts)).unwrap(), 0.0);
        assert!(matches!(
            phi_median(&CenterSet::<f64>::empty(), &refs(&pts)),
            Err(Error::NoCenters)
        ));
    }

    #[test]
    fn median_examples() {
        let two = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let e = delta_median(&refs(&two)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);

        let one = vec![vec![3.0, -1.0]];
        let e = delta_median(&refs(&one)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(!e.approximate);

        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let e = delta_median(&refs(&tri)).unwrap();
        assert!(e.converged);
        assert!((e.value - grid_median(&tri)).abs() < 1e-4, "{}", e.value);
    }

    #[test]
    fn median_on_dominant_data_point() {
        // Three copies of the origin outweigh the pull of the other points,
        // so the median is the origin itself.
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ];
        let e = delta_median(&refs(&pts)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn default_core_shapes() {
        let one = vec![vec![1.0, 1.0]];
        assert_eq!(default_core(&refs(&one)), vec![vec![1.0, 1.0]]);
        let two = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let core = default_core(&refs(&two));
        // Weiszfeld from the midpoint stays there, so it merges with the centroid
        assert_eq!(core.len(), 3);
        assert!(core.contains(&vec![1.0, 0.0]));
        assert!(core.contains(&vec![0.0, 0.0]));
        assert!(core.contains(&vec![2.0, 0.0]));
    }

    #[test]
    fn default_core_contains_two_approximation() {
        let mut rng = RngStream::new(5).rng();
        for _ in 0..50 {
            let pts: Vec<Vec<f64>> = (0..10)
                .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let r = refs(&pts);
            let opt = delta_median(&r).unwrap().value;
            let best = default_core(&r)
                .into_iter()
                .map(|c| sum_dist(&c, &r))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 2.0 * opt + 1e-9);
            assert!(default_core(&r).len() <= 12);
        }
    }

    #[test]
    fn exact_params() {
        let p = MedianParams::exact(2, 0.5, 1.0, 1.0).unwrap();
        assert_eq!((p.sample_size, p.subset_size, p.repeats), (128, 16, 4));
        p.validate().unwrap();
        let mut q = p.clone();
        q.sample_size = 10;
        assert!(q.validate().is_err());
        assert!(MedianParams::exact(1, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn centroid_generator_matches_k_means_shape() {
        let x = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![5.0], vec![6.0]]).unwrap();
        let mp =
            MedianParams::practical(2, 0.5, 4, 2, 2, Some(3), CoreKind::Centroid).unwrap();
        let lp = ListParams::practical(2, 0.5, 4, 2, 2, Some(3)).unwrap();
        let a = list_k_median(&x, &mp, 9).unwrap();
        let b = list_k_means(&x, &lp, 9).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a.stats, b.stats);
        assert!(a.entries.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn deterministic_in_seed() {
        let x = Dataset::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![4.0, 4.0],
            vec![5.0, 3.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        let p = MedianParams::practical(2, 0.5, 6, 2, 2, Some(4), CoreKind::Default).unwrap();
        let a = list_k_median(&x, &p, 3).unwrap();
        let b = list_k_median(&x, &p, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.problem, Problem::KMedian);
    }
}
