//! D²-sampling (squared distance) and D-sampling (linear distance) with
//! incrementally maintained nearest-center distances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{sq_dist, Dataset};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Which power of the nearest-center distance weights a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// `min_c ||x - c||²`, the k-means weight.
    Squared,
    /// `min_c ||x - c||`, the k-median weight.
    Linear,
}

impl DistanceMode {
    #[inline]
    pub fn eval<T: Real>(self, a: &[T], b: &[T]) -> T {
        let d2 = sq_dist(a, b);
        match self {
            DistanceMode::Squared => d2,
            DistanceMode::Linear => d2.sqrt(),
        }
    }
}

/// Per-point weight w.r.t. the centers added so far.
///
/// With no centers yet, or when every weight is zero, sampling is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState<T> {
    min_dists: Vec<T>,
    total: T,
    mode: DistanceMode,
    centers: usize,
}

impl<T: Real> SamplerState<T> {
    pub fn new(data: &Dataset<T>, mode: DistanceMode) -> Self {
        Self {
            min_dists: vec![T::infinity(); data.len()],
            total: T::infinity(),
            mode,
            centers: 0,
        }
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn center_count(&self) -> usize {
        self.centers
    }

    /// Current weights; all `+inf` before the first center.
    pub fn min_dists(&self) -> &[T] {
        &self.min_dists
    }

    pub fn total(&self) -> T {
        self.total
    }

    /// `true` when draws are uniform rather than distance-weighted.
    pub fn uniform_fallback(&self) -> bool {
        self.centers == 0 || self.total.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater)
    }

    /// Lowers each weight to its distance to `center`. O(n·d).
    pub fn add_center_in_place(&mut self, center: &[T], data: &Dataset<T>) {
        debug_assert_eq!(center.len(), data.dim());
        let mut total = T::zero();
        for (w, p) in self.min_dists.iter_mut().zip(data.points()) {
            let d = self.mode.eval(p, center);
            if d < *w {
                *w = d;
            }
            total += *w;
        }
        self.total = total;
        self.centers += 1;
    }

    /// Copy-and-extend; `self` is left untouched.
    pub fn add_center(&self, center: &[T], data: &Dataset<T>) -> Self {
        let mut next = self.clone();
        next.add_center_in_place(center, data);
        next
    }

    /// Exact draw probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.min_dists.len();
        if self.uniform_fallback() {
            return vec![1.0 / n as f64; n];
        }
        let total = self.total.to_f64_lossy();
        self.min_dists
            .iter()
            .map(|w| w.to_f64_lossy() / total)
            .collect()
    }

    /// `count` independent draws with replacement.
    pub fn sample_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<usize> {
        let n = self.min_dists.len();
        if self.uniform_fallback() {
            return (0..count).map(|_| rng.random_range(0..n)).collect();
        }
        let mut prefix = Vec::with_capacity(n);
        let mut acc = 0.0f64;
        for w in &self.min_dists {
            acc += w.to_f64_lossy();
            prefix.push(acc);
        }
        (0..count)
            .map(|_| {
                let target = rng.random::<f64>() * acc;
                prefix.partition_point(|&c| c <= target).min(n - 1)
            })
            .collect()
    }

    pub fn sample(&self, count: usize, stream: &RngStream) -> Vec<usize> {
        self.sample_with(count, &mut stream.rng())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(rows: &[&[f64]]) -> Dataset<f64> {
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn no_centers_means_uniform() {
        let x = data(&[&[0.0], &[1.0], &[2.0]]);
        let s = SamplerState::new(&x, DistanceMode::Squared);
        assert!(s.uniform_fallback());
        for p in s.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let single = data(&[&[4.0, 4.0]]);
        let s = SamplerState::new(&single, DistanceMode::Squared);
        assert!(s.sample(50, &RngStream::new(1)).iter().all(|&i| i == 0));
    }

    #[test]
    fn linear_mode_weights() {
        let x = data(&[&[3.0, 0.0], &[4.0, 0.0]]);
        let s = SamplerState::new(&x, DistanceMode::Linear).add_center(&[0.0, 0.0], &x);
        assert_eq!(s.min_dists(), &[3.0, 4.0]);
        let p = s.probabilities();
        assert!((p[0] - 3.0 / 7.0).abs() < 1e-15);
        let s = SamplerState::new(&x, DistanceMode::Squared).add_center(&[0.0, 0.0], &x);
        assert_eq!(s.min_dists(), &[9.0, 16.0]);
    }

    #[test]
    fn center_on_a_point_zeroes_its_weight() {
        let x = data(&[&[0.0], &[5.0]]);
        let s = SamplerState::new(&x, DistanceMode::Squared).add_center(&[5.0], &x);
        assert_eq!(s.min_dists()[1], 0.0);
        assert!(s.sample(200, &RngStream::new(3)).iter().all(|&i| i == 0));
    }

    #[test]
    fn far_center_changes_nothing() {
        let x = data(&[&[0.0], &[5.0]]);
        let s = SamplerState::new(&x, DistanceMode::Squared).add_center(&[1.0], &x);
        let t = s.add_center(&[1e6], &x);
        assert_eq!(s.min_dists(), t.min_dists());
        assert_eq!(s.total(), t.total());
    }

    #[test]
    fn all_zero_weights_fall_back_to_uniform() {
        let x = data(&[&[1.0], &[1.0]]);
        let s = SamplerState::new(&x, DistanceMode::Squared).add_center(&[1.0], &x);
        assert_eq!(s.total(), 0.0);
        assert!(s.uniform_fallback());
        let draws = s.sample(10_000, &RngStream::new(9));
        let ones = draws.iter().filter(|&&i| i == 1).count();
        assert!((4_500..5_500).contains(&ones));
    }

    #[test]
    fn deterministic_per_stream() {
        let x = data(&[&[0.0], &[1.0], &[3.0], &[7.0]]);
        let s = SamplerState::new(&x, DistanceMode::Squared).add_center(&[0.0], &x);
        let stream = RngStream::new(42).child(2);
        assert_eq!(s.sample(100, &stream), s.sample(100, &stream));
    }

    proptest! {
        #[test]
        fn incremental_matches_recompute(
            pts in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..30),
            centers in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..6),
            linear in any::<bool>(),
        ) {
            let x = Dataset::from_rows(&pts).unwrap();
            let mode = if linear { DistanceMode::Linear } else { DistanceMode::Squared };
            let mut s = SamplerState::new(&x, mode);
            for c in &centers {
                let before = s.min_dists().to_vec();
                s.add_center_in_place(c, &x);
                for (b, a) in before.iter().zip(s.min_dists()) {
                    prop_assert!(a <= b);
                }
            }
            let mut total = 0.0;
            for (i, p) in x.points().enumerate() {
                let fresh = centers
                    .iter()
                    .map(|c| mode.eval(p, c))
                    .fold(f64::INFINITY, f64::min);
                let got = s.min_dists()[i];
                prop_assert!((got - fresh).abs() <= 1e-9 * fresh.max(1e-12));
                total += fresh;
            }
            prop_assert!((s.total() - total).abs() <= 1e-9 * total.max(1e-12));
        }
    }
}
