#![allow(dead_code)]

use ckm_core::{CenterSet, Clustering, ConstraintFamily, Dataset};
use itertools::Itertools;
use rand::Rng;

pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
        .collect()
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, d: usize) -> Dataset<f64> {
    Dataset::from_rows(&random_points(rng, n, d, 10.0)).unwrap()
}

pub fn random_centers<R: Rng>(rng: &mut R, k: usize, d: usize) -> CenterSet<f64> {
    CenterSet::new(random_points(rng, k, d, 10.0)).unwrap()
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn mean(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    (0..d)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64)
        .collect()
}

/// Cheapest labeled assignment of every point to a center (cluster `i` served
/// by center `i`) whose cluster sizes the family admits, by trying all `k^n`
/// labelings.
pub fn brute_force_assignment(
    centers: &CenterSet<f64>,
    data: &Dataset<f64>,
    family: &ConstraintFamily,
) -> Option<f64> {
    let n = data.len();
    let k = centers.len();
    let mut best: Option<f64> = None;
    for labels in (0..n).map(|_| 0..k).multi_cartesian_product() {
        let o = Clustering::new(labels.clone(), k).unwrap();
        if !family.is_satisfied_by(&o) {
            continue;
        }
        let cost: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| sq(data.point(i), centers.center(l)))
            .sum();
        if best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    best
}

/// `min_π Σ_i Σ_{x∈O_i} ||x - c_π(i)||²` over all permutations.
pub fn brute_force_matching(
    centers: &CenterSet<f64>,
    clustering: &Clustering,
    data: &Dataset<f64>,
) -> f64 {
    let k = centers.len();
    (0..k)
        .permutations(k)
        .map(|perm| {
            (0..data.len())
                .map(|i| sq(data.point(i), centers.center(perm[clustering.label(i)])))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sum over clusters of squared distances to the cluster mean.
pub fn direct_opt(clustering: &Clustering, data: &Dataset<f64>) -> f64 {
    clustering
        .members()
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let pts = data.select(m);
            let c = mean(&pts);
            pts.iter().map(|p| sq(p, &c)).sum::<f64>()
        })
        .sum()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
