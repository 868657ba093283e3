mod common;

use ckm_core::geometry::{cluster_centroids, identity_cost, opt_k};
use ckm_core::kmedian::{list_k_median, CoreKind, MedianParams};
use ckm_core::listkmeans::{list_k_means, ListParams};
use ckm_core::lowerbound::{
    build_instance_m, counting_report, opt_equal_partition, residual_decomposition,
    residual_norm_bound,
};
use ckm_core::oracle::{
    brute_force_opt, enumerate_clusterings, verify_list_quality, EnumerationSpec,
};
use ckm_core::partition::{partition, select_best};
use ckm_core::sampling::{DistanceMode, SamplerState};
use ckm_core::stats::{binomial_lower_bound, chi_square_p_value};
use ckm_core::{CenterSet, Clustering, ConstraintFamily, Dataset, Rational, RngStream};
use common::{brute_force_assignment, close, direct_opt, random_centers, random_dataset, sq};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    RngStream::new(seed).rng()
}

#[test]
fn flow_partition_matches_exhaustive_assignment() {
    let mut r = rng(11);
    for trial in 0..60 {
        let n = r.random_range(2..=8);
        let k = r.random_range(1..=3usize.min(n));
        let data = random_dataset(&mut r, n, 2);
        let centers = random_centers(&mut r, k, 2);
        let mut families = vec![ConstraintFamily::RGather {
            r: r.random_range(1..=3),
        }];
        let mut sizes = vec![1; k];
        for _ in k..n {
            sizes[r.random_range(0..k)] += 1;
        }
        families.push(ConstraintFamily::ExactSizes { sizes });
        for f in &families {
            let want = brute_force_assignment(&centers, &data, f);
            match partition(&centers, &data, f) {
                Ok(o) => {
                    let got = identity_cost(&centers, &o, &data).unwrap();
                    let want = want.expect("feasible family has an assignment");
                    assert!(close(got, want, 1e-9), "trial {trial}: {f:?} {got} vs {want}");
                }
                Err(_) => assert!(want.is_none(), "trial {trial}: {f:?}"),
            }
        }
    }
}

#[test]
fn brute_force_opt_matches_labeled_enumeration() {
    let mut r = rng(12);
    for _ in 0..20 {
        let n = r.random_range(3..=7);
        let k = r.random_range(1..=3usize.min(n));
        let data = random_dataset(&mut r, n, 2);
        let family = ConstraintFamily::RGather { r: 1 };
        let want = (0..n)
            .map(|_| 0..k)
            .multi_cartesian_product()
            .map(|l| Clustering::new(l, k).unwrap())
            .filter(|o| family.is_satisfied_by(o))
            .map(|o| direct_opt(&o, &data))
            .fold(f64::INFINITY, f64::min);
        let (o, got) = brute_force_opt(&data, k, &family).unwrap();
        assert!(close(got, want, 1e-9));
        // relabeling the optimum does not change its cost
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut r);
        let again = opt_k(&o.relabeled(&perm).unwrap(), &data).unwrap();
        assert!(close(again, got, 1e-12));
    }
}

#[test]
fn enumeration_counts_match_multinomials() {
    let fact = |n: usize| (1..=n).product::<usize>();
    // equal sizes: labeled count / k!
    for (k, m) in [(2, 2), (2, 4), (3, 2), (3, 3), (2, 6)] {
        let spec = EnumerationSpec::new(k * m, k, ConstraintFamily::ExactSizes {
            sizes: vec![m; k],
        });
        let labeled = fact(k * m) / fact(m).pow(k as u32);
        assert_eq!(enumerate_clusterings(&spec).unwrap().count(), labeled / fact(k));
    }
    // distinct sizes keep labels
    let spec = EnumerationSpec::new(6, 3, ConstraintFamily::ExactSizes {
        sizes: vec![1, 2, 3],
    });
    assert_eq!(
        enumerate_clusterings(&spec).unwrap().count(),
        fact(6) / (fact(1) * fact(2) * fact(3))
    );
}

#[test]
fn every_served_cost_dominates_opt() {
    let mut r = rng(13);
    let data = random_dataset(&mut r, 7, 2);
    let spec = EnumerationSpec::new(7, 2, ConstraintFamily::RGather { r: 2 });
    let sets: Vec<CenterSet<f64>> = (0..5).map(|_| random_centers(&mut r, 2, 2)).collect();
    for o in enumerate_clusterings(&spec).unwrap() {
        let opt = opt_k(&o, &data).unwrap();
        for c in &sets {
            let cost = ckm_core::geometry::cost_of_clustering(c, &o, &data).unwrap();
            assert!(cost.total + 1e-9 >= opt);
        }
    }
}

#[test]
fn select_best_reaches_brute_force_optimum_when_listed() {
    let mut r = rng(14);
    for _ in 0..10 {
        let data = random_dataset(&mut r, 8, 2);
        let family = ConstraintFamily::ExactSizes { sizes: vec![3, 5] };
        let (o, opt) = brute_force_opt(&data, 2, &family).unwrap();
        let best = CenterSet::new(
            cluster_centroids(&o, &data)
                .unwrap()
                .into_iter()
                .map(Option::unwrap)
                .collect(),
        )
        .unwrap();
        let mut list: Vec<CenterSet<f64>> = (0..6).map(|_| random_centers(&mut r, 2, 2)).collect();
        list.insert(3, best);
        let s = select_best(&list, &data, &family).unwrap();
        assert!(close(s.cost, opt, 1e-9), "{} vs {opt}", s.cost);
    }
}

#[test]
fn distance_sampling_fits_exact_weights() {
    let mut r = rng(15);
    let data = random_dataset(&mut r, 60, 3);
    let centers = random_centers(&mut r, 3, 3);
    for mode in [DistanceMode::Squared, DistanceMode::Linear] {
        let mut s = SamplerState::new(&data, mode);
        for c in centers.iter() {
            s.add_center_in_place(c, &data);
        }
        let weights: Vec<f64> = data
            .points()
            .map(|p| {
                let d = centers.iter().map(|c| sq(p, c)).fold(f64::INFINITY, f64::min);
                if mode == DistanceMode::Squared {
                    d
                } else {
                    d.sqrt()
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let draws = s.sample(100_000, &RngStream::new(3));
        let mut counts = vec![0u64; data.len()];
        for i in draws {
            counts[i] += 1;
        }
        let (_, p) = chi_square_p_value(&counts, &probs);
        assert!(p > 0.001, "{mode:?}: p = {p}");
    }
}

#[test]
fn lower_bound_opt_is_exact() {
    let mut r = rng(16);
    for k in 1..=4 {
        for m in 1..=6 {
            let inst = build_instance_m::<Rational>(k, m).unwrap();
            let mut labels: Vec<usize> = (0..k * m).map(|j| j / m).collect();
            labels.shuffle(&mut r);
            let o = Clustering::new(labels, k).unwrap();
            assert_eq!(opt_k(&o, &inst.data).unwrap(), opt_equal_partition(k, m));
        }
    }
}

#[test]
fn residual_identity_and_served_bound() {
    let mut r = rng(17);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = r.random_range(1..=4);
        let m = r.random_range(2..=6);
        let inst = build_instance_m::<f64>(k, m).unwrap();
        let d = k * m;
        let mut labels: Vec<usize> = (0..d).map(|j| j / m).collect();
        labels.shuffle(&mut r);
        let o = Clustering::new(labels, k).unwrap();
        let c = CenterSet::new(
            (0..k)
                .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
                .collect(),
        )
        .unwrap();
        let dec = residual_decomposition(&c, &o, &inst).unwrap();
        worst = worst.max(dec.residual / dec.cost.max(1.0));

        // centers near the centroids serving O within (1 + ε)
        let eps = 1.0 / (m * m) as f64;
        let centroids: Vec<Vec<f64>> = cluster_centroids(&o, &inst.data)
            .unwrap()
            .into_iter()
            .map(Option::unwrap)
            .collect();
        let near = CenterSet::new(
            centroids
                .iter()
                .map(|c| c.iter().map(|v| v + r.random_range(-0.02..0.02)).collect())
                .collect(),
        )
        .unwrap();
        let dec = residual_decomposition(&near, &o, &inst).unwrap();
        if dec.cost <= (1.0 + eps) * dec.opt {
            assert!(dec.norm_sq <= residual_norm_bound::<f64>(k, m) + 1e-9);
        }
    }
    assert!(worst <= 1e-9, "max residual {worst}");
}

#[test]
fn counting_for_small_instances() {
    assert_eq!(counting_report(2, 4).unwrap().family_size, 70u32.into());
    assert_eq!(counting_report(1, 2).unwrap().family_size, 1u32.into());
    // (6)!/(2!)^3 = 90 labeled partitions of 6 points into pairs
    assert_eq!(counting_report(3, 2).unwrap().family_size, 90u32.into());
}

#[test]
fn single_median_list_contains_two_approximation() {
    let mut r = rng(18);
    for seed in 0..10 {
        let data = random_dataset(&mut r, 12, 2);
        let p = MedianParams::practical(1, 0.5, 24, 2, 2, Some(30), CoreKind::SubsetPoints)
            .unwrap();
        let list = list_k_median(&data, &p, seed).unwrap();
        let pts: Vec<&[f64]> = data.points().collect();
        let cost = |c: &[f64]| pts.iter().map(|q| sq(c, q).sqrt()).sum::<f64>();
        let discrete = pts.iter().map(|c| cost(c)).fold(f64::INFINITY, f64::min);
        let best = list
            .entries
            .iter()
            .map(|e| cost(e.center(0)))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 2.0 * discrete + 1e-9, "seed {seed}: {best} vs {discrete}");
    }
}

#[test]
fn lists_are_independent_of_thread_count() {
    let mut r = rng(19);
    let data = random_dataset(&mut r, 20, 2);
    let lp = ListParams::practical(3, 0.5, 10, 3, 2, Some(5)).unwrap();
    let mp = MedianParams::practical(2, 0.5, 10, 3, 2, Some(5), CoreKind::Default).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    list_k_means(&data, &lp, 8).unwrap(),
                    list_k_median(&data, &mp, 8).unwrap(),
                )
            })
    };
    assert_eq!(run(1), run(4));
}

fn upper_bound(successes: usize, trials: usize) -> f64 {
    1.0 - binomial_lower_bound(trials - successes, trials, 0.99)
}

#[test]
fn success_rate_does_not_drop_with_budget() {
    let mut r = rng(20);
    let data = random_dataset(&mut r, 8, 2);
    let family = ConstraintFamily::ExactSizes { sizes: vec![4, 4] };
    let seeds: Vec<u64> = (0..40).collect();
    let mut rates = Vec::new();
    for budget in [1, 8, 64] {
        let p = ListParams::practical(2, 0.05, 16, 4, 1, Some(budget)).unwrap();
        let rep = verify_list_quality(&data, &family, &p, &seeds, None).unwrap();
        rates.push((rep.successes, rep.trials));
    }
    for repeats in [2, 8] {
        let p = ListParams::practical(2, 0.05, 16, 4, repeats, Some(8)).unwrap();
        let rep = verify_list_quality(&data, &family, &p, &seeds, None).unwrap();
        rates.push((rep.successes, rep.trials));
    }
    // budgets 1 < 8 < 64, then repeats 1 < 2 < 8 at budget 8
    for (lo, hi) in [(0, 1), (1, 2), (1, 3), (3, 4)] {
        let (lo, hi) = (rates[lo], rates[hi]);
        assert!(
            binomial_lower_bound(lo.0, lo.1, 0.99) <= upper_bound(hi.0, hi.1),
            "{rates:?}"
        );
    }
    assert!(rates[2].0 > rates[0].0, "{rates:?}");
}

#[test]
fn inaba_rate_on_gaussian_data() {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(21);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..3).map(|_| normal.sample(&mut r)).collect())
        .collect();
    let data = Dataset::from_rows(&rows).unwrap();
    let rate =
        ckm_core::listkmeans::inaba_check(&data, 10, 0.2, 2000, &RngStream::new(1)).unwrap();
    let lb = binomial_lower_bound((rate * 2000.0).round() as usize, 2000, 0.99);
    assert!(rate >= 0.8 - 0.03, "rate {rate}, lower bound {lb}");
}
