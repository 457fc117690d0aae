use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modal_probe::decomposition::{
    birge_partition, common_refinement, decomp_tv_upper_bound, flatness_error, flatten, reduce,
    IntervalPartition, Monotonicity,
};
use modal_probe::dist::{
    kolmogorov_distance, modality, modality_within, tv_distance, Interval, Pmf,
};
use modal_probe::harness::instances::random_band_pmf;
use modal_probe::kmodal::{
    atomic_intervals, classify_atomic, flat_decomposition_from_masses, orientation,
    OrientationVerdict, RawMasses,
};
use modal_probe::lowerbound::{geometric_refine, lift, support_size_bound, LbTransform};
use modal_probe::sampler::multinomial_counts;
use modal_probe::testers::{identity_unknown_statistic, test_identity_unknown_counts};
use modal_probe::BirgeConfig;

fn weights(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.001f64..1.0], n)
        .prop_filter("needs positive mass", |w| w.iter().any(|&x| x > 0.0))
}

fn pmf(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Pmf> {
    weights(n).prop_map(|w| Pmf::from_weights(&w).unwrap())
}

fn pair(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Pmf, Pmf)> {
    n.prop_flat_map(|n| (pmf(n..=n), pmf(n..=n)))
}

/// A partition of `[n]` from a set of cut flags.
fn partition_of(n: usize, cuts: &[bool]) -> IntervalPartition {
    let mut lengths = Vec::new();
    let mut run = 0;
    for i in 0..n {
        run += 1;
        if i + 1 == n || cuts[i % cuts.len()] {
            lengths.push(run);
            run = 0;
        }
    }
    IntervalPartition::from_lengths(&lengths).unwrap()
}

fn sorted_desc(mut w: Vec<f64>) -> Pmf {
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Pmf::from_weights(&w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distances_are_ordered((p, q) in pair(1..=40)) {
        let dk = kolmogorov_distance(&p, &q).unwrap();
        let tv = tv_distance(&p, &q).unwrap();
        prop_assert!(dk >= 0.0);
        prop_assert!(dk <= tv + 1e-12);
        prop_assert!(tv <= 1.0 + 1e-12);
    }

    #[test]
    fn tv_matches_subset_enumeration((p, q) in pair(1..=12)) {
        let n = p.len();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << n) {
            let diff: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| p.masses()[i] - q.masses()[i])
                .sum();
            best = best.max(diff.abs());
        }
        prop_assert!((tv_distance(&p, &q).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn monotone_has_no_modes(w in weights(1..=60)) {
        let p = sorted_desc(w);
        prop_assert_eq!(modality(&p).k, 0);
        prop_assert_eq!(modality(&p.reversed()).k, 0);
    }

    #[test]
    fn json_round_trip_is_exact(p in pmf(1..=30)) {
        let back = Pmf::from_json(&p.to_json().unwrap()).unwrap();
        prop_assert!(back.masses().iter().zip(p.masses()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn reduction_identity((p, q) in pair(1..=20), cuts in prop::collection::vec(any::<bool>(), 1..20)) {
        let part = partition_of(p.len(), &cuts);
        let reduced = tv_distance(&reduce(&p, &part).unwrap(), &reduce(&q, &part).unwrap()).unwrap();
        let flattened = tv_distance(&flatten(&p, &part).unwrap(), &flatten(&q, &part).unwrap()).unwrap();
        let tv = tv_distance(&p, &q).unwrap();
        prop_assert!((reduced - flattened).abs() < 1e-12);
        prop_assert!(reduced <= tv + 1e-12);
        let slack = flatness_error(&p, &part).unwrap() + flatness_error(&q, &part).unwrap();
        prop_assert!((tv - reduced).abs() <= slack + 1e-12);
        prop_assert!(decomp_tv_upper_bound(&p, &q, &part).unwrap() + 1e-12 >= tv);
    }

    #[test]
    fn flatten_preserves_interval_masses(p in pmf(1..=30), cuts in prop::collection::vec(any::<bool>(), 1..30)) {
        let part = partition_of(p.len(), &cuts);
        let f = flatten(&p, &part).unwrap();
        for iv in part.intervals() {
            prop_assert!((f.mass_of(*iv) - p.mass_of(*iv)).abs() < 1e-12);
        }
        prop_assert!(flatness_error(&f, &part).unwrap() < 1e-12);
    }

    #[test]
    fn refinement_per_interval(p in pmf(1..=50), coarse_cuts in prop::collection::vec(any::<bool>(), 1..8), fine_cuts in prop::collection::vec(any::<bool>(), 1..8)) {
        let coarse = partition_of(p.len(), &coarse_cuts);
        let other = partition_of(p.len(), &fine_cuts);
        let fine = common_refinement(&coarse, &other).unwrap();
        prop_assert!(fine.refines(&coarse) && fine.refines(&other));
        // contribution of I, and of the pieces of I, to the flatness error
        let contribution = |iv: Interval| {
            let avg = p.mass_of(iv) / iv.len() as f64;
            0.5 * (iv.lo()..=iv.hi()).map(|i| (p.prob(i) - avg).abs()).sum::<f64>()
        };
        for iv in coarse.intervals() {
            let pieces: f64 = fine
                .intervals()
                .iter()
                .filter(|j| iv.contains(j.lo()))
                .map(|j| contribution(*j))
                .sum();
            prop_assert!(pieces <= 2.0 * contribution(*iv) + 1e-12);
        }
        prop_assert!(flatness_error(&p, &fine).unwrap() <= 2.0 * flatness_error(&p, &coarse).unwrap() + 1e-12);
    }

    #[test]
    fn oblivious_partition_is_flat_for_monotone(w in weights(1..=400), eps in 0.05f64..0.5) {
        let p = sorted_desc(w);
        let n = p.len();
        let part = birge_partition(n, eps, Monotonicity::NonIncreasing).unwrap();
        prop_assert!(flatness_error(&p, &part).unwrap() <= 4.0 * eps);
        let mirrored = birge_partition(n, eps, Monotonicity::NonDecreasing).unwrap();
        prop_assert!(flatness_error(&p.reversed(), &mirrored).unwrap() <= 4.0 * eps);
        let mut lens = mirrored.lengths();
        lens.reverse();
        prop_assert_eq!(lens, part.lengths());
    }

    #[test]
    fn classification_tiles(p in pmf(1..=300), eps in 0.05f64..1.0, k in 1usize..5) {
        let atomic = atomic_intervals(&p, eps, k).unwrap();
        prop_assert!(atomic.len() <= (100.0 * k as f64 / eps).ceil() as usize + 1);
        let c = classify_atomic(&p, &atomic, eps, k).unwrap();
        prop_assert!(c.tiles(p.len()));
        prop_assert!(c.heavy_points.iter().all(|h| h.len() == 1));
        let d = flat_decomposition_from_masses(&p, eps, k, &BirgeConfig::default()).unwrap();
        prop_assert_eq!(d.partition.domain_size(), p.len());
    }

    #[test]
    fn far_monotone_conditionals_are_not_flat(w in weights(2..=150), eps in 0.05f64..1.0, k in 1usize..5, scale in 1.0f64..30.0, rising in any::<bool>(), noise_seed in any::<u64>()) {
        use rand::Rng;
        let mut cond = sorted_desc(w);
        if rising {
            cond = cond.reversed();
        }
        let len = cond.len();
        let u = Pmf::uniform(len).unwrap();
        prop_assume!(tv_distance(&cond, &u).unwrap() > eps / 6.0);
        let r = eps * eps / (10_000.0 * k as f64);
        let total = 99.0 * eps / (10_000.0 * k as f64) * scale;
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        // partial-sum noise within r/2, clipped to keep masses non-negative
        let mut prev = rng.random_range(-0.5..=0.5) * r;
        let mut noisy = Vec::with_capacity(len);
        for &v in cond.masses() {
            let mut d = rng.random_range(-0.5..=0.5) * r;
            let mut m = v * total + d - prev;
            if m < 0.0 {
                d = prev - v * total;
                m = 0.0;
            }
            noisy.push(m);
            prev = d;
        }
        let verdict = orientation(&RawMasses::new(&noisy), Interval::new(1, len).unwrap(), eps).unwrap();
        prop_assert_ne!(verdict, OrientationVerdict::Flat);
    }

    #[test]
    fn closeness_statistic_is_symmetric(a in prop::collection::vec(0u64..50, 2..30), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut b = a.clone();
        b.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(a.iter().sum::<u64>() >= 2);
        prop_assert_eq!(identity_unknown_statistic(&a, &b).unwrap(), identity_unknown_statistic(&b, &a).unwrap());
        prop_assert_eq!(
            test_identity_unknown_counts(&a, &b, 0.3).unwrap(),
            test_identity_unknown_counts(&b, &a, 0.3).unwrap()
        );
    }

    #[test]
    fn multinomial_conserves_total(p in pmf(1..=50), m in 0u64..1_000_000_000_000, seed in any::<u64>()) {
        let c = multinomial_counts(p.masses(), m, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(c.iter().sum::<u64>(), m);
        prop_assert!(c.iter().zip(p.masses()).all(|(&x, &w)| w > 0.0 || x == 0));
    }

    #[test]
    fn lift_invariants(n in 2usize..=5, k in 1usize..=4, band in 1.0f64..4.0, seed in any::<u64>()) {
        let (p_min, p_max) = (1.0 / (n as f64 * band.sqrt()), band.sqrt() / n as f64);
        let t = LbTransform::new(n, 0.5, p_min, p_max, k).unwrap();
        prop_assert!((t.q_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(t.a()[0], 1);
        prop_assert!(t.a().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(t.support_size() as f64 <= support_size_bound(&t));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_band_pmf(n, p_min, p_max, &mut rng).unwrap();
        let q = random_band_pmf(n, p_min, p_max, &mut rng).unwrap();
        let f = geometric_refine(&p, &t).unwrap();
        let ratio_ok = f.masses().windows(2).all(|w| w[1] <= w[0] * 1.5 * (1.0 + 1e-12));
        prop_assert!(ratio_ok);
        let (gp, gq) = (lift(&p, &t).unwrap(), lift(&q, &t).unwrap());
        let gap = (tv_distance(&gp, &gq).unwrap() - tv_distance(&p, &q).unwrap()).abs();
        prop_assert!(gap < 1e-12, "gap {gap:e}, support {}", t.support_size());
        prop_assert!(modality_within(&gp, 1e-12).k <= 2 * (k - 1));
    }
}

#[test]
fn support_bound_grows_with_n() {
    let sizes: Vec<f64> = (1..6)
        .map(|n| {
            support_size_bound(
                &LbTransform::new(n, 0.5, 0.1 / n as f64, 0.2 / n as f64, 2).unwrap(),
            )
        })
        .collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]));
}
