mod common;

use cmaug::corpus::Annotation;
use cmaug::metrics::{self, evaluate, relevance, EvalConfig, ScoreMatrix};
use cmaug::rng::{stream_rng, Rng};
use proptest::prelude::*;
use rand::Rng as _;

fn random_annotation(rng: &mut Rng, verbs: u32, nouns: u32) -> Annotation {
    let mut pick = |k: u32, max: usize| -> Vec<u32> {
        let n = rng.random_range(1..=max);
        (0..n).map(|_| rng.random_range(0..k)).collect()
    };
    let v = pick(verbs, 2);
    let n = pick(nouns, 3);
    Annotation::new(v, n).unwrap()
}

/// Scores on a coarse grid so that ties are common.
fn random_scores(rng: &mut Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..n).map(|_| f64::from(rng.random_range(-4i32..=4)) / 4.0).collect())
        .collect()
}

fn check_report(scores: &[Vec<f64>], anns: &[Annotation], threshold: f64) {
    let n = scores.len();
    let flat: Vec<f64> = scores.iter().flatten().copied().collect();
    let report = evaluate(
        &ScoreMatrix::new(n, n, flat),
        anns,
        &EvalConfig {
            map_threshold: threshold,
        },
    );
    let t2v = common::direction_metrics(scores, anns, threshold);
    let v2t = common::direction_metrics(&common::transpose(scores), anns, threshold);
    for (got, want) in [(&report.t2v, t2v), (&report.v2t, v2t)] {
        let got = [got.map, got.ndcg, got.r1, got.r5, got.r10];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-9, "{got:?} vs {want:?}");
        }
    }
    let rsum = 100.0 * (t2v[2] + t2v[3] + t2v[4] + v2t[2] + v2t[3] + v2t[4]);
    assert!((report.rsum - rsum).abs() <= 1e-7);
    assert!((report.t_v.ndcg - (t2v[1] + v2t[1]) / 2.0).abs() <= 1e-9);
}

#[test]
fn evaluate_matches_brute_force() {
    let mut rng = stream_rng(11, 0);
    for _ in 0..200 {
        let n = rng.random_range(1..=25);
        let anns: Vec<_> = (0..n).map(|_| random_annotation(&mut rng, 4, 6)).collect();
        let scores = random_scores(&mut rng, n);
        check_report(&scores, &anns, 1.0);
        check_report(&scores, &anns, 0.5);
    }
}

#[test]
fn relevance_examples() {
    let a = |v: Vec<u32>, n: Vec<u32>| Annotation::new(v, n).unwrap();
    assert_eq!(relevance(&a(vec![0], vec![1]), &a(vec![0], vec![1])), 1.0);
    assert_eq!(relevance(&a(vec![0], vec![1]), &a(vec![2], vec![3])), 0.0);
    assert_eq!(relevance(&a(vec![0], vec![1]), &a(vec![0], vec![1, 2])), 0.75);
}

#[test]
fn relevance_symmetric_and_reflexive() {
    let mut rng = stream_rng(12, 0);
    for _ in 0..10_000 {
        let x = random_annotation(&mut rng, 5, 8);
        let y = random_annotation(&mut rng, 5, 8);
        let r = relevance(&x, &y);
        assert_eq!(r, relevance(&y, &x));
        assert_eq!(relevance(&x, &x), 1.0);
        assert!((0.0..=1.0).contains(&r));
        assert!((r - common::relevance(&x, &y)).abs() <= 1e-15);
    }
}

#[test]
fn relevance_sorted_scores_give_perfect_ndcg() {
    let mut rng = stream_rng(13, 0);
    for _ in 0..50 {
        let n = rng.random_range(2..=25);
        let anns: Vec<_> = (0..n).map(|_| random_annotation(&mut rng, 3, 4)).collect();
        let scores: Vec<f64> = (0..n)
            .flat_map(|i| anns.iter().map(|g| relevance(&anns[i], g)).collect::<Vec<_>>())
            .collect();
        let report = evaluate(&ScoreMatrix::new(n, n, scores), &anns, &EvalConfig::default());
        assert!((report.t2v.ndcg - 1.0).abs() <= 1e-12);
    }
}

fn annotation_strategy() -> impl Strategy<Value = Annotation> {
    (
        prop::collection::vec(0u32..3, 1..3),
        prop::collection::vec(0u32..4, 1..3),
    )
        .prop_map(|(v, n)| Annotation::new(v, n).unwrap())
}

proptest! {
    #[test]
    fn relabeling_gallery_ids_keeps_metrics(
        anns in prop::collection::vec(annotation_strategy(), 2..12),
        seed in any::<u64>(),
    ) {
        // Distinct scores make the ranking independent of ids.
        let n = anns.len();
        let mut rng = stream_rng(seed, 0);
        let scores: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut rng);
            p
        };
        for i in 0..n {
            let row = &scores[i * n..(i + 1) * n];
            let gains: Vec<f64> = anns.iter().map(|g| relevance(&anns[i], g)).collect();
            let relevant: Vec<bool> = gains.iter().map(|&g| g >= 1.0).collect();
            let ranked = metrics::RankedResult::from_scores(i, row).order;
            let permuted_row: Vec<f64> = (0..n).map(|k| row[perm[k]]).collect();
            let permuted_gains: Vec<f64> = (0..n).map(|k| gains[perm[k]]).collect();
            let permuted_rel: Vec<bool> = (0..n).map(|k| relevant[perm[k]]).collect();
            let permuted = metrics::RankedResult::from_scores(i, &permuted_row).order;
            prop_assert_eq!(
                metrics::ndcg(&ranked, &gains),
                metrics::ndcg(&permuted, &permuted_gains)
            );
            prop_assert_eq!(
                metrics::average_precision(&ranked, &relevant),
                metrics::average_precision(&permuted, &permuted_rel)
            );
        }
    }

    #[test]
    fn lower_threshold_never_shrinks_relevant_sets(
        anns in prop::collection::vec(annotation_strategy(), 2..12),
        low in 0.0f64..1.0,
    ) {
        for x in &anns {
            let count = |t: f64| anns.iter().filter(|y| relevance(x, y) >= t).count();
            prop_assert!(count(low) >= count(1.0));
        }
    }

    #[test]
    fn metrics_are_bounded(
        anns in prop::collection::vec(annotation_strategy(), 1..15),
        seed in any::<u64>(),
    ) {
        let n = anns.len();
        let mut rng = stream_rng(seed, 1);
        let scores: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let report = evaluate(&ScoreMatrix::new(n, n, scores), &anns, &EvalConfig::default());
        for d in [&report.t2v, &report.v2t, &report.t_v] {
            for m in [d.map, d.ndcg, d.r1, d.r5, d.r10] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
            }
        }
        prop_assert!(report.rsum <= 600.0 + 1e-9);
    }
}
