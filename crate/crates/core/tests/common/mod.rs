//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code paths it checks.
#![allow(dead_code)]

use std::collections::HashSet;

use cmaug::corpus::{Annotation, Corpus};
use cmaug::rng::Rng;
use cmaug::trainer::{contrastive_loss, BatchItem, DualEncoder, Mining};

pub fn jaccard(a: &[u32], b: &[u32]) -> f64 {
    let a: HashSet<_> = a.iter().collect();
    let b: HashSet<_> = b.iter().collect();
    a.intersection(&b).count() as f64 / a.union(&b).count() as f64
}

pub fn relevance(x: &Annotation, y: &Annotation) -> f64 {
    (jaccard(x.verbs.as_slice(), y.verbs.as_slice()) + jaccard(x.nouns.as_slice(), y.nouns.as_slice())) / 2.0
}

/// Position of gallery item `j` for a query: items with a higher score, or
/// an equal score and a smaller id, come first.
pub fn rank_of(scores: &[f64], j: usize) -> usize {
    (0..scores.len())
        .filter(|&k| scores[k] > scores[j] || (scores[k] == scores[j] && k < j))
        .count()
}

/// Ranking by repeated selection of the best remaining item.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut out = vec![0; scores.len()];
    for j in 0..scores.len() {
        out[rank_of(scores, j)] = j;
    }
    out
}

/// AP straight from the definition: precision@k recomputed from scratch at
/// every relevant position.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> f64 {
    let order = ranking(scores);
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=order.len() {
        if relevant[order[k - 1]] {
            let hits = order[..k].iter().filter(|&&j| relevant[j]).count();
            sum += hits as f64 / k as f64;
        }
    }
    sum / total as f64
}

pub fn ndcg(scores: &[f64], gains: &[f64]) -> f64 {
    let order = ranking(scores);
    let dcg: f64 = order
        .iter()
        .enumerate()
        .map(|(k, &j)| gains[j] / ((k + 2) as f64).log2())
        .sum();
    // Ideal order by selection sort on the gains.
    let mut remaining: Vec<f64> = gains.to_vec();
    let mut idcg = 0.0;
    for k in 0..gains.len() {
        let (best, _) = remaining.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc },
        );
        idcg += remaining[best] / ((k + 2) as f64).log2();
        remaining[best] = f64::NEG_INFINITY;
        if remaining.iter().all(|g| *g == f64::NEG_INFINITY) {
            break;
        }
    }
    if idcg <= 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

pub fn recall_at(scores: &[f64], groundtruth: usize, k: usize) -> f64 {
    if rank_of(scores, groundtruth) < k {
        1.0
    } else {
        0.0
    }
}

/// Per-direction (mAP, nDCG, R@1, R@5, R@10) by brute force, for a
/// `[query][gallery]` matrix with groundtruth on the diagonal.
pub fn direction_metrics(scores: &[Vec<f64>], anns: &[Annotation], threshold: f64) -> [f64; 5] {
    let n = scores.len() as f64;
    let mut acc = [0.0; 5];
    for (i, row) in scores.iter().enumerate() {
        let gains: Vec<f64> = anns.iter().map(|g| relevance(&anns[i], g)).collect();
        let rel: Vec<bool> = gains.iter().map(|&g| g >= threshold).collect();
        acc[0] += average_precision(row, &rel);
        acc[1] += ndcg(row, &gains);
        acc[2] += recall_at(row, i, 1);
        acc[3] += recall_at(row, i, 5);
        acc[4] += recall_at(row, i, 10);
    }
    acc.map(|a| a / n)
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

/// Brute-force scan of the selection predicate over every sample.
pub fn brute_candidates(
    corpus: &Corpus,
    verb_kind: bool,
    class: u32,
    anchor: u32,
    fine: bool,
    exclude_self: bool,
) -> Vec<u32> {
    let a = &corpus.samples()[anchor as usize].annotation;
    corpus
        .samples()
        .iter()
        .filter(|w| {
            let (own, other_w, other_a) = if verb_kind {
                (&w.annotation.verbs, &w.annotation.nouns, &a.nouns)
            } else {
                (&w.annotation.nouns, &w.annotation.verbs, &a.verbs)
            };
            let has = own.as_slice().contains(&class);
            let shares = other_w.as_slice().iter().any(|c| other_a.as_slice().contains(c));
            has && (!fine || shares) && !(exclude_self && w.id == anchor)
        })
        .map(|w| w.id)
        .collect()
}

/// Central finite differences of the batch loss with respect to every
/// encoder parameter. The mining rng is cloned for each evaluation so that
/// random negatives are identical across perturbations.
pub fn numeric_gradient(
    encoder: &DualEncoder,
    batch: &[BatchItem<'_>],
    mining: Mining,
    margin: f64,
    rng: &Rng,
    step: f64,
) -> Vec<f64> {
    let loss_at = |enc: &DualEncoder| {
        contrastive_loss(enc, batch, mining, margin, &mut rng.clone())
            .unwrap()
            .loss
    };
    let count = encoder.num_params();
    (0..count)
        .map(|k| {
            let mut plus = encoder.clone();
            let mut minus = encoder.clone();
            *plus.params_mut().nth(k).unwrap() += step;
            *minus.params_mut().nth(k).unwrap() -= step;
            (loss_at(&plus) - loss_at(&minus)) / (2.0 * step)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Pearson chi-square statistic of `values` in `[0, 1]` against the
/// uniform distribution over `bins` equal bins.
pub fn uniform_chi_square(values: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Corpus with arbitrary multi-label annotations over `verbs` x `nouns`
/// single-word classes named `v{i}` and `n{i}`.
pub fn random_corpus(rng: &mut Rng, samples: usize, verbs: u32, nouns: u32, dim: usize) -> Corpus {
    use cmaug::corpus::{PairedSample, SemanticClassTable, Split};
    use rand::Rng as _;
    let table = SemanticClassTable::new(
        (0..verbs).map(|i| vec![format!("v{i}")]).collect(),
        (0..nouns).map(|i| vec![format!("n{i}")]).collect(),
    )
    .unwrap();
    let samples = (0..samples)
        .map(|id| {
            let vs: Vec<u32> = (0..rng.random_range(1..=2))
                .map(|_| rng.random_range(0..verbs))
                .collect();
            let ns: Vec<u32> = (0..rng.random_range(1..=3))
                .map(|_| rng.random_range(0..nouns))
                .collect();
            let annotation = Annotation::new(vs, ns).unwrap();
            let caption_tokens = annotation
                .verbs
                .iter()
                .map(|c| format!("v{c}"))
                .chain(annotation.nouns.iter().map(|c| format!("n{c}")))
                .collect();
            PairedSample {
                id: id as u32,
                caption_tokens,
                video_feat: (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                annotation,
            }
        })
        .collect();
    Corpus::new(samples, table, dim, Split::Train).unwrap()
}
