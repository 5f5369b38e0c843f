//! Semantic relevance and ranking metrics.
//!
//! Relevance between two annotations is the mean of the verb-set and
//! noun-set Jaccard indices. mAP binarizes it at a threshold (1.0 by
//! default, i.e. identical class sets); nDCG uses it directly as a graded
//! gain over the full ranked list. Recall@K and Rsum only look at the paired
//! groundtruth item.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Annotation;

/// Mean of the verb and noun Jaccard indices, in `[0, 1]`.
///
/// # Panics
/// If either pair of sets has an empty union; valid corpora never do.
pub fn relevance(x: &Annotation, y: &Annotation) -> f64 {
    let jaccard = |a: &crate::corpus::ClassSet, b: &crate::corpus::ClassSet| {
        let union = a.union_len(b);
        assert!(union > 0, "relevance of empty class sets is undefined");
        a.intersection_len(b) as f64 / union as f64
    };
    0.5 * (jaccard(&x.verbs, &y.verbs) + jaccard(&x.nouns, &y.nouns))
}

/// How equal scores are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    AscendingGalleryId,
}

/// Gallery ids of one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query: usize,
    pub order: Vec<usize>,
    pub tie_policy: TiePolicy,
}

impl RankedResult {
    /// Rank by descending score, ties by ascending gallery id.
    pub fn from_scores(query: usize, scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        RankedResult {
            query,
            order,
            tie_policy: TiePolicy::AscendingGalleryId,
        }
    }
}

/// Mean over relevant items of precision at their rank; 0 with no relevant item.
pub fn average_precision(ranked: &[usize], relevant: &[bool]) -> f64 {
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &id) in ranked.iter().enumerate() {
        if relevant[id] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / total as f64
}

fn dcg(gains: impl Iterator<Item = f64>) -> f64 {
    gains.enumerate().map(|(k, g)| g / ((k + 2) as f64).log2()).sum()
}

/// Full-list nDCG with linear gains and a `log2(rank + 1)` discount.
/// Returns 0 when every gain is 0.
pub fn ndcg(ranked: &[usize], gains: &[f64]) -> f64 {
    let mut ideal = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(ideal.into_iter());
    if idcg <= 0.0 {
        return 0.0;
    }
    dcg(ranked.iter().map(|&id| gains[id])) / idcg
}

/// 1 if `groundtruth` is among the first `k` items.
pub fn recall_at_k(ranked: &[usize], groundtruth: usize, k: usize) -> f64 {
    if ranked.iter().take(k).any(|&id| id == groundtruth) {
        1.0
    } else {
        0.0
    }
}

/// Pairwise summation in index order, for averages that do not depend on
/// how per-query work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        pairwise_sum(values) / values.len() as f64
    }
}

/// Row-major similarity matrix, `rows` queries by `cols` gallery items.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "score matrix shape mismatch");
        ScoreMatrix { rows, cols, data }
    }

    /// `[i][j] = <queries[i], gallery[j]>`.
    pub fn from_embeddings(queries: &[Vec<f64>], gallery: &[Vec<f64>]) -> Self {
        let data = queries
            .par_iter()
            .flat_map_iter(|q| {
                gallery
                    .iter()
                    .map(move |g| q.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
            })
            .collect();
        ScoreMatrix::new(queries.len(), gallery.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let data = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        ScoreMatrix::new(self.cols, self.rows, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Relevance at or above which an item counts as relevant for mAP.
    pub map_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { map_threshold: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalDirection {
    T2v,
    V2t,
}

/// Query-averaged metrics for one direction. All values are fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionReport {
    #[serde(rename = "mAP")]
    pub map: f64,
    #[serde(rename = "nDCG")]
    pub ndcg: f64,
    #[serde(rename = "R@1")]
    pub r1: f64,
    #[serde(rename = "R@5")]
    pub r5: f64,
    #[serde(rename = "R@10")]
    pub r10: f64,
}

impl DirectionReport {
    fn average(a: &Self, b: &Self) -> Self {
        DirectionReport {
            map: 0.5 * (a.map + b.map),
            ndcg: 0.5 * (a.ndcg + b.ndcg),
            r1: 0.5 * (a.r1 + b.r1),
            r5: 0.5 * (a.r5 + b.r5),
            r10: 0.5 * (a.r10 + b.r10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub t2v: DirectionReport,
    pub v2t: DirectionReport,
    #[serde(rename = "t-v")]
    pub t_v: DirectionReport,
    /// Sum of recall@{1,5,10} in percent over both directions.
    #[serde(rename = "Rsum")]
    pub rsum: f64,
}

#[derive(Debug, Clone, Copy)]
struct QueryMetrics {
    ap: f64,
    ndcg: f64,
    r1: f64,
    r5: f64,
    r10: f64,
}

/// Metrics for one direction. Query `i`'s groundtruth is gallery item `i`.
pub fn evaluate_direction(
    scores: &ScoreMatrix,
    query_annotations: &[Annotation],
    gallery_annotations: &[Annotation],
    config: &EvalConfig,
) -> DirectionReport {
    assert_eq!(scores.rows(), query_annotations.len());
    assert_eq!(scores.cols(), gallery_annotations.len());
    let per_query: Vec<QueryMetrics> = (0..scores.rows())
        .into_par_iter()
        .map(|i| {
            let ranked = RankedResult::from_scores(i, scores.row(i));
            let gains: Vec<f64> = gallery_annotations
                .iter()
                .map(|g| relevance(&query_annotations[i], g))
                .collect();
            let relevant: Vec<bool> = gains.iter().map(|&g| g >= config.map_threshold).collect();
            QueryMetrics {
                ap: average_precision(&ranked.order, &relevant),
                ndcg: ndcg(&ranked.order, &gains),
                r1: recall_at_k(&ranked.order, i, 1),
                r5: recall_at_k(&ranked.order, i, 5),
                r10: recall_at_k(&ranked.order, i, 10),
            }
        })
        .collect();
    let column = |f: fn(&QueryMetrics) -> f64| mean(&per_query.iter().map(f).collect::<Vec<_>>());
    DirectionReport {
        map: column(|q| q.ap),
        ndcg: column(|q| q.ndcg),
        r1: column(|q| q.r1),
        r5: column(|q| q.r5),
        r10: column(|q| q.r10),
    }
}

/// Sum over both directions and K in {1, 5, 10} of recall@K, in percent.
pub fn rsum(t2v: &DirectionReport, v2t: &DirectionReport) -> f64 {
    100.0 * (t2v.r1 + t2v.r5 + t2v.r10 + v2t.r1 + v2t.r5 + v2t.r10)
}

/// Evaluate both directions from the text-to-video score matrix
/// (`[text i][video j]`); video-to-text uses its transpose.
pub fn evaluate(t2v_scores: &ScoreMatrix, annotations: &[Annotation], config: &EvalConfig) -> MetricReport {
    let t2v = evaluate_direction(t2v_scores, annotations, annotations, config);
    let v2t = evaluate_direction(&t2v_scores.transpose(), annotations, annotations, config);
    MetricReport {
        t2v,
        v2t,
        t_v: DirectionReport::average(&t2v, &v2t),
        rsum: rsum(&t2v, &v2t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(v: &[u32], n: &[u32]) -> Annotation {
        Annotation::new(v.to_vec(), n.to_vec()).unwrap()
    }

    #[test]
    fn relevance_examples() {
        let x = ann(&[1], &[3]);
        assert_eq!(relevance(&x, &x), 1.0);
        assert_eq!(relevance(&ann(&[1], &[3]), &ann(&[2], &[4])), 0.0);
        assert_eq!(relevance(&ann(&[1], &[3]), &ann(&[1, 2], &[3])), 0.75);
    }

    #[test]
    fn average_precision_closed_forms() {
        assert_eq!(average_precision(&[0, 1, 2, 3], &[true, true, false, false]), 1.0);
        for r in 1..=6 {
            let mut relevant = vec![false; 6];
            relevant[r - 1] = true;
            let ranked: Vec<usize> = (0..6).collect();
            assert!((average_precision(&ranked, &relevant) - 1.0 / r as f64).abs() < 1e-15);
        }
        assert_eq!(average_precision(&[0, 1], &[false, false]), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        let gains = [1.0, 0.5, 0.0];
        assert_eq!(ndcg(&[0, 1, 2], &gains), 1.0);
        // Presented as (0.0, 1.0, 0.5).
        let value = ndcg(&[2, 0, 1], &gains);
        assert!((value - 0.6696).abs() < 1e-4, "{value}");
        let uniform = [0.3; 4];
        assert!((ndcg(&[3, 1, 0, 2], &uniform) - 1.0).abs() < 1e-12);
        assert_eq!(ndcg(&[0, 1], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn recall_examples() {
        let ranked: Vec<usize> = (0..12).collect();
        assert_eq!(recall_at_k(&ranked, 0, 1), 1.0);
        assert_eq!(recall_at_k(&ranked, 5, 5), 0.0);
        assert_eq!(recall_at_k(&ranked, 5, 10), 1.0);
    }

    #[test]
    fn perfect_retrieval_rsum_is_600() {
        let anns: Vec<_> = (0..4).map(|i| ann(&[i], &[i])).collect();
        let eye: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let report = evaluate(&ScoreMatrix::new(4, 4, eye), &anns, &EvalConfig::default());
        assert_eq!(report.rsum, 600.0);
        assert_eq!(report.t_v.map, 1.0);
        assert_eq!(report.t_v.ndcg, 1.0);
    }

    #[test]
    fn single_class_corpus_is_all_relevant() {
        let anns = vec![ann(&[0], &[0]); 5];
        let eye: Vec<f64> = (0..25).map(|k| if k % 6 == 0 { 1.0 } else { 0.0 }).collect();
        let report = evaluate(&ScoreMatrix::new(5, 5, eye), &anns, &EvalConfig::default());
        assert_eq!(report.t2v.map, 1.0);
        assert_eq!(report.v2t.ndcg, 1.0);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let ranked = RankedResult::from_scores(0, &[0.5, 0.9, 0.5, 0.9]);
        assert_eq!(ranked.order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_integers() {
        let v: Vec<f64> = (0..37).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 666.0);
    }

    #[test]
    fn report_json_layout() {
        let anns = vec![ann(&[0], &[0]); 2];
        let report = evaluate(
            &ScoreMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            &anns,
            &EvalConfig::default(),
        );
        let json = serde_json::to_value(report).unwrap();
        for dir in ["t2v", "v2t", "t-v"] {
            for key in ["mAP", "nDCG", "R@1", "R@5", "R@10"] {
                assert!(json[dir][key].is_number(), "{dir}.{key}");
            }
        }
        assert!(json["Rsum"].is_number());
    }
}
