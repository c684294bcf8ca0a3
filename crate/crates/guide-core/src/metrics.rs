//! Ranking-quality metrics over anomaly scores: ROC curve/AUC, PR curve
//! with average precision, and Recall@K.
//!
//! Tied scores are always processed as one block, so every metric is
//! independent of sort stability. With ties handled that way the
//! trapezoidal ROC area equals the Mann–Whitney pairwise statistic with
//! half credit for ties.

use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("labels contain only one class; curve metrics are undefined")]
    SingleClass,
    #[error("K = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("scores and labels disagree in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score at node {0}")]
    NonFiniteScore(usize),
}

/// Per-node anomaly scores with the deterministic ranking they induce:
/// descending score, ties broken by ascending node id.
#[derive(Debug, Clone)]
pub struct ScoredRanking {
    scores: Vec<f64>,
    order: Vec<usize>,
}

impl ScoredRanking {
    pub fn new(scores: Vec<f64>) -> Result<Self, MetricsError> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(MetricsError::NonFiniteScore(i));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        Ok(Self { scores, order })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Node ids from most to least anomalous.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn score(&self, node: usize) -> f64 {
        self.scores[node]
    }
}

/// A curve as (x, y) points plus the area under it.
#[derive(Debug, Clone)]
pub struct CurvePoints {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl CurvePoints {
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut out = format!("{x_name},{y_name}\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

fn validate(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    Ok((positives, negatives))
}

/// Iterate the descending-score tie blocks of (positives, negatives).
fn tie_blocks(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let mut pos = 0;
        let mut neg = 0;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        blocks.push((pos, neg));
        i = j;
    }
    blocks
}

/// ROC curve (FPR, TPR) over the threshold sweep, with trapezoidal AUC.
/// Labels must contain at least one positive and one negative.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<(CurvePoints, f64), MetricsError> {
    let (positives, negatives) = validate(scores, labels)?;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = 0.0;
    let mut prev = (0.0, 0.0);
    for (pos, neg) in tie_blocks(scores, labels) {
        tp += pos;
        fp += neg;
        let point = (fp as f64 / negatives as f64, tp as f64 / positives as f64);
        auc += (point.0 - prev.0) * (point.1 + prev.1) / 2.0;
        points.push(point);
        prev = point;
    }
    Ok((CurvePoints { points, auc }, auc))
}

/// Precision–recall curve and average precision:
/// AP = Σ_k (R_k − R_{k−1})·P_k over descending-score tie blocks.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<(CurvePoints, f64), MetricsError> {
    let (positives, _) = validate(scores, labels)?;
    if positives == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (pos, neg) in tie_blocks(scores, labels) {
        tp += pos;
        seen += pos + neg;
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        points.push((recall, precision));
        prev_recall = recall;
    }
    Ok((CurvePoints { points, auc: ap }, ap))
}

/// Fraction of all true anomalies found in the top K of the ranking.
pub fn recall_at_k(
    ranking: &ScoredRanking,
    labels: &[u8],
    k: usize,
) -> Result<f64, MetricsError> {
    let n = ranking.len();
    if k < 1 || k > n {
        return Err(MetricsError::KOutOfRange { k, n });
    }
    if labels.len() != n {
        return Err(MetricsError::LengthMismatch {
            scores: n,
            labels: labels.len(),
        });
    }
    let total: usize = labels.iter().filter(|&&l| l == 1).count();
    if total == 0 {
        return Err(MetricsError::SingleClass);
    }
    let hits = ranking.order()[..k]
        .iter()
        .filter(|&&i| labels[i] == 1)
        .count();
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Mann–Whitney pairwise oracle with half credit for ties.
    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut correct = 0.0;
        let mut total = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                total += 1.0;
                if scores[i] > scores[j] {
                    correct += 1.0;
                } else if scores[i] == scores[j] {
                    correct += 0.5;
                }
            }
        }
        correct / total
    }

    #[test]
    fn roc_perfect_and_inverted() {
        let (_, auc) = roc_auc(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap();
        assert_eq!(auc, 1.0);
        let (_, auc) = roc_auc(&[0.1, 0.9], &[1, 0]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn roc_interleaved() {
        let (_, auc) = roc_auc(&[0.8, 0.7, 0.6, 0.5], &[1, 0, 1, 0]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn roc_single_class_is_error() {
        assert!(roc_auc(&[0.5, 0.4], &[1, 1]).is_err());
        assert!(roc_auc(&[0.5, 0.4], &[0, 0]).is_err());
    }

    #[test]
    fn roc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.gen_range(5..40);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..8) as f64) / 7.0)
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;
            let (_, auc) = roc_auc(&scores, &labels).unwrap();
            let oracle = pairwise_auc(&scores, &labels);
            assert!((auc - oracle).abs() <= 1e-12, "auc {auc} oracle {oracle}");
        }
    }

    #[test]
    fn ap_perfect_ranking() {
        let (_, ap) = pr_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_all_tied_equals_prevalence() {
        let (_, ap) = pr_auc(&[0.5; 8], &[1, 0, 0, 1, 0, 0, 0, 0]).unwrap();
        assert!((ap - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ap_hand_swept_example() {
        // P@1 = 1 at R = 1/2; P@3 = 2/3 at R = 1 → AP = 1/2 + 1/2·2/3.
        let (_, ap) = pr_auc(&[0.9, 0.8, 0.7], &[1, 0, 1]).unwrap();
        assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert!((ap - 0.8333).abs() < 1e-4);
    }

    #[test]
    fn ranking_order_ties_by_id() {
        let r = ScoredRanking::new(vec![0.5, 0.9, 0.5, 0.1]).unwrap();
        assert_eq!(r.order(), &[1, 0, 2, 3]);
    }

    #[test]
    fn recall_at_k_cases() {
        let r = ScoredRanking::new(vec![0.9, 0.8, 0.3, 0.2]).unwrap();
        let labels = [1, 1, 0, 0];
        assert_eq!(recall_at_k(&r, &labels, 2).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &labels, 1).unwrap(), 0.5);
        assert_eq!(recall_at_k(&r, &labels, 4).unwrap(), 1.0);
        assert!(recall_at_k(&r, &labels, 0).is_err());
        assert!(recall_at_k(&r, &labels, 5).is_err());
    }

    #[test]
    fn recall_monotone_and_caps_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.gen_range(6..30);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            let r = ScoredRanking::new(scores).unwrap();
            let mut prev = 0.0;
            for k in 1..=n {
                let v = recall_at_k(&r, &labels, k).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            assert_eq!(prev, 1.0);
        }
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(6..25);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..6) as f64) / 5.0)
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;
            // Strictly increasing map: x ↦ exp(2x) + x³.
            let mapped: Vec<f64> = scores.iter().map(|&s| (2.0 * s).exp() + s.powi(3)).collect();
            let (_, auc_a) = roc_auc(&scores, &labels).unwrap();
            let (_, auc_b) = roc_auc(&mapped, &labels).unwrap();
            assert!((auc_a - auc_b).abs() < 1e-12);
            let (_, ap_a) = pr_auc(&scores, &labels).unwrap();
            let (_, ap_b) = pr_auc(&mapped, &labels).unwrap();
            assert!((ap_a - ap_b).abs() < 1e-12);
            let ra = ScoredRanking::new(scores.clone()).unwrap();
            let rb = ScoredRanking::new(mapped).unwrap();
            for k in [1, n / 2, n] {
                if k >= 1 {
                    assert_eq!(
                        recall_at_k(&ra, &labels, k).unwrap(),
                        recall_at_k(&rb, &labels, k).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn curves_have_monotone_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let scores: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut labels: Vec<u8> = (0..30).map(|_| rng.gen_range(0..2) as u8).collect();
        labels[0] = 1;
        labels[1] = 0;
        let (roc, auc) = roc_auc(&scores, &labels).unwrap();
        assert!((0.0..=1.0).contains(&auc));
        for w in roc.points.windows(2) {
            assert!(w[1].0 >= w[0].0);
        }
        assert_eq!(*roc.points.first().unwrap(), (0.0, 0.0));
        assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
        let (pr, ap) = pr_auc(&scores, &labels).unwrap();
        assert!((0.0..=1.0).contains(&ap));
        for w in pr.points.windows(2) {
            assert!(w[1].0 >= w[0].0);
        }
    }
}
