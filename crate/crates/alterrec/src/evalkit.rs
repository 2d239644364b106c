//! Ranking metrics (Hits@N, NDCG@N), long-tail popularity-group analysis,
//! and sweep utilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Session;
use crate::error::{Error, Result};
use crate::scoring::ScoreVector;

/// 1-based rank of the target under descending scores with ascending-index
/// tie-break: 1 + |{i : y_i > y_t}| + |{i < t : y_i = y_t}|.
pub fn target_rank(scores: &ScoreVector, target: usize) -> Result<usize> {
    if target >= scores.len() {
        return Err(Error::Invalid(format!(
            "target {target} outside catalog of {}",
            scores.len()
        )));
    }
    if let Some(bad) = scores.0.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let yt = scores.0[target];
    let mut rank = 1usize;
    for (i, &y) in scores.0.iter().enumerate() {
        if y > yt || (y == yt && i < target) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Fraction of sessions whose target rank is within the top N.
pub fn hits_at_n(ranks: &[usize], n: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Invalid("hits@N over an empty rank list".into()));
    }
    Ok(ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64)
}

/// Mean of 1/log₂(rank+1) over sessions with rank ≤ N, zero otherwise
/// (single relevant item, so the ideal DCG is 1).
pub fn ndcg_at_n(ranks: &[usize], n: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Invalid("ndcg@N over an empty rank list".into()));
    }
    let sum: f64 = ranks
        .iter()
        .map(|&r| {
            if r <= n {
                1.0 / ((r as f64) + 1.0).log2()
            } else {
                0.0
            }
        })
        .sum();
    Ok(sum / ranks.len() as f64)
}

/// Score every session with `score_fn` and return the target ranks, in
/// session order. Scoring is parallel; results are position-stable.
pub fn ranks_for_sessions<F>(sessions: &[Session], score_fn: F) -> Result<Vec<usize>>
where
    F: Fn(&Session) -> Result<ScoreVector> + Sync,
{
    sessions
        .par_iter()
        .map(|s| target_rank(&score_fn(s)?, s.target))
        .collect()
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Aggregated ranking quality for one evaluation split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingReport {
    #[serde(rename = "hits@10")]
    pub hits10: f64,
    #[serde(rename = "hits@20")]
    pub hits20: f64,
    #[serde(rename = "ndcg@10")]
    pub ndcg10: f64,
    #[serde(rename = "ndcg@20")]
    pub ndcg20: f64,
    pub n_sessions: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub buckets: Vec<BucketReport>,
}

impl RankingReport {
    pub fn from_ranks(ranks: &[usize]) -> Result<Self> {
        Ok(RankingReport {
            hits10: hits_at_n(ranks, 10)?,
            hits20: hits_at_n(ranks, 20)?,
            ndcg10: ndcg_at_n(ranks, 10)?,
            ndcg20: ndcg_at_n(ranks, 20)?,
            n_sessions: ranks.len(),
            buckets: Vec::new(),
        })
    }
}

/// One popularity group of the long-tail breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketReport {
    /// inclusive upper popularity bound; None for the open last bucket
    pub upper: Option<u64>,
    pub proportion: f64,
    pub n_sessions: usize,
    pub hits20: f64,
    pub ndcg20: f64,
    /// hits20 relative to a baseline report's same bucket, when supplied
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hits20_ratio_vs_baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg20_ratio_vs_baseline: Option<f64>,
}

/// Bucket index for a target popularity given ordered inclusive upper edges
/// (e.g. [30, 100] → buckets [0,30], (30,100], (100,∞)).
pub fn bucket_of(popularity: u64, edges: &[u64]) -> usize {
    edges
        .iter()
        .position(|&e| popularity <= e)
        .unwrap_or(edges.len())
}

/// Long-tail breakdown: assigns each test session to the popularity bucket
/// of its target (train popularity), reporting per-bucket proportion,
/// Hits@20, NDCG@20, and ratios against an optional baseline.
pub fn long_tail_report(
    test_sessions: &[Session],
    test_ranks: &[usize],
    popularity: &[u64],
    edges: &[u64],
    baseline: Option<&[BucketReport]>,
) -> Result<Vec<BucketReport>> {
    if test_sessions.len() != test_ranks.len() {
        return Err(Error::Shape(format!(
            "{} sessions but {} ranks",
            test_sessions.len(),
            test_ranks.len()
        )));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!(
            "bucket edges must be strictly increasing: {edges:?}"
        )));
    }
    let n_buckets = edges.len() + 1;
    let mut grouped: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
    for (session, &rank) in test_sessions.iter().zip(test_ranks) {
        let pop = popularity[session.target];
        grouped[bucket_of(pop, edges)].push(rank);
    }
    let total = test_ranks.len() as f64;
    let mut out = Vec::with_capacity(n_buckets);
    for (bi, ranks) in grouped.iter().enumerate() {
        let (hits20, ndcg20) = if ranks.is_empty() {
            (0.0, 0.0)
        } else {
            (hits_at_n(ranks, 20)?, ndcg_at_n(ranks, 20)?)
        };
        let base = baseline.and_then(|b| b.get(bi));
        let ratio = |ours: f64, theirs: Option<f64>| {
            theirs.and_then(|t| if t > 0.0 { Some(ours / t) } else { None })
        };
        out.push(BucketReport {
            upper: edges.get(bi).copied(),
            proportion: ranks.len() as f64 / total,
            n_sessions: ranks.len(),
            hits20,
            ndcg20,
            hits20_ratio_vs_baseline: ratio(hits20, base.map(|b| b.hits20)),
            ndcg20_ratio_vs_baseline: ratio(ndcg20, base.map(|b| b.ndcg20)),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// inference blend weight; re-scores only, no retraining
    Alpha,
    /// hard-negative window end; retrains per value
    K2,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "k2" => Ok(SweepParam::K2),
            other => Err(Error::Invalid(format!(
                "unknown sweep parameter '{other}' (expected alpha or k2)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub hits20: f64,
    pub ndcg20: f64,
}

/// Evaluate `eval_fn` at each value and collect `(value, hits@20, ndcg@20)`
/// rows. The caller supplies evaluation-only or retrain-and-evaluate
/// closures depending on the parameter.
pub fn sweep<F>(values: &[f64], mut eval_fn: F) -> Result<Vec<SweepRow>>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let (hits20, ndcg20) = eval_fn(value)?;
        rows.push(SweepRow {
            value,
            hits20,
            ndcg20,
        });
    }
    Ok(rows)
}

/// CSV serialization of sweep rows: header `value,hits20,ndcg20`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,hits20,ndcg20\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.value, row.hits20, row.ndcg20));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::rank_descending;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn target_rank_examples() {
        let y = ScoreVector(vec![0.1, 0.9, 0.5, 0.3]);
        assert_eq!(target_rank(&y, 1).unwrap(), 1); // strictly highest
        assert_eq!(target_rank(&y, 3).unwrap(), 3);
        let ties = ScoreVector(vec![0.5; 4]);
        assert_eq!(target_rank(&ties, 0).unwrap(), 1);
        assert_eq!(target_rank(&ties, 3).unwrap(), 4);
    }

    #[test]
    fn target_rank_agrees_with_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let scores = ScoreVector(
                (0..n)
                    .map(|_| (rng.gen_range(-5i32..5) as f64) * 0.25)
                    .collect(),
            );
            let target = rng.gen_range(0..n);
            let ranking = rank_descending(&scores).unwrap();
            let expect = ranking.iter().position(|&i| i == target).unwrap() + 1;
            assert_eq!(target_rank(&scores, target).unwrap(), expect);
        }
    }

    #[test]
    fn hits_examples() {
        assert_eq!(hits_at_n(&[1, 1, 1], 10).unwrap(), 1.0);
        assert_eq!(hits_at_n(&[5, 25], 20).unwrap(), 0.5);
        assert!(hits_at_n(&[], 10).is_err());
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_n(&[1], 10).unwrap(), 1.0); // 1/log₂(2)
        let v = ndcg_at_n(&[4], 10).unwrap();
        assert!((v - 1.0 / 5.0f64.log2()).abs() < 1e-12); // ≈ 0.43068
        assert!((v - 0.43068).abs() < 1e-5);
        assert_eq!(ndcg_at_n(&[25], 20).unwrap(), 0.0);
    }

    #[test]
    fn metrics_match_brute_force_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let n = rng.gen_range(1..30);
            let ranks: Vec<usize> = (0..n).map(|_| rng.gen_range(1..60)).collect();
            let cutoff = rng.gen_range(1..30);
            // independent recount
            let mut hits = 0usize;
            let mut ndcg = 0.0f64;
            for &r in &ranks {
                if r <= cutoff {
                    hits += 1;
                    ndcg += 1.0 / ((r + 1) as f64).log2();
                }
            }
            let expect_hits = hits as f64 / n as f64;
            let expect_ndcg = ndcg / n as f64;
            assert!((hits_at_n(&ranks, cutoff).unwrap() - expect_hits).abs() < 1e-12);
            assert!((ndcg_at_n(&ranks, cutoff).unwrap() - expect_ndcg).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn ndcg_bounded_by_hits_and_monotone_in_n(
            ranks in proptest::collection::vec(1usize..100, 1..50),
            n in 1usize..60,
        ) {
            let hits = hits_at_n(&ranks, n).unwrap();
            let ndcg = ndcg_at_n(&ranks, n).unwrap();
            prop_assert!(0.0 <= ndcg && ndcg <= hits && hits <= 1.0);
            let hits_next = hits_at_n(&ranks, n + 1).unwrap();
            let ndcg_next = ndcg_at_n(&ranks, n + 1).unwrap();
            prop_assert!(hits_next >= hits);
            prop_assert!(ndcg_next >= ndcg);
        }

        #[test]
        fn metrics_invariant_under_permutation(
            ranks in proptest::collection::vec(1usize..100, 2..40),
        ) {
            let mut shuffled = ranks.clone();
            shuffled.reverse();
            prop_assert_eq!(hits_at_n(&ranks, 20).unwrap(), hits_at_n(&shuffled, 20).unwrap());
            // summation order differs, so compare up to rounding
            let a = ndcg_at_n(&ranks, 20).unwrap();
            let b = ndcg_at_n(&shuffled, 20).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    fn session_with_target(t: usize) -> Session {
        Session::new(vec![0], t)
    }

    #[test]
    fn single_open_bucket_equals_global_metrics() {
        let sessions: Vec<Session> = (0..4).map(session_with_target).collect();
        let ranks = vec![1, 5, 30, 2];
        let pop = vec![3u64, 50, 7, 200];
        let buckets = long_tail_report(&sessions, &ranks, &pop, &[], None).unwrap();
        assert_eq!(buckets.len(), 1);
        assert_eq!(buckets[0].n_sessions, 4);
        assert_eq!(buckets[0].hits20, hits_at_n(&ranks, 20).unwrap());
        assert_eq!(buckets[0].ndcg20, ndcg_at_n(&ranks, 20).unwrap());
        assert_eq!(buckets[0].proportion, 1.0);
    }

    #[test]
    fn boundary_popularity_falls_in_lower_bucket() {
        assert_eq!(bucket_of(30, &[30, 100]), 0); // inclusive upper edge
        assert_eq!(bucket_of(31, &[30, 100]), 1);
        assert_eq!(bucket_of(100, &[30, 100]), 1);
        assert_eq!(bucket_of(101, &[30, 100]), 2);
        assert_eq!(bucket_of(0, &[30, 100]), 0);
    }

    #[test]
    fn bucket_proportions_match_direct_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pop: Vec<u64> = (0..50).map(|_| rng.gen_range(0..300)).collect();
        let sessions: Vec<Session> = (0..200)
            .map(|_| session_with_target(rng.gen_range(0..50)))
            .collect();
        let ranks: Vec<usize> = (0..200).map(|_| rng.gen_range(1..50)).collect();
        let edges = [30u64, 100];
        let report = long_tail_report(&sessions, &ranks, &pop, &edges, None).unwrap();
        // recount
        let mut tally = [0usize; 3];
        for s in &sessions {
            tally[bucket_of(pop[s.target], &edges)] += 1;
        }
        let mut prop_sum = 0.0;
        for (bi, b) in report.iter().enumerate() {
            assert_eq!(b.n_sessions, tally[bi]);
            assert!((b.proportion - tally[bi] as f64 / 200.0).abs() < 1e-12);
            prop_sum += b.proportion;
        }
        assert!((prop_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unordered_edges_rejected() {
        let sessions = vec![session_with_target(0)];
        assert!(long_tail_report(&sessions, &[1], &[5], &[100, 30], None).is_err());
    }

    #[test]
    fn sweep_rows_and_csv_schema() {
        let mut calls = 0;
        let rows = sweep(&[0.1, 0.5, 0.9], |v| {
            calls += 1;
            Ok((v, v / 2.0))
        })
        .unwrap();
        assert_eq!(calls, 3);
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "value,hits20,ndcg20");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "0.5,0.5,0.25");
    }
}
