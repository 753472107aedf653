//! Retrieval evaluation: average precision, top-k precision,
//! precision-recall curves, and hash-lookup success rate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabelSet;
use crate::retrieval::{lookup_within_radius, rank, PackedCodes, Ranking, RetrievalError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cutoff {k} exceeds ranking length {len}")]
    CutoffOutOfRange { k: usize, len: usize },
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("no relevant items in the database for query {query}")]
    NoRelevant { query: usize },
    #[error("query/database size mismatch: {0}")]
    SizeMismatch(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// Ground-truth relevance: a database point is relevant to a query iff
/// their label sets intersect.
#[derive(Debug, Clone)]
pub struct RelevanceJudge {
    query_labels: LabelSet,
    db_labels: LabelSet,
}

impl RelevanceJudge {
    pub fn new(query_labels: LabelSet, db_labels: LabelSet) -> Self {
        Self {
            query_labels,
            db_labels,
        }
    }

    pub fn num_queries(&self) -> usize {
        self.query_labels.n()
    }

    pub fn db_size(&self) -> usize {
        self.db_labels.n()
    }

    pub fn relevant(&self, query: usize, db_id: usize) -> bool {
        let q = self.query_labels.get(query);
        let d = self.db_labels.get(db_id);
        let (mut a, mut b) = (q.iter(), d.iter());
        let (mut x, mut y) = (a.next(), b.next());
        while let (Some(u), Some(v)) = (x, y) {
            match u.cmp(v) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => x = a.next(),
                std::cmp::Ordering::Greater => y = b.next(),
            }
        }
        false
    }

    /// Number of relevant database points for the query.
    pub fn total_relevant(&self, query: usize) -> usize {
        (0..self.db_labels.n())
            .filter(|&d| self.relevant(query, d))
            .count()
    }
}

/// Average precision over a ranked relevance list. With a cutoff K the
/// sum runs over the first min(N, K) positions and the normalizer is
/// min(total_relevant, K); untruncated, it is total_relevant. Returns 0
/// when the normalizer is 0.
pub fn average_precision(ranked_relevance: &[bool], total_relevant: usize, k: Option<usize>) -> f64 {
    let n = match k {
        Some(k) => ranked_relevance.len().min(k),
        None => ranked_relevance.len(),
    };
    let normalizer = match k {
        Some(_) => total_relevant.min(n),
        None => total_relevant,
    };
    if normalizer == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, &rel) in ranked_relevance.iter().take(n).enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    sum / normalizer as f64
}

fn relevance_of(ranking: &Ranking, judge: &RelevanceJudge) -> Vec<bool> {
    ranking
        .entries
        .iter()
        .map(|&(id, _)| judge.relevant(ranking.query_id, id))
        .collect()
}

/// Mean of per-query average precision.
pub fn mean_average_precision(
    rankings: &[Ranking],
    judge: &RelevanceJudge,
    k: Option<usize>,
) -> Result<f64, MetricsError> {
    if rankings.is_empty() {
        return Err(MetricsError::NoQueries);
    }
    let mut total = 0.0;
    for ranking in rankings {
        let rel = relevance_of(ranking, judge);
        total += average_precision(&rel, judge.total_relevant(ranking.query_id), k);
    }
    Ok(total / rankings.len() as f64)
}

/// precision@k = relevant-in-top-k / k for each requested k.
pub fn topk_precision(
    ranking: &Ranking,
    judge: &RelevanceJudge,
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, MetricsError> {
    let rel = relevance_of(ranking, judge);
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 || k > rel.len() {
            return Err(MetricsError::CutoffOutOfRange { k, len: rel.len() });
        }
        let hits = rel.iter().take(k).filter(|&&r| r).count();
        out.push((k, hits as f64 / k as f64));
    }
    Ok(out)
}

/// One (recall, precision) point per ranking cutoff, no interpolation.
pub fn precision_recall_curve(
    ranking: &Ranking,
    judge: &RelevanceJudge,
) -> Result<Vec<(f64, f64)>, MetricsError> {
    let total = judge.total_relevant(ranking.query_id);
    if total == 0 {
        return Err(MetricsError::NoRelevant {
            query: ranking.query_id,
        });
    }
    let rel = relevance_of(ranking, judge);
    let mut hits = 0usize;
    let mut curve = Vec::with_capacity(rel.len());
    for (pos, &r) in rel.iter().enumerate() {
        if r {
            hits += 1;
        }
        curve.push((hits as f64 / total as f64, hits as f64 / (pos + 1) as f64));
    }
    Ok(curve)
}

/// Fraction of queries retrieving at least one relevant point within the
/// Hamming radius.
pub fn success_rate(
    queries: &PackedCodes,
    db: &PackedCodes,
    judge: &RelevanceJudge,
    radius: u32,
) -> Result<f64, MetricsError> {
    if queries.n() == 0 {
        return Err(MetricsError::NoQueries);
    }
    if queries.c() != db.c() {
        return Err(MetricsError::SizeMismatch(format!(
            "query codes have {} bits, database {}",
            queries.c(),
            db.c()
        )));
    }
    let mut successes = 0usize;
    for q in 0..queries.n() {
        let hits = lookup_within_radius(queries.row(q), db, radius)?;
        if hits.iter().any(|&id| judge.relevant(q, id)) {
            successes += 1;
        }
    }
    Ok(successes as f64 / queries.n() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopkPoint {
    pub k: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Aggregated evaluation of a query set against a database.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub map: f64,
    pub map_at: Option<usize>,
    pub per_query_ap: Vec<f64>,
    pub topk: Vec<TopkPoint>,
    pub pr: Vec<PrPoint>,
    /// Success rate keyed by Hamming radius.
    pub sr: BTreeMap<u32, f64>,
}

/// Evaluation knobs: which cutoffs and radii to report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalKnobs {
    pub ks: Vec<usize>,
    pub radii: Vec<u32>,
    pub map_at: Option<usize>,
}

impl Default for EvalKnobs {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 10],
            radii: vec![0, 1, 2],
            map_at: None,
        }
    }
}

/// Rank every query against the database and aggregate all metrics.
/// Top-k precision and PR points are averaged over queries per cutoff.
pub fn evaluate(
    queries: &PackedCodes,
    query_labels: &LabelSet,
    db: &PackedCodes,
    db_labels: &LabelSet,
    knobs: &EvalKnobs,
) -> Result<RetrievalReport, MetricsError> {
    if queries.n() != query_labels.n() {
        return Err(MetricsError::SizeMismatch(format!(
            "{} query codes vs {} query labels",
            queries.n(),
            query_labels.n()
        )));
    }
    if db.n() != db_labels.n() {
        return Err(MetricsError::SizeMismatch(format!(
            "{} db codes vs {} db labels",
            db.n(),
            db_labels.n()
        )));
    }
    if queries.c() != db.c() {
        return Err(MetricsError::SizeMismatch(format!(
            "query codes have {} bits, database {}",
            queries.c(),
            db.c()
        )));
    }
    if queries.n() == 0 {
        return Err(MetricsError::NoQueries);
    }
    let judge = RelevanceJudge::new(query_labels.clone(), db_labels.clone());

    let mut per_query_ap = Vec::with_capacity(queries.n());
    let mut topk_sums = vec![0.0; knobs.ks.len()];
    let mut pr_sums: Vec<(f64, f64)> = vec![(0.0, 0.0); db.n()];
    let mut pr_queries = 0usize;
    for q in 0..queries.n() {
        let ranking = rank(q, queries.row(q), db, None)?;
        let rel = relevance_of(&ranking, &judge);
        per_query_ap.push(average_precision(
            &rel,
            judge.total_relevant(q),
            knobs.map_at,
        ));
        for (slot, &(_, prec)) in topk_precision(&ranking, &judge, &knobs.ks)?
            .iter()
            .enumerate()
        {
            topk_sums[slot] += prec;
        }
        if judge.total_relevant(q) > 0 {
            for (slot, &(recall, precision)) in
                precision_recall_curve(&ranking, &judge)?.iter().enumerate()
            {
                pr_sums[slot].0 += recall;
                pr_sums[slot].1 += precision;
            }
            pr_queries += 1;
        }
    }

    let nq = queries.n() as f64;
    let map = per_query_ap.iter().sum::<f64>() / nq;
    let topk = knobs
        .ks
        .iter()
        .zip(topk_sums)
        .map(|(&k, sum)| TopkPoint {
            k,
            precision: sum / nq,
        })
        .collect();
    let pr = if pr_queries > 0 {
        pr_sums
            .into_iter()
            .map(|(r, p)| PrPoint {
                recall: r / pr_queries as f64,
                precision: p / pr_queries as f64,
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut sr = BTreeMap::new();
    for &radius in &knobs.radii {
        sr.insert(radius, success_rate(queries, db, &judge, radius)?);
    }

    Ok(RetrievalReport {
        map,
        map_at: knobs.map_at,
        per_query_ap,
        topk,
        pr,
        sr,
    })
}
