//! Evaluation protocols: matched-cluster precision/recall, pairwise
//! precision/recall, and area under the precision-recall curve over ranked
//! pairs.
//!
//! Matched-cluster scoring pairs each hypothesis cluster with at most one
//! gold cluster (and vice versa) so that the total intersection is maximal —
//! solved exactly as an assignment problem. Elements absent from the gold
//! standard are irrelevant and ignored. Precision is measured over
//! hypothesis clusters containing at least two relevant elements, recall
//! over gold clusters of size at least two.

use std::collections::{HashMap, HashSet};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use thiserror::Error;

use crate::corpus::CorpusError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold clusters must be disjoint; {0:?} appears twice")]
    OverlappingGold(String),
    #[error("gold standard defines no coreferential pairs")]
    DegenerateGold,
    #[error("ranked pair list is empty")]
    NoRankedPairs,
    #[error("no positive pairs to rank")]
    NoPositives,
    #[error("{found} positives in the ranked list exceed the stated total {stated}")]
    BadPositiveTotal { found: usize, stated: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Reference clustering. Members are strings (or occurrence ids); clusters
/// must be disjoint.
#[derive(Debug, Clone)]
pub struct GoldStandard {
    clusters: Vec<Vec<String>>,
    member_cluster: HashMap<String, usize>,
}

impl GoldStandard {
    pub fn new(clusters: Vec<Vec<String>>) -> Result<Self, EvalError> {
        let mut member_cluster = HashMap::new();
        let mut deduped = Vec::with_capacity(clusters.len());
        for (i, cluster) in clusters.into_iter().enumerate() {
            let mut members: Vec<String> = cluster;
            members.sort();
            members.dedup();
            for m in &members {
                if member_cluster.insert(m.clone(), i).is_some() {
                    return Err(EvalError::OverlappingGold(m.clone()));
                }
            }
            deduped.push(members);
        }
        Ok(GoldStandard {
            clusters: deduped,
            member_cluster,
        })
    }

    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    pub fn contains(&self, member: &str) -> bool {
        self.member_cluster.contains_key(member)
    }

    pub fn cluster_of(&self, member: &str) -> Option<usize> {
        self.member_cluster.get(member).copied()
    }

    /// True when both members sit in the same gold cluster.
    pub fn same_cluster(&self, a: &str, b: &str) -> bool {
        match (self.cluster_of(a), self.cluster_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// Number of within-cluster pairs.
    pub fn positive_pair_count(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| c.len() * (c.len() - 1) / 2)
            .sum()
    }
}

/// Precision/recall/F1 with the underlying counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PrfReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_num: u64,
    pub precision_den: u64,
    pub recall_num: u64,
    pub recall_den: u64,
    /// Set when the precision denominator was empty and precision defaulted
    /// to 1.
    pub degenerate_precision: bool,
}

impl PrfReport {
    fn from_counts(pn: u64, pd: u64, rn: u64, rd: u64) -> PrfReport {
        let degenerate = pd == 0;
        let precision = if degenerate {
            1.0
        } else {
            pn as f64 / pd as f64
        };
        let recall = if rd == 0 { 0.0 } else { rn as f64 / rd as f64 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrfReport {
            precision,
            recall,
            f1,
            precision_num: pn,
            precision_den: pd,
            recall_num: rn,
            recall_den: rd,
            degenerate_precision: degenerate,
        }
    }

    pub fn report(&self) -> String {
        format!(
            "precision={:.6}\nrecall={:.6}\nf1={:.6}\nprecision_counts={}/{}\nrecall_counts={}/{}\ndegenerate_precision={}\n",
            self.precision,
            self.recall,
            self.f1,
            self.precision_num,
            self.precision_den,
            self.recall_num,
            self.recall_den,
            self.degenerate_precision,
        )
    }
}

// Optimal one-to-one assignment between hypothesis and gold clusters
// maximizing total intersection. Returns hyp index -> gold index.
fn match_clusters(weights: &[Vec<i64>]) -> HashMap<usize, usize> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    let mut assignment = HashMap::new();
    if rows == 0 || cols == 0 {
        return assignment;
    }
    if rows <= cols {
        let m = Matrix::from_rows(weights.iter().cloned()).expect("rectangular weights");
        let (_, cols_of) = kuhn_munkres(&m);
        for (r, c) in cols_of.into_iter().enumerate() {
            if weights[r][c] > 0 {
                assignment.insert(r, c);
            }
        }
    } else {
        let transposed: Vec<Vec<i64>> = (0..cols)
            .map(|c| (0..rows).map(|r| weights[r][c]).collect())
            .collect();
        let m = Matrix::from_rows(transposed.iter().cloned()).expect("rectangular weights");
        let (_, rows_of) = kuhn_munkres(&m);
        for (c, r) in rows_of.into_iter().enumerate() {
            if weights[r][c] > 0 {
                assignment.insert(r, c);
            }
        }
    }
    assignment
}

/// Matched-cluster precision and recall against a gold standard.
pub fn cluster_prf(hypothesis: &[Vec<String>], gold: &GoldStandard) -> PrfReport {
    // Restrict each hypothesis cluster to the relevant universe.
    let hyp_relevant: Vec<Vec<&String>> = hypothesis
        .iter()
        .map(|c| {
            let mut seen = HashSet::new();
            c.iter()
                .filter(|m| gold.contains(m) && seen.insert(m.as_str()))
                .collect()
        })
        .collect();
    let candidates: Vec<usize> = (0..hypothesis.len())
        .filter(|&i| !hyp_relevant[i].is_empty())
        .collect();

    let weights: Vec<Vec<i64>> = candidates
        .iter()
        .map(|&i| {
            let mut per_gold = vec![0i64; gold.clusters.len()];
            for m in &hyp_relevant[i] {
                if let Some(g) = gold.cluster_of(m) {
                    per_gold[g] += 1;
                }
            }
            per_gold
        })
        .collect();
    let assignment = match_clusters(&weights);

    let mut precision_num = 0u64;
    let mut precision_den = 0u64;
    for (row, &i) in candidates.iter().enumerate() {
        let relevant = hyp_relevant[i].len() as u64;
        if relevant < 2 {
            continue;
        }
        precision_den += relevant;
        if let Some(&g) = assignment.get(&row) {
            precision_num += weights[row][g] as u64;
        }
    }

    let gold_of_row: HashMap<usize, usize> = assignment.iter().map(|(&r, &g)| (g, r)).collect();
    let mut recall_num = 0u64;
    let mut recall_den = 0u64;
    for (g, cluster) in gold.clusters.iter().enumerate() {
        if cluster.len() < 2 {
            continue;
        }
        recall_den += cluster.len() as u64;
        if let Some(&row) = gold_of_row.get(&g) {
            recall_num += weights[row][g] as u64;
        }
    }
    PrfReport::from_counts(precision_num, precision_den, recall_num, recall_den)
}

fn within_pairs(clusters: &[Vec<String>]) -> HashSet<(String, String)> {
    let mut pairs = HashSet::new();
    for cluster in clusters {
        let mut members: Vec<&String> = cluster.iter().collect();
        members.sort();
        members.dedup();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                pairs.insert((members[i].clone(), members[j].clone()));
            }
        }
    }
    pairs
}

/// Pairwise precision and recall: precision over predicted coreferential
/// pairs, recall over gold coreferential pairs. Elements outside the gold
/// universe are unjudgeable and so are dropped from the hypothesis before
/// pairs are formed; with a full-coverage gold standard this changes
/// nothing.
pub fn pairwise_prf(
    hypothesis: &[Vec<String>],
    gold: &GoldStandard,
) -> Result<PrfReport, EvalError> {
    let projected: Vec<Vec<String>> = hypothesis
        .iter()
        .map(|c| c.iter().filter(|m| gold.contains(m)).cloned().collect())
        .collect();
    let predicted = within_pairs(&projected);
    let actual = within_pairs(gold.clusters());
    if actual.is_empty() {
        return Err(EvalError::DegenerateGold);
    }
    let hit = predicted.intersection(&actual).count() as u64;
    Ok(PrfReport::from_counts(
        hit,
        predicted.len() as u64,
        hit,
        actual.len() as u64,
    ))
}

/// One point on the precision-recall sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall curve over ranked pairs, with trapezoidal area.
#[derive(Debug, Clone)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub auc: f64,
    /// Highest reachable recall: positives present in the ranking over all
    /// positives. Below 1 when correct pairs share no property and are never
    /// compared.
    pub max_recall: f64,
}

/// Sweep a threshold down the ranked `(score, is_positive)` list, one step
/// per distinct score, and integrate precision over recall. `total_positives`
/// supplies the recall denominator when known to exceed the ranked list.
pub fn pr_auc(
    ranked: &[(f64, bool)],
    total_positives: Option<usize>,
) -> Result<PrCurve, EvalError> {
    if ranked.is_empty() {
        return Err(EvalError::NoRankedPairs);
    }
    let found = ranked.iter().filter(|(_, pos)| *pos).count();
    let total = total_positives.unwrap_or(found);
    if total == 0 || found == 0 {
        return Err(EvalError::NoPositives);
    }
    if found > total {
        return Err(EvalError::BadPositiveTotal {
            found,
            stated: total,
        });
    }

    let mut sorted: Vec<(f64, bool)> = ranked.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let score = sorted[i].0;
        // Tied scores fall in one threshold step.
        while i < sorted.len() && sorted[i].0 == score {
            seen += 1;
            tp += usize::from(sorted[i].1);
            i += 1;
        }
        points.push(PrPoint {
            threshold: score,
            recall: tp as f64 / total as f64,
            precision: tp as f64 / seen as f64,
        });
    }

    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    let mut prev_precision = points[0].precision;
    for p in &points {
        auc += (p.recall - prev_recall) * (p.precision + prev_precision) / 2.0;
        prev_recall = p.recall;
        prev_precision = p.precision;
    }
    Ok(PrCurve {
        points,
        auc,
        max_recall: found as f64 / total as f64,
    })
}
