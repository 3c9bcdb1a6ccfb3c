//! Cluster matching and recovery scores against planted ground truth.

use crate::inference::synthetic::{DocTruth, PlantedPhi};
use crate::inference::Posterior;

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm with row/column potentials, O(n^3)). Returns, for each row, the
/// column it is matched to.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// One-to-one matching of planted clusters to estimated clusters that
/// maximizes total cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMatching {
    /// `pairs[i] = (estimated cluster, cosine)` for planted cluster `i`.
    pub pairs: Vec<(usize, f64)>,
    pub mean_cosine: f64,
}

pub fn match_clusters<A: AsRef<[f64]>, B: AsRef<[f64]>>(planted: &[A], estimated: &[B]) -> ClusterMatching {
    let sim: Vec<Vec<f64>> = planted
        .iter()
        .map(|p| estimated.iter().map(|e| cosine(p.as_ref(), e.as_ref())).collect())
        .collect();
    let cost: Vec<Vec<f64>> = sim.iter().map(|r| r.iter().map(|s| -s).collect()).collect();
    let assignment = hungarian(&cost);
    let pairs: Vec<(usize, f64)> = assignment.iter().enumerate().map(|(i, &j)| (j, sim[i][j])).collect();
    let mean_cosine = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|(_, c)| c).sum::<f64>() / pairs.len() as f64
    };
    ClusterMatching { pairs, mean_cosine }
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// How well a fitted epoch recovers a planted corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub matching: ClusterMatching,
    /// Documents whose true sentiment mix puts at least the threshold on
    /// one label.
    pub confident_docs: usize,
    /// Share of those whose estimated dominant label equals the true one.
    pub sentiment_accuracy: f64,
}

pub fn evaluate_recovery(planted: &PlantedPhi, posterior: &Posterior, truth: &[DocTruth], threshold: f64) -> Recovery {
    let estimated: Vec<&[f64]> = (0..posterior.labels())
        .flat_map(|l| (0..posterior.topics()).map(move |z| (l, z)))
        .map(|(l, z)| posterior.phi(l, z))
        .collect();
    let planted_rows: Vec<&[f64]> = planted.rows().collect();
    let matching = match_clusters(&planted_rows, &estimated);

    let mut confident = 0;
    let mut correct = 0;
    for (d, t) in truth.iter().enumerate() {
        if t.pi.iter().cloned().fold(0.0, f64::max) < threshold {
            continue;
        }
        confident += 1;
        if argmax(&t.pi) == argmax(posterior.pi(d)) {
            correct += 1;
        }
    }
    Recovery {
        matching,
        confident_docs: confident,
        sentiment_accuracy: if confident == 0 { 0.0 } else { correct as f64 / confident as f64 },
    }
}
