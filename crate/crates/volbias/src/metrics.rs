//! Agreement between a labeling and ground truth.

use volbias_core::energy::OUTLIER;

/// Minimum-cost assignment on a square matrix (Hungarian method with
/// potentials); returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let (mut u, mut v) = (vec![0i64; n + 1], vec![0i64; n + 1]);
    // p[j]: row matched to column j (1-based, 0 = free); column 0 is a sentinel
    let (mut p, mut way) = (vec![0usize; n + 1], vec![0usize; n + 1]);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let (mut delta, mut j1) = (inf, 0);
            for j in 1..=n {
                if !used[j] {
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
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Maps each predicted label to a true label (or `None`) so that the number
/// of agreeing elements is largest. The outlier label only matches itself.
pub fn best_matching(pred: &[usize], truth: &[usize]) -> Vec<(usize, Option<usize>)> {
    let mut p_labels: Vec<usize> = pred.iter().copied().filter(|&l| l != OUTLIER).collect();
    p_labels.sort_unstable();
    p_labels.dedup();
    let mut t_labels: Vec<usize> = truth.iter().copied().filter(|&l| l != OUTLIER).collect();
    t_labels.sort_unstable();
    t_labels.dedup();
    if p_labels.is_empty() {
        return Vec::new();
    }
    let size = p_labels.len().max(t_labels.len());
    let mut m = vec![vec![0i64; size]; size];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == OUTLIER || t == OUTLIER {
            continue;
        }
        let i = p_labels.binary_search(&p).expect("collected above");
        let j = t_labels.binary_search(&t).expect("collected above");
        m[i][j] -= 1;
    }
    let assign = min_cost_assignment(&m);
    p_labels.iter().enumerate().map(|(i, &p)| (p, t_labels.get(assign[i]).copied())).collect()
}

/// Fraction of elements whose label agrees with the truth after matching.
pub fn matched_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "labelings differ in length");
    if pred.is_empty() {
        return 1.0;
    }
    let map = best_matching(pred, truth);
    let correct = pred
        .iter()
        .zip(truth)
        .filter(|(&p, &t)| {
            if p == OUTLIER {
                t == OUTLIER
            } else {
                map.iter().find(|(q, _)| *q == p).and_then(|(_, m)| *m) == Some(t)
            }
        })
        .count();
    correct as f64 / pred.len() as f64
}

/// Misclassification rate after optimal label matching.
pub fn misclassification(pred: &[usize], truth: &[usize]) -> f64 {
    1.0 - matched_accuracy(pred, truth)
}

/// Fraction of elements where `pred` and `truth` differ, without matching.
pub fn xor_error(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "labelings differ in length");
    pred.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / pred.len().max(1) as f64
}
