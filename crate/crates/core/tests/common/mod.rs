//! Reference computations shared by the integration tests and the acceptance
//! harness. Apart from `gradcheck`, which drives the forward pass to
//! difference it, nothing here calls into the code it checks.

#![allow(dead_code)]

pub mod gradcheck;

use chrono::{NaiveDate, NaiveDateTime};

/// Truncated Cauchy CDF on `[0, m]`, written out from the arctangent form.
pub fn truncated_cauchy_cdf(x: f64, x0: f64, gamma: f64, m: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= m {
        return 1.0;
    }
    let a = ((0.0 - x0) / gamma).atan();
    let b = ((m - x0) / gamma).atan();
    (((x - x0) / gamma).atan() - a) / (b - a)
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut hits, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                hits += 1.0;
            } else if si == sj {
                hits += 0.5;
            }
        }
    }
    hits / pairs
}

/// Confusion counts `(tp, fp, tn, fn)` by direct enumeration.
pub fn confusion_counts(pred: &[bool], labels: &[bool]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (&p, &y) in pred.iter().zip(labels) {
        match (p, y) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, false) => c.2 += 1,
            (false, true) => c.3 += 1,
        }
    }
    c
}

/// Accuracy, recall and F1 from counts, with 0 for empty denominators.
pub fn reference_metrics(tp: u64, fp: u64, tn: u64, fn_: u64) -> (f64, f64, f64) {
    let total = (tp + fp + tn + fn_) as f64;
    let acc = if total > 0.0 { (tp + tn) as f64 / total } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (acc, recall, f1)
}

/// Dense `D^{-1/2} (A + I) D^{-1/2}` for an undirected edge list.
pub fn dense_symmetric_normalized(edges: &[(usize, usize)], n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    for &(s, t) in edges {
        a[s][t] = 1.0;
        a[t][s] = 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i][j] /= (d[i] * d[j]).sqrt();
        }
    }
    a
}

pub fn table_one_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(23, 0, 0).unwrap()
}

/// The four sample rows (node 1 at lat 10, lng 20) as they are displayed
/// after rounding to two decimals.
pub const TABLE_ONE_ROWS: [&str; 4] = [
    "1,10,20,2021-01-01 23:00:00,0,0,0,0,0,0,0",
    "1,10,20,2021-01-01 23:10:00,1,9,3,1.5,0.75,0.38,0",
    "1,10,20,2021-01-01 23:20:00,1,11,6.67,3.33,1.67,0.83,0",
    "1,10,20,2021-01-01 23:30:00,1,10,10,5,2.5,1.25,0",
];
