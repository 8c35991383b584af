//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use oilspill::iforest::{IsolationForest, IsolationTree, Node};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// descending order and the matching unit eigenvectors as columns.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (app, aqq, apq) = (a[p][p], a[q][q], a[p][q]);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (akp, akq) = (a[k][p], a[k][q]);
                    let (np, nq) = (c * akp - s * akq, s * akp + c * akq);
                    a[k][p] = np;
                    a[p][k] = np;
                    a[k][q] = nq;
                    a[q][k] = nq;
                }
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

fn rbf(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    (-sq / (2.0 * sigma * sigma)).exp()
}

/// Kernel PCA by the textbook route: explicit `H K H` with the centering
/// matrix, a Jacobi eigensolve, and projection of each query through the
/// centred kernel vector. Returns `queries x components`.
pub fn dense_kpca(sample: &[Vec<f64>], sigma: f64, components: usize, queries: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = sample.len();
    let k: Vec<Vec<f64>> = sample.iter().map(|a| sample.iter().map(|b| rbf(a, b, sigma)).collect()).collect();
    let h: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| f64::from(u8::from(i == j)) - 1.0 / m as f64).collect())
        .collect();
    let hk = matmul(&h, &k);
    let centred = matmul(&hk, &h);
    let (values, vectors) = jacobi_eigen(centred);

    let col_means: Vec<f64> = (0..m).map(|j| k.iter().map(|row| row[j]).sum::<f64>() / m as f64).collect();
    let grand: f64 = col_means.iter().sum::<f64>() / m as f64;
    queries
        .iter()
        .map(|x| {
            let kx: Vec<f64> = sample.iter().map(|s| rbf(x, s, sigma)).collect();
            let mean_x = kx.iter().sum::<f64>() / m as f64;
            let kc: Vec<f64> = (0..m).map(|i| kx[i] - mean_x - col_means[i] + grand).collect();
            (0..components)
                .map(|d| (0..m).map(|i| vectors[i][d] * kc[i]).sum::<f64>() / values[d].sqrt())
                .collect()
        })
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, p) = (a.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * bk[j];
            }
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Random-walker probabilities for one class by a dense direct solve of
/// `(L + gamma I) x = gamma * prior`, with the graph built from scratch.
pub fn dense_erw(guidance: &[f64], width: usize, prior: &[f64], beta: f64, gamma: f64) -> Vec<f64> {
    let n = guidance.len();
    let (lo, hi) = guidance
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let g: Vec<f64> = guidance
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (x, y) = (i % width, i / width);
        let mut neighbours = Vec::new();
        if x > 0 {
            neighbours.push(i - 1);
        }
        if x + 1 < width {
            neighbours.push(i + 1);
        }
        if y > 0 {
            neighbours.push(i - width);
        }
        if i + width < n {
            neighbours.push(i + width);
        }
        for j in neighbours {
            let w = (-beta * (g[i] - g[j]) * (g[i] - g[j])).exp();
            a[i][j] -= w;
            a[i][i] += w;
        }
        a[i][i] += gamma;
    }
    dense_solve(a, prior.iter().map(|p| gamma * p).collect())
}

/// AUC as an explicit double loop over every (positive, negative) pair,
/// returned as twice the win count so ties stay integral.
pub fn brute_force_doubled(scores: &[f64], positive: &[bool]) -> (u128, u64, u64) {
    let mut doubled = 0u128;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            neg += 1;
            continue;
        }
        pos += 1;
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            doubled += if si > sj {
                2
            } else if si == sj {
                1
            } else {
                0
            };
        }
    }
    (doubled, pos, neg)
}

/// Area under the empirical ROC curve by the trapezoid rule, sweeping the
/// threshold down through every distinct score.
pub fn trapezoid_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let p = positive.iter().filter(|&&b| b).count() as f64;
    let n = positive.len() as f64 - p;
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    let mut tp = 0.0;
    let mut area = 0.0;
    for t in distinct {
        let (mut dtp, mut dfp) = (0.0, 0.0);
        for (s, &l) in scores.iter().zip(positive) {
            if *s == t {
                if l {
                    dtp += 1.0;
                } else {
                    dfp += 1.0;
                }
            }
        }
        area += dfp / n * ((tp + tp + dtp) / (2.0 * p));
        tp += dtp;
    }
    area
}

fn c_oracle(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let m1 = (m - 1) as f64;
    2.0 * (m1.ln() + 0.577_215_664_9) - 2.0 * m1 / m as f64
}

/// Path length by recursive descent over the node arena.
pub fn traverse(tree: &IsolationTree, node: usize, x: &[f64], depth: usize) -> f64 {
    match &tree.nodes()[node] {
        Node::External { size } => depth as f64 + c_oracle(*size),
        Node::Internal {
            dim,
            split,
            left,
            right,
        } => {
            let next = if x[*dim] < *split { *left } else { *right };
            traverse(tree, next, x, depth + 1)
        }
    }
}

pub fn forest_average_path(forest: &IsolationForest, x: &[f64]) -> f64 {
    let total: f64 = forest.trees().iter().map(|t| traverse(t, 0, x, 0)).sum();
    total / forest.trees().len() as f64
}

/// Deepest root-to-leaf edge count, walking every node.
pub fn max_depth(tree: &IsolationTree) -> usize {
    let mut stack = vec![(0usize, 0usize)];
    let mut deepest = 0;
    while let Some((node, depth)) = stack.pop() {
        deepest = deepest.max(depth);
        if let Node::Internal { left, right, .. } = tree.nodes()[node] {
            stack.push((left, depth + 1));
            stack.push((right, depth + 1));
        }
    }
    deepest
}

/// Best two-cluster SSE over every threshold split of the sorted values.
pub fn threshold_scan_sse(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let sse = |g: &[f64]| {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
    };
    (1..v.len())
        .filter(|&k| v[k - 1] < v[k])
        .map(|k| sse(&v[..k]) + sse(&v[k..]))
        .fold(f64::INFINITY, f64::min)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
