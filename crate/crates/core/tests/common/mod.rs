//! Reference implementations shared by the integration tests. None of
//! these call into the library's numeric code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroshot::synthetic::{tag_name, SyntheticTask};
use zeroshot::{normalize_length, Architecture, RelatednessModel, SentenceMatrix, TagEmbedding};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_sentence(rng: &mut impl Rng, len: usize, dim: usize) -> SentenceMatrix {
    let rows: Vec<Vec<f64>> = (0..len).map(|_| random_vec(rng, dim, 1.0)).collect();
    SentenceMatrix::from_rows(&rows).unwrap()
}

/// Central differences of the model loss with respect to every parameter.
pub fn numeric_gradient(
    model: &RelatednessModel,
    s: &SentenceMatrix,
    t: &TagEmbedding,
    label: f64,
    step: f64,
) -> Vec<f64> {
    let base = model.params().to_vec();
    let loss_at = |params: Vec<f64>| {
        let m = RelatednessModel::from_parts(
            model.arch(),
            model.embed_dim(),
            model.hidden_dim(),
            model.seed(),
            params,
        )
        .unwrap();
        m.loss(s, t, label).unwrap()
    };
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += step;
            minus[i] -= step;
            (loss_at(plus) - loss_at(minus)) / (2.0 * step)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest relative error between analytic and numeric parameter gradients
/// for one random instance.
pub fn gradient_check(arch: Architecture, d: usize, h: usize, n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let model = RelatednessModel::new(arch, d, h, seed).unwrap();
    let s = random_sentence(&mut r, n, d);
    let t = TagEmbedding(random_vec(&mut r, d, 1.0));
    let label = if r.random::<bool>() { 1.0 } else { 0.0 };
    let (_, cache) = model.forward(&s, &t).unwrap();
    let analytic = model.backward(&cache, label).unwrap().params;
    let numeric = numeric_gradient(&model, &s, &t, label, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| rel_err(*a, *b))
        .fold(0.0, f64::max)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic regression with a small ridge penalty, fit by Newton's method
/// on standardized features. Returns training accuracy.
pub fn logistic_regression_accuracy(
    features: &[Vec<f64>],
    labels: &[bool],
    iterations: usize,
) -> f64 {
    let n = features.len() as f64;
    let dim = features[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|j| features.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    let std: Vec<f64> = (0..dim)
        .map(|j| {
            (features
                .iter()
                .map(|x| (x[j] - mean[j]).powi(2))
                .sum::<f64>()
                / n)
                .sqrt()
                .max(1e-12)
        })
        .collect();
    // trailing 1.0 is the intercept
    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|x| {
            (0..dim)
                .map(|j| (x[j] - mean[j]) / std[j])
                .chain([1.0])
                .collect()
        })
        .collect();
    let k = dim + 1;
    let ridge = 1e-6;
    let mut w = vec![0.0; k];
    let score = |w: &[f64], x: &[f64]| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    for _ in 0..iterations {
        let mut grad: Vec<f64> = w.iter().map(|wi| ridge * wi).collect();
        let mut hess = vec![vec![0.0; k]; k];
        for (i, row) in hess.iter_mut().enumerate() {
            row[i] = ridge;
        }
        for (x, &y) in xs.iter().zip(labels) {
            let p = sigmoid(score(&w, x));
            let e = p - f64::from(u8::from(y));
            let curvature = (p * (1.0 - p)).max(1e-12);
            for a in 0..k {
                grad[a] += e * x[a];
                for b in 0..k {
                    hess[a][b] += curvature * x[a] * x[b];
                }
            }
        }
        let step = solve(hess, grad);
        w.iter_mut().zip(&step).for_each(|(wi, s)| *wi -= s);
    }
    let correct = xs
        .iter()
        .zip(labels)
        .filter(|(x, &y)| (score(&w, x) > 0.0) == y)
        .count();
    correct as f64 / n
}

// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (target, source) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target -= factor * source;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// `[mean sentence ; tag]` features and ground-truth labels for every
/// (corpus record, tag cluster) combination.
pub fn grid_features(task: &SyntheticTask, target_length: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (record, &k) in task.corpus.records().iter().zip(&task.sentence_clusters) {
        let s = task
            .store
            .embed_sequence(&normalize_length(&record.tokens, target_length).unwrap());
        let dim = s.dim();
        let mut mean = vec![0.0; dim];
        for row in s.rows() {
            mean.iter_mut()
                .zip(row)
                .for_each(|(m, v)| *m += v / s.len() as f64);
        }
        for j in 0..task.clusters() {
            let tag = task.store.get(&tag_name(j, 0)).unwrap();
            let mut x = mean.clone();
            x.extend(tag.iter().map(|&v| f64::from(v)));
            features.push(x);
            labels.push(task.related(k, j));
        }
    }
    (features, labels)
}

/// Accuracy of `model` on every pair of the given records and tag clusters,
/// scored against the generator's ground truth.
pub fn grid_accuracy(
    model: &RelatednessModel,
    task: &SyntheticTask,
    records: &[usize],
    clusters: &[usize],
    target_length: usize,
) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for &i in records {
        let record = &task.corpus.records()[i];
        let s = task
            .store
            .embed_sequence(&normalize_length(&record.tokens, target_length).unwrap());
        for &j in clusters {
            let t = task.store.embed_tag(&tag_name(j, 0)).unwrap();
            let p = model.probability(&s, &t).unwrap();
            correct += usize::from((p >= 0.5) == task.related(task.sentence_clusters[i], j));
            total += 1;
        }
    }
    correct as f64 / total as f64
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
