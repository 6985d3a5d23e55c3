//! One-vs-one linear SVM and repeated stratified k-fold cross-validation.
//!
//! Each class pair is a binary C-SVM solved in the dual with SMO
//! (maximal-violating-pair selection with second-order working-set choice,
//! stopping when the KKT violation drops below [`KKT_TOLERANCE`]). The bias is
//! not regularized. Attributes are standardized with training statistics.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

pub const KKT_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::DegenerateDataset("no instances".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature vectors, {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::DegenerateDataset(
                "zero-length feature vectors".into(),
            ));
        }
        if let Some(bad) = features.iter().position(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "instance {bad} has {} attributes, expected {dim}",
                features[bad].len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::DegenerateDataset(format!(
                "label {l} has no class name"
            )));
        }
        let present: BTreeSet<usize> = labels.iter().copied().collect();
        if present.len() < 2 {
            return Err(Error::DegenerateDataset(format!(
                "need at least two classes, found {}",
                present.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    /// Builds a dataset from string labels; the vocabulary is sorted.
    pub fn from_named<S: AsRef<str>>(features: Vec<Vec<f64>>, names: &[S]) -> Result<Self> {
        let vocab: Vec<String> = names
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let labels = names
            .iter()
            .map(|n| {
                vocab
                    .binary_search_by(|v| v.as_str().cmp(n.as_ref()))
                    .unwrap()
            })
            .collect();
        Self::new(features, labels, vocab)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.class_names.len()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Same vocabulary, selected instances. Fails if fewer than two classes remain.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_names.clone(),
        )
    }

    /// Copy with labels replaced (used for permutation baselines).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.class_names.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub means: Vec<f64>,
    /// Zero marks a constant attribute, which normalizes to zero.
    pub stds: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: &[Vec<f64>]) -> Self {
        let n = features.len() as f64;
        let dim = features[0].len();
        let mut means = vec![0.0; dim];
        for f in features {
            for (m, v) in means.iter_mut().zip(f) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in stds.iter_mut().zip(f).zip(&means) {
                *s += (v - m).powi(2);
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12) {
                *s = 0.0;
            }
        }
        Self { means, stds }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

/// Linear decision function for classes `class_a` (positive) vs `class_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub class_a: usize,
    pub class_b: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PairModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub class_names: Vec<String>,
    #[serde(rename = "C")]
    pub c: f64,
    pub normalization: Normalization,
    pub pairs: Vec<PairModel>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual solution of one binary problem.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Solves a binary C-SVM with a linear kernel. `y[i]` is `+1.0` or `-1.0`.
pub fn solve_binary(x: &[Vec<f64>], y: &[f64], c: f64, tol: f64) -> BinarySolution {
    let n = x.len();
    let dim = x[0].len();
    let kernel: Vec<f64> = {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    };
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let qd: Vec<f64> = (0..n).map(|i| kernel[i * n + i]).collect();

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(1_000_000);
    let mut iterations = 0;

    while iterations < max_iter {
        // Working set: i maximizes -y G over I_up; j by second-order gain over I_low.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if y[t] > 0.0 {
                if !at_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = t;
                }
            } else if !at_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let (viol, quad) = if y[t] > 0.0 {
                if at_lower(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(grad[t]);
                if i_sel == usize::MAX {
                    continue;
                }
                (
                    gmax + grad[t],
                    qd[i_sel] + qd[t] - 2.0 * y[i_sel] * q(i_sel, t),
                )
            } else {
                if at_upper(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(-grad[t]);
                if i_sel == usize::MAX {
                    continue;
                }
                (
                    gmax - grad[t],
                    qd[i_sel] + qd[t] + 2.0 * y[i_sel] * q(i_sel, t),
                )
            };
            if viol > 0.0 {
                let gain = -(viol * viol) / if quad > 0.0 { quad } else { TAU };
                if gain <= best {
                    best = gain;
                    j_sel = t;
                }
            }
        }
        if gmax + gmax2 < tol || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(i, k) * dai + q(j, k) * daj;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if at_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    let mut weights = vec![0.0; dim];
    for t in 0..n {
        if alpha[t] != 0.0 {
            let s = alpha[t] * y[t];
            for (w, v) in weights.iter_mut().zip(&x[t]) {
                *w += s * v;
            }
        }
    }
    BinarySolution {
        alpha,
        weights,
        bias: -rho,
        iterations,
    }
}

pub fn train(data: &LabeledDataset, c: f64) -> Result<SvmModel> {
    train_with(data, c, Execution::default())
}

pub fn train_with(data: &LabeledDataset, c: f64, exec: Execution) -> Result<SvmModel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::BadParameter(format!("C must be positive, got {c}")));
    }
    let k = data.class_names.len();
    let counts = data.class_counts();
    if counts.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::DegenerateDataset("need at least two classes".into()));
    }
    let normalization = Normalization::fit(&data.features);
    let scaled: Vec<Vec<f64>> = data
        .features
        .iter()
        .map(|f| normalization.apply(f))
        .collect();

    let pair_ids: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let pairs = par::map_slice(&pair_ids, exec, |&(a, b)| {
        let members: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] == a || data.labels[i] == b)
            .collect();
        let has_a = members.iter().any(|&i| data.labels[i] == a);
        let has_b = members.iter().any(|&i| data.labels[i] == b);
        if !has_a || !has_b {
            // One side absent from training: always vote for the present one.
            let bias = if has_a { 1.0 } else { -1.0 };
            return PairModel {
                class_a: a,
                class_b: b,
                weights: vec![0.0; data.dim()],
                bias,
            };
        }
        let x: Vec<Vec<f64>> = members.iter().map(|&i| scaled[i].clone()).collect();
        let y: Vec<f64> = members
            .iter()
            .map(|&i| if data.labels[i] == a { 1.0 } else { -1.0 })
            .collect();
        let sol = solve_binary(&x, &y, c, KKT_TOLERANCE);
        PairModel {
            class_a: a,
            class_b: b,
            weights: sol.weights,
            bias: sol.bias,
        }
    });
    Ok(SvmModel {
        class_names: data.class_names.clone(),
        c,
        normalization,
        pairs,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.normalization.means.len()
    }

    /// Majority vote over pairs; ties go to the lowest class index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} attributes, got {}",
                self.dim(),
                features.len()
            )));
        }
        let x = self.normalization.apply(features);
        let mut votes = vec![0usize; self.class_names.len()];
        for p in &self.pairs {
            if p.decision(&x) >= 0.0 {
                votes[p.class_a] += 1;
            } else {
                votes[p.class_b] += 1;
            }
        }
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn predict_name(&self, features: &[f64]) -> Result<&str> {
        Ok(&self.class_names[self.predict(features)?])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::FormatError(e.to_string()))?;
        let k = m.class_names.len();
        let dim = m.dim();
        if m.normalization.stds.len() != dim
            || m.pairs
                .iter()
                .any(|p| p.weights.len() != dim || p.class_a >= k || p.class_b >= k)
        {
            return Err(Error::FormatError("inconsistent model dimensions".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub class_names: Vec<String>,
    pub folds: usize,
    pub runs: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation of the per-run accuracies.
    pub std_accuracy: f64,
    pub run_accuracies: Vec<f64>,
    /// Rows are true classes, columns predictions; final run only.
    pub confusion: Vec<Vec<usize>>,
    /// Correct predictions in the final run.
    pub correct_count: usize,
    pub total_count: usize,
}

impl CvReport {
    pub fn summary(&self) -> String {
        format!(
            "mean accuracy {:.2} % (standard deviation {:.2}) over {} runs of {}-fold cross-validation; {} of {} correctly classified instances",
            100.0 * self.mean_accuracy,
            100.0 * self.std_accuracy,
            self.runs,
            self.folds,
            self.correct_count,
            self.total_count
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::FormatError(e.to_string()))
    }
}

fn run_seed(seed: u64, run: usize) -> u64 {
    // splitmix64 of (seed, run)
    let mut z = seed ^ (run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified fold assignment: `folds[f]` lists the test indices of fold `f`.
///
/// Each class is shuffled and dealt round-robin, continuing where the
/// previous class stopped, so per-class counts per fold differ by at most one.
pub fn stratified_folds(labels: &[usize], folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0usize;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        for i in members {
            out[next % folds].push(i);
            next += 1;
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    out
}

/// Test folds of every run.
pub fn cv_plan(labels: &[usize], folds: usize, runs: usize, seed: u64) -> Vec<Vec<Vec<usize>>> {
    (0..runs)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed(seed, r));
            stratified_folds(labels, folds, &mut rng)
        })
        .collect()
}

fn check_cv(data: &LabeledDataset, folds: usize, runs: usize) -> Result<()> {
    if folds < 2 || runs < 1 {
        return Err(Error::BadParameter(format!(
            "need folds >= 2 and runs >= 1, got {folds} and {runs}"
        )));
    }
    for (c, &n) in data.class_counts().iter().enumerate() {
        if n > 0 && n < folds {
            return Err(Error::TooFewInstances {
                class: data.class_names[c].clone(),
                count: n,
                needed: folds,
            });
        }
    }
    Ok(())
}

/// Repeated stratified k-fold driver over an arbitrary learner.
///
/// `fit_predict(train, test)` receives disjoint index sets and must return a
/// predicted class index for every test index, in order.
pub fn cross_validate_with<F>(
    data: &LabeledDataset,
    folds: usize,
    runs: usize,
    seed: u64,
    exec: Execution,
    fit_predict: F,
) -> Result<CvReport>
where
    F: Fn(&[usize], &[usize]) -> Result<Vec<usize>> + Sync + Send,
{
    check_cv(data, folds, runs)?;
    let plan = cv_plan(&data.labels, folds, runs, seed);
    let n = data.len();
    let tasks: Vec<(usize, usize)> = (0..runs)
        .flat_map(|r| (0..folds).map(move |f| (r, f)))
        .collect();
    let outcomes = par::map_slice(&tasks, exec, |&(r, f)| {
        let test = &plan[r][f];
        let mut in_test = vec![false; n];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let pred = fit_predict(&train, test)?;
        if pred.len() != test.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictions for {} test instances",
                pred.len(),
                test.len()
            )));
        }
        Ok(pred)
    });

    let k = data.class_names.len();
    let mut run_accuracies = vec![0.0; runs];
    let mut confusion = vec![vec![0usize; k]; k];
    let mut correct_last = 0;
    for (&(r, f), pred) in tasks.iter().zip(outcomes) {
        let pred = pred?;
        for (&i, &p) in plan[r][f].iter().zip(&pred) {
            let truth = data.labels[i];
            if p == truth {
                run_accuracies[r] += 1.0;
            }
            if r + 1 == runs {
                confusion[truth][p] += 1;
                if p == truth {
                    correct_last += 1;
                }
            }
        }
    }
    run_accuracies.iter_mut().for_each(|a| *a /= n as f64);
    let mean = run_accuracies.iter().sum::<f64>() / runs as f64;
    let std = if runs > 1 {
        (run_accuracies
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / (runs - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    Ok(CvReport {
        class_names: data.class_names.clone(),
        folds,
        runs,
        mean_accuracy: mean,
        std_accuracy: std,
        run_accuracies,
        confusion,
        correct_count: correct_last,
        total_count: n,
    })
}

pub fn cross_validate(
    data: &LabeledDataset,
    folds: usize,
    runs: usize,
    c: f64,
    seed: u64,
) -> Result<CvReport> {
    cross_validate_exec(data, folds, runs, c, seed, Execution::default())
}

pub fn cross_validate_exec(
    data: &LabeledDataset,
    folds: usize,
    runs: usize,
    c: f64,
    seed: u64,
    exec: Execution,
) -> Result<CvReport> {
    cross_validate_with(data, folds, runs, seed, exec, |train, test| {
        let model = train_with(&data.subset(train)?, c, Execution::Sequential)?;
        test.iter()
            .map(|&i| model.predict(&data.features[i]))
            .collect()
    })
}
