//! Metrics, baselines, and the representation linear probe.

use crate::acting::{argmax, ActingModel, EpisodeTensor};
use crate::codebook::{ActionLabel, Codebook};
use crate::quat::{self, UnitQuaternion};
use crate::NUM_JOINTS;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("prediction/label length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub mean_class_accuracy: f64,
    pub perplexity: f64,
    /// True when some ground-truth class received probability zero; the
    /// perplexity above then treats those items as contributing 0.
    pub zero_probability: bool,
    pub all_joint_accuracy: f64,
    pub angular_deg: Option<f64>,
    pub per_joint_accuracy: Vec<f64>,
}

/// Mean over classes (with support) of per-class recall, averaged over
/// joints; percentage.
pub fn mean_class_accuracy(
    preds: &[ActionLabel],
    labels: &[ActionLabel],
    k: usize,
) -> Result<f64, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch(preds.len(), labels.len()));
    }
    let mut total = 0.0;
    for j in 0..NUM_JOINTS {
        let mut support = vec![0u64; k];
        let mut correct = vec![0u64; k];
        for (p, l) in preds.iter().zip(labels) {
            let gt = l.classes[j];
            support[gt] += 1;
            if p.classes[j] == gt {
                correct[gt] += 1;
            }
        }
        let mut acc = 0.0;
        let mut classes = 0usize;
        for c in 0..k {
            if support[c] > 0 {
                acc += correct[c] as f64 / support[c] as f64;
                classes += 1;
            }
        }
        total += acc / classes as f64;
    }
    Ok(100.0 * total / NUM_JOINTS as f64)
}

/// Per-joint plain accuracy (percentage), for breakdowns.
pub fn per_joint_accuracy(preds: &[ActionLabel], labels: &[ActionLabel]) -> Vec<f64> {
    let mut out = vec![0.0; NUM_JOINTS];
    if labels.is_empty() {
        return out;
    }
    for j in 0..NUM_JOINTS {
        let correct = preds
            .iter()
            .zip(labels)
            .filter(|(p, l)| p.classes[j] == l.classes[j])
            .count();
        out[j] = 100.0 * correct as f64 / labels.len() as f64;
    }
    out
}

/// Per-item geometric mean of the assigned ground-truth probabilities
/// (over steps x joints), arithmetically averaged over items. Higher is
/// better; a uniform K-class predictor scores exactly 1/K. Items
/// containing a zero probability contribute 0 and raise the flag.
pub fn perplexity(items: &[Vec<f64>]) -> Result<(f64, bool), EvalError> {
    if items.is_empty() || items.iter().any(|i| i.is_empty()) {
        return Err(EvalError::EmptyInput);
    }
    let mut total = 0.0;
    let mut zero = false;
    for item in items {
        if item.iter().any(|&p| p <= 0.0) {
            zero = true;
            continue;
        }
        let log_mean: f64 = item.iter().map(|p| p.ln()).sum::<f64>() / item.len() as f64;
        total += log_mean.exp();
    }
    Ok((total / items.len() as f64, zero))
}

/// Mean angular error (degrees) between decoded predicted classes and
/// the continuous ground-truth displacements.
pub fn angular_metric(
    preds: &[ActionLabel],
    gts: &[[UnitQuaternion; NUM_JOINTS]],
    cb: &Codebook,
) -> Result<f64, EvalError> {
    if gts.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if preds.len() != gts.len() {
        return Err(EvalError::LengthMismatch(preds.len(), gts.len()));
    }
    let mut total = 0.0;
    for (p, gt) in preds.iter().zip(gts) {
        for j in 0..NUM_JOINTS {
            let decoded = cb
                .decode(p.classes[j], j)
                .expect("prediction class out of codebook range");
            total += quat::angular_error(&decoded, &gt[j]).to_degrees();
        }
    }
    Ok(total / (gts.len() * NUM_JOINTS) as f64)
}

/// Fraction of timesteps with all six joints correct, percentage.
pub fn all_joint_accuracy(preds: &[ActionLabel], labels: &[ActionLabel]) -> Result<f64, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch(preds.len(), labels.len()));
    }
    let correct = preds
        .iter()
        .zip(labels)
        .filter(|(p, l)| p.classes == l.classes)
        .count();
    Ok(100.0 * correct as f64 / labels.len() as f64)
}

/// Retrieval baseline: return the label sequence of the training item
/// whose concatenated features are closest (Euclidean) to the query;
/// ties break to the lowest item index.
pub fn nn_baseline<'a>(
    train_items: &'a [(Vec<f64>, Vec<ActionLabel>)],
    query: &[f64],
) -> Result<&'a [ActionLabel], EvalError> {
    if train_items.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, (feats, _)) in train_items.iter().enumerate() {
        let d: f64 = feats
            .iter()
            .zip(query)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(&train_items[best].1)
}

/// Per joint most frequent class; ties break to the lowest index.
pub fn mode_baseline(train_labels: &[ActionLabel], k: usize) -> Result<ActionLabel, EvalError> {
    if train_labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut classes = [0usize; NUM_JOINTS];
    for j in 0..NUM_JOINTS {
        let mut counts = vec![0u64; k];
        for l in train_labels {
            counts[l.classes[j]] += 1;
        }
        classes[j] = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
    }
    Ok(ActionLabel { classes })
}

/// Analytic all-joint accuracy (percent) of a random predictor that
/// samples each joint's class i.i.d. from the codebook frequency prior,
/// against labels drawn from the same prior with joints independent:
/// 100 * prod_j sum_c p_jc^2.
pub fn codebook_prior_all_joint(cb: &Codebook) -> f64 {
    let mut prod = 1.0;
    for joint in &cb.joints {
        let total: u64 = joint.frequencies.iter().sum();
        let p2: f64 = joint
            .frequencies
            .iter()
            .map(|&f| {
                let p = f as f64 / total as f64;
                p * p
            })
            .sum();
        prod *= p2;
    }
    100.0 * prod
}

/// Encoder states (post-bridge hidden) for every n_obs-frame window,
/// paired with the episode's scene label.
pub fn probe_states(
    model: &ActingModel,
    episodes: &[EpisodeTensor],
) -> Vec<(Vec<f64>, usize)> {
    let n_obs = model.cfg.n_obs;
    let mut out = Vec::new();
    for ep in episodes {
        if ep.features.len() < n_obs {
            continue;
        }
        for i in 0..=ep.features.len() - n_obs {
            let h = model
                .encode_hidden(&ep.features[i..i + n_obs])
                .expect("episode features match model dims");
            out.push((h, ep.scene_label));
        }
    }
    out
}

/// Seeded multinomial logistic regression by full-batch gradient
/// descent; returns held-out accuracy (percentage).
pub fn linear_probe_accuracy(
    train: &[(Vec<f64>, usize)],
    test: &[(Vec<f64>, usize)],
    n_classes: usize,
    seed: u64,
    epochs: usize,
    lr: f64,
) -> Result<f64, EvalError> {
    if train.is_empty() || test.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let dim = train[0].0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (dim as f64).sqrt();
    let mut w: Vec<f64> = (0..n_classes * dim)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let mut b = vec![0.0; n_classes];
    let scores = |w: &[f64], b: &[f64], x: &[f64]| -> Vec<f64> {
        (0..n_classes)
            .map(|c| {
                b[c] + w[c * dim..(c + 1) * dim]
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a * v)
                    .sum::<f64>()
            })
            .collect()
    };
    let n = train.len() as f64;
    for _ in 0..epochs {
        let mut gw = vec![0.0; n_classes * dim];
        let mut gb = vec![0.0; n_classes];
        for (x, y) in train {
            let p = crate::net::softmax(&scores(&w, &b, x));
            for c in 0..n_classes {
                let err = p[c] - if c == *y { 1.0 } else { 0.0 };
                gb[c] += err / n;
                for (g, v) in gw[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                    *g += err * v / n;
                }
            }
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= lr * g;
        }
        for (bv, g) in b.iter_mut().zip(&gb) {
            *bv -= lr * g;
        }
    }
    let correct = test
        .iter()
        .filter(|(x, y)| argmax(&scores(&w, &b, x)) == *y)
        .count();
    Ok(100.0 * correct as f64 / test.len() as f64)
}

/// Probe comparison: scene classification accuracy from the trained
/// encoder's states vs a random-init encoder of the same shape.
pub fn linear_probe(
    trained: &ActingModel,
    random: &ActingModel,
    train_eps: &[EpisodeTensor],
    test_eps: &[EpisodeTensor],
    n_scenes: usize,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    let mut out = [0.0; 2];
    for (i, model) in [trained, random].iter().enumerate() {
        let train = probe_states(model, train_eps);
        let test = probe_states(model, test_eps);
        out[i] = linear_probe_accuracy(&train, &test, n_scenes, seed, 300, 0.5)?;
    }
    Ok((out[0], out[1]))
}

/// Flat `key value` file, one pair per line, deterministic order.
pub fn write_key_values(path: &Path, pairs: &[(&str, String)]) -> Result<(), EvalError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in pairs {
        writeln!(out, "{k} {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Two-column `index value` file (loss curves, per-class recalls).
pub fn write_curve(path: &Path, values: &[f64]) -> Result<(), EvalError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i} {v}")?;
    }
    out.flush()?;
    Ok(())
}

impl MetricReport {
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = vec![
            ("mean_class_accuracy", format!("{}", self.mean_class_accuracy)),
            ("perplexity", format!("{}", self.perplexity)),
            ("zero_probability", format!("{}", self.zero_probability)),
            ("all_joint_accuracy", format!("{}", self.all_joint_accuracy)),
        ];
        if let Some(a) = self.angular_deg {
            pairs.push(("angular_deg", format!("{a}")));
        }
        pairs
    }
}
