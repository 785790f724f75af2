//! Encoder-decoder action predictor.
//!
//! The encoder consumes consecutive-frame feature pairs through a
//! recurrent cell; bridge layers map its final state into the decoder,
//! which rolls out a fixed number of steps, feeding each step's
//! concatenated per-joint class probabilities back in through a linear
//! embed. There is no teacher forcing: training and inference both run
//! on the model's own feedback.

use crate::codebook::{ActionLabel, Codebook};
use crate::features::FeatureTable;
use crate::net::{
    self, LstmParams, NetError, NodeId, ParamId, ParamStore, Tape,
};
use crate::sim::ManifestEntry;
use crate::NUM_JOINTS;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActingConfig {
    pub feature_dim: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub k: usize,
    pub n_obs: usize,
    pub n_pred: usize,
}

impl Default for ActingConfig {
    fn default() -> ActingConfig {
        ActingConfig {
            feature_dim: 32,
            embed_dim: 32,
            hidden: 64,
            k: 8,
            n_obs: 5,
            n_pred: 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            lr: 0.05,
            momentum: 0.9,
            shuffle_seed: 0,
        }
    }
}

/// One episode as model-ready tensors: per-frame feature vectors and the
/// action label taken after each frame (one fewer than the frames).
#[derive(Debug, Clone)]
pub struct EpisodeTensor {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<ActionLabel>,
    pub scene_label: usize,
    pub first_frame: i64,
}

impl EpisodeTensor {
    /// Join a feature table, a label map, and an episode manifest.
    /// Every frame of every episode must have features; every step must
    /// have a label.
    pub fn assemble(
        features: &FeatureTable,
        labels: &BTreeMap<i64, [usize; NUM_JOINTS]>,
        manifest: &[ManifestEntry],
    ) -> Result<Vec<EpisodeTensor>, NetError> {
        let mut out = Vec::with_capacity(manifest.len());
        for ep in manifest {
            let mut feats = Vec::new();
            let mut labs = Vec::new();
            for frame in ep.first_frame..=ep.last_frame {
                let row = features.get(frame).ok_or_else(|| {
                    NetError::Format(format!(
                        "episode {}: no features for frame {frame}",
                        ep.episode_id
                    ))
                })?;
                feats.push(row.clone());
                if frame < ep.last_frame {
                    let classes = labels.get(&frame).ok_or_else(|| {
                        NetError::Format(format!(
                            "episode {}: no label for step at frame {frame}",
                            ep.episode_id
                        ))
                    })?;
                    labs.push(ActionLabel { classes: *classes });
                }
            }
            out.push(EpisodeTensor {
                features: feats,
                labels: labs,
                scene_label: ep.scene_label,
                first_frame: ep.first_frame,
            });
        }
        Ok(out)
    }
}

pub struct ActingModel {
    pub cfg: ActingConfig,
    pub store: ParamStore,
    pair_w: ParamId,
    pair_b: ParamId,
    enc: LstmParams,
    bridge_h_w: ParamId,
    bridge_h_b: ParamId,
    bridge_c_w: ParamId,
    bridge_c_b: ParamId,
    dec: LstmParams,
    feed_w: ParamId,
    feed_b: ParamId,
    heads: Vec<(ParamId, ParamId)>,
}

impl ActingModel {
    pub fn new(cfg: ActingConfig, seed: u64) -> ActingModel {
        let mut store = ParamStore::new(seed);
        let d2 = 2 * cfg.feature_dim;
        let pair_w = store.add("pair.w", cfg.embed_dim, d2, d2);
        let pair_b = store.add("pair.b", cfg.embed_dim, 1, d2);
        let enc = LstmParams::new(&mut store, "enc", cfg.embed_dim, cfg.hidden);
        let bridge_h_w = store.add("bridge_h.w", cfg.hidden, cfg.hidden, cfg.hidden);
        let bridge_h_b = store.add("bridge_h.b", cfg.hidden, 1, cfg.hidden);
        let bridge_c_w = store.add("bridge_c.w", cfg.hidden, cfg.hidden, cfg.hidden);
        let bridge_c_b = store.add("bridge_c.b", cfg.hidden, 1, cfg.hidden);
        let dec = LstmParams::new(&mut store, "dec", cfg.embed_dim, cfg.hidden);
        let fk = NUM_JOINTS * cfg.k;
        let feed_w = store.add("feed.w", cfg.embed_dim, fk, fk);
        let feed_b = store.add("feed.b", cfg.embed_dim, 1, fk);
        let heads = (0..NUM_JOINTS)
            .map(|j| {
                (
                    store.add(&format!("head{j}.w"), cfg.k, cfg.hidden, cfg.hidden),
                    store.add(&format!("head{j}.b"), cfg.k, 1, cfg.hidden),
                )
            })
            .collect();
        ActingModel {
            cfg,
            store,
            pair_w,
            pair_b,
            enc,
            bridge_h_w,
            bridge_h_b,
            bridge_c_w,
            bridge_c_b,
            dec,
            feed_w,
            feed_b,
            heads,
        }
    }

    fn check_features(&self, features: &[Vec<f64>]) -> Result<(), NetError> {
        if features.len() != self.cfg.n_obs {
            return Err(NetError::ShapeMismatch(format!(
                "expected {} observation frames, got {}",
                self.cfg.n_obs,
                features.len()
            )));
        }
        for f in features {
            if f.len() != self.cfg.feature_dim {
                return Err(NetError::ShapeMismatch(format!(
                    "feature dim {} != {}",
                    f.len(),
                    self.cfg.feature_dim
                )));
            }
        }
        Ok(())
    }

    /// Encoder pass on the tape: one step per consecutive frame pair,
    /// then the bridge maps. Returns (hidden, cell) node ids.
    fn encode_tape(
        &self,
        store: &ParamStore,
        tape: &mut Tape,
        features: &[Vec<f64>],
    ) -> (NodeId, NodeId) {
        let mut h = tape.zeros(self.cfg.hidden);
        let mut c = tape.zeros(self.cfg.hidden);
        for pair in features.windows(2) {
            let mut x = pair[0].clone();
            x.extend_from_slice(&pair[1]);
            let xn = tape.leaf(x);
            let e = tape.linear(store, self.pair_w, self.pair_b, xn);
            let (nh, nc) = tape.lstm_step(store, &self.enc, e, h, c);
            h = nh;
            c = nc;
        }
        let bh = tape.linear(store, self.bridge_h_w, self.bridge_h_b, h);
        let bc = tape.linear(store, self.bridge_c_w, self.bridge_c_b, c);
        (bh, bc)
    }

    /// Decoder rollout: step 1 input is all zeros, later inputs are the
    /// previous step's concatenated probabilities through the feedback
    /// embed. Returns per-step per-joint logit nodes.
    fn decode_tape(
        &self,
        store: &ParamStore,
        tape: &mut Tape,
        state: (NodeId, NodeId),
        n_pred: usize,
    ) -> Vec<Vec<NodeId>> {
        let (mut h, mut c) = state;
        let mut input = tape.zeros(self.cfg.embed_dim);
        let mut all_logits = Vec::with_capacity(n_pred);
        for _ in 0..n_pred {
            let (nh, nc) = tape.lstm_step(store, &self.dec, input, h, c);
            h = nh;
            c = nc;
            let mut logits = Vec::with_capacity(NUM_JOINTS);
            let mut probs = Vec::with_capacity(NUM_JOINTS);
            for &(w, b) in &self.heads {
                let l = tape.linear(store, w, b, h);
                probs.push(tape.softmax(l));
                logits.push(l);
            }
            let fed = tape.concat(&probs);
            input = tape.linear(store, self.feed_w, self.feed_b, fed);
            all_logits.push(logits);
        }
        all_logits
    }

    /// Full forward pass; returns per-step per-joint class probabilities.
    pub fn decode_probs(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>, NetError> {
        self.check_features(features)?;
        let mut tape = Tape::new();
        let state = self.encode_tape(&self.store, &mut tape, features);
        let logits = self.decode_tape(&self.store, &mut tape, state, self.cfg.n_pred);
        Ok(logits
            .iter()
            .map(|step| {
                step.iter()
                    .map(|&l| net::softmax(tape.value(l)))
                    .collect()
            })
            .collect())
    }

    /// Argmax prediction, ties to the lowest class index.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<ActionLabel>, NetError> {
        let probs = self.decode_probs(features)?;
        Ok(probs
            .iter()
            .map(|step| {
                let mut classes = [0usize; NUM_JOINTS];
                for (j, p) in step.iter().enumerate() {
                    classes[j] = argmax(p);
                }
                ActionLabel { classes }
            })
            .collect())
    }

    /// Final encoder hidden state (post-bridge) for a window; used by
    /// the linear probe.
    pub fn encode_hidden(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, NetError> {
        self.check_features(features)?;
        let mut tape = Tape::new();
        let (h, _) = self.encode_tape(&self.store, &mut tape, features);
        Ok(tape.value(h).to_vec())
    }

    /// Loss node for one training window (graph left on the tape so the
    /// caller can run backward).
    fn window_loss(
        &self,
        store: &ParamStore,
        tape: &mut Tape,
        features: &[Vec<f64>],
        labels: &[ActionLabel],
        freqs: &[Vec<u64>],
    ) -> Result<NodeId, NetError> {
        let state = self.encode_tape(store, tape, features);
        let logits = self.decode_tape(store, tape, state, labels.len());
        let mut terms = Vec::with_capacity(labels.len() * NUM_JOINTS);
        for (step, label) in logits.iter().zip(labels) {
            for j in 0..NUM_JOINTS {
                let gt = label.classes[j];
                let f = freqs[j][gt];
                if f == 0 {
                    return Err(NetError::ZeroFrequency { joint: j, class: gt });
                }
                terms.push(tape.nll_pick(step[j], gt, 1.0 / f as f64));
            }
        }
        let scale = 1.0 / (labels.len() * NUM_JOINTS) as f64;
        Ok(tape.sum_scaled(&terms, scale))
    }

    /// Standalone loss evaluation (no gradients); used by the gradient
    /// check in tests.
    pub fn loss_with(
        &self,
        store: &ParamStore,
        features: &[Vec<f64>],
        labels: &[ActionLabel],
        freqs: &[Vec<u64>],
    ) -> Result<f64, NetError> {
        let mut tape = Tape::new();
        let node = self.window_loss(store, &mut tape, features, labels, freqs)?;
        Ok(tape.value(node)[0])
    }

    /// Accumulate gradients for one window into the store; returns the
    /// window loss.
    pub fn backward_window(
        &mut self,
        features: &[Vec<f64>],
        labels: &[ActionLabel],
        freqs: &[Vec<u64>],
    ) -> Result<f64, NetError> {
        let mut tape = Tape::new();
        let node = self.window_loss(&self.store, &mut tape, features, labels, freqs)?;
        let loss = tape.value(node)[0];
        tape.backward(&mut self.store, node);
        Ok(loss)
    }

    pub fn save(&self, path: &Path, codebook: &Codebook) -> Result<(), NetError> {
        let c = &self.cfg;
        net::save_checkpoint(
            path,
            "act1",
            &[
                c.feature_dim as u32,
                c.embed_dim as u32,
                c.hidden as u32,
                c.k as u32,
                c.n_obs as u32,
                c.n_pred as u32,
            ],
            &self.store,
            &codebook.content_hash(),
        )
    }

    /// Load a checkpoint, verifying the tag and that it was trained
    /// against the same codebook.
    pub fn load(path: &Path, codebook: &Codebook) -> Result<ActingModel, NetError> {
        let ck = net::load_checkpoint(path)?;
        if ck.tag != "act1" {
            return Err(NetError::Format(format!(
                "expected architecture act1, found {}",
                ck.tag
            )));
        }
        if ck.dims.len() != 6 {
            return Err(NetError::Format("act1 expects 6 dims".into()));
        }
        if ck.codebook_hash != codebook.content_hash() {
            return Err(NetError::Format(
                "checkpoint was trained against a different codebook".into(),
            ));
        }
        let cfg = ActingConfig {
            feature_dim: ck.dims[0] as usize,
            embed_dim: ck.dims[1] as usize,
            hidden: ck.dims[2] as usize,
            k: ck.dims[3] as usize,
            n_obs: ck.dims[4] as usize,
            n_pred: ck.dims[5] as usize,
        };
        let mut model = ActingModel::new(cfg, ck.seed);
        net::restore_params(&mut model.store, &ck)?;
        Ok(model)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Sliding windows (stride 1) over one episode: `n_obs` frames of
/// features plus the following `n_pred` action labels.
pub fn windows(
    ep: &EpisodeTensor,
    n_obs: usize,
    n_pred: usize,
) -> Vec<(Vec<Vec<f64>>, Vec<ActionLabel>)> {
    let frames = ep.features.len();
    let mut out = Vec::new();
    if frames < n_obs + n_pred {
        return out;
    }
    for i in 0..=frames - (n_obs + n_pred) {
        let feats = ep.features[i..i + n_obs].to_vec();
        let labs = ep.labels[i + n_obs - 1..i + n_obs - 1 + n_pred].to_vec();
        out.push((feats, labs));
    }
    out
}

/// Per-joint class counts, used as inverse-frequency loss weights.
pub fn label_frequencies(episodes: &[EpisodeTensor], k: usize) -> Vec<Vec<u64>> {
    let mut freqs = vec![vec![0u64; k]; NUM_JOINTS];
    for ep in episodes {
        for label in &ep.labels {
            for j in 0..NUM_JOINTS {
                freqs[j][label.classes[j]] += 1;
            }
        }
    }
    freqs
}

/// Per-window SGD over shuffled sliding windows; returns the per-epoch
/// mean loss curve.
pub fn train(
    model: &mut ActingModel,
    episodes: &[EpisodeTensor],
    freqs: &[Vec<u64>],
    tc: &TrainConfig,
) -> Result<Vec<f64>, NetError> {
    let mut items = Vec::new();
    for ep in episodes {
        items.extend(windows(ep, model.cfg.n_obs, model.cfg.n_pred));
    }
    if items.is_empty() {
        return Err(NetError::ShapeMismatch(
            "no training windows: episodes shorter than n_obs + n_pred".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.shuffle_seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut curve = Vec::with_capacity(tc.epochs);
    for _ in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (feats, labs) = &items[i];
            total += model.backward_window(feats, labs, freqs)?;
            model.store.sgd_step(tc.lr, tc.momentum);
        }
        curve.push(total / items.len() as f64);
    }
    Ok(curve)
}
