//! Batch CLI for the pipeline: simulate, sync, fit-codebook, label,
//! train, evaluate, probe, gradcheck. Every run is config-driven and
//! seeded; identical configs produce byte-identical artifacts.

use clap::{Parser, Subcommand};
use egoact::acting::{self, ActingModel, EpisodeTensor};
use egoact::codebook::{self, ActionLabel, Codebook, CodebookError};
use egoact::config::{ConfigError, RunConfig};
use egoact::eval::{self, EvalError};
use egoact::features::{self, FeatureError};
use egoact::ingest::{self, IngestError};
use egoact::net::{self, NetError};
use egoact::planning::{self, PlanningConfig, PlanningModel};
use egoact::quat::UnitQuaternion;
use egoact::sim::{self, SimError};
use egoact::NUM_JOINTS;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

const CONFIG_HELP: &str = "\
Config file format: `key = value` lines under `[section]` headers; `#` comments.
Defaults shown in parentheses.

[paths]   data_dir (data), output_dir (out)
[sim]     seed (1), policy (deterministic | stochastic | goal_directed),
          epsilon (0.3, stochastic only), n_primitives (8), n_scenes (4),
          scene_context_dim (8), n_episodes (12), episode_len (20),
          frame_interval_us (200000), imu_interval_us (50000),
          feature_dim (32), feature_noise_sigma (0), sensor_noise_rad (0)
[model]   embed_dim (32), hidden (64), k (8), n_obs (5), n_pred (5), horizon (5)
[train]   epochs (50), lr (0.05), momentum (0.9), init_seed (1),
          shuffle_seed (1), holdout_episodes (2)
[codebook] seed (1), max_iter (100), tol (1e-9)

Exit codes: 0 success, 2 I/O error, 3 config/data error, 4 numeric failure.";

#[derive(Parser)]
#[command(name = "egoact", about = "Ego-centric action modeling pipeline", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset into the config's data_dir
    Simulate { config: PathBuf },
    /// Align IMU streams to the frame index and extract displacements
    Sync {
        imu: PathBuf,
        frames: PathBuf,
        /// Camera-to-IMU clock offset in microseconds
        #[arg(long, default_value_t = 0)]
        offset_us: i64,
        /// Averaging half-window in microseconds
        #[arg(long, default_value_t = ingest::DEFAULT_HALF_WINDOW_US)]
        half_window_us: i64,
        /// Directory for aligned.txt and displacements.txt
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit the per-joint geodesic K-means codebook
    FitCodebook {
        displacements: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_iter: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value = "codebook.txt")]
        out: PathBuf,
    },
    /// Assign codebook classes to a displacement file
    Label {
        displacements: PathBuf,
        codebook: PathBuf,
        #[arg(long, default_value = "labels.txt")]
        out: PathBuf,
    },
    /// Train the encoder-decoder action predictor
    TrainAct {
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// Train the recurrent planner
    TrainPlan {
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// Evaluate an acting checkpoint on held-out episodes (with baselines)
    EvalAct {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Continuous displacements for the angular metric
        #[arg(long)]
        displacements: Option<PathBuf>,
    },
    /// Evaluate a planning checkpoint on held-out episodes
    EvalPlan {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// Linear scene probe: trained vs random-init encoder
    Probe {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
    /// Finite-difference gradient check of both architectures
    Gradcheck,
}

struct AppError {
    code: i32,
    class: String,
    msg: String,
}

impl AppError {
    fn new(code: i32, class: &str, msg: impl std::fmt::Display) -> AppError {
        AppError {
            code,
            class: class.to_string(),
            msg: msg.to_string(),
        }
    }
}

fn map_io(e: &std::io::Error, msg: impl std::fmt::Display) -> AppError {
    if e.kind() == std::io::ErrorKind::NotFound {
        AppError::new(2, "io.missing", msg)
    } else {
        AppError::new(2, "io.error", msg)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> AppError {
        let msg = e.to_string();
        map_io(&e, msg)
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> AppError {
        match &e {
            ConfigError::Io(io) => map_io(io, &e),
            ConfigError::Parse { .. } => AppError::new(3, "config.parse", e),
            ConfigError::Invalid(_) => AppError::new(3, "config.invalid", e),
        }
    }
}

impl From<IngestError> for AppError {
    fn from(e: IngestError) -> AppError {
        match &e {
            IngestError::Io(io) => map_io(io, &e),
            IngestError::Format { .. } => AppError::new(3, "data.format", e),
            IngestError::Quat(_) => AppError::new(4, "numeric.quaternion", e),
            _ => AppError::new(3, "data.coverage", e),
        }
    }
}

impl From<CodebookError> for AppError {
    fn from(e: CodebookError) -> AppError {
        match &e {
            CodebookError::Io(io) => map_io(io, &e),
            CodebookError::Format(_) => AppError::new(3, "data.format", e),
            CodebookError::InsufficientData { .. } => AppError::new(3, "data.insufficient", e),
            CodebookError::IndexOutOfRange(..) => AppError::new(3, "data.range", e),
        }
    }
}

impl From<NetError> for AppError {
    fn from(e: NetError) -> AppError {
        match &e {
            NetError::Io(io) => map_io(io, &e),
            NetError::Format(_) => AppError::new(3, "data.format", e),
            NetError::ShapeMismatch(_) => AppError::new(3, "config.shape", e),
            NetError::ZeroFrequency { .. } => AppError::new(4, "numeric.zero_frequency", e),
        }
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> AppError {
        match &e {
            SimError::Io(io) => map_io(io, &e),
            SimError::Config(_) => AppError::new(3, "config.sim", e),
            SimError::ProjectionCollision(_) => AppError::new(4, "numeric.projection", e),
        }
    }
}

impl From<FeatureError> for AppError {
    fn from(e: FeatureError) -> AppError {
        match &e {
            FeatureError::Io(io) => map_io(io, &e),
            _ => AppError::new(3, "data.format", e),
        }
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> AppError {
        match &e {
            EvalError::Io(io) => map_io(io, &e),
            _ => AppError::new(3, "data.empty", e),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {}: {}", e.class, e.msg);
        std::process::exit(e.code);
    }
}

/// Load the pieces shared by train/eval/probe: config, codebook,
/// assembled episodes split into (train, holdout).
struct Loaded {
    cfg: RunConfig,
    codebook: Codebook,
    train: Vec<EpisodeTensor>,
    holdout: Vec<EpisodeTensor>,
}

fn load_dataset(
    config: &Path,
    labels: &Option<PathBuf>,
    codebook: &Option<PathBuf>,
) -> Result<Loaded, AppError> {
    let cfg = RunConfig::load(config)?;
    let labels_path = labels
        .clone()
        .unwrap_or_else(|| cfg.data_dir.join("labels.txt"));
    let codebook_path = codebook
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("codebook.txt"));
    let cb = Codebook::load(&codebook_path)?;
    if cb.k != cfg.k {
        return Err(AppError::new(
            3,
            "config.invalid",
            format!("codebook K = {} but config k = {}", cb.k, cfg.k),
        ));
    }
    let table = features::load_features(&cfg.data_dir.join("features.txt"))?;
    let label_map = sim::read_labels(&labels_path)?;
    let manifest = sim::read_manifest(&cfg.data_dir.join("manifest.txt"))?;
    let mut episodes = EpisodeTensor::assemble(&table, &label_map, &manifest)?;
    for ep in &episodes {
        for l in &ep.labels {
            for &c in &l.classes {
                if c >= cfg.k {
                    return Err(AppError::new(
                        3,
                        "data.range",
                        format!("label class {c} out of range for K = {}", cfg.k),
                    ));
                }
            }
        }
    }
    let split = episodes.len() - cfg.holdout_episodes.min(episodes.len() - 1);
    let holdout = episodes.split_off(split);
    Ok(Loaded {
        cfg,
        codebook: cb,
        train: episodes,
        holdout,
    })
}

fn joint_freqs(cb: &Codebook) -> Vec<Vec<u64>> {
    cb.joints.iter().map(|j| j.frequencies.clone()).collect()
}

fn check_finite(curve: &[f64]) -> Result<(), AppError> {
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(AppError::new(
            4,
            "numeric.divergence",
            "training loss is not finite; lower lr",
        ));
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), AppError> {
    match cmd {
        Cmd::Simulate { config } => {
            let cfg = RunConfig::load(&config)?;
            let data = sim::generate(&cfg.sim)?;
            sim::write_dataset(&cfg.data_dir, &cfg.sim, &data)?;
            println!(
                "simulated {} episodes x {} frames into {}",
                data.episodes.len(),
                cfg.sim.episode_len,
                cfg.data_dir.display()
            );
            Ok(())
        }
        Cmd::Sync {
            imu,
            frames,
            offset_us,
            half_window_us,
            out_dir,
        } => {
            let streams = ingest::read_imu_file(&imu)?;
            let index = ingest::read_frame_index(&frames)?;
            let res = ingest::align(&streams, &index, offset_us, half_window_us)?;
            let disp = ingest::displacements(&res.records)?;
            std::fs::create_dir_all(&out_dir)?;
            let aligned_path = out_dir.join("aligned.txt");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&aligned_path)?);
            for r in &res.records {
                write!(out, "{}", r.frame_id)?;
                for q in &r.orientations {
                    for c in q.components() {
                        write!(out, " {c}")?;
                    }
                }
                writeln!(out)?;
            }
            out.flush()?;
            ingest::write_displacements(&out_dir.join("displacements.txt"), &disp)?;
            println!(
                "aligned {} frames ({} dropped), {} displacements",
                res.records.len(),
                res.dropped,
                disp.len()
            );
            Ok(())
        }
        Cmd::FitCodebook {
            displacements,
            k,
            seed,
            max_iter,
            tol,
            out,
        } => {
            if k < 2 {
                return Err(AppError::new(3, "config.invalid", "k must be >= 2"));
            }
            let disp = ingest::read_displacements(&displacements)?;
            let cb = codebook::fit(&disp, k, seed, max_iter, tol)?;
            cb.save(&out)?;
            let objective: f64 = cb.joints.iter().map(|j| j.objective).sum();
            println!("fitted K={k} codebook, total objective {objective}");
            Ok(())
        }
        Cmd::Label {
            displacements,
            codebook,
            out,
        } => {
            let disp = ingest::read_displacements(&displacements)?;
            let cb = Codebook::load(&codebook)?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
            for r in &disp {
                let label = cb.label(r);
                write!(w, "{}", r.frame_id)?;
                for c in label.classes {
                    write!(w, " {c}")?;
                }
                writeln!(w)?;
            }
            w.flush()?;
            println!("labeled {} steps", disp.len());
            Ok(())
        }
        Cmd::TrainAct {
            config,
            labels,
            codebook,
        } => {
            let loaded = load_dataset(&config, &labels, &codebook)?;
            let cfg = &loaded.cfg;
            let mut model = ActingModel::new(cfg.acting_config(), cfg.init_seed);
            let freqs = joint_freqs(&loaded.codebook);
            let curve = acting::train(&mut model, &loaded.train, &freqs, &cfg.train_config())?;
            check_finite(&curve)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            model.save(&cfg.output_dir.join("act.ck"), &loaded.codebook)?;
            eval::write_curve(&cfg.output_dir.join("act_loss.txt"), &curve)?;
            println!(
                "trained acting model: {} epochs, final loss {}",
                curve.len(),
                curve.last().unwrap()
            );
            Ok(())
        }
        Cmd::TrainPlan {
            config,
            labels,
            codebook,
        } => {
            let loaded = load_dataset(&config, &labels, &codebook)?;
            let cfg = &loaded.cfg;
            let mut model = PlanningModel::new(cfg.planning_config(), cfg.init_seed);
            let freqs = joint_freqs(&loaded.codebook);
            let curve =
                planning::train_planner(&mut model, &loaded.train, &freqs, &cfg.train_config())?;
            check_finite(&curve)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            model.save(&cfg.output_dir.join("plan.ck"), &loaded.codebook)?;
            eval::write_curve(&cfg.output_dir.join("plan_loss.txt"), &curve)?;
            println!(
                "trained planner: {} epochs, final loss {}",
                curve.len(),
                curve.last().unwrap()
            );
            Ok(())
        }
        Cmd::EvalAct {
            checkpoint,
            config,
            labels,
            codebook,
            displacements,
        } => {
            let loaded = load_dataset(&config, &labels, &codebook)?;
            let cfg = &loaded.cfg;
            let model = ActingModel::load(&checkpoint, &loaded.codebook)?;
            let disp_map = match &displacements {
                Some(p) => Some(displacement_map(p)?),
                None => None,
            };
            let report = eval_acting(&model, &loaded, disp_map.as_ref())?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            eval::write_key_values(&cfg.output_dir.join("act_report.txt"), &report)?;
            for (k, v) in &report {
                println!("{k} {v}");
            }
            Ok(())
        }
        Cmd::EvalPlan {
            checkpoint,
            config,
            labels,
            codebook,
        } => {
            let loaded = load_dataset(&config, &labels, &codebook)?;
            let cfg = &loaded.cfg;
            let model = PlanningModel::load(&checkpoint, &loaded.codebook)?;
            let report = eval_planning(&model, &loaded)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            eval::write_key_values(&cfg.output_dir.join("plan_report.txt"), &report)?;
            for (k, v) in &report {
                println!("{k} {v}");
            }
            Ok(())
        }
        Cmd::Probe {
            checkpoint,
            config,
            labels,
            codebook,
        } => {
            let loaded = load_dataset(&config, &labels, &codebook)?;
            let cfg = &loaded.cfg;
            let trained = ActingModel::load(&checkpoint, &loaded.codebook)?;
            let random = ActingModel::new(trained.cfg, trained.store.seed.wrapping_add(1));
            let scenes: std::collections::BTreeSet<usize> = loaded
                .holdout
                .iter()
                .chain(&loaded.train)
                .map(|e| e.scene_label)
                .collect();
            let n_scenes = scenes.iter().max().map_or(1, |m| m + 1);
            let degenerate = scenes.len() < 2;
            let (acc_trained, acc_random) = eval::linear_probe(
                &trained,
                &random,
                &loaded.train,
                &loaded.holdout,
                n_scenes,
                cfg.shuffle_seed,
            )?;
            let report = vec![
                ("probe_trained_accuracy", format!("{acc_trained}")),
                ("probe_random_accuracy", format!("{acc_random}")),
                ("probe_scene_count", format!("{}", scenes.len())),
                ("probe_degenerate", format!("{degenerate}")),
            ];
            std::fs::create_dir_all(&cfg.output_dir)?;
            eval::write_key_values(&cfg.output_dir.join("probe_report.txt"), &report)?;
            for (k, v) in &report {
                println!("{k} {v}");
            }
            Ok(())
        }
        Cmd::Gradcheck => gradcheck(),
    }
}

fn displacement_map(
    path: &Path,
) -> Result<BTreeMap<i64, [UnitQuaternion; NUM_JOINTS]>, AppError> {
    let disp = ingest::read_displacements(path)?;
    Ok(disp
        .into_iter()
        .map(|r| (r.frame_id, r.displacements))
        .collect())
}

fn eval_acting(
    model: &ActingModel,
    loaded: &Loaded,
    disp_map: Option<&BTreeMap<i64, [UnitQuaternion; NUM_JOINTS]>>,
) -> Result<Vec<(&'static str, String)>, AppError> {
    let k = model.cfg.k;
    let (n_obs, n_pred) = (model.cfg.n_obs, model.cfg.n_pred);
    let train_items: Vec<(Vec<f64>, Vec<ActionLabel>)> = loaded
        .train
        .iter()
        .flat_map(|ep| acting::windows(ep, n_obs, n_pred))
        .map(|(feats, labs)| (feats.concat(), labs))
        .collect();
    let train_labels: Vec<ActionLabel> = loaded
        .train
        .iter()
        .flat_map(|ep| ep.labels.iter().copied())
        .collect();
    let mode = eval::mode_baseline(&train_labels, k)?;

    let mut preds = Vec::new();
    let mut nn_preds = Vec::new();
    let mut gts = Vec::new();
    let mut ppl_items = Vec::new();
    let mut angular_pairs: Vec<(ActionLabel, [UnitQuaternion; NUM_JOINTS])> = Vec::new();
    for ep in &loaded.holdout {
        if ep.features.len() < n_obs + n_pred {
            continue;
        }
        for i in 0..=ep.features.len() - (n_obs + n_pred) {
            let feats = &ep.features[i..i + n_obs];
            let gt = &ep.labels[i + n_obs - 1..i + n_obs - 1 + n_pred];
            let probs = model.decode_probs(feats)?;
            let mut item = Vec::with_capacity(n_pred * NUM_JOINTS);
            for (s, label) in gt.iter().enumerate() {
                let mut classes = [0usize; NUM_JOINTS];
                for j in 0..NUM_JOINTS {
                    classes[j] = acting::argmax(&probs[s][j]);
                    item.push(probs[s][j][label.classes[j]]);
                }
                preds.push(ActionLabel { classes });
                gts.push(*label);
                if let Some(map) = disp_map {
                    let frame = ep.first_frame + (i + n_obs - 1 + s) as i64;
                    if let Some(d) = map.get(&frame) {
                        angular_pairs.push((ActionLabel { classes }, *d));
                    }
                }
            }
            ppl_items.push(item);
            let nn = eval::nn_baseline(&train_items, &feats.concat())?;
            nn_preds.extend(nn.iter().copied());
        }
    }
    if gts.is_empty() {
        return Err(AppError::new(
            3,
            "data.empty",
            "no held-out windows: episodes shorter than n_obs + n_pred",
        ));
    }
    let mode_preds = vec![mode; gts.len()];
    let (ppl, zero_flag) = eval::perplexity(&ppl_items)?;
    let mut report = vec![
        ("mean_class_accuracy", format!("{}", eval::mean_class_accuracy(&preds, &gts, k)?)),
        ("perplexity", format!("{ppl}")),
        ("zero_probability", format!("{zero_flag}")),
        ("all_joint_accuracy", format!("{}", eval::all_joint_accuracy(&preds, &gts)?)),
        ("nn_mean_class_accuracy", format!("{}", eval::mean_class_accuracy(&nn_preds, &gts, k)?)),
        ("nn_all_joint_accuracy", format!("{}", eval::all_joint_accuracy(&nn_preds, &gts)?)),
        ("mode_mean_class_accuracy", format!("{}", eval::mean_class_accuracy(&mode_preds, &gts, k)?)),
        ("mode_all_joint_accuracy", format!("{}", eval::all_joint_accuracy(&mode_preds, &gts)?)),
        ("evaluated_steps", format!("{}", gts.len())),
    ];
    if !angular_pairs.is_empty() {
        let (p, d): (Vec<_>, Vec<_>) = angular_pairs.into_iter().unzip();
        report.push((
            "angular_deg",
            format!("{}", eval::angular_metric(&p, &d, &loaded.codebook)?),
        ));
    }
    Ok(report)
}

fn eval_planning(
    model: &PlanningModel,
    loaded: &Loaded,
) -> Result<Vec<(&'static str, String)>, AppError> {
    let k = model.cfg.k;
    let horizon = model.cfg.horizon;
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    let mut ppl_items = Vec::new();
    let mut sequences = 0usize;
    let mut sequences_correct = 0usize;
    for ep in &loaded.holdout {
        for (fs, fe, labels) in planning::plan_items(ep, horizon) {
            let probs = model.plan(&fs, &fe, horizon)?;
            let mut item = Vec::with_capacity(horizon * NUM_JOINTS);
            let mut all_ok = true;
            for (s, label) in labels.iter().enumerate() {
                let mut classes = [0usize; NUM_JOINTS];
                for j in 0..NUM_JOINTS {
                    classes[j] = acting::argmax(&probs[s][j]);
                    item.push(probs[s][j][label.classes[j]]);
                }
                all_ok &= classes == label.classes;
                preds.push(ActionLabel { classes });
                gts.push(*label);
            }
            sequences += 1;
            sequences_correct += all_ok as usize;
            ppl_items.push(item);
        }
    }
    if gts.is_empty() {
        return Err(AppError::new(
            3,
            "data.empty",
            "no held-out plan items: episodes shorter than horizon + 1 frames",
        ));
    }
    let (ppl, zero_flag) = eval::perplexity(&ppl_items)?;
    Ok(vec![
        ("mean_class_accuracy", format!("{}", eval::mean_class_accuracy(&preds, &gts, k)?)),
        ("perplexity", format!("{ppl}")),
        ("zero_probability", format!("{zero_flag}")),
        ("all_joint_accuracy", format!("{}", eval::all_joint_accuracy(&preds, &gts)?)),
        ("sequence_accuracy", format!("{}", 100.0 * sequences_correct as f64 / sequences as f64)),
        ("random_all_joint_baseline", format!("{}", eval::codebook_prior_all_joint(&loaded.codebook))),
        ("evaluated_steps", format!("{}", gts.len())),
    ])
}

fn gradcheck() -> Result<(), AppError> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut rand_vec = |n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let labels: Vec<ActionLabel> = (0..3)
        .map(|s| {
            let mut classes = [0usize; NUM_JOINTS];
            for (j, c) in classes.iter_mut().enumerate() {
                *c = (s * 3 + j) % 8;
            }
            ActionLabel { classes }
        })
        .collect();
    let freqs = vec![vec![2u64; 8]; NUM_JOINTS];

    let acfg = acting::ActingConfig {
        feature_dim: 6,
        embed_dim: 6,
        hidden: 8,
        k: 8,
        n_obs: 3,
        n_pred: 3,
    };
    let mut act = ActingModel::new(acfg, 1);
    let feats: Vec<Vec<f64>> = (0..acfg.n_obs).map(|_| rand_vec(acfg.feature_dim)).collect();
    act.store.zero_grads();
    act.backward_window(&feats, &labels, &freqs)?;
    let probe = ActingModel::new(acfg, 1);
    let worst_act = net::finite_diff_check(
        &mut act.store,
        &mut |s| probe.loss_with(s, &feats, &labels, &freqs).unwrap(),
        1e-5,
    );
    println!("acting worst relative error {worst_act}");

    let pcfg = PlanningConfig {
        feature_dim: 6,
        hidden: 8,
        k: 8,
        horizon: 3,
    };
    let mut plan = PlanningModel::new(pcfg, 2);
    let fs = rand_vec(pcfg.feature_dim);
    let fe = rand_vec(pcfg.feature_dim);
    plan.store.zero_grads();
    plan.backward_item(&fs, &fe, &labels, &freqs)?;
    let probe = PlanningModel::new(pcfg, 2);
    let worst_plan = net::finite_diff_check(
        &mut plan.store,
        &mut |s| probe.loss_with(s, &fs, &fe, &labels, &freqs).unwrap(),
        1e-5,
    );
    println!("planning worst relative error {worst_plan}");

    if worst_act < 1e-4 && worst_plan < 1e-4 {
        println!("gradcheck passed");
        Ok(())
    } else {
        Err(AppError::new(
            4,
            "numeric.gradcheck",
            format!("relative errors {worst_act} / {worst_plan} exceed 1e-4"),
        ))
    }
}
