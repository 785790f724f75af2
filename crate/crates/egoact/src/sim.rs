//! Synthetic ego-agent world.
//!
//! Six joints each rotate about a fixed per-joint axis on a discrete
//! angular grid of `n_primitives + 1` positions; the primitive action
//! `c` advances a joint by `c + 1` grid steps. Policies over this
//! primitive set produce episodes whose IMU streams, frame index,
//! features, and labels are emitted in exactly the formats the ingest
//! and featurizer modules consume, which makes the simulator the ground
//! truth for the end-to-end pipeline tests.

use crate::features::{gauss, FeatureTable, Projection};
use crate::ingest::{FrameIndexEntry, ImuSample};
use crate::quat::{self, UnitQuaternion};
use crate::NUM_JOINTS;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid world config: {0}")]
    Config(String),
    #[error("could not find an injective feature projection after {0} attempts")]
    ProjectionCollision(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Closed-loop: each joint's action is a fixed function of its grid
    /// position and the episode's scene label.
    Deterministic,
    /// Deterministic rule, but each joint independently takes a uniform
    /// random action with the given probability.
    Stochastic(f64),
    /// Greedy per-joint pursuit of a sampled goal pose; ties break to
    /// the lowest class index.
    GoalDirected,
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub n_primitives: usize,
    pub policy: PolicyKind,
    pub n_scenes: usize,
    pub scene_context_dim: usize,
    pub n_episodes: usize,
    pub episode_len: usize, // frames per episode
    pub frame_interval_us: i64,
    pub imu_interval_us: i64,
    pub feature_dim: usize,
    pub feature_noise_sigma: f64,
    pub sensor_noise_rad: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> WorldConfig {
        WorldConfig {
            n_primitives: 8,
            policy: PolicyKind::Deterministic,
            n_scenes: 4,
            scene_context_dim: 8,
            n_episodes: 12,
            episode_len: 20,
            frame_interval_us: 200_000,
            imu_interval_us: 50_000,
            feature_dim: 32,
            feature_noise_sigma: 0.0,
            sensor_noise_rad: 0.0,
            seed: 1,
        }
    }
}

// one fixed rotation axis per joint
const AXES: [[f64; 3]; NUM_JOINTS] = [
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
];

impl WorldConfig {
    /// Grid positions per joint circle; one more than the primitive
    /// count so that no primitive is the identity.
    pub fn grid_size(&self) -> usize {
        self.n_primitives + 1
    }

    pub fn grid_step_rad(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.grid_size() as f64
    }

    /// Primitive rotation for (joint, class): `class + 1` grid steps
    /// about the joint's axis.
    pub fn primitive(&self, joint: usize, class: usize) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle(AXES[joint], (class as f64 + 1.0) * self.grid_step_rad())
    }

    pub fn pose_at(&self, joint: usize, bin: usize) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle(AXES[joint], bin as f64 * self.grid_step_rad())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_primitives < 2 {
            return Err(SimError::Config("n_primitives must be >= 2".into()));
        }
        if self.frame_interval_us <= 0 || self.imu_interval_us <= 0 {
            return Err(SimError::Config("rates must be positive".into()));
        }
        if self.episode_len < 2 {
            return Err(SimError::Config("episode_len must be >= 2".into()));
        }
        if self.n_scenes == 0 || self.scene_context_dim == 0 {
            return Err(SimError::Config("scene setup must be nonempty".into()));
        }
        if self.n_episodes == 0 {
            return Err(SimError::Config("need at least one episode".into()));
        }
        if self.feature_dim == 0 {
            return Err(SimError::Config("feature_dim must be positive".into()));
        }
        // primitives must stay well separated relative to sensor noise
        let mut min_dist = f64::INFINITY;
        for j in 0..NUM_JOINTS {
            for a in 0..self.n_primitives {
                for b in (a + 1)..self.n_primitives {
                    let d =
                        quat::geodesic_distance(&self.primitive(j, a), &self.primitive(j, b));
                    min_dist = min_dist.min(d);
                }
            }
        }
        if min_dist <= 5.0 * self.sensor_noise_rad {
            return Err(SimError::Config(format!(
                "primitive separation {min_dist} not above 5x sensor noise"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimEpisode {
    pub episode_id: usize,
    pub first_frame: i64,
    pub scene_label: usize,
    /// grid position of every joint at every frame
    pub bins: Vec<[usize; NUM_JOINTS]>,
    /// primitive class chosen at every step (len = frames - 1)
    pub actions: Vec<[usize; NUM_JOINTS]>,
    pub goal_bins: Option<[usize; NUM_JOINTS]>,
}

impl SimEpisode {
    pub fn last_frame(&self) -> i64 {
        self.first_frame + self.bins.len() as i64 - 1
    }

    pub fn pose(&self, cfg: &WorldConfig, frame: usize) -> [UnitQuaternion; NUM_JOINTS] {
        let mut pose = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            pose[j] = cfg.pose_at(j, self.bins[frame][j]);
        }
        pose
    }
}

#[derive(Debug)]
pub struct Dataset {
    pub episodes: Vec<SimEpisode>,
    pub contexts: Vec<Vec<f64>>,
    pub projection: Projection,
    pub features: FeatureTable,
}

/// Deterministic policy rule: class from grid position and scene. The
/// scene enters multiplicatively (odd multiplier, coprime to the class
/// count), so each scene induces a genuinely different position-to-class
/// map rather than a shifted copy.
fn deterministic_action(bin: usize, scene: usize, k: usize) -> usize {
    (bin + 1) * (2 * scene + 1) % k
}

/// Greedy goal pursuit on the joint's circle, ties to the lowest class.
fn goal_action(bin: usize, goal: usize, k: usize, grid: usize) -> usize {
    let mut best = 0usize;
    let mut best_dist = usize::MAX;
    for c in 0..k {
        let target = (bin + c + 1) % grid;
        let diff = (grid + goal - target) % grid;
        let dist = diff.min(grid - diff);
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

/// Frame-id stride between consecutive episodes; the gap guarantees an
/// episode break in the displacement stream.
pub fn episode_stride(episode_len: usize) -> i64 {
    episode_len as i64 + 10
}

/// Roll out every episode and compute features, retrying the projection
/// if the noiseless feature map collides on the visited state set.
pub fn generate(cfg: &WorldConfig) -> Result<Dataset, SimError> {
    cfg.validate()?;
    let k = cfg.n_primitives;
    let grid = cfg.grid_size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let contexts: Vec<Vec<f64>> = (0..cfg.n_scenes)
        .map(|_| (0..cfg.scene_context_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let mut episodes = Vec::with_capacity(cfg.n_episodes);
    for e in 0..cfg.n_episodes {
        let scene = e % cfg.n_scenes;
        let first_frame = e as i64 * episode_stride(cfg.episode_len);
        let goal_bins = match cfg.policy {
            PolicyKind::GoalDirected => {
                let mut g = [0usize; NUM_JOINTS];
                for gj in g.iter_mut() {
                    *gj = rng.gen_range(0..grid);
                }
                Some(g)
            }
            _ => None,
        };
        let mut bins = vec![[0usize; NUM_JOINTS]];
        let mut actions = Vec::with_capacity(cfg.episode_len - 1);
        for _ in 0..cfg.episode_len - 1 {
            let cur = *bins.last().unwrap();
            let mut act = [0usize; NUM_JOINTS];
            let mut next = [0usize; NUM_JOINTS];
            for j in 0..NUM_JOINTS {
                let a = match cfg.policy {
                    PolicyKind::Deterministic => deterministic_action(cur[j], scene, k),
                    PolicyKind::Stochastic(eps) => {
                        if rng.gen::<f64>() < eps {
                            rng.gen_range(0..k)
                        } else {
                            deterministic_action(cur[j], scene, k)
                        }
                    }
                    PolicyKind::GoalDirected => {
                        goal_action(cur[j], goal_bins.unwrap()[j], k, grid)
                    }
                };
                act[j] = a;
                next[j] = (cur[j] + a + 1) % grid;
            }
            actions.push(act);
            bins.push(next);
        }
        episodes.push(SimEpisode {
            episode_id: e,
            first_frame,
            scene_label: scene,
            bins,
            actions,
            goal_bins,
        });
    }

    // distinct (joint bins, scene) states actually visited
    let mut states: BTreeSet<([usize; NUM_JOINTS], usize)> = BTreeSet::new();
    for ep in &episodes {
        for b in &ep.bins {
            states.insert((*b, ep.scene_label));
        }
    }

    const MAX_PROJECTION_TRIES: usize = 20;
    let mut projection = None;
    for attempt in 0..MAX_PROJECTION_TRIES {
        let proj = Projection::new(
            cfg.feature_dim,
            cfg.scene_context_dim,
            cfg.seed.wrapping_add(attempt as u64).wrapping_mul(0x9e37_79b9),
        );
        let mut noiseless = Vec::with_capacity(states.len());
        let mut dummy = ChaCha8Rng::seed_from_u64(0);
        for (bins, scene) in &states {
            let mut pose = [UnitQuaternion::IDENTITY; NUM_JOINTS];
            for j in 0..NUM_JOINTS {
                pose[j] = cfg.pose_at(j, bins[j]);
            }
            noiseless.push(proj.observe(&pose, &contexts[*scene], 0.0, &mut dummy));
        }
        let mut injective = true;
        'outer: for i in 0..noiseless.len() {
            for l in (i + 1)..noiseless.len() {
                let d2: f64 = noiseless[i]
                    .iter()
                    .zip(&noiseless[l])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 < 1e-18 {
                    injective = false;
                    break 'outer;
                }
            }
        }
        if injective {
            projection = Some(proj);
            break;
        }
    }
    let projection = projection.ok_or(SimError::ProjectionCollision(MAX_PROJECTION_TRIES))?;

    let mut feature_rows = BTreeMap::new();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xfeed));
    for ep in &episodes {
        for (f, _) in ep.bins.iter().enumerate() {
            let pose = ep.pose(cfg, f);
            let v = projection.observe(
                &pose,
                &contexts[ep.scene_label],
                cfg.feature_noise_sigma,
                &mut noise_rng,
            );
            feature_rows.insert(ep.first_frame + f as i64, v);
        }
    }

    Ok(Dataset {
        episodes,
        contexts,
        projection,
        features: FeatureTable {
            dim: cfg.feature_dim,
            rows: feature_rows,
        },
    })
}

/// IMU samples for all episodes of one joint, slerp-interpolated along
/// each step with a dwell at the frame instants (motion happens in the
/// middle half of the interval), so a 0.1 s window centered on a frame
/// sees only the frame pose.
fn imu_stream(cfg: &WorldConfig, episodes: &[SimEpisode], joint: usize) -> Vec<ImuSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed.wrapping_add(0xab1e).wrapping_add(joint as u64),
    );
    let mut samples = Vec::new();
    for ep in episodes {
        let start_ts = ep.first_frame * cfg.frame_interval_us;
        let end_ts = ep.last_frame() * cfg.frame_interval_us;
        let mut ts = start_ts;
        while ts <= end_ts {
            let rel = ts - start_ts;
            let step = (rel / cfg.frame_interval_us) as usize;
            let step = step.min(ep.bins.len() - 2);
            let frac =
                (ts - (start_ts + step as i64 * cfg.frame_interval_us)) as f64
                    / cfg.frame_interval_us as f64;
            let s = ((frac - 0.25) / 0.5).clamp(0.0, 1.0);
            let a = cfg.pose_at(joint, ep.bins[step][joint]);
            let b = cfg.pose_at(joint, ep.bins[step + 1][joint]);
            let mut q = quat::slerp(&a, &b, s);
            if cfg.sensor_noise_rad > 0.0 {
                let axis = [gauss(&mut rng), gauss(&mut rng), gauss(&mut rng)];
                let angle = gauss(&mut rng) * cfg.sensor_noise_rad;
                q = quat::multiply(&q, &UnitQuaternion::from_axis_angle(axis, angle));
            }
            samples.push(ImuSample {
                timestamp_us: ts,
                joint_id: joint,
                orientation: q,
            });
            ts += cfg.imu_interval_us;
        }
    }
    samples
}

pub fn frame_index(cfg: &WorldConfig, episodes: &[SimEpisode]) -> Vec<FrameIndexEntry> {
    let mut frames = Vec::new();
    for ep in episodes {
        for f in 0..ep.bins.len() {
            let id = ep.first_frame + f as i64;
            frames.push(FrameIndexEntry {
                frame_id: id,
                timestamp_us: id * cfg.frame_interval_us,
            });
        }
    }
    frames
}

/// Write the full dataset in the pipeline's file formats: `imu.txt`,
/// `frames.txt`, `features.txt`, `labels.txt`, `manifest.txt`.
pub fn write_dataset(dir: &Path, cfg: &WorldConfig, data: &Dataset) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;

    let mut imu = std::io::BufWriter::new(std::fs::File::create(dir.join("imu.txt"))?);
    // joint streams interleaved by timestamp for readability; the reader
    // splits per joint anyway
    let mut all: Vec<ImuSample> = (0..NUM_JOINTS)
        .flat_map(|j| imu_stream(cfg, &data.episodes, j))
        .collect();
    all.sort_by_key(|s| (s.timestamp_us, s.joint_id));
    for s in &all {
        let q = s.orientation;
        writeln!(
            imu,
            "{} {} {} {} {} {}",
            s.timestamp_us, s.joint_id, q.w, q.x, q.y, q.z
        )?;
    }
    imu.flush()?;

    let mut frames = std::io::BufWriter::new(std::fs::File::create(dir.join("frames.txt"))?);
    for f in frame_index(cfg, &data.episodes) {
        writeln!(frames, "{} {}", f.frame_id, f.timestamp_us)?;
    }
    frames.flush()?;

    crate::features::save_features(dir.join("features.txt").as_path(), &data.features)
        .map_err(|e| SimError::Config(format!("feature write: {e}")))?;

    let mut labels = std::io::BufWriter::new(std::fs::File::create(dir.join("labels.txt"))?);
    for ep in &data.episodes {
        for (s, act) in ep.actions.iter().enumerate() {
            write!(labels, "{}", ep.first_frame + s as i64)?;
            for a in act {
                write!(labels, " {a}")?;
            }
            writeln!(labels)?;
        }
    }
    labels.flush()?;

    let mut manifest =
        std::io::BufWriter::new(std::fs::File::create(dir.join("manifest.txt"))?);
    for ep in &data.episodes {
        writeln!(
            manifest,
            "{} {} {} {}",
            ep.episode_id,
            ep.first_frame,
            ep.last_frame(),
            ep.scene_label
        )?;
    }
    manifest.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct ManifestEntry {
    pub episode_id: usize,
    pub first_frame: i64,
    pub last_frame: i64,
    pub scene_label: usize,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, SimError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 4 {
            return Err(SimError::Config(format!("manifest line {}: bad field count", i + 1)));
        }
        let parse = |s: &str| -> Result<i64, SimError> {
            s.parse()
                .map_err(|e| SimError::Config(format!("manifest line {}: {e}", i + 1)))
        };
        out.push(ManifestEntry {
            episode_id: parse(f[0])? as usize,
            first_frame: parse(f[1])?,
            last_frame: parse(f[2])?,
            scene_label: parse(f[3])? as usize,
        });
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<BTreeMap<i64, [usize; NUM_JOINTS]>, SimError> {
    let file = std::fs::File::open(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 1 + NUM_JOINTS {
            return Err(SimError::Config(format!("labels line {}: bad field count", i + 1)));
        }
        let frame: i64 = f[0]
            .parse()
            .map_err(|e| SimError::Config(format!("labels line {}: {e}", i + 1)))?;
        let mut classes = [0usize; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            classes[j] = f[1 + j]
                .parse()
                .map_err(|e| SimError::Config(format!("labels line {}: {e}", i + 1)))?;
        }
        out.insert(frame, classes);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook;
    use crate::ingest;

    #[test]
    fn config_validation() {
        let mut cfg = WorldConfig::default();
        cfg.n_primitives = 1;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
        let mut cfg = WorldConfig::default();
        cfg.sensor_noise_rad = 1.0; // grid step ~0.7 rad, way below 5 sigma
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
        assert!(WorldConfig::default().validate().is_ok());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = WorldConfig {
            n_episodes: 4,
            episode_len: 8,
            ..WorldConfig::default()
        };
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_dataset(dir1.path(), &cfg, &generate(&cfg).unwrap()).unwrap();
        write_dataset(dir2.path(), &cfg, &generate(&cfg).unwrap()).unwrap();
        for name in ["imu.txt", "frames.txt", "features.txt", "labels.txt", "manifest.txt"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn poses_follow_primitive_composition() {
        let cfg = WorldConfig {
            n_episodes: 2,
            episode_len: 10,
            policy: PolicyKind::Stochastic(0.5),
            ..WorldConfig::default()
        };
        let data = generate(&cfg).unwrap();
        for ep in &data.episodes {
            for (s, act) in ep.actions.iter().enumerate() {
                for j in 0..NUM_JOINTS {
                    let before = cfg.pose_at(j, ep.bins[s][j]);
                    let after = cfg.pose_at(j, ep.bins[s + 1][j]);
                    let expected = quat::multiply(&before, &cfg.primitive(j, act[j]));
                    assert!(quat::geodesic_distance(&after, &expected) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn align_round_trip_recovers_poses() {
        let cfg = WorldConfig {
            n_episodes: 2,
            episode_len: 6,
            policy: PolicyKind::Stochastic(1.0),
            ..WorldConfig::default()
        };
        let data = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &cfg, &data).unwrap();
        let streams = ingest::read_imu_file(&dir.path().join("imu.txt")).unwrap();
        let frames = ingest::read_frame_index(&dir.path().join("frames.txt")).unwrap();
        let res = ingest::align(&streams, &frames, 0, ingest::DEFAULT_HALF_WINDOW_US).unwrap();
        assert_eq!(res.dropped, 0);
        let mut idx = 0;
        for ep in &data.episodes {
            for f in 0..ep.bins.len() {
                let rec = &res.records[idx];
                assert_eq!(rec.frame_id, ep.first_frame + f as i64);
                let pose = ep.pose(&cfg, f);
                for j in 0..NUM_JOINTS {
                    assert!(
                        quat::geodesic_distance(&rec.orientations[j], &pose[j]) < 1e-9,
                        "frame {} joint {j}",
                        rec.frame_id
                    );
                }
                idx += 1;
            }
        }
    }

    #[test]
    fn uniform_policy_label_distribution() {
        let cfg = WorldConfig {
            n_episodes: 30,
            episode_len: 30,
            policy: PolicyKind::Stochastic(1.0),
            ..WorldConfig::default()
        };
        let data = generate(&cfg).unwrap();
        let k = cfg.n_primitives;
        for j in 0..NUM_JOINTS {
            let mut counts = vec![0usize; k];
            let mut n = 0usize;
            for ep in &data.episodes {
                for act in &ep.actions {
                    counts[act[j]] += 1;
                    n += 1;
                }
            }
            let p = 1.0 / k as f64;
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            for (c, &count) in counts.iter().enumerate() {
                let dev = (count as f64 - n as f64 * p).abs();
                assert!(dev < 3.0 * sigma, "joint {j} class {c}: dev {dev} > 3 sigma {sigma}");
            }
        }
    }

    #[test]
    fn codebook_recovers_primitives_from_clean_data() {
        let cfg = WorldConfig {
            n_episodes: 10,
            episode_len: 20,
            policy: PolicyKind::Stochastic(1.0),
            ..WorldConfig::default()
        };
        let data = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &cfg, &data).unwrap();
        let streams = ingest::read_imu_file(&dir.path().join("imu.txt")).unwrap();
        let frames = ingest::read_frame_index(&dir.path().join("frames.txt")).unwrap();
        let res = ingest::align(&streams, &frames, 0, ingest::DEFAULT_HALF_WINDOW_US).unwrap();
        let disp = ingest::displacements(&res.records).unwrap();
        let cb = codebook::fit(&disp, cfg.n_primitives, 3, 100, 1e-9).unwrap();
        // each centroid matches some true primitive, and the labeling
        // recovers the generating class
        let mut class_map = vec![[usize::MAX; 8]; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            for c in 0..cfg.n_primitives {
                let centroid = cb.decode(c, j).unwrap();
                let (best, d) = (0..cfg.n_primitives)
                    .map(|p| (p, quat::geodesic_distance(&centroid, &cfg.primitive(j, p))))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                assert!(d < 1e-3, "joint {j} class {c}: {d}");
                class_map[j][c] = best;
            }
        }
        let mut correct = 0usize;
        let mut total = 0usize;
        let mut label_of = BTreeMap::new();
        for ep in &data.episodes {
            for (s, act) in ep.actions.iter().enumerate() {
                label_of.insert(ep.first_frame + s as i64, *act);
            }
        }
        for rec in &disp {
            let truth = label_of[&rec.frame_id];
            let label = cb.label(rec);
            for j in 0..NUM_JOINTS {
                if class_map[j][label.classes[j]] == truth[j] {
                    correct += 1;
                }
                total += 1;
            }
        }
        assert!(correct as f64 / total as f64 >= 0.99, "{correct}/{total}");
    }

    #[test]
    fn goal_directed_actions_regenerate() {
        let cfg = WorldConfig {
            n_episodes: 6,
            episode_len: 12,
            policy: PolicyKind::GoalDirected,
            ..WorldConfig::default()
        };
        let data = generate(&cfg).unwrap();
        for ep in &data.episodes {
            let goals = ep.goal_bins.unwrap();
            for (s, act) in ep.actions.iter().enumerate() {
                for j in 0..NUM_JOINTS {
                    let expect =
                        goal_action(ep.bins[s][j], goals[j], cfg.n_primitives, cfg.grid_size());
                    assert_eq!(act[j], expect);
                }
            }
        }
    }
}
