//! Per-joint K-means quantization of quaternion displacements.
//!
//! Each joint is clustered independently under the geodesic metric:
//! k-means++ seeding, Lloyd iterations with the sign-aligned quaternion
//! mean as the centroid update, and deterministic tie breaking (lowest
//! class index). The fitted codebook maps rotations to discrete action
//! classes and back.

use crate::ingest::DisplacementRecord;
use crate::quat::{self, UnitQuaternion};
use crate::NUM_JOINTS;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("joint {joint} has {distinct} distinct rotations, need at least {k}")]
    InsufficientData {
        joint: usize,
        distinct: usize,
        k: usize,
    },
    #[error("class index {0} out of range (K = {1})")]
    IndexOutOfRange(usize, usize),
    #[error("malformed codebook file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointCodebook {
    pub centroids: Vec<UnitQuaternion>,
    pub frequencies: Vec<u64>,
    pub iterations: u32,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub k: usize,
    pub seed: u64,
    pub joints: Vec<JointCodebook>,
}

/// Per-joint action classes for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLabel {
    pub classes: [usize; NUM_JOINTS],
}

fn sq_dist(a: &UnitQuaternion, b: &UnitQuaternion) -> f64 {
    let d = quat::geodesic_distance(a, b);
    d * d
}

/// Argmin over centroids, ties to the lowest index.
fn nearest(q: &UnitQuaternion, centroids: &[UnitQuaternion]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = quat::geodesic_distance(q, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn kmeans_pp_init(
    points: &[UnitQuaternion],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<UnitQuaternion> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        // distinct-count precondition guarantees total > 0 here
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = points.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            target -= w;
            if target <= 0.0 && *w > 0.0 {
                chosen = i;
                break;
            }
        }
        let c = points[chosen];
        centroids.push(c);
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, &c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

struct JointFit {
    centroids: Vec<UnitQuaternion>,
    assignment: Vec<usize>,
    iterations: u32,
    objective: f64,
}

/// Number of independent K-means++ starts per joint; Lloyd iterations
/// only find a local optimum, so the best of several seeded restarts is
/// kept.
const RESTARTS: usize = 32;

fn fit_joint(
    points: &[UnitQuaternion],
    k: usize,
    seed: u64,
    max_iter: u32,
    tol: f64,
) -> JointFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<JointFit> = None;
    for _ in 0..RESTARTS {
        let run = lloyd_run(points, k, &mut rng, max_iter, tol);
        if best.as_ref().map_or(true, |b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    best.unwrap()
}

fn lloyd_run(
    points: &[UnitQuaternion],
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iter: u32,
    tol: f64,
) -> JointFit {
    let mut centroids = kmeans_pp_init(points, k, rng);
    let mut assignment = vec![0usize; points.len()];
    let mut prev_objective = f64::INFINITY;
    let mut iterations = 0u32;
    let mut objective = f64::INFINITY;

    for _ in 0..max_iter {
        iterations += 1;
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest(p, &centroids);
        }
        // empty-cluster repair: reseed to the point farthest from its centroid
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let (far_idx, _) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, quat::geodesic_distance(p, &centroids[assignment[i]])))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .unwrap();
            centroids[empty] = points[far_idx];
            assignment[far_idx] = empty;
        }
        objective = points
            .iter()
            .zip(&assignment)
            .map(|(p, &a)| sq_dist(p, &centroids[a]))
            .sum();
        assert!(
            objective <= prev_objective + 1e-9,
            "distortion increased: {prev_objective} -> {objective}"
        );
        prev_objective = objective;

        // centroid update; keep the old centroid if the mean does not
        // lower that cluster's distortion (the chordal mean is only an
        // approximation of the geodesic minimizer)
        let mut movement = 0.0f64;
        for c in 0..k {
            let members: Vec<UnitQuaternion> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| *p)
                .collect();
            let Ok(candidate) = quat::mean(&members) else {
                continue;
            };
            let old_cost: f64 = members.iter().map(|p| sq_dist(p, &centroids[c])).sum();
            let new_cost: f64 = members.iter().map(|p| sq_dist(p, &candidate)).sum();
            if new_cost < old_cost {
                movement = movement.max(quat::geodesic_distance(&centroids[c], &candidate));
                centroids[c] = candidate;
            }
        }
        if movement < tol {
            break;
        }
    }
    // final assignment against the converged centroids
    for (i, p) in points.iter().enumerate() {
        assignment[i] = nearest(p, &centroids);
    }
    let objective_final: f64 = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    JointFit {
        centroids,
        assignment,
        iterations,
        objective: objective_final.min(objective),
    }
}

fn count_distinct(points: &[UnitQuaternion], stop_at: usize) -> usize {
    let mut distinct: Vec<UnitQuaternion> = Vec::new();
    for p in points {
        if !distinct
            .iter()
            .any(|d| quat::geodesic_distance(d, p) < 1e-9)
        {
            distinct.push(*p);
            if distinct.len() >= stop_at {
                break;
            }
        }
    }
    distinct.len()
}

/// Fit a per-joint codebook over displacement records.
///
/// Every joint is seeded with the same RNG state, so permuting joint
/// indices in the input permutes the codebook accordingly.
pub fn fit(
    displacements: &[DisplacementRecord],
    k: usize,
    seed: u64,
    max_iter: u32,
    tol: f64,
) -> Result<Codebook, CodebookError> {
    assert!(k >= 2, "K must be at least 2");
    let mut joints = Vec::with_capacity(NUM_JOINTS);
    for j in 0..NUM_JOINTS {
        let points: Vec<UnitQuaternion> =
            displacements.iter().map(|r| r.displacements[j]).collect();
        let distinct = count_distinct(&points, k);
        if distinct < k {
            return Err(CodebookError::InsufficientData {
                joint: j,
                distinct,
                k,
            });
        }
        let fit = fit_joint(&points, k, seed, max_iter, tol);
        let mut frequencies = vec![0u64; k];
        for &a in &fit.assignment {
            frequencies[a] += 1;
        }
        joints.push(JointCodebook {
            centroids: fit.centroids,
            frequencies,
            iterations: fit.iterations,
            objective: fit.objective,
        });
    }
    Ok(Codebook { k, seed, joints })
}

impl Codebook {
    pub fn assign(&self, q: &UnitQuaternion, joint: usize) -> usize {
        assert!(joint < NUM_JOINTS);
        nearest(q, &self.joints[joint].centroids)
    }

    pub fn label(&self, record: &DisplacementRecord) -> ActionLabel {
        let mut classes = [0usize; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            classes[j] = self.assign(&record.displacements[j], j);
        }
        ActionLabel { classes }
    }

    pub fn decode(&self, class: usize, joint: usize) -> Result<UnitQuaternion, CodebookError> {
        assert!(joint < NUM_JOINTS);
        self.joints[joint]
            .centroids
            .get(class)
            .copied()
            .ok_or(CodebookError::IndexOutOfRange(class, self.k))
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "codebook v1 joints={} k={} seed={}\n",
            NUM_JOINTS, self.k, self.seed
        ));
        for (j, jc) in self.joints.iter().enumerate() {
            out.push_str(&format!(
                "# fit joint={} iterations={} objective={}\n",
                j, jc.iterations, jc.objective
            ));
        }
        for (j, jc) in self.joints.iter().enumerate() {
            for c in 0..self.k {
                let q = jc.centroids[c];
                out.push_str(&format!(
                    "{} {} {} {} {} {} {}\n",
                    j, c, q.w, q.x, q.y, q.z, jc.frequencies[c]
                ));
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CodebookError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.serialize().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Codebook, CodebookError> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| CodebookError::Format("empty file".into()))??;
        let hf: Vec<&str> = header.split_whitespace().collect();
        if hf.len() != 5 || hf[0] != "codebook" || hf[1] != "v1" {
            return Err(CodebookError::Format(format!("bad header: {header}")));
        }
        let parse_kv = |s: &str, key: &str| -> Result<u64, CodebookError> {
            s.strip_prefix(&format!("{key}="))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CodebookError::Format(format!("bad header field: {s}")))
        };
        let joints_n = parse_kv(hf[2], "joints")? as usize;
        let k = parse_kv(hf[3], "k")? as usize;
        let seed = parse_kv(hf[4], "seed")?;
        if joints_n != NUM_JOINTS {
            return Err(CodebookError::Format(format!(
                "expected {NUM_JOINTS} joints, file has {joints_n}"
            )));
        }
        let mut joints: Vec<JointCodebook> = (0..NUM_JOINTS)
            .map(|_| JointCodebook {
                centroids: vec![UnitQuaternion::IDENTITY; k],
                frequencies: vec![0; k],
                iterations: 0,
                objective: 0.0,
            })
            .collect();
        let mut seen = vec![vec![false; k]; NUM_JOINTS];
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(meta) = t.strip_prefix("# fit ") {
                let mut joint = None;
                let mut iterations = None;
                let mut objective = None;
                for field in meta.split_whitespace() {
                    if let Some(v) = field.strip_prefix("joint=") {
                        joint = v.parse::<usize>().ok();
                    } else if let Some(v) = field.strip_prefix("iterations=") {
                        iterations = v.parse::<u32>().ok();
                    } else if let Some(v) = field.strip_prefix("objective=") {
                        objective = v.parse::<f64>().ok();
                    }
                }
                if let (Some(j), Some(it), Some(obj)) = (joint, iterations, objective) {
                    if j < NUM_JOINTS {
                        joints[j].iterations = it;
                        joints[j].objective = obj;
                    }
                }
                continue;
            }
            if t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 7 {
                return Err(CodebookError::Format(format!("bad row: {t}")));
            }
            let j: usize = f[0]
                .parse()
                .map_err(|_| CodebookError::Format(format!("bad joint: {t}")))?;
            let c: usize = f[1]
                .parse()
                .map_err(|_| CodebookError::Format(format!("bad class: {t}")))?;
            if j >= NUM_JOINTS || c >= k {
                return Err(CodebookError::Format(format!("indices out of range: {t}")));
            }
            let mut v = [0.0f64; 4];
            for i in 0..4 {
                v[i] = f[2 + i]
                    .parse()
                    .map_err(|_| CodebookError::Format(format!("bad component: {t}")))?;
            }
            let freq: u64 = f[6]
                .parse()
                .map_err(|_| CodebookError::Format(format!("bad frequency: {t}")))?;
            joints[j].centroids[c] = UnitQuaternion::canonicalize(v[0], v[1], v[2], v[3])
                .map_err(|e| CodebookError::Format(e.to_string()))?;
            joints[j].frequencies[c] = freq;
            seen[j][c] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(CodebookError::Format("missing centroid rows".into()));
        }
        Ok(Codebook { k, seed, joints })
    }

    /// SHA-256 of the serialized form, for binding checkpoints to the
    /// codebook they were trained against.
    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.serialize().as_bytes());
        h.finalize().into()
    }
}

#[cfg(test)]
pub mod tests_support {
    use super::*;

    /// Small synthetic codebook (evenly spaced z-rotations, frequency 1)
    /// for tests that only need a structurally valid instance.
    pub fn tiny_codebook(k: usize) -> Codebook {
        let joints = (0..NUM_JOINTS)
            .map(|_| JointCodebook {
                centroids: (0..k)
                    .map(|c| {
                        UnitQuaternion::from_axis_angle(
                            [0.0, 0.0, 1.0],
                            (c as f64 + 1.0) * std::f64::consts::PI / (k as f64 + 1.0),
                        )
                    })
                    .collect(),
                frequencies: vec![1; k],
                iterations: 0,
                objective: 0.0,
            })
            .collect();
        Codebook { k, seed: 0, joints }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_rot(deg: f64) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], deg.to_radians())
    }

    fn records_from_z_angles(angles: &[f64]) -> Vec<DisplacementRecord> {
        angles
            .iter()
            .enumerate()
            .map(|(i, &a)| DisplacementRecord {
                frame_id: i as i64,
                displacements: [z_rot(a); NUM_JOINTS],
            })
            .collect()
    }

    #[test]
    fn fit_two_cluster_toy() {
        let records = records_from_z_angles(&[0.0, 2.0, 90.0, 92.0]);
        let cb = fit(&records, 2, 7, 100, 1e-6).unwrap();
        for j in 0..NUM_JOINTS {
            let mut angles: Vec<f64> = cb.joints[j]
                .centroids
                .iter()
                .map(|c| c.angle().to_degrees())
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((angles[0] - 1.0).abs() < 1e-6, "angles = {angles:?}");
            assert!((angles[1] - 91.0).abs() < 1e-6, "angles = {angles:?}");
            assert_eq!(cb.joints[j].frequencies.iter().sum::<u64>(), 4);
        }
    }

    #[test]
    fn fit_insufficient_data() {
        let records = records_from_z_angles(&[0.0, 0.0, 0.0]);
        assert!(matches!(
            fit(&records, 2, 0, 100, 1e-6),
            Err(CodebookError::InsufficientData { joint: 0, .. })
        ));
    }

    #[test]
    fn fit_deterministic() {
        let records = records_from_z_angles(&[0.0, 3.0, 10.0, 45.0, 50.0, 90.0, 120.0]);
        let a = fit(&records, 3, 42, 100, 1e-6).unwrap();
        let b = fit(&records, 3, 42, 100, 1e-6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.serialize(), b.serialize());
    }

    #[test]
    fn assign_examples() {
        let records = records_from_z_angles(&[0.0, 2.0, 90.0, 92.0]);
        let cb = fit(&records, 2, 7, 100, 1e-6).unwrap();
        for c in 0..2 {
            let centroid = cb.decode(c, 0).unwrap();
            assert_eq!(cb.assign(&centroid, 0), c);
        }
        let class_1deg = cb.assign(&z_rot(1.0), 0);
        assert_eq!(cb.assign(&z_rot(1.5), 0), class_1deg);
    }

    #[test]
    fn assign_tie_lowest_index() {
        let cb = Codebook {
            k: 2,
            seed: 0,
            joints: (0..NUM_JOINTS)
                .map(|_| JointCodebook {
                    centroids: vec![z_rot(10.0), z_rot(10.0)],
                    frequencies: vec![1, 1],
                    iterations: 0,
                    objective: 0.0,
                })
                .collect(),
        };
        assert_eq!(cb.assign(&z_rot(10.0), 0), 0);
        assert_eq!(cb.assign(&z_rot(55.0), 3), 0);
    }

    #[test]
    fn decode_out_of_range() {
        let records = records_from_z_angles(&[0.0, 2.0, 90.0, 92.0]);
        let cb = fit(&records, 2, 7, 100, 1e-6).unwrap();
        assert!(matches!(
            cb.decode(2, 0),
            Err(CodebookError::IndexOutOfRange(2, 2))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        let records = records_from_z_angles(&[0.0, 2.0, 33.0, 90.0, 92.0, 170.0]);
        let cb = fit(&records, 3, 11, 100, 1e-6).unwrap();
        cb.save(&path).unwrap();
        let back = Codebook::load(&path).unwrap();
        assert_eq!(cb, back);
        assert_eq!(cb.content_hash(), back.content_hash());
    }

    #[test]
    fn load_truncated_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        let records = records_from_z_angles(&[0.0, 2.0, 90.0, 92.0]);
        let cb = fit(&records, 2, 7, 100, 1e-6).unwrap();
        let text = cb.serialize();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(
            Codebook::load(&path),
            Err(CodebookError::Format(_))
        ));
    }

    #[test]
    fn load_version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.txt");
        std::fs::write(&path, "codebook v2 joints=6 k=8 seed=0\n").unwrap();
        assert!(matches!(
            Codebook::load(&path),
            Err(CodebookError::Format(_))
        ));
    }

    #[test]
    fn joint_permutation_permutes_codebook() {
        let base = records_from_z_angles(&[0.0, 2.0, 33.0, 90.0, 92.0, 170.0]);
        // give each joint its own data, then swap joints 1 and 4
        let vary: Vec<DisplacementRecord> = base
            .iter()
            .map(|r| {
                let mut d = r.displacements;
                for j in 0..NUM_JOINTS {
                    d[j] = quat::multiply(&d[j], &z_rot(3.0 * j as f64));
                }
                DisplacementRecord {
                    frame_id: r.frame_id,
                    displacements: d,
                }
            })
            .collect();
        let swapped: Vec<DisplacementRecord> = vary
            .iter()
            .map(|r| {
                let mut d = r.displacements;
                d.swap(1, 4);
                DisplacementRecord {
                    frame_id: r.frame_id,
                    displacements: d,
                }
            })
            .collect();
        let a = fit(&vary, 3, 5, 100, 1e-6).unwrap();
        let b = fit(&swapped, 3, 5, 100, 1e-6).unwrap();
        assert_eq!(a.joints[1], b.joints[4]);
        assert_eq!(a.joints[4], b.joints[1]);
        assert_eq!(a.joints[0], b.joints[0]);
    }

    #[test]
    fn planted_clusters_recovered_across_seeds() {
        // four well-separated groups with tiny intra-cluster spread
        let mut angles = Vec::new();
        for center in [10.0, 60.0, 110.0, 160.0] {
            for off in [-0.2, 0.0, 0.2] {
                angles.push(center + off);
            }
        }
        let records = records_from_z_angles(&angles);
        for seed in 0..10 {
            let cb = fit(&records, 4, seed, 100, 1e-6).unwrap();
            let mut centers: Vec<f64> = cb.joints[0]
                .centroids
                .iter()
                .map(|c| c.angle().to_degrees())
                .collect();
            centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (got, want) in centers.iter().zip([10.0, 60.0, 110.0, 160.0]) {
                assert!((got - want).abs() < 1e-6, "seed {seed}: {centers:?}");
            }
            assert!(cb.joints[0].frequencies.iter().all(|&f| f == 3));
        }
    }

    #[test]
    fn assign_decode_idempotent() {
        let records = records_from_z_angles(&[0.0, 2.0, 33.0, 90.0, 92.0, 170.0, 100.0]);
        let cb = fit(&records, 4, 3, 100, 1e-6).unwrap();
        for j in 0..NUM_JOINTS {
            for c in 0..cb.k {
                let q = cb.decode(c, j).unwrap();
                assert_eq!(cb.assign(&q, j), c);
            }
        }
    }
}
