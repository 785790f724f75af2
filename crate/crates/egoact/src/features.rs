//! Frame-feature source: precomputed feature tables loaded from file, or
//! synthetic observations projected from simulator state.

use crate::quat::UnitQuaternion;
use crate::NUM_JOINTS;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("malformed feature file at line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("row dimension mismatch at line {line}: expected {expected}, got {got}")]
    DimMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Frame id to feature vector, all rows the same dimension.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub dim: usize,
    pub rows: BTreeMap<i64, Vec<f64>>,
}

impl FeatureTable {
    pub fn get(&self, frame_id: i64) -> Option<&Vec<f64>> {
        self.rows.get(&frame_id)
    }
}

/// File format: `frame_id v1 ... vD` per line, `#` comments.
pub fn load_features(path: &Path) -> Result<FeatureTable, FeatureError> {
    let file = std::fs::File::open(path)?;
    let mut dim: Option<usize> = None;
    let mut rows = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(FeatureError::Format {
                line: i + 1,
                detail: "expected frame id and at least one value".into(),
            });
        }
        let frame_id: i64 = fields[0].parse().map_err(|e| FeatureError::Format {
            line: i + 1,
            detail: format!("frame id: {e}"),
        })?;
        let values: Vec<f64> = fields[1..]
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| FeatureError::Format {
                line: i + 1,
                detail: format!("value: {e}"),
            })?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(FeatureError::DimMismatch {
                    line: i + 1,
                    expected: d,
                    got: values.len(),
                })
            }
            _ => {}
        }
        rows.insert(frame_id, values);
    }
    let dim = dim.ok_or(FeatureError::Format {
        line: 0,
        detail: "no feature rows".into(),
    })?;
    Ok(FeatureTable { dim, rows })
}

pub fn save_features(path: &Path, table: &FeatureTable) -> Result<(), FeatureError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (frame_id, values) in &table.rows {
        write!(out, "{frame_id}")?;
        for v in values {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Fixed random linear map from (pose quaternions, scene context) to a
/// feature vector. Bias-free; regenerated by the simulator when the
/// noiseless map collides on its state set.
#[derive(Debug, Clone)]
pub struct Projection {
    pub dim: usize,
    pub input_dim: usize,
    weights: Vec<f64>, // dim x input_dim, row major
}

impl Projection {
    pub fn new(dim: usize, context_dim: usize, seed: u64) -> Projection {
        let input_dim = 4 * NUM_JOINTS + context_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let weights = (0..dim * input_dim)
            .map(|_| rng.gen_range(-1.0..1.0) * scale)
            .collect();
        Projection {
            dim,
            input_dim,
            weights,
        }
    }

    /// Project one pose + scene context, with optional additive Gaussian
    /// noise drawn from `rng`.
    pub fn observe(
        &self,
        pose: &[UnitQuaternion; NUM_JOINTS],
        context: &[f64],
        noise_sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        assert_eq!(4 * NUM_JOINTS + context.len(), self.input_dim);
        let mut input = Vec::with_capacity(self.input_dim);
        for q in pose {
            input.extend_from_slice(&q.components());
        }
        input.extend_from_slice(context);
        let mut out = vec![0.0; self.dim];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.input_dim..(r + 1) * self.input_dim];
            *o = row.iter().zip(&input).map(|(a, b)| a * b).sum();
        }
        if noise_sigma > 0.0 {
            for o in out.iter_mut() {
                *o += noise_sigma * gauss(rng);
            }
        }
        out
    }
}

/// Standard normal via Box-Muller.
pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feat.txt");
        let mut rows = BTreeMap::new();
        rows.insert(3, vec![1.5, -0.25, 1e-17]);
        rows.insert(7, vec![0.0, 2.0, 3.125]);
        let table = FeatureTable { dim: 3, rows };
        save_features(&path, &table).unwrap();
        let back = load_features(&path).unwrap();
        assert_eq!(back.dim, 3);
        assert_eq!(back.rows, table.rows);
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feat.txt");
        std::fs::write(&path, "0 1.0 2.0\n1 1.0\n").unwrap();
        assert!(matches!(
            load_features(&path),
            Err(FeatureError::DimMismatch { .. })
        ));
    }

    #[test]
    fn empty_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feat.txt");
        std::fs::write(&path, "# only a comment\n").unwrap();
        assert!(matches!(
            load_features(&path),
            Err(FeatureError::Format { .. })
        ));
    }

    #[test]
    fn observe_deterministic_without_noise() {
        let proj = Projection::new(5, 3, 42);
        let pose = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        let ctx = [0.5, -1.0, 0.25];
        let mut rng1 = ChaCha8Rng::seed_from_u64(0);
        let mut rng2 = ChaCha8Rng::seed_from_u64(99);
        let a = proj.observe(&pose, &ctx, 0.0, &mut rng1);
        let b = proj.observe(&pose, &ctx, 0.0, &mut rng2);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_contexts_distinct_features() {
        let proj = Projection::new(8, 2, 7);
        let pose = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = proj.observe(&pose, &[1.0, 0.0], 0.0, &mut rng);
        let b = proj.observe(&pose, &[0.0, 1.0], 0.0, &mut rng);
        let dist: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 0.0);
    }
}
