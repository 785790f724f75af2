//! IMU / frame alignment.
//!
//! Raw orientation streams arrive at ~20 Hz while frames are indexed at
//! 5 fps. Each frame gets one orientation per joint by averaging the
//! samples inside a 0.1 s window centered on the frame timestamp; the
//! per-frame-pair relative rotations are the continuous actions.

use crate::quat::{self, QuatError, UnitQuaternion};
use crate::NUM_JOINTS;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_HALF_WINDOW_US: i64 = 50_000;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("frame timestamp {0} outside stream coverage")]
    OutOfCoverage(i64),
    #[error("no frames retained after alignment ({dropped} dropped)")]
    NoFramesRetained { dropped: usize },
    #[error("need at least 2 aligned records, got {0}")]
    TooShort(usize),
    #[error("malformed {what} at line {line}: {detail}")]
    Format {
        what: &'static str,
        line: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Quat(#[from] QuatError),
}

#[derive(Debug, Clone, Copy)]
pub struct ImuSample {
    pub timestamp_us: i64,
    pub joint_id: usize,
    pub orientation: UnitQuaternion,
}

#[derive(Debug, Clone, Copy)]
pub struct FrameIndexEntry {
    pub frame_id: i64,
    pub timestamp_us: i64,
}

#[derive(Debug, Clone)]
pub struct AlignedRecord {
    pub frame_id: i64,
    pub orientations: [UnitQuaternion; NUM_JOINTS],
}

#[derive(Debug, Clone)]
pub struct DisplacementRecord {
    pub frame_id: i64,
    pub displacements: [UnitQuaternion; NUM_JOINTS],
}

/// Average the samples of one joint stream inside the window centered at
/// `frame_ts`. An empty window falls back to slerp between the nearest
/// samples before and after.
pub fn window_average(
    stream: &[ImuSample],
    frame_ts: i64,
    half_window: i64,
) -> Result<UnitQuaternion, IngestError> {
    assert!(!stream.is_empty(), "empty stream");
    let first = stream[0].timestamp_us;
    let last = stream[stream.len() - 1].timestamp_us;
    if frame_ts < first || frame_ts > last {
        return Err(IngestError::OutOfCoverage(frame_ts));
    }
    let in_window: Vec<UnitQuaternion> = stream
        .iter()
        .filter(|s| (s.timestamp_us - frame_ts).abs() <= half_window)
        .map(|s| s.orientation)
        .collect();
    if !in_window.is_empty() {
        return Ok(quat::mean(&in_window)?);
    }
    // window empty: interpolate between the tightest bracketing samples
    let after_idx = stream
        .partition_point(|s| s.timestamp_us < frame_ts);
    let before = &stream[after_idx - 1];
    let after = &stream[after_idx];
    let span = (after.timestamp_us - before.timestamp_us) as f64;
    let t = (frame_ts - before.timestamp_us) as f64 / span;
    Ok(quat::slerp(&before.orientation, &after.orientation, t))
}

/// Alignment output plus the number of frames dropped for lack of
/// coverage.
#[derive(Debug)]
pub struct AlignResult {
    pub records: Vec<AlignedRecord>,
    pub dropped: usize,
}

/// Resample all six joint streams at the frame timestamps (shifted by
/// `clock_offset_us`). Frames outside any stream's coverage are dropped.
pub fn align(
    streams: &[Vec<ImuSample>; NUM_JOINTS],
    frames: &[FrameIndexEntry],
    clock_offset_us: i64,
    half_window: i64,
) -> Result<AlignResult, IngestError> {
    let mut records = Vec::new();
    let mut dropped = 0usize;
    for frame in frames {
        let ts = frame.timestamp_us + clock_offset_us;
        let covered = streams.iter().all(|s| {
            !s.is_empty() && ts >= s[0].timestamp_us && ts <= s[s.len() - 1].timestamp_us
        });
        if !covered {
            dropped += 1;
            continue;
        }
        let mut orientations = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        for (j, stream) in streams.iter().enumerate() {
            orientations[j] = window_average(stream, ts, half_window)?;
        }
        records.push(AlignedRecord {
            frame_id: frame.frame_id,
            orientations,
        });
    }
    if records.is_empty() {
        return Err(IngestError::NoFramesRetained { dropped });
    }
    Ok(AlignResult { records, dropped })
}

/// Per-frame-pair relative rotations. A gap in frame ids breaks the clip;
/// no displacement spans a gap.
pub fn displacements(records: &[AlignedRecord]) -> Result<Vec<DisplacementRecord>, IngestError> {
    if records.len() < 2 {
        return Err(IngestError::TooShort(records.len()));
    }
    let mut out = Vec::with_capacity(records.len() - 1);
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.frame_id != a.frame_id + 1 {
            continue; // episode break
        }
        let mut d = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            d[j] = quat::relative(&a.orientations[j], &b.orientations[j]);
        }
        out.push(DisplacementRecord {
            frame_id: a.frame_id,
            displacements: d,
        });
    }
    Ok(out)
}

fn parse_fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

/// IMU stream file: `timestamp_us joint_id w x y z` per line, `#` comments.
pub fn read_imu_file(path: &Path) -> Result<[Vec<ImuSample>; NUM_JOINTS], IngestError> {
    let file = std::fs::File::open(path)?;
    let mut streams: [Vec<ImuSample>; NUM_JOINTS] = Default::default();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = parse_fields(trimmed);
        let err = |detail: String| IngestError::Format {
            what: "imu stream",
            line: i + 1,
            detail,
        };
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", f.len())));
        }
        let ts: i64 = f[0].parse().map_err(|e| err(format!("timestamp: {e}")))?;
        let joint: usize = f[1].parse().map_err(|e| err(format!("joint: {e}")))?;
        if joint >= NUM_JOINTS {
            return Err(err(format!("joint id {joint} out of range")));
        }
        let mut v = [0.0f64; 4];
        for (k, s) in f[2..].iter().enumerate() {
            v[k] = s.parse().map_err(|e| err(format!("component: {e}")))?;
        }
        let orientation = UnitQuaternion::canonicalize(v[0], v[1], v[2], v[3])?;
        let stream = &mut streams[joint];
        if let Some(prev) = stream.last() {
            if ts <= prev.timestamp_us {
                return Err(err(format!(
                    "timestamps not strictly increasing for joint {joint}"
                )));
            }
        }
        stream.push(ImuSample {
            timestamp_us: ts,
            joint_id: joint,
            orientation,
        });
    }
    Ok(streams)
}

/// Frame index file: `frame_id timestamp_us` per line.
pub fn read_frame_index(path: &Path) -> Result<Vec<FrameIndexEntry>, IngestError> {
    let file = std::fs::File::open(path)?;
    let mut frames = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = parse_fields(trimmed);
        let err = |detail: String| IngestError::Format {
            what: "frame index",
            line: i + 1,
            detail,
        };
        if f.len() != 2 {
            return Err(err(format!("expected 2 fields, got {}", f.len())));
        }
        let frame_id: i64 = f[0].parse().map_err(|e| err(format!("frame id: {e}")))?;
        let ts: i64 = f[1].parse().map_err(|e| err(format!("timestamp: {e}")))?;
        if let Some(prev) = frames.last() {
            let prev: &FrameIndexEntry = prev;
            if ts <= prev.timestamp_us {
                return Err(err("timestamps not strictly increasing".to_string()));
            }
        }
        frames.push(FrameIndexEntry {
            frame_id,
            timestamp_us: ts,
        });
    }
    Ok(frames)
}

/// Displacement file: `frame_id j0_w j0_x j0_y j0_z ... j5_z` per line.
pub fn write_displacements(
    path: &Path,
    records: &[DisplacementRecord],
) -> Result<(), IngestError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        write!(out, "{}", r.frame_id)?;
        for q in &r.displacements {
            for c in q.components() {
                write!(out, " {c}")?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_displacements(path: &Path) -> Result<Vec<DisplacementRecord>, IngestError> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = parse_fields(trimmed);
        let err = |detail: String| IngestError::Format {
            what: "displacements",
            line: i + 1,
            detail,
        };
        if f.len() != 1 + 4 * NUM_JOINTS {
            return Err(err(format!("expected 25 fields, got {}", f.len())));
        }
        let frame_id: i64 = f[0].parse().map_err(|e| err(format!("frame id: {e}")))?;
        let mut d = [UnitQuaternion::IDENTITY; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            let mut v = [0.0f64; 4];
            for k in 0..4 {
                v[k] = f[1 + 4 * j + k]
                    .parse()
                    .map_err(|e| err(format!("component: {e}")))?;
            }
            d[j] = UnitQuaternion::canonicalize(v[0], v[1], v[2], v[3])?;
        }
        records.push(DisplacementRecord {
            frame_id,
            displacements: d,
        });
    }
    Ok(records)
}
