//! Re-checks a generated dataset against its manifest.
//!
//! Every check runs to completion and records its own failures; only an
//! unreadable or malformed manifest aborts verification.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use sporegen_core::{Stage, MYCELIUM_ONSET};

use crate::dataset::{frame_file_name, sha256_hex, FrameRecord, Manifest};
use crate::error::VerifyError;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Frames at which the check failed, ascending and deduplicated.
    pub failing_frames: Vec<usize>,
    pub messages: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failing_frames: Vec::new(),
            messages: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.messages.is_empty()
    }

    fn fail(&mut self, frame: Option<usize>, message: String) {
        if let Some(f) = frame {
            if self.failing_frames.last() != Some(&f) {
                self.failing_frames.push(f);
            }
        }
        self.messages.push(message);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            let status = if check.passed() { "PASS" } else { "FAIL" };
            writeln!(f, "{status} {}", check.name)?;
            for msg in check.messages.iter().take(10) {
                writeln!(f, "    {msg}")?;
            }
            if check.messages.len() > 10 {
                writeln!(f, "    ... {} more", check.messages.len() - 10)?;
            }
        }
        Ok(())
    }
}

pub const CHECK_HASHES: &str = "image_hashes";
pub const CHECK_ALIGNMENT: &str = "time_alignment";
pub const CHECK_CONSERVATION: &str = "count_conservation";
pub const CHECK_TRAJECTORY: &str = "spore_trajectory";
pub const CHECK_MONOTONE: &str = "monotone_staging";
pub const CHECK_ONSET: &str = "mycelium_onset";

/// Loads the manifest at `manifest_path` and runs every check. Image paths
/// are resolved against the manifest's directory.
pub fn verify_dataset(manifest_path: impl AsRef<Path>) -> Result<VerificationReport, VerifyError> {
    let path = manifest_path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| VerifyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| VerifyError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    Ok(verify_manifest(&manifest, dir))
}

/// Runs every check against an already parsed manifest.
pub fn verify_manifest(manifest: &Manifest, dir: &Path) -> VerificationReport {
    let frames = &manifest.frames;
    let s0 = manifest.config.lifecycle.initial_spores;
    let n = manifest.config.total_frames;
    VerificationReport {
        checks: vec![
            check_hashes(manifest, dir),
            check_alignment(frames, n),
            check_conservation(frames, s0),
            check_trajectory(frames, s0, n),
            check_monotone(frames),
            check_onset(frames),
        ],
    }
}

fn check_hashes(manifest: &Manifest, dir: &Path) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_HASHES);
    if manifest.image_hash_algorithm != "sha256" {
        out.fail(
            None,
            format!(
                "unsupported hash algorithm {}",
                manifest.image_hash_algorithm
            ),
        );
        return out;
    }
    for rec in &manifest.frames {
        let path = dir.join(&rec.image_path);
        match fs::read(&path) {
            Ok(bytes) => {
                let actual = sha256_hex(&bytes);
                if actual != rec.image_sha256 {
                    out.fail(
                        Some(rec.frame_index),
                        format!(
                            "frame {}: hash mismatch for {}",
                            rec.frame_index,
                            path.display()
                        ),
                    );
                }
            }
            Err(e) => out.fail(
                Some(rec.frame_index),
                format!(
                    "frame {}: cannot read {}: {e}",
                    rec.frame_index,
                    path.display()
                ),
            ),
        }
    }
    out
}

fn check_alignment(frames: &[FrameRecord], total_frames: usize) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_ALIGNMENT);
    if frames.len() != total_frames {
        out.fail(
            None,
            format!(
                "{} frame records for total_frames = {total_frames}",
                frames.len()
            ),
        );
    }
    let denom = total_frames.saturating_sub(1).max(1) as f64;
    for (i, rec) in frames.iter().enumerate() {
        if rec.frame_index != i {
            out.fail(
                Some(i),
                format!("record {i} carries frame_index {}", rec.frame_index),
            );
        }
        if rec.image_path != frame_file_name(i) {
            out.fail(Some(i), format!("record {i} references {}", rec.image_path));
        }
        let t = i as f64 / denom;
        if rec.transition_ratio != t {
            out.fail(
                Some(i),
                format!("record {i}: T = {} but i/(N-1) = {t}", rec.transition_ratio),
            );
        }
    }
    out
}

fn check_conservation(frames: &[FrameRecord], s0: usize) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_CONSERVATION);
    for rec in frames {
        let i = rec.frame_index;
        let sum = rec.spore_count + rec.hypha_count + rec.mycelium_count;
        if sum != s0 {
            out.fail(
                Some(i),
                format!("frame {i}: counts sum to {sum}, expected {s0}"),
            );
        }
        let mut by_stage = [0usize; 3];
        for e in &rec.entities {
            by_stage[e.stage.ordinal() as usize] += 1;
        }
        if by_stage != [rec.spore_count, rec.hypha_count, rec.mycelium_count] {
            out.fail(
                Some(i),
                format!("frame {i}: annotations {by_stage:?} disagree with counts"),
            );
        }
    }
    out
}

fn check_trajectory(frames: &[FrameRecord], s0: usize, total_frames: usize) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_TRAJECTORY);
    let denom = total_frames.saturating_sub(1).max(1) as f64;
    for (i, rec) in frames.iter().enumerate() {
        let t = i as f64 / denom;
        let expected = (s0 as f64 * (1.0 - t)).round() as usize;
        if rec.spore_count != expected {
            out.fail(
                Some(i),
                format!("frame {i}: {} spores, expected {expected}", rec.spore_count),
            );
        }
    }
    out
}

fn check_monotone(frames: &[FrameRecord]) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_MONOTONE);
    let mut stage_of: HashMap<u32, Stage> = HashMap::new();
    for (i, pair) in frames.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.spore_count > prev.spore_count {
            out.fail(Some(i + 1), format!("frame {}: spore count rose", i + 1));
        }
        if cur.mycelium_count < prev.mycelium_count {
            out.fail(Some(i + 1), format!("frame {}: mycelium count fell", i + 1));
        }
    }
    for rec in frames {
        for e in &rec.entities {
            if let Some(before) = stage_of.insert(e.id, e.stage) {
                if e.stage.ordinal() < before.ordinal() {
                    out.fail(
                        Some(rec.frame_index),
                        format!(
                            "frame {}: entity {} went {before} -> {}",
                            rec.frame_index, e.id, e.stage
                        ),
                    );
                }
            }
        }
    }
    out.failing_frames.sort_unstable();
    out.failing_frames.dedup();
    out
}

fn check_onset(frames: &[FrameRecord]) -> CheckOutcome {
    let mut out = CheckOutcome::new(CHECK_ONSET);
    for rec in frames {
        if rec.transition_ratio <= MYCELIUM_ONSET && rec.mycelium_count != 0 {
            out.fail(
                Some(rec.frame_index),
                format!(
                    "frame {}: {} mycelia before onset",
                    rec.frame_index, rec.mycelium_count
                ),
            );
        }
    }
    out
}
