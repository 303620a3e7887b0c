//! Golden-angle radial trajectories and retrospective frame binning.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The golden angle `π(√5 − 1)/2 ≈ 111.2461°` in radians.
///
/// Incrementing by this angle keeps the spoke directions close to uniformly
/// spread for any number of consecutive spokes.
pub const GOLDEN_ANGLE: f64 = 1.9416110387254666;

/// Reduces an angle to `[0, π)`; spokes are symmetric lines, so directions
/// that differ by π are the same spoke.
fn reduce_mod_pi(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Angles of `n_spokes` consecutive golden-angle spokes:
/// `(start_angle + k·GOLDEN_ANGLE) mod π`.
pub fn golden_angle_sequence(n_spokes: usize, start_angle: f64) -> Vec<f64> {
    (0..n_spokes)
        .map(|k| reduce_mod_pi(start_angle + k as f64 * GOLDEN_ANGLE))
        .collect()
}

/// How acquisition-ordered spokes are distributed over cardiac frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BinningMode {
    /// Spoke `k` goes to frame `floor(k / spokes_per_frame)`.
    Sequential,
    /// Spoke `k` goes to frame `k mod n_frames`.
    Interleaved,
}

/// One acquired spoke: its position in acquisition order, direction, and the
/// cardiac frame it was binned into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpokeEntry {
    pub spoke_index: usize,
    /// Direction in radians, in `[0, π)`.
    pub angle: f64,
    pub frame_index: usize,
    /// Normalized time of the frame: `(frame_index + 1)/n_frames`, in `(0, 1]`.
    pub cardiac_phase: f64,
}

/// A complete binned acquisition: every frame holds exactly
/// `spokes_per_frame` spokes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpokeSchedule {
    n_frames: usize,
    spokes_per_frame: usize,
    entries: Vec<SpokeEntry>,
}

impl SpokeSchedule {
    /// Rebuilds a schedule from explicit entries (e.g. read back from a
    /// manifest), checking every structural invariant.
    pub fn from_entries(
        n_frames: usize,
        spokes_per_frame: usize,
        entries: Vec<SpokeEntry>,
    ) -> Result<Self> {
        if n_frames == 0 || spokes_per_frame == 0 {
            return Err(Error::Trajectory(
                "n_frames and spokes_per_frame must be positive".into(),
            ));
        }
        if entries.len() != n_frames * spokes_per_frame {
            return Err(Error::Trajectory(format!(
                "schedule has {} entries, expected n_frames*spokes_per_frame = {}",
                entries.len(),
                n_frames * spokes_per_frame
            )));
        }
        let mut per_frame = vec![0usize; n_frames];
        for (k, e) in entries.iter().enumerate() {
            if e.spoke_index != k {
                return Err(Error::Trajectory(format!(
                    "entry {k} carries spoke_index {}, entries must be in acquisition order",
                    e.spoke_index
                )));
            }
            if !e.angle.is_finite() || e.angle < 0.0 || e.angle >= PI {
                return Err(Error::Trajectory(format!(
                    "spoke {k} angle {} outside [0, pi)",
                    e.angle
                )));
            }
            if e.frame_index >= n_frames {
                return Err(Error::Trajectory(format!(
                    "spoke {k} assigned to frame {} of {n_frames}",
                    e.frame_index
                )));
            }
            let phase = (e.frame_index as f64 + 1.0) / n_frames as f64;
            if e.cardiac_phase != phase {
                return Err(Error::Trajectory(format!(
                    "spoke {k} cardiac_phase {} does not equal (frame+1)/n_frames = {phase}",
                    e.cardiac_phase
                )));
            }
            per_frame[e.frame_index] += 1;
        }
        if let Some(j) = per_frame.iter().position(|&c| c != spokes_per_frame) {
            return Err(Error::Trajectory(format!(
                "frame {j} holds {} spokes, expected {spokes_per_frame}",
                per_frame[j]
            )));
        }
        Ok(Self {
            n_frames,
            spokes_per_frame,
            entries,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn spokes_per_frame(&self) -> usize {
        self.spokes_per_frame
    }

    pub fn n_spokes(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[SpokeEntry] {
        &self.entries
    }

    pub fn entry(&self, spoke: usize) -> &SpokeEntry {
        &self.entries[spoke]
    }

    pub fn spokes_in_frame(&self, frame: usize) -> impl Iterator<Item = &SpokeEntry> {
        self.entries.iter().filter(move |e| e.frame_index == frame)
    }
}

/// Bins acquisition-ordered spoke angles into cardiac frames.
pub fn bin_spokes(
    angles: &[f64],
    n_frames: usize,
    spokes_per_frame: usize,
    mode: BinningMode,
) -> Result<SpokeSchedule> {
    if n_frames == 0 || spokes_per_frame == 0 {
        return Err(Error::Trajectory(
            "n_frames and spokes_per_frame must be positive".into(),
        ));
    }
    if angles.len() != n_frames * spokes_per_frame {
        return Err(Error::Trajectory(format!(
            "got {} angles for {n_frames} frames x {spokes_per_frame} spokes/frame (need {})",
            angles.len(),
            n_frames * spokes_per_frame
        )));
    }
    let entries = angles
        .iter()
        .enumerate()
        .map(|(k, &angle)| {
            let frame_index = match mode {
                BinningMode::Sequential => k / spokes_per_frame,
                BinningMode::Interleaved => k % n_frames,
            };
            SpokeEntry {
                spoke_index: k,
                angle,
                frame_index,
                cardiac_phase: (frame_index as f64 + 1.0) / n_frames as f64,
            }
        })
        .collect();
    SpokeSchedule::from_entries(n_frames, spokes_per_frame, entries)
}
