use core::fmt;

use crate::lifecycle::Stage;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core simulation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its documented domain. `name` is the parameter.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Frame index outside `[0, total_frames - 1]` or too few frames.
    InvalidClock {
        frame_index: usize,
        total_frames: usize,
    },
    /// `advance_frame` was asked to skip or repeat a frame.
    FrameOutOfSequence { expected: usize, got: usize },
    /// Population targets could not be met from the current world.
    InconsistentPopulation {
        stage: Stage,
        required: usize,
        available: usize,
    },
    /// Branch growth produced more segments than the configured budget.
    SegmentBudgetExceeded { owner_id: u32, budget: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::InvalidClock { frame_index, total_frames } => write!(
                f,
                "invalid clock: frame {frame_index} of {total_frames} (total_frames must be >= 2 and frame < total_frames)"
            ),
            Error::FrameOutOfSequence { expected, got } => {
                write!(f, "frame out of sequence: expected {expected}, got {got}")
            }
            Error::InconsistentPopulation { stage, required, available } => write!(
                f,
                "cannot produce {required} {stage} entities, only {available} candidates"
            ),
            Error::SegmentBudgetExceeded { owner_id, budget } => write!(
                f,
                "segment budget of {budget} exceeded while growing entity {owner_id}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
