//! The time axis and the spore -> hypha -> mycelium population model.
//!
//! Frame `i` of `N` sits at transition ratio `T = i / (N - 1)`. The spore
//! population follows `round(S0 * (1 - T))` exactly. Every spore that leaves
//! becomes a hypha anchor at its current position, and a growing share of
//! the converted entities is promoted to mycelium once `T` passes one half.

use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Rect};
use crate::stochastics::Sampler;

/// Transition ratio above which hyphae start turning into mycelium.
pub const MYCELIUM_ONSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    Spore,
    Hypha,
    Mycelium,
}

impl Stage {
    /// Ordinal used for the monotone staging check: spore 0, hypha 1, mycelium 2.
    pub fn ordinal(self) -> u8 {
        match self {
            Stage::Spore => 0,
            Stage::Hypha => 1,
            Stage::Mycelium => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Spore => "spore",
            Stage::Hypha => "hypha",
            Stage::Mycelium => "mycelium",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Position of one frame on the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionClock {
    frame_index: usize,
    total_frames: usize,
}

impl TransitionClock {
    pub fn new(frame_index: usize, total_frames: usize) -> Result<Self> {
        if total_frames < 2 || frame_index >= total_frames {
            return Err(Error::InvalidClock {
                frame_index,
                total_frames,
            });
        }
        Ok(Self {
            frame_index,
            total_frames,
        })
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn ratio(&self) -> f64 {
        self.frame_index as f64 / (self.total_frames - 1) as f64
    }

    /// The clock for the following frame, if there is one.
    pub fn next(&self) -> Option<Self> {
        Self::new(self.frame_index + 1, self.total_frames).ok()
    }
}

/// `i / (N - 1)`. Requires `N >= 2` and `i < N`.
pub fn transition_ratio(frame_index: usize, total_frames: usize) -> Result<f64> {
    TransitionClock::new(frame_index, total_frames).map(|c| c.ratio())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spore {
    pub id: u32,
    pub position: Point,
    /// Radius in normalized units.
    pub size: f64,
}

/// Persistent identity of a hypha or mycelium; geometry is regrown from it
/// every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthAnchor {
    /// Same id the entity carried as a spore.
    pub id: u32,
    pub stage: Stage,
    pub origin: Point,
    /// Frame at which the spore converted.
    pub birth_frame: usize,
    /// Frame at which the hypha was promoted to mycelium.
    pub promoted_frame: Option<usize>,
    pub parent_spore_id: u32,
}

/// Spore displacement law applied once per frame on each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum JitterLaw {
    /// `U(-half_range, half_range)`.
    Uniform { half_range: f64 },
    /// `N(0, sigma)`.
    Normal { sigma: f64 },
}

impl JitterLaw {
    fn draw<S: Sampler + ?Sized>(&self, src: &mut S) -> f64 {
        match *self {
            JitterLaw::Uniform { half_range } => src.draw_uniform(-half_range, half_range),
            JitterLaw::Normal { sigma } => src.draw_normal(0.0, sigma),
        }
    }
}

/// Population and spore parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LifecycleParams {
    pub initial_spores: usize,
    pub spore_bounds: Rect,
    pub jitter: JitterLaw,
    pub initial_spore_radius: f64,
    pub min_spore_radius: f64,
    /// Hypha proportionality constant. Hyphae are the complement of spores
    /// and mycelium, so this does not change the counts.
    pub hypha_coefficient: f64,
    /// Mycelium share is `clamp(mycelium_coefficient * max(0, T - 0.5), 0, 1)`.
    pub mycelium_coefficient: f64,
}

impl Default for LifecycleParams {
    fn default() -> Self {
        Self {
            initial_spores: 200,
            spore_bounds: Rect::new(0.1, 0.1, 0.9, 0.9),
            jitter: JitterLaw::Uniform { half_range: 0.01 },
            initial_spore_radius: 0.012,
            min_spore_radius: 0.002,
            hypha_coefficient: 1.0,
            mycelium_coefficient: 2.0,
        }
    }
}

impl LifecycleParams {
    pub fn validate(&self) -> Result<()> {
        if u32::try_from(self.initial_spores).is_err() {
            return Err(invalid("initial_spores", "must fit in 32 bits"));
        }
        self.spore_bounds.validate_in_unit_square("spore_bounds")?;
        match self.jitter {
            JitterLaw::Uniform { half_range } => {
                if !(half_range.is_finite() && half_range >= 0.0) {
                    return Err(invalid(
                        "jitter.half_range",
                        "must be finite and non-negative",
                    ));
                }
            }
            JitterLaw::Normal { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(invalid("jitter.sigma", "must be finite and non-negative"));
                }
            }
        }
        if !(self.min_spore_radius.is_finite() && self.min_spore_radius > 0.0) {
            return Err(invalid("min_spore_radius", "must be positive"));
        }
        if !(self.initial_spore_radius.is_finite()
            && self.initial_spore_radius >= self.min_spore_radius)
        {
            return Err(invalid(
                "initial_spore_radius",
                "must be at least min_spore_radius",
            ));
        }
        for (name, c) in [
            ("hypha_coefficient", self.hypha_coefficient),
            ("mycelium_coefficient", self.mycelium_coefficient),
        ] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(invalid(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PopulationCounts {
    pub spores: usize,
    pub hyphae: usize,
    pub mycelia: usize,
}

impl PopulationCounts {
    pub fn total(&self) -> usize {
        self.spores + self.hyphae + self.mycelia
    }
}

/// Stage counts at transition ratio `t` for `initial_spores` entities.
///
/// Spores follow `round(S0 * (1 - T))` (half away from zero); converted
/// entities are split into mycelium and hyphae so the three counts always
/// sum to `S0`.
pub fn target_counts(
    t: f64,
    initial_spores: usize,
    hypha_coefficient: f64,
    mycelium_coefficient: f64,
) -> Result<PopulationCounts> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("transition ratio", "must lie in [0, 1]"));
    }
    if !(hypha_coefficient >= 0.0 && mycelium_coefficient >= 0.0) {
        return Err(invalid("stage coefficients", "must be non-negative"));
    }
    let s0 = initial_spores as f64;
    let spores = libm::round(s0 * (1.0 - t)) as usize;
    let converted = initial_spores - spores;
    let share = (mycelium_coefficient * (t - MYCELIUM_ONSET).max(0.0)).clamp(0.0, 1.0);
    let mycelia = libm::round(converted as f64 * share) as usize;
    Ok(PopulationCounts {
        spores,
        hyphae: converted - mycelia,
        mycelia,
    })
}

/// Spore radius at ratio `t`: `initial_radius * (1 - T)^2`, floored at
/// `min_radius`.
pub fn spore_size(t: f64, initial_radius: f64, min_radius: f64) -> f64 {
    let remaining = 1.0 - t;
    (initial_radius * remaining * remaining).max(min_radius)
}

/// Zero up to `threshold`, then rising quadratically to 1 at `T = 1`.
pub fn growth_factor(t: f64, threshold: f64) -> f64 {
    if threshold >= 1.0 {
        return 0.0;
    }
    let x = (t - threshold).max(0.0) / (1.0 - threshold);
    x * x
}

/// Populations at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    /// Remaining spores, ordered by id.
    pub spores: Vec<Spore>,
    /// Hypha and mycelium anchors, ordered by id.
    pub anchors: Vec<GrowthAnchor>,
    pub clock: TransitionClock,
    pub initial_spores: usize,
}

impl WorldState {
    pub fn counts(&self) -> PopulationCounts {
        let mycelia = self
            .anchors
            .iter()
            .filter(|a| a.stage == Stage::Mycelium)
            .count();
        PopulationCounts {
            spores: self.spores.len(),
            hyphae: self.anchors.len() - mycelia,
            mycelia,
        }
    }

    pub fn transition_ratio(&self) -> f64 {
        self.clock.ratio()
    }
}

/// Places `params.initial_spores` spores uniformly in `params.spore_bounds`
/// and returns the world at frame 0.
pub fn initialize_spores<S: Sampler + ?Sized>(
    params: &LifecycleParams,
    total_frames: usize,
    src: &mut S,
) -> Result<WorldState> {
    params.validate()?;
    let clock = TransitionClock::new(0, total_frames)?;
    let b = params.spore_bounds;
    let size = spore_size(0.0, params.initial_spore_radius, params.min_spore_radius);
    let spores = (0..params.initial_spores as u32)
        .map(|id| {
            let x = src.draw_uniform(b.x_min, b.x_max);
            let y = src.draw_uniform(b.y_min, b.y_max);
            Spore {
                id,
                position: Point::new(x, y),
                size,
            }
        })
        .collect();
    Ok(WorldState {
        spores,
        anchors: Vec::new(),
        clock,
        initial_spores: params.initial_spores,
    })
}

/// Moves every spore by one jitter draw per axis and clamps it to `[0, 1]²`.
pub fn jitter_spores<S: Sampler + ?Sized>(state: &mut WorldState, law: &JitterLaw, src: &mut S) {
    for spore in &mut state.spores {
        let dx = law.draw(src);
        let dy = law.draw(src);
        spore.position = Point::new(spore.position.x + dx, spore.position.y + dy).clamp_unit();
    }
}

/// Moves `state` to `clock`, which must be the frame right after the
/// current one.
///
/// Order within a frame: spores to convert are picked uniformly without
/// replacement, hyphae are promoted (oldest first after a shuffle that
/// breaks ties), the remaining spores jitter, and spore sizes shrink.
pub fn advance_frame<S: Sampler + ?Sized>(
    state: &mut WorldState,
    clock: TransitionClock,
    params: &LifecycleParams,
    src: &mut S,
) -> Result<()> {
    let expected = state.clock.frame_index() + 1;
    if clock.frame_index() != expected || clock.total_frames() != state.clock.total_frames() {
        return Err(Error::FrameOutOfSequence {
            expected,
            got: clock.frame_index(),
        });
    }
    let t = clock.ratio();
    let target = target_counts(
        t,
        state.initial_spores,
        params.hypha_coefficient,
        params.mycelium_coefficient,
    )?;

    convert_spores(state, target.spores, clock.frame_index(), src)?;
    promote_hyphae(state, target.mycelia, clock.frame_index(), src)?;
    jitter_spores(state, &params.jitter, src);
    let size = spore_size(t, params.initial_spore_radius, params.min_spore_radius);
    for spore in &mut state.spores {
        spore.size = size;
    }
    state.clock = clock;
    debug_assert_eq!(state.counts(), target);
    Ok(())
}

fn convert_spores<S: Sampler + ?Sized>(
    state: &mut WorldState,
    keep: usize,
    frame: usize,
    src: &mut S,
) -> Result<()> {
    let n = state.spores.len();
    if keep > n {
        return Err(Error::InconsistentPopulation {
            stage: Stage::Spore,
            required: keep,
            available: n,
        });
    }
    let convert = n - keep;
    if convert == 0 {
        return Ok(());
    }
    // partial Fisher-Yates: the first `convert` slots are a uniform sample
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..convert {
        let r = j + src.draw_index(n - j);
        order.swap(j, r);
    }
    let mut chosen = alloc::vec![false; n];
    for &idx in &order[..convert] {
        chosen[idx] = true;
    }
    let mut kept = Vec::with_capacity(keep);
    for (spore, picked) in state.spores.drain(..).zip(chosen) {
        if picked {
            state.anchors.push(GrowthAnchor {
                id: spore.id,
                stage: Stage::Hypha,
                origin: spore.position,
                birth_frame: frame,
                promoted_frame: None,
                parent_spore_id: spore.id,
            });
        } else {
            kept.push(spore);
        }
    }
    state.spores = kept;
    state.anchors.sort_by_key(|a| a.id);
    Ok(())
}

fn promote_hyphae<S: Sampler + ?Sized>(
    state: &mut WorldState,
    target_mycelia: usize,
    frame: usize,
    src: &mut S,
) -> Result<()> {
    let current = state
        .anchors
        .iter()
        .filter(|a| a.stage == Stage::Mycelium)
        .count();
    if target_mycelia < current {
        return Err(Error::InconsistentPopulation {
            stage: Stage::Mycelium,
            required: target_mycelia,
            available: current,
        });
    }
    let promote = target_mycelia - current;
    if promote == 0 {
        return Ok(());
    }
    let mut hyphae: Vec<usize> = state
        .anchors
        .iter()
        .enumerate()
        .filter(|(_, a)| a.stage == Stage::Hypha)
        .map(|(i, _)| i)
        .collect();
    if promote > hyphae.len() {
        return Err(Error::InconsistentPopulation {
            stage: Stage::Mycelium,
            required: promote,
            available: hyphae.len(),
        });
    }
    for j in (1..hyphae.len()).rev() {
        let r = src.draw_index(j + 1);
        hyphae.swap(j, r);
    }
    hyphae.sort_by_key(|&i| state.anchors[i].birth_frame);
    for &i in &hyphae[..promote] {
        let anchor = &mut state.anchors[i];
        anchor.stage = Stage::Mycelium;
        anchor.promoted_frame = Some(frame);
    }
    Ok(())
}
