//! Recursive branch growth for hypha and mycelium anchors.
//!
//! A branch at depth `d` draws one temperature factor, emits a segment and
//! then spawns a Poisson number of children at depth `d - 1`, each with a
//! uniformly random heading, a decayed length and a narrower width. Growth
//! stops at depth 0 or when the length falls below the threshold.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Rect};
use crate::lifecycle::{growth_factor, GrowthAnchor, Stage, WorldState};
use crate::stochastics::{derive_stream, Sampler};

/// Floor applied to a sampled temperature factor.
pub const MIN_TEMPERATURE_FACTOR: f64 = 0.05;

/// Deepest recursion accepted by validation.
pub const MAX_SUPPORTED_DEPTH: u32 = 64;

/// Branching parameters for one growth stage.
///
/// Root lengths are drawn from `N(length_mean, length_sd)` in units of
/// [`MorphologyParams::base_length`]; every other length is in normalized
/// plot units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BranchParams {
    /// Mean number of children per branch.
    pub mean_sub_branches: f64,
    pub length_mean: f64,
    pub length_sd: f64,
    /// Stroke width of the root branch.
    pub initial_width: f64,
    /// Children scale their parent's width by `U(width_factor_min, width_factor_max)`.
    pub width_factor_min: f64,
    pub width_factor_max: f64,
    /// Child length is `parent * decay_factor * N(1, decay_noise_sd)`.
    pub decay_factor: f64,
    pub decay_noise_sd: f64,
    pub max_depth: u32,
    /// Branches shorter than this are not drawn.
    pub length_threshold: f64,
    /// Exponential falloff of the branching rate with recursion level.
    /// Only used for mycelium.
    pub density_alpha: f64,
}

impl BranchParams {
    pub fn hypha_defaults() -> Self {
        Self {
            mean_sub_branches: 2.0,
            length_mean: 1.0,
            length_sd: 0.2,
            initial_width: 0.004,
            width_factor_min: 0.6,
            width_factor_max: 1.0,
            decay_factor: 0.7,
            decay_noise_sd: 0.2,
            max_depth: 4,
            length_threshold: 0.004,
            density_alpha: 0.0,
        }
    }

    pub fn mycelium_defaults() -> Self {
        Self {
            mean_sub_branches: 2.5,
            length_mean: 0.8,
            length_sd: 0.15,
            initial_width: 0.005,
            width_factor_min: 0.7,
            width_factor_max: 1.0,
            decay_factor: 0.85,
            decay_noise_sd: 0.2,
            max_depth: 5,
            length_threshold: 0.004,
            density_alpha: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_non_negative = [
            ("mean_sub_branches", self.mean_sub_branches),
            ("length_mean", self.length_mean),
            ("length_sd", self.length_sd),
            ("decay_noise_sd", self.decay_noise_sd),
            ("density_alpha", self.density_alpha),
        ];
        for (name, v) in finite_non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, "must be finite and non-negative"));
            }
        }
        if self.mean_sub_branches > 64.0 {
            return Err(invalid("mean_sub_branches", "must be at most 64"));
        }
        if !(self.initial_width.is_finite() && self.initial_width > 0.0) {
            return Err(invalid("initial_width", "must be positive"));
        }
        if !(self.width_factor_min > 0.0
            && self.width_factor_min <= self.width_factor_max
            && self.width_factor_max.is_finite())
        {
            return Err(invalid(
                "width_factor_min",
                "need 0 < width_factor_min <= width_factor_max",
            ));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(invalid("decay_factor", "must lie in (0, 1]"));
        }
        if self.max_depth > MAX_SUPPORTED_DEPTH {
            return Err(invalid("max_depth", "must be at most 64"));
        }
        if !(self.length_threshold.is_finite() && self.length_threshold > 0.0) {
            return Err(invalid("length_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Environmental modulation shared by all branches.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EnvironmentParams {
    pub temperature_mu: f64,
    pub temperature_sigma: f64,
    /// Transition ratio at which the mycelium growth factor starts rising.
    pub growth_time_constant: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            temperature_mu: 1.0,
            temperature_sigma: 0.1,
            growth_time_constant: 0.5,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        if !self.temperature_mu.is_finite() {
            return Err(invalid("temperature_mu", "must be finite"));
        }
        if !(self.temperature_sigma.is_finite() && self.temperature_sigma >= 0.0) {
            return Err(invalid(
                "temperature_sigma",
                "must be finite and non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.growth_time_constant) {
            return Err(invalid("growth_time_constant", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-stage branching parameters plus the length unit they share.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MorphologyParams {
    pub base_length: f64,
    pub hypha: BranchParams,
    pub mycelium: BranchParams,
}

impl Default for MorphologyParams {
    fn default() -> Self {
        Self {
            base_length: 0.06,
            hypha: BranchParams::hypha_defaults(),
            mycelium: BranchParams::mycelium_defaults(),
        }
    }
}

impl MorphologyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_length.is_finite() && self.base_length > 0.0) {
            return Err(invalid("base_length", "must be positive"));
        }
        self.hypha.validate()?;
        self.mycelium.validate()
    }

    pub fn for_stage(&self, stage: Stage) -> &BranchParams {
        match stage {
            Stage::Mycelium => &self.mycelium,
            _ => &self.hypha,
        }
    }
}

/// One drawn piece of a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub width: f64,
    /// Recursion depth of the branch that emitted it.
    pub depth: u32,
    pub stage: Stage,
    pub owner_id: u32,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Bounding box of the painted stroke, round caps included.
    pub fn bounds(&self) -> Rect {
        let r = self.width / 2.0;
        Rect::around_disc(self.start, r).include_disc(self.end, r)
    }
}

/// `(x + L cos θ, y + L sin θ)`.
pub fn branch_endpoint(x: f64, y: f64, length: f64, theta: f64) -> (f64, f64) {
    (x + length * libm::cos(theta), y + length * libm::sin(theta))
}

/// `L * decay_factor * N(1, decay_noise_sd)`, floored at zero.
pub fn next_branch_length<S: Sampler + ?Sized>(
    length: f64,
    params: &BranchParams,
    src: &mut S,
) -> f64 {
    let noise = src.draw_normal(1.0, params.decay_noise_sd);
    (length * params.decay_factor * noise).max(0.0)
}

/// `max(0.05, N(temperature_mu, temperature_sigma))`.
pub fn sample_temperature_factor<S: Sampler + ?Sized>(env: &EnvironmentParams, src: &mut S) -> f64 {
    src.draw_normal(env.temperature_mu, env.temperature_sigma)
        .max(MIN_TEMPERATURE_FACTOR)
}

/// Number of children of a branch at `depth`.
///
/// Hyphae draw `Poisson(lambda)`. Mycelium draws
/// `Poisson(lambda * exp(-alpha * (max_depth - depth)))`, so deeper levels
/// branch less.
pub fn sub_branch_count<S: Sampler + ?Sized>(
    lambda: f64,
    depth: u32,
    max_depth: u32,
    alpha: f64,
    stage: Stage,
    src: &mut S,
) -> Result<u32> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and non-negative"));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(invalid("density_alpha", "must be finite and non-negative"));
    }
    let effective = match stage {
        Stage::Mycelium => {
            let level = f64::from(max_depth.saturating_sub(depth));
            lambda * libm::exp(-alpha * level)
        }
        _ => lambda,
    };
    if effective == 0.0 {
        return Ok(0);
    }
    Ok(src.draw_poisson(effective))
}

/// Starting state of a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub origin: Point,
    pub length: f64,
    pub angle: f64,
    pub depth: u32,
    pub width: f64,
}

/// Everything a recursion needs besides the branch itself.
#[derive(Debug, Clone, Copy)]
pub struct GrowthContext<'a> {
    pub params: &'a BranchParams,
    pub env: &'a EnvironmentParams,
    pub stage: Stage,
    pub owner_id: u32,
    /// Maximum length of the output buffer.
    pub segment_budget: usize,
}

/// Grows `branch` and its descendants depth-first, appending to `out`.
pub fn grow_branch<S: Sampler + ?Sized>(
    branch: Branch,
    ctx: &GrowthContext<'_>,
    src: &mut S,
    out: &mut Vec<Segment>,
) -> Result<()> {
    if branch.depth == 0 || branch.length.is_nan() || branch.length < ctx.params.length_threshold {
        return Ok(());
    }
    if out.len() >= ctx.segment_budget {
        return Err(Error::SegmentBudgetExceeded {
            owner_id: ctx.owner_id,
            budget: ctx.segment_budget,
        });
    }
    let tf = sample_temperature_factor(ctx.env, src);
    let (ex, ey) = branch_endpoint(
        branch.origin.x,
        branch.origin.y,
        branch.length * tf,
        branch.angle,
    );
    let end = Point::new(ex, ey);
    out.push(Segment {
        start: branch.origin,
        end,
        width: branch.width * tf,
        depth: branch.depth,
        stage: ctx.stage,
        owner_id: ctx.owner_id,
    });

    let p = ctx.params;
    let children = sub_branch_count(
        p.mean_sub_branches,
        branch.depth,
        p.max_depth,
        p.density_alpha,
        ctx.stage,
        src,
    )?;
    for _ in 0..children {
        let angle = src.draw_uniform(0.0, TAU);
        let length = next_branch_length(branch.length, p, src);
        let width = branch.width * src.draw_uniform(p.width_factor_min, p.width_factor_max);
        let child = Branch {
            origin: end,
            length,
            angle,
            depth: branch.depth - 1,
            width,
        };
        grow_branch(child, ctx, src, out)?;
    }
    Ok(())
}

/// Stream label for the geometry of entity `id` at frame `frame_index`.
pub fn branch_stream_label(frame_index: usize, id: u32) -> alloc::string::String {
    format!("branch/frame={frame_index}/entity={id}")
}

/// Grows the whole body of one anchor at ratio `t`, with its own substream.
///
/// The root length is `N(length_mean, length_sd) * base_length`; mycelium
/// roots are further stretched by `1 + growth_factor(t)`.
pub fn grow_anchor(
    anchor: &GrowthAnchor,
    frame_index: usize,
    t: f64,
    morphology: &MorphologyParams,
    env: &EnvironmentParams,
    master_seed: u64,
    segment_budget: usize,
) -> Result<Vec<Segment>> {
    let mut src = derive_stream(master_seed, &branch_stream_label(frame_index, anchor.id));
    let params = morphology.for_stage(anchor.stage);
    let base = morphology.base_length;
    let mut length = src
        .draw_normal(params.length_mean * base, params.length_sd * base)
        .max(0.0);
    if anchor.stage == Stage::Mycelium {
        length *= 1.0 + growth_factor(t, env.growth_time_constant);
    }
    let angle = src.draw_uniform(0.0, TAU);
    let root = Branch {
        origin: anchor.origin,
        length,
        angle,
        depth: params.max_depth,
        width: params.initial_width,
    };
    let ctx = GrowthContext {
        params,
        env,
        stage: anchor.stage,
        owner_id: anchor.id,
        segment_budget,
    };
    let mut out = Vec::new();
    grow_branch(root, &ctx, &mut src, &mut out)?;
    Ok(out)
}

/// Anchors in drawing order: hyphae before mycelium, each by id.
pub fn anchors_in_draw_order(state: &WorldState) -> Vec<&GrowthAnchor> {
    let mut anchors: Vec<&GrowthAnchor> = state.anchors.iter().collect();
    anchors.sort_by_key(|a| (a.stage, a.id));
    anchors
}

/// Geometry of every anchor in `state`, ordered by stage, owner and
/// emission order. The budget caps the total for the frame.
pub fn build_frame_geometry(
    state: &WorldState,
    morphology: &MorphologyParams,
    env: &EnvironmentParams,
    master_seed: u64,
    segment_budget: usize,
) -> Result<Vec<Segment>> {
    let frame = state.clock.frame_index();
    let t = state.clock.ratio();
    let mut all = Vec::new();
    for anchor in anchors_in_draw_order(state) {
        let remaining = segment_budget - all.len();
        let body = grow_anchor(anchor, frame, t, morphology, env, master_seed, remaining).map_err(
            |e| match e {
                Error::SegmentBudgetExceeded { owner_id, .. } => Error::SegmentBudgetExceeded {
                    owner_id,
                    budget: segment_budget,
                },
                other => other,
            },
        )?;
        all.extend(body);
    }
    Ok(all)
}
