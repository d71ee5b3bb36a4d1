//! Core of the `sporegen` fungal growth simulator.
//!
//! Everything here is pure computation over in-memory buffers: seeded
//! random substreams and samplers, the spore/hypha/mycelium population
//! model, recursive branch growth and a binary-coverage software
//! rasterizer. File formats, the frame driver and the CLI live in the
//! `sporegen` crate.
//!
//! The crate is `no_std` and needs only `alloc`. All transcendental math goes
//! through `libm`, so a given seed produces bit-identical output on every
//! platform.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod geometry;
pub mod lifecycle;
pub mod morphology;
pub mod render;
pub mod stochastics;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use lifecycle::{
    advance_frame, growth_factor, initialize_spores, jitter_spores, spore_size, target_counts,
    transition_ratio, GrowthAnchor, JitterLaw, LifecycleParams, PopulationCounts, Spore, Stage,
    TransitionClock, WorldState, MYCELIUM_ONSET,
};
pub use morphology::{
    anchors_in_draw_order, branch_endpoint, build_frame_geometry, grow_anchor, grow_branch,
    next_branch_length, sample_temperature_factor, sub_branch_count, Branch, BranchParams,
    EnvironmentParams, GrowthContext, MorphologyParams, Segment,
};
pub use render::{
    draw_disc, draw_disc_with, draw_stroke, draw_stroke_with, interpolate_color, render_frame,
    Antialias, Color, ColorRamp, Palette, Raster, RenderOptions,
};
pub use stochastics::{
    derive_stream, sample_normal, sample_poisson, sample_uniform, RandomSource, Sampler,
};
