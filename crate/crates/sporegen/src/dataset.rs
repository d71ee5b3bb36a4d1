//! The frame loop: lifecycle, geometry, rendering, PNG export and the
//! manifest.
//!
//! Lifecycle state advances serially. Geometry, rasterization and encoding
//! of each frame only read that frame's state and draw from per-entity
//! substreams, so frames are processed on a worker pool and the output does
//! not depend on the number of workers.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sporegen_core::lifecycle::{advance_frame, initialize_spores};
use sporegen_core::{
    build_frame_geometry, derive_stream, render_frame, Raster, Rect, Segment, Stage, WorldState,
};

use crate::config::SimulationConfig;
use crate::error::DatasetError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HASH_ALGORITHM: &str = "sha256";
pub const FORMAT_VERSION: u32 = 1;

/// Frames handed to the pool per worker at a time.
const FRAMES_PER_WORKER: usize = 2;

/// Image file name for frame `index`.
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.png")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub image_hash_algorithm: String,
    /// The configuration that produced the dataset, without `output_dir`.
    pub config: SimulationConfig,
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub transition_ratio: f64,
    pub spore_count: usize,
    pub hypha_count: usize,
    pub mycelium_count: usize,
    pub segment_count: usize,
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub image_sha256: String,
    /// One entry per entity, ordered by id.
    pub entities: Vec<EntityAnnotation>,
}

/// Label for one entity in one frame. Coordinates are normalized, origin
/// top-left, `y` down; `bbox` is `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityAnnotation {
    pub id: u32,
    pub stage: Stage,
    /// Spore center, or the anchor origin for hyphae and mycelium.
    pub position: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_count: Option<usize>,
    /// Bounds of everything painted for the entity; absent when nothing was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_frame: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promoted_frame: Option<usize>,
}

/// Serial iterator over the lifecycle states of a run, frame 0 first.
pub struct LifecycleRun<'a> {
    config: &'a SimulationConfig,
    state: Option<WorldState>,
    started: bool,
}

impl<'a> LifecycleRun<'a> {
    pub fn new(config: &'a SimulationConfig) -> Result<Self, DatasetError> {
        config.validate()?;
        let mut src = derive_stream(config.seed, "lifecycle/init");
        let state = initialize_spores(&config.lifecycle, config.total_frames, &mut src)
            .map_err(|e| DatasetError::simulation(0, e))?;
        Ok(Self {
            config,
            state: Some(state),
            started: false,
        })
    }
}

impl Iterator for LifecycleRun<'_> {
    type Item = Result<WorldState, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return self.state.clone().map(Ok);
        }
        let state = self.state.as_mut()?;
        let Some(clock) = state.clock.next() else {
            self.state = None;
            return None;
        };
        let frame = clock.frame_index();
        let mut src = derive_stream(self.config.seed, &format!("lifecycle/frame={frame}"));
        match advance_frame(state, clock, &self.config.lifecycle, &mut src) {
            Ok(()) => Some(Ok(state.clone())),
            Err(e) => {
                self.state = None;
                Some(Err(DatasetError::simulation(frame, e)))
            }
        }
    }
}

/// Geometry and raster for one frame.
pub fn render_state(
    config: &SimulationConfig,
    state: &WorldState,
) -> Result<(Vec<Segment>, Raster), DatasetError> {
    let frame = state.clock.frame_index();
    let segments = build_frame_geometry(
        state,
        &config.morphology,
        &config.environment,
        config.seed,
        config.segment_budget,
    )
    .map_err(|e| DatasetError::simulation(frame, e))?;
    let raster = render_frame(state, &segments, &config.render)
        .map_err(|e| DatasetError::simulation(frame, e))?;
    Ok((segments, raster))
}

/// 8-bit RGB PNG bytes of `raster`.
pub fn encode_png(raster: &Raster) -> Result<Vec<u8>, png::EncodingError> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, raster.width(), raster.height());
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_compression(png::Compression::Balanced);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(raster.as_bytes())?;
    writer.finish()?;
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs the whole frame loop, writing `frame_%05d.png` files and
/// `manifest.json` into `out_dir`.
pub fn generate_dataset(
    config: &SimulationConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Manifest, DatasetError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| DatasetError::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DatasetError::Workers(e.to_string()))?;
    let batch = workers.max(1) * FRAMES_PER_WORKER;

    let mut frames = Vec::with_capacity(config.total_frames);
    let mut run = LifecycleRun::new(config)?.peekable();
    while run.peek().is_some() {
        let states = run.by_ref().take(batch).collect::<Result<Vec<_>, _>>()?;
        let records = pool.install(|| {
            states
                .par_iter()
                .map(|state| export_frame(config, state, out_dir))
                .collect::<Result<Vec<_>, _>>()
        })?;
        frames.extend(records);
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        image_hash_algorithm: HASH_ALGORITHM.to_string(),
        config: SimulationConfig {
            output_dir: None,
            ..config.clone()
        },
        frames,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| DatasetError::io(path, e))?;
    Ok(manifest)
}

fn export_frame(
    config: &SimulationConfig,
    state: &WorldState,
    out_dir: &Path,
) -> Result<FrameRecord, DatasetError> {
    let frame = state.clock.frame_index();
    let (segments, raster) = render_state(config, state)?;
    let name = frame_file_name(frame);
    let path: PathBuf = out_dir.join(&name);
    let bytes = encode_png(&raster).map_err(|e| DatasetError::Encode {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::write(&path, &bytes).map_err(|e| DatasetError::io(&path, e))?;

    let counts = state.counts();
    Ok(FrameRecord {
        frame_index: frame,
        transition_ratio: state.transition_ratio(),
        spore_count: counts.spores,
        hypha_count: counts.hyphae,
        mycelium_count: counts.mycelia,
        segment_count: segments.len(),
        image_path: name,
        image_sha256: sha256_hex(&bytes),
        entities: annotate(state, &segments),
    })
}

/// Per-entity labels for a frame. Segments must be grouped by owner, as
/// produced by `build_frame_geometry`.
pub fn annotate(state: &WorldState, segments: &[Segment]) -> Vec<EntityAnnotation> {
    let mut out: Vec<EntityAnnotation> = state
        .spores
        .iter()
        .map(|s| EntityAnnotation {
            id: s.id,
            stage: Stage::Spore,
            position: [s.position.x, s.position.y],
            radius: Some(s.size),
            segment_count: None,
            bbox: Some(rect_array(Rect::around_disc(s.position, s.size))),
            birth_frame: None,
            promoted_frame: None,
        })
        .collect();
    for anchor in &state.anchors {
        let own = segments.iter().filter(|s| s.owner_id == anchor.id);
        let (count, bounds) = own.fold((0usize, None::<Rect>), |(n, acc), s| {
            let b = s.bounds();
            let merged = match acc {
                None => b,
                Some(a) => Rect::new(
                    a.x_min.min(b.x_min),
                    a.y_min.min(b.y_min),
                    a.x_max.max(b.x_max),
                    a.y_max.max(b.y_max),
                ),
            };
            (n + 1, Some(merged))
        });
        out.push(EntityAnnotation {
            id: anchor.id,
            stage: anchor.stage,
            position: [anchor.origin.x, anchor.origin.y],
            radius: None,
            segment_count: Some(count),
            bbox: bounds.map(rect_array),
            birth_frame: Some(anchor.birth_frame),
            promoted_frame: anchor.promoted_frame,
        });
    }
    out.sort_by_key(|e| e.id);
    out
}

fn rect_array(r: Rect) -> [f64; 4] {
    [r.x_min, r.y_min, r.x_max, r.y_max]
}
