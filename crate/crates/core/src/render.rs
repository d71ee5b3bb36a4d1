//! Binary-coverage rasterization of spores and branch segments.
//!
//! Normalized `(x, y)` maps to pixel `(x * width, y * height)`, with the
//! origin at the top-left. Lengths (radii, stroke widths) scale by
//! `min(width, height)`. A pixel is painted when its center lies inside the
//! shape, so the output is exact integer arithmetic on the same floats on
//! every platform.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::lifecycle::{Stage, WorldState};
use crate::morphology::Segment;

pub const MIN_RASTER_SIDE: u32 = 16;

/// Subsamples per axis when anti-aliasing.
const AA_GRID: u32 = 4;

/// RGB color with channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Color {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Color {
    pub const BLACK: Color = Color::new(0.0, 0.0, 0.0);
    pub const WHITE: Color = Color::new(1.0, 1.0, 1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn clamped(self) -> Self {
        Self::new(clamp01(self.r), clamp01(self.g), clamp01(self.b))
    }

    pub fn to_rgb8(self) -> [u8; 3] {
        let c = self.clamped();
        [to_u8(c.r), to_u8(c.g), to_u8(c.b)]
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if [self.r, self.g, self.b]
            .iter()
            .all(|c| (0.0..=1.0).contains(c))
        {
            Ok(())
        } else {
            Err(invalid(name, "color channels must lie in [0, 1]"))
        }
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

fn to_u8(v: f64) -> u8 {
    libm::round(v * 255.0) as u8
}

/// Channel-wise `start * (1 - p) + end * p`, exact at both endpoints.
pub fn interpolate_color(start: Color, end: Color, position: f64) -> Result<Color> {
    if !(0.0..=1.0).contains(&position) {
        return Err(invalid("position", "must lie in [0, 1]"));
    }
    let mix = |a: f64, b: f64| a * (1.0 - position) + b * position;
    Ok(Color::new(
        mix(start.r, end.r),
        mix(start.g, end.g),
        mix(start.b, end.b),
    )
    .clamped())
}

/// Start and end colors of one stage over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ColorRamp {
    pub start: Color,
    pub end: Color,
}

impl ColorRamp {
    pub fn at(&self, t: f64) -> Result<Color> {
        interpolate_color(self.start, self.end, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Palette {
    pub spore: ColorRamp,
    pub hypha: ColorRamp,
    pub mycelium: ColorRamp,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            spore: ColorRamp {
                start: Color::new(0.40, 0.26, 0.13),
                end: Color::new(0.75, 0.75, 0.72),
            },
            hypha: ColorRamp {
                start: Color::new(0.60, 0.85, 0.45),
                end: Color::new(0.10, 0.45, 0.15),
            },
            mycelium: ColorRamp {
                start: Color::new(0.70, 0.85, 0.97),
                end: Color::new(0.08, 0.20, 0.55),
            },
        }
    }
}

impl Palette {
    pub fn ramp(&self, stage: Stage) -> &ColorRamp {
        match stage {
            Stage::Spore => &self.spore,
            Stage::Hypha => &self.hypha,
            Stage::Mycelium => &self.mycelium,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, ramp) in [
            ("palette.spore", self.spore),
            ("palette.hypha", self.hypha),
            ("palette.mycelium", self.mycelium),
        ] {
            ramp.start.validate(name)?;
            ramp.end.validate(name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Antialias {
    /// Pixel-center coverage, bit-stable across platforms.
    #[default]
    Off,
    /// 4x4 supersampled coverage blended over the existing pixel.
    Supersample,
}

/// Image size, colors and draw order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub background: Color,
    pub palette: Palette,
    pub antialias: Antialias,
    /// Stages from bottom to top.
    pub z_order: [Stage; 3],
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            background: Color::new(0.04, 0.04, 0.05),
            palette: Palette::default(),
            antialias: Antialias::Off,
            z_order: [Stage::Hypha, Stage::Mycelium, Stage::Spore],
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_RASTER_SIDE || self.height < MIN_RASTER_SIDE {
            return Err(invalid(
                "image size",
                "width and height must be at least 16",
            ));
        }
        if self.width > 16_384 || self.height > 16_384 {
            return Err(invalid(
                "image size",
                "width and height must be at most 16384",
            ));
        }
        self.background.validate("background")?;
        self.palette.validate()?;
        let mut seen = [false; 3];
        for stage in self.z_order {
            seen[stage.ordinal() as usize] = true;
        }
        if seen != [true; 3] {
            return Err(invalid(
                "z_order",
                "must list spore, hypha and mycelium once each",
            ));
        }
        Ok(())
    }
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn new(width: u32, height: u32, background: Color) -> Self {
        let len = width as usize * height as usize;
        Self {
            width,
            height,
            pixels: vec![background.to_rgb8(); len],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// Packed `RGBRGB...` bytes, row by row.
    pub fn as_bytes(&self) -> &[u8] {
        self.pixels.as_flattened()
    }

    pub fn get(&self, x: u32, y: u32) -> Option<[u8; 3]> {
        (x < self.width && y < self.height)
            .then(|| self.pixels[y as usize * self.width as usize + x as usize])
    }

    /// Number of pixels differing from `color`.
    pub fn count_not(&self, color: [u8; 3]) -> usize {
        self.pixels.iter().filter(|&&p| p != color).count()
    }

    fn scale(&self) -> f64 {
        f64::from(self.width.min(self.height))
    }

    fn to_pixel(&self, p: Point) -> (f64, f64) {
        (p.x * f64::from(self.width), p.y * f64::from(self.height))
    }

    /// Pixel index range covering `[lo, hi]` in pixel coordinates, clipped.
    fn span(lo: f64, hi: f64, limit: u32) -> Option<(u32, u32)> {
        // centers at i + 0.5 within [lo, hi]
        let first = libm::ceil(lo - 0.5).max(0.0);
        let last = libm::floor(hi - 0.5).min(f64::from(limit) - 1.0);
        (first <= last).then_some((first as u32, last as u32))
    }

    /// Paints every pixel in the box whose coverage under `inside` is
    /// positive.
    fn fill<F: Fn(f64, f64) -> bool>(
        &mut self,
        bbox: (f64, f64, f64, f64),
        color: Color,
        aa: Antialias,
        inside: F,
    ) {
        let (x0, y0, x1, y1) = bbox;
        if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return;
        }
        let rgb = color.to_rgb8();
        let w = self.width as usize;
        match aa {
            Antialias::Off => {
                let (Some((ix0, ix1)), Some((iy0, iy1))) = (
                    Self::span(x0, x1, self.width),
                    Self::span(y0, y1, self.height),
                ) else {
                    return;
                };
                for iy in iy0..=iy1 {
                    let py = f64::from(iy) + 0.5;
                    let row = iy as usize * w;
                    for ix in ix0..=ix1 {
                        if inside(f64::from(ix) + 0.5, py) {
                            self.pixels[row + ix as usize] = rgb;
                        }
                    }
                }
            }
            Antialias::Supersample => {
                // widen by half a pixel so partially covered edge pixels are visited
                let (Some((ix0, ix1)), Some((iy0, iy1))) = (
                    Self::span(x0 - 0.5, x1 + 0.5, self.width),
                    Self::span(y0 - 0.5, y1 + 0.5, self.height),
                ) else {
                    return;
                };
                let step = 1.0 / f64::from(AA_GRID);
                let total = f64::from(AA_GRID * AA_GRID);
                let target = [color.r, color.g, color.b].map(clamp01);
                for iy in iy0..=iy1 {
                    for ix in ix0..=ix1 {
                        let mut hits = 0u32;
                        for sy in 0..AA_GRID {
                            for sx in 0..AA_GRID {
                                let px = f64::from(ix) + (f64::from(sx) + 0.5) * step;
                                let py = f64::from(iy) + (f64::from(sy) + 0.5) * step;
                                hits += u32::from(inside(px, py));
                            }
                        }
                        if hits == 0 {
                            continue;
                        }
                        let coverage = f64::from(hits) / total;
                        let px = &mut self.pixels[iy as usize * w + ix as usize];
                        for (ch, &tgt) in px.iter_mut().zip(&target) {
                            let old = f64::from(*ch) / 255.0;
                            *ch = to_u8(old + (tgt - old) * coverage);
                        }
                    }
                }
            }
        }
    }
}

/// Fills the disc of normalized `radius` around `center`. Radius zero paints
/// nothing.
pub fn draw_disc(raster: &mut Raster, center: Point, radius: f64, color: Color) {
    draw_disc_with(raster, center, radius, color, Antialias::Off);
}

pub fn draw_disc_with(
    raster: &mut Raster,
    center: Point,
    radius: f64,
    color: Color,
    aa: Antialias,
) {
    if radius.is_nan() || radius <= 0.0 {
        return;
    }
    let (cx, cy) = raster.to_pixel(center);
    let r = radius * raster.scale();
    let r2 = r * r;
    raster.fill((cx - r, cy - r, cx + r, cy + r), color, aa, |px, py| {
        let (dx, dy) = (px - cx, py - cy);
        dx * dx + dy * dy <= r2
    });
}

/// Fills the capsule of the segment's width around its centerline.
pub fn draw_stroke(raster: &mut Raster, segment: &Segment, color: Color) {
    draw_stroke_with(raster, segment, color, Antialias::Off);
}

pub fn draw_stroke_with(raster: &mut Raster, segment: &Segment, color: Color, aa: Antialias) {
    if segment.width.is_nan() || segment.width <= 0.0 {
        return;
    }
    let (ax, ay) = raster.to_pixel(segment.start);
    let (bx, by) = raster.to_pixel(segment.end);
    let half = segment.width * raster.scale() / 2.0;
    let h2 = half * half;
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let bbox = (
        ax.min(bx) - half,
        ay.min(by) - half,
        ax.max(bx) + half,
        ay.max(by) + half,
    );
    raster.fill(bbox, color, aa, |px, py| {
        let (qx, qy) = (px - ax, py - ay);
        let t = if len2 > 0.0 {
            ((qx * dx + qy * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (ex, ey) = (qx - t * dx, qy - t * dy);
        ex * ex + ey * ey <= h2
    });
}

/// Renders spores as discs and segments as strokes, stages stacked in
/// `options.z_order`, each colored by its ramp at the frame's `T`.
pub fn render_frame(
    state: &WorldState,
    segments: &[Segment],
    options: &RenderOptions,
) -> Result<Raster> {
    let t = state.transition_ratio();
    let mut raster = Raster::new(options.width, options.height, options.background);
    for stage in options.z_order {
        let color = options.palette.ramp(stage).at(t)?;
        match stage {
            Stage::Spore => {
                for spore in &state.spores {
                    draw_disc_with(
                        &mut raster,
                        spore.position,
                        spore.size,
                        color,
                        options.antialias,
                    );
                }
            }
            _ => {
                for seg in segments.iter().filter(|s| s.stage == stage) {
                    draw_stroke_with(&mut raster, seg, color, options.antialias);
                }
            }
        }
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::{initialize_spores, LifecycleParams, Spore, TransitionClock};
    use crate::stochastics::derive_stream;
    use core::f64::consts::PI;

    const RED: Color = Color::new(1.0, 0.0, 0.0);

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64, width: f64) -> Segment {
        Segment {
            start: Point::new(x0, y0),
            end: Point::new(x1, y1),
            width,
            depth: 1,
            stage: Stage::Hypha,
            owner_id: 0,
        }
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let a = Color::new(0.13, 0.71, 0.29);
        let b = Color::new(0.97, 0.05, 0.61);
        assert_eq!(interpolate_color(a, b, 0.0).unwrap(), a);
        assert_eq!(interpolate_color(a, b, 1.0).unwrap(), b);
        assert_eq!(
            interpolate_color(Color::BLACK, Color::WHITE, 0.5).unwrap(),
            Color::new(0.5, 0.5, 0.5)
        );
        assert!(interpolate_color(a, b, 1.01).is_err());
        assert!(interpolate_color(a, b, -0.01).is_err());
    }

    #[test]
    fn raster_starts_at_background() {
        let r = Raster::new(20, 17, Color::new(0.2, 0.4, 0.6));
        assert_eq!(r.pixels().len(), 20 * 17);
        assert_eq!(r.as_bytes().len(), 20 * 17 * 3);
        assert!(r.pixels().iter().all(|&p| p == [51, 102, 153]));
    }

    #[test]
    fn zero_radius_and_offscreen_disc_paint_nothing() {
        let mut r = Raster::new(100, 100, Color::BLACK);
        let blank = r.clone();
        draw_disc(&mut r, Point::new(0.5, 0.5), 0.0, RED);
        draw_disc(&mut r, Point::new(3.0, -2.0), 0.25, RED);
        assert_eq!(r, blank);
    }

    #[test]
    fn disc_area_matches_analytic() {
        let mut r = Raster::new(100, 100, Color::BLACK);
        draw_disc(&mut r, Point::new(0.5, 0.5), 0.25, RED);
        let painted = r.count_not([0, 0, 0]) as f64;
        let area = PI * 25.0 * 25.0;
        assert!((painted - area).abs() / area < 0.03, "{painted} vs {area}");
    }

    #[test]
    fn capsule_area_matches_analytic() {
        let mut r = Raster::new(1000, 1000, Color::BLACK);
        draw_stroke(&mut r, &seg(0.25, 0.5, 0.75, 0.5, 0.01), RED);
        let painted = r.count_not([0, 0, 0]) as f64;
        let area = 500.0 * 10.0 + PI * 5.0 * 5.0;
        assert!((painted - area).abs() / area < 0.03, "{painted} vs {area}");
    }

    #[test]
    fn zero_length_stroke_equals_disc() {
        let mut a = Raster::new(64, 64, Color::BLACK);
        let mut b = a.clone();
        draw_stroke(&mut a, &seg(0.4, 0.6, 0.4, 0.6, 0.2), RED);
        draw_disc(&mut b, Point::new(0.4, 0.6), 0.1, RED);
        assert_eq!(a, b);
        assert!(a.count_not([0, 0, 0]) > 0);
    }

    #[test]
    fn overdraw_is_idempotent() {
        let s = seg(0.1, 0.2, 0.8, 0.7, 0.03);
        let mut once = Raster::new(80, 60, Color::BLACK);
        draw_stroke(&mut once, &s, RED);
        let mut twice = once.clone();
        draw_stroke(&mut twice, &s, RED);
        assert_eq!(once, twice);
    }

    #[test]
    fn supersampled_edges_blend() {
        let mut r = Raster::new(40, 40, Color::BLACK);
        draw_disc_with(
            &mut r,
            Point::new(0.5, 0.5),
            0.2,
            RED,
            Antialias::Supersample,
        );
        let partial = r.pixels().iter().filter(|p| p[0] > 0 && p[0] < 255).count();
        assert!(partial > 0);
        assert_eq!(r.get(20, 20), Some([255, 0, 0]));
    }

    #[test]
    fn render_options_validation() {
        RenderOptions::default().validate().unwrap();
        let small = RenderOptions {
            width: 15,
            ..Default::default()
        };
        assert!(small.validate().is_err());
        let dup = RenderOptions {
            z_order: [Stage::Spore, Stage::Spore, Stage::Hypha],
            ..Default::default()
        };
        assert!(dup.validate().is_err());
    }

    fn empty_world(frame: usize, frames: usize) -> WorldState {
        WorldState {
            spores: vec![],
            anchors: vec![],
            clock: TransitionClock::new(frame, frames).unwrap(),
            initial_spores: 0,
        }
    }

    #[test]
    fn empty_world_renders_background() {
        let opts = RenderOptions {
            width: 32,
            height: 32,
            ..Default::default()
        };
        let r = render_frame(&empty_world(0, 5), &[], &opts).unwrap();
        assert_eq!(r, Raster::new(32, 32, opts.background));
    }

    #[test]
    fn first_frame_paints_exactly_the_spore_discs() {
        let opts = RenderOptions {
            width: 128,
            height: 96,
            ..Default::default()
        };
        let params = LifecycleParams {
            initial_spores: 25,
            ..Default::default()
        };
        let world = initialize_spores(&params, 10, &mut derive_stream(1, "init")).unwrap();
        let raster = render_frame(&world, &[], &opts).unwrap();
        // brute force union of discs over pixel centers
        let scale = 96.0;
        let union = (0..96u32)
            .flat_map(|y| (0..128u32).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                let (px, py) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
                world.spores.iter().any(|s| {
                    let (dx, dy) = (px - s.position.x * 128.0, py - s.position.y * 96.0);
                    let r = s.size * scale;
                    dx * dx + dy * dy <= r * r
                })
            })
            .count();
        assert!(union > 0);
        assert_eq!(raster.count_not(opts.background.to_rgb8()), union);
        let start = opts.palette.spore.start.to_rgb8();
        assert!(raster
            .pixels()
            .iter()
            .all(|&p| p == start || p == opts.background.to_rgb8()));
    }

    #[test]
    fn last_frame_uses_end_colors() {
        let opts = RenderOptions {
            width: 64,
            height: 64,
            ..Default::default()
        };
        let mut world = empty_world(4, 5);
        world.spores.push(Spore {
            id: 0,
            position: Point::new(0.2, 0.2),
            size: 0.05,
        });
        let segments = [
            seg(0.5, 0.5, 0.9, 0.5, 0.05),
            Segment {
                stage: Stage::Mycelium,
                ..seg(0.5, 0.8, 0.9, 0.8, 0.05)
            },
        ];
        let r = render_frame(&world, &segments, &opts).unwrap();
        assert_eq!(r.get(13, 13), Some(opts.palette.spore.end.to_rgb8()));
        assert_eq!(r.get(45, 32), Some(opts.palette.hypha.end.to_rgb8()));
        assert_eq!(r.get(45, 51), Some(opts.palette.mycelium.end.to_rgb8()));
    }

    #[test]
    fn spores_draw_on_top_by_default() {
        let opts = RenderOptions {
            width: 64,
            height: 64,
            ..Default::default()
        };
        let mut world = empty_world(2, 5);
        world.spores.push(Spore {
            id: 0,
            position: Point::new(0.5, 0.5),
            size: 0.05,
        });
        let segments = [seg(0.1, 0.5, 0.9, 0.5, 0.2)];
        let r = render_frame(&world, &segments, &opts).unwrap();
        let spore = opts.palette.spore.at(0.5).unwrap().to_rgb8();
        assert_eq!(r.get(32, 32), Some(spore));
        let reversed = RenderOptions {
            z_order: [Stage::Spore, Stage::Mycelium, Stage::Hypha],
            ..opts.clone()
        };
        let r = render_frame(&world, &segments, &reversed).unwrap();
        assert_eq!(
            r.get(32, 32),
            Some(opts.palette.hypha.at(0.5).unwrap().to_rgb8())
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            // any geometry, including far off-canvas, must not write out of bounds
            #[test]
            fn clipping_is_safe(
                x0 in -5.0f64..5.0, y0 in -5.0f64..5.0, x1 in -5.0f64..5.0, y1 in -5.0f64..5.0,
                w in 0.0f64..0.5, r in 0.0f64..3.0, aa: bool,
            ) {
                let aa = if aa { Antialias::Supersample } else { Antialias::Off };
                let mut raster = Raster::new(17, 23, Color::BLACK);
                draw_stroke_with(&mut raster, &seg(x0, y0, x1, y1, w), RED, aa);
                draw_disc_with(&mut raster, Point::new(x0, y1), r, RED, aa);
                prop_assert_eq!(raster.pixels().len(), 17 * 23);
            }
        }
    }
}
