//! Top-down rasterization of scenes and annotation overlays.
//!
//! A normalized point `(x, y)` lands on pixel `(floor(x * W), floor(y * H))`,
//! clamped to the last row/column, which is the pixel whose center is
//! nearest to it.

mod image;
mod palette;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use image::Image;
pub use palette::{Palette, PALETTE_JSON};

use crate::model::{Cell, NormPoint, Scene, SceneKind};
use crate::nav::NavEnv;

pub const DEFAULT_SIZE: u32 = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("trajectory needs at least two points, got {0}")]
    ShortTrajectory(usize),
    #[error("annotation has no points")]
    Empty,
    #[error("png: {0}")]
    Png(String),
}

#[derive(Debug, Clone, Copy)]
pub enum Viewport<'a> {
    Full,
    /// Only these grid cells are lit; the rest is dimmed.
    Visible(&'a BTreeSet<Cell>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { width: DEFAULT_SIZE, height: DEFAULT_SIZE }
    }
}

/// Pixel whose center is nearest to a normalized point.
pub fn point_to_pixel(p: &NormPoint, width: u32, height: u32) -> (u32, u32) {
    let px = ((p.x() * width as f64).floor() as u32).min(width - 1);
    let py = ((p.y() * height as f64).floor() as u32).min(height - 1);
    (px, py)
}

fn pixel_center_norm(i: u32, j: u32, width: u32, height: u32) -> (f64, f64) {
    ((i as f64 + 0.5) / width as f64, (j as f64 + 0.5) / height as f64)
}

pub fn render(scene: &Scene, viewport: Viewport<'_>, config: &RenderConfig) -> Image {
    render_with(scene, viewport, config, Palette::builtin())
}

pub fn render_with(scene: &Scene, viewport: Viewport<'_>, config: &RenderConfig, palette: &Palette) -> Image {
    let (w, h) = (config.width, config.height);
    let base = match scene.kind {
        SceneKind::Tabletop => palette.table,
        SceneKind::Floorplan => palette.floor,
    };
    let mut img = Image::new(w, h, base);
    let cam = scene.camera();
    let to_world = |i: u32, j: u32| {
        let (u, v) = pixel_center_norm(i, j, w, h);
        let b = cam.bounds();
        [b.min_x + u * b.width, b.min_y + v * b.height]
    };

    if let Some(grid) = &scene.occupancy {
        for j in 0..h {
            for i in 0..w {
                let [x, y] = to_world(i, j);
                if grid.cell_of(x, y).is_some_and(|c| grid.is_obstacle(c)) {
                    img.put(i, j, palette.wall);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..scene.objects.len()).collect();
    order.sort_by_key(|&k| (scene.stack_depth(&scene.objects[k].id), k));
    for k in order {
        let o = &scene.objects[k];
        let shape = o.shape();
        let color = palette.color_of(&o.category);
        let [x0, y0, x1, y1] = shape.bbox();
        let b = cam.bounds();
        let to_px = |v: f64, lo: f64, span: f64, n: u32| (((v - lo) / span * n as f64).floor().max(0.0) as u32).min(n - 1);
        let (i0, i1) = (to_px(x0, b.min_x, b.width, w), to_px(x1, b.min_x, b.width, w));
        let (j0, j1) = (to_px(y0, b.min_y, b.height, h), to_px(y1, b.min_y, b.height, h));
        for j in j0..=j1 {
            for i in i0..=i1 {
                if shape.contains(to_world(i, j), 0.0) {
                    img.put(i, j, color);
                }
            }
        }
    }

    if let (Viewport::Visible(cells), Some(grid)) = (viewport, &scene.occupancy) {
        for j in 0..h {
            for i in 0..w {
                let [x, y] = to_world(i, j);
                let lit = grid.cell_of(x, y).is_some_and(|c| cells.contains(&c));
                if !lit {
                    let [r, g, b] = img.get(i, j);
                    img.put(i, j, [r / 3, g / 3, b / 3]);
                }
            }
        }
    }
    img
}

/// PNG bytes of `render` at the default size.
pub fn render_png(scene: &Scene, viewport: Viewport<'_>) -> Vec<u8> {
    render(scene, viewport, &RenderConfig::default()).to_png()
}

pub const AGENT_COLOR: [u8; 3] = [20, 70, 230];

/// What a navigation planner sees: the floorplan with everything outside
/// the view cone dimmed, plus the agent as a disc with a heading tick.
pub fn render_nav_observation(env: &NavEnv, config: &RenderConfig) -> Image {
    let visible = env.visible();
    let img = render(env.scene(), Viewport::Visible(&visible), config);
    let cam = env.scene().camera();
    let agent = env.agent();
    let Ok(at) = cam.to_norm(&agent) else { return img };
    let style = Style { color: AGENT_COLOR, width: 2 };
    let img = annotate(&img, &AnnotationSpec::point(at, style));
    let reach = 0.4;
    let tip = NormPoint::clamped(
        at.x() + reach * agent.heading.cos() / cam.scale()[0],
        at.y() + reach * agent.heading.sin() / cam.scale()[1],
    );
    annotate(&img, &AnnotationSpec { kind: AnnotationKind::Trajectory, points: vec![at, tip], style })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Trajectory,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Style {
    pub color: [u8; 3],
    /// Stroke width in pixels; 0 draws nothing.
    pub width: u32,
}

impl Default for Style {
    fn default() -> Self {
        Self { color: [230, 20, 20], width: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSpec {
    pub kind: AnnotationKind,
    pub points: Vec<NormPoint>,
    pub style: Style,
}

impl AnnotationSpec {
    pub fn point(p: NormPoint, style: Style) -> Self {
        Self { kind: AnnotationKind::Point, points: vec![p], style }
    }

    pub fn trajectory(points: Vec<NormPoint>, style: Style) -> Result<Self, RenderError> {
        let spec = Self { kind: AnnotationKind::Trajectory, points, style };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        match self.kind {
            AnnotationKind::Trajectory if self.points.len() < 2 => Err(RenderError::ShortTrajectory(self.points.len())),
            AnnotationKind::Point if self.points.is_empty() => Err(RenderError::Empty),
            _ => Ok(()),
        }
    }
}

/// Draws the overlay on a copy of `image`. Point markers are discs of
/// radius `2 * width` around each point's pixel; trajectories are
/// polylines `width` pixels thick.
pub fn annotate(image: &Image, spec: &AnnotationSpec) -> Image {
    let mut out = image.clone();
    let Style { color, width } = spec.style;
    if width == 0 {
        return out;
    }
    let (w, h) = (image.width(), image.height());
    let px: Vec<(f64, f64)> = spec
        .points
        .iter()
        .map(|p| {
            let (x, y) = point_to_pixel(p, w, h);
            (x as f64, y as f64)
        })
        .collect();
    match spec.kind {
        AnnotationKind::Point => {
            let r = 2.0 * width as f64;
            for &(cx, cy) in &px {
                paint_where(&mut out, color, (cx - r, cy - r, cx + r, cy + r), |i, j| {
                    (i - cx).powi(2) + (j - cy).powi(2) <= r * r
                });
            }
        }
        AnnotationKind::Trajectory => {
            let half = width as f64 / 2.0;
            for seg in px.windows(2) {
                let ((ax, ay), (bx, by)) = (seg[0], seg[1]);
                let bbox = (ax.min(bx) - half, ay.min(by) - half, ax.max(bx) + half, ay.max(by) + half);
                paint_where(&mut out, color, bbox, |i, j| {
                    crate::geometry::point_segment_distance([i, j], [ax, ay], [bx, by]) <= half
                });
            }
        }
    }
    out
}

fn paint_where(img: &mut Image, color: [u8; 3], bbox: (f64, f64, f64, f64), inside: impl Fn(f64, f64) -> bool) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let i0 = bbox.0.floor().max(0.0) as u32;
    let j0 = bbox.1.floor().max(0.0) as u32;
    let i1 = bbox.2.ceil().min(w - 1.0).max(0.0) as u32;
    let j1 = bbox.3.ceil().min(h - 1.0).max(0.0) as u32;
    for j in j0..=j1 {
        for i in i0..=i1 {
            if inside(i as f64, j as f64) {
                img.put(i, j, color);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bounds, Footprint, ObjectInstance, WorldPose};

    #[test]
    fn appendix_point_pixel() {
        let p = NormPoint::new(0.30, 0.82).unwrap();
        assert_eq!(point_to_pixel(&p, 512, 512), (153, 419));
        assert_eq!(point_to_pixel(&NormPoint::new(1.0, 1.0).unwrap(), 512, 512), (511, 511));
    }

    #[test]
    fn empty_table_is_uniform() {
        let s = Scene::new("t", SceneKind::Tabletop, Bounds::square(1.0));
        let img = render(&s, Viewport::Full, &RenderConfig::default());
        let first = img.get(0, 0);
        assert!((0..512).all(|j| (0..512).all(|i| img.get(i, j) == first)));
    }

    #[test]
    fn plate_disc_centered() {
        let mut s = Scene::new("t", SceneKind::Tabletop, Bounds::square(1.0));
        s.objects.push(ObjectInstance::new("plate_1", "plate", Footprint::circle(0.1), WorldPose::at(0.5, 0.5)));
        let img = render(&s, Viewport::Full, &RenderConfig::default());
        let table = Palette::builtin().table;
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for j in 0..512 {
            for i in 0..512 {
                if img.get(i, j) != table {
                    sx += i as f64 + 0.5;
                    sy += j as f64 + 0.5;
                    n += 1.0;
                }
            }
        }
        assert!((sx / n - 256.0).abs() < 0.5 && (sy / n - 256.0).abs() < 0.5);
        // area of a 51.2 px radius disc
        assert!((n - std::f64::consts::PI * 51.2 * 51.2).abs() / n < 0.02);
    }

    #[test]
    fn zero_width_is_noop() {
        let img = Image::new(64, 64, [1, 2, 3]);
        let spec = AnnotationSpec::point(NormPoint::new(0.5, 0.5).unwrap(), Style { color: [9, 9, 9], width: 0 });
        assert_eq!(annotate(&img, &spec), img);
    }

    #[test]
    fn short_trajectory_rejected() {
        let p = NormPoint::new(0.5, 0.5).unwrap();
        assert_eq!(
            AnnotationSpec::trajectory(vec![p], Style::default()),
            Err(RenderError::ShortTrajectory(1))
        );
    }
}
