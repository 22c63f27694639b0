use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use super::point::NormPoint;
use super::ModelError;
use crate::geometry::{self, WorldShape};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Axis-aligned rectangle in meters. `min_y` is the top edge in image space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn new(min_x: f64, min_y: f64, width: f64, height: f64) -> Self {
        Self { min_x, min_y, width, height }
    }

    pub fn square(side: f64) -> Self {
        Self::new(0.0, 0.0, side, side)
    }

    pub fn max_x(&self) -> f64 {
        self.min_x + self.width
    }

    pub fn max_y(&self) -> f64 {
        self.min_y + self.height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let eps = 1e-9;
        x >= self.min_x - eps && x <= self.max_x() + eps && y >= self.min_y - eps && y <= self.max_y() + eps
    }

    pub fn center(&self) -> [f64; 2] {
        [self.min_x + self.width / 2.0, self.min_y + self.height / 2.0]
    }
}

/// Metric position plus heading. Heading is measured from +x towards +y,
/// which is clockwise on screen because image y points down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl WorldPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_heading(heading) }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Self::new(x, y, 0.0)
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn with_position(&self, x: f64, y: f64) -> Self {
        Self { x, y, heading: self.heading }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(TAU);
    if r >= TAU { 0.0 } else { r }
}

/// Object outline in its local frame, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Footprint {
    Circle { radius: f64 },
    /// Convex polygon, vertices relative to the pose position.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Footprint {
    pub fn rect(w: f64, h: f64) -> Self {
        let (a, b) = (w / 2.0, h / 2.0);
        Footprint::Polygon { vertices: vec![[-a, -b], [a, -b], [a, b], [-a, b]] }
    }

    pub fn circle(radius: f64) -> Self {
        Footprint::Circle { radius }
    }

    /// World-frame outline at `pose`.
    pub fn at(&self, pose: &WorldPose) -> WorldShape {
        match self {
            Footprint::Circle { radius } => WorldShape::Circle { center: [pose.x, pose.y], radius: *radius },
            Footprint::Polygon { vertices } => {
                let (s, c) = pose.heading.sin_cos();
                WorldShape::Polygon(
                    vertices
                        .iter()
                        .map(|[vx, vy]| [pose.x + c * vx - s * vy, pose.y + s * vx + c * vy])
                        .collect(),
                )
            }
        }
    }

    /// Radius of the smallest origin-centred circle enclosing the outline.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Footprint::Circle { radius } => *radius,
            Footprint::Polygon { vertices } => vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Footprint::Circle { radius } => std::f64::consts::PI * radius * radius,
            Footprint::Polygon { vertices } => geometry::polygon_area(vertices).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub category: String,
    pub footprint: Footprint,
    pub pose: WorldPose,
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stacked_on: Option<ObjectId>,
}

impl ObjectInstance {
    pub fn new(id: impl Into<String>, category: impl Into<String>, footprint: Footprint, pose: WorldPose) -> Self {
        Self {
            id: ObjectId::new(id),
            category: category.into(),
            footprint,
            pose,
            movable: true,
            stacked_on: None,
        }
    }

    pub fn fixed(mut self) -> Self {
        self.movable = false;
        self
    }

    pub fn on(mut self, supporter: impl Into<String>) -> Self {
        self.stacked_on = Some(ObjectId::new(supporter));
        self
    }

    pub fn shape(&self) -> WorldShape {
        self.footprint.at(&self.pose)
    }

    /// Human-readable category name ("alarm_clock" reads "alarm clock").
    pub fn display_name(&self) -> String {
        display_category(&self.category)
    }
}

pub fn display_category(category: &str) -> String {
    category.replace('_', " ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Tabletop,
    Floorplan,
}

/// Fixed top-down orthographic camera: bounds map linearly onto the unit
/// square, `min` corner to image `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    bounds: Bounds,
}

impl Camera {
    pub fn new(bounds: Bounds) -> Self {
        Self { bounds }
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn to_norm(&self, w: &WorldPose) -> Result<NormPoint, ModelError> {
        self.to_norm_xy(w.x, w.y)
    }

    pub fn to_norm_xy(&self, x: f64, y: f64) -> Result<NormPoint, ModelError> {
        if !self.bounds.contains(x, y) {
            return Err(ModelError::OutOfBounds { x, y });
        }
        Ok(NormPoint::clamped(
            (x - self.bounds.min_x) / self.bounds.width,
            (y - self.bounds.min_y) / self.bounds.height,
        ))
    }

    pub fn to_world(&self, p: &NormPoint) -> WorldPose {
        let [x, y] = self.to_world_xy(p);
        WorldPose::at(x, y)
    }

    pub fn to_world_xy(&self, p: &NormPoint) -> [f64; 2] {
        [
            self.bounds.min_x + p.x() * self.bounds.width,
            self.bounds.min_y + p.y() * self.bounds.height,
        ]
    }

    /// Meters per unit of normalized x/y.
    pub fn scale(&self) -> [f64; 2] {
        [self.bounds.width, self.bounds.height]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub id: String,
    pub kind: SceneKind,
    pub bounds: Bounds,
    pub objects: Vec<ObjectInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<OccupancyGrid>,
}

fn schema_version() -> u32 {
    SCENE_SCHEMA_VERSION
}

impl Scene {
    pub fn new(id: impl Into<String>, kind: SceneKind, bounds: Bounds) -> Self {
        Self {
            schema_version: SCENE_SCHEMA_VERSION,
            id: id.into(),
            kind,
            bounds,
            objects: Vec::new(),
            occupancy: None,
        }
    }

    pub fn camera(&self) -> Camera {
        Camera::new(self.bounds)
    }

    pub fn object(&self, id: &ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| &o.id == id)
    }

    pub fn object_mut(&mut self, id: &ObjectId) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| &o.id == id)
    }

    pub fn position_of(&self, id: &ObjectId) -> Option<usize> {
        self.objects.iter().position(|o| &o.id == id)
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.category == category)
    }

    pub fn category_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for o in &self.objects {
            *m.entry(o.category.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn is_category_unique(&self, category: &str) -> bool {
        self.instances_of(category).count() == 1
    }

    /// Objects resting directly on `id`.
    pub fn occupants_of<'a>(&'a self, id: &'a ObjectId) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.stacked_on.as_ref() == Some(id))
    }

    /// Number of supporters below an object (0 = on the ground or table).
    pub fn stack_depth(&self, id: &ObjectId) -> usize {
        let mut depth = 0;
        let mut cur = self.object(id).and_then(|o| o.stacked_on.clone());
        while let Some(s) = cur {
            depth += 1;
            if depth > self.objects.len() {
                break;
            }
            cur = self.object(&s).and_then(|o| o.stacked_on.clone());
        }
        depth
    }

    /// `true` when the two objects touch through a stacking relation.
    pub fn stacked_pair(&self, a: &ObjectInstance, b: &ObjectInstance) -> bool {
        a.stacked_on.as_ref() == Some(&b.id) || b.stacked_on.as_ref() == Some(&a.id)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(&o.id) {
                return Err(ModelError::Invalid(format!("duplicate object id {}", o.id)));
            }
        }
        for o in &self.objects {
            geometry::validate_footprint(&o.footprint)
                .map_err(|e| ModelError::Invalid(format!("object {}: {e}", o.id)))?;
            if let Some(s) = &o.stacked_on {
                if !ids.contains(s) || s == &o.id {
                    return Err(ModelError::Invalid(format!("object {} stacked on unknown {s}", o.id)));
                }
            }
            if !geometry::shape_within_bounds(&o.shape(), &self.bounds, 1e-9) {
                return Err(ModelError::Invalid(format!("object {} leaves the scene bounds", o.id)));
            }
        }
        if let Some(grid) = &self.occupancy {
            let gb = grid.bounds();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-6;
            if !(close(gb.min_x, self.bounds.min_x)
                && close(gb.min_y, self.bounds.min_y)
                && close(gb.width, self.bounds.width)
                && close(gb.height, self.bounds.height))
            {
                return Err(ModelError::Invalid("occupancy grid does not cover the bounds exactly".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let scene: Scene = serde_json::from_str(s).map_err(|e| ModelError::Invalid(e.to_string()))?;
        if scene.schema_version != SCENE_SCHEMA_VERSION {
            return Err(ModelError::Invalid(format!("unsupported scene schema {}", scene.schema_version)));
        }
        scene.validate()?;
        Ok(scene)
    }
}
