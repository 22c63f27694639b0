use crate::model::{Bounds, Footprint, WorldPose};

use super::GeometryError;

/// Shapes closer than this count as touching.
pub const TOUCH_TOLERANCE: f64 = 1e-3;
/// Gaps within this of `TOUCH_TOLERANCE` read as exactly the tolerance.
const TOLERANCE_SLACK: f64 = 1e-9;

/// A footprint placed in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldShape {
    Circle { center: [f64; 2], radius: f64 },
    /// Convex, any winding.
    Polygon(Vec<[f64; 2]>),
}

impl WorldShape {
    /// `[min_x, min_y, max_x, max_y]`.
    pub fn bbox(&self) -> [f64; 4] {
        match self {
            WorldShape::Circle { center, radius } => {
                [center[0] - radius, center[1] - radius, center[0] + radius, center[1] + radius]
            }
            WorldShape::Polygon(v) => v.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
            ),
        }
    }

    pub fn centroid(&self) -> [f64; 2] {
        match self {
            WorldShape::Circle { center, .. } => *center,
            WorldShape::Polygon(v) => {
                let n = v.len() as f64;
                let s = v.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
                [s[0] / n, s[1] / n]
            }
        }
    }

    /// Distance from `p` to the closed shape; zero inside.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        match self {
            WorldShape::Circle { center, radius } => ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).max(0.0),
            WorldShape::Polygon(v) => {
                if point_in_convex(p, v) {
                    0.0
                } else {
                    edges(v).map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance_to(p) <= tol
    }

    /// The region covered while translating this shape by `delta`.
    pub fn swept(&self, delta: [f64; 2]) -> WorldShape {
        let base: Vec<[f64; 2]> = match self {
            WorldShape::Polygon(v) => v.clone(),
            WorldShape::Circle { center, radius } => {
                // circumscribed 32-gon
                let n = 32;
                let r = radius / (std::f64::consts::PI / n as f64).cos();
                (0..n)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / n as f64;
                        [center[0] + r * t.cos(), center[1] + r * t.sin()]
                    })
                    .collect()
            }
        };
        let mut pts = base.clone();
        pts.extend(base.iter().map(|p| [p[0] + delta[0], p[1] + delta[1]]));
        WorldShape::Polygon(convex_hull(&pts))
    }
}

fn edges(v: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Signed shoelace area.
pub fn polygon_area(v: &[[f64; 2]]) -> f64 {
    edges(v).map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum::<f64>() / 2.0
}

pub fn validate_footprint(f: &Footprint) -> Result<(), GeometryError> {
    match f {
        Footprint::Circle { radius } => {
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(GeometryError::DegenerateShape(format!("circle radius {radius}")));
            }
        }
        Footprint::Polygon { vertices } => {
            if vertices.len() < 3 || vertices.iter().flatten().any(|c| !c.is_finite()) {
                return Err(GeometryError::DegenerateShape(format!("{} polygon vertices", vertices.len())));
            }
            if polygon_area(vertices).abs() <= 1e-12 {
                return Err(GeometryError::DegenerateShape("zero-area polygon".into()));
            }
            let n = vertices.len();
            let signs: Vec<f64> = (0..n)
                .map(|i| cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]))
                .filter(|c| c.abs() > 1e-15)
                .collect();
            if !(signs.iter().all(|c| *c > 0.0) || signs.iter().all(|c| *c < 0.0)) {
                return Err(GeometryError::NonConvex);
            }
        }
    }
    Ok(())
}

fn point_in_convex(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let mut pos = false;
    let mut neg = false;
    for (a, b) in edges(v) {
        let c = cross(a, b, p);
        if c > 0.0 {
            pos = true;
        } else if c < 0.0 {
            neg = true;
        }
        if pos && neg {
            return false;
        }
    }
    true
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn project(v: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p[0] * axis[0] + p[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}

/// Separating-axis test over both polygons' edge normals; touching counts
/// as intersecting.
fn polygons_intersect(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    for poly in [a, b] {
        for (p, q) in edges(poly) {
            let axis = [q[1] - p[1], p[0] - q[0]];
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

/// Gap between two closed shapes; zero when they intersect or touch.
pub fn separation(a: &WorldShape, b: &WorldShape) -> f64 {
    use WorldShape::*;
    match (a, b) {
        (Circle { center: c1, radius: r1 }, Circle { center: c2, radius: r2 }) => {
            ((c1[0] - c2[0]).hypot(c1[1] - c2[1]) - r1 - r2).max(0.0)
        }
        (Circle { center, radius }, Polygon(v)) | (Polygon(v), Circle { center, radius }) => {
            (Polygon(v.clone()).distance_to(*center) - radius).max(0.0)
        }
        (Polygon(p), Polygon(q)) => {
            if polygons_intersect(p, q) {
                return 0.0;
            }
            // disjoint convex polygons: the closest pair always involves a vertex
            let one = |u: &[[f64; 2]], w: &[[f64; 2]]| {
                u.iter()
                    .flat_map(|x| edges(w).map(move |(s, t)| point_segment_distance(*x, s, t)))
                    .fold(f64::INFINITY, f64::min)
            };
            one(p, q).min(one(q, p))
        }
    }
}

/// Collision predicate: positive-area overlap, or a gap below 1 mm.
pub fn shapes_overlap(a: &WorldShape, b: &WorldShape) -> bool {
    separation(a, b) < TOUCH_TOLERANCE - TOLERANCE_SLACK
}

pub fn footprints_overlap(
    a: (&Footprint, &WorldPose),
    b: (&Footprint, &WorldPose),
) -> Result<bool, GeometryError> {
    validate_footprint(a.0)?;
    validate_footprint(b.0)?;
    Ok(shapes_overlap(&a.0.at(a.1), &b.0.at(b.1)))
}

pub fn shape_within_bounds(shape: &WorldShape, bounds: &Bounds, tol: f64) -> bool {
    let [x0, y0, x1, y1] = shape.bbox();
    x0 >= bounds.min_x - tol && y0 >= bounds.min_y - tol && x1 <= bounds.max_x() + tol && y1 <= bounds.max_y() + tol
}

/// Andrew's monotone chain; counter-clockwise in a y-up frame, no collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], *p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], *p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64) -> (Footprint, WorldPose) {
        (Footprint::rect(1.0, 1.0), WorldPose::at(x, y))
    }

    #[test]
    fn close_circles_overlap() {
        let f = Footprint::circle(0.05);
        let (a, b) = (WorldPose::at(0.0, 0.0), WorldPose::at(0.08, 0.0));
        assert!(footprints_overlap((&f, &a), (&f, &b)).unwrap());
    }

    #[test]
    fn squares_beyond_tolerance_do_not_overlap() {
        let (fa, pa) = sq(0.0, 0.0);
        let (fb, pb) = sq(1.001, 0.0);
        assert!(!footprints_overlap((&fa, &pa), (&fb, &pb)).unwrap());
        let (fc, pc) = sq(1.0005, 0.0);
        assert!(footprints_overlap((&fa, &pa), (&fc, &pc)).unwrap());
        let (fd, pd) = sq(1.001, 1.001);
        assert!(!footprints_overlap((&fa, &pa), (&fd, &pd)).unwrap());
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let line = Footprint::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]] };
        let p = WorldPose::at(0.0, 0.0);
        assert!(matches!(
            footprints_overlap((&line, &p), (&line, &p)),
            Err(GeometryError::DegenerateShape(_))
        ));
        let zero = Footprint::circle(0.0);
        assert!(footprints_overlap((&zero, &p), (&zero, &p)).is_err());
        let dart = Footprint::Polygon { vertices: vec![[0.0, 0.0], [2.0, 1.0], [0.0, 0.3], [-2.0, 1.0]] };
        assert_eq!(validate_footprint(&dart), Err(GeometryError::NonConvex));
    }

    #[test]
    fn separation_of_rotated_square_and_circle() {
        let diamond = Footprint::rect(1.0, 1.0).at(&WorldPose::new(0.0, 0.0, std::f64::consts::FRAC_PI_4));
        let circle = WorldShape::Circle { center: [1.0, 0.0], radius: 0.2 };
        let expected = 1.0 - std::f64::consts::FRAC_1_SQRT_2 - 0.2;
        assert!((separation(&diamond, &circle) - expected).abs() < 1e-12);
    }

    #[test]
    fn sweep_covers_path() {
        let c = WorldShape::Circle { center: [0.0, 0.0], radius: 0.1 };
        let s = c.swept([1.0, 0.0]);
        assert!(s.contains([0.5, 0.09], 0.0));
        assert!(!s.contains([0.5, 0.2], 0.0));
    }

    proptest::proptest! {
        #[test]
        fn overlap_symmetric_reflexive_monotone(
            ax in -0.2f64..0.2, ay in -0.2f64..0.2, bx in -0.2f64..0.2, by in -0.2f64..0.2,
            ra in 0.01f64..0.1, w in 0.02f64..0.2, h in 0.02f64..0.2, t in 0.0f64..6.3,
            shrink in 0.1f64..1.0,
        ) {
            let c = Footprint::circle(ra);
            let r = Footprint::rect(w, h);
            let pa = WorldPose::at(ax, ay);
            let pb = WorldPose::new(bx, by, t);
            let ab = footprints_overlap((&c, &pa), (&r, &pb)).unwrap();
            let ba = footprints_overlap((&r, &pb), (&c, &pa)).unwrap();
            proptest::prop_assert_eq!(ab, ba);
            proptest::prop_assert!(footprints_overlap((&r, &pb), (&r, &pb)).unwrap());
            proptest::prop_assert!(footprints_overlap((&c, &pa), (&c, &pa)).unwrap());
            let small_c = Footprint::circle(ra * shrink);
            let small_r = Footprint::rect(w * shrink, h * shrink);
            if !ab {
                proptest::prop_assert!(!footprints_overlap((&small_c, &pa), (&r, &pb)).unwrap());
                proptest::prop_assert!(!footprints_overlap((&c, &pa), (&small_r, &pb)).unwrap());
            }
        }
    }
}
