//! Deterministic 2D geometry kernel shared by the simulator and the global
//! planner: rays, segments, circles, convex polygons, and the batched
//! intersection counts the path-fitness function is built on.
//!
//! All geometry is carried in `f64`. Callers may downcast results for
//! network input, never the other way around.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ShapeError {
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("coordinates must be finite")]
    NonFinite,
}

/// 2D point / vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product (perp product).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            Vec2::ZERO
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r -= std::f64::consts::TAU;
    }
    r
}

/// Closed line segment. Zero-length segments are permitted for paths and
/// intersect nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Obstacle layer tag: known/unknown x static/dynamic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObstacleLayer {
    /// OL1: known static (mapped structures).
    #[serde(rename = "OL1")]
    KnownStatic,
    /// OL2: known dynamic (communicating robots).
    #[serde(rename = "OL2")]
    KnownDynamic,
    /// OL3: unknown static.
    #[serde(rename = "OL3")]
    UnknownStatic,
    /// OL4: unknown dynamic.
    #[serde(rename = "OL4")]
    UnknownDynamic,
}

impl ObstacleLayer {
    /// Layers visible to the global planner.
    pub fn is_known(self) -> bool {
        matches!(self, ObstacleLayer::KnownStatic | ObstacleLayer::KnownDynamic)
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, ObstacleLayer::KnownDynamic | ObstacleLayer::UnknownDynamic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObstacleShape {
    Circle { center: Vec2, radius: f64 },
    /// Simple polygon, vertices in order (either winding).
    Polygon { vertices: Vec<Vec2> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: ObstacleShape,
    pub layer: ObstacleLayer,
    /// Zero for static obstacles.
    pub velocity: Vec2,
}

impl Obstacle {
    pub fn circle(center: Vec2, radius: f64, layer: ObstacleLayer) -> Result<Self, ShapeError> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(ShapeError::NonFinite);
        }
        if radius <= 0.0 {
            return Err(ShapeError::BadRadius(radius));
        }
        Ok(Obstacle {
            shape: ObstacleShape::Circle { center, radius },
            layer,
            velocity: Vec2::ZERO,
        })
    }

    pub fn polygon(vertices: Vec<Vec2>, layer: ObstacleLayer) -> Result<Self, ShapeError> {
        if vertices.len() < 3 {
            return Err(ShapeError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(ShapeError::NonFinite);
        }
        let edges = polygon_edges(&vertices);
        // Non-adjacent edge pairs must not cross.
        let n = edges.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_intersect(&edges[i], &edges[j]) {
                    return Err(ShapeError::SelfIntersecting);
                }
            }
        }
        Ok(Obstacle {
            shape: ObstacleShape::Polygon { vertices },
            layer,
            velocity: Vec2::ZERO,
        })
    }

    pub fn with_velocity(mut self, v: Vec2) -> Self {
        self.velocity = v;
        self
    }

    pub fn center(&self) -> Vec2 {
        match &self.shape {
            ObstacleShape::Circle { center, .. } => *center,
            ObstacleShape::Polygon { vertices } => {
                let mut c = Vec2::ZERO;
                for v in vertices {
                    c = c + *v;
                }
                c / vertices.len() as f64
            }
        }
    }

    /// Translate the obstacle by `delta`.
    pub fn translated(&self, delta: Vec2) -> Obstacle {
        let shape = match &self.shape {
            ObstacleShape::Circle { center, radius } => ObstacleShape::Circle {
                center: *center + delta,
                radius: *radius,
            },
            ObstacleShape::Polygon { vertices } => ObstacleShape::Polygon {
                vertices: vertices.iter().map(|v| *v + delta).collect(),
            },
        };
        Obstacle {
            shape,
            layer: self.layer,
            velocity: self.velocity,
        }
    }
}

pub fn polygon_edges(vertices: &[Vec2]) -> Vec<Segment> {
    let n = vertices.len();
    (0..n)
        .map(|i| Segment::new(vertices[i], vertices[(i + 1) % n]))
        .collect()
}

/// Distance along the ray to the circle boundary, smallest t >= 0.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    // |origin + t*dir - center|^2 = radius^2, dir is unit length.
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_sq() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Distance along the ray to the segment, smallest t >= 0.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom == 0.0 {
        // Parallel. Collinear rays hit the nearest endpoint ahead.
        if e.cross(origin - a) != 0.0 {
            return None;
        }
        let ta = (a - origin).dot(dir);
        let tb = (b - origin).dot(dir);
        let t = ta.min(tb).max(0.0);
        if t <= ta.max(tb) {
            Some(t)
        } else {
            None
        }
    } else {
        let t = (a - origin).cross(e) / denom;
        let s = (a - origin).cross(dir) / denom;
        if t >= 0.0 && (0.0..=1.0).contains(&s) {
            Some(t)
        } else {
            None
        }
    }
}

/// Exact analytic raycast against an obstacle set, clamped to `max_range`.
pub fn raycast(origin: Vec2, angle: f64, max_range: f64, obstacles: &[Obstacle]) -> f64 {
    debug_assert!(max_range > 0.0);
    let dir = Vec2::from_angle(angle);
    let mut best = max_range;
    for ob in obstacles {
        let hit = match &ob.shape {
            ObstacleShape::Circle { center, radius } => ray_circle(origin, dir, *center, *radius),
            ObstacleShape::Polygon { vertices } => {
                let n = vertices.len();
                let mut h: Option<f64> = None;
                for i in 0..n {
                    if let Some(t) = ray_segment(origin, dir, vertices[i], vertices[(i + 1) % n]) {
                        h = Some(h.map_or(t, |p: f64| p.min(t)));
                    }
                }
                h
            }
        };
        if let Some(t) = hit {
            if t < best {
                best = t;
            }
        }
    }
    best.max(0.0)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    // Assumes p collinear with a-b.
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True iff the closed segments share at least one point. Collinear overlap
/// counts as intersecting. Zero-length segments intersect nothing.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    if s1.is_degenerate() || s2.is_degenerate() {
        return false;
    }
    let d1 = orient(s2.a, s2.b, s1.a);
    let d2 = orient(s2.a, s2.b, s1.b);
    let d3 = orient(s1.a, s1.b, s2.a);
    let d4 = orient(s1.a, s1.b, s2.b);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(s2.a, s2.b, s1.a))
        || (d2 == 0.0 && on_segment(s2.a, s2.b, s1.b))
        || (d3 == 0.0 && on_segment(s1.a, s1.b, s2.a))
        || (d4 == 0.0 && on_segment(s1.a, s1.b, s2.b))
}

/// Number of intersection points between a segment and a circle boundary
/// (0, 1 or 2; tangency counts once).
pub fn segment_circle_intersections(seg: &Segment, center: Vec2, radius: f64) -> usize {
    if seg.is_degenerate() {
        return 0;
    }
    let d = seg.b - seg.a;
    let f = seg.a - center;
    let a = d.norm_sq();
    let b = 2.0 * f.dot(d);
    let c = f.norm_sq() - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return 0;
    }
    if disc == 0.0 {
        let t = -b / (2.0 * a);
        return usize::from((0.0..=1.0).contains(&t));
    }
    let sq = disc.sqrt();
    let t0 = (-b - sq) / (2.0 * a);
    let t1 = (-b + sq) / (2.0 * a);
    usize::from((0.0..=1.0).contains(&t0)) + usize::from((0.0..=1.0).contains(&t1))
}

/// Total intersection count over all (path segment x obstacle boundary)
/// pairs. Polygon boundaries count per edge, circles per boundary crossing.
pub fn count_path_obstacle_intersections(path: &[Segment], obstacles: &[Obstacle]) -> usize {
    let mut count = 0;
    for seg in path {
        if seg.is_degenerate() {
            continue;
        }
        for ob in obstacles {
            match &ob.shape {
                ObstacleShape::Circle { center, radius } => {
                    count += segment_circle_intersections(seg, *center, *radius);
                }
                ObstacleShape::Polygon { vertices } => {
                    let n = vertices.len();
                    for i in 0..n {
                        let edge = Segment::new(vertices[i], vertices[(i + 1) % n]);
                        if segments_intersect(seg, &edge) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Crossing-number test; points exactly on the boundary may land on either
/// side, callers needing a closed test pair this with an edge-distance check.
pub fn point_in_polygon(p: Vec2, vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vj.x + (p.y - vj.y) / (vi.y - vj.y) * (vi.x - vj.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from a point to the obstacle; 0 when the point is
/// inside or on the boundary.
pub fn distance_to_obstacle(p: Vec2, ob: &Obstacle) -> f64 {
    match &ob.shape {
        ObstacleShape::Circle { center, radius } => (p.dist(*center) - radius).max(0.0),
        ObstacleShape::Polygon { vertices } => {
            if point_in_polygon(p, vertices) {
                return 0.0;
            }
            let n = vertices.len();
            let mut best = f64::INFINITY;
            for i in 0..n {
                let d = point_segment_distance(p, vertices[i], vertices[(i + 1) % n]);
                if d < best {
                    best = d;
                }
            }
            best
        }
    }
}

/// True iff a disc of `robot_radius` at `p` overlaps any obstacle.
/// Contact at exactly the combined radii counts as collision (closed set).
pub fn point_in_collision(p: Vec2, robot_radius: f64, obstacles: &[Obstacle]) -> bool {
    debug_assert!(robot_radius >= 0.0);
    obstacles.iter().any(|ob| distance_to_obstacle(p, ob) <= robot_radius)
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        s += vertices[i].cross(vertices[(i + 1) % n]);
    }
    s / 2.0
}

/// Grow an obstacle outward by `margin`. Circles grow exactly; convex
/// polygons use a miter offset, which slightly over-covers corners
/// (conservative for collision padding).
pub fn inflate_obstacle(ob: &Obstacle, margin: f64) -> Obstacle {
    assert!(margin >= 0.0);
    if margin == 0.0 {
        return ob.clone();
    }
    let shape = match &ob.shape {
        ObstacleShape::Circle { center, radius } => ObstacleShape::Circle {
            center: *center,
            radius: radius + margin,
        },
        ObstacleShape::Polygon { vertices } => {
            let mut verts = vertices.clone();
            if signed_area(&verts) < 0.0 {
                verts.reverse();
            }
            let n = verts.len();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let prev = verts[(i + n - 1) % n];
                let cur = verts[i];
                let next = verts[(i + 1) % n];
                // Outward normals of the two adjacent edges (CCW winding).
                let n1 = outward_normal(prev, cur);
                let n2 = outward_normal(cur, next);
                let m = (n1 + n2).normalized();
                let cos_half = m.dot(n1).max(0.25); // cap miter length at 4x margin
                out.push(cur + m * (margin / cos_half));
            }
            ObstacleShape::Polygon { vertices: out }
        }
    };
    Obstacle {
        shape,
        layer: ob.layer,
        velocity: ob.velocity,
    }
}

fn outward_normal(a: Vec2, b: Vec2) -> Vec2 {
    let e = (b - a).normalized();
    Vec2::new(e.y, -e.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Vec2::new(ax, ay), Vec2::new(bx, by))
    }

    #[test]
    fn raycast_empty_set_returns_max_range() {
        let d = raycast(Vec2::ZERO, 0.3, 3.0, &[]);
        assert_eq!(d, 3.0);
    }

    #[test]
    fn raycast_perpendicular_wall_at_one_meter() {
        // Wall is a skinny polygon whose near face crosses the ray at x = 1.
        let wall = Obstacle::polygon(
            vec![
                Vec2::new(1.0, -1.0),
                Vec2::new(1.1, -1.0),
                Vec2::new(1.1, 1.0),
                Vec2::new(1.0, 1.0),
            ],
            ObstacleLayer::UnknownStatic,
        )
        .unwrap();
        let d = raycast(Vec2::ZERO, 0.0, 3.0, &[wall]);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raycast_circle_ahead() {
        let ob = Obstacle::circle(Vec2::new(1.0, 0.0), 0.2, ObstacleLayer::UnknownStatic).unwrap();
        let d = raycast(Vec2::ZERO, 0.0, 3.0, &[ob]);
        assert!((d - 0.8).abs() < 1e-12);
    }

    #[test]
    fn raycast_clamps_and_stays_nonnegative() {
        let ob = Obstacle::circle(Vec2::new(10.0, 0.0), 0.2, ObstacleLayer::UnknownStatic).unwrap();
        assert_eq!(raycast(Vec2::ZERO, 0.0, 3.0, &[ob]), 3.0);
    }

    #[test]
    fn segments_crossing_at_midpoint() {
        assert!(segments_intersect(
            &seg(0.0, 0.0, 1.0, 0.0),
            &seg(0.5, -1.0, 0.5, 1.0)
        ));
    }

    #[test]
    fn segments_parallel_disjoint() {
        assert!(!segments_intersect(
            &seg(0.0, 0.0, 1.0, 0.0),
            &seg(0.0, 1.0, 1.0, 1.0)
        ));
    }

    #[test]
    fn segments_sharing_an_endpoint() {
        assert!(segments_intersect(
            &seg(0.0, 0.0, 1.0, 0.0),
            &seg(1.0, 0.0, 2.0, 0.0)
        ));
    }

    #[test]
    fn segments_collinear_overlap_counts() {
        assert!(segments_intersect(
            &seg(0.0, 0.0, 2.0, 0.0),
            &seg(1.0, 0.0, 3.0, 0.0)
        ));
    }

    #[test]
    fn degenerate_segment_intersects_nothing() {
        assert!(!segments_intersect(
            &seg(0.5, 0.0, 0.5, 0.0),
            &seg(0.0, 0.0, 1.0, 0.0)
        ));
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = seg(0.0, 0.0, 1.0, 1.0);
        let b = seg(0.0, 1.0, 1.0, 0.0);
        assert_eq!(segments_intersect(&a, &b), segments_intersect(&b, &a));
    }

    fn unit_square() -> Obstacle {
        Obstacle::polygon(
            vec![
                Vec2::new(1.0, -0.5),
                Vec2::new(2.0, -0.5),
                Vec2::new(2.0, 0.5),
                Vec2::new(1.0, 0.5),
            ],
            ObstacleLayer::UnknownStatic,
        )
        .unwrap()
    }

    #[test]
    fn path_clear_of_obstacles_counts_zero() {
        let path = [seg(0.0, 2.0, 5.0, 2.0)];
        assert_eq!(count_path_obstacle_intersections(&path, &[unit_square()]), 0);
    }

    #[test]
    fn segment_through_square_counts_two() {
        let path = [seg(0.0, 0.0, 3.0, 0.0)];
        assert_eq!(count_path_obstacle_intersections(&path, &[unit_square()]), 2);
    }

    #[test]
    fn segment_ending_inside_square_counts_one() {
        let path = [seg(0.0, 0.0, 1.5, 0.0)];
        assert_eq!(count_path_obstacle_intersections(&path, &[unit_square()]), 1);
    }

    #[test]
    fn segment_through_circle_counts_two() {
        let ob = Obstacle::circle(Vec2::new(1.0, 0.0), 0.3, ObstacleLayer::UnknownDynamic).unwrap();
        let path = [seg(0.0, 0.0, 2.0, 0.0)];
        assert_eq!(count_path_obstacle_intersections(&path, &[ob]), 2);
    }

    #[test]
    fn collision_far_from_obstacles_is_false() {
        let ob = Obstacle::circle(Vec2::new(5.0, 5.0), 0.2, ObstacleLayer::UnknownStatic).unwrap();
        assert!(!point_in_collision(Vec2::ZERO, 0.1, &[ob]));
    }

    #[test]
    fn collision_within_combined_radii() {
        // 0.25 < 0.2 + 0.1
        let ob = Obstacle::circle(Vec2::new(0.25, 0.0), 0.2, ObstacleLayer::UnknownStatic).unwrap();
        assert!(point_in_collision(Vec2::ZERO, 0.1, &[ob]));
    }

    #[test]
    fn contact_at_exact_combined_radii_counts() {
        let ob = Obstacle::circle(Vec2::new(0.3, 0.0), 0.2, ObstacleLayer::UnknownStatic).unwrap();
        assert!(point_in_collision(Vec2::ZERO, 0.1, &[ob]));
    }

    #[test]
    fn collision_inside_polygon() {
        assert!(point_in_collision(Vec2::new(1.5, 0.0), 0.0, &[unit_square()]));
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert_eq!(
            Obstacle::circle(Vec2::ZERO, 0.0, ObstacleLayer::UnknownStatic).unwrap_err(),
            ShapeError::BadRadius(0.0)
        );
        assert_eq!(
            Obstacle::polygon(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)], ObstacleLayer::UnknownStatic)
                .unwrap_err(),
            ShapeError::TooFewVertices(2)
        );
        let bowtie = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert_eq!(
            Obstacle::polygon(bowtie, ObstacleLayer::UnknownStatic).unwrap_err(),
            ShapeError::SelfIntersecting
        );
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.1 - 4.0 * PI) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn inflate_grows_circle_exactly() {
        let ob = Obstacle::circle(Vec2::ZERO, 0.2, ObstacleLayer::KnownStatic).unwrap();
        let inflated = inflate_obstacle(&ob, 0.1);
        match inflated.shape {
            ObstacleShape::Circle { radius, .. } => assert!((radius - 0.3).abs() < 1e-12),
            _ => panic!("circle stays a circle"),
        }
    }

    #[test]
    fn inflate_square_covers_margin() {
        let ob = unit_square();
        let inflated = inflate_obstacle(&ob, 0.1);
        // A point 0.05 m outside the original left face must now be inside.
        assert_eq!(distance_to_obstacle(Vec2::new(0.95, 0.0), &inflated), 0.0);
        // Winding of the original square is preserved regardless of input order.
        assert!(distance_to_obstacle(Vec2::new(0.5, 0.0), &inflated) > 0.3);
    }
}
