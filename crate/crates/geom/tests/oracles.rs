//! Oracle checks for the geometry kernel: the analytic raycast against a
//! marching oracle, and intersection counts against an all-pairs brute
//! force written with an independent parametric predicate.

use geom::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const MARCH_STEP: f64 = 1e-4;

/// Marches along the ray detecting the first boundary crossing by sign
/// change, independent of the quadratic / linear solves in `raycast`.
fn marching_raycast(origin: Vec2, angle: f64, max_range: f64, obstacles: &[Obstacle]) -> f64 {
    let dir = Vec2::from_angle(angle);
    let mut best = max_range;
    for ob in obstacles {
        match &ob.shape {
            ObstacleShape::Circle { center, radius } => {
                let g = |t: f64| (origin + dir * t).dist(*center) - radius;
                if let Some(t) = first_root(g, max_range) {
                    best = best.min(t);
                }
            }
            ObstacleShape::Polygon { vertices } => {
                let n = vertices.len();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = b - a;
                    let len_sq = e.norm_sq();
                    // Signed side of the supporting line, restricted to the
                    // edge's parameter range at the crossing.
                    let f = |t: f64| e.cross(origin + dir * t - a);
                    let mut prev_t = 0.0;
                    let mut prev_f = f(0.0);
                    let mut t = MARCH_STEP;
                    while t <= max_range + MARCH_STEP {
                        let cur_f = f(t);
                        if (prev_f <= 0.0) != (cur_f <= 0.0) {
                            let frac = prev_f / (prev_f - cur_f);
                            let t_hit = prev_t + frac * (t - prev_t);
                            let s = (origin + dir * t_hit - a).dot(e) / len_sq;
                            if (0.0..=1.0).contains(&s) && t_hit < best {
                                best = best.min(t_hit);
                            }
                        }
                        prev_t = t;
                        prev_f = cur_f;
                        t += MARCH_STEP;
                    }
                }
            }
        }
    }
    best
}

fn first_root(g: impl Fn(f64) -> f64, max_range: f64) -> Option<f64> {
    let mut prev_t = 0.0;
    let mut prev_g = g(0.0);
    let mut t = MARCH_STEP;
    while t <= max_range + MARCH_STEP {
        let cur = g(t);
        if (prev_g > 0.0) && (cur <= 0.0) {
            let frac = prev_g / (prev_g - cur);
            return Some(prev_t + frac * (t - prev_t));
        }
        prev_t = t;
        prev_g = cur;
        t += MARCH_STEP;
    }
    None
}

fn random_scene(rng: &mut ChaCha8Rng) -> (Vec2, Vec<Obstacle>) {
    let origin = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let n = rng.random_range(2..=6);
    let mut obstacles = Vec::new();
    while obstacles.len() < n {
        let center = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let ob = if rng.random_bool(0.5) {
            Obstacle::circle(center, rng.random_range(0.1..0.6), ObstacleLayer::UnknownStatic)
        } else {
            let w = rng.random_range(0.2..1.0);
            let h = rng.random_range(0.2..1.0);
            let rot = rng.random_range(0.0..std::f64::consts::TAU);
            let verts = [(-w, -h), (w, -h), (w, h), (-w, h)]
                .iter()
                .map(|&(x, y)| {
                    let r = Vec2::new(
                        x * rot.cos() - y * rot.sin(),
                        x * rot.sin() + y * rot.cos(),
                    );
                    center + r
                })
                .collect();
            Obstacle::polygon(verts, ObstacleLayer::UnknownStatic)
        };
        let ob = match ob {
            Ok(o) => o,
            Err(_) => continue,
        };
        // Keep the origin strictly outside, per the raycast precondition.
        if distance_to_obstacle(origin, &ob) > 0.05 {
            obstacles.push(ob);
        }
    }
    (origin, obstacles)
}

#[test]
fn raycast_matches_marching_oracle_on_1000_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..1000 {
        let (origin, obstacles) = random_scene(&mut rng);
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let analytic = raycast(origin, angle, 3.0, &obstacles);
        let marched = marching_raycast(origin, angle, 3.0, &obstacles);
        assert!(
            (analytic - marched).abs() <= 2e-4,
            "analytic {analytic} vs marched {marched} at origin {origin:?} angle {angle}"
        );
    }
}

/// Independent parametric segment intersection: solve the 2x2 system and
/// test the parameters, with explicit collinear-overlap handling.
fn parametric_intersect(s1: &Segment, s2: &Segment) -> bool {
    if s1.is_degenerate() || s2.is_degenerate() {
        return false;
    }
    let r = s1.b - s1.a;
    let s = s2.b - s2.a;
    let denom = r.cross(s);
    let qp = s2.a - s1.a;
    if denom == 0.0 {
        if qp.cross(r) != 0.0 {
            return false;
        }
        let rr = r.norm_sq();
        let t0 = qp.dot(r) / rr;
        let t1 = (s2.b - s1.a).dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return lo <= 1.0 && hi >= 0.0;
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

fn brute_force_count(path: &[Segment], obstacles: &[Obstacle]) -> usize {
    let mut count = 0;
    for seg in path {
        for ob in obstacles {
            match &ob.shape {
                ObstacleShape::Circle { center, radius } => {
                    // Roots of |a + t d - c|^2 = r^2 in [0, 1].
                    if seg.is_degenerate() {
                        continue;
                    }
                    let d = seg.b - seg.a;
                    let f = seg.a - *center;
                    let (a, b, c) = (d.norm_sq(), 2.0 * f.dot(d), f.norm_sq() - radius * radius);
                    let disc = b * b - 4.0 * a * c;
                    if disc > 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                            if (0.0..=1.0).contains(&t) {
                                count += 1;
                            }
                        }
                    } else if disc == 0.0 && (0.0..=1.0).contains(&(-b / (2.0 * a))) {
                        count += 1;
                    }
                }
                ObstacleShape::Polygon { vertices } => {
                    for edge in polygon_edges(vertices) {
                        if parametric_intersect(seg, &edge) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

#[test]
fn intersection_counts_match_brute_force_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..500 {
        let (_, obstacles) = random_scene(&mut rng);
        let m = rng.random_range(1..=6);
        let mut pts = Vec::with_capacity(m + 1);
        for _ in 0..=m {
            pts.push(Vec2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)));
        }
        let path: Vec<Segment> = pts.windows(2).map(|w| Segment::new(w[0], w[1])).collect();
        assert_eq!(
            count_path_obstacle_intersections(&path, &obstacles),
            brute_force_count(&path, &obstacles)
        );
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn vec2_strategy() -> impl Strategy<Value = Vec2> {
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #[test]
        fn raycast_bounded_and_monotone_in_range(
            ox in -1.0f64..1.0, oy in -1.0f64..1.0,
            angle in -3.14f64..3.14,
            cx in -3.0f64..3.0, cy in -3.0f64..3.0,
            radius in 0.1f64..0.5,
            r1 in 0.5f64..2.0, extra in 0.1f64..2.0,
        ) {
            let origin = Vec2::new(ox, oy);
            let ob = Obstacle::circle(Vec2::new(cx, cy), radius, ObstacleLayer::UnknownStatic).unwrap();
            prop_assume!(distance_to_obstacle(origin, &ob) > 0.0);
            let obs = [ob];
            let d1 = raycast(origin, angle, r1, &obs);
            let d2 = raycast(origin, angle, r1 + extra, &obs);
            prop_assert!((0.0..=r1).contains(&d1));
            prop_assert!(d2 >= d1);
        }

        #[test]
        fn segment_intersection_is_symmetric(
            a in vec2_strategy(), b in vec2_strategy(),
            c in vec2_strategy(), d in vec2_strategy(),
        ) {
            let s1 = Segment::new(a, b);
            let s2 = Segment::new(c, d);
            prop_assert_eq!(segments_intersect(&s1, &s2), segments_intersect(&s2, &s1));
        }
    }
}
