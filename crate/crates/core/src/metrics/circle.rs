use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;

const SHUFFLE_SEED: u64 = 0x5EED_C12C;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: Vec2) -> bool {
        self.center.distance(p) <= self.radius * (1.0 + REL_TOL) + 1e-12
    }

    fn diameter(a: Vec2, b: Vec2) -> Self {
        let center = Vec2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        Self {
            center,
            radius: center.distance(a).max(center.distance(b)),
        }
    }

    /// Circumcircle, or `None` for collinear points.
    pub fn circumscribe(a: Vec2, b: Vec2, c: Vec2) -> Option<Self> {
        // translate to a's frame for conditioning
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = 2.0 * (bx * cy - by * cx);
        if d == 0.0 {
            return None;
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Vec2::new(a.x + ux, a.y + uy);
        let radius = center.distance(a).max(center.distance(b)).max(center.distance(c));
        Some(Self { center, radius })
    }
}

/// Smallest enclosing circle (Welzl's incremental algorithm, expected linear
/// time). The insertion order comes from a fixed-seed shuffle, so the result
/// is deterministic.
pub fn min_enclosing_circle(points: &[Vec2]) -> Option<Circle> {
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(SHUFFLE_SEED));
    let first = *pts.first()?;
    let mut c = Circle {
        center: first,
        radius: 0.0,
    };
    for i in 1..pts.len() {
        if !c.contains(pts[i]) {
            c = with_one_boundary(&pts[..i], pts[i]);
        }
    }
    Some(c)
}

fn with_one_boundary(pts: &[Vec2], p: Vec2) -> Circle {
    let mut c = Circle { center: p, radius: 0.0 };
    for j in 0..pts.len() {
        if !c.contains(pts[j]) {
            c = with_two_boundary(&pts[..j], p, pts[j]);
        }
    }
    c
}

fn with_two_boundary(pts: &[Vec2], p: Vec2, q: Vec2) -> Circle {
    let mut c = Circle::diameter(p, q);
    for k in 0..pts.len() {
        if !c.contains(pts[k]) {
            c = Circle::circumscribe(p, q, pts[k]).unwrap_or_else(|| {
                // collinear: the farthest pair spans the circle
                let cands = [
                    Circle::diameter(p, q),
                    Circle::diameter(p, pts[k]),
                    Circle::diameter(q, pts[k]),
                ];
                cands
                    .into_iter()
                    .fold(cands[0], |a, b| if b.radius > a.radius { b } else { a })
            });
        }
    }
    c
}
