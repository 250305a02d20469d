//! Geometric predicates on closed polygons given as vertex loops.

use super::Point2;

pub fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

/// Area centroid. The polygon must have non-zero signed area.
pub fn centroid(pts: &[Point2]) -> Point2 {
    let n = pts.len();
    // shift to the first vertex to limit cancellation
    let o = pts[0];
    let (mut cx, mut cy, mut twice) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (ax, ay) = (pts[i].x - o.x, pts[i].y - o.y);
        let (bx, by) = (pts[(i + 1) % n].x - o.x, pts[(i + 1) % n].y - o.y);
        let cross = ax * by - bx * ay;
        twice += cross;
        cx += (ax + bx) * cross;
        cy += (ay + by) * cross;
    }
    Point2::new(o.x + cx / (3.0 * twice), o.y + cy / (3.0 * twice))
}

/// Largest distance between two vertices.
pub fn diameter(pts: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(pts[j]));
        }
    }
    d
}

pub fn perimeter(pts: &[Point2]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| pts[i].dist(pts[(i + 1) % n])).sum()
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when no two non-adjacent edges meet and adjacent edges only share
/// their common vertex. Collinear consecutive edges are allowed.
pub fn is_simple(pts: &[Point2]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // folding back onto the previous edge
                let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, a, b) };
                if orient(p, q, r) == 0.0 {
                    let dot = (q.x - p.x) * (r.x - q.x) + (q.y - p.y) * (r.y - q.y);
                    if dot < 0.0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Keeps the part of a convex polygon on the left of the directed line `a -> b`.
pub fn clip_left_of(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    let side = |p: Point2| orient(a, b, p);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            let t = sp / (sp - sq);
            out.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn square_measures() {
        let s = square();
        assert_eq!(signed_area(&s), 1.0);
        let c = centroid(&s);
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
        assert_eq!(diameter(&s), 2f64.sqrt());
        assert!(is_simple(&s));
    }

    #[test]
    fn collinear_vertex_is_simple() {
        let mut s = square();
        s.insert(1, Point2::new(0.5, 0.0));
        assert!(is_simple(&s));
        assert_eq!(signed_area(&s), 1.0);
    }

    #[test]
    fn spike_back_along_edge_is_not_simple() {
        let s = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(!is_simple(&s));
    }

    #[test]
    fn clip_square_in_half() {
        let half = clip_left_of(&square(), Point2::new(0.5, 1.0), Point2::new(0.5, 0.0));
        assert!((signed_area(&half) - 0.5).abs() < 1e-15);
    }
}
