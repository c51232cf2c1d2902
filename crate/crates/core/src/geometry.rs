//! Planar convex geometry in ROC space (x = false-positive rate,
//! y = true-positive rate).

use serde::{Deserialize, Serialize};

/// Tolerance for on-line and coincident-point tests in the unit square.
pub const GEOM_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub fpr: f64,
    pub tpr: f64,
}

impl OperatingPoint {
    pub const fn new(fpr: f64, tpr: f64) -> Self {
        Self { fpr, tpr }
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.fpr - o.fpr, self.tpr - o.tpr)
    }

    fn cross(self, o: Self) -> f64 {
        self.fpr * o.tpr - self.tpr * o.fpr
    }

    fn dot(self, o: Self) -> f64 {
        self.fpr * o.fpr + self.tpr * o.tpr
    }

    pub fn distance(self, o: Self) -> f64 {
        (self.fpr - o.fpr).hypot(self.tpr - o.tpr)
    }

    fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.fpr + t * (o.fpr - self.fpr), self.tpr + t * (o.tpr - self.tpr))
    }
}

/// Signed area test: positive when `p` is left of the directed line `a -> b`.
fn side(a: OperatingPoint, b: OperatingPoint, p: OperatingPoint) -> f64 {
    b.sub(a).cross(p.sub(a))
}

/// Indices of the convex hull vertices in counter-clockwise order, starting
/// from the lowest-leftmost point. Collinear boundary points are dropped;
/// fully collinear input yields its two extreme points.
pub fn convex_hull_indices(points: &[OperatingPoint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .fpr
            .total_cmp(&points[b].fpr)
            .then(points[a].tpr.total_cmp(&points[b].tpr))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in iter {
            while hull.len() >= start + 2
                && side(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    hull
}

/// A convex polygon with counter-clockwise vertices. One or two vertices
/// represent a point or a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<OperatingPoint>,
}

impl ConvexPolygon {
    pub fn hull_of(points: &[OperatingPoint]) -> Self {
        let vertices = convex_hull_indices(points).into_iter().map(|i| points[i]).collect();
        Self { vertices }
    }

    pub fn vertices(&self) -> &[OperatingPoint] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Directed edges whose left half-planes intersect to this polygon.
    /// A segment contributes both directions so that only the line survives.
    fn edges(&self) -> Vec<(OperatingPoint, OperatingPoint)> {
        let v = &self.vertices;
        match v.len() {
            0 | 1 => Vec::new(),
            2 => vec![(v[0], v[1]), (v[1], v[0])],
            n => (0..n).map(|i| (v[i], v[(i + 1) % n])).collect(),
        }
    }

    /// Keeps the part of the polygon left of (or on) the line `a -> b`.
    fn clip(&self, a: OperatingPoint, b: OperatingPoint) -> Self {
        let v = &self.vertices;
        if v.len() == 1 {
            let keep = side(a, b, v[0]) >= -GEOM_EPS;
            return Self { vertices: if keep { v.clone() } else { Vec::new() } };
        }
        let mut out = Vec::with_capacity(v.len() + 1);
        for i in 0..v.len() {
            let p = v[i];
            let q = v[(i + 1) % v.len()];
            let sp = side(a, b, p);
            let sq = side(a, b, q);
            let p_in = sp >= -GEOM_EPS;
            let q_in = sq >= -GEOM_EPS;
            if p_in {
                out.push(p);
            }
            if p_in != q_in {
                let t = sp / (sp - sq);
                out.push(p.lerp(q, t));
            }
        }
        Self { vertices: dedup_ring(out) }
    }

    /// Intersection of two convex polygons.
    pub fn intersect(&self, other: &Self) -> Self {
        if other.vertices.len() == 1 {
            let p = other.vertices[0];
            return Self { vertices: if self.contains(p) { vec![p] } else { Vec::new() } };
        }
        other
            .edges()
            .into_iter()
            .fold(self.clone(), |acc, (a, b)| if acc.is_empty() { acc } else { acc.clip(a, b) })
    }

    pub fn contains(&self, p: OperatingPoint) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0].distance(p) <= GEOM_EPS,
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let d = b.sub(a);
                let t = (p.sub(a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                a.lerp(b, t).distance(p) <= GEOM_EPS
            }
            _ => self.edges().iter().all(|&(a, b)| side(a, b, p) >= -GEOM_EPS),
        }
    }

    /// Vertex minimizing `cost_fpr * fpr + cost_tpr * tpr`. Near-ties (within
    /// `1e-12`) go to the higher tpr, then the lower fpr.
    pub fn minimize_linear(&self, cost_fpr: f64, cost_tpr: f64) -> Option<OperatingPoint> {
        let value = |p: &OperatingPoint| cost_fpr * p.fpr + cost_tpr * p.tpr;
        let best = self.vertices.iter().map(value).fold(f64::INFINITY, f64::min);
        self.vertices
            .iter()
            .filter(|p| value(p) <= best + 1e-12)
            .copied()
            .reduce(|a, b| {
                let b_better = b.tpr > a.tpr || (b.tpr == a.tpr && b.fpr < a.fpr);
                if b_better {
                    b
                } else {
                    a
                }
            })
    }
}

fn dedup_ring(mut pts: Vec<OperatingPoint>) -> Vec<OperatingPoint> {
    pts.dedup_by(|a, b| a.distance(*b) <= GEOM_EPS);
    while pts.len() > 1 && pts[0].distance(pts[pts.len() - 1]) <= GEOM_EPS {
        pts.pop();
    }
    pts
}

/// Writes `p` as a convex combination of at most three of `vertices` (a
/// convex polygon in counter-clockwise order). Returns `(vertex index,
/// weight)` pairs with positive weights summing to one. Points on a vertex
/// or an edge use one or two vertices.
///
/// `p` is expected to lie in the polygon; points marginally outside are
/// mapped to the nearest representable combination.
pub fn convex_decomposition(vertices: &[OperatingPoint], p: OperatingPoint) -> Vec<(usize, f64)> {
    let n = vertices.len();
    assert!(n > 0, "decomposition needs at least one vertex");
    if let Some(i) = (0..n).find(|&i| vertices[i].distance(p) <= GEOM_EPS) {
        return vec![(i, 1.0)];
    }
    if n == 1 {
        return vec![(0, 1.0)];
    }

    let on_segment = |i: usize, j: usize| -> (f64, f64) {
        let (a, b) = (vertices[i], vertices[j]);
        let d = b.sub(a);
        let t = (p.sub(a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        (t, a.lerp(b, t).distance(p))
    };
    let edge_count = if n == 2 { 1 } else { n };
    let mut best_edge: Option<(usize, usize, f64, f64)> = None;
    for i in 0..edge_count {
        let j = (i + 1) % n;
        let (t, dist) = on_segment(i, j);
        if best_edge.map_or(true, |e| dist < e.3) {
            best_edge = Some((i, j, t, dist));
        }
    }
    let (i, j, t, dist) = best_edge.expect("at least one edge");
    if n == 2 || dist <= GEOM_EPS {
        return prune(vec![(i, 1.0 - t), (j, t)]);
    }

    // Fan triangulation from vertex 0; take the triangle that contains p
    // most robustly.
    let mut best: Option<([usize; 3], [f64; 3], f64)> = None;
    for k in 1..n - 1 {
        let tri = [0, k, k + 1];
        let (a, b, c) = (vertices[0], vertices[k], vertices[k + 1]);
        let area = side(a, b, c);
        if area.abs() <= f64::EPSILON {
            continue;
        }
        let w = [side(b, c, p) / area, side(c, a, p) / area, side(a, b, p) / area];
        let worst = w.iter().copied().fold(f64::INFINITY, f64::min);
        if best.map_or(true, |x| worst > x.2) {
            best = Some((tri, w, worst));
        }
    }
    match best {
        Some((tri, w, _)) => {
            let clamped: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            prune(tri.iter().zip(clamped).map(|(&v, x)| (v, x / total)).collect())
        }
        None => prune(vec![(i, 1.0 - t), (j, t)]),
    }
}

fn prune(parts: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let kept: Vec<(usize, f64)> = parts.into_iter().filter(|&(_, w)| w > 1e-15).collect();
    let total: f64 = kept.iter().map(|p| p.1).sum();
    kept.into_iter().map(|(i, w)| (i, w / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> OperatingPoint {
        OperatingPoint::new(x, y)
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [pt(0.0, 0.0), pt(0.5, 0.5), pt(1.0, 1.0), pt(0.2, 0.8), pt(0.3, 0.6)];
        let h = convex_hull_indices(&pts);
        assert_eq!(h.len(), 3);
        assert!(h.contains(&0) && h.contains(&2) && h.contains(&3));
        let diag = [pt(0.0, 0.0), pt(0.5, 0.5), pt(1.0, 1.0)];
        assert_eq!(convex_hull_indices(&diag), vec![0, 2]);
    }

    #[test]
    fn square_intersections() {
        let a = ConvexPolygon::hull_of(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]);
        let b = ConvexPolygon::hull_of(&[pt(0.5, 0.5), pt(1.5, 0.5), pt(1.5, 1.5), pt(0.5, 1.5)]);
        let c = a.intersect(&b);
        let mut v: Vec<(f64, f64)> = c.vertices().iter().map(|p| (p.fpr, p.tpr)).collect();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(v, vec![(0.5, 0.5), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0)]);
    }

    #[test]
    fn intersection_with_segment_is_a_segment() {
        let tri = ConvexPolygon::hull_of(&[pt(0.0, 0.0), pt(0.2, 0.9), pt(1.0, 1.0)]);
        let diag = ConvexPolygon::hull_of(&[pt(0.0, 0.0), pt(1.0, 1.0)]);
        let c = tri.intersect(&diag);
        assert_eq!(c.vertices().len(), 2);
        assert!(c.contains(pt(0.5, 0.5)));
        assert!(!c.contains(pt(0.5, 0.6)));
        assert!(!c.contains(pt(1.5, 1.5)));
    }

    #[test]
    fn minimize_breaks_ties_toward_high_tpr() {
        let sq = ConvexPolygon::hull_of(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]);
        // objective depends on fpr only: (0,0) and (0,1) tie
        assert_eq!(sq.minimize_linear(1.0, 0.0), Some(pt(0.0, 1.0)));
        assert_eq!(sq.minimize_linear(1.0, -1.0), Some(pt(0.0, 1.0)));
    }

    #[test]
    fn decomposition_prefers_fewest_vertices() {
        let v = [pt(0.0, 0.0), pt(1.0, 1.0), pt(0.2, 0.9)];
        let poly = ConvexPolygon::hull_of(&v);
        let verts = poly.vertices();
        assert_eq!(convex_decomposition(verts, pt(0.2, 0.9)).len(), 1);
        assert_eq!(convex_decomposition(verts, pt(0.1, 0.45)).len(), 2);
        let parts = convex_decomposition(verts, pt(0.4, 0.6));
        assert_eq!(parts.len(), 3);
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12),
                                      a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let mut pts = vec![pt(0.0, 0.0), pt(1.0, 1.0)];
            pts.extend(raw.iter().map(|&(x, y)| pt(x, y)));
            let poly = ConvexPolygon::hull_of(&pts);
            let verts = poly.vertices();
            // a point on the segment between the diagonal and a hull vertex is inside
            let anchor = verts[(verts.len() / 2).min(verts.len() - 1)];
            let q = pt(a, a).lerp(anchor, b);
            prop_assert!(poly.contains(q));
            let parts = convex_decomposition(verts, q);
            prop_assert!(parts.len() <= 3);
            let w: f64 = parts.iter().map(|p| p.1).sum();
            prop_assert!((w - 1.0).abs() < 1e-12);
            let rx: f64 = parts.iter().map(|&(i, w)| w * verts[i].fpr).sum();
            let ry: f64 = parts.iter().map(|&(i, w)| w * verts[i].tpr).sum();
            prop_assert!(pt(rx, ry).distance(q) < 1e-12);
        }

        #[test]
        fn intersection_is_inside_both(
            a in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
            b in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
        ) {
            let mk = |raw: &Vec<(f64, f64)>| {
                let mut pts = vec![pt(0.0, 0.0), pt(1.0, 1.0)];
                pts.extend(raw.iter().map(|&(x, y)| pt(x, y)));
                ConvexPolygon::hull_of(&pts)
            };
            let (pa, pb) = (mk(&a), mk(&b));
            let c = pa.intersect(&pb);
            prop_assert!(!c.is_empty());
            for &v in c.vertices() {
                prop_assert!(pa.contains(v) && pb.contains(v));
            }
            // the diagonal is common to both regions
            prop_assert!(c.contains(pt(0.5, 0.5)));
        }
    }
}
