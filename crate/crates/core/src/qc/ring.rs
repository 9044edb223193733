use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};

/// Triangles thinner than this fraction of their longest edge squared are dropped.
const SLIVER_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct Site {
    pos: Point2<f64>,
    local: usize,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// 1-ring of a point: the triangles of a Delaunay triangulation of its
/// projected neighborhood that touch the center.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRing {
    pub center: usize,
    /// Global indices `[center, b, c]`, counter-clockwise in the local chart.
    pub triangles: Vec<[usize; 3]>,
    /// Local coordinates of each triangle's vertices, center first.
    pub coords: Vec<[[f64; 2]; 3]>,
    pub areas: Vec<f64>,
}

/// Builds the ring of `center`. `neighbors[0]` must be the center itself and
/// `coords` are neighbor positions relative to it.
pub fn build_ring(center: usize, neighbors: &[usize], coords: &[[f64; 2]]) -> Result<LocalRing> {
    let mut tri: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
    for (local, c) in coords.iter().enumerate() {
        tri.insert(Site {
            pos: Point2::new(c[0], c[1]),
            local,
        })
        .map_err(|_| Error::DegenerateRing(center))?;
    }
    let mut ring = LocalRing {
        center,
        triangles: Vec::new(),
        coords: Vec::new(),
        areas: Vec::new(),
    };
    for face in tri.inner_faces() {
        let v = face.vertices();
        let loc = [v[0].data().local, v[1].data().local, v[2].data().local];
        let Some(k) = loc.iter().position(|&l| l == 0) else {
            continue;
        };
        // Rotate so the center comes first; spade faces are counter-clockwise.
        let (b, c) = (loc[(k + 1) % 3], loc[(k + 2) % 3]);
        let (pi, pb, pc) = (coords[0], coords[b], coords[c]);
        let area = 0.5 * ((pb[0] - pi[0]) * (pc[1] - pi[1]) - (pb[1] - pi[1]) * (pc[0] - pi[0]));
        let edge2 = [sq(pb, pi), sq(pc, pi), sq(pc, pb)].into_iter().fold(0.0, f64::max);
        if !(area > SLIVER_RATIO * edge2) {
            continue;
        }
        ring.triangles.push([center, neighbors[b], neighbors[c]]);
        ring.coords.push([pi, pb, pc]);
        ring.areas.push(area);
    }
    if ring.triangles.is_empty() {
        return Err(Error::DegenerateRing(center));
    }
    Ok(ring)
}

/// Counter-clockwise angle from `a` to `b`, in `[0, 2pi)`.
fn ccw_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let t = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

impl LocalRing {
    /// Keeps the triangles inside the wedge spanned at the center by the two
    /// boundary neighbors `a` and `b` (local coordinates), on the side that
    /// contains `inward`. Where the boundary is locally concave in the chart
    /// the Delaunay fan closes around the center; this removes the triangles
    /// that cover the outside. Returns `None` if nothing would remain.
    pub fn clipped(&self, a: [f64; 2], b: [f64; 2], inward: [f64; 2]) -> Option<LocalRing> {
        let (start, end) = if ccw_angle(a, inward) <= ccw_angle(a, b) { (a, b) } else { (b, a) };
        let span = ccw_angle(start, end);
        let mut out = LocalRing {
            center: self.center,
            triangles: Vec::new(),
            coords: Vec::new(),
            areas: Vec::new(),
        };
        for ((t, p), &area) in self.triangles.iter().zip(&self.coords).zip(&self.areas) {
            let mid = [
                (p[1][0] + p[2][0]) / 2.0 - p[0][0],
                (p[1][1] + p[2][1]) / 2.0 - p[0][1],
            ];
            if ccw_angle(start, mid) <= span {
                out.triangles.push(*t);
                out.coords.push(*p);
                out.areas.push(area);
            }
        }
        (!out.triangles.is_empty()).then_some(out)
    }
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Row of the divergence-form operator `div(A grad u)` at the ring center,
/// assembled from linear finite elements on the ring. `alpha(j)` returns the
/// coefficient entries at global point `j`; each triangle uses the vertex mean.
/// Entries sum to zero.
pub fn ring_row<F>(ring: &LocalRing, alpha: F) -> Vec<(usize, f64)>
where
    F: Fn(usize) -> [f64; 3],
{
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(3 * ring.triangles.len());
    for ((t, p), &area) in ring.triangles.iter().zip(&ring.coords).zip(&ring.areas) {
        let mut a = [0.0; 3];
        for &v in t {
            let al = alpha(v);
            for d in 0..3 {
                a[d] += al[d] / 3.0;
            }
        }
        // Rotating gradients by 90 degrees turns A into its adjugate.
        let g = [a[2], -a[1], a[0]];
        let form = |x: [f64; 2], y: [f64; 2]| {
            x[0] * (g[0] * y[0] + g[1] * y[1]) + x[1] * (g[1] * y[0] + g[2] * y[1])
        };
        let d = |x: [f64; 2], y: [f64; 2]| [x[0] - y[0], x[1] - y[1]];
        let (pi, pb, pc) = (p[0], p[1], p[2]);
        row.push((t[1], form(d(pc, pi), d(pc, pb)) / area));
        row.push((t[2], form(d(pb, pi), d(pb, pc)) / area));
        row.push((t[0], -form(d(pc, pb), d(pc, pb)) / area));
    }
    merge_row(row)
}

/// Sorts a sparse row by column and sums duplicates.
pub(crate) fn merge_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}
