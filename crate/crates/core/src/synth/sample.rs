use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Packing constant relating a Poisson-disk radius to the number of samples
/// it produces per unit area (`n ≈ 0.69 A / r²`).
const PACKING: f64 = 0.69;
/// Candidates tried around each active sample before it is retired.
const ATTEMPTS: usize = 30;

struct Grid {
    cell: f64,
    origin: [f64; 2],
    nx: usize,
    ny: usize,
    cells: Vec<Option<usize>>,
}

impl Grid {
    fn new(lo: [f64; 2], hi: [f64; 2], r: f64) -> Self {
        let cell = r / std::f64::consts::SQRT_2;
        let nx = ((hi[0] - lo[0]) / cell).ceil() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).ceil() as usize + 1;
        Self {
            cell,
            origin: lo,
            nx,
            ny,
            cells: vec![None; nx * ny],
        }
    }

    fn key(&self, p: [f64; 2]) -> (usize, usize) {
        let x = ((p[0] - self.origin[0]) / self.cell).floor().max(0.0) as usize;
        let y = ((p[1] - self.origin[1]) / self.cell).floor().max(0.0) as usize;
        (x.min(self.nx - 1), y.min(self.ny - 1))
    }

    fn insert(&mut self, p: [f64; 2], idx: usize) {
        let (x, y) = self.key(p);
        self.cells[y * self.nx + x] = Some(idx);
    }

    fn is_free(&self, p: [f64; 2], r: f64, pts: &[[f64; 2]]) -> bool {
        let (x, y) = self.key(p);
        let (x0, y0) = (x.saturating_sub(2), y.saturating_sub(2));
        let (x1, y1) = ((x + 2).min(self.nx - 1), (y + 2).min(self.ny - 1));
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                if let Some(j) = self.cells[cy * self.nx + cx] {
                    let q = pts[j];
                    if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < r * r {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Bridson-style Poisson-disk fill of a region, grown inward from the given
/// boundary samples. Returns boundary samples first, then interior samples.
fn poisson_fill<F>(boundary: Vec<[f64; 2]>, inside: F, lo: [f64; 2], hi: [f64; 2], r: f64, seed: u64) -> Vec<[f64; 2]>
where
    F: Fn([f64; 2]) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = Grid::new(lo, hi, r);
    let mut pts = boundary;
    for (i, p) in pts.iter().enumerate() {
        grid.insert(*p, i);
    }
    let mut active: Vec<usize> = (0..pts.len()).collect();
    while !active.is_empty() {
        let slot = rng.gen_range(0..active.len());
        let base = pts[active[slot]];
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let t = rng.gen::<f64>() * TAU;
            let rad = r * (1.0 + rng.gen::<f64>());
            let c = [base[0] + rad * t.cos(), base[1] + rad * t.sin()];
            if inside(c) && grid.is_free(c, r, &pts) {
                grid.insert(c, pts.len());
                active.push(pts.len());
                pts.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    pts
}

/// Quasi-uniform sample of `[0, width] x [0, height]` with about `n` points.
///
/// The perimeter is sampled at spacing at most the Poisson radius and forms the
/// boundary cycle, counter-clockwise from the origin; the four rectangle corners
/// are annotated as corners. Deterministic per seed.
pub fn sample_quasi_uniform(width: f64, height: f64, n: usize, seed: u64) -> Result<PointCloud> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!("sampler needs n >= 100, got {n}")));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument("rectangle sides must be positive".into()));
    }
    let r = (PACKING * width * height / n as f64).sqrt();
    let mw = (width / r).ceil() as usize;
    let mh = (height / r).ceil() as usize;
    let mut boundary = Vec::with_capacity(2 * (mw + mh));
    boundary.extend((0..mw).map(|i| [i as f64 * width / mw as f64, 0.0]));
    boundary.extend((0..mh).map(|j| [width, j as f64 * height / mh as f64]));
    boundary.extend((0..mw).map(|i| [width - i as f64 * width / mw as f64, height]));
    boundary.extend((0..mh).map(|j| [0.0, height - j as f64 * height / mh as f64]));
    let nb = boundary.len();
    let inside = |p: [f64; 2]| p[0] > 0.0 && p[0] < width && p[1] > 0.0 && p[1] < height;
    let pts = poisson_fill(boundary, inside, [0.0, 0.0], [width, height], r, seed);
    PointCloud::planar(&pts)?
        .with_boundary((0..nb).collect())?
        .with_corners([0, mw, mw + mh, 2 * mw + mh])
}

/// Quasi-uniform sample of the disk of radius `radius` centered at the origin,
/// boundary counter-clockwise from angle 0.
pub fn sample_disk(radius: f64, n: usize, seed: u64) -> Result<PointCloud> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!("sampler needs n >= 100, got {n}")));
    }
    let area = std::f64::consts::PI * radius * radius;
    let r = (PACKING * area / n as f64).sqrt();
    let m = (TAU * radius / r).ceil() as usize;
    let boundary: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let t = TAU * k as f64 / m as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let inside = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1] < radius * radius;
    let pts = poisson_fill(boundary, inside, [-radius, -radius], [radius, radius], r, seed);
    PointCloud::planar(&pts)?.with_boundary((0..m).collect())
}
