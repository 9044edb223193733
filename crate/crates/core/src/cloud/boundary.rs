use std::f64::consts::PI;

use super::{build_charts, Neighborhood, PointCloud};
use crate::error::{Error, Result};

/// Angular gap (radians) between consecutive projected neighbors above which a
/// point is classified as boundary.
pub const BOUNDARY_GAP: f64 = PI / 2.0;

fn max_angular_gap(coords: &[[f64; 2]]) -> f64 {
    let mut angles: Vec<f64> = coords
        .iter()
        .skip(1)
        .filter(|c| c[0] != 0.0 || c[1] != 0.0)
        .map(|c| c[1].atan2(c[0]))
        .collect();
    if angles.is_empty() {
        return 2.0 * PI;
    }
    angles.sort_by(f64::total_cmp);
    let mut gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Ordered boundary cycle of a disk-type cloud.
///
/// A boundary annotation on the cloud is returned unchanged. Otherwise a point
/// is on the boundary when the widest angular gap between its projected
/// neighbors exceeds [`BOUNDARY_GAP`]. Those points are chained by nearest
/// unvisited neighbor within three times their median spacing; a few strays
/// that do not fit the chain are dropped. The cycle starts at its lowest index
/// and runs counter-clockwise about the mean chart normal.
pub fn detect_boundary(cloud: &PointCloud, nbrs: &Neighborhood) -> Result<Vec<usize>> {
    if let Some(b) = cloud.boundary() {
        return Ok(b.to_vec());
    }
    let charts = build_charts(cloud, nbrs)?;
    let flagged: Vec<usize> = charts
        .iter()
        .filter(|c| max_angular_gap(&c.coords) > BOUNDARY_GAP)
        .map(|c| c.center)
        .collect();
    if flagged.len() < 3 {
        return Err(Error::BoundaryNotClosed(format!(
            "only {} boundary points detected",
            flagged.len()
        )));
    }

    let pts = cloud.points();
    let d = |a: usize, b: usize| super::dist3(&pts[flagged[a]], &pts[flagged[b]]);
    // Step limit from the spacing along the boundary itself.
    let mut near: Vec<f64> = (0..flagged.len())
        .map(|a| (0..flagged.len()).filter(|&b| b != a).map(|b| d(a, b)).fold(f64::INFINITY, f64::min))
        .collect();
    near.sort_by(f64::total_cmp);
    let limit = 3.0 * near[near.len() / 2];

    // Walk from the point with the widest gap, first one way and then, if the
    // walk dead-ends, from the start the other way.
    let start = (0..flagged.len())
        .max_by(|&a, &b| max_angular_gap(&charts[flagged[a]].coords).total_cmp(&max_angular_gap(&charts[flagged[b]].coords)))
        .expect("at least three flagged points");
    let mut used = vec![false; flagged.len()];
    used[start] = true;
    let walk = |from: usize, used: &mut [bool]| {
        let mut out = Vec::new();
        let mut cur = from;
        loop {
            let next = (0..flagged.len())
                .filter(|&k| !used[k])
                .map(|k| (d(cur, k), k))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match next {
                Some((dist, k)) if dist <= limit => {
                    used[k] = true;
                    out.push(k);
                    cur = k;
                }
                _ => return out,
            }
        }
    };
    let forward = walk(start, &mut used);
    let tail = *forward.last().unwrap_or(&start);
    let mut order: Vec<usize> = if d(tail, start) <= limit && forward.len() >= 2 {
        std::iter::once(start).chain(forward).collect()
    } else {
        let mut back = walk(start, &mut used);
        back.reverse();
        back.into_iter().chain(std::iter::once(start)).chain(forward).collect()
    };
    let closing = d(order[0], order[order.len() - 1]);
    if order.len() < 3 || closing > limit {
        return Err(Error::BoundaryNotClosed(format!(
            "chain of {} points leaves a gap of {closing:.3e} (limit {limit:.3e})",
            order.len()
        )));
    }
    let stray = flagged.len() - order.len();
    if 4 * stray > flagged.len() {
        return Err(Error::BoundaryNotClosed(format!(
            "{stray} of {} boundary candidates could not be chained",
            flagged.len()
        )));
    }
    if stray > 0 {
        log::debug!("{stray} boundary candidates left off the cycle");
    }
    // Start the cycle at the lowest index for a stable ordering.
    let lowest = (0..order.len()).min_by_key(|&k| flagged[order[k]]).expect("non-empty");
    order.rotate_left(lowest);
    let mut cycle: Vec<usize> = order.into_iter().map(|k| flagged[k]).collect();

    let mut normal = [0.0; 3];
    for &i in &cycle {
        for d in 0..3 {
            normal[d] += charts[i].normal[d];
        }
    }
    let mut area = 0.0;
    for k in 0..cycle.len() {
        let a = pts[cycle[k]];
        let b = pts[cycle[(k + 1) % cycle.len()]];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        area += cross[0] * normal[0] + cross[1] * normal[1] + cross[2] * normal[2];
    }
    if area < 0.0 {
        cycle[1..].reverse();
    }
    Ok(cycle)
}
