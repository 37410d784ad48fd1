//! Bad-square detection: windows containing two well-separated support
//! points whose joining segment passes through a hole in the support.
//! Witnesses are always certified against the raw cloud.

use crate::dyadic::Square;
use crate::measure::PointCloudMeasure;
use crate::{Error, Point, Result};
use std::collections::HashMap;

/// Certificate that a window is bad: two support points at least `l(Q)/2`
/// apart whose segment contains a point with clearance `>= tau l(Q) + mesh`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BadWitness {
    pub q: Square,
    pub zeta: Point,
    pub xi: Point,
    pub z: Point,
    pub clearance: f64,
}

/// Outcome of re-running the detector over a ledger's squares.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InductiveBadReport {
    pub checked: usize,
    pub flagged: usize,
    pub excluded: Vec<Square>,
    pub failures: Vec<Square>,
}

impl InductiveBadReport {
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.flagged as f64 / self.checked as f64
        }
    }
}

fn dist_point_segment(z: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom == 0.0 {
        return crate::dist(z, a);
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / denom;
    let t = t.clamp(0.0, 1.0);
    crate::dist(z, a + ab * t)
}

/// Greedy coarsening: keep a point iff it is at least `sep` from every kept
/// point so far (input order).
fn coarsen(points: &[Point], sep: f64) -> Vec<Point> {
    let mut kept: Vec<Point> = Vec::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for &p in points {
        let (cx, cy) = ((p.re / sep).floor() as i64, (p.im / sep).floor() as i64);
        let mut clear = true;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    if bucket.iter().any(|&k| crate::dist(kept[k], p) < sep) {
                        clear = false;
                        break 'scan;
                    }
                }
            }
        }
        if clear {
            grid.entry((cx, cy)).or_default().push(kept.len());
            kept.push(p);
        }
    }
    kept
}

/// Andrew monotone chain; collinear interior points dropped.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    pts.dedup_by(|a, b| a == b);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| {
        (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
    };
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower // counter-clockwise
}

fn dist_to_hull(z: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => crate::dist(z, hull[0]),
        2 => dist_point_segment(z, hull[0], hull[1]),
        _ => {
            let mut inside = true;
            let mut best = f64::INFINITY;
            for k in 0..hull.len() {
                let a = hull[k];
                let b = hull[(k + 1) % hull.len()];
                let cross = (b.re - a.re) * (z.im - a.im) - (b.im - a.im) * (z.re - a.re);
                if cross < 0.0 {
                    inside = false;
                }
                best = best.min(dist_point_segment(z, a, b));
            }
            if inside {
                0.0
            } else {
                best
            }
        }
    }
}

/// Occupancy grid for "no support point within r of z" queries at fixed r.
struct HoleProbe {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<Point>>,
    key_lo: (i64, i64),
    key_hi: (i64, i64),
}

impl HoleProbe {
    fn build(points: Vec<Point>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
        let (mut key_lo, mut key_hi) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
        for &p in &points {
            let key = ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
            key_lo = (key_lo.0.min(key.0), key_lo.1.min(key.1));
            key_hi = (key_hi.0.max(key.0), key_hi.1.max(key.1));
            buckets.entry(key).or_default().push(p);
        }
        HoleProbe {
            cell,
            buckets,
            key_lo,
            key_hi,
        }
    }

    /// True iff every support point is at distance >= r from z (needs r <= cell).
    fn clear_within(&self, z: Point, r: f64) -> bool {
        debug_assert!(r <= self.cell * (1.0 + 1e-12));
        let (cx, cy) = (
            (z.re / self.cell).floor() as i64,
            (z.im / self.cell).floor() as i64,
        );
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.buckets.get(&(cx + dx, cy + dy)) {
                    if bucket.iter().any(|p| crate::dist(*p, z) < r) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Exact distance to the nearest stored point, by expanding rings of
    /// grid cells. A point in a cell at Chebyshev ring k sits at distance
    /// >= (k-1)*cell, so the scan stops once best <= (ring)*cell.
    fn exact_clearance(&self, z: Point) -> f64 {
        let (cx, cy) = (
            (z.re / self.cell).floor() as i64,
            (z.im / self.cell).floor() as i64,
        );
        let max_ring = (cx - self.key_lo.0)
            .max(self.key_hi.0 - cx)
            .max(cy - self.key_lo.1)
            .max(self.key_hi.1 - cy)
            .max(0);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            if best <= (ring - 1).max(0) as f64 * self.cell {
                break;
            }
            let mut visit = |kx: i64, ky: i64| {
                if let Some(bucket) = self.buckets.get(&(kx, ky)) {
                    for p in bucket {
                        best = best.min(crate::dist(*p, z));
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
                continue;
            }
            for d in -ring..=ring {
                visit(cx + d, cy - ring);
                visit(cx + d, cy + ring);
            }
            for d in (1 - ring)..ring {
                visit(cx - ring, cy + d);
                visit(cx + ring, cy + d);
            }
        }
        best
    }
}

/// A hole was seen near `hole`; look for a qualifying pair whose segment
/// passes by it and certify the best sample on that segment.
fn confirm_hole(
    q: &Square,
    tau: f64,
    mesh: f64,
    hole: Point,
    net: &[Point],
    probe: &HoleProbe,
) -> Option<BadWitness> {
    let l = q.side;
    let need = tau * l + mesh;
    let mut order: Vec<usize> = (0..net.len()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        crate::dist(net[b], hole)
            .partial_cmp(&crate::dist(net[a], hole))
            .unwrap()
            .then(a.cmp(&b))
    };
    let take = order.len().min(12);
    if order.len() > take {
        order.select_nth_unstable_by(take - 1, cmp);
        order.truncate(take);
    }
    order.sort_by(cmp);
    for &zi in &order {
        let zeta = net[zi];
        let mut best: Option<(f64, Point)> = None;
        for &xi_p in net {
            if crate::dist(zeta, xi_p) < l / 2.0 {
                continue;
            }
            let d = dist_point_segment(hole, zeta, xi_p);
            if d <= tau * l / 4.0 && best.as_ref().map_or(true, |b| d < b.0) {
                best = Some((d, xi_p));
            }
        }
        let Some((_, xi_p)) = best else { continue };
        // Only the stretch of [zeta, xi] near the hole can clear the
        // threshold; sample a window around the hole's projection.
        let seg = xi_p - zeta;
        let seg_len = seg.norm();
        let t0 = (((hole - zeta).re * seg.re + (hole - zeta).im * seg.im)
            / (seg_len * seg_len))
            .clamp(0.0, 1.0);
        let half = (2.0 * need / seg_len).min(0.5);
        let (ta, tb) = ((t0 - half).max(0.0), (t0 + half).min(1.0));
        let steps = (((tb - ta) * seg_len) / (tau * l / 2.0)).ceil().max(1.0) as usize;
        let mut best_sample: Option<(f64, Point)> = None;
        for s in 0..=steps {
            let t = ta + (tb - ta) * s as f64 / steps as f64;
            let z = zeta + seg * t;
            let c = probe.exact_clearance(z);
            if best_sample.as_ref().map_or(true, |b| c > b.0) {
                best_sample = Some((c, z));
            }
        }
        if let Some((clearance, z)) = best_sample {
            if clearance >= need {
                return Some(BadWitness {
                    q: *q,
                    zeta,
                    xi: xi_p,
                    z,
                    clearance,
                });
            }
        }
    }
    None
}

/// Search for a bad-square witness. Candidate holes come from a grid over
/// the convex hull of a coarsened local net (any segment between support
/// points stays within a `tau l/4` collar of that hull); a coarse pass runs
/// first so large holes exit early. Returns `None` when no hole certifies.
pub fn is_bad(mu: &PointCloudMeasure, q: &Square, tau: f64) -> Result<Option<BadWitness>> {
    if !(tau > 0.0 && tau < 1.0 / 16.0) {
        return Err(Error::InvalidParameter("need 0 < tau < 1/16".into()));
    }
    let l = q.side;
    if l < 8.0 * mu.mesh() / tau {
        return Err(Error::ResolutionFloor(format!(
            "l(Q) = {l} below 8 * mesh / tau = {}",
            8.0 * mu.mesh() / tau
        )));
    }
    let center = q.center();
    let r_hole = tau * l + mu.mesh();
    let reach = mu.index().within_disc(center, 10.0 * l + 2.0 * r_hole);
    let local: Vec<Point> = reach
        .iter()
        .map(|&i| mu.points()[i])
        .filter(|p| crate::dist(*p, center) <= 10.0 * l)
        .collect();
    if local.len() < 2 {
        return Ok(None);
    }
    let net = coarsen(&local, tau * l / 4.0);
    // Diameter test against l/2, with bbox bounds so the exact O(hull^2)
    // scan only runs in the ambiguous band.
    let (mut blo, mut bhi) = (net[0], net[0]);
    for p in &net {
        blo = Point::new(blo.re.min(p.re), blo.im.min(p.im));
        bhi = Point::new(bhi.re.max(p.re), bhi.im.max(p.im));
    }
    let ext = (bhi.re - blo.re).max(bhi.im - blo.im);
    if ext * std::f64::consts::SQRT_2 < l / 2.0 {
        return Ok(None);
    }
    let hull = convex_hull(&net);
    if ext < l / 2.0 {
        let mut diam = 0.0f64;
        for a in 0..hull.len() {
            for b in (a + 1)..hull.len() {
                diam = diam.max(crate::dist(hull[a], hull[b]));
            }
        }
        if diam < l / 2.0 {
            return Ok(None);
        }
    }
    let probe = HoleProbe::build(reach.iter().map(|&i| mu.points()[i]).collect(), r_hole);

    let (mut lo, mut hi) = (net[0], net[0]);
    for p in &net {
        lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let collar = tau * l / 4.0;
    for step in [4.0 * tau * l, tau * l / 2.0] {
        let i0 = ((lo.re - collar - center.re) / step).floor() as i64;
        let i1 = ((hi.re + collar - center.re) / step).ceil() as i64;
        let j0 = ((lo.im - collar - center.im) / step).floor() as i64;
        let j1 = ((hi.im + collar - center.im) / step).ceil() as i64;
        // Rank the clear cells by a grid distance transform (8-neighbor BFS
        // from the non-clear cells) so the deepest hole is confirmed first;
        // the witness then sits near the biggest gap, not just past the
        // threshold. The transform is O(cells), unlike per-cell clearance.
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        let at = |i: i64, j: i64| ((i - i0) as usize) * ny + (j - j0) as usize;
        let mut hops = vec![u32::MAX; nx * ny];
        let mut queue = std::collections::VecDeque::new();
        let mut holes: Vec<(i64, i64)> = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                let z = center + Point::new(i as f64 * step, j as f64 * step);
                if !probe.clear_within(z, r_hole) {
                    hops[at(i, j)] = 0;
                    queue.push_back((i, j));
                } else if dist_to_hull(z, &hull) <= collar {
                    holes.push((i, j));
                }
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            let h = hops[at(i, j)];
            for di in -1..=1i64 {
                for dj in -1..=1i64 {
                    let (a, b) = (i + di, j + dj);
                    if a < i0 || a > i1 || b < j0 || b > j1 {
                        continue;
                    }
                    if hops[at(a, b)] == u32::MAX {
                        hops[at(a, b)] = h + 1;
                        queue.push_back((a, b));
                    }
                }
            }
        }
        holes.sort_by_key(|&(i, j)| (std::cmp::Reverse(hops[at(i, j)]), i, j));
        for &(i, j) in &holes {
            let z = center + Point::new(i as f64 * step, j as f64 * step);
            if let Some(w) = confirm_hole(q, tau, mu.mesh(), z, &net, &probe) {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Re-check a witness against the raw cloud (not the coarsened net).
pub fn check_witness(mu: &PointCloudMeasure, tau: f64, w: &BadWitness) -> bool {
    let l = w.q.side;
    let center = w.q.center();
    let on_support = |p: Point| mu.support_distance(p).map_or(false, |d| d == 0.0);
    on_support(w.zeta)
        && on_support(w.xi)
        && crate::dist(w.zeta, center) <= 10.0 * l
        && crate::dist(w.xi, center) <= 10.0 * l
        && crate::dist(w.zeta, w.xi) >= l / 2.0
        && dist_point_segment(w.z, w.zeta, w.xi) <= 1e-9 * l
        && mu.support_distance(w.z).map_or(false, |d| {
            (d - w.clearance).abs() <= 1e-9 * l && d >= tau * l + mu.mesh()
        })
}

/// All bad dyadic sub-squares of `P` through `depth` subdivision levels.
pub fn bad_family(
    mu: &PointCloudMeasure,
    p: &Square,
    tau: f64,
    depth: u32,
) -> Result<Vec<BadWitness>> {
    let index = p.index.ok_or_else(|| {
        Error::InvalidParameter("the root square must carry a dyadic index".into())
    })?;
    if p.side * 0.5f64.powi(depth as i32) < 8.0 * mu.mesh() / tau {
        return Err(Error::ResolutionFloor(format!(
            "depth {depth} drops below the resolution floor"
        )));
    }
    let mut out = Vec::new();
    let mut level = vec![Square::from_index(index)];
    for d in 0..=depth {
        for q in &level {
            if let Some(w) = is_bad(mu, q, tau)? {
                out.push(w);
            }
        }
        if d < depth {
            let mut next = Vec::with_capacity(level.len() * 4);
            for q in &level {
                next.extend(q.children()?);
            }
            level = next;
        }
    }
    Ok(out)
}

/// `sum l(Q) / l(P)` over a family.
pub fn carleson_norm(family: &[Square], p: &Square) -> f64 {
    family.iter().map(|q| q.side).sum::<f64>() / p.side
}

/// Re-run the detector over every square that received inductive edges.
/// Squares below the resolution floor are listed as excluded, not counted.
pub fn inductive_implies_bad(
    mu: &PointCloudMeasure,
    entries: &[crate::curve::InductiveEntry],
    tau: f64,
) -> Result<InductiveBadReport> {
    let mut report = InductiveBadReport {
        checked: 0,
        flagged: 0,
        excluded: Vec::new(),
        failures: Vec::new(),
    };
    for entry in entries {
        if entry.q.side < 8.0 * mu.mesh() / tau {
            report.excluded.push(entry.q);
            continue;
        }
        report.checked += 1;
        match is_bad(mu, &entry.q, tau)? {
            Some(_) => report.flagged += 1,
            None => report.failures.push(entry.q),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicIndex;
    use crate::measure::{blowup, gen_circle, gen_segment, PointCloudMeasure};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    const TAU: f64 = 1.0 / 32.0;

    fn gap_fixture() -> PointCloudMeasure {
        let h = 1.0 / 256.0;
        let left = gen_segment(1.0, pt(-10.0, 0.0), pt(0.0, 0.0), h).unwrap();
        let right = gen_segment(1.0, pt(0.6, 0.0), pt(10.0, 0.0), h).unwrap();
        let mut points = left.points().to_vec();
        points.extend_from_slice(right.points());
        let mut weights = left.weights().to_vec();
        weights.extend_from_slice(right.weights());
        PointCloudMeasure::new(points, weights, h, "gap".into()).unwrap()
    }

    #[test]
    fn hull_and_segment_distance_basics() {
        let square = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        let hull = convex_hull(&square);
        assert_eq!(hull.len(), 4);
        assert_eq!(dist_to_hull(pt(0.5, 0.5), &hull), 0.0);
        assert!((dist_to_hull(pt(2.0, 0.5), &hull) - 1.0).abs() < 1e-12);
        // Collinear input degenerates to its extremes.
        let line = [pt(0.0, 0.0), pt(0.5, 0.0), pt(1.0, 0.0)];
        let hull = convex_hull(&line);
        assert!(hull.len() <= 3);
        assert!((dist_to_hull(pt(0.5, 0.3), &hull) - 0.3).abs() < 1e-12);
        assert!((dist_point_segment(pt(0.0, 1.0), pt(-1.0, 0.0), pt(1.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_line_window_is_good() {
        let mu = gen_segment(1.0, pt(-20.0, 0.0), pt(20.0, 0.0), 1.0 / 256.0).unwrap();
        let q = Square::new(pt(0.25, 0.0), 1.0);
        assert!(is_bad(&mu, &q, TAU).unwrap().is_none());
        // Floor enforcement.
        let tiny = Square::new(pt(0.25, 0.0), 0.01);
        assert!(matches!(
            is_bad(&mu, &tiny, TAU),
            Err(Error::ResolutionFloor(_))
        ));
        assert!(is_bad(&mu, &q, 0.2).is_err());
    }

    #[test]
    fn gap_window_is_bad_with_central_witness() {
        let mu = gap_fixture();
        let q = Square::new(pt(0.3, 0.0), 1.0);
        let w = is_bad(&mu, &q, TAU).unwrap().expect("gap must be detected");
        assert!(check_witness(&mu, TAU, &w));
        assert!(w.clearance >= 0.29, "clearance {}", w.clearance);
        assert!(crate::dist(w.z, pt(0.3, 0.0)) < 0.35, "witness at {}", w.z);
        // Monotone robustness: the same witness passes at smaller tau.
        assert!(check_witness(&mu, 0.02, &w));
    }

    #[test]
    fn circle_window_is_bad_through_the_middle() {
        let mu = gen_circle(1.0, pt(0.0, 0.0), 1.0, 1500).unwrap();
        let q = Square::new(pt(0.0, 0.0), 2.0);
        let w = is_bad(&mu, &q, TAU).unwrap().expect("disc interior is a hole");
        assert!(check_witness(&mu, TAU, &w));
        assert!(w.clearance > 0.5, "clearance {}", w.clearance);
        assert!(w.z.norm() < 0.5, "witness near center, got {}", w.z);
    }

    #[test]
    fn detection_is_blowup_covariant() {
        let mu = gap_fixture();
        let q = Square::new(pt(0.3, 0.0), 1.0);
        let w = is_bad(&mu, &q, TAU).unwrap().unwrap();

        let lambda = 0.5;
        let nu = blowup(&mu, pt(0.0, 0.0), lambda).unwrap();
        let q2 = Square::new(q.center() / lambda, q.side / lambda);
        let w2 = is_bad(&nu, &q2, TAU).unwrap().expect("badness is scale covariant");
        assert!(crate::dist(w2.z, w.z / lambda) < 1e-12);
        assert!(crate::dist(w2.zeta, w.zeta / lambda) < 1e-12);
        assert!((w2.clearance - w.clearance / lambda).abs() < 1e-12);

        // A gap-free line stays good on both sides of the rescaling.
        let line = gen_segment(1.0, pt(-10.0, 0.0), pt(10.0, 0.0), 1.0 / 256.0).unwrap();
        let line2 = blowup(&line, pt(0.0, 0.0), lambda).unwrap();
        let good = Square::new(pt(-5.0, 0.0), 1.0);
        let good2 = Square::new(good.center() / lambda, good.side / lambda);
        assert!(is_bad(&line, &good, TAU).unwrap().is_none());
        assert!(is_bad(&line2, &good2, TAU).unwrap().is_none());
    }

    #[test]
    fn family_and_norm_bookkeeping() {
        let p = Square::from_index(DyadicIndex { j: 0, kx: 0, ky: 0 });
        assert_eq!(carleson_norm(&[p], &p), 1.0);
        assert_eq!(carleson_norm(&[], &p), 0.0);
        let children: Vec<Square> = p.children().unwrap().to_vec();
        assert!((carleson_norm(&children, &p) - 2.0).abs() < 1e-15);

        let mu = gap_fixture();
        assert!(bad_family(&mu, &p, TAU, 10).is_err(), "floor must trip");
    }

    #[test]
    fn gap_family_concentrates_at_the_gap() {
        let mu = gap_fixture();
        // P = [0,2)^2 shifted to straddle the gap region.
        let p = Square::from_index(DyadicIndex { j: 1, kx: 0, ky: -1 });
        let fam = bad_family(&mu, &p, TAU, 1).unwrap();
        assert!(!fam.is_empty());
        for w in &fam {
            assert!(check_witness(&mu, TAU, w));
            // Witness holes cluster around the gap [0, 0.6].
            assert!(w.z.re > -1.0 && w.z.re < 1.6, "witness {}", w.z);
        }
    }

    #[test]
    fn empty_ledger_passes_vacuously() {
        let mu = gap_fixture();
        let report = inductive_implies_bad(&mu, &[], TAU).unwrap();
        assert_eq!(report.checked, 0);
        assert_eq!(report.fraction(), 1.0);
    }
}
