//! Exact nearest-neighbor and range queries over a point cloud, backed by a
//! bucketed uniform grid. Results always match a brute-force linear scan.

use crate::dyadic::Square;
use crate::{Error, Point, Result};
use std::collections::HashMap;

pub struct SpatialIndex {
    points: Vec<Point>,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialIndex {
    /// Build over `points` with the given bucket size.
    pub fn build(points: &[Point], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(i);
        }
        SpatialIndex {
            points: points.to_vec(),
            cell,
            buckets,
        }
    }

    #[inline]
    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Exact nearest neighbor: `(index, distance)`. Ties break to the lowest index.
    pub fn nearest(&self, z: Point) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let (kx, ky) = Self::key(z, self.cell);
        let mut best: Option<(usize, f64)> = None;
        let mut cells_scanned: u64 = 0;
        let mut ring: i64 = 0;
        loop {
            // Any point in a ring-r cell is at distance >= (r-1)*cell from z,
            // so once that bound exceeds the best hit we can stop.
            if let Some((_, d)) = best {
                if (ring - 1) as f64 * self.cell > d {
                    break;
                }
            }
            // Once more cells were touched than there are points, a flat
            // scan is cheaper than walking further rings.
            if cells_scanned > self.points.len() as u64 {
                for (i, p) in self.points.iter().enumerate() {
                    let d = crate::dist(*p, z);
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                break;
            }
            let scan = |dx: i64, dy: i64, best: &mut Option<(usize, f64)>| {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        let d = crate::dist(self.points[i], z);
                        let better = match *best {
                            None => true,
                            Some((bi, bd)) => d < bd || (d == bd && i < bi),
                        };
                        if better {
                            *best = Some((i, d));
                        }
                    }
                }
            };
            if ring == 0 {
                scan(0, 0, &mut best);
                cells_scanned += 1;
            } else {
                for d in -ring..=ring {
                    scan(d, -ring, &mut best);
                    scan(d, ring, &mut best);
                }
                for d in (1 - ring)..ring {
                    scan(-ring, d, &mut best);
                    scan(ring, d, &mut best);
                }
                cells_scanned += 8 * ring as u64;
            }
            ring += 1;
        }
        best.ok_or(Error::EmptyMeasure)
    }

    /// Indices of the points inside the closed disc `B(center, r)`, ascending.
    pub fn within_disc(&self, center: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let lo = Self::key(center - Point::new(r, r), self.cell);
        let hi = Self::key(center + Point::new(r, r), self.cell);
        // For radii large relative to the cell size a full-bucket sweep beats
        // enumerating the (r/cell)^2 grid cells in the bounding box.
        let cells = (hi.0 - lo.0 + 1) as i128 * (hi.1 - lo.1 + 1) as i128;
        if cells > self.points.len() as i128 {
            for (i, p) in self.points.iter().enumerate() {
                if crate::dist(*p, center) <= r {
                    out.push(i);
                }
            }
            return out;
        }
        for kx in lo.0..=hi.0 {
            for ky in lo.1..=hi.1 {
                if let Some(ids) = self.buckets.get(&(kx, ky)) {
                    for &i in ids {
                        if crate::dist(self.points[i], center) <= r {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Indices of the points inside the half-open square, ascending.
    pub fn within_square(&self, q: &Square) -> Vec<usize> {
        let h = q.side / 2.0;
        let mut out = Vec::new();
        let lo = Self::key(Point::new(q.cx - h, q.cy - h), self.cell);
        let hi = Self::key(Point::new(q.cx + h, q.cy + h), self.cell);
        let cells = (hi.0 - lo.0 + 1) as i128 * (hi.1 - lo.1 + 1) as i128;
        if cells > self.points.len() as i128 {
            for (i, p) in self.points.iter().enumerate() {
                if q.contains(*p) {
                    out.push(i);
                }
            }
            return out;
        }
        for kx in lo.0..=hi.0 {
            for ky in lo.1..=hi.1 {
                if let Some(ids) = self.buckets.get(&(kx, ky)) {
                    for &i in ids {
                        if q.contains(self.points[i]) {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
