//! Discrete approximations of planar measures: generators, regularity
//! probing, blow-up rescaling, and support geometry.
//!
//! A cloud represents its measure by midpoint quadrature, so every integral
//! downstream is a weighted sum over the points.

use crate::spatial::SpatialIndex;
use crate::{Error, Point, Result};
use std::sync::OnceLock;

/// A weighted planar point set with its generation spacing.
pub struct PointCloudMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
    mesh: f64,
    label: String,
    index: OnceLock<SpatialIndex>,
}

/// Probe extrema for the linear-growth bounds `mass(B(z,r)) <= C0 r` (niceness)
/// and `mass(B(z,r)) >= c0 r` on the support (AD regularity).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RegularityReport {
    pub niceness: f64,
    pub ad_constant: f64,
    pub probe_count: usize,
}

/// Deterministic probe plan: ball centers and a radius ladder.
#[derive(Debug, Clone)]
pub struct ProbePlan {
    /// Centers for the upper (niceness) bound: support subsample + ambient grid.
    pub centers: Vec<Point>,
    /// Centers for the lower (AD) bound: support points only.
    pub ad_centers: Vec<Point>,
    /// Shared radius ladder, clamped to `[4*mesh, diameter]`.
    pub radii: Vec<f64>,
}

/// Open-ball membership with a small relative buffer so that probe results
/// survive exact affine rescaling of the cloud.
#[inline]
fn in_ball(p: Point, center: Point, r: f64) -> bool {
    crate::dist(p, center) < r * (1.0 - 1e-12)
}

impl PointCloudMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>, mesh: f64, label: String) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "points and weights must have equal length".into(),
            ));
        }
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::InvalidParameter("mesh must be positive".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "weights must be strictly positive and finite".into(),
            ));
        }
        Ok(PointCloudMeasure {
            points,
            weights,
            mesh,
            label,
            index: OnceLock::new(),
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Shared spatial index over the support (bucket size `2*mesh`).
    pub fn index(&self) -> &SpatialIndex {
        self.index
            .get_or_init(|| SpatialIndex::build(&self.points, 2.0 * self.mesh))
    }

    /// Bounding box as `(min, max)` corners.
    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.re = lo.re.min(p.re);
            lo.im = lo.im.min(p.im);
            hi.re = hi.re.max(p.re);
            hi.im = hi.im.max(p.im);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        crate::dist(lo, hi)
    }

    /// Mass of the (buffered open) ball `B(z, r)`.
    pub fn ball_mass(&self, z: Point, r: f64) -> f64 {
        self.index()
            .within_disc(z, r)
            .into_iter()
            .filter(|&i| in_ball(self.points[i], z, r))
            .map(|i| self.weights[i])
            .sum()
    }

    /// Nearest-neighbor distance from `z` to the support.
    pub fn support_distance(&self, z: Point) -> Result<f64> {
        Ok(self.index().nearest(z)?.1)
    }
}

/// Uniform measure of the given linear density on the segment `[a, b]`,
/// discretized at midpoints of an `h`-partition.
pub fn gen_segment(density: f64, a: Point, b: Point, h: f64) -> Result<PointCloudMeasure> {
    if a == b {
        return Err(Error::DegenerateSegment);
    }
    if !(density > 0.0) {
        return Err(Error::InvalidParameter("density must be positive".into()));
    }
    let len = crate::dist(a, b);
    if !(h > 0.0 && h < len) {
        return Err(Error::InvalidParameter(format!(
            "spacing h = {h} must lie in (0, |b-a| = {len})"
        )));
    }
    let n = (len / h).round().max(1.0) as usize;
    let step = len / n as f64;
    let dir = (b - a) / len;
    let points: Vec<Point> = (0..n)
        .map(|k| a + dir * ((k as f64 + 0.5) * step))
        .collect();
    let weights = vec![density * step; n];
    PointCloudMeasure::new(points, weights, step, format!("segment(d={density},len={len})"))
}

/// `n` equally spaced points on a circle, total mass `density * 2 pi r`.
pub fn gen_circle(density: f64, center: Point, radius: f64, n: usize) -> Result<PointCloudMeasure> {
    if radius <= 0.0 {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if n < 8 {
        return Err(Error::InvalidParameter("need n >= 8 circle points".into()));
    }
    if !(density > 0.0) {
        return Err(Error::InvalidParameter("density must be positive".into()));
    }
    let arc = std::f64::consts::TAU * radius / n as f64;
    let points: Vec<Point> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            center + Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    let weights = vec![density * arc; n];
    PointCloudMeasure::new(points, weights, arc, format!("circle(d={density},r={radius},n={n})"))
}

/// The natural measure on the generation-`n` four-corner Cantor set in the
/// unit square (contraction ratio 1/4): `4^n` points of weight `4^{-n}`.
pub fn gen_cantor(generation: u32) -> Result<PointCloudMeasure> {
    if !(1..=8).contains(&generation) {
        return Err(Error::InvalidParameter(
            "cantor generation must be in 1..=8".into(),
        ));
    }
    let mut corners = vec![Point::new(0.0, 0.0)];
    let mut side = 1.0f64;
    for _ in 0..generation {
        side /= 4.0;
        let mut next = Vec::with_capacity(corners.len() * 4);
        for c in &corners {
            next.push(*c);
            next.push(c + Point::new(3.0 * side, 0.0));
            next.push(c + Point::new(0.0, 3.0 * side));
            next.push(c + Point::new(3.0 * side, 3.0 * side));
        }
        corners = next;
    }
    let half = side / 2.0;
    let points: Vec<Point> = corners
        .into_iter()
        .map(|c| c + Point::new(half, half))
        .collect();
    let w = 0.25f64.powi(generation as i32);
    let weights = vec![w; points.len()];
    PointCloudMeasure::new(points, weights, side, format!("cantor(n={generation})"))
}

/// Arclength-weighted points along the polyline through graph samples
/// `(x_k, y_k)` with strictly increasing `x`.
pub fn gen_lipschitz_graph(f_samples: &[(f64, f64)], density: f64) -> Result<PointCloudMeasure> {
    if f_samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if !(density > 0.0) {
        return Err(Error::InvalidParameter("density must be positive".into()));
    }
    for w in f_samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidParameter("x must be strictly increasing".into()));
        }
        if !w[0].1.is_finite() || !w[1].1.is_finite() {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
    }
    let mut points = Vec::with_capacity(f_samples.len() - 1);
    let mut weights = Vec::with_capacity(f_samples.len() - 1);
    let mut mesh = f64::INFINITY;
    for w in f_samples.windows(2) {
        let a = Point::new(w[0].0, w[0].1);
        let b = Point::new(w[1].0, w[1].1);
        let len = crate::dist(a, b);
        mesh = mesh.min(len);
        points.push((a + b) / 2.0);
        weights.push(density * len);
    }
    for pair in points.windows(2) {
        if crate::dist(pair[0], pair[1]) < mesh / 4.0 {
            return Err(Error::InvalidParameter(
                "consecutive sample midpoints violate the mesh separation".into(),
            ));
        }
    }
    PointCloudMeasure::new(points, weights, mesh, format!("graph(d={density})"))
}

impl ProbePlan {
    /// Default deterministic plan: up to `max_centers` support points by
    /// stride, a coarse ambient grid over the bounding box, and a dyadic
    /// radius ladder from `4*mesh` to the diameter.
    pub fn default_for(mu: &PointCloudMeasure, max_centers: usize) -> Result<ProbePlan> {
        if mu.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let stride = (mu.len() / max_centers.max(1)).max(1);
        let ad_centers: Vec<Point> = mu.points().iter().step_by(stride).copied().collect();
        let (lo, hi) = mu.bbox();
        let mut centers = ad_centers.clone();
        let grid = 9;
        for gx in 0..grid {
            for gy in 0..grid {
                let fx = (gx as f64 + 0.5) / grid as f64;
                let fy = (gy as f64 + 0.5) / grid as f64;
                centers.push(Point::new(
                    lo.re + fx * (hi.re - lo.re),
                    lo.im + fy * (hi.im - lo.im),
                ));
            }
        }
        let diameter = mu.diameter().max(4.0 * mu.mesh());
        let mut radii = Vec::new();
        let mut r = 4.0 * mu.mesh();
        while r <= diameter {
            radii.push(r);
            r *= 2.0;
        }
        if radii.last().map_or(true, |last| *last < diameter) {
            radii.push(diameter);
        }
        Ok(ProbePlan {
            centers,
            ad_centers,
            radii,
        })
    }

    /// The plan mapped through the blow-up `p -> (p - z)/lambda`, for
    /// covariance checks.
    pub fn blowup(&self, z: Point, lambda: f64) -> ProbePlan {
        ProbePlan {
            centers: self.centers.iter().map(|c| (c - z) / lambda).collect(),
            ad_centers: self.ad_centers.iter().map(|c| (c - z) / lambda).collect(),
            radii: self.radii.iter().map(|r| r / lambda).collect(),
        }
    }
}

/// Probe extrema of `mass(B(z,r))/r` over the plan. Radii below `4*mesh` are
/// clamped up; empty balls are skipped on the AD side only when the center
/// carries no nearby mass at all scales (cannot happen for support centers).
pub fn regularity(mu: &PointCloudMeasure, plan: &ProbePlan) -> Result<RegularityReport> {
    if mu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let r_min = 4.0 * mu.mesh();
    let mut niceness = 0.0f64;
    let mut ad = f64::INFINITY;
    let mut probes = 0usize;
    for &r in &plan.radii {
        let r = r.max(r_min);
        for &z in &plan.centers {
            let ratio = mu.ball_mass(z, r) / r;
            niceness = niceness.max(ratio);
            probes += 1;
        }
        for &z in &plan.ad_centers {
            let ratio = mu.ball_mass(z, r) / r;
            ad = ad.min(ratio);
            probes += 1;
        }
    }
    Ok(RegularityReport {
        niceness,
        ad_constant: ad,
        probe_count: probes,
    })
}

/// The blow-up `nu(A) = mu(lambda A + z)/lambda`: points `(p - z)/lambda`,
/// weights `w/lambda`, mesh `h/lambda`.
pub fn blowup(mu: &PointCloudMeasure, z: Point, lambda: f64) -> Result<PointCloudMeasure> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter("blow-up scale must be positive".into()));
    }
    PointCloudMeasure::new(
        mu.points().iter().map(|p| (p - z) / lambda).collect(),
        mu.weights().iter().map(|w| w / lambda).collect(),
        mu.mesh() / lambda,
        format!("{}@blowup(z={z},l={lambda})", mu.label()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn segment_partition() {
        let mu = gen_segment(1.0, pt(0.0, 0.0), pt(1.0, 0.0), 0.25).unwrap();
        assert_eq!(mu.len(), 4);
        let xs: Vec<f64> = mu.points().iter().map(|p| p.re).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(mu.weights().iter().all(|w| (*w - 0.25).abs() < 1e-15));
        assert!((mu.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_density_scaling() {
        let mu = gen_segment(2.0, pt(0.0, 0.0), pt(1.0, 0.0), 0.5).unwrap();
        assert!((mu.mass() - 2.0).abs() < 1e-12);
        assert!(gen_segment(1.0, pt(1.0, 1.0), pt(1.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn segment_niceness_close_to_two() {
        let mu = gen_segment(1.0, pt(-10.0, 0.0), pt(10.0, 0.0), 0.01).unwrap();
        let plan = ProbePlan::default_for(&mu, 64).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        // Brute-force oracle: exact interval-length mass of B(z,r) for a line
        // of density 1 is min(z+10, r) + min(10-z, r) clipped, peaking at 2r.
        assert!((rep.niceness - 2.0).abs() / 2.0 < 0.05, "niceness {}", rep.niceness);
        assert!((rep.ad_constant - 1.0).abs() < 0.1, "ad {}", rep.ad_constant);
        assert!(rep.niceness >= rep.ad_constant && rep.ad_constant > 0.0);
    }

    #[test]
    fn circle_mass_and_ad() {
        let mu = gen_circle(1.0, pt(0.0, 0.0), 1.0, 4).err();
        assert!(mu.is_some(), "n < 8 rejected");
        let mu = gen_circle(1.0, pt(0.0, 0.0), 1.0, 1000).unwrap();
        assert!((mu.mass() - std::f64::consts::TAU).abs() < 1e-9);
        let mu = gen_circle(1.0, pt(0.0, 0.0), 1.0, 10_000).unwrap();
        let plan = ProbePlan::default_for(&mu, 64).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        assert!(rep.ad_constant >= 0.5 && rep.ad_constant <= 2.1, "ad {}", rep.ad_constant);
        assert!(gen_circle(1.0, pt(0.0, 0.0), -1.0, 100).is_err());
    }

    #[test]
    fn cantor_structure() {
        let mu = gen_cantor(1).unwrap();
        assert_eq!(mu.len(), 4);
        assert!(mu.weights().iter().all(|w| (*w - 0.25).abs() < 1e-15));
        for n in 1..=5 {
            let mu = gen_cantor(n).unwrap();
            assert_eq!(mu.len(), 4usize.pow(n));
            assert!((mu.mass() - 1.0).abs() < 1e-12);
            assert!((mu.mesh() - 0.25f64.powi(n as i32)).abs() < 1e-15);
        }
        assert!(gen_cantor(0).is_err());
        assert!(gen_cantor(9).is_err());
    }

    #[test]
    fn cantor_ad_constant_stable_in_generation() {
        // The lower regularity constant should not degrade with depth.
        let mut consts = Vec::new();
        for n in 3..=5 {
            let mu = gen_cantor(n).unwrap();
            let plan = ProbePlan::default_for(&mu, 64).unwrap();
            let rep = regularity(&mu, &plan).unwrap();
            assert!(rep.ad_constant > 0.0);
            consts.push(rep.ad_constant);
        }
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.05, "ad constants {consts:?}");
    }

    #[test]
    fn cantor_regularity_bounds() {
        let mu = gen_cantor(4).unwrap();
        let plan = ProbePlan::default_for(&mu, 128).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        assert!(rep.ad_constant > 0.0);
        assert!(rep.niceness < 8.0, "niceness {}", rep.niceness);
    }

    #[test]
    fn lipschitz_graph_arclength() {
        let flat = gen_lipschitz_graph(&[(0.0, 0.0), (1.0, 0.0)], 1.0).unwrap();
        let seg = gen_segment(1.0, pt(0.0, 0.0), pt(1.0, 0.0), 1.0 - 1e-12).unwrap();
        assert_eq!(flat.len(), seg.len());
        assert!((flat.mass() - seg.mass()).abs() < 1e-12);

        let slope: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 / 100.0, k as f64 / 100.0)).collect();
        let mu = gen_lipschitz_graph(&slope, 1.0).unwrap();
        assert!((mu.mass() - 2.0f64.sqrt()).abs() < 1e-9);

        assert!(gen_lipschitz_graph(&[(0.0, 0.0), (0.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn sawtooth_niceness_bounded() {
        // 1-Lipschitz sawtooth, period 0.2, amplitude 0.1.
        let samples: Vec<(f64, f64)> = (0..=2000)
            .map(|k| {
                let x = k as f64 * 0.01;
                let t = (x / 0.2).fract();
                let y = 0.1 * (1.0 - (2.0 * t - 1.0).abs());
                (x, y)
            })
            .collect();
        let mu = gen_lipschitz_graph(&samples, 1.0).unwrap();
        let plan = ProbePlan::default_for(&mu, 64).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        assert!(rep.niceness <= 4.0, "niceness {}", rep.niceness);
    }

    #[test]
    fn single_point_mass_clamps() {
        let mu = PointCloudMeasure::new(vec![pt(0.0, 0.0)], vec![1.0], 0.1, "atom".into()).unwrap();
        let plan = ProbePlan::default_for(&mu, 8).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        assert!(rep.niceness.is_finite());
        assert!((rep.niceness - 1.0 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn blowup_identity_and_composition() {
        let mu = gen_cantor(3).unwrap();
        let id = blowup(&mu, pt(0.0, 0.0), 1.0).unwrap();
        for (p, q) in mu.points().iter().zip(id.points()) {
            assert_eq!(p, q);
        }
        let z = pt(0.25, 0.5);
        let a = blowup(&blowup(&mu, z, 2.0).unwrap(), pt(0.0, 0.0), 3.0).unwrap();
        let b = blowup(&mu, z, 6.0).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!(crate::dist(*p, *q) < 1e-14);
        }
        assert!((a.mass() - b.mass()).abs() < 1e-14);
        assert!(blowup(&mu, z, 0.0).is_err());
    }

    #[test]
    fn blowup_mass_conservation() {
        let mu = gen_segment(1.0, pt(-3.0, 0.0), pt(5.0, 0.0), 0.05).unwrap();
        let lambda = 0.37;
        let nu = blowup(&mu, pt(1.0, 0.0), lambda).unwrap();
        let expect = mu.mass() / lambda;
        assert!((nu.mass() - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn blowup_regularity_covariance() {
        let mu = gen_cantor(4).unwrap();
        let plan = ProbePlan::default_for(&mu, 64).unwrap();
        let rep = regularity(&mu, &plan).unwrap();
        let z = mu.points()[7];
        let lambda = 0.125;
        let nu = blowup(&mu, z, lambda).unwrap();
        let rep2 = regularity(&nu, &plan.blowup(z, lambda)).unwrap();
        assert!((rep.niceness - rep2.niceness).abs() <= 1e-12 * rep.niceness);
        assert!((rep.ad_constant - rep2.ad_constant).abs() <= 1e-12 * rep.ad_constant);
    }

    #[test]
    fn support_distance_cases() {
        let mu = gen_segment(1.0, pt(-5.0, 0.0), pt(5.0, 0.0), 0.01).unwrap();
        assert_eq!(mu.support_distance(mu.points()[17]).unwrap(), 0.0);
        let d = mu.support_distance(pt(0.0, 1.0)).unwrap();
        assert!((d - 1.0).abs() <= mu.mesh());

        // Center of the generation-1 hole of the depth-3 Cantor cloud.
        let mu = gen_cantor(3).unwrap();
        let d = mu.support_distance(pt(0.5, 0.5)).unwrap();
        let brute = mu
            .points()
            .iter()
            .map(|p| crate::dist(*p, pt(0.5, 0.5)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(d, brute);
        let expect = 0.25 * std::f64::consts::SQRT_2;
        assert!((d - expect).abs() <= 2.0 * mu.mesh(), "d = {d}, expect {expect}");
    }

    #[test]
    fn tail_estimate_holds_with_measured_niceness() {
        // Lemma-style tail bound on a test grid of (r, eps).
        for mu in [
            gen_segment(1.0, pt(-10.0, 0.0), pt(10.0, 0.0), 0.02).unwrap(),
            gen_cantor(4).unwrap(),
        ] {
            let plan = ProbePlan::default_for(&mu, 64).unwrap();
            let c0 = regularity(&mu, &plan).unwrap().niceness;
            for i in 1..=10 {
                let r = 0.05 * 1.7f64.powi(i);
                for j in 1..=10 {
                    let eps = 0.1 * j as f64;
                    let sum: f64 = mu
                        .points()
                        .iter()
                        .zip(mu.weights())
                        .filter(|(p, _)| p.norm() > r)
                        .map(|(p, w)| w / p.norm().powf(1.0 + eps))
                        .sum();
                    let bound = c0 * (1.0 + eps) / eps * r.powf(-eps);
                    assert!(sum <= bound * (1.0 + 1e-9), "r={r} eps={eps}: {sum} > {bound}");
                }
            }
        }
    }

    #[test]
    fn l1_away_from_support_constant_is_stable() {
        // sum |1/(z-p) + 1/p| w <= C |z| / d0 with a stable measured C.
        let fixtures = [
            gen_segment(1.0, pt(1.0, 1.0), pt(21.0, 1.0), 0.02).unwrap(),
            gen_circle(1.0, pt(5.0, 0.0), 1.0, 4000).unwrap(),
        ];
        let mut consts = Vec::new();
        for mu in &fixtures {
            for z in [pt(0.5, -0.5), pt(-1.0, 0.25), pt(0.0, 2.0)] {
                let d0 = mu
                    .support_distance(z)
                    .unwrap()
                    .min(mu.support_distance(pt(0.0, 0.0)).unwrap());
                let sum: f64 = mu
                    .points()
                    .iter()
                    .zip(mu.weights())
                    .map(|(p, w)| (1.0 / (z - p) + 1.0 / p).norm() * w)
                    .sum();
                consts.push(sum * d0 / z.norm());
            }
        }
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        for c in &consts {
            assert!(*c <= hi * 1.0 + 1e-9);
            assert!(hi.is_finite() && *c > 0.0);
        }
        // Stability across fixtures: max within a factor ~ of the median.
        let mut sorted = consts.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = sorted[sorted.len() / 2];
        assert!(hi <= 25.0 * med, "constants spread too wide: {consts:?}");
    }
}
