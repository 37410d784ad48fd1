//! Cauchy-kernel numerics on point clouds: regularized transforms, the
//! antisymmetric bilinear form, operator norms, base-pointed potentials,
//! the constant-value estimate, and reflectionless defects.

use crate::measure::PointCloudMeasure;
use crate::riesz::TestFn;
use crate::{Error, Point, Result};
use rand::Rng;
use rand::SeedableRng;
use rayon::prelude::*;

/// `K(z) = 1/z`.
pub fn kernel(z: Point) -> Result<Point> {
    if z == Point::new(0.0, 0.0) {
        return Err(Error::Precondition("kernel pole at z = 0".into()));
    }
    Ok(z.inv())
}

/// `K_delta(z) = conj(z) / max(delta, |z|)^2`; vanishes at the origin.
pub fn kernel_delta(z: Point, delta: f64) -> Point {
    if z == Point::new(0.0, 0.0) {
        return Point::new(0.0, 0.0);
    }
    let m = delta.max(z.norm());
    z.conj() / (m * m)
}

/// Field values of a transform at a batch of targets.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub targets: Vec<Point>,
    pub values: Vec<Point>,
}

/// Estimate of the constant value of the base-pointed potential on the
/// support, with its variation across probe pairings.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KappaEstimate {
    pub value: Point,
    pub spread: f64,
    pub base_point: Point,
    /// Set when `spread > 0.2 * |value|`: the probes disagree too much for
    /// the estimate to be trusted.
    pub unstable: bool,
}

/// `value(z) = sum_i K_delta(z - p_i) f_i w_i`. Self-interaction is excluded
/// implicitly (`K_delta(0) = 0`), so `delta = 0` is allowed as long as no
/// target coincides with a cloud point.
pub fn transform_delta(
    mu: &PointCloudMeasure,
    f: &[Point],
    delta: f64,
    targets: &[Point],
) -> Result<FieldSample> {
    if f.len() != mu.len() {
        return Err(Error::InvalidParameter(
            "f must be sampled on the cloud".into(),
        ));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter("delta must be >= 0".into()));
    }
    if delta == 0.0 {
        for z in targets {
            if mu.points().contains(z) {
                return Err(Error::OnSupport { dist: 0.0, min: 0.0 });
            }
        }
    }
    let points = mu.points();
    let weights = mu.weights();
    let values: Vec<Point> = targets
        .par_iter()
        .map(|&z| {
            let mut acc = Point::new(0.0, 0.0);
            for (p, (fv, w)) in points.iter().zip(f.iter().zip(weights)) {
                acc += kernel_delta(z - p, delta) * fv * *w;
            }
            acc
        })
        .collect();
    Ok(FieldSample {
        targets: targets.to_vec(),
        values,
    })
}

/// The antisymmetrized pairing
/// `sum_{i<j} K_delta(p_i - p_j) [f_j g_i - f_i g_j] w_i w_j`
/// (equal to the full `1/2 sum_{i != j}` form since the summand is symmetric
/// under swapping i and j). Antisymmetry in (f, g) is structural, hence exact.
pub fn bilinear_i_delta(
    mu: &PointCloudMeasure,
    f: &[Point],
    g: &[Point],
    delta: f64,
) -> Result<Point> {
    if f.len() != mu.len() || g.len() != mu.len() {
        return Err(Error::InvalidParameter(
            "f, g must be sampled on the cloud".into(),
        ));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter("delta must be >= 0".into()));
    }
    let points = mu.points();
    let weights = mu.weights();
    let rows: Vec<Point> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = Point::new(0.0, 0.0);
            for j in (i + 1)..mu.len() {
                let k = kernel_delta(points[i] - points[j], delta);
                acc += k * (f[j] * g[i] - f[i] * g[j]) * (weights[i] * weights[j]);
            }
            acc
        })
        .collect();
    Ok(rows.into_iter().sum())
}

// The dense pass below is the power-iteration hot path. It expands
// kernel_delta in scalars over plain f64 slices (so the inner loop can
// vectorize), using max(delta, |z|)^2 = max(delta^2, |z|^2) to drop the
// square root. The j = i term has zero numerator, so no branch.
//
// The adjoint in the weighted inner product <f,g> = sum conj(f_i) g_i w_i is
// (C* v)_i = sum_{j != i} conj(K_delta(p_j - p_i)) v_j w_j, and
// conj(K_delta(p_j - p_i)) = -(p_i - p_j) / max(delta, |p_i - p_j|)^2,
// i.e. the same pass with input and output conjugated and the result negated.
struct KernelSoa {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ws: Vec<f64>,
}

impl KernelSoa {
    fn new(points: &[Point], weights: &[f64]) -> Self {
        KernelSoa {
            xs: points.iter().map(|p| p.re).collect(),
            ys: points.iter().map(|p| p.im).collect(),
            ws: weights.to_vec(),
        }
    }

    fn apply(&self, delta: f64, v: &[Point], adjoint: bool) -> Vec<Point> {
        let d2 = delta * delta;
        let vr: Vec<f64> = v.iter().map(|z| z.re).collect();
        let vi: Vec<f64> = v
            .iter()
            .map(|z| if adjoint { -z.im } else { z.im })
            .collect();
        let n = self.xs.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (xi, yi) = (self.xs[i], self.ys[i]);
                let (mut ar, mut ai) = (0.0f64, 0.0f64);
                for j in 0..n {
                    let dx = xi - self.xs[j];
                    let dy = yi - self.ys[j];
                    let s = self.ws[j] / (dx * dx + dy * dy).max(d2);
                    ar += s * (dx * vr[j] + dy * vi[j]);
                    ai += s * (dx * vi[j] - dy * vr[j]);
                }
                if adjoint {
                    Point::new(-ar, ai)
                } else {
                    Point::new(ar, ai)
                }
            })
            .collect()
    }
}

fn weighted_norm(v: &[Point], w: &[f64]) -> f64 {
    v.iter()
        .zip(w)
        .map(|(x, w)| x.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// Largest singular value of `f -> (sum_{j != i} K_delta(p_i - p_j) f_j w_j)_i`
/// on the weighted little-l2 space, by power iteration on the adjoint-composed
/// map to relative tolerance 1e-6.
pub fn operator_norm(mu: &PointCloudMeasure, delta: f64) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if mu.len() == 1 {
        return Ok(0.0);
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let soa = KernelSoa::new(mu.points(), mu.weights());
    let weights = mu.weights();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Point> = (0..mu.len())
        .map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let nv = weighted_norm(&v, weights);
    v.iter_mut().for_each(|x| *x /= nv);

    let max_iter = 600;
    let mut sigma = 0.0f64;
    for it in 0..max_iter {
        let cv = soa.apply(delta, &v, false);
        let new_sigma = weighted_norm(&cv, weights);
        let change = (new_sigma - sigma).abs();
        sigma = new_sigma;
        if it > 0 && change <= 1e-6 * sigma.max(1e-300) {
            return Ok(sigma);
        }
        let mut next = soa.apply(delta, &cv, true);
        let nn = weighted_norm(&next, weights);
        if nn == 0.0 {
            return Ok(0.0);
        }
        next.iter_mut().for_each(|x| *x /= nn);
        v = next;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_change: sigma,
    })
}

fn check_off_support(mu: &PointCloudMeasure, z: Point) -> Result<()> {
    let d = mu.support_distance(z)?;
    let min = 2.0 * mu.mesh();
    if d < min {
        return Err(Error::OnSupport { dist: d, min });
    }
    Ok(())
}

/// The base-pointed potential `sum_i [K(z - p_i) - K(z0 - p_i)] w_i`.
/// Both evaluation points must stay at least `2 * mesh` from the support.
pub fn tilde_cauchy_one(mu: &PointCloudMeasure, z: Point, z0: Point) -> Result<Point> {
    check_off_support(mu, z)?;
    check_off_support(mu, z0)?;
    let acc: Vec<Point> = mu
        .points()
        .par_iter()
        .zip(mu.weights())
        .map(|(p, w)| ((z - p).inv() - (z0 - p).inv()) * *w)
        .collect();
    Ok(acc.into_iter().sum())
}

/// The full kernel field `sum_{j != i} K(p_i - p_j) w_j` at each requested
/// support index. Shared precomputation for the on-support pairings below.
fn support_field(mu: &PointCloudMeasure, indices: &[usize]) -> Vec<Point> {
    let points = mu.points();
    let weights = mu.weights();
    indices
        .par_iter()
        .map(|&i| {
            let mut acc = Point::new(0.0, 0.0);
            for j in 0..points.len() {
                if j != i {
                    acc += (points[i] - points[j]).inv() * weights[j];
                }
            }
            acc
        })
        .collect()
}

/// Three-term pairing of the base-pointed potential against a sampled bump
/// `psi` (given as sparse support-index/value pairs), with the cut set a disc
/// `U` and base point `z0`. The three terms are the in-U pairing, the base
/// correction at `z0`, and the out-of-U tail.
fn c1_pairing(
    mu: &PointCloudMeasure,
    psi: &[(usize, f64)],
    u_center: Point,
    u_radius: f64,
    z0: Point,
) -> Point {
    let points = mu.points();
    let weights = mu.weights();
    let in_u: Vec<bool> = points
        .iter()
        .map(|p| crate::dist(*p, u_center) <= u_radius)
        .collect();
    let sum_psi: Point = psi
        .iter()
        .map(|&(i, v)| Point::new(v * weights[i], 0.0))
        .sum();
    let c_chi_at_base: Point = points
        .iter()
        .zip(weights)
        .zip(&in_u)
        .filter(|(_, inu)| **inu)
        .map(|((p, w), _)| (z0 - p).inv() * *w)
        .sum();
    let terms: Vec<Point> = psi
        .par_iter()
        .map(|&(i, v)| {
            let mut near = Point::new(0.0, 0.0);
            let mut tail = Point::new(0.0, 0.0);
            for j in 0..points.len() {
                if in_u[j] {
                    if j != i {
                        near += (points[i] - points[j]).inv() * weights[j];
                    }
                } else {
                    tail += ((points[i] - points[j]).inv() - (z0 - points[j]).inv()) * weights[j];
                }
            }
            (near + tail) * (v * weights[i])
        })
        .collect();
    terms.into_iter().sum::<Point>() - c_chi_at_base * sum_psi
}

fn tent(z: Point, center: Point, radius: f64) -> f64 {
    (1.0 - crate::dist(z, center) / radius).max(0.0)
}

/// Estimate the constant value of the base-pointed potential over a window
/// of the support: average of pairing/mass ratios across three positive
/// bumps and two cut-disc sizes; spread is the worst deviation.
pub fn kappa_estimate(
    mu: &PointCloudMeasure,
    z0: Point,
    window_center: Point,
    window_radius: f64,
) -> Result<KappaEstimate> {
    check_off_support(mu, z0)?;
    if !(window_radius > 0.0) {
        return Err(Error::InvalidParameter("window radius must be positive".into()));
    }
    let inside = mu.index().within_disc(window_center, window_radius / 2.0);
    if inside.is_empty() {
        return Err(Error::NoSupport(
            "window contains no support points".into(),
        ));
    }
    // Three bump centers spread across the window, tents of shrinking radius.
    let centers = [
        inside[0],
        inside[inside.len() / 2],
        inside[inside.len() - 1],
    ];
    let radii = [window_radius / 2.0, window_radius / 4.0, window_radius / 8.0];
    let mut ratios = Vec::with_capacity(6);
    for (c_idx, r) in centers.iter().zip(radii) {
        let center = mu.points()[*c_idx];
        let psi: Vec<(usize, f64)> = mu
            .index()
            .within_disc(center, r)
            .into_iter()
            .map(|i| (i, tent(mu.points()[i], center, r)))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let mass: f64 = psi.iter().map(|&(i, v)| v * mu.weights()[i]).sum();
        if mass <= 0.0 {
            return Err(Error::NoSupport("bump carries no mass".into()));
        }
        for u_factor in [10.0, 20.0] {
            let pairing = c1_pairing(mu, &psi, window_center, u_factor * window_radius, z0);
            ratios.push(pairing / mass);
        }
    }
    let value: Point = ratios.iter().sum::<Point>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r - value).norm())
        .fold(0.0, f64::max);
    Ok(KappaEstimate {
        value,
        spread,
        base_point: z0,
        unstable: spread > 0.2 * value.norm(),
    })
}

/// Worst normalized pairing of the base-pointed potential against a
/// mean-zero dictionary:
/// `max |<potential, psi>| / (||psi||_{L2} * mass(supp psi)^{1/2})`.
///
/// For mean-zero psi the base-point terms of the three-term pairing cancel
/// and the cut disc drops out, leaving the full kernel field paired with psi.
pub fn reflectionless_defect(mu: &PointCloudMeasure, dictionary: &[TestFn]) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(Error::InvalidParameter("empty dictionary".into()));
    }
    let mut needed: Vec<usize> = Vec::new();
    let mut samples: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dictionary.len());
    for psi in dictionary {
        let (c, r) = psi.support_disc;
        let sample: Vec<(usize, f64)> = mu
            .index()
            .within_disc(c, r)
            .into_iter()
            .map(|i| (i, psi.eval(mu.points()[i])))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        needed.extend(sample.iter().map(|&(i, _)| i));
        samples.push(sample);
    }
    needed.sort_unstable();
    needed.dedup();
    let field = support_field(mu, &needed);
    let field_at = |i: usize| field[needed.binary_search(&i).unwrap()];

    let mut worst = 0.0f64;
    for (psi, sample) in dictionary.iter().zip(&samples) {
        let mut pairing = Point::new(0.0, 0.0);
        let mut norm_sq = 0.0;
        for &(i, v) in sample {
            pairing += field_at(i) * (v * mu.weights()[i]);
            norm_sq += v * v * mu.weights()[i];
        }
        let (c, r) = psi.support_disc;
        let supp_mass = mu.ball_mass(c, r * (1.0 + 1e-9));
        if norm_sq <= 0.0 || supp_mass <= 0.0 {
            return Err(Error::NoSupport("dictionary bump misses the cloud".into()));
        }
        worst = worst.max(pairing.norm() / (norm_sq.sqrt() * supp_mass.sqrt()));
    }
    Ok(worst)
}

/// `|v^2 - 2 kappa v|` with `v` the base-pointed potential at `z`.
pub fn resolvent_residual(
    mu: &PointCloudMeasure,
    z: Point,
    kappa: Point,
    z0: Point,
) -> Result<f64> {
    let v = tilde_cauchy_one(mu, z, z0)?;
    Ok((v * v - kappa * 2.0 * v).norm())
}

/// Residual of the algebraic identity
/// `[1/(z-xi)+1/xi][1/(xi-om)+1/om] + [1/(z-om)+1/om][1/(om-xi)+1/xi]
///   = [1/(z-xi)+1/xi][1/(z-om)+1/om]`,
/// normalized by the largest product magnitude so near-degenerate triples
/// report a meaningful number.
pub fn resolve_identity_residual(z: Point, xi: Point, omega: Point) -> Result<f64> {
    let zero = Point::new(0.0, 0.0);
    if z == xi || z == omega || xi == omega || z == zero || xi == zero || omega == zero {
        return Err(Error::Precondition(
            "points must be pairwise distinct and nonzero".into(),
        ));
    }
    let a = (z - xi).inv() + xi.inv();
    let b = (xi - omega).inv() + omega.inv();
    let c = (z - omega).inv() + omega.inv();
    let d = (omega - xi).inv() + xi.inv();
    let lhs = a * b + c * d;
    let rhs = a * c;
    let scale = 1.0f64
        .max((a * b).norm())
        .max((c * d).norm())
        .max(rhs.norm());
    Ok((lhs - rhs).norm() / scale)
}
