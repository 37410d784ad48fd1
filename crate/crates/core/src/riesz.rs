//! Mean-zero Lipschitz test functions built from tent pairs, Gram matrices
//! of their L2 pairings, and the scale-normalized window coefficient theta.

use crate::dyadic::Square;
use crate::measure::PointCloudMeasure;
use crate::{Error, Point, Result};
use std::collections::HashSet;

/// Defaults used when a window sweep does not expose the knobs.
pub const DEFAULT_A: f64 = 2.0;
pub const DEFAULT_A_PRIME: f64 = 4.0;
pub const DEFAULT_PSI_COUNT: usize = 4;
pub const DEFAULT_F_CANDIDATES: usize = 3;

/// A finite combination of tent functions `t(w) = max(0, 1 - |w-c|/r)`,
/// mean-zero against one named measure.
#[derive(Debug, Clone)]
pub struct TestFn {
    /// (center, radius, coefficient) per tent.
    pub atoms: Vec<(Point, f64, f64)>,
    pub lip_bound: f64,
    pub support_disc: (Point, f64),
    pub mean_zero_wrt: String,
}

/// Estimate of the window coefficient: min over a cut-disc ladder of the max
/// normalized pairing over the local family. An upper proxy for the inf and
/// a lower proxy for the sup, so always reported as an estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThetaReport {
    pub square: Square,
    pub theta_upper: f64,
    pub psi_index: usize,
    pub f_radius: f64,
}

fn tent(z: Point, center: Point, radius: f64) -> f64 {
    (1.0 - crate::dist(z, center) / radius).max(0.0)
}

impl TestFn {
    pub fn eval(&self, z: Point) -> f64 {
        self.atoms
            .iter()
            .map(|&(c, r, coef)| coef * tent(z, c, r))
            .sum()
    }

    /// Nonzero samples on the cloud as (index, value) pairs.
    pub fn sample(&self, mu: &PointCloudMeasure) -> Vec<(usize, f64)> {
        let (c, r) = self.support_disc;
        mu.index()
            .within_disc(c, r)
            .into_iter()
            .map(|i| (i, self.eval(mu.points()[i])))
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }

    /// The function transported by the blow-up `p -> (p - z)/lambda`;
    /// values at mapped points are preserved, the Lipschitz bound scales.
    pub fn blowup(&self, z: Point, lambda: f64) -> TestFn {
        TestFn {
            atoms: self
                .atoms
                .iter()
                .map(|&(c, r, coef)| ((c - z) / lambda, r / lambda, coef))
                .collect(),
            lip_bound: self.lip_bound * lambda,
            support_disc: ((self.support_disc.0 - z) / lambda, self.support_disc.1 / lambda),
            mean_zero_wrt: format!("{}@blowup", self.mean_zero_wrt),
        }
    }

    /// Check the three contract invariants against a cloud: support
    /// containment, sampled Lipschitz bound, and mean-zero residual.
    pub fn validate(&self, mu: &PointCloudMeasure) -> Result<()> {
        let (sc, sr) = self.support_disc;
        for &(c, r, _) in &self.atoms {
            if crate::dist(c, sc) + r > sr * (1.0 + 1e-9) {
                return Err(Error::Precondition("atom escapes the support disc".into()));
            }
        }
        // Lipschitz bound on a sample grid plus the support points.
        let mut samples: Vec<Point> = Vec::new();
        let g = 20;
        for gx in 0..=g {
            for gy in 0..=g {
                samples.push(Point::new(
                    sc.re - sr + 2.0 * sr * gx as f64 / g as f64,
                    sc.im - sr + 2.0 * sr * gy as f64 / g as f64,
                ));
            }
        }
        let support = mu.index().within_disc(sc, sr);
        let stride = (support.len() / 60).max(1);
        samples.extend(support.iter().step_by(stride).map(|&i| mu.points()[i]));
        for a in 0..samples.len() {
            for b in (a + 1)..samples.len() {
                let d = crate::dist(samples[a], samples[b]);
                if d == 0.0 {
                    continue;
                }
                let dv = (self.eval(samples[a]) - self.eval(samples[b])).abs();
                if dv > self.lip_bound * d * (1.0 + 1e-9) {
                    return Err(Error::Precondition(format!(
                        "Lipschitz bound violated: {dv} > {} * {d}",
                        self.lip_bound
                    )));
                }
            }
        }
        let mut mean = 0.0;
        let mut abs = 0.0;
        for (i, v) in self.sample(mu) {
            mean += v * mu.weights()[i];
            abs += v.abs() * mu.weights()[i];
        }
        if mean.abs() > 1e-10 * abs {
            return Err(Error::Precondition(format!(
                "mean-zero residual {mean} exceeds 1e-10 * {abs}"
            )));
        }
        Ok(())
    }
}

/// Two-tent mean-zero function: `s (t1 - lambda t2)` with tents at two
/// support points, `lambda` balancing the masses and `s` pinning the
/// Lipschitz budget `sum |coef|/r` exactly to `lip_target`.
fn two_tent(
    mu: &PointCloudMeasure,
    c1: usize,
    c2: usize,
    radius: f64,
    lip_target: f64,
    support_disc: (Point, f64),
) -> Result<TestFn> {
    let tent_mass = |c: usize| -> f64 {
        let center = mu.points()[c];
        mu.index()
            .within_disc(center, radius)
            .into_iter()
            .map(|i| tent(mu.points()[i], center, radius) * mu.weights()[i])
            .sum()
    };
    let m1 = tent_mass(c1);
    let m2 = tent_mass(c2);
    if m1 <= 0.0 || m2 <= 0.0 {
        return Err(Error::NoSupport("tent carries no mass".into()));
    }
    let lambda = m1 / m2;
    let s = radius * lip_target / (1.0 + lambda);
    Ok(TestFn {
        atoms: vec![
            (mu.points()[c1], radius, s),
            (mu.points()[c2], radius, -s * lambda),
        ],
        lip_bound: lip_target,
        support_disc,
        mean_zero_wrt: mu.label().to_string(),
    })
}

fn pick_pairs(candidates: &[usize], k: usize) -> Vec<(usize, usize)> {
    let len = candidates.len();
    let stride = (len / k.max(1)).max(1);
    (0..k)
        .map(|m| {
            let i = (m * stride) % len;
            let mut j = (i + (len / 2).max(1)) % len;
            if j == i {
                j = (i + 1) % len;
            }
            (candidates[i], candidates[j])
        })
        .collect()
}

/// Local family for a window: `k` two-tent functions with centers at
/// support points of `B(z_Q, A l(Q)/2)`, tent radius `A l(Q)/4`, Lipschitz
/// budget exactly `l(Q)^{-3/2}`, supported in `B(z_Q, A l(Q))`.
pub fn make_psi_family(
    mu: &PointCloudMeasure,
    q: &Square,
    a: f64,
    k: usize,
) -> Result<Vec<TestFn>> {
    if !(a > 1.0) {
        return Err(Error::InvalidParameter("need A > 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need k >= 1".into()));
    }
    let l = q.side;
    let candidates = mu.index().within_disc(q.center(), a * l / 2.0);
    if candidates.len() < 2 {
        return Err(Error::NoSupport(format!(
            "fewer than two support points in B(z_Q, {})",
            a * l / 2.0
        )));
    }
    let lip = l.powf(-1.5);
    pick_pairs(&candidates, k)
        .into_iter()
        .map(|(i, j)| two_tent(mu, i, j, a * l / 4.0, lip, (q.center(), a * l)))
        .collect()
}

/// Global family: as `make_psi_family` with support disc `B(0, A)` and
/// Lipschitz budget exactly 1.
pub fn make_phi_family(nu: &PointCloudMeasure, a: f64, k: usize) -> Result<Vec<TestFn>> {
    if !(a > 1.0) {
        return Err(Error::InvalidParameter("need A > 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need k >= 1".into()));
    }
    let origin = Point::new(0.0, 0.0);
    let candidates = nu.index().within_disc(origin, a / 2.0);
    if candidates.len() < 2 {
        return Err(Error::NoSupport("fewer than two support points in B(0, A/2)".into()));
    }
    pick_pairs(&candidates, k)
        .into_iter()
        .map(|(i, j)| two_tent(nu, i, j, a / 4.0, 1.0, (origin, a)))
        .collect()
}

/// Matrix of pairings `<psi_i, psi_j>` under the weighted sum.
pub fn gram(mu: &PointCloudMeasure, fns: &[TestFn]) -> Vec<Vec<f64>> {
    let samples: Vec<Vec<(usize, f64)>> = fns.iter().map(|f| f.sample(mu)).collect();
    let mut g = vec![vec![0.0; fns.len()]; fns.len()];
    for i in 0..fns.len() {
        // Dense scatter of psi_i, then sparse dot with each psi_j.
        let mut dense = std::collections::HashMap::new();
        for &(idx, v) in &samples[i] {
            dense.insert(idx, v);
        }
        for j in i..fns.len() {
            let mut acc = 0.0;
            for &(idx, v) in &samples[j] {
                if let Some(u) = dense.get(&idx) {
                    acc += u * v * mu.weights()[idx];
                }
            }
            g[i][j] = acc;
            g[j][i] = acc;
        }
    }
    g
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration (relative tolerance 1e-8).
pub fn gram_norm(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 % 7.0) / 7.0).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0f64;
    for _ in 0..100_000 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += g[i][j] * v[j];
            }
        }
        let new = norm(&w);
        if new == 0.0 {
            return 0.0;
        }
        let done = (new - lambda).abs() <= 1e-8 * new.max(1e-300);
        lambda = new;
        w.iter_mut().for_each(|x| *x /= new);
        v = w;
        if done {
            break;
        }
    }
    lambda
}

/// Pairing `sum_i psi_i w_i sum_{j != i, p_j in F} K(p_i - p_j) w_j`
/// of the transform of an indicator against a sampled bump.
fn indicator_pairing(
    mu: &PointCloudMeasure,
    psi: &[(usize, f64)],
    f_center: Point,
    f_radius: f64,
) -> Point {
    let members = mu.index().within_disc(f_center, f_radius);
    let mut acc = Point::new(0.0, 0.0);
    for &(i, v) in psi {
        let mut field = Point::new(0.0, 0.0);
        for &j in &members {
            if j != i {
                field += (mu.points()[i] - mu.points()[j]).inv() * mu.weights()[j];
            }
        }
        acc += field * (v * mu.weights()[i]);
    }
    acc
}

/// Window coefficient estimate for `Q`: cut discs `B(z_Q, A' l(Q) 2^m)`,
/// family from `make_psi_family`, normalization `l(Q)^{-1/2}`.
pub fn theta(
    mu: &PointCloudMeasure,
    q: &Square,
    a: f64,
    a_prime: f64,
    psi_count: usize,
    f_candidates: usize,
) -> Result<ThetaReport> {
    if !(a_prime >= a && a > 1.0) {
        return Err(Error::InvalidParameter("need A' >= A > 1".into()));
    }
    if f_candidates == 0 {
        return Err(Error::InvalidParameter("need at least one cut disc".into()));
    }
    let psis = make_psi_family(mu, q, a, psi_count)?;
    let samples: Vec<Vec<(usize, f64)>> = psis.iter().map(|p| p.sample(mu)).collect();
    let scale = q.side.powf(-0.5);
    let mut best: Option<(f64, usize, f64)> = None;
    for m in 0..f_candidates {
        let radius = a_prime * q.side * 2f64.powi(m as i32);
        let mut sup = (0.0f64, 0usize);
        for (idx, psi) in samples.iter().enumerate() {
            let val = scale * indicator_pairing(mu, psi, q.center(), radius).norm();
            if val > sup.0 {
                sup = (val, idx);
            }
        }
        if best.as_ref().map_or(true, |b| sup.0 < b.0) {
            best = Some((sup.0, sup.1, radius));
        }
    }
    let (theta_upper, psi_index, f_radius) = best.unwrap();
    Ok(ThetaReport {
        square: q.clone(),
        theta_upper,
        psi_index,
        f_radius,
    })
}

/// `sum l(Q) / l(P)` over dyadic sub-squares (through `depth` levels,
/// including `P`) whose coefficient estimate exceeds `gamma`. Squares whose
/// window holds fewer than two support points are skipped.
pub fn theta_carleson(
    mu: &PointCloudMeasure,
    p: &Square,
    gamma: f64,
    depth: u32,
) -> Result<f64> {
    let index = p.index.ok_or_else(|| {
        Error::InvalidParameter("the root square must carry a dyadic index".into())
    })?;
    if p.side * 0.5f64.powi(depth as i32) < 8.0 * mu.mesh() {
        return Err(Error::ResolutionFloor(format!(
            "depth {depth} drops below 8 * mesh = {}",
            8.0 * mu.mesh()
        )));
    }
    let inside = mu.index().within_square(p);
    let mut total = 0.0;
    for d in 0..=depth {
        let j = index.j - d as i32;
        let mut seen = HashSet::new();
        for &i in &inside {
            let q = crate::dyadic::locate(mu.points()[i], j);
            let qi = q.index.unwrap();
            if !seen.insert((qi.kx, qi.ky)) {
                continue;
            }
            match theta(mu, &q, DEFAULT_A, DEFAULT_A_PRIME, DEFAULT_PSI_COUNT, DEFAULT_F_CANDIDATES)
            {
                Ok(rep) if rep.theta_upper > gamma => total += q.side,
                Ok(_) => {}
                Err(Error::NoSupport(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(total / p.side)
}
