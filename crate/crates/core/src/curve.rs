//! Multiscale curve construction: a separated net over the support, star
//! edges at the base scale, component-joining edges at each doubling scale,
//! and a constant-speed parametrization of the doubled-edge Euler walk.

use crate::dyadic::{locate, pow2, Square};
use crate::measure::PointCloudMeasure;
use crate::spatial::SpatialIndex;
use crate::{Error, Point, Result};
use std::collections::{BTreeSet, HashMap, HashSet};

/// Maximal separated subset of the support.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Net {
    pub points: Vec<Point>,
    /// Pairwise lower bound on distances (= tau * l0).
    pub separation: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum EdgeTag {
    Base { q: Square },
    Inductive { q: Square, scale: f64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub tag: EdgeTag,
}

/// Net vertices plus tagged edges accumulated scale by scale.
pub struct NetGraph {
    pub net: Net,
    pub edges: Vec<Edge>,
    index: SpatialIndex,
    seen: HashSet<(usize, usize)>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InductiveEntry {
    pub q: Square,
    pub scale: f64,
    pub added_length: f64,
    pub edge_count: usize,
}

/// Accounting of edge lengths by construction stage.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct LengthLedger {
    pub base_total: f64,
    pub inductive_entries: Vec<InductiveEntry>,
}

impl LengthLedger {
    pub fn inductive_total(&self) -> f64 {
        self.inductive_entries.iter().map(|e| e.added_length).sum()
    }

    pub fn total(&self) -> f64 {
        self.base_total + self.inductive_total()
    }
}

/// Constant-speed parametrization of a closed walk through net vertices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PolylineCurve {
    pub vertex_walk: Vec<usize>,
    pub walk_points: Vec<Point>,
    pub cumulative_length: Vec<f64>,
    pub total: f64,
    pub lip_constant: f64,
}

impl PolylineCurve {
    /// `F(t)` for `t` in [0,1].
    pub fn eval(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        if self.total == 0.0 {
            return self.walk_points[0];
        }
        let s = t * self.total;
        let k = self
            .cumulative_length
            .partition_point(|&c| c <= s)
            .min(self.walk_points.len() - 1);
        if k == 0 {
            return self.walk_points[0];
        }
        let (a, b) = (self.walk_points[k - 1], self.walk_points[k]);
        let (c0, c1) = (self.cumulative_length[k - 1], self.cumulative_length[k]);
        if c1 == c0 {
            return b;
        }
        a + (b - a) * ((s - c0) / (c1 - c0))
    }
}

/// Greedy maximal `tau*l0`-separated subset of the support, taken in point
/// order. Separation and maximality hold by construction.
pub fn build_net(mu: &PointCloudMeasure, tau: f64, l0: f64) -> Result<Net> {
    if !(tau > 0.0 && tau < 1.0 / 16.0) {
        return Err(Error::InvalidParameter("need 0 < tau < 1/16".into()));
    }
    let j = l0.log2().round() as i32;
    if !(l0 > 0.0) || pow2(j) != l0 {
        return Err(Error::InvalidParameter("l0 must be a dyadic fraction".into()));
    }
    let sep = tau * l0;
    if sep < 2.0 * mu.mesh() {
        return Err(Error::ResolutionFloor(format!(
            "net separation {sep} below 2 * mesh = {}",
            2.0 * mu.mesh()
        )));
    }
    let mut points: Vec<Point> = Vec::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell = |p: Point| ((p.re / sep).floor() as i64, (p.im / sep).floor() as i64);
    for &p in mu.points() {
        let (cx, cy) = cell(p);
        let mut clear = true;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    if bucket.iter().any(|&k| crate::dist(points[k], p) < sep) {
                        clear = false;
                        break 'scan;
                    }
                }
            }
        }
        if clear {
            grid.entry((cx, cy)).or_default().push(points.len());
            points.push(p);
        }
    }
    Ok(Net {
        points,
        separation: sep,
        source: mu.label().to_string(),
    })
}

/// Dyadic squares at scale `j` whose triple contains at least one of the
/// given points, in deterministic lattice order.
pub fn squares_with_point_in_triple(points: &[Point], j: i32) -> Vec<Square> {
    let mut keys = BTreeSet::new();
    for &p in points {
        let q = locate(p, j);
        let idx = q.index.unwrap();
        for dx in -1..=1 {
            for dy in -1..=1 {
                keys.insert((idx.kx + dx, idx.ky + dy));
            }
        }
    }
    keys.into_iter()
        .map(|(kx, ky)| Square::from_index(crate::dyadic::DyadicIndex { j, kx, ky }))
        .collect()
}

impl NetGraph {
    pub fn new(net: Net) -> Self {
        let index = SpatialIndex::build(&net.points, net.separation.max(1e-300));
        NetGraph {
            net,
            edges: Vec::new(),
            index,
            seen: HashSet::new(),
        }
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        crate::dist(self.net.points[e.i], self.net.points[e.j])
    }

    fn add_edge(&mut self, i: usize, j: usize, tag: EdgeTag) -> Option<f64> {
        if i == j {
            return None;
        }
        let key = (i.min(j), i.max(j));
        if !self.seen.insert(key) {
            return None;
        }
        let e = Edge { i, j, tag };
        let len = self.edge_length(&e);
        self.edges.push(e);
        Some(len)
    }

    fn vertices_in(&self, sq: &Square) -> Vec<usize> {
        self.index.within_square(sq)
    }

    /// Vertex nearest the square center, lowest index on ties.
    fn fixed_point(&self, members: &[usize], center: Point) -> usize {
        *members
            .iter()
            .min_by(|&&a, &&b| {
                crate::dist(self.net.points[a], center)
                    .partial_cmp(&crate::dist(self.net.points[b], center))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap()
    }

    /// For every scale-`l0` dyadic square whose triple meets the net, a star
    /// from the fixed point to all net points of the triple.
    pub fn base_step(&mut self, l0: f64, ledger: &mut LengthLedger) -> Result<usize> {
        let j = l0.log2().round() as i32;
        if pow2(j) != l0 {
            return Err(Error::InvalidParameter("l0 must be a dyadic fraction".into()));
        }
        let mut added = 0;
        for q in squares_with_point_in_triple(&self.net.points, j) {
            let members = self.vertices_in(&q.dilate(3.0));
            if members.len() < 2 {
                continue;
            }
            let fixed = self.fixed_point(&members, q.center());
            for &m in &members {
                if let Some(len) = self.add_edge(fixed, m, EdgeTag::Base { q }) {
                    ledger.base_total += len;
                    added += 1;
                }
            }
        }
        Ok(added)
    }

    /// Components of the subgraph on the vertices of `7Q`, with edges whose
    /// endpoints both lie in `7Q`; flood fill, deterministic order.
    pub fn subgraph_components(&self, q: &Square) -> Vec<Vec<usize>> {
        let seven = q.dilate(7.0);
        let vertices = self.vertices_in(&seven);
        let local: HashMap<usize, usize> =
            vertices.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (local.get(&e.i), local.get(&e.j)) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut comp = vec![usize::MAX; vertices.len()];
        let mut parts: Vec<Vec<usize>> = Vec::new();
        for start in 0..vertices.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = parts.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            comp[start] = id;
            while let Some(v) = stack.pop() {
                members.push(vertices[v]);
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            parts.push(members);
        }
        parts
    }

    /// One doubling scale: for each dyadic square of side `2l` whose triple
    /// meets at least two components of its 7Q-subgraph, join a lowest-index
    /// representative of each such component to the fixed point of the
    /// triple. Additions are computed against the scale snapshot, then
    /// applied together.
    pub fn inductive_step(&mut self, l: f64, ledger: &mut LengthLedger) -> Result<usize> {
        let j = (2.0 * l).log2().round() as i32;
        if pow2(j) != 2.0 * l {
            return Err(Error::InvalidParameter("scale must be a dyadic fraction".into()));
        }
        let mut proposals: Vec<(usize, usize, Square)> = Vec::new();
        for q in squares_with_point_in_triple(&self.net.points, j) {
            let triple = q.dilate(3.0);
            let in_triple = self.vertices_in(&triple);
            if in_triple.is_empty() {
                continue;
            }
            let comps = self.subgraph_components(&q);
            let meeting: Vec<&Vec<usize>> = comps
                .iter()
                .filter(|c| c.iter().any(|v| triple.contains(self.net.points[*v])))
                .collect();
            if meeting.len() < 2 {
                continue;
            }
            let fixed = self.fixed_point(&in_triple, q.center());
            for c in meeting {
                let rep = *c
                    .iter()
                    .find(|v| triple.contains(self.net.points[**v]))
                    .unwrap();
                proposals.push((rep, fixed, q));
            }
        }
        let mut added = 0;
        for (rep, fixed, q) in proposals {
            if let Some(len) = self.add_edge(rep, fixed, EdgeTag::Inductive { q, scale: l }) {
                added += 1;
                match ledger
                    .inductive_entries
                    .iter_mut()
                    .rev()
                    .find(|e| e.scale == l && e.q.index == q.index)
                {
                    Some(entry) => {
                        entry.added_length += len;
                        entry.edge_count += 1;
                    }
                    None => ledger.inductive_entries.push(InductiveEntry {
                        q,
                        scale: l,
                        added_length: len,
                        edge_count: 1,
                    }),
                }
            }
        }
        Ok(added)
    }

    /// All pairs of distinct components of the `Q`-subgraph that meet the
    /// triple stay at least `l` apart inside the triple.
    pub fn separation_check(&self, q: &Square, l: f64) -> bool {
        let triple = q.dilate(3.0);
        let comps = self.subgraph_components(q);
        let restricted: Vec<Vec<usize>> = comps
            .iter()
            .map(|c| {
                c.iter()
                    .copied()
                    .filter(|v| triple.contains(self.net.points[*v]))
                    .collect()
            })
            .filter(|c: &Vec<usize>| !c.is_empty())
            .collect();
        for a in 0..restricted.len() {
            for b in (a + 1)..restricted.len() {
                for &u in &restricted[a] {
                    for &v in &restricted[b] {
                        if crate::dist(self.net.points[u], self.net.points[v]) < l {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Run the base step then every doubling scale from `l0` up to `l(P)/2`.
pub fn build_graph(
    mu: &PointCloudMeasure,
    p: &Square,
    tau: f64,
    l0: f64,
) -> Result<(NetGraph, LengthLedger)> {
    let depth = (p.side / l0).log2().round() as i32;
    if depth < 1 || (l0 * pow2(depth) - p.side).abs() > 1e-9 * p.side {
        return Err(Error::InvalidParameter(
            "l0 must be l(P) / 2^d for some d >= 1".into(),
        ));
    }
    let net = build_net(mu, tau, l0)?;
    let mut graph = NetGraph::new(net);
    let mut ledger = LengthLedger::default();
    graph.base_step(l0, &mut ledger)?;
    let mut l = l0;
    while l <= p.side / 2.0 * (1.0 + 1e-12) {
        graph.inductive_step(l, &mut ledger)?;
        l *= 2.0;
    }
    Ok((graph, ledger))
}

/// Double every edge of the component of the `P`-subgraph meeting `3P`, take
/// an Eulerian circuit (cycle splicing), and parametrize it at constant
/// speed. The walk length is at most twice the component length and every
/// component vertex is visited.
pub fn euler_walk(g: &NetGraph, p: &Square) -> Result<PolylineCurve> {
    let triple = p.dilate(3.0);
    let comps = g.subgraph_components(p);
    let comp = comps
        .iter()
        .filter(|c| c.iter().any(|v| triple.contains(g.net.points[*v])))
        .max_by_key(|c| c.len())
        .ok_or_else(|| Error::NoSupport("no component meets 3P".into()))?;
    let in_comp: HashSet<usize> = comp.iter().copied().collect();
    let seven = p.dilate(7.0);
    let members: HashSet<usize> = g
        .vertices_in(&seven)
        .into_iter()
        .filter(|v| in_comp.contains(v))
        .collect();
    // Each retained edge twice: all degrees even, circuit exists.
    let mut instances: Vec<(usize, usize)> = Vec::new();
    for e in &g.edges {
        if members.contains(&e.i) && members.contains(&e.j) {
            instances.push((e.i, e.j));
            instances.push((e.i, e.j));
        }
    }
    let start = *comp.first().unwrap();
    if instances.is_empty() {
        return Ok(PolylineCurve {
            vertex_walk: vec![start],
            walk_points: vec![g.net.points[start]],
            cumulative_length: vec![0.0],
            total: 0.0,
            lip_constant: 0.0,
        });
    }
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (id, &(u, v)) in instances.iter().enumerate() {
        incident.entry(u).or_default().push(id);
        incident.entry(v).or_default().push(id);
    }
    for list in incident.values_mut() {
        list.sort_unstable_by_key(|&id| {
            let (u, v) = instances[id];
            (u.min(v), u.max(v), id)
        });
    }
    let mut used = vec![false; instances.len()];
    let mut cursor: HashMap<usize, usize> = HashMap::new();
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(&v) = stack.last() {
        let list = incident.get(&v).map(|l| l.as_slice()).unwrap_or(&[]);
        let c = cursor.entry(v).or_insert(0);
        while *c < list.len() && used[list[*c]] {
            *c += 1;
        }
        if *c == list.len() {
            circuit.push(v);
            stack.pop();
        } else {
            let id = list[*c];
            used[id] = true;
            let (a, b) = instances[id];
            stack.push(if a == v { b } else { a });
        }
    }
    circuit.reverse();
    let walk_points: Vec<Point> = circuit.iter().map(|&v| g.net.points[v]).collect();
    let mut cumulative_length = Vec::with_capacity(circuit.len());
    let mut total = 0.0;
    cumulative_length.push(0.0);
    for w in walk_points.windows(2) {
        total += crate::dist(w[0], w[1]);
        cumulative_length.push(total);
    }
    Ok(PolylineCurve {
        vertex_walk: circuit,
        walk_points,
        cumulative_length,
        total,
        lip_constant: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicIndex;
    use crate::measure::{gen_segment, PointCloudMeasure};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    const TAU: f64 = 1.0 / 32.0;

    fn cloud(points: Vec<Point>, mesh: f64) -> PointCloudMeasure {
        let n = points.len();
        PointCloudMeasure::new(points, vec![1.0; n], mesh, "test".into()).unwrap()
    }

    #[test]
    fn net_separation_and_maximality() {
        let mu = cloud(vec![pt(0.0, 0.0), pt(0.001, 0.0)], 0.0005);
        let net = build_net(&mu, TAU, 1.0).unwrap();
        assert_eq!(net.points.len(), 1);

        let mu = gen_segment(1.0, pt(0.0, 0.0), pt(1.0, 0.0), 0.01).unwrap();
        // tau * l0 = 0.1 with l0 = 4 and tau = 1/40.
        let net = build_net(&mu, 0.025, 4.0).unwrap();
        assert!(
            net.points.len() >= 10 && net.points.len() <= 21,
            "net size {}",
            net.points.len()
        );
        for a in 0..net.points.len() {
            for b in (a + 1)..net.points.len() {
                assert!(crate::dist(net.points[a], net.points[b]) >= net.separation);
            }
        }
        for p in mu.points() {
            let covered = net
                .points
                .iter()
                .any(|q| crate::dist(*p, *q) <= net.separation);
            assert!(covered, "maximality violated at {p}");
        }

        assert!(build_net(&mu, 0.2, 1.0).is_err(), "tau above 1/16");
        assert!(build_net(&mu, TAU, 0.25).is_err(), "separation below 2*mesh");
    }

    #[test]
    fn base_step_builds_connected_stars() {
        let mu = cloud(vec![pt(0.5, 0.5), pt(0.54, 0.5), pt(0.58, 0.5)], 0.005);
        let net = build_net(&mu, TAU, 1.0).unwrap();
        assert_eq!(net.points.len(), 3);
        let mut g = NetGraph::new(net);
        let mut ledger = LengthLedger::default();
        let added = g.base_step(1.0, &mut ledger).unwrap();
        assert!(added >= 2 && added <= 3, "star edges {added}");
        for e in &g.edges {
            assert!(matches!(e.tag, EdgeTag::Base { .. }));
            assert!(g.edge_length(e) <= 3.0 * std::f64::consts::SQRT_2);
        }
        let comps = g.subgraph_components(&locate(pt(0.5, 0.5), 0));
        assert_eq!(comps.len(), 1);
        assert!((ledger.base_total - g.edges.iter().map(|e| g.edge_length(e)).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn single_net_point_has_no_edges() {
        let mu = cloud(vec![pt(0.3, 0.3)], 0.005);
        let p = Square::from_index(DyadicIndex { j: 0, kx: 0, ky: 0 });
        let (g, ledger) = build_graph(&mu, &p, TAU, 0.5).unwrap();
        assert_eq!(g.net.points.len(), 1);
        assert!(g.edges.is_empty());
        assert_eq!(ledger.total(), 0.0);
        let walk = euler_walk(&g, &p).unwrap();
        assert_eq!(walk.vertex_walk, vec![0]);
        assert_eq!(walk.lip_constant, 0.0);
    }

    #[test]
    fn components_match_flood_fill_oracle() {
        // Random geometric graphs; compare against a plain flood fill over
        // the same restricted vertex/edge sets.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..30 {
            let n = 40;
            let points: Vec<Point> = (0..n)
                .map(|_| pt(next() * 8.0 - 4.0, next() * 8.0 - 4.0))
                .collect();
            let net = Net {
                points: points.clone(),
                separation: 0.01,
                source: "rand".into(),
            };
            let mut g = NetGraph::new(net);
            for _ in 0..30 {
                let i = (next() * n as f64) as usize % n;
                let j = (next() * n as f64) as usize % n;
                g.add_edge(
                    i,
                    j,
                    EdgeTag::Inductive {
                        q: locate(pt(0.0, 0.0), 0),
                        scale: 1.0,
                    },
                );
            }
            let q = locate(pt(0.2, 0.2), 0);
            let comps = g.subgraph_components(&q);
            // Oracle: adjacency over the 7Q vertex set, BFS labeling.
            let seven = q.dilate(7.0);
            let verts: Vec<usize> = (0..n).filter(|&v| seven.contains(points[v])).collect();
            let mut label: HashMap<usize, usize> = HashMap::new();
            let mut n_comp = 0;
            for &s in &verts {
                if label.contains_key(&s) {
                    continue;
                }
                let mut frontier = vec![s];
                label.insert(s, n_comp);
                while let Some(v) = frontier.pop() {
                    for e in &g.edges {
                        let other = if e.i == v {
                            e.j
                        } else if e.j == v {
                            e.i
                        } else {
                            continue;
                        };
                        if seven.contains(points[other]) && !label.contains_key(&other) {
                            label.insert(other, n_comp);
                            frontier.push(other);
                        }
                    }
                }
                n_comp += 1;
            }
            assert_eq!(comps.len(), n_comp);
            for c in &comps {
                let l = label[&c[0]];
                assert!(c.iter().all(|v| label[v] == l));
            }
        }
    }

    #[test]
    fn inductive_step_joins_two_singletons() {
        let mu = cloud(vec![pt(0.05, 0.05), pt(0.95, 0.05)], 0.001);
        let net = build_net(&mu, TAU, 0.125).unwrap();
        let mut g = NetGraph::new(net);
        let mut ledger = LengthLedger::default();
        g.base_step(0.125, &mut ledger).unwrap();
        assert!(g.edges.is_empty(), "far singletons get no base edges");
        for l in [0.125, 0.25, 0.5] {
            g.inductive_step(l, &mut ledger).unwrap();
        }
        assert_eq!(g.edges.len(), 1);
        let e = &g.edges[0];
        match &e.tag {
            EdgeTag::Inductive { scale, .. } => {
                assert!(g.edge_length(e) <= 6.0 * std::f64::consts::SQRT_2 * scale);
            }
            other => panic!("unexpected tag {other:?}"),
        }
        assert_eq!(ledger.inductive_entries.len(), 1);
        assert_eq!(ledger.inductive_entries[0].edge_count, 1);
    }

    #[test]
    fn build_graph_segment_connects_and_walk_covers() {
        let mu = gen_segment(1.0, pt(0.5, 0.5), pt(7.5, 0.5), 0.002).unwrap();
        let p = Square::from_index(DyadicIndex { j: 3, kx: 0, ky: 0 });
        let l0 = 0.25;
        let (g, ledger) = build_graph(&mu, &p, TAU, l0).unwrap();
        assert!(!g.edges.is_empty());

        // Ledger totals are an exact re-summation of the edge list.
        let base: f64 = g
            .edges
            .iter()
            .filter(|e| matches!(e.tag, EdgeTag::Base { .. }))
            .map(|e| g.edge_length(e))
            .sum();
        let inductive: f64 = g
            .edges
            .iter()
            .filter(|e| matches!(e.tag, EdgeTag::Inductive { .. }))
            .map(|e| g.edge_length(e))
            .sum();
        assert!((ledger.base_total - base).abs() <= 1e-9 * base.max(1.0));
        assert!((ledger.inductive_total() - inductive).abs() <= 1e-9 * inductive.max(1.0));

        // Every inductive edge honors the length cap for its scale.
        for e in &g.edges {
            if let EdgeTag::Inductive { scale, .. } = e.tag {
                assert!(g.edge_length(e) <= 6.0 * std::f64::consts::SQRT_2 * scale + 1e-12);
            }
        }

        // One component meets 3P and its walk covers it, each edge twice.
        let triple = p.dilate(3.0);
        let comps = g.subgraph_components(&p);
        let meeting: Vec<_> = comps
            .iter()
            .filter(|c| c.iter().any(|v| triple.contains(g.net.points[*v])))
            .collect();
        assert_eq!(meeting.len(), 1);
        let walk = euler_walk(&g, &p).unwrap();
        let visited: HashSet<usize> = walk.vertex_walk.iter().copied().collect();
        for v in meeting[0] {
            assert!(visited.contains(v), "vertex {v} missed");
        }
        let mut traversals: HashMap<(usize, usize), usize> = HashMap::new();
        for w in walk.vertex_walk.windows(2) {
            *traversals
                .entry((w[0].min(w[1]), w[0].max(w[1])))
                .or_insert(0) += 1;
        }
        for (_, count) in traversals {
            assert!(count <= 2, "edge traversed {count} times");
        }
        assert_eq!(walk.lip_constant, walk.total);

        // Lipschitz property of the constant-speed parametrization.
        for a in 0..40 {
            for b in (a + 1)..=40 {
                let (s, t) = (a as f64 / 40.0, b as f64 / 40.0);
                let d = crate::dist(walk.eval(s), walk.eval(t));
                assert!(d <= walk.lip_constant * (t - s) * (1.0 + 1e-9));
            }
        }

        // Separation holds at every constructed scale.
        let mut l = l0;
        while l <= p.side / 2.0 {
            for q in squares_with_point_in_triple(&g.net.points, (2.0 * l).log2() as i32) {
                assert!(g.separation_check(&q, l), "separation fails at scale {l}");
            }
            l *= 2.0;
        }
    }

    #[test]
    fn separation_check_negative_control() {
        // Path a-b-c with the b-c edge removed: components {a,b} and {c}
        // sit closer than the probe scale.
        let points = vec![pt(0.5, 0.5), pt(0.6, 0.5), pt(0.7, 0.5)];
        let net = Net {
            points,
            separation: 0.05,
            source: "broken".into(),
        };
        let q = locate(pt(0.5, 0.5), 0);
        let mut g = NetGraph::new(net);
        g.add_edge(0, 1, EdgeTag::Base { q });
        g.add_edge(1, 2, EdgeTag::Base { q });
        assert!(g.separation_check(&q, 0.5));
        g.edges.pop();
        assert!(!g.separation_check(&q, 0.5));
    }
}
