//! Graph substrate: distances, geodesics, hyperbolicity estimation,
//! quasi-geodesic and oriented-closeness predicates.
//!
//! All graphs are finite, undirected, unweighted (unit edge lengths) and
//! carry the path metric. A [`Space`] may be flagged as a *truncation* of
//! an infinite graph; distances computed inside a truncation are upper
//! bounds for the true distances, and every consumer of a truncated space
//! is expected to stamp its outputs with the truncation parameter.

use std::collections::VecDeque;
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distance value marking an unreachable vertex in raw distance tables.
pub const UNREACHABLE: u32 = u32::MAX;

/// Stable integer identifier of a vertex inside one [`Space`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Marker that a space is a finite truncation of an infinite graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// What was truncated (e.g. `"farey-denominator-bound"`, `"tree-hull"`).
    pub kind: String,
    /// The truncation parameter (denominator bound, hull radius, …).
    pub parameter: i64,
}

/// A finite undirected graph with unit edge lengths and labeled vertices.
///
/// Invariants (enforced by [`Space::new`]): no self-loops, no duplicate
/// edges, all endpoints listed. Adjacency lists are sorted by vertex id,
/// which drives every deterministic tie-break downstream. Immutable after
/// construction; all operations are pure reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    labels: Vec<String>,
    adjacency: Vec<Vec<VertexId>>,
    truncation: Option<Truncation>,
    metadata: String,
}

impl Space {
    pub fn new(
        labels: Vec<String>,
        edges: &[(u32, u32)],
        truncation: Option<Truncation>,
        metadata: impl Into<String>,
    ) -> Result<Space> {
        let n = labels.len() as u32;
        let mut adjacency: Vec<Vec<VertexId>> = vec![Vec::new(); labels.len()];
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Invalid(format!(
                    "edge ({u},{v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Invalid(format!("self-loop at vertex {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::Invalid(format!("duplicate edge ({},{})", key.0, key.1)));
            }
            adjacency[u as usize].push(VertexId(v));
            adjacency[v as usize].push(VertexId(u));
        }
        for list in &mut adjacency {
            list.sort();
        }
        Ok(Space {
            labels,
            adjacency,
            truncation,
            metadata: metadata.into(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbors of `v`, sorted ascending by id.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.idx()]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency[u.idx()].binary_search(&v).is_ok()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v.idx()]
    }

    /// Id of the vertex carrying `label`, if present (linear scan).
    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| VertexId(i as u32))
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.idx() < self.labels.len()
    }

    /// All edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            let u = VertexId(u as u32);
            for &v in nbrs {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Serialize to the interchange JSON document (ids ascending,
    /// edges ascending; byte-deterministic).
    pub fn to_json(&self) -> String {
        let doc = SpaceDoc {
            vertices: self
                .labels
                .iter()
                .enumerate()
                .map(|(i, label)| VertexDoc {
                    id: i as u32,
                    label: label.clone(),
                })
                .collect(),
            edges: self.edges().iter().map(|&(u, v)| [u.0, v.0]).collect(),
            truncation: self.truncation.clone(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("space serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Space> {
        let doc: SpaceDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("space JSON: {e}")))?;
        for (i, v) in doc.vertices.iter().enumerate() {
            if v.id != i as u32 {
                return Err(Error::Invalid(format!(
                    "vertex ids must be 0..n ascending; found {} at position {i}",
                    v.id
                )));
            }
        }
        let labels = doc.vertices.into_iter().map(|v| v.label).collect();
        let edges: Vec<(u32, u32)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        Space::new(labels, &edges, doc.truncation, doc.metadata)
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<[u32; 2]>,
    truncation: Option<Truncation>,
    metadata: String,
}

#[derive(Serialize, Deserialize)]
struct VertexDoc {
    id: u32,
    label: String,
}

/// A finite walk: a vertex sequence in which consecutive vertices are
/// adjacent. Vertices may repeat (these are walks, not simple paths —
/// the detour arguments for counting functionals need backtracking).
/// The *length* of a walk is its number of steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Walk {
    vertices: Vec<VertexId>,
}

impl Walk {
    /// Validated constructor: nonempty, consecutive vertices adjacent.
    pub fn new(space: &Space, vertices: Vec<VertexId>) -> Result<Walk> {
        if vertices.is_empty() {
            return Err(Error::Invalid("walk needs at least one vertex".into()));
        }
        for v in &vertices {
            if !space.contains(*v) {
                return Err(Error::Invalid(format!("walk vertex {v} not in space")));
            }
        }
        for pair in vertices.windows(2) {
            if !space.has_edge(pair[0], pair[1]) {
                return Err(Error::Invalid(format!(
                    "walk step {}-{} is not an edge",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Walk { vertices })
    }

    /// The zero-step walk at `v`.
    pub fn single(v: VertexId) -> Walk {
        Walk { vertices: vec![v] }
    }

    /// Number of steps (edges), which is the walk's length.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("walks are nonempty")
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn reverse(&self) -> Walk {
        Walk {
            vertices: self.vertices.iter().rev().copied().collect(),
        }
    }

    /// Concatenate with a walk starting where this one ends.
    pub fn join(&self, next: &Walk) -> Result<Walk> {
        if self.end() != next.start() {
            return Err(Error::Invalid(format!(
                "cannot join walks: {} != {}",
                self.end(),
                next.start()
            )));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&next.vertices[1..]);
        Ok(Walk { vertices })
    }
}

/// Quasi-geodesic parameters `(K, L)` plus a closeness threshold `C`.
///
/// Exact rational constants: the walk predicates never round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QGParams {
    pub k: Rational64,
    pub l: Rational64,
    pub c: u32,
}

impl QGParams {
    pub fn new(k: Rational64, l: Rational64, c: u32) -> Result<QGParams> {
        if k < Rational64::from_integer(1) {
            return Err(Error::Invalid(format!("quasi-geodesic K = {k} must be >= 1")));
        }
        if l < Rational64::zero() {
            return Err(Error::Invalid(format!("quasi-geodesic L = {l} must be >= 0")));
        }
        Ok(QGParams { k, l, c })
    }
}

/// Distances from `source` to every vertex ([`UNREACHABLE`] where there is
/// no walk). Plain breadth-first search.
pub fn distances_from(space: &Space, source: VertexId) -> Vec<u32> {
    distances_from_set(space, std::slice::from_ref(&source))
}

/// Multi-source BFS: distance from each vertex to the nearest source.
pub fn distances_from_set(space: &Space, sources: &[VertexId]) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; space.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s.idx()] == UNREACHABLE {
            dist[s.idx()] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u.idx()];
        for &v in space.neighbors(u) {
            if dist[v.idx()] == UNREACHABLE {
                dist[v.idx()] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact shortest-walk length between `u` and `v`.
pub fn bfs_distance(space: &Space, u: VertexId, v: VertexId) -> Result<u32> {
    let d = distances_from(space, u)[v.idx()];
    if d == UNREACHABLE {
        Err(Error::Disconnected(u.0, v.0))
    } else {
        Ok(d)
    }
}

/// A geodesic from `u` to `v` with deterministic tie-breaks: at each step,
/// move to the least-id neighbor that decreases the distance to `v`.
pub fn geodesic(space: &Space, u: VertexId, v: VertexId) -> Result<Walk> {
    let dist_to_v = distances_from(space, v);
    if dist_to_v[u.idx()] == UNREACHABLE {
        return Err(Error::Disconnected(u.0, v.0));
    }
    Ok(descend(space, u, &dist_to_v))
}

/// Walk from `u` down a precomputed distance field to its zero vertex,
/// choosing the least-id descending neighbor each step.
fn descend(space: &Space, u: VertexId, dist_to_target: &[u32]) -> Walk {
    let mut vertices = vec![u];
    let mut cur = u;
    while dist_to_target[cur.idx()] > 0 {
        let next = space
            .neighbors(cur)
            .iter()
            .copied()
            .find(|w| dist_to_target[w.idx()] == dist_to_target[cur.idx()] - 1)
            .expect("distance field must descend to its source");
        vertices.push(next);
        cur = next;
    }
    Walk { vertices }
}

/// Which triangles `delta_estimate` should examine.
#[derive(Debug, Clone)]
pub enum TripleSample {
    /// Every unordered triple of vertices (exact thin-triangle constant of
    /// the finite space). Budgeted: available for spaces up to 2048
    /// vertices.
    All,
    /// An explicit list of triples.
    Triples(Vec<[VertexId; 3]>),
}

const APSP_VERTEX_LIMIT: usize = 2048;

/// Least δ (over the sampled triangles, with BFS geodesic sides) such that
/// each side of each triangle lies in the δ-neighborhood of the union of
/// the other two sides.
pub fn delta_estimate(space: &Space, sample: &TripleSample) -> Result<u32> {
    match sample {
        TripleSample::All => {
            let n = space.vertex_count();
            if n > APSP_VERTEX_LIMIT {
                return Err(Error::BudgetExceeded {
                    context: "delta_estimate over all triples",
                    budget: APSP_VERTEX_LIMIT,
                    unit: "vertices",
                });
            }
            let apsp = all_pairs_distances(space)?;
            let mut delta = 0u32;
            let ids: Vec<VertexId> = (0..n as u32).map(VertexId).collect();
            for (i, &x) in ids.iter().enumerate() {
                for (j, &y) in ids.iter().enumerate().skip(i) {
                    for &z in ids.iter().skip(j) {
                        delta = delta.max(triangle_thinness_apsp(space, &apsp, x, y, z));
                    }
                }
            }
            Ok(delta)
        }
        TripleSample::Triples(triples) => {
            let mut delta = 0u32;
            for &[x, y, z] in triples {
                delta = delta.max(triangle_thinness_bfs(space, x, y, z)?);
            }
            Ok(delta)
        }
    }
}

/// Full distance matrix (BFS from every vertex). Errors on disconnection
/// so callers can rely on finite entries.
fn all_pairs_distances(space: &Space) -> Result<Vec<Vec<u32>>> {
    let n = space.vertex_count();
    let mut apsp = Vec::with_capacity(n);
    for u in 0..n as u32 {
        let d = distances_from(space, VertexId(u));
        if let Some(v) = d.iter().position(|&x| x == UNREACHABLE) {
            return Err(Error::Disconnected(u, v as u32));
        }
        apsp.push(d);
    }
    Ok(apsp)
}

fn triangle_thinness_apsp(space: &Space, apsp: &[Vec<u32>], x: VertexId, y: VertexId, z: VertexId) -> u32 {
    let side = |a: VertexId, b: VertexId| descend(space, a, &apsp[b.idx()]);
    let sides = [side(x, y), side(y, z), side(x, z)];
    let mut delta = 0u32;
    for i in 0..3 {
        let others: Vec<VertexId> = (0..3)
            .filter(|&j| j != i)
            .flat_map(|j| sides[j].vertices().iter().copied())
            .collect();
        for &p in sides[i].vertices() {
            let nearest = others
                .iter()
                .map(|&q| apsp[p.idx()][q.idx()])
                .min()
                .expect("triangle sides are nonempty");
            delta = delta.max(nearest);
        }
    }
    delta
}

fn triangle_thinness_bfs(space: &Space, x: VertexId, y: VertexId, z: VertexId) -> Result<u32> {
    let to_y = distances_from(space, y);
    let to_z = distances_from(space, z);
    for (target, d) in [(y, &to_y), (z, &to_z)] {
        if d[x.idx()] == UNREACHABLE {
            return Err(Error::Disconnected(x.0, target.0));
        }
    }
    if to_z[y.idx()] == UNREACHABLE {
        return Err(Error::Disconnected(y.0, z.0));
    }
    let sides = [
        descend(space, x, &to_y),
        descend(space, y, &to_z),
        descend(space, x, &to_z),
    ];
    let mut delta = 0u32;
    for i in 0..3 {
        let others: Vec<VertexId> = (0..3)
            .filter(|&j| j != i)
            .flat_map(|j| sides[j].vertices().iter().copied())
            .collect();
        let near = distances_from_set(space, &others);
        for &p in sides[i].vertices() {
            delta = delta.max(near[p.idx()]);
        }
    }
    Ok(delta)
}

/// Check the (K, L)-quasi-geodesic inequalities for every index pair along
/// the walk: `(j−i)/K − L ≤ d(w_i, w_j) ≤ K(j−i) + L`, exact rational
/// arithmetic. Vertices in different components fail the test (distance
/// +∞ violates the upper bound only if finite bounds are exceeded — for a
/// valid walk all pairs are connected through the walk itself).
pub fn is_quasigeodesic(space: &Space, walk: &Walk, params: &QGParams) -> bool {
    let vs = walk.vertices();
    // One BFS per distinct walk vertex, computed lazily.
    let mut dist_cache: std::collections::BTreeMap<VertexId, Vec<u32>> =
        std::collections::BTreeMap::new();
    for i in 0..vs.len() {
        let from = dist_cache
            .entry(vs[i])
            .or_insert_with(|| distances_from(space, vs[i]))
            .clone();
        for (j, &vj) in vs.iter().enumerate().skip(i) {
            let d = Rational64::from_integer(from[vj.idx()] as i64);
            let span = Rational64::from_integer((j - i) as i64);
            let lower = span / params.k - params.l;
            let upper = params.k * span + params.l;
            if d < lower || d > upper {
                return false;
            }
        }
    }
    true
}

/// Oriented C-closeness of two walks: each lies in the C-neighborhood of
/// the other, matching start-to-start and end-to-end within C. Walks in
/// different components are never close.
pub fn oriented_close(space: &Space, j1: &Walk, j2: &Walk, c: u32) -> bool {
    let near2 = distances_from_set(space, j2.vertices());
    let near1 = distances_from_set(space, j1.vertices());
    let from_start = distances_from(space, j1.start());
    let from_end = distances_from(space, j1.end());
    j1.vertices().iter().all(|&p| near2[p.idx()] <= c)
        && j2.vertices().iter().all(|&q| near1[q.idx()] <= c)
        && from_start[j2.start().idx()] != UNREACHABLE
        && from_start[j2.start().idx()] <= c
        && from_end[j2.end().idx()] != UNREACHABLE
        && from_end[j2.end().idx()] <= c
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cycle graph on n vertices.
    fn cycle(n: u32) -> Space {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let edges: Vec<(u32, u32)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Space::new(labels, &edges, None, format!("cycle C{n}")).unwrap()
    }

    /// Path graph 0 - 1 - … - (n-1).
    fn path(n: u32) -> Space {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let edges: Vec<(u32, u32)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Space::new(labels, &edges, None, format!("path P{n}")).unwrap()
    }

    #[test]
    fn construction_rejects_bad_edges() {
        let labels = vec!["x".into(), "y".into()];
        assert!(matches!(
            Space::new(labels.clone(), &[(0, 0)], None, ""),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            Space::new(labels.clone(), &[(0, 1), (1, 0)], None, ""),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            Space::new(labels, &[(0, 2)], None, ""),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn bfs_distance_identity_and_cycle() {
        let c = cycle(12);
        assert_eq!(bfs_distance(&c, VertexId(3), VertexId(3)).unwrap(), 0);
        assert_eq!(bfs_distance(&c, VertexId(0), VertexId(6)).unwrap(), 6);
        assert_eq!(bfs_distance(&c, VertexId(0), VertexId(9)).unwrap(), 3);
    }

    #[test]
    fn bfs_distance_errors_on_disconnection() {
        let two = Space::new(vec!["a".into(), "b".into()], &[], None, "").unwrap();
        assert_eq!(
            bfs_distance(&two, VertexId(0), VertexId(1)),
            Err(Error::Disconnected(0, 1))
        );
    }

    #[test]
    fn bfs_distance_is_a_metric_on_the_cycle() {
        let c = cycle(9);
        let n = c.vertex_count() as u32;
        for u in 0..n {
            for v in 0..n {
                let duv = bfs_distance(&c, VertexId(u), VertexId(v)).unwrap();
                let dvu = bfs_distance(&c, VertexId(v), VertexId(u)).unwrap();
                assert_eq!(duv, dvu);
                for w in 0..n {
                    let duw = bfs_distance(&c, VertexId(u), VertexId(w)).unwrap();
                    let dwv = bfs_distance(&c, VertexId(w), VertexId(v)).unwrap();
                    assert!(duv <= duw + dwv);
                }
            }
        }
    }

    #[test]
    fn geodesic_length_equals_distance_everywhere() {
        for space in [cycle(12), path(7)] {
            let n = space.vertex_count() as u32;
            for u in 0..n {
                for v in 0..n {
                    let g = geodesic(&space, VertexId(u), VertexId(v)).unwrap();
                    assert_eq!(g.start(), VertexId(u));
                    assert_eq!(g.end(), VertexId(v));
                    assert_eq!(
                        g.len() as u32,
                        bfs_distance(&space, VertexId(u), VertexId(v)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn geodesic_tie_break_prefers_least_id() {
        // In C12 both directions from 0 reach 6 in six steps; the walk must
        // start toward vertex 1, not vertex 11.
        let c = cycle(12);
        let g = geodesic(&c, VertexId(0), VertexId(6)).unwrap();
        assert_eq!(
            g.vertices(),
            &[0, 1, 2, 3, 4, 5, 6].map(VertexId)
        );
    }

    #[test]
    fn walk_validation() {
        let p = path(4);
        assert!(Walk::new(&p, vec![VertexId(0), VertexId(1), VertexId(0)]).is_ok());
        assert!(Walk::new(&p, vec![]).is_err());
        assert!(Walk::new(&p, vec![VertexId(0), VertexId(2)]).is_err());
        let w = Walk::single(VertexId(2));
        assert_eq!(w.len(), 0);
        assert_eq!(w.start(), w.end());
    }

    #[test]
    fn delta_of_cycle_c12_all_triples() {
        // Upper bound: a point on a side is within 3 of one of the side's
        // endpoints (side length ≤ diameter 6), and endpoints lie on the
        // other sides. The triangle (0, 6, 9) attains 3 under the least-id
        // tie-break: the side 0→6 runs through 1..5 and vertex 3 is at
        // distance 3 from both other sides.
        let c = cycle(12);
        assert_eq!(delta_estimate(&c, &TripleSample::All).unwrap(), 3);
    }

    #[test]
    fn delta_samples_are_lower_bounds_for_all() {
        let c = cycle(12);
        let all = delta_estimate(&c, &TripleSample::All).unwrap();
        let some = delta_estimate(
            &c,
            &TripleSample::Triples(vec![
                [VertexId(0), VertexId(4), VertexId(8)],
                [VertexId(0), VertexId(6), VertexId(9)],
                [VertexId(1), VertexId(2), VertexId(3)],
            ]),
        )
        .unwrap();
        assert!(some <= all);
        assert_eq!(some, 3);
    }

    #[test]
    fn delta_is_invariant_under_relabeling() {
        // Same C12 built with rotated identifiers.
        let labels = (0..12u32).map(|i| i.to_string()).collect();
        let edges: Vec<(u32, u32)> = (0..12u32).map(|i| ((i + 5) % 12, (i + 6) % 12)).collect();
        let rotated = Space::new(labels, &edges, None, "rotated C12").unwrap();
        assert_eq!(delta_estimate(&rotated, &TripleSample::All).unwrap(), 3);
    }

    #[test]
    fn delta_of_path_graph_is_zero() {
        assert_eq!(delta_estimate(&path(9), &TripleSample::All).unwrap(), 0);
    }

    #[test]
    fn quasigeodesic_accepts_geodesics_and_rejects_backtracks() {
        let p = path(6);
        let g = geodesic(&p, VertexId(0), VertexId(5)).unwrap();
        let strict = QGParams::new(1.into(), 0.into(), 0).unwrap();
        assert!(is_quasigeodesic(&p, &g, &strict));

        let back = Walk::new(&p, vec![VertexId(0), VertexId(1), VertexId(0)]).unwrap();
        assert!(!is_quasigeodesic(&p, &back, &strict));
        // The same backtrack is a (1, 2)-quasi-geodesic.
        let loose = QGParams::new(1.into(), 2.into(), 0).unwrap();
        assert!(is_quasigeodesic(&p, &back, &loose));
    }

    #[test]
    fn quasigeodesic_rational_constants_are_exact() {
        // The out-and-back walk 0,1,0 pairs its endpoints at span 2 and
        // distance 0, so it needs 2/K − L ≤ 0. At K = 4/3 that is exactly
        // L = 3/2: the boundary must pass and anything below must fail.
        let p = path(4);
        let w = Walk::new(&p, vec![VertexId(0), VertexId(1), VertexId(0)]).unwrap();
        let boundary = QGParams::new(Rational64::new(4, 3), Rational64::new(3, 2), 0).unwrap();
        assert!(is_quasigeodesic(&p, &w, &boundary));
        let tighter =
            QGParams::new(Rational64::new(4, 3), Rational64::new(149, 100), 0).unwrap();
        assert!(!is_quasigeodesic(&p, &w, &tighter));
    }

    #[test]
    fn oriented_close_examples() {
        let p = path(8);
        let j = geodesic(&p, VertexId(0), VertexId(5)).unwrap();
        assert!(oriented_close(&p, &j, &j, 0));
        assert!(!oriented_close(&p, &j, &j.reverse(), 0));
        assert!(oriented_close(&p, &j, &j.reverse(), 5));

        // Parallel but offset: 0..5 vs 2..7 are mutually within 2.
        let k = geodesic(&p, VertexId(2), VertexId(7)).unwrap();
        assert!(oriented_close(&p, &j, &k, 2));
        assert!(!oriented_close(&p, &j, &k, 1));
    }

    #[test]
    fn oriented_close_fails_across_components() {
        let two = Space::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            &[(0, 1), (2, 3)],
            None,
            "",
        )
        .unwrap();
        let j1 = Walk::new(&two, vec![VertexId(0), VertexId(1)]).unwrap();
        let j2 = Walk::new(&two, vec![VertexId(2), VertexId(3)]).unwrap();
        assert!(!oriented_close(&two, &j1, &j2, 100));
    }

    #[test]
    fn space_json_round_trip_is_deterministic() {
        let c = Space::new(
            vec!["0/1".into(), "1/0".into(), "1/1".into()],
            &[(0, 1), (1, 2), (0, 2)],
            Some(Truncation {
                kind: "denominator-bound".into(),
                parameter: 1,
            }),
            "tiny farey",
        )
        .unwrap();
        let json = c.to_json();
        let back = Space::from_json(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), json);
        assert!(json.contains("\"truncation\""));
    }

    #[test]
    fn space_json_rejects_non_contiguous_ids() {
        let text = r#"{
            "vertices": [{"id": 0, "label": "x"}, {"id": 2, "label": "y"}],
            "edges": [],
            "truncation": null,
            "metadata": ""
        }"#;
        assert!(Space::from_json(text).is_err());
    }

    #[test]
    fn walk_join_and_reverse() {
        let p = path(5);
        let a = geodesic(&p, VertexId(0), VertexId(2)).unwrap();
        let b = geodesic(&p, VertexId(2), VertexId(4)).unwrap();
        let ab = a.join(&b).unwrap();
        assert_eq!(ab.len(), 4);
        assert_eq!(ab.reverse().start(), VertexId(4));
        assert!(a.join(&a).is_err());
    }
}
