//! Min-cost walk solver on the product of the space with a copy-matching
//! automaton — the primary evaluator for counting functionals.
//!
//! The functional is `c(x, y) = d(x, y) − inf_α (|α| − W·|α|_w)`, the
//! infimum over all walks α from x to y with `|α|_w` the maximal number of
//! non-overlapping copies of the pattern along α. The search is modeled as
//! a shortest path over these nodes:
//!
//! * a *free* node ⊥(v) for every space vertex v — walking with no copy in
//!   progress;
//! * a *progress* node (p, j) for every materialized copy instance p
//!   (a concrete length-L walk that counts as a copy) and every
//!   1 ≤ j ≤ L−1 — standing on vertex j of instance p, committed to it.
//!
//! Edges: ⊥(u) → ⊥(v) at cost 1 per graph edge; ⊥(p₀) → (p, 1) at cost 1
//! (start a copy); (p, j) → (p, j+1) at cost 1; (p, L−1) → ⊥(p_L) at cost
//! 1 − W (the completing step banks the credit). There are no abandon
//! edges: a partially walked copy that is not completed is just a sequence
//! of free steps, available at identical cost through the ⊥ nodes.
//!
//! Any (walk, non-overlapping selection) pair maps to a node path of cost
//! `|α| − W·(selection size)` and back, so the shortest path realizes the
//! infimum with the best selection. Costs can be negative (1 − W), but
//! every cycle is positive: a cycle completing k copies uses at least kL
//! unit-cost steps and banks kW < kL, and free cycles cost their length.
//! Bellman–Ford relaxation in a fixed edge order therefore terminates at
//! the exact optimum and its predecessor graph is acyclic.

use crate::hgraph::{self, Space, VertexId, Walk};
use crate::{Error, Result};

/// Cap on product-graph nodes; beyond this the construction refuses
/// rather than thrash (no approximation is ever returned).
pub const SOLVER_NODE_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: u32,
    to: u32,
    cost: i32,
    /// Space vertex reached by taking this edge (every edge is one step).
    step_to: VertexId,
    /// True for the copy-completing step.
    completes: bool,
}

/// A walk witness achieving the infimum, with its copy selection.
#[derive(Debug, Clone)]
pub struct OptimalWalk {
    pub walk: Walk,
    /// Step indices (0-based) where each selected copy begins; each copy
    /// occupies `pattern_len` consecutive steps.
    pub copy_starts: Vec<usize>,
    /// The achieved discounted length `|α| − W·k`.
    pub discounted_length: i64,
}

/// Exact single-source evaluator for one counting functional on one space.
#[derive(Debug, Clone)]
pub struct ProductSolver {
    base: usize,
    node_count: usize,
    edges: Vec<Edge>,
    pattern_len: usize,
    credit: u32,
    /// Sorted instance vertex tuples, for the geodesic lower-bound check.
    instances: Vec<Vec<VertexId>>,
}

impl ProductSolver {
    /// Build the product graph for a pattern of length `pattern_len`
    /// (≥ 2), credit `0 < credit < pattern_len`, and the given copy
    /// instances (each a walk of exactly `pattern_len` steps, given as
    /// its vertex tuple).
    pub fn new(
        space: &Space,
        pattern_len: usize,
        credit: u32,
        mut instances: Vec<Vec<VertexId>>,
    ) -> Result<ProductSolver> {
        if pattern_len < 2 || credit == 0 || credit as usize >= pattern_len {
            return Err(Error::CreditOutOfRange {
                credit,
                len: pattern_len,
            });
        }
        instances.sort();
        instances.dedup();
        for inst in &instances {
            if inst.len() != pattern_len + 1 {
                return Err(Error::Invalid(format!(
                    "copy instance has {} vertices, pattern needs {}",
                    inst.len(),
                    pattern_len + 1
                )));
            }
            for pair in inst.windows(2) {
                if !space.has_edge(pair[0], pair[1]) {
                    return Err(Error::Invalid(format!(
                        "copy instance step {}-{} is not an edge",
                        pair[0], pair[1]
                    )));
                }
            }
        }
        let base = space.vertex_count();
        let node_count = base + instances.len() * (pattern_len - 1);
        if node_count > SOLVER_NODE_BUDGET {
            return Err(Error::BudgetExceeded {
                context: "product solver nodes",
                budget: SOLVER_NODE_BUDGET,
                unit: "nodes",
            });
        }
        let mut edges = Vec::new();
        for u in 0..base as u32 {
            for &v in space.neighbors(VertexId(u)) {
                edges.push(Edge {
                    from: u,
                    to: v.0,
                    cost: 1,
                    step_to: v,
                    completes: false,
                });
            }
        }
        let progress_node =
            |p: usize, j: usize| (base + p * (pattern_len - 1) + (j - 1)) as u32;
        for (p, inst) in instances.iter().enumerate() {
            edges.push(Edge {
                from: inst[0].0,
                to: progress_node(p, 1),
                cost: 1,
                step_to: inst[1],
                completes: false,
            });
            for j in 1..pattern_len - 1 {
                edges.push(Edge {
                    from: progress_node(p, j),
                    to: progress_node(p, j + 1),
                    cost: 1,
                    step_to: inst[j + 1],
                    completes: false,
                });
            }
            edges.push(Edge {
                from: progress_node(p, pattern_len - 1),
                to: inst[pattern_len].0,
                cost: 1 - credit as i32,
                step_to: inst[pattern_len],
                completes: true,
            });
        }
        Ok(ProductSolver {
            base,
            node_count,
            edges,
            pattern_len,
            credit,
            instances,
        })
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    /// Bellman–Ford from ⊥(x): fixed edge order, strict improvements,
    /// early exit once a full pass changes nothing.
    fn relax_from(&self, x: VertexId) -> (Vec<i64>, Vec<Option<usize>>) {
        const INF: i64 = i64::MAX / 4;
        let mut dist = vec![INF; self.node_count];
        let mut pred: Vec<Option<usize>> = vec![None; self.node_count];
        dist[x.idx()] = 0;
        for round in 0..=self.node_count {
            let mut changed = false;
            for (ei, e) in self.edges.iter().enumerate() {
                let du = dist[e.from as usize];
                if du == INF {
                    continue;
                }
                let cand = du + e.cost as i64;
                if cand < dist[e.to as usize] {
                    dist[e.to as usize] = cand;
                    pred[e.to as usize] = Some(ei);
                    changed = true;
                }
            }
            if !changed {
                return (dist, pred);
            }
            assert!(
                round < self.node_count,
                "negative cycle in product graph (cannot happen: every cycle \
                 banks less credit than its length)"
            );
        }
        (dist, pred)
    }

    /// `c(x, y)` for every y at once: `d(x, y) − m(x, y)` with m the
    /// shortest product-graph cost. `None` where y is unreachable.
    pub fn cw_values_from(&self, space: &Space, x: VertexId) -> Vec<Option<u32>> {
        let (dist, _) = self.relax_from(x);
        let plain = hgraph::distances_from(space, x);
        (0..self.base)
            .map(|y| {
                if plain[y] == hgraph::UNREACHABLE {
                    None
                } else {
                    let c = plain[y] as i64 - dist[y];
                    assert!(
                        (0..=plain[y] as i64).contains(&c),
                        "functional out of range: c = {c} at distance {}",
                        plain[y]
                    );
                    Some(c as u32)
                }
            })
            .collect()
    }

    /// `c(x, y)`, checking `0 ≤ c` and the geodesic copy-count lower
    /// bound `c ≥ W·(copies along the tie-break geodesic)`.
    pub fn cw_value(&self, space: &Space, x: VertexId, y: VertexId) -> Result<u32> {
        let values = self.cw_values_from(space, x);
        let c = values[y.idx()].ok_or(Error::Disconnected(x.0, y.0))?;
        let geo = hgraph::geodesic(space, x, y)?;
        let lower = self.credit * self.count_instance_copies(geo.vertices());
        assert!(
            c >= lower,
            "c = {c} below the geodesic lower bound {lower} between {x} and {y}"
        );
        Ok(c)
    }

    /// Greedy non-overlapping count of instance occurrences along a
    /// vertex sequence (equal-length occurrences: greedy is maximal).
    pub fn count_instance_copies(&self, vertices: &[VertexId]) -> u32 {
        let l = self.pattern_len;
        let mut count = 0;
        let mut i = 0;
        while i + l < vertices.len() {
            let window = &vertices[i..=i + l];
            if self
                .instances
                .binary_search_by(|inst| inst.as_slice().cmp(window))
                .is_ok()
            {
                count += 1;
                i += l;
            } else {
                i += 1;
            }
        }
        count
    }

    /// A witness walk and copy selection achieving the infimum.
    pub fn optimal_walk(&self, space: &Space, x: VertexId, y: VertexId) -> Result<OptimalWalk> {
        let (dist, pred) = self.relax_from(x);
        const INF: i64 = i64::MAX / 4;
        if dist[y.idx()] >= INF {
            return Err(Error::Disconnected(x.0, y.0));
        }
        // Rebuild the edge path from the predecessor chain (acyclic:
        // all cycles have positive cost, so no optimal path repeats a
        // node).
        let mut rev_edges = Vec::new();
        let mut node = y.idx();
        while let Some(ei) = pred[node] {
            rev_edges.push(ei);
            node = self.edges[ei].from as usize;
            assert!(
                rev_edges.len() <= self.node_count,
                "predecessor chain longer than the node count"
            );
        }
        assert_eq!(node, x.idx(), "predecessor chain must end at the source");
        rev_edges.reverse();
        let mut vertices = vec![x];
        let mut copy_starts = Vec::new();
        for (step, &ei) in rev_edges.iter().enumerate() {
            let e = &self.edges[ei];
            vertices.push(e.step_to);
            if e.completes {
                copy_starts.push(step + 1 - self.pattern_len);
            }
        }
        let walk = Walk::new(space, vertices)?;
        let discounted = walk.len() as i64 - self.credit as i64 * copy_starts.len() as i64;
        assert_eq!(
            discounted,
            dist[y.idx()],
            "reconstructed walk does not achieve the relaxed optimum"
        );
        Ok(OptimalWalk {
            walk,
            copy_starts,
            discounted_length: discounted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgraph::bfs_distance;
    use crate::spaces::ModelSpace;
    use crate::words::Word;

    fn word(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    /// Label-following instances of `w` in a tree model (test-local; the
    /// production version lives in the parent module).
    fn tree_instances(t: &ModelSpace, w: &Word) -> Vec<Vec<VertexId>> {
        let mut out = Vec::new();
        for v in 0..t.space().vertex_count() as u32 {
            let mut cur = t.word_of(VertexId(v)).unwrap().clone();
            let mut path = vec![VertexId(v)];
            let mut ok = true;
            for &l in w.letters() {
                cur = cur.concat_letter(l);
                match t.vertex_of_word(&cur) {
                    Ok(u) => path.push(u),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                out.push(path);
            }
        }
        out
    }

    #[test]
    fn rejects_bad_credit() {
        let t = ModelSpace::free_tree_ball(2, 2, 100_000).unwrap();
        assert!(ProductSolver::new(t.space(), 2, 0, vec![]).is_err());
        assert!(ProductSolver::new(t.space(), 2, 2, vec![]).is_err());
        assert!(ProductSolver::new(t.space(), 2, 1, vec![]).is_ok());
    }

    #[test]
    fn no_instances_gives_zero_functional() {
        let t = ModelSpace::free_tree_ball(2, 3, 100_000).unwrap();
        let solver = ProductSolver::new(t.space(), 2, 1, vec![]).unwrap();
        let e = t.tree_identity().unwrap();
        for y in 0..t.space().vertex_count() as u32 {
            assert_eq!(solver.cw_value(t.space(), e, VertexId(y)).unwrap(), 0);
        }
    }

    #[test]
    fn ab_functional_on_abab_is_two() {
        // c_{ab, W=1}(ε, abab) = 2: the geodesic spells abab and carries
        // two disjoint ab-copies.
        let t = ModelSpace::free_tree_ball(2, 4, 1_000_000).unwrap();
        let w = word("ab");
        let solver = ProductSolver::new(t.space(), 2, 1, tree_instances(&t, &w)).unwrap();
        let e = t.tree_identity().unwrap();
        let target = t.vertex_of_word(&word("abab")).unwrap();
        assert_eq!(solver.cw_value(t.space(), e, target).unwrap(), 2);
        // x = y gives 0.
        assert_eq!(solver.cw_value(t.space(), e, e).unwrap(), 0);
        // A target with no copies nearby: c = 0.
        let off = t.vertex_of_word(&word("BB")).unwrap();
        assert_eq!(solver.cw_value(t.space(), e, off).unwrap(), 0);
    }

    #[test]
    fn credit_can_exceed_one_and_detours_pay() {
        // w = abab, W = 3: a single copy on the way ε → abab banks 3.
        let t = ModelSpace::free_tree_ball(2, 4, 1_000_000).unwrap();
        let w = word("abab");
        let solver = ProductSolver::new(t.space(), 4, 3, tree_instances(&t, &w)).unwrap();
        let e = t.tree_identity().unwrap();
        let target = t.vertex_of_word(&word("abab")).unwrap();
        assert_eq!(solver.cw_value(t.space(), e, target).unwrap(), 3);
        // ε → ab: the detour ε→abab→ab walks 6 steps and banks 3, for a
        // discounted length of 3; the plain 2-step geodesic costs 2 and
        // stays optimal, so c = 2 − 2 = 0.
        let ab = t.vertex_of_word(&word("ab")).unwrap();
        assert_eq!(solver.cw_value(t.space(), e, ab).unwrap(), 0);
    }

    #[test]
    fn optimal_walk_reconstruction_matches_value() {
        let t = ModelSpace::free_tree_ball(2, 4, 1_000_000).unwrap();
        let w = word("ab");
        let solver = ProductSolver::new(t.space(), 2, 1, tree_instances(&t, &w)).unwrap();
        let e = t.tree_identity().unwrap();
        for label in ["abab", "ab", "BB", "aBab", "bbbb", "Abab"] {
            let y = t.vertex_of_word(&word(label)).unwrap();
            let opt = solver.optimal_walk(t.space(), e, y).unwrap();
            let d = bfs_distance(t.space(), e, y).unwrap() as i64;
            let c = solver.cw_value(t.space(), e, y).unwrap() as i64;
            assert_eq!(d - opt.discounted_length, c, "witness mismatch at {label}");
            assert_eq!(opt.walk.start(), e);
            assert_eq!(opt.walk.end(), y);
            // Copy spans are in range, non-overlapping, and genuine
            // instances.
            let mut prev_end = 0;
            for &s in &opt.copy_starts {
                assert!(s >= prev_end);
                prev_end = s + 2;
                let window = &opt.walk.vertices()[s..=s + 2];
                assert!(solver
                    .instances
                    .binary_search_by(|i| i.as_slice().cmp(window))
                    .is_ok());
            }
        }
    }

    #[test]
    fn walk_reversal_duality() {
        // c_w(x, y) = c_{w⁻¹}(y, x): reversing walks turns w-copies into
        // w⁻¹-copies.
        let t = ModelSpace::free_tree_ball(2, 3, 1_000_000).unwrap();
        let w = word("ab");
        let winv = w.inverse();
        let fw = ProductSolver::new(t.space(), 2, 1, tree_instances(&t, &w)).unwrap();
        let bw = ProductSolver::new(t.space(), 2, 1, tree_instances(&t, &winv)).unwrap();
        let n = t.space().vertex_count() as u32;
        for x in (0..n).step_by(7) {
            let fwd = fw.cw_values_from(t.space(), VertexId(x));
            for y in 0..n {
                let rev = bw.cw_value(t.space(), VertexId(y), VertexId(x)).unwrap();
                assert_eq!(fwd[y as usize], Some(rev), "duality at ({x},{y})");
            }
        }
    }
}
