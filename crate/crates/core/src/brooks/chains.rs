//! Copy-chain evaluator: an independent route to the counting functional
//! built on a structural normal form rather than a walk search.
//!
//! Any walk with a selected set of copies can be rearranged, without
//! raising its discounted length, into a *chain*: a geodesic from x to
//! the first copy's start, the copy itself, a geodesic to the next
//! copy's start, …, and a geodesic from the last copy's end to y.
//! (Replacing each between-copy segment by a geodesic never lengthens
//! the walk and leaves the copies untouched.)  The infimum is therefore
//! a shortest path in a small complete digraph over copy instances:
//!
//! * src → p costs d(x, start_p);
//! * p → q costs (L − W) + d(end_p, start_q);
//! * p → sink costs (L − W) + d(end_p, y);
//! * src → sink costs d(x, y) (the copy-free chain).
//!
//! All weights are non-negative (W < L), so Dijkstra applies; shortest
//! paths over this digraph range over all chains, including ones that
//! reuse an instance (a walk may traverse the same copy twice), because
//! shortest *walks* and shortest *paths* coincide under non-negative
//! weights with strictly positive cycles.
//!
//! Instances are pre-filtered by the chain bound: a copy p on a chain of
//! discounted length ≤ d forces d(x, start_p) + L + d(end_p, y) ≤
//! d + W·k_max with k_max = ⌊d / (L − W)⌋ (a chain with k copies walks
//! at least that far, banks exactly Wk, and k(L − W) ≤ d).  Instances
//! failing the bound sit on no chain that beats the plain geodesic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::hgraph::{self, Space, VertexId, UNREACHABLE};
use crate::{Error, Result};

/// Cap on distance-row memory (distinct copy ends × vertices), ~200 MB.
pub const CHAIN_ROW_BUDGET: usize = 25_000_000;

/// `c(x, y)` by the chain route. `instances` are the copy walks (vertex
/// tuples of `pattern_len + 1` vertices); the filter is applied here.
pub fn chain_cw_value(
    space: &Space,
    pattern_len: usize,
    credit: u32,
    instances: &[Vec<VertexId>],
    x: VertexId,
    y: VertexId,
) -> Result<u32> {
    if credit == 0 || credit as usize >= pattern_len {
        return Err(Error::CreditOutOfRange {
            credit,
            len: pattern_len,
        });
    }
    let l = pattern_len as i64;
    let w = credit as i64;
    let from_x = hgraph::distances_from(space, x);
    let from_y = hgraph::distances_from(space, y);
    if from_x[y.idx()] == UNREACHABLE {
        return Err(Error::Disconnected(x.0, y.0));
    }
    let d = from_x[y.idx()] as i64;
    let k_max = d / (l - w);
    let survivors: Vec<&Vec<VertexId>> = instances
        .iter()
        .filter(|inst| {
            let s = inst[0];
            let e = inst[pattern_len];
            from_x[s.idx()] != UNREACHABLE
                && from_y[e.idx()] != UNREACHABLE
                && from_x[s.idx()] as i64 + l + from_y[e.idx()] as i64 <= d + w * k_max
        })
        .collect();

    // Distance rows from the distinct copy-end vertices.
    let mut end_vertices: Vec<VertexId> = survivors.iter().map(|i| i[pattern_len]).collect();
    end_vertices.sort();
    end_vertices.dedup();
    let row_entries = end_vertices.len().saturating_mul(space.vertex_count());
    if row_entries > CHAIN_ROW_BUDGET {
        return Err(Error::BudgetExceeded {
            context: "chain distance rows",
            budget: CHAIN_ROW_BUDGET,
            unit: "entries",
        });
    }
    let end_rows: Vec<Vec<u32>> = end_vertices
        .iter()
        .map(|&e| hgraph::distances_from(space, e))
        .collect();
    let row_of = |e: VertexId| -> &Vec<u32> {
        &end_rows[end_vertices.binary_search(&e).unwrap()]
    };

    // Dijkstra over src (index k), instances (0..k), sink (k + 1).
    fn relax(
        v: usize,
        cand: i64,
        dist: &mut [i64],
        heap: &mut BinaryHeap<Reverse<(i64, usize)>>,
    ) {
        if cand < dist[v] {
            dist[v] = cand;
            heap.push(Reverse((cand, v)));
        }
    }
    let k = survivors.len();
    let (src, sink) = (k, k + 1);
    const INF: i64 = i64::MAX / 4;
    let mut dist = vec![INF; k + 2];
    dist[src] = 0;
    let mut heap: BinaryHeap<Reverse<(i64, usize)>> = BinaryHeap::new();
    heap.push(Reverse((0i64, src)));
    while let Some(Reverse((du, u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        if u == sink {
            break;
        }
        if u == src {
            relax(sink, d, &mut dist, &mut heap);
            for (p, inst) in survivors.iter().enumerate() {
                relax(p, from_x[inst[0].idx()] as i64, &mut dist, &mut heap);
            }
        } else {
            let end = survivors[u][pattern_len];
            let row = row_of(end);
            let done = du + (l - w);
            relax(sink, done + from_y[end.idx()] as i64, &mut dist, &mut heap);
            for (q, inst) in survivors.iter().enumerate() {
                let leg = row[inst[0].idx()];
                if leg != UNREACHABLE {
                    relax(q, done + leg as i64, &mut dist, &mut heap);
                }
            }
        }
    }
    let c = d - dist[sink];
    assert!(
        (0..=d).contains(&c),
        "chain functional out of range: c = {c} at distance {d}"
    );
    Ok(c as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::ModelSpace;
    use crate::words::Word;

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
    fn matches_hand_values_on_small_tree() {
        let t = ModelSpace::free_tree_ball(2, 4, 1_000_000).unwrap();
        let w = Word::parse("ab").unwrap();
        let instances = tree_instances(&t, &w);
        let e = t.tree_identity().unwrap();
        let at = |s: &str| t.vertex_of_word(&Word::parse(s).unwrap()).unwrap();
        assert_eq!(
            chain_cw_value(t.space(), 2, 1, &instances, e, at("abab")).unwrap(),
            2
        );
        assert_eq!(
            chain_cw_value(t.space(), 2, 1, &instances, e, at("BB")).unwrap(),
            0
        );
        assert_eq!(chain_cw_value(t.space(), 2, 1, &instances, e, e).unwrap(), 0);
    }

    #[test]
    fn agrees_with_product_solver_everywhere() {
        use crate::brooks::solver::ProductSolver;
        let t = ModelSpace::free_tree_ball(2, 3, 1_000_000).unwrap();
        for (ws, credit) in [("ab", 1), ("aB", 1), ("aba", 2), ("abab", 3)] {
            let w = Word::parse(ws).unwrap();
            let instances = tree_instances(&t, &w);
            let solver =
                ProductSolver::new(t.space(), w.len(), credit, instances.clone()).unwrap();
            let n = t.space().vertex_count() as u32;
            for x in 0..n {
                let row = solver.cw_values_from(t.space(), VertexId(x));
                for y in 0..n {
                    let chain = chain_cw_value(
                        t.space(),
                        w.len(),
                        credit,
                        &instances,
                        VertexId(x),
                        VertexId(y),
                    )
                    .unwrap();
                    assert_eq!(row[y as usize], Some(chain), "w = {ws}, pair ({x}, {y})");
                }
            }
        }
    }
}
