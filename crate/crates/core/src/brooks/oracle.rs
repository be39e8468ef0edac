//! Reference oracle for the counting functional: enumerate every walk of
//! discount-relevant length with every admissible copy selection.
//!
//! Walks longer than the budget ρ(d) = ⌈d·L/(L−W)⌉ cannot beat the plain
//! geodesic (a walk of length m banks at most W·⌊m/L⌋, so its discounted
//! length is at least m(L−W)/L > d once m > ρ).  The oracle therefore
//! enumerates all walks of length ≤ ρ(d(x, y)) from x, layer by layer,
//! sharing common prefixes: the state of a partial walk is the tuple of
//! its last ≤ L+1 vertices (a copy occupies exactly L steps, so no older
//! vertex can influence a future selection decision), and each extension
//! step branches over *selecting* a just-completed copy (consuming its
//! steps and banking W) versus *skipping* it.  Per layer and state the
//! enumeration keeps the best bank, which dominates: two prefixes in the
//! same state admit exactly the same futures.
//!
//! Copy detection here is deliberately independent of the solver's
//! instance materialization: on free-tree models a window is a copy when
//! its *edge labels* spell the pattern word, read off the vertex words
//! directly; on translate patterns a window is a copy when it equals one
//! of the translated walks.

use std::collections::BTreeMap;

use crate::brooks::{CopyPattern, CountingFunctional};
use crate::hgraph::{self, Space, VertexId, UNREACHABLE};
use crate::spaces::ModelSpace;
use crate::words::Letter;
use crate::{Error, Result};

/// Cap on interned window states.
pub const ORACLE_STATE_BUDGET: usize = 4_000_000;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Transition {
    from: u32,
    skip_to: u32,
    /// `NONE` when the extension does not complete a copy.
    select_to: u32,
}

/// Layered walk enumeration with interned window states, built once per
/// functional and reusable across sources.
#[derive(Debug, Clone)]
pub struct WindowOracle {
    pattern_len: usize,
    credit: u32,
    vertex_count: usize,
    /// State id of the singleton window [v] is `singleton[v]`.
    singleton: Vec<u32>,
    /// Last vertex of each state's window.
    state_last: Vec<u32>,
    transitions: Vec<Transition>,
}

impl WindowOracle {
    pub fn new(
        model: &ModelSpace,
        functional: &CountingFunctional,
        state_budget: usize,
    ) -> Result<WindowOracle> {
        let space = model.space();
        let l = functional.pattern_len();
        let is_copy = copy_predicate(model, functional.pattern())?;

        let mut windows: Vec<Vec<VertexId>> = Vec::new();
        let mut index: BTreeMap<Vec<VertexId>, u32> = BTreeMap::new();
        let intern = |win: Vec<VertexId>,
                          windows: &mut Vec<Vec<VertexId>>,
                          index: &mut BTreeMap<Vec<VertexId>, u32>|
         -> Result<u32> {
            if let Some(&id) = index.get(&win) {
                return Ok(id);
            }
            if windows.len() >= state_budget {
                return Err(Error::BudgetExceeded {
                    context: "oracle window states",
                    budget: state_budget,
                    unit: "states",
                });
            }
            let id = windows.len() as u32;
            index.insert(win.clone(), id);
            windows.push(win);
            Ok(id)
        };

        let mut singleton = Vec::with_capacity(space.vertex_count());
        for v in 0..space.vertex_count() as u32 {
            singleton.push(intern(vec![VertexId(v)], &mut windows, &mut index)?);
        }
        let mut transitions = Vec::new();
        let mut next_unprocessed = 0usize;
        while next_unprocessed < windows.len() {
            let sid = next_unprocessed as u32;
            next_unprocessed += 1;
            let window = windows[sid as usize].clone();
            let last = *window.last().unwrap();
            for &u in space.neighbors(last) {
                let mut skip = window.clone();
                skip.push(u);
                if skip.len() > l + 1 {
                    skip.remove(0);
                }
                let selectable = skip.len() == l + 1 && is_copy(&skip);
                let skip_to = intern(skip, &mut windows, &mut index)?;
                let select_to = if selectable {
                    singleton[u.idx()]
                } else {
                    NONE
                };
                transitions.push(Transition {
                    from: sid,
                    skip_to,
                    select_to,
                });
            }
        }
        let state_last = windows
            .iter()
            .map(|w| w.last().unwrap().0)
            .collect();
        Ok(WindowOracle {
            pattern_len: l,
            credit: functional.credit(),
            vertex_count: space.vertex_count(),
            singleton,
            state_last,
            transitions,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_last.len()
    }

    /// Walk budget ρ(d) = ⌈d·L/(L−W)⌉.
    fn walk_budget(&self, d: u32) -> u64 {
        let l = self.pattern_len as u64;
        let w = self.credit as u64;
        (d as u64 * l).div_ceil(l - w)
    }

    /// `c(x, y)` for every y at once, by full enumeration. `None` where
    /// y is unreachable.
    pub fn cw_values_from(&self, space: &Space, x: VertexId) -> Vec<Option<u32>> {
        assert_eq!(space.vertex_count(), self.vertex_count);
        let plain = hgraph::distances_from(space, x);
        let budgets: Vec<u64> = plain
            .iter()
            .map(|&d| if d == UNREACHABLE { 0 } else { self.walk_budget(d) })
            .collect();
        let rho_max = budgets.iter().copied().max().unwrap_or(0);

        const UNSEEN: i64 = -1;
        let mut best = vec![i64::MAX; self.vertex_count];
        best[x.idx()] = 0; // the empty walk
        let mut cur = vec![UNSEEN; self.state_count()];
        cur[self.singleton[x.idx()] as usize] = 0;
        let mut next = vec![UNSEEN; self.state_count()];
        for layer in 1..=rho_max {
            for slot in next.iter_mut() {
                *slot = UNSEEN;
            }
            let mut alive = false;
            for t in &self.transitions {
                let bank = cur[t.from as usize];
                if bank == UNSEEN {
                    continue;
                }
                alive = true;
                if bank > next[t.skip_to as usize] {
                    next[t.skip_to as usize] = bank;
                }
                if t.select_to != NONE && bank + 1 > next[t.select_to as usize] {
                    next[t.select_to as usize] = bank + 1;
                }
            }
            if !alive {
                break;
            }
            for (sid, &bank) in next.iter().enumerate() {
                if bank == UNSEEN {
                    continue;
                }
                let y = self.state_last[sid] as usize;
                if layer <= budgets[y] {
                    let discounted = layer as i64 - self.credit as i64 * bank;
                    if discounted < best[y] {
                        best[y] = discounted;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        (0..self.vertex_count)
            .map(|y| {
                if plain[y] == UNREACHABLE {
                    None
                } else {
                    let c = plain[y] as i64 - best[y];
                    assert!(
                        (0..=plain[y] as i64).contains(&c),
                        "oracle functional out of range: c = {c} at distance {}",
                        plain[y]
                    );
                    Some(c as u32)
                }
            })
            .collect()
    }

    pub fn cw_value(&self, space: &Space, x: VertexId, y: VertexId) -> Result<u32> {
        self.cw_values_from(space, x)[y.idx()].ok_or(Error::Disconnected(x.0, y.0))
    }
}

/// Window-is-a-copy predicate for a pattern, independent of any
/// materialized instance list on label patterns.
type CopyPredicate<'a> = Box<dyn Fn(&[VertexId]) -> bool + 'a>;

fn copy_predicate<'a>(
    model: &'a ModelSpace,
    pattern: &'a CopyPattern,
) -> Result<CopyPredicate<'a>> {
    match pattern {
        CopyPattern::Labels(word) => {
            if model.rank().is_none() {
                return Err(Error::Invalid(
                    "label patterns need a free-tree model".into(),
                ));
            }
            let letters: Vec<Letter> = word.letters().to_vec();
            Ok(Box::new(move |window: &[VertexId]| {
                window.windows(2).zip(letters.iter()).all(|(pair, &want)| {
                    step_label(model, pair[0], pair[1]) == Some(want)
                })
            }))
        }
        CopyPattern::Translates(set) => {
            let tuples: std::collections::BTreeSet<Vec<VertexId>> = set
                .walks
                .iter()
                .map(|walk| walk.vertices().to_vec())
                .collect();
            Ok(Box::new(move |window: &[VertexId]| {
                tuples.contains(window)
            }))
        }
    }
}

/// Letter labeling the tree edge u → v, read off the vertex words: the
/// longer endpoint's trailing letter, inverted when v is the shorter.
fn step_label(model: &ModelSpace, u: VertexId, v: VertexId) -> Option<Letter> {
    let wu = model.word_of(u).ok()?;
    let wv = model.word_of(v).ok()?;
    if wv.len() == wu.len() + 1 {
        wv.last()
    } else {
        wu.last().map(|l| l.opposite())
    }
}
