//! Concrete model spaces with group actions: Cayley trees of free groups
//! and the Farey graph with its PSL(2, ℤ) action.
//!
//! Both models are infinite; this module builds finite pieces.
//!
//! * Tree pieces are *convex* (balls around the identity, or radius-r
//!   hulls of geodesic spans), so distances measured inside them agree
//!   with the infinite tree. They still carry a truncation marker because
//!   orbit points can fall outside.
//! * Farey pieces are denominator-bound truncations of a locally infinite
//!   graph; distances inside them are upper bounds for the true distances
//!   and every derived quantity must be stamped with the bound `Q`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::hgraph::{Space, Truncation, VertexId, Walk};
use crate::words::{Letter, Word};
use crate::{Error, Result};

/// Default ceiling on vertices materialized by the builders here.
pub const DEFAULT_VERTEX_BUDGET: usize = 4_000_000;

/// Ceiling on elements produced by [`ModelSpace::enumerate_group_elements`].
pub const ELEMENT_BUDGET: usize = 5_000_000;

/// A rational slope in lowest terms (vertex of the Farey graph); `1/0` is ∞.
///
/// Ordered by `(q, p)`: ∞ first, then integers, then finer denominators —
/// the emission order of Farey vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slope {
    p: i64,
    q: i64,
}

impl Slope {
    /// Normalize `p/q`: lowest terms, `q ≥ 0`, and `1/0` for ∞.
    pub fn new(p: i64, q: i64) -> Result<Slope> {
        if p == 0 && q == 0 {
            return Err(Error::Invalid("slope 0/0".into()));
        }
        let (mut p, mut q) = if q < 0 { (-p, -q) } else { (p, q) };
        let g = gcd(p.unsigned_abs(), q.unsigned_abs()) as i64;
        p /= g;
        q /= g;
        if q == 0 {
            p = 1;
        }
        Ok(Slope { p, q })
    }

    pub fn infinity() -> Slope {
        Slope { p: 1, q: 0 }
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// Parse `p/q` (e.g. `0/1`, `-3/5`, `1/0` for ∞).
    pub fn parse(s: &str) -> Result<Slope> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("slope {s:?}: expected p/q")))?;
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("slope numerator {p:?}")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("slope denominator {q:?}")))?;
        Slope::new(p, q)
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl PartialOrd for Slope {
    fn partial_cmp(&self, other: &Slope) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Slope {
    fn cmp(&self, other: &Slope) -> std::cmp::Ordering {
        (self.q, self.p).cmp(&(other.q, other.p))
    }
}

impl Serialize for Slope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Extended gcd: returns `(g, x, y)` with `a·x + b·y = g = gcd(a, b)`.
fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        let sign = if a < 0 { -1 } else { 1 };
        (a.abs(), sign, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// An element of PSL(2, ℤ): an integer matrix with determinant 1, stored
/// up to global sign (normalized so the first nonzero of `a, b, c, d` is
/// positive). Acts on slopes by `p/q ↦ (ap + bq)/(cp + dq)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mobius {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl Mobius {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Mobius> {
        let det = a
            .checked_mul(d)
            .and_then(|ad| b.checked_mul(c).and_then(|bc| ad.checked_sub(bc)))
            .ok_or(Error::Overflow("determinant"))?;
        if det != 1 {
            return Err(Error::Invalid(format!(
                "matrix [[{a},{b}],[{c},{d}]] has determinant {det}, expected 1"
            )));
        }
        let first = [a, b, c, d].into_iter().find(|&x| x != 0).unwrap_or(0);
        if first < 0 {
            Ok(Mobius {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            })
        } else {
            Ok(Mobius { a, b, c, d })
        }
    }

    pub fn identity() -> Mobius {
        Mobius {
            a: 1,
            b: 0,
            c: 0,
            d: 1,
        }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_identity(&self) -> bool {
        *self == Mobius::identity()
    }

    /// `[[d, −b], [−c, a]]` — the PSL(2, ℤ) inverse.
    pub fn inverse(&self) -> Mobius {
        Mobius::new(self.d, -self.b, -self.c, self.a).expect("inverse of det-1 matrix")
    }

    pub fn compose(&self, rhs: &Mobius) -> Result<Mobius> {
        let mul = |x: i64, y: i64| x.checked_mul(y).ok_or(Error::Overflow("matrix product"));
        let add = |x: i64, y: i64| x.checked_add(y).ok_or(Error::Overflow("matrix product"));
        Mobius::new(
            add(mul(self.a, rhs.a)?, mul(self.b, rhs.c)?)?,
            add(mul(self.a, rhs.b)?, mul(self.b, rhs.d)?)?,
            add(mul(self.c, rhs.a)?, mul(self.d, rhs.c)?)?,
            add(mul(self.c, rhs.b)?, mul(self.d, rhs.d)?)?,
        )
    }

    pub fn pow(&self, n: i64) -> Result<Mobius> {
        if n < 0 {
            return self.inverse().pow(-n);
        }
        let mut acc = Mobius::identity();
        for _ in 0..n {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    /// Möbius action on a slope. Coprimality of the image is automatic:
    /// any common divisor of `(ap + bq, cp + dq)` divides the pullback of
    /// that pair under the determinant-1 inverse, hence divides `(p, q)`.
    pub fn apply(&self, s: Slope) -> Result<Slope> {
        let mul = |x: i64, y: i64| x.checked_mul(y).ok_or(Error::Overflow("mobius apply"));
        let add = |x: i64, y: i64| x.checked_add(y).ok_or(Error::Overflow("mobius apply"));
        let num = add(mul(self.a, s.p)?, mul(self.b, s.q)?)?;
        let den = add(mul(self.c, s.p)?, mul(self.d, s.q)?)?;
        Slope::new(num, den)
    }

    /// Parse `[[a,b],[c,d]]` (spaces allowed).
    pub fn parse(s: &str) -> Result<Mobius> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = compact
            .strip_prefix("[[")
            .and_then(|t| t.strip_suffix("]]"))
            .ok_or_else(|| Error::Parse(format!("matrix {s:?}: expected [[a,b],[c,d]]")))?;
        let parts: Vec<&str> = inner.split("],[").collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("matrix {s:?}: expected two rows")));
        }
        let mut entries = Vec::with_capacity(4);
        for row in parts {
            for cell in row.split(',') {
                let v: i64 = cell
                    .parse()
                    .map_err(|_| Error::Parse(format!("matrix entry {cell:?}")))?;
                entries.push(v);
            }
        }
        if entries.len() != 4 {
            return Err(Error::Parse(format!("matrix {s:?}: expected four entries")));
        }
        Mobius::new(entries[0], entries[1], entries[2], entries[3])
    }
}

impl fmt::Display for Mobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for Mobius {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A group element compatible with one of the model actions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElement {
    FreeWord(Word),
    Mobius(Mobius),
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::FreeWord(w) => w.is_identity(),
            GroupElement::Mobius(m) => m.is_identity(),
        }
    }

    /// Enumeration size: word length for free-group elements, maximum
    /// absolute matrix entry for Möbius elements. An element appears in
    /// [`ModelSpace::enumerate_group_elements`]`(bound)` exactly when its
    /// size is ≤ bound.
    pub fn size(&self) -> usize {
        match self {
            GroupElement::FreeWord(w) => w.len(),
            GroupElement::Mobius(m) => m
                .entries()
                .iter()
                .map(|e| e.unsigned_abs() as usize)
                .max()
                .expect("a matrix has entries"),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::FreeWord(w) => GroupElement::FreeWord(w.inverse()),
            GroupElement::Mobius(m) => GroupElement::Mobius(m.inverse()),
        }
    }

    pub fn compose(&self, rhs: &GroupElement) -> Result<GroupElement> {
        match (self, rhs) {
            (GroupElement::FreeWord(u), GroupElement::FreeWord(v)) => {
                Ok(GroupElement::FreeWord(u.concat(v)))
            }
            (GroupElement::Mobius(m), GroupElement::Mobius(n)) => {
                Ok(GroupElement::Mobius(m.compose(n)?))
            }
            _ => Err(Error::Invalid(
                "cannot compose a free word with a matrix".into(),
            )),
        }
    }

    pub fn pow(&self, n: i64) -> Result<GroupElement> {
        match self {
            GroupElement::FreeWord(w) => Ok(GroupElement::FreeWord(w.pow(n))),
            GroupElement::Mobius(m) => Ok(GroupElement::Mobius(m.pow(n)?)),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::FreeWord(w) if w.is_identity() => write!(f, "1"),
            GroupElement::FreeWord(w) => write!(f, "{w}"),
            GroupElement::Mobius(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Which model a [`ModelSpace`] instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    FreeTree,
    Farey,
}

/// Vertex semantics and action data attached to the bare graph.
#[derive(Debug, Clone)]
pub enum Action {
    FreeTree {
        rank: u8,
        words: Vec<Word>,
        index: BTreeMap<Word, VertexId>,
    },
    Farey {
        q_bound: i64,
        slopes: Vec<Slope>,
        index: BTreeMap<Slope, VertexId>,
    },
}

/// Translates of a walk under an element enumeration; images that leave
/// the truncation are dropped and counted, not errored.
#[derive(Debug, Clone)]
pub struct TranslateSet {
    /// Surviving image walks, deduplicated, in ascending vertex-sequence
    /// order.
    pub walks: Vec<Walk>,
    /// Number of enumerated elements whose image left the space.
    pub dropped: usize,
    /// The enumeration bound used (stamps downstream reports).
    pub bound: usize,
    /// Step count of the base walk (every translate has this length).
    pub base_len: usize,
}

/// A finite model space: the graph plus the group action on it.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    space: Space,
    action: Action,
}

impl ModelSpace {
    /// Cayley tree of the rank-r free group out to word length `radius`.
    ///
    /// Vertex count is `1 + 2r·((2r−1)^radius − 1)/(2r−2)`; vertices are
    /// labeled by reduced words in `(length, lex)` order, and the edge
    /// between `u` and `u·l` is labeled by the letter `l`.
    pub fn free_tree_ball(rank: u8, radius: usize, budget: usize) -> Result<ModelSpace> {
        ModelSpace::free_tree_hull(rank, &[Word::identity()], radius, budget)
    }

    /// The radius-r neighborhood of the geodesic span of `anchors` in the
    /// Cayley tree (for a single anchor, the ball around it).
    ///
    /// The span of a finite set in a tree is a connected subtree and its
    /// r-neighborhood is convex, so distances inside the hull equal
    /// infinite-tree distances. This is the workhorse that lets counting
    /// functionals be evaluated *exactly* between far-apart vertices
    /// without materializing a huge ball.
    pub fn free_tree_hull(
        rank: u8,
        anchors: &[Word],
        radius: usize,
        budget: usize,
    ) -> Result<ModelSpace> {
        if rank < 2 {
            return Err(Error::Invalid(format!("free tree rank {rank} must be >= 2")));
        }
        if anchors.is_empty() {
            return Err(Error::Invalid("hull needs at least one anchor".into()));
        }
        for a in anchors {
            if let Some(g) = a.max_generator() {
                if g >= rank {
                    return Err(Error::Invalid(format!(
                        "anchor {a} uses generator index {g}, rank is {rank}"
                    )));
                }
            }
        }
        let mut set: BTreeSet<Word> = BTreeSet::new();
        // Geodesic span: the tree geodesic between two reduced words u, v
        // descends from u to their longest common prefix, then ascends to
        // v; collect every vertex on each pairwise geodesic.
        for u in anchors {
            for v in anchors {
                for w in tree_geodesic_words(u, v) {
                    set.insert(w);
                }
            }
        }
        check_budget(set.len(), budget)?;
        // r rounds of neighbor expansion. Every neighbor of a reduced word
        // u is u·l for a letter l (appending the inverse of the last
        // letter is the parent), so one concat_letter sweep per round.
        let alphabet = Letter::alphabet(rank);
        let mut frontier: Vec<Word> = set.iter().cloned().collect();
        for _ in 0..radius {
            let mut next = Vec::new();
            for u in &frontier {
                for &l in &alphabet {
                    let v = u.concat_letter(l);
                    if set.insert(v.clone()) {
                        check_budget(set.len(), budget)?;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        let words: Vec<Word> = set.into_iter().collect();
        let index: BTreeMap<Word, VertexId> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), VertexId(i as u32)))
            .collect();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (i, u) in words.iter().enumerate() {
            for &l in &alphabet {
                let v = u.concat_letter(l);
                if let Some(&j) = index.get(&v) {
                    if (i as u32) < j.0 {
                        edges.push((i as u32, j.0));
                    }
                }
            }
        }
        let labels = words.iter().map(Word::to_string).collect();
        let metadata = if anchors.len() == 1 && anchors[0].is_identity() {
            format!("free-tree ball: rank={rank} radius={radius}")
        } else {
            format!(
                "free-tree hull: rank={rank} radius={radius} anchors={}",
                anchors.len()
            )
        };
        let space = Space::new(
            labels,
            &edges,
            Some(Truncation {
                kind: "tree-hull-radius".into(),
                parameter: radius as i64,
            }),
            metadata,
        )?;
        Ok(ModelSpace {
            space,
            action: Action::FreeTree { rank, words, index },
        })
    }

    /// Farey graph truncation: all slopes with `|p| ≤ Q` and `q ≤ Q`,
    /// edges between `p/q` and `r/s` iff `|ps − qr| = 1`. `center` must
    /// lie inside the truncation (it is recorded as the metadata anchor).
    pub fn farey_ball(q_bound: i64, center: Slope, budget: usize) -> Result<ModelSpace> {
        if q_bound < 1 {
            return Err(Error::Invalid(format!("farey bound {q_bound} must be >= 1")));
        }
        let mut slopes: Vec<Slope> = vec![Slope::infinity()];
        for q in 1..=q_bound {
            for p in -q_bound..=q_bound {
                if gcd(p.unsigned_abs(), q as u64) == 1 {
                    slopes.push(Slope { p, q });
                }
            }
        }
        check_budget(slopes.len(), budget)?;
        // Already in (q, p) order by construction.
        let index: BTreeMap<Slope, VertexId> = slopes
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, VertexId(i as u32)))
            .collect();
        if !index.contains_key(&center) {
            return Err(Error::Invalid(format!(
                "center {center} lies outside the Q={q_bound} truncation"
            )));
        }
        let mut edge_set: BTreeSet<(u32, u32)> = BTreeSet::new();
        for (i, s) in slopes.iter().enumerate() {
            for nb in farey_neighbors(*s, q_bound) {
                if let Some(&j) = index.get(&nb) {
                    let (u, v) = if (i as u32) < j.0 {
                        (i as u32, j.0)
                    } else {
                        (j.0, i as u32)
                    };
                    if u != v {
                        edge_set.insert((u, v));
                    }
                }
            }
        }
        let edges: Vec<(u32, u32)> = edge_set.into_iter().collect();
        let labels = slopes.iter().map(Slope::to_string).collect();
        let space = Space::new(
            labels,
            &edges,
            Some(Truncation {
                kind: "farey-denominator-bound".into(),
                parameter: q_bound,
            }),
            format!("farey ball: Q={q_bound} center={center}"),
        )?;
        Ok(ModelSpace {
            space,
            action: Action::Farey {
                q_bound,
                slopes,
                index,
            },
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn kind(&self) -> ModelKind {
        match &self.action {
            Action::FreeTree { .. } => ModelKind::FreeTree,
            Action::Farey { .. } => ModelKind::Farey,
        }
    }

    pub fn rank(&self) -> Option<u8> {
        match &self.action {
            Action::FreeTree { rank, .. } => Some(*rank),
            Action::Farey { .. } => None,
        }
    }

    pub fn q_bound(&self) -> Option<i64> {
        match &self.action {
            Action::FreeTree { .. } => None,
            Action::Farey { q_bound, .. } => Some(*q_bound),
        }
    }

    /// The identity of the acting group, in the right representation.
    pub fn identity_element(&self) -> GroupElement {
        match &self.action {
            Action::FreeTree { .. } => GroupElement::FreeWord(Word::identity()),
            Action::Farey { .. } => GroupElement::Mobius(Mobius::identity()),
        }
    }

    /// The word at a tree vertex.
    pub fn word_of(&self, v: VertexId) -> Result<&Word> {
        match &self.action {
            Action::FreeTree { words, .. } => words
                .get(v.idx())
                .ok_or_else(|| Error::Invalid(format!("vertex {v} out of range"))),
            Action::Farey { .. } => Err(Error::Invalid(
                "farey vertices carry slopes, not words".into(),
            )),
        }
    }

    /// The slope at a Farey vertex.
    pub fn slope_of(&self, v: VertexId) -> Result<Slope> {
        match &self.action {
            Action::Farey { slopes, .. } => slopes
                .get(v.idx())
                .copied()
                .ok_or_else(|| Error::Invalid(format!("vertex {v} out of range"))),
            Action::FreeTree { .. } => Err(Error::Invalid(
                "tree vertices carry words, not slopes".into(),
            )),
        }
    }

    /// Vertex holding `w`, or `LeftTruncation` if the hull does not
    /// contain it.
    pub fn vertex_of_word(&self, w: &Word) -> Result<VertexId> {
        match &self.action {
            Action::FreeTree { index, .. } => index
                .get(w)
                .copied()
                .ok_or_else(|| Error::LeftTruncation(format!("word {w} not in the built hull"))),
            Action::Farey { .. } => Err(Error::Invalid(
                "farey vertices carry slopes, not words".into(),
            )),
        }
    }

    /// Vertex holding slope `s`, or `LeftTruncation` if outside Q.
    pub fn vertex_of_slope(&self, s: Slope) -> Result<VertexId> {
        match &self.action {
            Action::Farey { index, .. } => index.get(&s).copied().ok_or_else(|| {
                Error::LeftTruncation(format!("slope {s} outside the truncation"))
            }),
            Action::FreeTree { .. } => Err(Error::Invalid(
                "tree vertices carry words, not slopes".into(),
            )),
        }
    }

    /// Apply a group element to a vertex: trees by left multiplication
    /// and reduction, Farey by the Möbius rule. Errors with
    /// `LeftTruncation` when the image is outside the built space.
    pub fn apply(&self, g: &GroupElement, v: VertexId) -> Result<VertexId> {
        match (&self.action, g) {
            (Action::FreeTree { rank, words, index }, GroupElement::FreeWord(w)) => {
                if let Some(gen) = w.max_generator() {
                    if gen >= *rank {
                        return Err(Error::Invalid(format!(
                            "element {w} uses generator index {gen}, rank is {rank}"
                        )));
                    }
                }
                let word = words
                    .get(v.idx())
                    .ok_or_else(|| Error::Invalid(format!("vertex {v} out of range")))?;
                let image = w.concat(word);
                index.get(&image).copied().ok_or_else(|| {
                    Error::LeftTruncation(format!("image {image} not in the built hull"))
                })
            }
            (Action::Farey { slopes, index, .. }, GroupElement::Mobius(m)) => {
                let s = slopes
                    .get(v.idx())
                    .copied()
                    .ok_or_else(|| Error::Invalid(format!("vertex {v} out of range")))?;
                let image = m.apply(s)?;
                index.get(&image).copied().ok_or_else(|| {
                    Error::LeftTruncation(format!("image {image} outside the truncation"))
                })
            }
            _ => Err(Error::Invalid(
                "group element kind does not match the space's action".into(),
            )),
        }
    }

    /// Apply `g` to every vertex of a walk. The action is by graph
    /// isomorphisms wherever defined, so the image is again a walk.
    pub fn apply_to_walk(&self, g: &GroupElement, walk: &Walk) -> Result<Walk> {
        let mut vertices = Vec::with_capacity(walk.vertices().len());
        for &v in walk.vertices() {
            vertices.push(self.apply(g, v)?);
        }
        Walk::new(&self.space, vertices)
    }

    /// All group elements up to the bound: tree — reduced words of length
    /// ≤ bound in `(length, lex)` order; Farey — normalized determinant-1
    /// matrices with `max |entry| ≤ bound` in entry order, with the
    /// identity always included (also at bound 0).
    pub fn enumerate_group_elements(&self, bound: usize) -> Result<Vec<GroupElement>> {
        match &self.action {
            Action::FreeTree { rank, .. } => {
                let r = *rank as usize;
                // 1 + 2r + 2r(2r−1) + … ≤ budget, checked incrementally.
                let mut out: Vec<GroupElement> = vec![GroupElement::FreeWord(Word::identity())];
                let mut layer: Vec<Word> = vec![Word::identity()];
                let alphabet = Letter::alphabet(*rank);
                for _ in 0..bound {
                    let mut next = Vec::with_capacity(layer.len() * (2 * r - 1));
                    for u in &layer {
                        for &l in &alphabet {
                            if u.last().is_none_or(|t| !t.cancels(l)) {
                                next.push(u.concat_letter(l));
                            }
                        }
                    }
                    if out.len() + next.len() > ELEMENT_BUDGET {
                        return Err(Error::BudgetExceeded {
                            context: "enumerate_group_elements (tree)",
                            budget: ELEMENT_BUDGET,
                            unit: "elements",
                        });
                    }
                    out.extend(next.iter().cloned().map(GroupElement::FreeWord));
                    layer = next;
                }
                Ok(out)
            }
            Action::Farey { .. } => {
                let b = bound as i64;
                let scan = (2 * bound as u64 + 1).pow(4);
                if scan > 200_000_000 {
                    return Err(Error::BudgetExceeded {
                        context: "enumerate_group_elements (farey)",
                        budget: 200_000_000,
                        unit: "matrix candidates",
                    });
                }
                let mut set: BTreeSet<Mobius> = BTreeSet::new();
                set.insert(Mobius::identity());
                for a in -b..=b {
                    for bb in -b..=b {
                        for c in -b..=b {
                            for d in -b..=b {
                                if a * d - bb * c == 1 {
                                    set.insert(Mobius::new(a, bb, c, d).expect("det checked"));
                                }
                            }
                        }
                    }
                }
                Ok(set.into_iter().map(GroupElement::Mobius).collect())
            }
        }
    }

    /// All translates of `w_path` under the bound-`bound` element
    /// enumeration that stay inside the space. Translates leaving the
    /// truncation are silently dropped and counted in the report field.
    pub fn enumerate_translates(&self, w_path: &Walk, bound: usize) -> Result<TranslateSet> {
        let elements = self.enumerate_group_elements(bound)?;
        let mut walks: BTreeSet<Vec<VertexId>> = BTreeSet::new();
        let mut dropped = 0usize;
        for g in &elements {
            match self.apply_to_walk(g, w_path) {
                Ok(img) => {
                    walks.insert(img.vertices().to_vec());
                }
                Err(Error::LeftTruncation(_)) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
        let walks = walks
            .into_iter()
            .map(|vs| Walk::new(&self.space, vs))
            .collect::<Result<Vec<Walk>>>()?;
        Ok(TranslateSet {
            walks,
            dropped,
            bound,
            base_len: w_path.len(),
        })
    }

    /// Letter labels along a tree walk (the generator spelled by each
    /// step). Farey spaces have no letter labels.
    pub fn walk_labels(&self, walk: &Walk) -> Result<Vec<Letter>> {
        match &self.action {
            Action::FreeTree { words, .. } => {
                let mut labels = Vec::with_capacity(walk.len());
                for pair in walk.vertices().windows(2) {
                    let u = &words[pair[0].idx()];
                    let v = &words[pair[1].idx()];
                    // Adjacent tree words differ by one trailing letter.
                    let l = if v.len() == u.len() + 1 {
                        v.last().expect("longer word is nonempty")
                    } else if u.len() == v.len() + 1 {
                        u.last().expect("longer word is nonempty").opposite()
                    } else {
                        return Err(Error::Invalid(format!(
                            "step {}-{} is not a parent-child tree edge",
                            u, v
                        )));
                    };
                    labels.push(l);
                }
                Ok(labels)
            }
            Action::Farey { .. } => Err(Error::Invalid(
                "farey walks have no letter labels; use enumerate_translates".into(),
            )),
        }
    }

    /// Tree vertex of the identity word (the natural basepoint).
    pub fn tree_identity(&self) -> Result<VertexId> {
        self.vertex_of_word(&Word::identity())
    }
}

fn check_budget(size: usize, budget: usize) -> Result<()> {
    if size > budget {
        Err(Error::BudgetExceeded {
            context: "space construction",
            budget,
            unit: "vertices",
        })
    } else {
        Ok(())
    }
}

/// Vertices of the tree geodesic between reduced words `u` and `v`:
/// pop letters of `u` down to the longest common prefix, then push the
/// remaining letters of `v`.
fn tree_geodesic_words(u: &Word, v: &Word) -> Vec<Word> {
    let common = u
        .letters()
        .iter()
        .zip(v.letters())
        .take_while(|(a, b)| a == b)
        .count();
    let mut out = Vec::with_capacity(u.len() + v.len() - 2 * common + 1);
    let mut cur = u.clone();
    out.push(cur.clone());
    for _ in common..u.len() {
        let last = cur.last().expect("longer than the common prefix");
        cur = cur.concat_letter(last.opposite());
        out.push(cur.clone());
    }
    for &l in &v.letters()[common..] {
        cur = cur.concat_letter(l);
        out.push(cur.clone());
    }
    out
}

/// Neighbors of a slope in the full Farey graph, restricted to the
/// truncation window `|p| ≤ Q`, `q ≤ Q`.
///
/// For `p/q` with `q ≥ 1` the neighbors are the solutions of
/// `p·s − q·r = ±1`; from one Bézout solution all others differ by
/// multiples of `(p, q)`, so they are enumerated directly instead of by
/// scanning all slopes. ∞ = 1/0 is adjacent to exactly the integers.
fn farey_neighbors(s: Slope, q_bound: i64) -> Vec<Slope> {
    let mut out = Vec::new();
    if s.q == 0 {
        for r in -q_bound..=q_bound {
            out.push(Slope { p: r, q: 1 });
        }
        return out;
    }
    // Bézout: p·x + q·y = 1 (gcd is 1 in lowest terms), so (r, s') =
    // (−y + t·p, x + t·q) runs over all solutions of p·s' − q·r = 1; the
    // solutions of the −1 equation are their negatives, handled by slope
    // normalization.
    let (g, x, y) = egcd(s.p, s.q);
    debug_assert_eq!(g, 1);
    // t range making s' = x + t·q land in [−Q, Q].
    let t_lo = (-q_bound - x).div_euclid(s.q);
    let t_hi = (q_bound - x).div_euclid(s.q);
    for t in t_lo..=t_hi {
        let ss = x + t * s.q;
        if ss.abs() > q_bound {
            continue;
        }
        let rr = -y + t * s.p;
        if rr.abs() > q_bound {
            continue;
        }
        if rr == 0 && ss == 0 {
            continue;
        }
        if let Ok(nb) = Slope::new(rr, ss) {
            // Stay inside the window after normalization.
            if nb.p.abs() <= q_bound && nb.q <= q_bound {
                out.push(nb);
            }
        }
    }
    out
}
