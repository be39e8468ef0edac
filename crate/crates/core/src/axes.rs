//! Quasi-axes, hyperbolicity probes, the ~ relation, and coarse
//! proper-discontinuity (WPD) evidence.
//!
//! The geometric statements probed here quantify over infinite sets
//! (all powers, all group elements, all segment lengths), so no
//! operation returns a bare boolean about the infinite statement.
//! Every verdict carries the bounds it was computed at — segment
//! length, search bound, truncation — and a `no_witness_at_bound`
//! outcome is evidence, not a proof of absence.
//!
//! Axes are *orbit-based* throughout: the quasi-axis of `g` through
//! `x0` is the concatenation of geodesics through the orbit points
//! `x0, g·x0, g²·x0, …`. No assumption is made that a genuinely
//! invariant axis exists.

use num_rational::Rational64;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::hgraph::{self, Space, VertexId, Walk, UNREACHABLE};
use crate::spaces::{GroupElement, ModelKind, ModelSpace, Slope};
use crate::{Error, Result};

/// Exact least-squares slope of `y` against `x` (simple linear
/// regression with intercept): `(nΣxy − ΣxΣy) / (nΣx² − (Σx)²)`.
///
/// `None` with fewer than two points or when all x coincide.
pub fn least_squares_slope(points: &[(i64, i64)]) -> Option<Rational64> {
    let n = points.len() as i64;
    if n < 2 {
        return None;
    }
    let sx: i64 = points.iter().map(|p| p.0).sum();
    let sy: i64 = points.iter().map(|p| p.1).sum();
    let sxy: i64 = points.iter().map(|p| p.0 * p.1).sum();
    let sxx: i64 = points.iter().map(|p| p.0 * p.0).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0 {
        return None;
    }
    Some(Rational64::new(n * sxy - sx * sy, denom))
}

/// Direction of travel along a quasi-axis relative to its defining
/// element: `Forward` is the direction of increasing powers.
/// Reversing a segment flips it; so does replacing g by g⁻¹, whose
/// forward direction runs against g's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }
}

/// A finite piece of the orbit-based quasi-axis of `element` through
/// `base`: geodesics concatenated through `base, g·base, …, gⁿ·base`.
#[derive(Debug, Clone)]
pub struct AxisSegment {
    pub element: GroupElement,
    pub base: VertexId,
    pub range: u32,
    /// The orbit points themselves, in power order (length `range + 1`).
    pub orbit: Vec<VertexId>,
    /// Concatenated geodesic walk visiting the orbit points in order.
    pub walk: Walk,
    pub orientation: Orientation,
}

impl AxisSegment {
    /// The same set of vertices traversed against the g-orientation.
    pub fn reversed(&self) -> AxisSegment {
        AxisSegment {
            element: self.element.clone(),
            base: *self.orbit.last().expect("orbit is never empty"),
            range: self.range,
            orbit: self.orbit.iter().rev().copied().collect(),
            walk: self.walk.reverse(),
            orientation: self.orientation.flipped(),
        }
    }

    /// Displacement statistics along the segment.
    pub fn stats(&self, space: &Space) -> Result<AxisStats> {
        AxisStats::from_orbit(space, &self.orbit)
    }
}

/// Displacements `d(x0, gᵏ·x0)` for `k = 0..=n`, the stable-length
/// estimate `τ̂ = d(x0, gⁿ·x0)/n`, and the worst deviation of the
/// displacement sequence from the line `k ↦ k·τ̂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisStats {
    pub displacements: Vec<u32>,
    #[serde(with = "crate::ratio_string")]
    pub tau_hat: Rational64,
    #[serde(with = "crate::ratio_string")]
    pub residual: Rational64,
}

impl AxisStats {
    fn from_orbit(space: &Space, orbit: &[VertexId]) -> Result<AxisStats> {
        let x0 = orbit[0];
        let row = hgraph::distances_from(space, x0);
        let mut displacements = Vec::with_capacity(orbit.len());
        for &p in orbit {
            let d = row[p.idx()];
            if d == UNREACHABLE {
                return Err(Error::Disconnected(x0.0, p.0));
            }
            displacements.push(d);
        }
        let n = displacements.len() - 1;
        let tau_hat = if n == 0 {
            Rational64::new(0, 1)
        } else {
            Rational64::new(displacements[n] as i64, n as i64)
        };
        let residual = displacements
            .iter()
            .enumerate()
            .map(|(k, &d)| (Rational64::from_integer(d as i64) - tau_hat * (k as i64)).abs())
            .max()
            .expect("displacements are non-empty");
        Ok(AxisStats {
            displacements,
            tau_hat,
            residual,
        })
    }

    /// Exact subadditivity of the displacement prefix:
    /// `d[k + m] ≤ d[k] + d[m]` wherever all three indices exist.
    pub fn is_subadditive(&self) -> bool {
        let d = &self.displacements;
        (0..d.len()).all(|k| (0..d.len() - k).all(|m| d[k + m] <= d[k] + d[m]))
    }
}

/// The orbit-based quasi-axis segment of `g` through `x0` over powers
/// `0..=n`: geodesics (deterministic tie-break) joined at the orbit
/// points. Fails with `LeftTruncation` when the orbit exits the built
/// space and `Disconnected` when no connecting geodesic exists.
pub fn axis_segment(
    model: &ModelSpace,
    g: &GroupElement,
    x0: VertexId,
    n: u32,
) -> Result<AxisSegment> {
    let mut orbit = Vec::with_capacity(n as usize + 1);
    orbit.push(x0);
    for _ in 0..n {
        let prev = *orbit.last().expect("orbit is never empty");
        orbit.push(model.apply(g, prev)?);
    }
    let mut walk = Walk::single(x0);
    for pair in orbit.windows(2) {
        let leg = hgraph::geodesic(model.space(), pair[0], pair[1])?;
        walk = walk.join(&leg)?;
    }
    Ok(AxisSegment {
        element: g.clone(),
        base: x0,
        range: n,
        orbit,
        walk,
        orientation: Orientation::Forward,
    })
}

/// Default slope threshold separating hyperbolic from non-hyperbolic
/// orbit growth: parabolic orbits grow logarithmically and fall under
/// ½ at modest n, while hyperbolic ones have slope ≥ 1.
pub fn default_hyperbolicity_threshold() -> Rational64 {
    Rational64::new(1, 2)
}

/// Outcome of the finite-scale hyperbolicity probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicityProbe {
    pub hyperbolic: bool,
    #[serde(with = "crate::ratio_string")]
    pub slope: Rational64,
    #[serde(with = "crate::ratio_string")]
    pub threshold: Rational64,
    /// Number of powers fitted (k = 1..=points).
    pub points: u32,
}

/// Least-squares slope of `k ↦ d(x0, gᵏ·x0)` over `k = 1..=n`,
/// compared against `threshold`. A finite-scale proxy: translation
/// length bounds the slope from below for genuinely hyperbolic
/// elements, while parabolic and elliptic orbits flatten out.
pub fn is_hyperbolic_element(
    model: &ModelSpace,
    g: &GroupElement,
    x0: VertexId,
    n: u32,
    threshold: Rational64,
) -> Result<HyperbolicityProbe> {
    if n < 2 {
        return Err(Error::Invalid(
            "hyperbolicity probe needs at least two powers".into(),
        ));
    }
    let segment = axis_segment(model, g, x0, n)?;
    let stats = segment.stats(model.space())?;
    let points: Vec<(i64, i64)> = stats
        .displacements
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &d)| (k as i64, d as i64))
        .collect();
    let slope = least_squares_slope(&points).ok_or_else(|| {
        Error::Invalid("degenerate displacement sequence in hyperbolicity probe".into())
    })?;
    Ok(HyperbolicityProbe {
        hyperbolic: slope > threshold,
        slope,
        threshold,
        points: n,
    })
}

/// Verdict kind for the ~ relation probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    Witness,
    NoWitnessAtBound,
}

/// Bounds and truncation a [`SimVerdict`] was computed at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimParams {
    pub c: u32,
    pub segment_n: u32,
    pub search_bound: usize,
    /// Truncation stamp of the underlying space, if any.
    pub truncation: Option<String>,
    /// Range actually used for the comparison axis (auto-shrunk when
    /// the longer segment exits the truncation).
    pub axis2_range: u32,
    /// Candidates whose image of the test segment left the truncation
    /// (skipped, not refuted).
    pub skipped_exits: usize,
    pub candidates_checked: usize,
}

/// Truncation-stamped outcome of [`sim_test`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimVerdict {
    pub kind: SimKind,
    /// Witness element, displayed, when `kind` is `Witness`.
    pub witness: Option<String>,
    /// Matched subsegment of the comparison axis (vertex index range),
    /// when a witness was found.
    pub matched_span: Option<(usize, usize)>,
    pub params: SimParams,
    #[serde(skip)]
    pub witness_element: Option<GroupElement>,
}

fn truncation_stamp(model: &ModelSpace) -> Option<String> {
    model
        .space()
        .truncation()
        .map(|t| format!("{}={}", t.kind, t.parameter))
}

/// Probe for the ~ relation: search for `h` with `h(J₁)` oriented
/// C-close to a subsegment of g₂'s quasi-axis, where `J₁` is g₁'s
/// axis segment over `segment_n` powers.
///
/// Candidates are scanned in enumeration order and the first witness
/// is returned, so results are deterministic. The closeness test per
/// subsegment is the `oriented_close` predicate evaluated via
/// precomputed distance rows from the comparison axis (one BFS per
/// distinct axis vertex, reused across all candidates).
///
/// `no_witness_at_bound` is *not* a proof that g₁ ≁ g₂: the scan is
/// truncated at `search_bound` and at the built space.
pub fn sim_test(
    model: &ModelSpace,
    g1: &GroupElement,
    g2: &GroupElement,
    x0: VertexId,
    segment_n: u32,
    c: u32,
    search_bound: usize,
) -> Result<SimVerdict> {
    let probe_n = segment_n.max(2);
    let threshold = default_hyperbolicity_threshold();
    for (name, g) in [("g1", g1), ("g2", g2)] {
        let probe = is_hyperbolic_element(model, g, x0, probe_n, threshold)?;
        if !probe.hyperbolic {
            return Err(Error::Invalid(format!(
                "sim_test requires hyperbolic inputs: {name} has slope {} ≤ {}",
                probe.slope, probe.threshold
            )));
        }
    }
    let j1 = axis_segment(model, g1, x0, segment_n)?;
    // One extra power on the comparison side so translated segments
    // can land strictly inside; shrink back if the truncation bites.
    let (a2, axis2_range) = match axis_segment(model, g2, x0, segment_n + 1) {
        Ok(seg) => (seg, segment_n + 1),
        Err(Error::LeftTruncation(_)) => (axis_segment(model, g2, x0, segment_n)?, segment_n),
        Err(e) => return Err(e),
    };

    let space = model.space();
    let a2_vertices = a2.walk.vertices();
    let mut distinct: Vec<VertexId> = a2_vertices.to_vec();
    distinct.sort();
    distinct.dedup();
    let rows: Vec<Vec<u32>> = distinct
        .iter()
        .map(|&v| hgraph::distances_from(space, v))
        .collect();
    let row_of = |v: VertexId| -> &Vec<u32> {
        &rows[distinct.binary_search(&v).expect("vertex interned above")]
    };

    let mut skipped = 0usize;
    let mut checked = 0usize;
    let mut found: Option<(GroupElement, (usize, usize))> = None;
    'candidates: for h in model.enumerate_group_elements(search_bound)? {
        let image = match model.apply_to_walk(&h, &j1.walk) {
            Ok(w) => w,
            Err(Error::LeftTruncation(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        checked += 1;
        let img = image.vertices();
        for i in 0..a2_vertices.len() {
            // Endpoint condition d(start, start) ≤ C prunes the start.
            if row_of(a2_vertices[i])[img[0].idx()] > c {
                continue;
            }
            'spans: for j in i..a2_vertices.len() {
                if row_of(a2_vertices[j])[img[img.len() - 1].idx()] > c {
                    continue;
                }
                let sub = &a2_vertices[i..=j];
                for &u in img {
                    if sub.iter().all(|&v| row_of(v)[u.idx()] > c) {
                        continue 'spans;
                    }
                }
                for &v in sub {
                    let row = row_of(v);
                    if img.iter().all(|&u| row[u.idx()] > c) {
                        continue 'spans;
                    }
                }
                found = Some((h, (i, j)));
                break 'candidates;
            }
        }
    }

    let params = SimParams {
        c,
        segment_n,
        search_bound,
        truncation: truncation_stamp(model),
        axis2_range,
        skipped_exits: skipped,
        candidates_checked: checked,
    };
    Ok(match found {
        Some((h, span)) => SimVerdict {
            kind: SimKind::Witness,
            witness: Some(h.to_string()),
            matched_span: Some(span),
            params,
            witness_element: Some(h),
        },
        None => SimVerdict {
            kind: SimKind::NoWitnessAtBound,
            witness: None,
            matched_span: None,
            params,
            witness_element: None,
        },
    })
}

/// Bounds and truncation a [`WpdReport`] was computed at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpdParams {
    pub c: u32,
    pub n_power: u32,
    pub enum_bound: usize,
    pub truncation: Option<String>,
}

/// Coarse stabilizer evidence for the WPD property: the elements
/// moving both `x0` and `gᴺ·x0` by at most C, within the enumeration
/// bound, plus the same cardinality at half the bound. A cardinality
/// that has stopped growing between the half bound and the full bound
/// is (finite-scale) evidence that the set is finite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpdReport {
    pub members: Vec<String>,
    pub cardinality: usize,
    pub cardinality_at_half_bound: usize,
    /// Enumerated elements whose action on the probe points left the
    /// truncation (membership unknown, not counted).
    pub skipped_exits: usize,
    pub params: WpdParams,
    #[serde(skip)]
    pub member_elements: Vec<GroupElement>,
}

/// All γ with `d(x0, γ·x0) ≤ C` and `d(gᴺ·x0, γ·gᴺ·x0) ≤ C` over the
/// bound-`enum_bound` element enumeration.
pub fn wpd_coarse_stabilizer(
    model: &ModelSpace,
    g: &GroupElement,
    x0: VertexId,
    c: u32,
    n_power: u32,
    enum_bound: usize,
) -> Result<WpdReport> {
    let mut gn_x0 = x0;
    for _ in 0..n_power {
        gn_x0 = model.apply(g, gn_x0)?;
    }
    let space = model.space();
    let from_x0 = hgraph::distances_from(space, x0);
    let from_gn = hgraph::distances_from(space, gn_x0);
    let mut members = Vec::new();
    let mut member_elements = Vec::new();
    let mut at_half = 0usize;
    let mut skipped = 0usize;
    let half_bound = enum_bound / 2;
    for gamma in model.enumerate_group_elements(enum_bound)? {
        let (ix0, ign) = match (model.apply(&gamma, x0), model.apply(&gamma, gn_x0)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::LeftTruncation(_)), _) | (_, Err(Error::LeftTruncation(_))) => {
                skipped += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let d0 = from_x0[ix0.idx()];
        let dn = from_gn[ign.idx()];
        if d0 != UNREACHABLE && d0 <= c && dn != UNREACHABLE && dn <= c {
            if gamma.size() <= half_bound {
                at_half += 1;
            }
            members.push(gamma.to_string());
            member_elements.push(gamma);
        }
    }
    Ok(WpdReport {
        members,
        cardinality: member_elements.len(),
        cardinality_at_half_bound: at_half,
        skipped_exits: skipped,
        params: WpdParams {
            c,
            n_power,
            enum_bound,
            truncation: truncation_stamp(model),
        },
        member_elements,
    })
}

/// Joint stabilizer evidence for a slope pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub members: Vec<String>,
    pub cardinality: usize,
    pub cardinality_at_half_bound: usize,
    /// Distance between the two slopes in the built Farey graph, when
    /// both are present; pairs at distance ≥ 3 are the filling pairs,
    /// for which the joint stabilizer is expected finite.
    pub farey_distance: Option<u32>,
    pub fills: Option<bool>,
    pub enum_bound: usize,
    pub truncation: Option<String>,
    #[serde(skip)]
    pub member_elements: Vec<GroupElement>,
}

/// All enumerated γ fixing both slopes: `γ(a) = a` and `γ(b) = b`,
/// decided by exact matrix action (no truncation involved in
/// membership; the truncation only stamps the contextual distance).
pub fn stabilizer_intersection(
    model: &ModelSpace,
    a: Slope,
    b: Slope,
    enum_bound: usize,
) -> Result<StabilizerReport> {
    if model.kind() != ModelKind::Farey {
        return Err(Error::Invalid(
            "stabilizer_intersection is defined on the Farey model".into(),
        ));
    }
    if a == b {
        return Err(Error::Invalid(
            "stabilizer_intersection needs two distinct slopes".into(),
        ));
    }
    let mut members = Vec::new();
    let mut member_elements = Vec::new();
    let mut at_half = 0usize;
    let half_bound = enum_bound / 2;
    for gamma in model.enumerate_group_elements(enum_bound)? {
        let m = match &gamma {
            GroupElement::Mobius(m) => m,
            GroupElement::FreeWord(_) => unreachable!("Farey enumeration yields matrices"),
        };
        if m.apply(a)? == a && m.apply(b)? == b {
            if gamma.size() <= half_bound {
                at_half += 1;
            }
            members.push(gamma.to_string());
            member_elements.push(gamma);
        }
    }
    let farey_distance = match (model.vertex_of_slope(a), model.vertex_of_slope(b)) {
        (Ok(va), Ok(vb)) => hgraph::bfs_distance(model.space(), va, vb).ok(),
        _ => None,
    };
    Ok(StabilizerReport {
        members,
        cardinality: member_elements.len(),
        cardinality_at_half_bound: at_half,
        farey_distance,
        fills: farey_distance.map(|d| d >= 3),
        enum_bound,
        truncation: truncation_stamp(model),
        member_elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Mobius;
    use crate::words::Word;

    fn tree(radius: usize) -> ModelSpace {
        ModelSpace::free_tree_ball(2, radius, 2_000_000).unwrap()
    }

    fn word_el(s: &str) -> GroupElement {
        GroupElement::FreeWord(Word::parse(s).unwrap())
    }

    fn mob(a: i64, b: i64, c: i64, d: i64) -> GroupElement {
        GroupElement::Mobius(Mobius::new(a, b, c, d).unwrap())
    }

    #[test]
    fn slope_of_exact_line_is_exact() {
        // y = 3x + 7 over x = 1..6.
        let pts: Vec<(i64, i64)> = (1..=6).map(|x| (x, 3 * x + 7)).collect();
        assert_eq!(least_squares_slope(&pts), Some(Rational64::new(3, 1)));
    }

    #[test]
    fn parabolic_displacement_pattern_has_slope_one_seventh() {
        // Displacements (1, 2, 2, 2, 2, 2) at x = 1..6: the fit is flat
        // but not zero; the exact slope is 1/7.
        let pts = [(1, 1), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2)];
        assert_eq!(least_squares_slope(&pts), Some(Rational64::new(1, 7)));
    }

    #[test]
    fn degenerate_inputs_give_none() {
        assert_eq!(least_squares_slope(&[]), None);
        assert_eq!(least_squares_slope(&[(1, 5)]), None);
        assert_eq!(least_squares_slope(&[(2, 1), (2, 9)]), None);
    }

    #[test]
    fn tree_axis_spells_the_powers() {
        let t = tree(7);
        let e = t.tree_identity().unwrap();
        let seg = axis_segment(&t, &word_el("ab"), e, 3).unwrap();
        assert_eq!(seg.walk.len(), 6);
        assert_eq!(seg.orbit.len(), 4);
        assert_eq!(
            seg.walk.end(),
            t.vertex_of_word(&Word::parse("ababab").unwrap()).unwrap()
        );
        let stats = seg.stats(t.space()).unwrap();
        assert_eq!(stats.displacements, vec![0, 2, 4, 6]);
        assert_eq!(stats.tau_hat, Rational64::new(2, 1));
        assert_eq!(stats.residual, Rational64::new(0, 1));
        assert!(stats.is_subadditive());
    }

    #[test]
    fn identity_axis_is_a_point() {
        let t = tree(3);
        let e = t.tree_identity().unwrap();
        let seg = axis_segment(&t, &word_el(""), e, 4).unwrap();
        assert_eq!(seg.walk.len(), 0);
        assert_eq!(seg.orbit, vec![e; 5]);
    }

    #[test]
    fn inverse_axis_runs_against_the_forward_one() {
        // Opposite orientations on one line: the reversed g⁻¹-segment
        // joined to the g-segment is itself a geodesic through ε.
        let t = tree(7);
        let e = t.tree_identity().unwrap();
        let fwd = axis_segment(&t, &word_el("ab"), e, 3).unwrap();
        let bwd = axis_segment(&t, &word_el("BA"), e, 3).unwrap();
        assert_eq!(bwd.orientation, Orientation::Forward);
        assert_eq!(bwd.reversed().orientation, Orientation::Backward);
        let line = bwd.reversed().walk.join(&fwd.walk).unwrap();
        assert_eq!(line.len(), 12);
        assert_eq!(
            hgraph::bfs_distance(t.space(), line.start(), line.end()).unwrap(),
            12
        );
    }

    #[test]
    fn conjugate_words_are_hyperbolic_with_core_slope() {
        let t = tree(10);
        let e = t.tree_identity().unwrap();
        let probe =
            is_hyperbolic_element(&t, &word_el("ab"), e, 5, default_hyperbolicity_threshold())
                .unwrap();
        assert!(probe.hyperbolic);
        assert_eq!(probe.slope, Rational64::new(2, 1));
        // aba⁻¹ has displacements k + 2, slope exactly 1 (core length).
        let probe =
            is_hyperbolic_element(&t, &word_el("abA"), e, 5, default_hyperbolicity_threshold())
                .unwrap();
        assert!(probe.hyperbolic);
        assert_eq!(probe.slope, Rational64::new(1, 1));
        let probe =
            is_hyperbolic_element(&t, &word_el(""), e, 5, default_hyperbolicity_threshold())
                .unwrap();
        assert!(!probe.hyperbolic);
        assert_eq!(probe.slope, Rational64::new(0, 1));
    }

    #[test]
    fn farey_fibonacci_axis_and_parabolic_rejection() {
        let f = ModelSpace::farey_ball(60, Slope::new(0, 1).unwrap(), 2_000_000).unwrap();
        let x0 = f.vertex_of_slope(Slope::new(0, 1).unwrap()).unwrap();
        // Orbit of [[2,1],[1,1]] from 0/1: consecutive Fibonacci
        // quotients 1/1, 3/2, 8/5, 21/13 — pairwise Farey-adjacent, so
        // the 4-power axis walk has length exactly 4.
        let seg = axis_segment(&f, &mob(2, 1, 1, 1), x0, 4).unwrap();
        assert_eq!(seg.walk.len(), 4);
        let probe = is_hyperbolic_element(
            &f,
            &mob(2, 1, 1, 1),
            x0,
            4,
            default_hyperbolicity_threshold(),
        )
        .unwrap();
        assert!(probe.hyperbolic);
        assert!(probe.slope > Rational64::new(1, 2));
        // The parabolic [[1,1],[0,1]] walks 0/1 ↦ k/1, all within
        // distance 2 of 0/1 (via ∞); its slope is exactly 1/7 at n = 6.
        let probe = is_hyperbolic_element(
            &f,
            &mob(1, 1, 0, 1),
            x0,
            6,
            default_hyperbolicity_threshold(),
        )
        .unwrap();
        assert!(!probe.hyperbolic);
        assert_eq!(probe.slope, Rational64::new(1, 7));
    }

    #[test]
    fn sim_is_reflexive_with_identity_witness() {
        let t = tree(9);
        let e = t.tree_identity().unwrap();
        let v = sim_test(&t, &word_el("ab"), &word_el("ab"), e, 3, 0, 2).unwrap();
        assert_eq!(v.kind, SimKind::Witness);
        assert_eq!(v.witness.as_deref(), Some("1"));
        assert!(v.witness_element.unwrap().is_identity());
    }

    #[test]
    fn sim_finds_the_conjugator() {
        // g₂ = a·(ab)·a⁻¹: the conjugation by a maps g₁'s axis onto
        // g₂'s up to the C = 1 sag at the orbit joints, and no shorter
        // candidate works, so the first witness is a itself.
        let t = tree(10);
        let e = t.tree_identity().unwrap();
        let v = sim_test(&t, &word_el("ab"), &word_el("aabA"), e, 3, 1, 2).unwrap();
        assert_eq!(v.kind, SimKind::Witness);
        assert_eq!(v.witness.as_deref(), Some("a"));
    }

    #[test]
    fn sim_on_distinct_generators_finds_nothing_exact() {
        // The action is free and label-preserving: an a-labeled
        // segment can never coincide with a b-labeled one, so C = 0
        // exhausts without a witness.
        let t = tree(9);
        let e = t.tree_identity().unwrap();
        let v = sim_test(&t, &word_el("a"), &word_el("b"), e, 3, 0, 4).unwrap();
        assert_eq!(v.kind, SimKind::NoWitnessAtBound);
        assert!(v.witness.is_none());
        assert_eq!(v.params.skipped_exits, 0);
        assert!(v.params.candidates_checked > 0);
    }

    #[test]
    fn sim_subsegment_check_matches_oriented_close() {
        // Replay the reported match through the public predicate.
        let t = tree(10);
        let e = t.tree_identity().unwrap();
        let v = sim_test(&t, &word_el("ab"), &word_el("aabA"), e, 3, 1, 2).unwrap();
        let h = v.witness_element.clone().unwrap();
        let j1 = axis_segment(&t, &word_el("ab"), e, 3).unwrap();
        let a2 = axis_segment(&t, &word_el("aabA"), e, 4).unwrap();
        let (i, j) = v.matched_span.unwrap();
        let image = t.apply_to_walk(&h, &j1.walk).unwrap();
        let sub = Walk::new(t.space(), a2.walk.vertices()[i..=j].to_vec()).unwrap();
        assert!(hgraph::oriented_close(t.space(), &image, &sub, 1));
        assert!(!hgraph::oriented_close(t.space(), &image, &a2.walk, 0));
    }

    #[test]
    fn free_action_pins_coarse_stabilizer_to_identity() {
        let t = tree(8);
        let e = t.tree_identity().unwrap();
        let r = wpd_coarse_stabilizer(&t, &word_el("ab"), e, 0, 2, 3).unwrap();
        assert_eq!(r.cardinality, 1);
        assert_eq!(r.members, vec!["1"]);
        assert_eq!(r.cardinality_at_half_bound, 1);
    }

    #[test]
    fn coarse_stabilizer_is_monotone_in_c_and_bound() {
        let t = tree(6);
        let e = t.tree_identity().unwrap();
        let g = word_el("ab");
        let mut prev = 0;
        for c in 0..3 {
            let r = wpd_coarse_stabilizer(&t, &g, e, c, 1, 3).unwrap();
            assert!(r.cardinality >= prev, "monotone in C");
            prev = r.cardinality;
        }
        let small = wpd_coarse_stabilizer(&t, &g, e, 2, 1, 2).unwrap();
        let large = wpd_coarse_stabilizer(&t, &g, e, 2, 1, 3).unwrap();
        assert!(large.cardinality >= small.cardinality, "monotone in bound");
        let at_one = wpd_coarse_stabilizer(&t, &g, e, 2, 1, 1).unwrap();
        assert_eq!(large.cardinality_at_half_bound, at_one.cardinality);
        assert_eq!(small.cardinality_at_half_bound, at_one.cardinality);
    }

    #[test]
    fn farey_coarse_stabilizer_stabilizes() {
        let f = ModelSpace::farey_ball(60, Slope::new(0, 1).unwrap(), 2_000_000).unwrap();
        let x0 = f.vertex_of_slope(Slope::new(0, 1).unwrap()).unwrap();
        let g = mob(2, 1, 1, 1);
        let r6 = wpd_coarse_stabilizer(&f, &g, x0, 2, 3, 6).unwrap();
        assert_eq!(r6.cardinality_at_half_bound, {
            let r3 = wpd_coarse_stabilizer(&f, &g, x0, 2, 3, 3).unwrap();
            r3.cardinality
        });
        assert!(r6.members.iter().any(|m| m == "[[1,0],[0,1]]" || m == "1"));
    }

    #[test]
    fn joint_stabilizer_of_adjacent_slopes_is_trivial() {
        let f = ModelSpace::farey_ball(10, Slope::new(0, 1).unwrap(), 2_000_000).unwrap();
        let a = Slope::new(0, 1).unwrap();
        let b = Slope::infinity();
        let r10 = stabilizer_intersection(&f, a, b, 10).unwrap();
        // Only ±I fix both 0 and ∞ in PSL(2,ℤ), and they coincide
        // after normalization.
        assert_eq!(r10.cardinality, 1);
        assert_eq!(r10.farey_distance, Some(1));
        assert_eq!(r10.fills, Some(false));
        let r20 = stabilizer_intersection(&f, a, b, 20).unwrap();
        assert_eq!(r20.cardinality, r10.cardinality, "stabilized cardinality");
    }

    #[test]
    fn verdicts_serialize_with_their_bounds() {
        let t = tree(8);
        let e = t.tree_identity().unwrap();
        let v = sim_test(&t, &word_el("ab"), &word_el("ab"), e, 2, 0, 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"kind\":\"witness\""));
        assert!(json.contains("\"search_bound\":1"));
        let parsed: SimVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.kind, SimKind::Witness);
    }
}
