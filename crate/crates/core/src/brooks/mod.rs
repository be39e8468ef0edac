//! Counting functionals `c_w` and antisymmetrized quasimorphisms `h_w`.
//!
//! For a pattern w (a reduced word, or an explicit family of translated
//! walks) and a credit 0 < W < |w|, the counting functional is
//!
//! ```text
//! c_w(x, y) = d(x, y) − inf over walks α from x to y of (|α| − W·|α|_w)
//! ```
//!
//! with `|α|_w` the maximal number of non-overlapping copies of w along
//! α; the quasimorphism is `h_w(g) = c_w(x₀, g·x₀) − c_{w⁻¹}(x₀, g·x₀)`.
//!
//! Three independent evaluation routes are implemented:
//!
//! * [`solver::ProductSolver`] — shortest path on the product of the
//!   space with a copy-progress automaton (the workhorse);
//! * [`oracle::WindowOracle`] — direct enumeration of every walk up to
//!   the discount-relevant length with exhaustive copy selection (the
//!   reference oracle; exponentially larger state space, no shared
//!   logic with the solver);
//! * [`chains::chain_cw_value`] — Dijkstra over copy chains (geodesic
//!   legs between whole copies), an evaluator that also powers exact
//!   infinite-tree values.
//!
//! On free-group Cayley trees, [`TreeQuasimorphism`] returns values of
//! the *infinite* tree, not of any finite ball: all candidate walks live
//! in a certified tube around the geodesic (see the struct docs), and
//! convex hulls of that tube are built on demand.

pub mod chains;
pub mod oracle;
pub mod solver;

pub use chains::chain_cw_value;
pub use oracle::{WindowOracle, ORACLE_STATE_BUDGET};
pub use solver::{OptimalWalk, ProductSolver, SOLVER_NODE_BUDGET};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::axes::least_squares_slope;
use crate::hgraph::{self, QGParams, VertexId};
use crate::spaces::{GroupElement, ModelSpace, TranslateSet};
use crate::words::Word;
use crate::{Error, Result};

/// Default cap on hull vertices for infinite-tree evaluation.
pub const DEFAULT_HULL_BUDGET: usize = 2_000_000;

/// What counts as a copy of the pattern.
#[derive(Debug, Clone)]
pub enum CopyPattern {
    /// Walks whose edge labels spell this reduced word (free-tree
    /// models; every labeled path is a group translate of the base path
    /// because the action is free and transitive on vertices).
    Labels(Word),
    /// An explicit set of translated walks (Farey models, where edges
    /// carry no letters). Built by
    /// [`ModelSpace::enumerate_translates`]; values computed from a
    /// truncated translate set are *lower bounds* for the untruncated
    /// functional, stamped with the enumeration bound.
    Translates(TranslateSet),
}

impl CopyPattern {
    /// Pattern length L = number of steps in a copy.
    pub fn len(&self) -> usize {
        match self {
            CopyPattern::Labels(w) => w.len(),
            CopyPattern::Translates(set) => set.base_len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The pattern whose copies are exactly the reversed copies of this
    /// one (w ↦ w⁻¹).
    pub fn inverse(&self) -> CopyPattern {
        match self {
            CopyPattern::Labels(w) => CopyPattern::Labels(w.inverse()),
            CopyPattern::Translates(set) => {
                let mut walks: Vec<_> = set.walks.iter().map(|w| w.reverse()).collect();
                walks.sort_by(|a, b| a.vertices().cmp(b.vertices()));
                CopyPattern::Translates(TranslateSet {
                    walks,
                    dropped: set.dropped,
                    bound: set.bound,
                    base_len: set.base_len,
                })
            }
        }
    }

    /// Short human-readable form for reports.
    pub fn describe(&self) -> String {
        match self {
            CopyPattern::Labels(w) => format!("labels:{w}"),
            CopyPattern::Translates(set) => format!(
                "translates(len={}, count={}, bound={}, dropped={})",
                set.base_len,
                set.walks.len(),
                set.bound,
                set.dropped
            ),
        }
    }
}

/// A counting functional: a copy pattern with its credit 0 < W < L.
#[derive(Debug, Clone)]
pub struct CountingFunctional {
    pattern: CopyPattern,
    credit: u32,
}

impl CountingFunctional {
    pub fn new(pattern: CopyPattern, credit: u32) -> Result<CountingFunctional> {
        let len = pattern.len();
        if credit == 0 || credit as usize >= len {
            return Err(Error::CreditOutOfRange { credit, len });
        }
        if let CopyPattern::Translates(set) = &pattern {
            for walk in &set.walks {
                if walk.len() != len {
                    return Err(Error::Invalid(format!(
                        "translate of length {} in a set of base length {len}",
                        walk.len()
                    )));
                }
            }
        }
        Ok(CountingFunctional { pattern, credit })
    }

    pub fn pattern(&self) -> &CopyPattern {
        &self.pattern
    }

    pub fn credit(&self) -> u32 {
        self.credit
    }

    /// L = |w|.
    pub fn pattern_len(&self) -> usize {
        self.pattern.len()
    }

    /// The functional for w⁻¹ at the same credit.
    pub fn inverse(&self) -> CountingFunctional {
        CountingFunctional {
            pattern: self.pattern.inverse(),
            credit: self.credit,
        }
    }

    /// Multiplicative quasigeodesic constant K* = L / (L − W): optimal
    /// walks are (K*, L*)-quasigeodesics.
    pub fn k_star(&self) -> Rational64 {
        let l = self.pattern_len() as i64;
        Rational64::new(l, l - self.credit as i64)
    }

    /// Additive quasigeodesic constant L* = 2WL / (L − W).
    pub fn l_star(&self) -> Rational64 {
        let l = self.pattern_len() as i64;
        Rational64::new(2 * self.credit as i64 * l, l - self.credit as i64)
    }

    /// Derived quasigeodesic parameters for optimal-walk checks.
    pub fn qg_params(&self) -> QGParams {
        QGParams::new(self.k_star(), self.l_star(), 0)
            .expect("derived constants satisfy K ≥ 1, L ≥ 0 by construction")
    }

    /// Walk budget ρ(d) = ⌈d·L/(L−W)⌉: walks longer than this cannot
    /// beat the plain geodesic, so every evaluation may stop there.
    pub fn walk_budget(&self, d: u32) -> u64 {
        let l = self.pattern_len() as u64;
        (d as u64 * l).div_ceil(l - self.credit as u64)
    }

    pub fn describe(&self) -> String {
        format!("c[{}; W={}]", self.pattern.describe(), self.credit)
    }
}

/// Copy instances of a pattern inside a model space, as vertex tuples of
/// L+1 vertices, ascending.
///
/// For label patterns the instances are found by following the word's
/// letters from every start vertex (the walk is unique in a tree and
/// aborts when it leaves the truncation); for translate patterns they
/// are the translated walks themselves.
pub fn materialize_instances(
    model: &ModelSpace,
    pattern: &CopyPattern,
) -> Result<Vec<Vec<VertexId>>> {
    match pattern {
        CopyPattern::Labels(word) => {
            if model.rank().is_none() {
                return Err(Error::Invalid(
                    "label patterns need a free-tree model".into(),
                ));
            }
            let mut out = Vec::new();
            for v in 0..model.space().vertex_count() as u32 {
                let mut cur = model.word_of(VertexId(v))?.clone();
                let mut path = Vec::with_capacity(word.len() + 1);
                path.push(VertexId(v));
                let mut fits = true;
                for &l in word.letters() {
                    cur = cur.concat_letter(l);
                    match model.vertex_of_word(&cur) {
                        Ok(u) => path.push(u),
                        Err(Error::LeftTruncation(_)) => {
                            fits = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if fits {
                    out.push(path);
                }
            }
            Ok(out)
        }
        CopyPattern::Translates(set) => Ok(set
            .walks
            .iter()
            .map(|walk| walk.vertices().to_vec())
            .collect()),
    }
}

/// A quasimorphism specification on a finite model: the functional plus
/// the basepoint x₀.
#[derive(Debug, Clone)]
pub struct QmDescriptor {
    pub functional: CountingFunctional,
    pub basepoint: VertexId,
}

impl QmDescriptor {
    pub fn describe(&self) -> String {
        format!("{} at basepoint {}", self.functional.describe(), self.basepoint)
    }
}

/// Prepared evaluator for one quasimorphism on one finite model space:
/// product solvers for w and w⁻¹ plus cached single-source rows from the
/// basepoint.
///
/// All values are taken *inside* the model's truncation; on free-tree
/// balls they agree with the infinite tree only when the relevant tube
/// fits (use [`TreeQuasimorphism`] for guaranteed exact tree values).
#[derive(Debug)]
pub struct QmEvaluator<'a> {
    model: &'a ModelSpace,
    descriptor: QmDescriptor,
    solver_w: ProductSolver,
    solver_winv: ProductSolver,
    base_w: Vec<Option<u32>>,
    base_winv: Vec<Option<u32>>,
}

impl<'a> QmEvaluator<'a> {
    pub fn new(model: &'a ModelSpace, descriptor: QmDescriptor) -> Result<QmEvaluator<'a>> {
        if !model.space().contains(descriptor.basepoint) {
            return Err(Error::Invalid(format!(
                "basepoint {} outside the space",
                descriptor.basepoint
            )));
        }
        let f = &descriptor.functional;
        let finv = f.inverse();
        let inst_w = materialize_instances(model, f.pattern())?;
        let inst_winv = materialize_instances(model, finv.pattern())?;
        let solver_w = ProductSolver::new(model.space(), f.pattern_len(), f.credit(), inst_w)?;
        let solver_winv =
            ProductSolver::new(model.space(), f.pattern_len(), f.credit(), inst_winv)?;
        let base_w = solver_w.cw_values_from(model.space(), descriptor.basepoint);
        let base_winv = solver_winv.cw_values_from(model.space(), descriptor.basepoint);
        Ok(QmEvaluator {
            model,
            descriptor,
            solver_w,
            solver_winv,
            base_w,
            base_winv,
        })
    }

    pub fn model(&self) -> &ModelSpace {
        self.model
    }

    pub fn descriptor(&self) -> &QmDescriptor {
        &self.descriptor
    }

    pub fn solver(&self) -> &ProductSolver {
        &self.solver_w
    }

    pub fn solver_inverse(&self) -> &ProductSolver {
        &self.solver_winv
    }

    /// `c_w(x, y)` inside the model.
    pub fn cw_value(&self, x: VertexId, y: VertexId) -> Result<u32> {
        self.solver_w.cw_value(self.model.space(), x, y)
    }

    /// `h_w` at the vertex y = g·x₀.
    pub fn hw_at_vertex(&self, y: VertexId) -> Result<i64> {
        let cw = self.base_w[y.idx()].ok_or(Error::Disconnected(
            self.descriptor.basepoint.0,
            y.0,
        ))?;
        let cwinv = self.base_winv[y.idx()].ok_or(Error::Disconnected(
            self.descriptor.basepoint.0,
            y.0,
        ))?;
        Ok(cw as i64 - cwinv as i64)
    }

    /// `h_w(g) = c_w(x₀, g·x₀) − c_{w⁻¹}(x₀, g·x₀)`.
    pub fn hw_value(&self, g: &GroupElement) -> Result<i64> {
        let y = self.model.apply(g, self.descriptor.basepoint)?;
        self.hw_at_vertex(y)
    }

    /// Maximum of |h(g₁g₂) − h(g₁) − h(g₂)| over the sample.
    pub fn defect_estimate(
        &self,
        pairs: &[(GroupElement, GroupElement)],
    ) -> Result<DefectReport> {
        let mut max_defect = 0i64;
        let mut argmax = None;
        for (g1, g2) in pairs {
            let h1 = self.hw_value(g1)?;
            let h2 = self.hw_value(g2)?;
            let h12 = self.hw_value(&g1.compose(g2)?)?;
            let defect = (h12 - h1 - h2).abs();
            if defect > max_defect || argmax.is_none() {
                max_defect = defect;
                argmax = Some((g1.to_string(), g2.to_string()));
            }
        }
        Ok(DefectReport {
            max_defect,
            argmax,
            pairs_tested: pairs.len(),
        })
    }

    /// `h(fⁿ)` for n = 1..n_max with the exact least-squares slope.
    ///
    /// When the pattern is a literal power w = fᵃ of a cyclically
    /// reduced tree element, the straight power word realizes ⌊n/a⌋
    /// copies, so `c_w(x₀, fⁿx₀) ≥ W·⌊n/a⌋` is asserted along the way.
    pub fn growth_on_cyclic(&self, f: &GroupElement, n_max: u32) -> Result<GrowthReport> {
        if n_max < 2 {
            return Err(Error::Invalid("growth needs n_max ≥ 2".into()));
        }
        let power_of = match (f, self.descriptor.functional.pattern()) {
            (GroupElement::FreeWord(fw), CopyPattern::Labels(w)) => detect_power(w, fw),
            _ => None,
        };
        let mut rows = Vec::with_capacity(n_max as usize);
        for n in 1..=n_max {
            let gn = f.pow(n as i64)?;
            let y = self.model.apply(&gn, self.descriptor.basepoint)?;
            let h = self.hw_at_vertex(y)?;
            if let Some(a) = power_of {
                let cw = self.base_w[y.idx()].expect("hw_at_vertex checked reachability");
                let bound = self.descriptor.functional.credit() * (n / a);
                assert!(
                    cw >= bound,
                    "power lower bound violated: c = {cw} < {bound} at n = {n}"
                );
            }
            rows.push((n, h));
        }
        let points: Vec<(i64, i64)> = rows.iter().map(|&(n, h)| (n as i64, h)).collect();
        let slope = least_squares_slope(&points)
            .expect("n_max ≥ 2 distinct abscissae always fit a slope");
        Ok(GrowthReport {
            rows,
            slope,
            lower_bound_checked: power_of.is_some(),
        })
    }
}

/// Largest a with w = fᵃ, for cyclically reduced f (else `None`).
fn detect_power(w: &Word, f: &Word) -> Option<u32> {
    if f.is_empty() || !f.is_cyclically_reduced() || !w.len().is_multiple_of(f.len()) {
        return None;
    }
    let a = (w.len() / f.len()) as u32;
    (a >= 1 && f.pow(a as i64) == *w).then_some(a)
}

/// Defect summary: the maximum of |h(g₁g₂) − h(g₁) − h(g₂)| over a pair
/// sample, with the first pair attaining it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub max_defect: i64,
    pub argmax: Option<(String, String)>,
    pub pairs_tested: usize,
}

/// Growth of h along powers of one element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// (n, h(fⁿ)) rows for n = 1..n_max.
    pub rows: Vec<(u32, i64)>,
    /// Exact least-squares slope of the rows.
    #[serde(with = "crate::ratio_string")]
    pub slope: Rational64,
    /// Whether the power lower bound c_{fᵃ}(fⁿ) ≥ W⌊n/a⌋ was asserted.
    pub lower_bound_checked: bool,
}

/// Reference-oracle evaluation of `c_w(x, y)` on a finite model (full
/// walk enumeration; see [`oracle::WindowOracle`]).
pub fn brute_force_oracle(
    model: &ModelSpace,
    functional: &CountingFunctional,
    x: VertexId,
    y: VertexId,
) -> Result<u32> {
    WindowOracle::new(model, functional, ORACLE_STATE_BUDGET)?.cw_value(model.space(), x, y)
}

/// Exact evaluator for `h_w` on the *infinite* Cayley tree of a free
/// group.
///
/// All values are certified values of the infinite tree, not of a finite
/// ball.  Candidate walks are confined to tubes around the x–y geodesic
/// by three facts.
///
/// 1. *Escape cost.* A walk through a vertex at distance e from the
///    geodesic has length ≥ d + 2e, hence discounted length
///    ≥ (d + 2e)(L−W)/L.  Once the best value m_r found inside the
///    radius-r tube satisfies m_r·L ≤ (d + 2(r+1))(L−W), no escaping
///    walk can beat it.
/// 2. *Loop surgery.* In a tree, a maximal excursion of a walk off the
///    geodesic is a loop hanging from a single vertex.  Splicing out one
///    loop removes its m interior copies and at most 2 straddling copies
///    (copies are geodesic segments, so none contains a whole loop), so
///    optimality forces |loop| ≤ W(m + 2); interior copies are disjoint,
///    so |loop| ≥ mL, giving m ≤ 2W/(L−W) and a loop depth — hence an
///    excursion — of at most W(⌊2W/(L−W)⌋ + 2)/2, *independent of d*.
/// 3. *Convexity.* The radius-r neighborhood of a geodesic
///    ([`ModelSpace::free_tree_hull`]) is convex, so distances inside it
///    are tree distances and the copy-chain evaluator on it is exact for
///    tube-confined walks.
///
/// Evaluation deepens r until the escape-cost certificate fires or r
/// reaches the loop-surgery bound (also capped by the chain-filter bound
/// ⌊W⌊d/(L−W)⌋/2⌋ and the walk-budget bound ⌊(ρ(d)−d)/2⌋, whichever is
/// smallest); either way the returned value is the infinite-tree
/// infimum.  Exotic parameter corners (large W at non-vanishing
/// distances) may exceed the hull budget first and fail with
/// [`Error::BudgetExceeded`] rather than approximate.
#[derive(Debug, Clone)]
pub struct TreeQuasimorphism {
    rank: u8,
    pattern: Word,
    credit: u32,
    hull_budget: usize,
}

impl TreeQuasimorphism {
    pub fn new(rank: u8, pattern: Word, credit: u32) -> Result<TreeQuasimorphism> {
        if rank == 0 {
            return Err(Error::Invalid("free group rank must be at least 1".into()));
        }
        if let Some(g) = pattern.max_generator() {
            if g >= rank {
                return Err(Error::Invalid(format!(
                    "pattern uses generator #{g} outside rank {rank}"
                )));
            }
        }
        // Validates 0 < W < |w|.
        CountingFunctional::new(CopyPattern::Labels(pattern.clone()), credit)?;
        Ok(TreeQuasimorphism {
            rank,
            pattern,
            credit,
            hull_budget: DEFAULT_HULL_BUDGET,
        })
    }

    pub fn with_hull_budget(mut self, budget: usize) -> TreeQuasimorphism {
        self.hull_budget = budget;
        self
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    pub fn pattern(&self) -> &Word {
        &self.pattern
    }

    pub fn credit(&self) -> u32 {
        self.credit
    }

    pub fn functional(&self) -> CountingFunctional {
        CountingFunctional::new(CopyPattern::Labels(self.pattern.clone()), self.credit)
            .expect("validated at construction")
    }

    /// Exact infinite-tree `(c_w(x, y), c_{w⁻¹}(x, y))`.
    pub fn cw_pair_both(&self, x: &Word, y: &Word) -> Result<(u32, u32)> {
        self.evaluate(x, y, false)
    }

    /// Exact infinite-tree `c_w(x, y)`.
    pub fn cw_pair(&self, x: &Word, y: &Word) -> Result<u32> {
        Ok(self.evaluate(x, y, false)?.0)
    }

    /// Exact infinite-tree `c_w(ε, g)`.
    pub fn cw(&self, g: &Word) -> Result<u32> {
        self.cw_pair(&Word::identity(), g)
    }

    /// Exact infinite-tree `(c_w(ε, g), c_{w⁻¹}(ε, g))`.
    pub fn cw_both(&self, g: &Word) -> Result<(u32, u32)> {
        self.cw_pair_both(&Word::identity(), g)
    }

    /// `h_w(g)`, exact on the infinite tree.
    pub fn hw(&self, g: &Word) -> Result<i64> {
        let (cw, cwinv) = self.cw_both(g)?;
        Ok(cw as i64 - cwinv as i64)
    }

    /// `h_w(g)` with both evaluation routes (copy chains and the product
    /// solver) run on the final tube and required to agree.
    pub fn hw_checked(&self, g: &Word) -> Result<i64> {
        let (cw, cwinv) = self.evaluate(&Word::identity(), g, true)?;
        Ok(cw as i64 - cwinv as i64)
    }

    /// Certified-tube evaluation of both sides; `cross_check` reruns the
    /// final tube through the product solver.
    fn evaluate(&self, x: &Word, y: &Word, cross_check: bool) -> Result<(u32, u32)> {
        let l = self.pattern.len() as i64;
        let w = self.credit as i64;
        let d = x.inverse().concat(y).len() as i64;
        if d == 0 {
            return Ok((0, 0));
        }
        // Chains with k copies and discounted length ≤ d have
        // k(L − W) ≤ d; if even one copy is impossible, the geodesic is
        // optimal on both sides.
        if d / (l - w) == 0 {
            return Ok((0, 0));
        }
        let anchors = [x.clone(), y.clone()];
        let inv_pattern = self.pattern.inverse();
        // Radius beyond which tube-confined values are provably global,
        // from the loop-surgery bound (see the type docs), the chain
        // filter (an improving walk with k copies has |α| < d + Wk and
        // k(L−W) ≤ d, so its excursion is < W⌊d/(L−W)⌋/2), and the walk
        // budget (|α| ≤ ρ(d) caps excursions at (ρ(d) − d)/2).
        let m_cap = (2 * w) / (l - w);
        let e_surgery = w * (m_cap + 2) / 2;
        let e_chain = (w * (d / (l - w)) - 1).div_euclid(2);
        let e_budget = (self.functional().walk_budget(d as u32) as i64 - d) / 2;
        let e_cap = e_surgery.min(e_chain).min(e_budget).max(0);
        let mut r: i64 = (w / 2).min(e_cap);
        loop {
            let hull =
                ModelSpace::free_tree_hull(self.rank, &anchors, r as usize, self.hull_budget)?;
            let vx = hull.vertex_of_word(x)?;
            let vy = hull.vertex_of_word(y)?;
            debug_assert_eq!(
                hgraph::bfs_distance(hull.space(), vx, vy),
                Ok(d as u32),
                "hull distance must equal the word metric"
            );
            let inst_w =
                materialize_instances(&hull, &CopyPattern::Labels(self.pattern.clone()))?;
            let inst_winv =
                materialize_instances(&hull, &CopyPattern::Labels(inv_pattern.clone()))?;
            let c_w = chain_cw_value(hull.space(), l as usize, self.credit, &inst_w, vx, vy)?;
            let c_winv =
                chain_cw_value(hull.space(), l as usize, self.credit, &inst_winv, vx, vy)?;
            let m_w = d - c_w as i64;
            let m_winv = d - c_winv as i64;
            // Walks escaping the radius-r tube have discounted length at
            // least (d + 2(r+1))(L−W)/L.
            let escape_floor = (d + 2 * (r + 1)) * (l - w);
            if (m_w * l <= escape_floor && m_winv * l <= escape_floor) || r >= e_cap {
                if cross_check {
                    let sw = ProductSolver::new(hull.space(), l as usize, self.credit, inst_w)?;
                    let sv = ProductSolver::new(hull.space(), l as usize, self.credit, inst_winv)?;
                    let pw = sw.cw_value(hull.space(), vx, vy)?;
                    let pv = sv.cw_value(hull.space(), vx, vy)?;
                    if (pw, pv) != (c_w, c_winv) {
                        return Err(Error::Invalid(format!(
                            "evaluator mismatch on tube r={r}: chains ({c_w}, {c_winv}) vs \
                             product ({pw}, {pv})"
                        )));
                    }
                }
                return Ok((c_w, c_winv));
            }
            // Deepen one step at a time: m_r typically drops as the tube
            // admits more copy detours, which lowers the certificate
            // threshold, so jumping ahead on the current m would build
            // needlessly large hulls.
            r += 1;
        }
    }
}

/// Defect of a tree quasimorphism over word pairs (exact tree values).
pub fn tree_defect_estimate(
    qm: &TreeQuasimorphism,
    pairs: &[(Word, Word)],
) -> Result<DefectReport> {
    let mut cache: std::collections::BTreeMap<Word, i64> = std::collections::BTreeMap::new();
    let mut h = |g: &Word, qm: &TreeQuasimorphism| -> Result<i64> {
        if let Some(&v) = cache.get(g) {
            return Ok(v);
        }
        let v = qm.hw(g)?;
        cache.insert(g.clone(), v);
        Ok(v)
    };
    let mut max_defect = 0i64;
    let mut argmax = None;
    for (g1, g2) in pairs {
        let h1 = h(g1, qm)?;
        let h2 = h(g2, qm)?;
        let h12 = h(&g1.concat(g2), qm)?;
        let defect = (h12 - h1 - h2).abs();
        if defect > max_defect || argmax.is_none() {
            max_defect = defect;
            argmax = Some((g1.to_string(), g2.to_string()));
        }
    }
    Ok(DefectReport {
        max_defect,
        argmax,
        pairs_tested: pairs.len(),
    })
}

/// Growth of a tree quasimorphism along powers of a word (exact tree
/// values; powers are unbounded because hulls are built on demand).
pub fn tree_growth_on_cyclic(
    qm: &TreeQuasimorphism,
    f: &Word,
    n_max: u32,
) -> Result<GrowthReport> {
    if n_max < 2 {
        return Err(Error::Invalid("growth needs n_max ≥ 2".into()));
    }
    if f.is_empty() {
        return Err(Error::DegeneratePair("growth along the identity".into()));
    }
    let power_of = detect_power(qm.pattern(), f);
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let gn = f.pow(n as i64);
        let (cw, cwinv) = qm.cw_both(&gn)?;
        if let Some(a) = power_of {
            let bound = qm.credit() * (n / a);
            assert!(
                cw >= bound,
                "power lower bound violated: c = {cw} < {bound} at n = {n}"
            );
        }
        rows.push((n, cw as i64 - cwinv as i64));
    }
    let points: Vec<(i64, i64)> = rows.iter().map(|&(n, h)| (n as i64, h)).collect();
    let slope =
        least_squares_slope(&points).expect("n_max ≥ 2 distinct abscissae always fit a slope");
    Ok(GrowthReport {
        rows,
        slope,
        lower_bound_checked: power_of.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Letter;

    fn word(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn labels(s: &str) -> CopyPattern {
        CopyPattern::Labels(word(s))
    }

    #[test]
    fn derived_constants_match_hand_values() {
        let f = CountingFunctional::new(labels("abab"), 3).unwrap();
        assert_eq!(f.k_star(), Rational64::new(4, 1));
        assert_eq!(f.l_star(), Rational64::new(24, 1));
        assert_eq!(f.walk_budget(5), 20);
        let g = CountingFunctional::new(labels("ab"), 1).unwrap();
        assert_eq!(g.k_star(), Rational64::new(2, 1));
        assert_eq!(g.l_star(), Rational64::new(4, 1));
        assert_eq!(g.walk_budget(7), 14);
        // Non-divisible rounding: L = 3, W = 1 → ρ(4) = ⌈12/2⌉ = 6;
        // L = 3, W = 2 → ρ(4) = ⌈12/1⌉ = 12.
        let h = CountingFunctional::new(labels("aba"), 2).unwrap();
        assert_eq!(h.walk_budget(4), 12);
    }

    #[test]
    fn credit_domain_is_enforced() {
        assert!(matches!(
            CountingFunctional::new(labels("ab"), 0),
            Err(Error::CreditOutOfRange { credit: 0, len: 2 })
        ));
        assert!(matches!(
            CountingFunctional::new(labels("ab"), 2),
            Err(Error::CreditOutOfRange { credit: 2, len: 2 })
        ));
        assert!(matches!(
            CountingFunctional::new(labels("a"), 1),
            Err(Error::CreditOutOfRange { credit: 1, len: 1 })
        ));
    }

    #[test]
    fn pattern_inverse_is_reversed_word() {
        let p = labels("abAB").inverse();
        match p {
            CopyPattern::Labels(w) => assert_eq!(w.to_string(), "baBA"),
            _ => panic!("inverse of labels is labels"),
        }
    }

    #[test]
    fn instance_materialization_matches_hand_count() {
        // Paths spelling "ab" inside the radius-2 ball: starting words
        // ε, A, bA, AA, BA keep both intermediate words within length 2.
        let t = ModelSpace::free_tree_ball(2, 2, 100_000).unwrap();
        let inst = materialize_instances(&t, &labels("ab")).unwrap();
        assert_eq!(inst.len(), 5);
        let starts: Vec<String> = inst
            .iter()
            .map(|p| t.word_of(p[0]).unwrap().to_string())
            .collect();
        assert_eq!(starts, ["", "A", "AA", "bA", "BA"]);
    }

    #[test]
    fn tree_hw_counts_powers_exactly() {
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        for n in 1..=6i64 {
            let g = word("ab").pow(n);
            assert_eq!(qm.hw(&g).unwrap(), n, "h((ab)^{n})");
            assert_eq!(qm.hw(&g.inverse()).unwrap(), -n, "h((ab)^-{n})");
        }
        assert_eq!(qm.hw(&Word::identity()).unwrap(), 0);
    }

    #[test]
    fn off_geodesic_copies_pay_only_for_large_credit() {
        // c_{abab, W=3}(ε, aba) = 1: the copy ε→a→ab→aba→abab shares
        // three of its four steps with the geodesic and dangles one; the
        // chain pays 2 extra steps against a credit of 3. With W = 1 the
        // same dangle cannot pay, so c = 0.
        let big = TreeQuasimorphism::new(2, word("abab"), 3).unwrap();
        assert_eq!(big.cw(&word("aba")).unwrap(), 1);
        let small = TreeQuasimorphism::new(2, word("abab"), 1).unwrap();
        assert_eq!(small.cw(&word("aba")).unwrap(), 0);
        // And h sees it: no BABA copy helps in the other direction.
        assert_eq!(big.hw(&word("aba")).unwrap(), 1);
        assert_eq!(big.hw(&word("ABA")).unwrap(), -1);
    }

    #[test]
    fn vanishing_below_pattern_length() {
        // |w| > d + W forces c_w = 0 on both sides, hence h = 0.
        let qm = TreeQuasimorphism::new(2, word("ababab"), 4).unwrap();
        for g in ["a", "b", "A"] {
            assert_eq!(qm.hw(&word(g)).unwrap(), 0, "h({g})");
            assert_eq!(qm.cw(&word(g)).unwrap(), 0, "c({g})");
        }
    }

    #[test]
    fn tree_values_are_equivariant_and_dual() {
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        let qminv = TreeQuasimorphism::new(2, word("BA"), 1).unwrap();
        let samples = ["", "a", "ab", "abab", "BAb", "aaB"];
        let shifts = ["b", "Ba", "abA"];
        for x in samples {
            for y in samples {
                let (x, y) = (word(x), word(y));
                let base = qm.cw_pair(&x, &y).unwrap();
                // Duality: c_w(x, y) = c_{w⁻¹}(y, x).
                assert_eq!(qminv.cw_pair(&y, &x).unwrap(), base);
                // Equivariance: c_w(gx, gy) = c_w(x, y).
                for g in shifts {
                    let g = word(g);
                    assert_eq!(
                        qm.cw_pair(&g.concat(&x), &g.concat(&y)).unwrap(),
                        base,
                        "equivariance under {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn checked_evaluation_agrees_with_plain() {
        // Large credit keeps certified tubes affordable only at small
        // distances; small credit scales to long words.
        let qm = TreeQuasimorphism::new(2, word("abab"), 3).unwrap();
        for g in ["aba", "abab", "aB", "BBBB"] {
            assert_eq!(
                qm.hw_checked(&word(g)).unwrap(),
                qm.hw(&word(g)).unwrap(),
                "checked vs plain at {g} (abab, 3)"
            );
        }
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        for g in ["abaabab", "BBBB", "babab", "abababab"] {
            assert_eq!(
                qm.hw_checked(&word(g)).unwrap(),
                qm.hw(&word(g)).unwrap(),
                "checked vs plain at {g} (ab, 1)"
            );
        }
    }

    #[test]
    fn ball_evaluator_matches_tree_values_inside_safe_range() {
        // On a radius-3 ball with w = ab, W = 1, elements of length ≤ 2
        // have all relevant walks inside the ball, so the finite
        // evaluator must reproduce the exact tree values.
        let t = ModelSpace::free_tree_ball(2, 3, 1_000_000).unwrap();
        let f = CountingFunctional::new(labels("ab"), 1).unwrap();
        let eval = QmEvaluator::new(
            &t,
            QmDescriptor {
                functional: f,
                basepoint: t.tree_identity().unwrap(),
            },
        )
        .unwrap();
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        let mut tested = 0;
        for v in 0..t.space().vertex_count() as u32 {
            let g = t.word_of(VertexId(v)).unwrap().clone();
            if g.len() > 2 {
                continue;
            }
            let ge = GroupElement::FreeWord(g.clone());
            assert_eq!(eval.hw_value(&ge).unwrap(), qm.hw(&g).unwrap(), "at {g}");
            tested += 1;
        }
        assert_eq!(tested, 17);
    }

    #[test]
    fn defect_on_single_letters_is_one_at_ab() {
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        let letters: Vec<Word> = Letter::alphabet(2)
            .into_iter()
            .map(|l| Word::reduce(&[l]))
            .collect();
        let mut pairs = Vec::new();
        for g1 in &letters {
            for g2 in &letters {
                pairs.push((g1.clone(), g2.clone()));
            }
        }
        let report = tree_defect_estimate(&qm, &pairs).unwrap();
        assert_eq!(report.max_defect, 1);
        assert_eq!(report.pairs_tested, 16);
        // First attaining pair in iteration order: h(ab) − h(a) − h(b)
        // = 1. Letter order is a < A < b < B.
        assert_eq!(report.argmax, Some(("a".into(), "b".into())));
    }

    #[test]
    fn growth_along_ab_is_linear_with_slope_one() {
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        let report = tree_growth_on_cyclic(&qm, &word("ab"), 5).unwrap();
        assert_eq!(report.rows, vec![(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]);
        assert_eq!(report.slope, Rational64::new(1, 1));
        assert!(report.lower_bound_checked);
    }

    #[test]
    fn growth_off_pattern_stays_flat() {
        // h_{ab,1} along powers of b: no ab or BA copies ever appear.
        let qm = TreeQuasimorphism::new(2, word("ab"), 1).unwrap();
        let report = tree_growth_on_cyclic(&qm, &word("b"), 4).unwrap();
        assert_eq!(report.rows, vec![(1, 0), (2, 0), (3, 0), (4, 0)]);
        assert_eq!(report.slope, Rational64::new(0, 1));
        assert!(!report.lower_bound_checked);
    }

    #[test]
    fn oracle_entry_point_matches_solver() {
        let t = ModelSpace::free_tree_ball(2, 3, 1_000_000).unwrap();
        let f = CountingFunctional::new(labels("abAB"), 3).unwrap();
        let inst = materialize_instances(&t, f.pattern()).unwrap();
        let solver = ProductSolver::new(t.space(), 4, 3, inst).unwrap();
        let e = t.tree_identity().unwrap();
        for y in [0u32, 5, 17, 29, 52] {
            assert_eq!(
                brute_force_oracle(&t, &f, e, VertexId(y)).unwrap(),
                solver.cw_value(t.space(), e, VertexId(y)).unwrap(),
                "at vertex {y}"
            );
        }
    }

    #[test]
    fn farey_translate_functional_smoke() {
        use crate::hgraph::Walk;
        use crate::spaces::Slope;
        let f = ModelSpace::farey_ball(8, Slope::new(0, 1).unwrap(), 1_000_000).unwrap();
        let s0 = f.vertex_of_slope(Slope::new(0, 1).unwrap()).unwrap();
        let s_inf = f.vertex_of_slope(Slope::infinity()).unwrap();
        let s1 = f.vertex_of_slope(Slope::new(1, 1).unwrap()).unwrap();
        let base = Walk::new(f.space(), vec![s0, s_inf, s1]).unwrap();
        let translates = f.enumerate_translates(&base, 1).unwrap();
        assert_eq!(translates.base_len, 2);
        let functional =
            CountingFunctional::new(CopyPattern::Translates(translates), 1).unwrap();
        let eval = QmEvaluator::new(
            &f,
            QmDescriptor {
                functional,
                basepoint: s0,
            },
        )
        .unwrap();
        // Identity fixes the basepoint: h = 0 by construction.
        let id = GroupElement::Mobius(crate::spaces::Mobius::identity());
        assert_eq!(eval.hw_value(&id).unwrap(), 0);
        // A parabolic translation produces a finite value without error.
        let t = GroupElement::Mobius(
            crate::spaces::Mobius::new(1, 1, 0, 1).unwrap(),
        );
        let h = eval.hw_value(&t).unwrap();
        assert!(h.abs() <= 10, "smoke bound on a tiny ball, got {h}");
    }
}
