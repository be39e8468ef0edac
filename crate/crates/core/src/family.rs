//! Families of quasimorphisms with linear-independence certificates.
//!
//! The construction: from a non-commuting pair (g₁, g₂) and a strictly
//! increasing exponent schedule, build f_i = g₁^{n_i} g₂^{m_i} g₁^{k_i}
//! g₂^{−l_i}. Each h_i = h_{f_i^{a_i}} grows linearly on powers of f_i
//! while vanishing identically on powers of every earlier member, so no
//! finite linear combination of the h_i can be bounded unless all
//! coefficients are zero. The certificate report records exactly that
//! finite-scale evidence: diagonal growth slopes, off-diagonal zeros,
//! and defect bounds, together with every budget it was computed at.

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::brooks::{
    tree_defect_estimate, tree_growth_on_cyclic, DefectReport, GrowthReport, TreeQuasimorphism,
};
use crate::words::Word;
use crate::{Error, Result};

/// Strictly increasing exponent quadruples (n_i, m_i, k_i, l_i), with
/// optional signed prefix pairs (s_i, t_i) for the prefixed variant
/// f_i = g₁^{−s_i} g₂^{−t_i} g₁^{n_i} g₂^{m_i} g₁^{k_i} g₂^{−l_i}.
///
/// The flattened quadruple sequence n₁ < m₁ < k₁ < l₁ < n₂ < … must be
/// strictly increasing and positive — the finite-scale rendering of
/// "each exponent far larger than the previous". Prefixes are exempt
/// from the monotonicity chain; see [`ExponentSchedule::balanced_prefixes`]
/// for the choice that kills the abelianization of every family word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentSchedule {
    quads: Vec<[u64; 4]>,
    prefixes: Option<Vec<(i64, i64)>>,
}

impl ExponentSchedule {
    pub fn new(quads: Vec<[u64; 4]>) -> Result<ExponentSchedule> {
        if quads.is_empty() {
            return Err(Error::Invalid("empty exponent schedule".into()));
        }
        let mut prev: u64 = 0;
        for (pos, &e) in quads.iter().flatten().enumerate() {
            if e <= prev {
                return Err(Error::ScheduleViolation(pos));
            }
            prev = e;
        }
        Ok(ExponentSchedule {
            quads,
            prefixes: None,
        })
    }

    /// The documented default: geometric growth with ratio 4 plus a
    /// per-member shift to keep consecutive quadruples strictly
    /// separated — member i gets 4^{i−1}·(1,2,3,4) + (i−1).
    pub fn default_geometric(count: usize) -> Result<ExponentSchedule> {
        ExponentSchedule::new((1..=count).map(default_quad).collect())
    }

    /// Extend this schedule to `count` members by appending
    /// default-geometric quadruples for the missing indices.
    pub fn extended_to(&self, count: usize) -> Result<ExponentSchedule> {
        if count < self.quads.len() {
            return Err(Error::Invalid(format!(
                "cannot shrink a {}-member schedule to {count}",
                self.quads.len()
            )));
        }
        let mut quads = self.quads.clone();
        quads.extend((self.quads.len() + 1..=count).map(default_quad));
        let mut extended = ExponentSchedule::new(quads)?;
        if let Some(p) = &self.prefixes {
            let mut prefixes = p.clone();
            prefixes.extend(
                extended.quads[self.quads.len()..]
                    .iter()
                    .map(|q| balanced_prefix(*q)),
            );
            extended.prefixes = Some(prefixes);
        }
        Ok(extended)
    }

    /// Attach explicit prefix pairs (one per member).
    pub fn with_prefixes(mut self, prefixes: Vec<(i64, i64)>) -> Result<ExponentSchedule> {
        if prefixes.len() != self.quads.len() {
            return Err(Error::Invalid(format!(
                "{} prefix pairs for {} members",
                prefixes.len(),
                self.quads.len()
            )));
        }
        self.prefixes = Some(prefixes);
        Ok(self)
    }

    /// The prefix choice (s_i, t_i) = (n_i + k_i, m_i − l_i) that makes
    /// every family word's generator exponent sums vanish, placing the
    /// family in the commutator subgroup. Note t_i < 0 — the prefixed
    /// formula g₂^{−t_i} then carries a positive power; sign-free
    /// prefixes cannot balance the sums.
    pub fn balanced_prefixes(&self) -> Vec<(i64, i64)> {
        self.quads.iter().map(|q| balanced_prefix(*q)).collect()
    }

    pub fn quads(&self) -> &[[u64; 4]] {
        &self.quads
    }

    pub fn prefixes(&self) -> Option<&[(i64, i64)]> {
        self.prefixes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}

fn default_quad(i: usize) -> [u64; 4] {
    let scale = 4u64.pow(i as u32 - 1);
    let shift = (i - 1) as u64;
    [
        scale + shift,
        2 * scale + shift,
        3 * scale + shift,
        4 * scale + shift,
    ]
}

fn balanced_prefix(q: [u64; 4]) -> (i64, i64) {
    let [n, m, k, l] = q.map(|e| e as i64);
    (n + k, m - l)
}

/// The family words f_i = g₁^{n_i} g₂^{m_i} g₁^{k_i} g₂^{−l_i}
/// (prefixed by g₁^{−s_i} g₂^{−t_i} when the schedule carries
/// prefixes), reduced.
///
/// Fails with `DegeneratePair` when g₁ and g₂ commute as words — the
/// construction needs a free pair — and `Invalid` if any member
/// reduces to the identity.
pub fn make_family(g1: &Word, g2: &Word, schedule: &ExponentSchedule) -> Result<Vec<Word>> {
    if g1.is_identity() || g2.is_identity() || g1.commutes_with(g2) {
        return Err(Error::DegeneratePair(format!(
            "({g1}, {g2}) commute as words"
        )));
    }
    let mut out = Vec::with_capacity(schedule.len());
    for (idx, q) in schedule.quads().iter().enumerate() {
        let [n, m, k, l] = q.map(|e| e as i64);
        let mut f = Word::identity();
        if let Some(prefixes) = schedule.prefixes() {
            let (s, t) = prefixes[idx];
            f = f.concat(&g1.pow(-s)).concat(&g2.pow(-t));
        }
        let f = f
            .concat(&g1.pow(n))
            .concat(&g2.pow(m))
            .concat(&g1.pow(k))
            .concat(&g2.pow(-l));
        if f.is_identity() {
            return Err(Error::Invalid(format!(
                "family member {} reduced to the identity",
                idx + 1
            )));
        }
        // For distinct single-letter generators the members start with
        // g₁ and end with g₂⁻¹, so they are automatically cyclically
        // reduced; keep that checked rather than assumed.
        if g1.len() == 1 && g2.len() == 1 && schedule.prefixes().is_none() {
            let (shell, _) = f.cyclic_reduce();
            debug_assert!(shell.is_identity(), "member {f} not cyclically reduced");
        }
        out.push(f);
    }
    Ok(out)
}

/// The primed pair g₁' = g₁ᴺg₂ᴹg₁⁻ᴹg₂⁻ᴺ, g₂' = g₁ᴷg₂ᴸg₁⁻ᴷg₂⁻ᴸ with its
/// generator exponent sums.
///
/// At the level of explicit words the primed elements do *not* have
/// vanishing exponent sums (g₁' has sums N−M and M−N); what lands in
/// the commutator subgroup is a suitably prefixed family built from
/// them, not each primed word alone. The sums are therefore reported,
/// and the zero-abelianization check belongs to the family words — see
/// [`ExponentSchedule::balanced_prefixes`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommutatorVariant {
    pub g1_prime: Word,
    pub g2_prime: Word,
    /// Generator → exponent sum, for each primed word.
    pub exponent_sums: [BTreeMap<u8, i64>; 2],
}

/// Build the commutator-style pair from (g₁, g₂) and 0 < N < M < K < L.
pub fn commutator_variant(
    g1: &Word,
    g2: &Word,
    n: u64,
    m: u64,
    k: u64,
    l: u64,
) -> Result<CommutatorVariant> {
    let mut prev = 0u64;
    for (pos, e) in [n, m, k, l].into_iter().enumerate() {
        if e <= prev {
            return Err(Error::ScheduleViolation(pos));
        }
        prev = e;
    }
    let conj = |p: i64, q: i64| -> Word {
        g1.pow(p)
            .concat(&g2.pow(q))
            .concat(&g1.pow(-q))
            .concat(&g2.pow(-p))
    };
    let g1_prime = conj(n as i64, m as i64);
    let g2_prime = conj(k as i64, l as i64);
    let sums = [g1_prime.exponent_sums(), g2_prime.exponent_sums()];
    Ok(CommutatorVariant {
        g1_prime,
        g2_prime,
        exponent_sums: sums,
    })
}

/// One diagonal row of a certificate: h_i along powers of f_i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalRow {
    /// 1-based member index.
    pub member: usize,
    pub growth: GrowthReport,
}

/// One off-diagonal cell: h_i along powers of an earlier member f_j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffDiagonalCell {
    /// 1-based indices, j < i.
    pub i: usize,
    pub j: usize,
    /// h_i(f_jⁿ) for n = 1..=n_max.
    pub values: Vec<i64>,
    pub max_abs: i64,
}

/// Defect evidence for one member over the shared pair sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDefect {
    pub member: usize,
    pub defect: DefectReport,
}

/// Finite-scale linear-independence evidence for a quasimorphism
/// family: each h_i grows linearly on ⟨f_i⟩ (diagonal) and vanishes
/// exactly on the tested powers of every earlier member
/// (off-diagonal), so any nontrivial combination is unbounded. The
/// report is self-contained: every bound it was computed at is a
/// field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub members: Vec<String>,
    /// Power a_i: h_i counts copies of f_i^{a_i}.
    pub powers: Vec<u32>,
    /// Credit W shared by all members.
    pub credit: u32,
    pub n_max: u32,
    pub diagonal: Vec<DiagonalRow>,
    pub off_diagonal: Vec<OffDiagonalCell>,
    pub defects: Vec<MemberDefect>,
    pub pairs_tested: usize,
    pub hull_budget: usize,
    /// True when every diagonal slope is positive and every
    /// off-diagonal cell is exactly zero.
    pub accepted: bool,
}

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

impl CertificateReport {
    /// Human-readable summary table.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# Independence certificate ({} members, n ≤ {}, W = {})\n",
            self.members.len(),
            self.n_max,
            self.credit
        );
        let _ = writeln!(s, "| i | f_i | a_i | slope of h_i on ⟨f_i⟩ | max |h_i| on earlier ⟨f_j⟩ | max defect |");
        let _ = writeln!(s, "|---|-----|-----|------------------------|-----------------------------|------------|");
        for row in &self.diagonal {
            let i = row.member;
            let off = self
                .off_diagonal
                .iter()
                .filter(|c| c.i == i)
                .map(|c| c.max_abs)
                .max()
                .unwrap_or(0);
            let defect = self
                .defects
                .iter()
                .find(|d| d.member == i)
                .map(|d| d.defect.max_defect.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                i,
                self.members[i - 1],
                self.powers[i - 1],
                row.growth.slope,
                off,
                defect
            );
        }
        let _ = writeln!(
            s,
            "\nVerdict: {}.",
            if self.accepted {
                "accepted (positive diagonal growth, exact off-diagonal zeros)"
            } else {
                "REJECTED"
            }
        );
        s
    }
}

/// Run the independence certificate for a family of free-group words.
///
/// Builds h_i from the pattern f_i^{a_i} at credit W = 1 (the
/// integer-valued, maximal-vanishing choice), then evaluates:
/// diagonal growth h_i(f_iⁿ), off-diagonal values h_i(f_jⁿ) for j < i,
/// and the defect of each h_i over `pair_sample`. All values are exact
/// infinite-tree evaluations.
pub fn independence_certificate(
    rank: u8,
    family: &[Word],
    powers: &[u32],
    n_max: u32,
    pair_sample: &[(Word, Word)],
) -> Result<CertificateReport> {
    independence_certificate_budgeted(
        rank,
        family,
        powers,
        n_max,
        pair_sample,
        crate::brooks::DEFAULT_HULL_BUDGET,
    )
}

/// [`independence_certificate`] with an explicit hull-vertex budget for
/// every tree evaluation.
pub fn independence_certificate_budgeted(
    rank: u8,
    family: &[Word],
    powers: &[u32],
    n_max: u32,
    pair_sample: &[(Word, Word)],
    hull_budget: usize,
) -> Result<CertificateReport> {
    if family.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    if powers.len() != family.len() {
        return Err(Error::Invalid(format!(
            "{} powers for {} members",
            powers.len(),
            family.len()
        )));
    }
    let credit = 1u32;
    let qms: Vec<TreeQuasimorphism> = family
        .iter()
        .zip(powers)
        .map(|(f, &a)| {
            if a == 0 {
                return Err(Error::Invalid("power schedule entries must be ≥ 1".into()));
            }
            Ok(TreeQuasimorphism::new(rank, f.pow(a as i64), credit)?.with_hull_budget(hull_budget))
        })
        .collect::<Result<_>>()?;

    let mut diagonal = Vec::with_capacity(family.len());
    let mut off_diagonal = Vec::new();
    let mut defects = Vec::with_capacity(family.len());
    for (idx, qm) in qms.iter().enumerate() {
        let i = idx + 1;
        let growth = tree_growth_on_cyclic(qm, &family[idx], n_max)?;
        diagonal.push(DiagonalRow { member: i, growth });
        for (jdx, fj) in family.iter().enumerate().take(idx) {
            let mut values = Vec::with_capacity(n_max as usize);
            for n in 1..=n_max {
                values.push(qm.hw(&fj.pow(n as i64))?);
            }
            let max_abs = values.iter().map(|v| v.abs()).max().unwrap_or(0);
            off_diagonal.push(OffDiagonalCell {
                i,
                j: jdx + 1,
                values,
                max_abs,
            });
        }
        let defect = tree_defect_estimate(qm, pair_sample)?;
        defects.push(MemberDefect { member: i, defect });
    }

    let accepted = diagonal
        .iter()
        .all(|r| r.growth.slope > Rational64::zero())
        && off_diagonal.iter().all(|c| c.max_abs == 0);
    Ok(CertificateReport {
        schema_version: CERTIFICATE_SCHEMA_VERSION,
        members: family.iter().map(|f| f.to_string()).collect(),
        powers: powers.to_vec(),
        credit,
        n_max,
        diagonal,
        off_diagonal,
        defects,
        pairs_tested: pair_sample.len(),
        hull_budget,
        accepted,
    })
}

/// Value and support evidence of a finite combination Σ tᵢ·hᵢ(g).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ell1Report {
    #[serde(with = "crate::ratio_string")]
    pub value: Rational64,
    /// hᵢ(g) for each member.
    pub contributions: Vec<i64>,
    /// Members forced to zero by the analytic cutoff
    /// |f_i^{a_i}| > d(x₀, g·x₀) + W (1-based indices).
    pub cutoff_indices: Vec<usize>,
    /// Every cutoff member indeed evaluated to zero.
    pub cutoff_verified: bool,
}

/// Σ tᵢ·hᵢ(g) for a finitely supported rational coefficient vector,
/// with the finite-support mechanism checked: any member whose pattern
/// is longer than d(x₀, g·x₀) + W must contribute zero.
pub fn ell1_combination(
    qms: &[TreeQuasimorphism],
    coeffs: &[Rational64],
    g: &Word,
) -> Result<Ell1Report> {
    if qms.len() != coeffs.len() {
        return Err(Error::Invalid(format!(
            "{} coefficients for {} quasimorphisms",
            coeffs.len(),
            qms.len()
        )));
    }
    let d = g.len() as u64;
    let mut contributions = Vec::with_capacity(qms.len());
    let mut cutoff_indices = Vec::new();
    let mut cutoff_verified = true;
    let mut value = Rational64::zero();
    for (idx, (qm, t)) in qms.iter().zip(coeffs).enumerate() {
        let h = qm.hw(g)?;
        if (qm.pattern().len() as u64) > d + qm.credit() as u64 {
            cutoff_indices.push(idx + 1);
            cutoff_verified &= h == 0;
        }
        contributions.push(h);
        value += *t * Rational64::from_integer(h);
    }
    Ok(Ell1Report {
        value,
        contributions,
        cutoff_indices,
        cutoff_verified,
    })
}

/// The coordinate-sum quasimorphism on p-tuples: Σ_r h_w(g_r).
///
/// `perm` must be a permutation of 0..p; the sum is evaluated in the
/// permuted order, which cannot change it — that invariance is exactly
/// what makes the extension to the permutation-wreath product
/// well-defined, so the argument is part of the contract rather than
/// of the value.
pub fn product_qm(
    qm: &TreeQuasimorphism,
    p: usize,
    perm: &[usize],
    tuple: &[Word],
) -> Result<i64> {
    if tuple.len() != p {
        return Err(Error::Invalid(format!(
            "tuple has {} coordinates, expected p = {p}",
            tuple.len()
        )));
    }
    let mut seen = vec![false; p];
    for &r in perm {
        if r >= p || seen[r] {
            return Err(Error::Invalid(format!(
                "perm is not a permutation of 0..{p}"
            )));
        }
        seen[r] = true;
    }
    if perm.len() != p {
        return Err(Error::Invalid(format!(
            "perm has {} entries, expected p = {p}",
            perm.len()
        )));
    }
    let mut sum = 0i64;
    for &r in perm {
        sum += qm.hw(&tuple[r])?;
    }
    Ok(sum)
}
