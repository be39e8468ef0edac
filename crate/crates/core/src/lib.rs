//! Counting quasimorphisms on hyperbolic graphs.
//!
//! This crate computes counting functionals `c_w(x, y)` and the derived
//! antisymmetrized quasimorphisms `h_w` on concrete finite models of
//! hyperbolic spaces — Cayley trees of free groups and the Farey graph —
//! together with:
//!
//! * hyperbolicity diagnostics for finite graphs ([`hgraph`]),
//! * exact evaluation on free-group trees via convex hulls around
//!   geodesics ([`spaces`], [`brooks`]),
//! * quasi-axis extraction and a coarse weak-proper-discontinuity
//!   experiment ([`axes`]),
//! * construction of explicit infinite families of quasimorphisms with
//!   a machine-checkable linear-independence certificate ([`family`]).
//!
//! All public entry points are deterministic: given equal inputs they
//! produce byte-for-byte equal outputs, independent of hash-map iteration
//! order or thread scheduling. Nothing in this crate spawns threads or
//! performs I/O other than (de)serialization of explicitly passed data.
//!
//! # Conventions
//!
//! * Graphs carry the path metric with unit edge lengths; distances are
//!   `u32` hop counts.
//! * Free-group words are always stored freely reduced; see [`words`].
//! * Rational constants (quasigeodesic parameters, ℓ¹ coefficients) use
//!   exact `num_rational::Rational64` arithmetic, never floats.
//! * Every search over an a-priori infinite object (balls in the tree,
//!   walk enumerations, orbit scans) takes an explicit budget and fails
//!   with [`Error::BudgetExceeded`] instead of silently truncating,
//!   unless the function's contract states a stamped truncation policy.

pub mod axes;
pub mod brooks;
pub mod family;
pub mod hgraph;
pub mod spaces;
pub mod words;

pub use brooks::{
    CountingFunctional, CopyPattern, DefectReport, GrowthReport, QmDescriptor, QmEvaluator,
    TreeQuasimorphism,
};
pub use family::{
    commutator_variant, ell1_combination, independence_certificate,
    independence_certificate_budgeted, make_family, product_qm, CertificateReport,
    CommutatorVariant, Ell1Report, ExponentSchedule,
};
pub use hgraph::{Space, Truncation, VertexId, Walk};
pub use spaces::{Action, GroupElement, Mobius, ModelSpace, Slope, TranslateSet};
pub use words::{Letter, Word};

/// Serde adapter storing a `Rational64` as the exact text `"p/q"`.
///
/// Floats would silently round (e.g. 1/3); this keeps report files exact
/// and byte-stable. Used via `#[serde(with = "crate::ratio_string")]`.
pub mod ratio_string {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let text = String::deserialize(d)?;
        let (p, q) = text
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected \"p/q\""))?;
        let p: i64 = p.trim().parse().map_err(serde::de::Error::custom)?;
        let q: i64 = q.trim().parse().map_err(serde::de::Error::custom)?;
        if q == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational64::new(p, q))
    }
}

/// Unified error type for the whole crate.
#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum Error {
    /// Two vertices lie in different connected components, so no distance
    /// or geodesic between them exists.
    #[error("vertices {0} and {1} are not connected")]
    Disconnected(u32, u32),

    /// A requested object (ball, hull, enumeration, product) would exceed
    /// the stated size budget.
    #[error("budget exceeded: {context} needs more than {budget} {unit}")]
    BudgetExceeded {
        context: &'static str,
        budget: usize,
        unit: &'static str,
    },

    /// An exhaustive search or walk enumeration exceeded its step budget
    /// without converging.
    #[error("search budget of {0} steps exhausted in {1}")]
    SearchExhausted(usize, &'static str),

    /// An action image, orbit point, or required lookup left the finite
    /// truncation: the point exists in the infinite space but not in the
    /// built one.
    #[error("left the truncation: {0}")]
    LeftTruncation(String),

    /// Input text failed to parse (word syntax, slope syntax, config).
    #[error("parse error: {0}")]
    Parse(String),

    /// A structural invariant on the input data was violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Weight parameters out of range: a counting functional requires
    /// `0 < credit < pattern length`.
    #[error("credit {credit} not in the open interval (0, {len}) set by the pattern length")]
    CreditOutOfRange { credit: u32, len: usize },

    /// The exponent schedule for a quasimorphism family is not strictly
    /// increasing in the flattened order.
    #[error("exponent schedule not strictly increasing at position {0}")]
    ScheduleViolation(usize),

    /// A vertex pair degenerate for the requested construction (e.g. a
    /// quasi-axis through a fixed point, or x = y where distinct points
    /// are required).
    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    /// Integer overflow in exact arithmetic (matrix entries, slopes).
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
