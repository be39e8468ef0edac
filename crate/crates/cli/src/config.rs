//! The run configuration: one document drives every pipeline, whether
//! it arrives as command-line flags or as a JSON file (`qm run
//! --config run.json`). Flags and file form build the identical
//! structure, so artifacts are byte-identical between the two routes.

use serde::{Deserialize, Serialize};

use qm_core::{Mobius, Slope, Word};

/// A parsed `--space` specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSpec {
    /// `f<rank>:radius=<r>` — the radius-r ball in the Cayley tree of
    /// the free group of the given rank.
    Tree { rank: u8, radius: usize },
    /// `farey:q=<bound>[,center=<p/q>]` — Farey-graph vertices with
    /// |q| ≤ bound (plus ∞), BFS-seeded at `center` (default 0/1).
    Farey { q_bound: i64, center: Slope },
}

impl SpaceSpec {
    pub fn parse(s: &str) -> Result<SpaceSpec, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("`{s}`: expected `<kind>:<parameters>`"))?;
        if kind == "farey" {
            let mut q_bound: Option<i64> = None;
            let mut center = Slope::new(0, 1).expect("0/1 is a valid slope");
            for part in rest.split(',') {
                match part.split_once('=') {
                    Some(("q", v)) => {
                        let q = v
                            .parse::<i64>()
                            .map_err(|_| format!("`{v}`: q must be a positive integer"))?;
                        if q < 1 {
                            return Err("q must be positive".into());
                        }
                        q_bound = Some(q);
                    }
                    Some(("center", v)) => {
                        center = Slope::parse(v).map_err(|e| e.to_string())?;
                    }
                    _ => return Err(format!("`{part}`: expected q=<bound> or center=<p/q>")),
                }
            }
            let q_bound = q_bound.ok_or("farey spec needs q=<bound>")?;
            return Ok(SpaceSpec::Farey { q_bound, center });
        }
        if let Some(rank_text) = kind.strip_prefix('f') {
            let rank: u8 = rank_text
                .parse()
                .map_err(|_| format!("`{kind}`: expected f<rank>, e.g. f2"))?;
            if !(2..=9).contains(&rank) {
                return Err(format!("rank {rank} out of range 2..=9"));
            }
            let radius = rest
                .strip_prefix("radius=")
                .ok_or_else(|| format!("`{rest}`: expected radius=<r>"))?
                .parse::<usize>()
                .map_err(|_| format!("`{rest}`: radius must be a positive integer"))?;
            if radius == 0 {
                return Err("radius must be positive".into());
            }
            return Ok(SpaceSpec::Tree { rank, radius });
        }
        Err(format!("`{kind}`: unknown space kind (f<rank> or farey)"))
    }
}

/// Pair selection for the defect pipeline.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    All,
    Sample,
}

/// Triple selection for the delta pipeline.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TripleMode {
    All,
    Sample,
}

fn default_credit() -> u32 {
    1
}

fn default_n_max() -> u32 {
    5
}

/// The operation selector with its operation-specific parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Operation {
    /// h_w(g) at the basepoint, optionally verified against the
    /// walk-enumeration oracle.
    Eval {
        w: String,
        #[serde(default = "default_credit")]
        credit: u32,
        g: String,
        #[serde(default)]
        basepoint: Option<String>,
        #[serde(default)]
        oracle_check: bool,
    },
    /// max |h(g₁g₂) − h(g₁) − h(g₂)| over element pairs up to `bound`.
    Defect {
        w: String,
        #[serde(default = "default_credit")]
        credit: u32,
        pairs: PairMode,
        bound: usize,
        #[serde(default)]
        count: Option<usize>,
    },
    /// h(fⁿ) rows for n = 1..n_max with the least-squares slope.
    Growth {
        w: String,
        #[serde(default = "default_credit")]
        credit: u32,
        f: String,
        n_max: u32,
    },
    /// Linear-independence certificate for the family built from
    /// (g1, g2) and the exponent schedule.
    Certificate {
        g1: String,
        g2: String,
        schedule: String,
        count: usize,
        #[serde(default)]
        powers: Option<Vec<u32>>,
        #[serde(default = "default_n_max")]
        n_max: u32,
    },
    /// Coarse stabilizer {γ : d(x₀, γx₀) ≤ C and d(gᴺx₀, γgᴺx₀) ≤ C}.
    Wpd {
        g: String,
        x0: String,
        c: u32,
        n_power: u32,
        enum_bound: usize,
    },
    /// Thin-triangle constant over all (or sampled) vertex triples.
    Delta {
        triples: TripleMode,
        #[serde(default)]
        count: Option<usize>,
    },
    /// Exact joint stabilizer of two Farey vertices.
    FareyStab {
        a: String,
        b: String,
        enum_bound: usize,
    },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Eval { .. } => "eval",
            Operation::Defect { .. } => "defect",
            Operation::Growth { .. } => "growth",
            Operation::Certificate { .. } => "certificate",
            Operation::Wpd { .. } => "wpd",
            Operation::Delta { .. } => "delta",
            Operation::FareyStab { .. } => "farey-stab",
        }
    }
}

/// Everything a run needs; this structure is echoed verbatim into every
/// artifact, and the JSON form accepted by `qm run --config` mirrors it
/// field for field.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    /// Space specification, e.g. `f2:radius=6` or `farey:q=60`. The
    /// certificate pipeline computes exact infinite-tree values and
    /// needs no space.
    #[serde(default)]
    pub space: Option<String>,
    #[serde(flatten)]
    pub op: Operation,
    /// Recorded in every artifact; consumed by the sampling pipelines.
    #[serde(default)]
    pub seed: u64,
    /// JSON artifact path (omit to skip the file).
    #[serde(default)]
    pub out: Option<String>,
    /// CSV artifact path (growth pipeline).
    #[serde(default)]
    pub csv: Option<String>,
    /// Markdown summary path (certificate pipeline).
    #[serde(default)]
    pub markdown: Option<String>,
}

fn field_err<T>(field: &str, detail: impl std::fmt::Display) -> Result<T, String> {
    Err(format!("field `{field}`: {detail}"))
}

fn parse_word(field: &str, text: &str) -> Result<Word, String> {
    Word::parse(text).map_err(|e| format!("field `{field}`: {e}"))
}

fn parse_slope(field: &str, text: &str) -> Result<Slope, String> {
    Slope::parse(text).map_err(|e| format!("field `{field}`: {e}"))
}

/// Parse a schedule spec: `default`, or quadruples like
/// `1,2,3,4;5,6,7,8`.
pub fn parse_schedule(spec: &str, count: usize) -> Result<qm_core::ExponentSchedule, String> {
    let schedule = if spec == "default" {
        qm_core::ExponentSchedule::default_geometric(count)
    } else {
        let mut quads = Vec::new();
        for quad_text in spec.split(';') {
            let entries: Vec<u64> = quad_text
                .split(',')
                .map(|e| e.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("`{quad_text}`: expected four positive integers"))?;
            let quad: [u64; 4] = entries
                .try_into()
                .map_err(|_| format!("`{quad_text}`: expected exactly four entries"))?;
            quads.push(quad);
        }
        qm_core::ExponentSchedule::new(quads).and_then(|s| s.extended_to(count))
    };
    schedule.map_err(|e| e.to_string())
}

impl RunConfig {
    /// Check every field before any computation starts. Errors name the
    /// offending field; they are usage errors (exit 1), in contrast to
    /// failures inside the pipeline (exit 2).
    pub fn validate(&self) -> Result<(), String> {
        let space = match &self.space {
            Some(text) => match SpaceSpec::parse(text) {
                Ok(s) => Some(s),
                Err(e) => return field_err("space", e),
            },
            None => {
                if !matches!(self.op, Operation::Certificate { .. }) {
                    return field_err("space", "required for this pipeline");
                }
                None
            }
        };
        let tree_radius = match space {
            Some(SpaceSpec::Tree { radius, .. }) => Some(radius),
            _ => None,
        };
        let need_tree = |op: &str| -> Result<usize, String> {
            tree_radius.ok_or(format!(
                "field `space`: {op} computes label-pattern functionals and needs a free-tree \
                 space (f<rank>:radius=<r>)"
            ))
        };
        let check_functional = |w: &str, credit: u32| -> Result<Word, String> {
            let word = parse_word("w", w)?;
            if credit == 0 || credit as usize >= word.len() {
                return field_err(
                    "W",
                    format!("credit {credit} must satisfy 0 < W < |w| = {}", word.len()),
                );
            }
            Ok(word)
        };
        match &self.op {
            Operation::Eval {
                w,
                credit,
                g,
                basepoint,
                ..
            } => {
                let radius = need_tree("eval")?;
                check_functional(w, *credit)?;
                let g = parse_word("g", g)?;
                let x0 = match basepoint {
                    Some(b) => parse_word("basepoint", b)?,
                    None => Word::identity(),
                };
                if x0.len() > radius {
                    return field_err("basepoint", "outside the ball radius");
                }
                if x0.concat(&g).len() > radius {
                    return field_err(
                        "g",
                        format!("g·x₀ leaves the radius-{radius} ball; enlarge the space"),
                    );
                }
            }
            Operation::Defect {
                w,
                credit,
                pairs,
                bound,
                count,
            } => {
                let radius = need_tree("defect")?;
                check_functional(w, *credit)?;
                if *bound == 0 {
                    return field_err("bound", "must be positive");
                }
                if 2 * bound > radius {
                    return field_err(
                        "bound",
                        format!("products reach length {}, outside radius {radius}", 2 * bound),
                    );
                }
                match (pairs, count) {
                    (PairMode::Sample, None) => {
                        return field_err("count", "required when pairs = sample")
                    }
                    (PairMode::Sample, Some(0)) => return field_err("count", "must be positive"),
                    _ => {}
                }
            }
            Operation::Growth { w, credit, f, n_max } => {
                let radius = need_tree("growth")?;
                check_functional(w, *credit)?;
                let f = parse_word("f", f)?;
                if f.is_identity() {
                    return field_err("f", "growth along the identity is degenerate");
                }
                if *n_max < 2 {
                    return field_err("n_max", "growth needs n_max ≥ 2");
                }
                let reach = (1..=*n_max as i64).map(|n| f.pow(n).len()).max().unwrap();
                if reach > radius {
                    return field_err(
                        "n_max",
                        format!("fⁿ reaches length {reach}, outside radius {radius}"),
                    );
                }
            }
            Operation::Certificate {
                g1,
                g2,
                schedule,
                count,
                powers,
                n_max,
            } => {
                let g1 = parse_word("g1", g1)?;
                let g2 = parse_word("g2", g2)?;
                if g1.is_identity() || g2.is_identity() || g1.commutes_with(&g2) {
                    return field_err("g1", "generators must be non-commuting and nontrivial");
                }
                if *count == 0 {
                    return field_err("count", "must be positive");
                }
                parse_schedule(schedule, *count).map_err(|e| format!("field `schedule`: {e}"))?;
                if let Some(p) = powers {
                    if p.len() != *count {
                        return field_err(
                            "powers",
                            format!("{} entries for {count} members", p.len()),
                        );
                    }
                    if p.contains(&0) {
                        return field_err("powers", "entries must be ≥ 1");
                    }
                }
                if *n_max < 2 {
                    return field_err("n_max", "growth needs n_max ≥ 2");
                }
            }
            Operation::Wpd {
                g,
                x0,
                n_power,
                enum_bound,
                ..
            } => {
                if tree_radius.is_some() {
                    return field_err("space", "wpd runs on the Farey model (farey:q=<bound>)");
                }
                Mobius::parse(g).map_err(|e| format!("field `g`: {e}"))?;
                parse_slope("x0", x0)?;
                if *n_power == 0 {
                    return field_err("n_power", "must be positive");
                }
                if *enum_bound == 0 {
                    return field_err("enum_bound", "must be positive");
                }
            }
            Operation::Delta { triples, count } => match (triples, count) {
                (TripleMode::Sample, None) => {
                    return field_err("count", "required when triples = sample")
                }
                (TripleMode::Sample, Some(0)) => return field_err("count", "must be positive"),
                _ => {}
            },
            Operation::FareyStab { a, b, enum_bound } => {
                if tree_radius.is_some() {
                    return field_err("space", "farey-stab needs a Farey space (farey:q=<bound>)");
                }
                let a = parse_slope("a", a)?;
                let b = parse_slope("b", b)?;
                if a == b {
                    return field_err("b", "the two slopes must be distinct");
                }
                if *enum_bound == 0 {
                    return field_err("enum_bound", "must be positive");
                }
            }
        }
        if self.csv.is_some() && !matches!(self.op, Operation::Growth { .. }) {
            return field_err("csv", "only the growth pipeline emits CSV");
        }
        if self.markdown.is_some() && !matches!(self.op, Operation::Certificate { .. }) {
            return field_err("markdown", "only the certificate pipeline emits markdown");
        }
        Ok(())
    }
}
