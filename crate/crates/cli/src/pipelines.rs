//! One function per subcommand, all behind [`execute`]: build the
//! model space, run the computation, render the artifacts. Everything
//! here assumes the configuration already passed
//! [`RunConfig::validate`]; failures past that point are computation
//! errors (budget exhaustion, oracle mismatch), not usage errors.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qm_core::axes::{stabilizer_intersection, wpd_coarse_stabilizer};
use qm_core::brooks::oracle::WindowOracle;
use qm_core::hgraph::{delta_estimate, TripleSample, VertexId};
use qm_core::{
    independence_certificate_budgeted, make_family, CopyPattern, CountingFunctional, GroupElement,
    Mobius, ModelSpace, QmDescriptor, QmEvaluator, Slope, Word,
};
use serde::Serialize;

use crate::artifacts::{export_growth_csv, Envelope};
use crate::config::{Operation, PairMode, RunConfig, SpaceSpec, TripleMode};

/// What a finished run hands back to `main`: the headline value for
/// stdout and the artifact files written.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub artifacts: Vec<PathBuf>,
}

/// The artifact payloads of one run, before any file I/O.
struct Rendered {
    stdout: String,
    json: String,
    csv: Option<String>,
    markdown: Option<String>,
}

fn capped(default: usize, cap: Option<usize>) -> usize {
    cap.map_or(default, |c| default.min(c))
}

fn build_model(spec: SpaceSpec, cap: Option<usize>) -> qm_core::Result<ModelSpace> {
    let budget = capped(qm_core::spaces::DEFAULT_VERTEX_BUDGET, cap);
    match spec {
        SpaceSpec::Tree { rank, radius } => ModelSpace::free_tree_ball(rank, radius, budget),
        SpaceSpec::Farey { q_bound, center } => ModelSpace::farey_ball(q_bound, center, budget),
    }
}

fn truncation_stamp(model: &ModelSpace) -> Option<String> {
    model
        .space()
        .truncation()
        .map(|t| format!("{}={}", t.kind, t.parameter))
}

fn functional(w: &str, credit: u32) -> qm_core::Result<CountingFunctional> {
    CountingFunctional::new(CopyPattern::Labels(Word::parse(w)?), credit)
}

/// Run the configured pipeline and write its artifacts.
///
/// `budget_cap` (from `QM_BUDGET_CAP`) clamps every internal budget —
/// model vertices, oracle states, tube hulls — so a hard ceiling can be
/// imposed without touching the configuration.
pub fn execute(config: &RunConfig, budget_cap: Option<usize>) -> Result<Outcome> {
    // Validation guarantees the space specifier parses and is present
    // whenever the pipeline needs a model space.
    let spec = || {
        SpaceSpec::parse(config.space.as_deref().expect("validated"))
            .expect("validated configs have a well-formed space spec")
    };
    let rendered = match &config.op {
        Operation::Eval {
            w,
            credit,
            g,
            basepoint,
            oracle_check,
        } => eval(config, spec(), budget_cap, w, *credit, g, basepoint.as_deref(), *oracle_check)?,
        Operation::Defect {
            w,
            credit,
            pairs,
            bound,
            count,
        } => defect(config, spec(), budget_cap, w, *credit, pairs, *bound, *count)?,
        Operation::Growth { w, credit, f, n_max } => {
            growth(config, spec(), budget_cap, w, *credit, f, *n_max)?
        }
        Operation::Certificate {
            g1,
            g2,
            schedule,
            count,
            powers,
            n_max,
        } => certificate(config, budget_cap, g1, g2, schedule, *count, powers.as_deref(), *n_max)?,
        Operation::Wpd {
            g,
            x0,
            c,
            n_power,
            enum_bound,
        } => wpd(config, spec(), budget_cap, g, x0, *c, *n_power, *enum_bound)?,
        Operation::Delta { triples, count } => delta(config, spec(), budget_cap, triples, *count)?,
        Operation::FareyStab { a, b, enum_bound } => {
            farey_stab(config, spec(), budget_cap, a, b, *enum_bound)?
        }
    };

    let mut artifacts = Vec::new();
    let mut write = |path: &Option<String>, bytes: Option<&str>| -> Result<()> {
        if let (Some(path), Some(bytes)) = (path, bytes) {
            std::fs::write(path, bytes).with_context(|| format!("writing {path}"))?;
            artifacts.push(PathBuf::from(path));
        }
        Ok(())
    };
    write(&config.out, Some(&rendered.json))?;
    write(&config.csv, rendered.csv.as_deref())?;
    write(&config.markdown, rendered.markdown.as_deref())?;

    Ok(Outcome {
        stdout: rendered.stdout,
        artifacts,
    })
}

#[derive(Debug, Serialize)]
struct EvalResult {
    h_value: i64,
    /// c_w and c_{w⁻¹} legs of h at the basepoint.
    cw: u32,
    cw_inverse: u32,
    /// Oracle value when `oracle_check` ran (always equal to `h_value`;
    /// a mismatch aborts the run instead of writing an artifact).
    oracle_h_value: Option<i64>,
}

#[allow(clippy::too_many_arguments)]
fn eval(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    w: &str,
    credit: u32,
    g: &str,
    basepoint: Option<&str>,
    oracle_check: bool,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let f_w = functional(w, credit)?;
    let f_winv = CountingFunctional::new(
        CopyPattern::Labels(Word::parse(w)?.inverse()),
        credit,
    )?;
    let x0 = match basepoint {
        Some(b) => model.vertex_of_word(&Word::parse(b)?)?,
        None => model.tree_identity()?,
    };
    let evaluator = QmEvaluator::new(
        &model,
        QmDescriptor {
            functional: f_w.clone(),
            basepoint: x0,
        },
    )?;
    let element = GroupElement::FreeWord(Word::parse(g)?);
    let h_value = evaluator.hw_value(&element)?;
    let y = model.apply(&element, x0)?;
    let cw = evaluator.cw_value(x0, y)?;
    let inv_evaluator = QmEvaluator::new(
        &model,
        QmDescriptor {
            functional: f_winv.clone(),
            basepoint: x0,
        },
    )?;
    let cw_inverse = inv_evaluator.cw_value(x0, y)?;

    let mut oracle_h_value = None;
    if oracle_check {
        let state_budget = capped(qm_core::brooks::oracle::ORACLE_STATE_BUDGET, cap);
        let o_w = WindowOracle::new(&model, &f_w, state_budget)?
            .cw_value(model.space(), x0, y)?;
        let o_winv = WindowOracle::new(&model, &f_winv, state_budget)?
            .cw_value(model.space(), x0, y)?;
        let oracle_value = o_w as i64 - o_winv as i64;
        if oracle_value != h_value {
            bail!("oracle mismatch: solver h = {h_value}, enumeration oracle h = {oracle_value}");
        }
        oracle_h_value = Some(oracle_value);
    }

    let result = EvalResult {
        h_value,
        cw,
        cw_inverse,
        oracle_h_value,
    };
    Ok(Rendered {
        stdout: h_value.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), oracle_check, result).render(),
        csv: None,
        markdown: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn defect(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    w: &str,
    credit: u32,
    pairs: &PairMode,
    bound: usize,
    count: Option<usize>,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let x0 = model.tree_identity()?;
    let evaluator = QmEvaluator::new(
        &model,
        QmDescriptor {
            functional: functional(w, credit)?,
            basepoint: x0,
        },
    )?;
    let elements = model.enumerate_group_elements(bound)?;
    let sample: Vec<(GroupElement, GroupElement)> = match pairs {
        PairMode::All => elements
            .iter()
            .flat_map(|g1| elements.iter().map(move |g2| (g1.clone(), g2.clone())))
            .collect(),
        PairMode::Sample => {
            let count = count.expect("validation requires count in sample mode");
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            (0..count)
                .map(|_| {
                    let g1 = elements[rng.gen_range(0..elements.len())].clone();
                    let g2 = elements[rng.gen_range(0..elements.len())].clone();
                    (g1, g2)
                })
                .collect()
        }
    };
    let report = evaluator.defect_estimate(&sample)?;
    Ok(Rendered {
        stdout: report.max_defect.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), false, report).render(),
        csv: None,
        markdown: None,
    })
}

fn growth(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    w: &str,
    credit: u32,
    f: &str,
    n_max: u32,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let x0 = model.tree_identity()?;
    let evaluator = QmEvaluator::new(
        &model,
        QmDescriptor {
            functional: functional(w, credit)?,
            basepoint: x0,
        },
    )?;
    let report = evaluator.growth_on_cyclic(&GroupElement::FreeWord(Word::parse(f)?), n_max)?;
    let csv = export_growth_csv(&report.rows);
    let checked = report.lower_bound_checked;
    Ok(Rendered {
        stdout: report.slope.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), checked, report).render(),
        csv: Some(csv),
        markdown: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn certificate(
    config: &RunConfig,
    cap: Option<usize>,
    g1: &str,
    g2: &str,
    schedule: &str,
    count: usize,
    powers: Option<&[u32]>,
    n_max: u32,
) -> Result<Rendered> {
    let g1 = Word::parse(g1)?;
    let g2 = Word::parse(g2)?;
    let schedule = crate::config::parse_schedule(schedule, count)
        .expect("validated configs have a well-formed schedule");
    let family = make_family(&g1, &g2, &schedule)?;
    let powers: Vec<u32> = match powers {
        Some(p) => p.to_vec(),
        None => vec![1; count],
    };
    // Deterministic pair sample: (f, f) and (f, f⁻¹) per member, then
    // every ordered cross pair.
    let mut pair_sample: Vec<(Word, Word)> = Vec::new();
    for f in &family {
        pair_sample.push((f.clone(), f.clone()));
        pair_sample.push((f.clone(), f.inverse()));
    }
    for fi in &family {
        for fj in &family {
            if fi != fj {
                pair_sample.push((fi.clone(), fj.clone()));
            }
        }
    }
    let rank = family
        .iter()
        .chain([&g1, &g2])
        .filter_map(|w| w.max_generator())
        .max()
        .map_or(2, |g| (g + 1).max(2));
    let hull_budget = capped(qm_core::brooks::DEFAULT_HULL_BUDGET, cap);
    let report =
        independence_certificate_budgeted(rank, &family, &powers, n_max, &pair_sample, hull_budget)?;
    let markdown = report.to_markdown();
    let checked = report.diagonal.iter().all(|row| row.growth.lower_bound_checked);
    let verdict = if report.accepted { "accepted" } else { "rejected" };
    Ok(Rendered {
        stdout: verdict.to_string(),
        // Exact tree values: no finite model, hence no truncation stamp.
        json: Envelope::new(config, None, checked, report).render(),
        csv: None,
        markdown: Some(markdown),
    })
}

#[allow(clippy::too_many_arguments)]
fn wpd(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    g: &str,
    x0: &str,
    c: u32,
    n_power: u32,
    enum_bound: usize,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let g = GroupElement::Mobius(Mobius::parse(g)?);
    let x0 = model.vertex_of_slope(Slope::parse(x0)?)?;
    let report = wpd_coarse_stabilizer(&model, &g, x0, c, n_power, enum_bound)?;
    Ok(Rendered {
        stdout: report.cardinality.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), false, report).render(),
        csv: None,
        markdown: None,
    })
}

#[derive(Debug, Serialize)]
struct DeltaResult {
    delta: u32,
    triples_examined: usize,
}

fn delta(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    triples: &TripleMode,
    count: Option<usize>,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let space = model.space();
    let n = space.vertex_count();
    let (sample, examined) = match triples {
        TripleMode::All => (TripleSample::All, n * (n - 1) * (n - 2) / 6),
        TripleMode::Sample => {
            let count = count.expect("validation requires count in sample mode");
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            let list: Vec<[VertexId; 3]> = (0..count)
                .map(|_| {
                    [
                        VertexId(rng.gen_range(0..n) as u32),
                        VertexId(rng.gen_range(0..n) as u32),
                        VertexId(rng.gen_range(0..n) as u32),
                    ]
                })
                .collect();
            (TripleSample::Triples(list), count)
        }
    };
    let delta = delta_estimate(space, &sample)?;
    let result = DeltaResult {
        delta,
        triples_examined: examined,
    };
    Ok(Rendered {
        stdout: delta.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), false, result).render(),
        csv: None,
        markdown: None,
    })
}

fn farey_stab(
    config: &RunConfig,
    spec: SpaceSpec,
    cap: Option<usize>,
    a: &str,
    b: &str,
    enum_bound: usize,
) -> Result<Rendered> {
    let model = build_model(spec, cap)?;
    let report = stabilizer_intersection(&model, Slope::parse(a)?, Slope::parse(b)?, enum_bound)?;
    Ok(Rendered {
        stdout: report.cardinality.to_string(),
        json: Envelope::new(config, truncation_stamp(&model), false, report).render(),
        csv: None,
        markdown: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Operation, RunConfig};

    fn bare(space: &str, op: Operation) -> RunConfig {
        RunConfig {
            space: Some(space.into()),
            op,
            seed: 0,
            out: None,
            csv: None,
            markdown: None,
        }
    }

    #[test]
    fn eval_matches_the_documented_example() {
        let config = bare(
            "f2:radius=6",
            Operation::Eval {
                w: "ab".into(),
                credit: 1,
                g: "ababab".into(),
                basepoint: None,
                oracle_check: true,
            },
        );
        config.validate().unwrap();
        let outcome = execute(&config, None).unwrap();
        assert_eq!(outcome.stdout, "3");
        assert!(outcome.artifacts.is_empty());
    }

    #[test]
    fn delta_of_a_tree_ball_is_zero() {
        let config = bare(
            "f2:radius=4",
            Operation::Delta {
                triples: TripleMode::All,
                count: None,
            },
        );
        config.validate().unwrap();
        let outcome = execute(&config, None).unwrap();
        assert_eq!(outcome.stdout, "0");
    }

    #[test]
    fn sampled_pipelines_depend_only_on_the_seed() {
        let mut config = bare(
            "f2:radius=4",
            Operation::Defect {
                w: "ab".into(),
                credit: 1,
                pairs: PairMode::Sample,
                bound: 2,
                count: Some(40),
            },
        );
        config.validate().unwrap();
        let first = execute(&config, None).unwrap().stdout;
        let second = execute(&config, None).unwrap().stdout;
        assert_eq!(first, second);
        config.seed = 99;
        config.validate().unwrap();
        let reseeded = execute(&config, None).unwrap();
        assert!(reseeded.stdout.parse::<i64>().is_ok());
    }

    #[test]
    fn budget_cap_fails_loud_not_wrong() {
        let config = bare(
            "f2:radius=4",
            Operation::Delta {
                triples: TripleMode::All,
                count: None,
            },
        );
        let err = execute(&config, Some(3)).unwrap_err();
        let text = format!("{err:#}");
        assert!(text.contains("budget"), "{text}");
    }
}
