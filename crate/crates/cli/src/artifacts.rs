//! Artifact envelopes and serializers. Every file the tool writes goes
//! through here so the guarantees are uniform: fixed field order, a
//! tool-version stamp, the full configuration echo, the seed, the
//! space truncation parameters, and a flag saying whether an
//! independent oracle checked the result. Identical configurations
//! produce byte-identical artifacts.

use serde::Serialize;

use crate::config::RunConfig;

/// Name/version stamp of the producing binary.
#[derive(Debug, Clone, Serialize)]
pub struct ToolStamp {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolStamp {
    pub fn current() -> ToolStamp {
        ToolStamp {
            name: "qm",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// The common wrapper around every JSON artifact.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: ToolStamp,
    pub config: &'a RunConfig,
    pub seed: u64,
    /// Truncation of the model space, as `kind=parameter`; `None` for
    /// results computed without a finite model (exact tree values).
    pub truncation: Option<String>,
    /// Whether an independent check (walk-enumeration oracle, power
    /// lower bound, …) confirmed the result inside this run.
    pub oracle_checked: bool,
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(
        config: &'a RunConfig,
        truncation: Option<String>,
        oracle_checked: bool,
        result: T,
    ) -> Envelope<'a, T> {
        Envelope {
            tool: ToolStamp::current(),
            config,
            seed: config.seed,
            truncation,
            oracle_checked,
            result,
        }
    }

    /// Pretty JSON with a trailing newline — the exact bytes written to
    /// disk.
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("artifact types serialize");
        text.push('\n');
        text
    }
}

/// Growth rows as CSV: ASCII, LF line endings, `n,h_value` header.
/// Empty input produces the header-only file.
pub fn export_growth_csv(rows: &[(u32, i64)]) -> String {
    let mut out = String::from("n,h_value\n");
    for (n, h) in rows {
        out.push_str(&format!("{n},{h}\n"));
    }
    out
}
