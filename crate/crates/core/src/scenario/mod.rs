//! Scenario files and the commands that run them.
//!
//! A scenario is a `key = value` document split into `[metric]`, `[grid]`,
//! `[flow]`, `[output]` and `[tolerances]` sections. `#` starts a comment.
//! Unknown sections and keys are rejected.
//!
//! ```text
//! [metric]
//! family = conformal-torus
//! a = 0.05
//!
//! [grid]
//! n_x1 = 64
//! n_x2 = 64
//! n_theta = 64
//!
//! [flow]
//! mode = ricci
//! horizon = 0.5
//! ```

mod commands;

pub use commands::{
    cmd_curvature, cmd_flow, cmd_report, cmd_verify, default_out, Outcome, Status, CURVATURE_HEADER,
};

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::analysis::Tolerances;
use crate::error::{Error, Result};
use crate::flow::{Deformation, FlowConfig, FlowMode, SnapshotFormat};
use crate::geometry::MetricFamily;
use crate::vertical::GridSpec;

/// Where and how a run is written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: SnapshotFormat,
}

/// A validated scenario with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub family: MetricFamily,
    pub grid: GridSpec,
    pub mode: FlowMode,
    pub flow: FlowConfig,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
}

const SECTIONS: [&str; 5] = ["metric", "grid", "flow", "output", "tolerances"];
const FLOW_KEYS: [&str; 9] = [
    "mode",
    "c",
    "horizon",
    "dt_max",
    "c_cfl",
    "eps_conv",
    "r_max",
    "snapshot_every",
    "theta_filter",
];
const TOLERANCE_KEYS: [&str; 5] = ["equivalence", "gamma", "commutation", "cauchy", "hessian"];

struct Entry {
    line: usize,
    section: &'static str,
    key: String,
    value: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn allowed(section: &str, key: &str, family: Option<&str>) -> bool {
    match section {
        "metric" => {
            key == "family"
                || family
                    .and_then(MetricFamily::param_names)
                    .is_some_and(|p| p.contains(&key))
        }
        "grid" => matches!(key, "n_x1" | "n_x2" | "n_theta"),
        "flow" => FLOW_KEYS.contains(&key),
        "output" => matches!(key, "dir" | "format"),
        "tolerances" => TOLERANCE_KEYS.contains(&key),
        _ => false,
    }
}

fn number<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| {
        parse_err(
            e.line,
            format!("`{}` is not a valid value for `{}`", e.value, e.key),
        )
    })
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut section: Option<&'static str> = None;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .copied()
                        .find(|s| *s == name)
                        .ok_or_else(|| parse_err(line, format!("unknown section `[{name}]`")))?,
                );
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                parse_err(line, format!("expected `key = value`, got `{content}`"))
            })?;
            let sec = section.ok_or_else(|| parse_err(line, "key outside of any section"))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if entries.iter().any(|e| e.section == sec && e.key == key) {
                return Err(parse_err(line, format!("duplicate key `{key}` in [{sec}]")));
            }
            entries.push(Entry {
                line,
                section: sec,
                key,
                value,
            });
        }

        let find = |sec: &str, key: &str| entries.iter().find(|e| e.section == sec && e.key == key);
        let family_name = find("metric", "family").map(|e| e.value.clone());
        for e in &entries {
            if !allowed(e.section, &e.key, family_name.as_deref()) {
                return Err(parse_err(
                    e.line,
                    format!("unknown key `{}` in [{}]", e.key, e.section),
                ));
            }
        }
        let missing = |what: &str| parse_err(last_line, format!("missing required key `{what}`"));

        let fam_entry = find("metric", "family").ok_or_else(|| missing("metric.family"))?;
        let params: Vec<(String, f64)> = entries
            .iter()
            .filter(|e| e.section == "metric" && e.key != "family")
            .map(|e| Ok((e.key.clone(), number(e)?)))
            .collect::<Result<_>>()?;
        let family = MetricFamily::from_name(&fam_entry.value, &params)
            .map_err(|err| parse_err(fam_entry.line, err.to_string()))?;

        let count = |key: &str| -> Result<usize> {
            number(find("grid", key).ok_or_else(|| missing(&format!("grid.{key}")))?)
        };
        let grid =
            GridSpec::new(count("n_x1")?, count("n_x2")?, count("n_theta")?).map_err(|err| {
                parse_err(
                    find("grid", "n_theta").map_or(last_line, |e| e.line),
                    err.to_string(),
                )
            })?;

        let horizon_entry = find("flow", "horizon").ok_or_else(|| missing("flow.horizon"))?;
        let mut flow = FlowConfig::new(number(horizon_entry)?);
        if !(flow.horizon > 0.0) {
            return Err(parse_err(
                horizon_entry.line,
                format!("horizon must be positive, got {}", flow.horizon),
            ));
        }
        let mode_entry = find("flow", "mode");
        let c_entry = find("flow", "c");
        let mode = match mode_entry.map_or("ricci", |e| e.value.as_str()) {
            "ricci" => {
                if let Some(e) = c_entry {
                    return Err(parse_err(e.line, "`c` only applies to mode = homothetic"));
                }
                FlowMode::Ricci
            }
            "homothetic" => {
                let e = c_entry.ok_or_else(|| missing("flow.c"))?;
                FlowMode::Prescribed(Deformation::Homothetic { c: number(e)? })
            }
            other => {
                return Err(parse_err(
                    mode_entry.unwrap().line,
                    format!("unknown mode `{other}` (ricci, homothetic)"),
                ))
            }
        };
        for e in entries.iter().filter(|e| e.section == "flow") {
            match e.key.as_str() {
                "dt_max" => flow.dt_max = number(e)?,
                "c_cfl" => flow.c_cfl = number(e)?,
                "eps_conv" => flow.eps_conv = number(e)?,
                "r_max" => flow.r_max = number(e)?,
                "snapshot_every" => flow.snapshot_every = number(e)?,
                "theta_filter" => flow.theta_filter = number(e)?,
                _ => continue,
            }
            flow.validate()
                .map_err(|err| parse_err(e.line, err.to_string()))?;
        }

        let mut output = OutputConfig::default();
        if let Some(e) = find("output", "dir") {
            output.dir = Some(PathBuf::from(&e.value));
        }
        if let Some(e) = find("output", "format") {
            output.format = e
                .value
                .parse()
                .map_err(|err: Error| parse_err(e.line, err.to_string()))?;
        }

        let mut tolerances = Tolerances::default();
        for e in entries.iter().filter(|e| e.section == "tolerances") {
            let v: f64 = number(e)?;
            if !(v >= 0.0) {
                return Err(parse_err(
                    e.line,
                    format!("tolerance `{}` must be non-negative", e.key),
                ));
            }
            match e.key.as_str() {
                "equivalence" => tolerances.equivalence = v,
                "gamma" => tolerances.gamma = v,
                "commutation" => tolerances.commutation = v,
                "cauchy" => tolerances.cauchy = v,
                _ => tolerances.hessian = v,
            }
        }

        Ok(Scenario {
            family,
            grid,
            mode,
            flow,
            output,
            tolerances,
        })
    }

    /// Writes every field explicitly, so `parse(emit(s)) == s`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[metric]\nfamily = {}", self.family.name());
        for (k, v) in self.family.params() {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let g = &self.grid;
        let _ = writeln!(
            s,
            "\n[grid]\nn_x1 = {}\nn_x2 = {}\nn_theta = {}",
            g.n_x1, g.n_x2, g.n_theta
        );
        let _ = writeln!(s, "\n[flow]\nmode = {}", self.mode.name());
        if let FlowMode::Prescribed(Deformation::Homothetic { c }) = self.mode {
            let _ = writeln!(s, "c = {c:?}");
        }
        let f = &self.flow;
        let _ = writeln!(
            s,
            "horizon = {:?}\ndt_max = {:?}\nc_cfl = {:?}\neps_conv = {:?}\nr_max = {:?}\nsnapshot_every = {}\ntheta_filter = {:?}",
            f.horizon, f.dt_max, f.c_cfl, f.eps_conv, f.r_max, f.snapshot_every, f.theta_filter
        );
        let _ = writeln!(s, "\n[output]");
        if let Some(dir) = &self.output.dir {
            let _ = writeln!(s, "dir = {}", dir.display());
        }
        let _ = writeln!(s, "format = {}", self.output.format.as_str());
        let t = &self.tolerances;
        let _ = writeln!(
            s,
            "\n[tolerances]\nequivalence = {:?}\ngamma = {:?}\ncommutation = {:?}\ncauchy = {:?}\nhessian = {:?}",
            t.equivalence, t.gamma, t.commutation, t.cauchy, t.hessian
        );
        s
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[metric]\nfamily = euclidean\n[grid]\nn_x1 = 16\nn_x2 = 16\nn_theta = 32\n[flow]\nhorizon = 1\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.family, MetricFamily::Euclidean);
        assert_eq!(s.mode, FlowMode::Ricci);
        assert_eq!(s.flow, FlowConfig::new(1.0));
        assert_eq!(s.output, OutputConfig::default());
        assert_eq!(s.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let text = MINIMAL.replace("horizon = 1", "horizon = 1\nfoo = 3");
        match Scenario::parse(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn homothetic_round_trip() {
        let text = "[metric]\nfamily = randers-torus\nb = 0.25\n[grid]\nn_x1 = 16\nn_x2 = 8\nn_theta = 32\n\
                    [flow]\nmode = homothetic\nc = 0.1\nhorizon = 2\n[output]\ndir = runs/h\nformat = binary\n";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(
            s.mode,
            FlowMode::Prescribed(Deformation::Homothetic { c: 0.1 })
        );
        assert_eq!(Scenario::parse(&s.emit()).unwrap(), s);
    }

    #[test]
    fn bad_documents_report_lines() {
        let cases = [
            (MINIMAL.replace("horizon = 1", "horizon = -1"), 8),
            (MINIMAL.replace("euclidean", "hyperbolic"), 2),
            (
                MINIMAL.replace("horizon = 1", "mode = homothetic\nhorizon = 1"),
                9,
            ),
            (MINIMAL.replace("horizon = 1\n", ""), 7),
            (MINIMAL.replace("[grid]", "[mesh]"), 3),
        ];
        for (text, expected) in cases {
            match Scenario::parse(&text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text}"),
                other => panic!("expected parse error for\n{text}\ngot {other:?}"),
            }
        }
    }
}
