//! Command-line front end: JSON experiment configs, overrides, dispatch and
//! result files.
//!
//! A config names one experiment `kind` and carries a section of the same
//! name (with `-` replaced by `_`). Results land in `output_dir` as
//! `<kind>-<seed>-<hash>.csv`, `.json` and `-plot.dat`, where `hash` is the
//! first 12 hex digits of the SHA-256 of the effective config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::experiments::{
    concentration_check, dm_shift_check, epsilon_sweep, with_threads, ConcentrationConfig, DmFunction,
    EnergyChoice, IntervalChoice, McOptions, SiteSelection, SweepTable, SweepTarget, WegnerOneConfig,
    WegnerTwoConfig,
};
use crate::geometry::{
    classify_separation_with, is_sufficiently_distant_with, separation_cases, Cube, SeparationCase, TwoParticleBox,
    DEFAULT_DISTANCE_MULTIPLIER,
};
use crate::operator::{assemble, HamiltonianSpec};
use crate::random_field::{sample_amplitudes, verify_covering, BumpProfile};
use crate::spectral::{eigenvalues_below, lowest_eigenvalues_with, weyl_reference, SolverOptions, Spectrum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Sampling step used when validation checks the covering condition.
const COVERING_STEP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    WegnerOne,
    WegnerTwo,
    DmCheck,
    Concentration,
    Separation,
    Covering,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::WegnerOne => "wegner-one",
            ExperimentKind::WegnerTwo => "wegner-two",
            ExperimentKind::DmCheck => "dm-check",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Separation => "separation",
            ExperimentKind::Covering => "covering",
        }
    }

    fn section(self) -> String {
        self.name().replace('-', "_")
    }

    /// Key that `--trials` overrides inside the section.
    fn trials_key(self) -> Option<&'static str> {
        match self {
            ExperimentKind::WegnerOne | ExperimentKind::WegnerTwo => Some("trials"),
            ExperimentKind::Spectrum | ExperimentKind::DmCheck => Some("realizations"),
            ExperimentKind::Concentration => Some("samples"),
            ExperimentKind::Separation | ExperimentKind::Covering => None,
        }
    }
}

fn one() -> usize {
    1
}

fn default_multiplier() -> f64 {
    DEFAULT_DISTANCE_MULTIPLIER
}

fn default_confidence() -> f64 {
    crate::stats::CONFIDENCE
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Lowest `count` eigenvalues, or all below `below`, per realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub below: Option<f64>,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerOneSection {
    pub hamiltonian: HamiltonianSpec,
    pub energy: EnergyChoice,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub options: McOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerTwoSection {
    pub hamiltonian: HamiltonianSpec,
    pub second: TwoParticleBox,
    pub interval: IntervalChoice,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub options: McOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmCheckSection {
    pub hamiltonian: HamiltonianSpec,
    pub selection: SiteSelection,
    pub shift: f64,
    pub count: usize,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub phi: DmFunction,
    pub n: usize,
    pub density_bound: f64,
    pub a: f64,
    pub epsilon: f64,
    pub samples: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSection {
    pub first: TwoParticleBox,
    pub second: TwoParticleBox,
    pub range: f64,
    #[serde(default = "default_multiplier")]
    pub distance_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSection {
    pub profile: BumpProfile,
    pub cube: Cube,
    pub grid_step: f64,
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wegner_one: Option<WegnerOneSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wegner_two: Option<WegnerTwoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dm_check: Option<DmCheckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<SeparationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringSection>,
}

/// Failure of a CLI action, carrying its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Missing or unreadable input, or an output write failure.
    Io(String),
    /// Schema or cross-field validation failure.
    Invalid(Vec<String>),
    /// Eigensolver budget exceeded.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::Invalid(issues) => {
                write!(f, "invalid config:")?;
                for i in issues {
                    write!(f, "\n  - {i}")?;
                }
                Ok(())
            }
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Precondition(_) => CliError::Invalid(vec![e.to_string()]),
            Error::SolverFailure(_) | Error::NotConverged(_) => CliError::Solver(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => CliError::Io(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Set `path = value` in a JSON tree, creating objects along the way.
///
/// `value` is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(vec![format!("override `{assignment}` is not of the form key=value")]))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Invalid(vec![format!("override key `{path}` has an empty component")]));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        if !node.is_object() {
            return Err(CliError::Invalid(vec![format!("override `{path}`: `{key}` is not inside an object")]));
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(CliError::Invalid(vec![format!("override `{path}` does not address an object field")])),
    }
}

/// Command-line overrides layered on top of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub epsilons: Option<Vec<f64>>,
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(vec![format!("{}: {e}", path.display())]))
}

/// Apply overrides to a raw config tree.
pub fn apply_overrides(raw: &mut Value, ov: &Overrides) -> CliResult<()> {
    for s in &ov.set {
        apply_override(raw, s)?;
    }
    if let Some(seed) = ov.seed {
        apply_override(raw, &format!("master_seed={seed}"))?;
    }
    if let Some(out) = &ov.out {
        let map = raw.as_object_mut().ok_or_else(|| CliError::Invalid(vec!["config must be a JSON object".into()]))?;
        map.insert("output_dir".into(), Value::String(out.display().to_string()));
    }
    let kind: Option<ExperimentKind> = raw.get("kind").and_then(|k| serde_json::from_value(k.clone()).ok());
    if let Some(trials) = ov.trials {
        let kind = kind.ok_or_else(|| CliError::Invalid(vec!["--trials needs a valid `kind`".into()]))?;
        let key = kind
            .trials_key()
            .ok_or_else(|| CliError::Invalid(vec![format!("--trials does not apply to {}", kind.name())]))?;
        apply_override(raw, &format!("{}.{key}={trials}", kind.section()))?;
    }
    if let Some(eps) = &ov.epsilons {
        let kind = kind.ok_or_else(|| CliError::Invalid(vec!["--epsilons needs a valid `kind`".into()]))?;
        if !matches!(kind, ExperimentKind::WegnerOne | ExperimentKind::WegnerTwo) {
            return Err(CliError::Invalid(vec![format!("sweeps apply to wegner-one and wegner-two, not {}", kind.name())]));
        }
        let list = serde_json::to_string(eps).expect("numbers serialize");
        apply_override(raw, &format!("{}.epsilons={list}", kind.section()))?;
    }
    Ok(())
}

/// Parse a raw tree into a typed config; schema errors become issues.
pub fn parse_config(raw: Value) -> CliResult<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_value(raw).map_err(|e| CliError::Invalid(vec![e.to_string()]))?;
    let expected = cfg.kind.section();
    let present: Vec<&str> = [
        ("spectrum", cfg.spectrum.is_some()),
        ("wegner_one", cfg.wegner_one.is_some()),
        ("wegner_two", cfg.wegner_two.is_some()),
        ("dm_check", cfg.dm_check.is_some()),
        ("concentration", cfg.concentration.is_some()),
        ("separation", cfg.separation.is_some()),
        ("covering", cfg.covering.is_some()),
    ]
    .into_iter()
    .filter_map(|(name, p)| p.then_some(name))
    .collect();
    let mut issues = Vec::new();
    if !present.contains(&expected.as_str()) {
        issues.push(format!("missing section `{expected}` for kind {}", cfg.kind.name()));
    }
    for name in present.iter().filter(|n| **n != expected) {
        issues.push(format!("section `{name}` does not match kind {}", cfg.kind.name()));
    }
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(issues))
    }
}

/// Read, override and parse a config file.
pub fn load_config(path: &Path, ov: &Overrides) -> CliResult<ExperimentConfig> {
    let mut raw = read_json(path)?;
    apply_overrides(&mut raw, ov)?;
    parse_config(raw)
}

impl ExperimentConfig {
    /// First 12 hex digits of the SHA-256 of the canonical config, without
    /// the output directory.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(&self.content()).expect("value serializes"));
        digest.iter().take(6).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// The config as a JSON tree without the output directory.
    pub fn content(&self) -> Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("object").remove("output_dir");
        value
    }

    /// Common stem of the result files.
    pub fn file_stem(&self) -> String {
        format!("{}-{}-{}", self.kind.name(), self.master_seed, self.content_hash())
    }

    fn wegner_one(&self) -> Option<(WegnerOneConfig, Vec<f64>)> {
        self.wegner_one.as_ref().map(|s| {
            let cfg = WegnerOneConfig {
                hamiltonian: s.hamiltonian.clone(),
                energy: s.energy,
                epsilon: s.epsilons.first().copied().unwrap_or(f64::NAN),
                trials: s.trials,
                master_seed: self.master_seed,
                options: s.options.clone(),
            };
            (cfg, s.epsilons.clone())
        })
    }

    fn wegner_two(&self) -> Option<(WegnerTwoConfig, Vec<f64>)> {
        self.wegner_two.as_ref().map(|s| {
            let cfg = WegnerTwoConfig {
                hamiltonian: s.hamiltonian.clone(),
                second: s.second.clone(),
                interval: s.interval,
                epsilon: s.epsilons.first().copied().unwrap_or(f64::NAN),
                trials: s.trials,
                master_seed: self.master_seed,
                options: s.options.clone(),
            };
            (cfg, s.epsilons.clone())
        })
    }

    /// Cross-field checks that need no spectral computation.
    pub fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        match self.kind {
            ExperimentKind::Spectrum => {
                let s = self.spectrum.as_ref().expect("section checked at parse");
                push_err(&mut issues, s.hamiltonian.validate());
                match (s.count, s.below) {
                    (Some(0), None) => issues.push("count must be positive".into()),
                    (Some(_), None) => {}
                    (None, Some(b)) if !b.is_finite() => issues.push("below must be finite".into()),
                    (None, Some(_)) => {}
                    _ => issues.push("exactly one of `count` and `below` must be given".into()),
                }
                if s.realizations == 0 {
                    issues.push("realizations must be positive".into());
                }
            }
            ExperimentKind::WegnerOne => {
                let (cfg, eps) = self.wegner_one().expect("section checked at parse");
                epsilon_list_issues(&mut issues, &eps);
                issues.extend(cfg.issues().into_iter().filter(|i| !i.starts_with("epsilon")));
            }
            ExperimentKind::WegnerTwo => {
                let (cfg, eps) = self.wegner_two().expect("section checked at parse");
                epsilon_list_issues(&mut issues, &eps);
                issues.extend(cfg.issues().into_iter().filter(|i| !i.starts_with("epsilon")));
            }
            ExperimentKind::DmCheck => {
                let s = self.dm_check.as_ref().expect("section checked at parse");
                push_err(&mut issues, s.hamiltonian.validate());
                if !(s.shift >= 0.0 && s.shift.is_finite()) {
                    issues.push(format!("shift must be nonnegative, got {}", s.shift));
                }
                if s.count == 0 {
                    issues.push("count must be positive".into());
                }
                if s.realizations == 0 {
                    issues.push("realizations must be positive".into());
                }
                for cube in s.hamiltonian.domain.particles() {
                    match verify_covering(&s.hamiltonian.profile, cube, COVERING_STEP) {
                        Ok(r) if !r.covering_holds => issues.push(format!(
                            "covering condition fails on {cube}: minimal bump sum {}",
                            r.min_sum
                        )),
                        Ok(_) => {}
                        Err(e) => issues.push(e.to_string()),
                    }
                }
            }
            ExperimentKind::Concentration => {
                let s = self.concentration.as_ref().expect("section checked at parse");
                if !(1..=20).contains(&s.n) {
                    issues.push(format!("n must lie in 1..=20, got {}", s.n));
                }
                if !(s.density_bound > 0.0 && s.density_bound.is_finite()) {
                    issues.push("density_bound must be positive".into());
                }
                if !(s.epsilon >= 0.0 && s.epsilon < 1.0) {
                    issues.push(format!("epsilon must lie in [0, 1), got {}", s.epsilon));
                }
                if !(s.confidence > 0.0 && s.confidence < 1.0) {
                    issues.push("confidence must lie in (0, 1)".into());
                }
            }
            ExperimentKind::Separation => {
                let s = self.separation.as_ref().expect("section checked at parse");
                match is_sufficiently_distant_with(&s.first, &s.second, s.range, s.distance_multiplier) {
                    Ok(true) => {}
                    Ok(false) => issues.push(format!(
                        "boxes are not sufficiently distant: need separation above {} times the largest enlarged half-width",
                        s.distance_multiplier
                    )),
                    Err(e) => issues.push(e.to_string()),
                }
            }
            ExperimentKind::Covering => {
                let s = self.covering.as_ref().expect("section checked at parse");
                if !(s.grid_step > 0.0 && s.grid_step.is_finite()) {
                    issues.push("grid_step must be positive".into());
                }
            }
        }
        issues
    }
}

fn push_err(issues: &mut Vec<String>, r: crate::Result<()>) {
    if let Err(e) = r {
        issues.push(e.to_string());
    }
}

fn epsilon_list_issues(issues: &mut Vec<String>, eps: &[f64]) {
    if eps.is_empty() {
        issues.push("epsilons must not be empty".into());
    }
    for &e in eps {
        if !(e > 0.0 && e < 1.0) {
            issues.push(format!("epsilon must lie in (0, 1), got {e}"));
        }
    }
}

/// Result files of one run, in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// File name to contents.
    pub files: BTreeMap<String, Vec<u8>>,
    /// Set when the run finished but exceeded its failure budget.
    pub budget_exceeded: Option<String>,
}

impl RunOutput {
    /// Write every file into `dir` and return their paths.
    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut paths = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

struct Tables {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    result: Value,
    plot: Option<Vec<(f64, f64)>>,
    budget_exceeded: Option<String>,
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Run a parsed config on `threads` workers and collect the result files.
pub fn run_config(cfg: &ExperimentConfig, threads: usize) -> CliResult<RunOutput> {
    let issues = cfg.issues();
    if !issues.is_empty() {
        return Err(CliError::Invalid(issues));
    }
    let tables = with_threads(threads, || dispatch(cfg))?;
    let stem = cfg.file_stem();
    let mut files = BTreeMap::new();
    files.insert(format!("{stem}.csv"), csv_bytes(&tables.header, &tables.rows)?);
    let summary = json!({
        "experiment": cfg.kind.name(),
        "master_seed": cfg.master_seed,
        "config_hash": cfg.content_hash(),
        "config": cfg.content(),
        "result": tables.result,
    });
    let mut json_bytes = serde_json::to_vec_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    json_bytes.push(b'\n');
    files.insert(format!("{stem}.json"), json_bytes);
    if let Some(points) = tables.plot {
        let mut text = String::new();
        for (x, y) in points {
            let _ = writeln!(text, "{x} {y}");
        }
        files.insert(format!("{stem}-plot.dat"), text.into_bytes());
    }
    Ok(RunOutput { files, budget_exceeded: tables.budget_exceeded })
}

fn dispatch(cfg: &ExperimentConfig) -> CliResult<Tables> {
    match cfg.kind {
        ExperimentKind::Spectrum => run_spectrum(cfg.spectrum.as_ref().expect("section"), cfg.master_seed),
        ExperimentKind::WegnerOne => {
            let (c, eps) = cfg.wegner_one().expect("section");
            sweep_tables(epsilon_sweep(&SweepTarget::One(c), &eps)?)
        }
        ExperimentKind::WegnerTwo => {
            let (c, eps) = cfg.wegner_two().expect("section");
            sweep_tables(epsilon_sweep(&SweepTarget::Two(c), &eps)?)
        }
        ExperimentKind::DmCheck => run_dm(cfg.dm_check.as_ref().expect("section"), cfg.master_seed),
        ExperimentKind::Concentration => {
            let s = cfg.concentration.as_ref().expect("section");
            let report = concentration_check(&ConcentrationConfig {
                phi: s.phi,
                n: s.n,
                density_bound: s.density_bound,
                a: s.a,
                epsilon: s.epsilon,
                samples: s.samples,
                seed: cfg.master_seed,
                confidence: s.confidence,
            })?;
            let emp = report.empirical.as_ref();
            Ok(Tables {
                header: vec!["phi", "n", "a", "epsilon", "exact", "empirical", "ci_low", "ci_high", "bound", "holds"],
                rows: vec![vec![
                    serde_json::to_value(report.phi).expect("enum").as_str().unwrap_or_default().to_string(),
                    report.n.to_string(),
                    report.a.to_string(),
                    report.epsilon.to_string(),
                    opt(report.exact),
                    opt(emp.map(|e| e.estimate)),
                    opt(emp.map(|e| e.ci_low)),
                    opt(emp.map(|e| e.ci_high)),
                    report.bound.to_string(),
                    report.holds.to_string(),
                ]],
                result: serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?,
                plot: None,
                budget_exceeded: None,
            })
        }
        ExperimentKind::Separation => {
            let s = cfg.separation.as_ref().expect("section");
            let verdict = classify_separation_with(&s.first, &s.second, s.range, s.distance_multiplier)?;
            let all = separation_cases(&s.first, &s.second, s.range)?;
            let rows = [SeparationCase::A, SeparationCase::B, SeparationCase::C, SeparationCase::D, SeparationCase::E]
                .iter()
                .map(|c| vec![format!("{c:?}"), all.contains(c).to_string()])
                .collect();
            Ok(Tables {
                header: vec!["case", "holds"],
                rows,
                result: serde_json::to_value(&verdict).map_err(|e| CliError::Io(e.to_string()))?,
                plot: None,
                budget_exceeded: None,
            })
        }
        ExperimentKind::Covering => {
            let s = cfg.covering.as_ref().expect("section");
            let report = verify_covering(&s.profile, &s.cube, s.grid_step)?;
            Ok(Tables {
                header: vec!["min_sum", "max_sum", "covering_holds", "samples"],
                rows: vec![vec![
                    report.min_sum.to_string(),
                    report.max_sum.to_string(),
                    report.covering_holds.to_string(),
                    report.samples.to_string(),
                ]],
                result: serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?,
                plot: None,
                budget_exceeded: None,
            })
        }
    }
}

fn run_spectrum(s: &SpectrumSection, seed: u64) -> CliResult<Tables> {
    let sites = s.hamiltonian.field_sites()?;
    let spectra: Vec<crate::Result<Spectrum>> = crate::experiments::map_trials(s.realizations, |trial| {
        let field = sample_amplitudes(&s.hamiltonian.ensemble, &sites, seed, trial)?;
        let op = assemble(&s.hamiltonian, &field)?;
        match (s.count, s.below) {
            (Some(k), _) => lowest_eigenvalues_with(&op, k, &s.solver),
            (None, Some(b)) => eigenvalues_below(&op, b, &s.solver),
            (None, None) => unreachable!("validated"),
        }
    });
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut plot = None;
    for (trial, spec) in spectra.into_iter().enumerate() {
        let spec = spec?;
        for (k, ((e, r), c)) in spec.eigenvalues.iter().zip(&spec.residuals).zip(&spec.converged).enumerate() {
            rows.push(vec![trial.to_string(), k.to_string(), e.to_string(), r.to_string(), c.to_string()]);
        }
        let top = spec.eigenvalues.last().copied();
        summary.push(json!({
            "realization": trial,
            "count": spec.len(),
            "ground_state": spec.eigenvalues.first(),
            "weyl_reference": top.map(|e| weyl_reference(e, &s.hamiltonian.domain, s.hamiltonian.masses)),
        }));
        if plot.is_none() {
            plot = Some(spec.eigenvalues.iter().enumerate().map(|(k, &e)| (k as f64, e)).collect());
        }
    }
    Ok(Tables {
        header: vec!["realization", "k", "eigenvalue", "residual", "converged"],
        rows,
        result: Value::Array(summary),
        plot,
        budget_exceeded: None,
    })
}

fn run_dm(s: &DmCheckSection, seed: u64) -> CliResult<Tables> {
    let sites = s.hamiltonian.field_sites()?;
    let reports: Vec<crate::Result<_>> = crate::experiments::map_trials(s.realizations, |trial| {
        let field = sample_amplitudes(&s.hamiltonian.ensemble, &sites, seed, trial)?;
        dm_shift_check(&s.hamiltonian, &field, &s.selection, s.shift, s.count, &s.solver)
    });
    let mut rows = Vec::new();
    let mut list = Vec::new();
    for (trial, r) in reports.into_iter().enumerate() {
        let r = r?;
        for (k, d) in r.deltas.iter().enumerate() {
            rows.push(vec![trial.to_string(), k.to_string(), d.to_string()]);
        }
        list.push(r);
    }
    let min = list.iter().map(|r| r.min_delta).fold(f64::INFINITY, f64::min);
    let max = list.iter().map(|r| r.max_delta).fold(f64::NEG_INFINITY, f64::max);
    Ok(Tables {
        header: vec!["realization", "k", "delta"],
        rows,
        result: json!({ "min_delta": min, "max_delta": max, "reports": list }),
        plot: None,
        budget_exceeded: None,
    })
}

fn sweep_tables(table: SweepTable) -> CliResult<Tables> {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.epsilon.to_string(),
                r.estimate.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                r.bound_rhs.to_string(),
                opt(r.fitted_constant),
                r.trials.to_string(),
                r.hits.to_string(),
                r.excluded.to_string(),
                opt(r.dominated),
                r.valid.to_string(),
            ]
        })
        .collect();
    let plot = Some(table.rows.iter().map(|r| (r.epsilon, r.estimate)).collect());
    let budget_exceeded = (!table.valid).then(|| {
        let excluded: u64 = table.rows.first().map_or(0, |r| r.excluded);
        format!("{excluded} trials excluded by solver failures, above the tolerated fraction")
    });
    Ok(Tables {
        header: vec![
            "epsilon",
            "estimate",
            "ci_low",
            "ci_high",
            "bound_rhs",
            "fitted_constant",
            "trials",
            "hits",
            "excluded",
            "dominated",
            "valid",
        ],
        rows,
        result: serde_json::to_value(&table).map_err(|e| CliError::Io(e.to_string()))?,
        plot,
        budget_exceeded,
    })
}

#[derive(Debug, Parser)]
#[command(name = "wegner-lab", version, about = "Two-particle random Schrödinger operators and Wegner-type estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config.
    Run(CommonArgs),
    /// Check a config without running it.
    Validate(CommonArgs),
    /// Run a Wegner experiment over a list of epsilons.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated epsilons, e.g. 0.02,0.01,0.005.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config field, e.g. `--set wegner_one.trials=500`.
    #[arg(long = "set", value_name = "K=V")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self, epsilons: Option<Vec<f64>>) -> Overrides {
        Overrides { set: self.set.clone(), seed: self.seed, out: self.out.clone(), trials: self.trials, epsilons }
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Validation report: schema errors or cross-field issues.
pub fn validate_path(path: &Path, ov: &Overrides) -> CliResult<Vec<String>> {
    match load_config(path, ov) {
        Ok(cfg) => Ok(cfg.issues()),
        Err(CliError::Invalid(issues)) => Ok(issues),
        Err(e) => Err(e),
    }
}

fn run_path(args: &CommonArgs, epsilons: Option<Vec<f64>>) -> CliResult<i32> {
    let cfg = load_config(&args.config, &args.overrides(epsilons))?;
    let output = run_config(&cfg, args.threads.unwrap_or_else(default_threads))?;
    for p in output.write(&cfg.output_dir)? {
        println!("{}", p.display());
    }
    match output.budget_exceeded {
        Some(msg) => Err(CliError::Solver(msg)),
        None => Ok(EXIT_OK),
    }
}

/// Execute a parsed command line and return the exit status.
pub fn execute(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Run(args) => run_path(&args, None),
        Command::Sweep { common, epsilons } => run_path(&common, Some(epsilons)),
        Command::Validate(args) => validate_path(&args.config, &args.overrides(None)).map(|issues| {
            println!("{}", serde_json::to_string_pretty(&json!({ "issues": issues })).expect("json"));
            EXIT_OK
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("{e}");
        e.exit_code()
    })
}

pub fn main_from_env() -> i32 {
    execute(Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covering_raw() -> Value {
        json!({
            "kind": "covering",
            "master_seed": 3,
            "covering": {"profile": {"kind": "tent", "range": 1.0}, "cube": {"center": [0.0], "half_width": 2.0}, "grid_step": 0.1}
        })
    }

    #[test]
    fn override_parses_json_or_keeps_string() {
        let mut v = json!({"a": {"b": 1}});
        apply_override(&mut v, "a.b=2.5").unwrap();
        apply_override(&mut v, "a.c=[1,2]").unwrap();
        apply_override(&mut v, "d.e=text").unwrap();
        assert_eq!(v, json!({"a": {"b": 2.5, "c": [1, 2]}, "d": {"e": "text"}}));
    }

    #[test]
    fn malformed_overrides_are_rejected() {
        let mut v = json!({"a": 1});
        assert!(matches!(apply_override(&mut v, "novalue"), Err(CliError::Invalid(_))));
        assert!(matches!(apply_override(&mut v, "a..b=1"), Err(CliError::Invalid(_))));
        assert!(matches!(apply_override(&mut v, "a.b=1"), Err(CliError::Invalid(_))));
    }

    #[test]
    fn hash_ignores_output_dir_but_not_content() {
        let cfg = parse_config(covering_raw()).unwrap();
        let mut moved = cfg.clone();
        moved.output_dir = PathBuf::from("elsewhere");
        assert_eq!(cfg.content_hash(), moved.content_hash());
        assert_eq!(cfg.content_hash().len(), 12);
        let mut raw = covering_raw();
        apply_override(&mut raw, "covering.grid_step=0.05").unwrap();
        assert_ne!(parse_config(raw).unwrap().content_hash(), cfg.content_hash());
        assert!(cfg.file_stem().starts_with("covering-3-"));
    }

    #[test]
    fn section_must_match_kind() {
        let mut raw = covering_raw();
        apply_override(&mut raw, "kind=separation").unwrap();
        let Err(CliError::Invalid(issues)) = parse_config(raw) else { panic!("expected issues") };
        assert_eq!(issues.len(), 2);
    }

    #[test]
    fn trials_override_targets_the_section() {
        let mut raw = json!({"kind": "concentration", "master_seed": 0, "concentration": {"samples": 10}});
        apply_overrides(&mut raw, &Overrides { trials: Some(99), seed: Some(4), ..Default::default() }).unwrap();
        assert_eq!(raw["concentration"]["samples"], json!(99));
        assert_eq!(raw["master_seed"], json!(4));
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::InvalidArgument("x".into())).exit_code(), EXIT_INVALID);
        assert_eq!(CliError::from(Error::SolverFailure("x".into())).exit_code(), EXIT_SOLVER);
        assert_eq!(CliError::Io("x".into()).exit_code(), EXIT_IO);
    }
}
