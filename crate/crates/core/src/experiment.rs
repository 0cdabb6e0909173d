//! Line-oriented experiment configs and the runner behind the `gibbs-cert`
//! binary.
//!
//! ```text
//! # golden-mean shift, zero potential
//! [shift]
//! builtin = golden
//!
//! [potential]
//! builtin = zero
//!
//! [observable f]
//! range = 1
//! default = 0
//! value "a" = 1
//!
//! [measure mu]
//! kind = random
//! count = 100
//!
//! [experiment]
//! kind = theorem1
//! measures = mu
//! observables = f
//! seed = 0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::approx::{
    decay_exponents, periodic_harness, periodic_identity_check, stability_check, truncation_harness, CountableModel,
    CountableObservable, FiniteSubsystem, PeriodicMeasure,
};
use crate::bounds::{
    cohomology_residual, entropy_averaging_check, finitary_check, finitary_markov_check, pressure_gap_check,
    RADICAND_TOL,
};
use crate::error::{Error, Result};
use crate::measures::{conditional_kl_integral, pinsker_gap, MarkovMeasure};
use crate::potential::{builtin_potential, LocallyConstantFunction, DEFAULT_THETA};
use crate::random::{derive_seed, random_function, random_markov_measure, random_probability_vector, rng_from_seed};
use crate::shift::{build_sft, builtin_shift, TransitionMatrix};
use crate::transfer::{gurevich_estimate, partition_sum, Equilibrium};

/// Tolerance for exact identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for eigenvector residuals.
pub const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Pressure,
    Gibbs,
    PartitionSums,
    Theorem1,
    Theorem2,
    Corollary1,
    Corollary2,
    Corollary3,
    Identities,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Pressure,
        ExperimentKind::Gibbs,
        ExperimentKind::PartitionSums,
        ExperimentKind::Theorem1,
        ExperimentKind::Theorem2,
        ExperimentKind::Corollary1,
        ExperimentKind::Corollary2,
        ExperimentKind::Corollary3,
        ExperimentKind::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pressure => "pressure",
            ExperimentKind::Gibbs => "gibbs",
            ExperimentKind::PartitionSums => "partition-sums",
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::Theorem2 => "theorem2",
            ExperimentKind::Corollary1 => "corollary1",
            ExperimentKind::Corollary2 => "corollary2",
            ExperimentKind::Corollary3 => "corollary3",
            ExperimentKind::Identities => "identities",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Pressure => "Perron data, pressure and spectral constants",
            ExperimentKind::Gibbs => "cylinder-mass ratios against the eigenvector window",
            ExperimentKind::PartitionSums => "periodic-point sums by enumeration and matrix powers",
            ExperimentKind::Theorem1 => "square-root pressure-gap bound over random trials",
            ExperimentKind::Theorem2 => "finitary entropy bounds (general and finite-range forms)",
            ExperimentKind::Corollary1 => "truncations of a countable weighted full shift",
            ExperimentKind::Corollary2 => "measures on periodic orbits",
            ExperimentKind::Corollary3 => "stability under perturbation of the potential",
            ExperimentKind::Identities => "exact identities on one system or the built-in suite",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A word-indexed table entry, `value "ab" = 1.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub word: String,
    pub value: f64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSpec {
    Builtin(String),
    Explicit { states: Vec<String>, edges: Vec<(String, String)> },
    /// Countable weighted full shift, worked with through its truncation.
    Countable { model: CountableModel, truncation: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSource {
    Builtin(String),
    Table { range: usize, default: Option<f64>, entries: Vec<TableEntry> },
    Indicator(String),
    Random { range: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub source: FunctionSource,
    pub theta: Option<f64>,
    /// Declared support for observables of countable models.
    pub support: Option<usize>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Random { count: usize },
    Kernel { entries: Vec<TableEntry> },
    PointMass(String),
    Bernoulli(Vec<f64>),
    Gibbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub measures: Vec<String>,
    pub observables: Vec<String>,
    pub n: Option<(usize, usize)>,
    pub k: Option<(usize, usize)>,
    pub ell: Option<usize>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub n_max: Option<usize>,
    pub states: Vec<String>,
    pub psi: Option<String>,
    pub perturbation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shift: Option<ShiftSpec>,
    pub potential: Option<FunctionSpec>,
    /// `[potential <name>]` sections.
    pub named_potentials: BTreeMap<String, FunctionSpec>,
    pub observables: BTreeMap<String, FunctionSpec>,
    pub measures: BTreeMap<String, MeasureSpec>,
    pub experiment: ExperimentSpec,
}

// ---------------------------------------------------------------- parsing

struct RawEntry {
    key: String,
    word: Option<String>,
    value: String,
    line: usize,
}

struct RawSection {
    name: String,
    label: Option<String>,
    line: usize,
    entries: Vec<RawEntry>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn lex(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, "unterminated section header"))?;
            let mut parts = inner.split_whitespace();
            let name = parts.next().ok_or_else(|| config_err(line, "empty section header"))?;
            let label = parts.next().map(str::to_string);
            if parts.next().is_some() {
                return Err(config_err(line, "section header takes at most one name"));
            }
            sections.push(RawSection {
                name: name.to_string(),
                label,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (lhs, value) = body
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{body}'")))?;
        let lhs = lhs.trim();
        let (key, word) = match lhs.find('"') {
            Some(q) => {
                let rest = &lhs[q + 1..];
                let end = rest.find('"').ok_or_else(|| config_err(line, "unterminated quoted word"))?;
                if !rest[end + 1..].trim().is_empty() {
                    return Err(config_err(line, "unexpected text after quoted word"));
                }
                (lhs[..q].trim().to_string(), Some(rest[..end].to_string()))
            }
            None => (lhs.to_string(), None),
        };
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(config_err(line, format!("malformed key '{lhs}'")));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| config_err(line, "entry before any section header"))?;
        section.entries.push(RawEntry {
            key,
            word,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

fn parse_f64(e: &RawEntry) -> Result<f64> {
    e.value
        .parse::<f64>()
        .map_err(|_| config_err(e.line, format!("'{}' is not a number", e.value)))
}

fn parse_usize(e: &RawEntry) -> Result<usize> {
    e.value
        .parse::<usize>()
        .map_err(|_| config_err(e.line, format!("'{}' is not a nonnegative integer", e.value)))
}

fn parse_range(e: &RawEntry) -> Result<(usize, usize)> {
    let bad = || config_err(e.line, format!("'{}' is not a range 'a..b'", e.value));
    let (lo, hi) = match e.value.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|_| bad())?,
            b.trim().parse::<usize>().map_err(|_| bad())?,
        ),
        None => {
            let v = e.value.parse::<usize>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn no_word(e: &RawEntry) -> Result<()> {
    match e.word {
        Some(_) => Err(config_err(e.line, format!("key '{}' does not take a word", e.key))),
        None => Ok(()),
    }
}

fn unknown_key(e: &RawEntry, section: &str) -> Error {
    config_err(e.line, format!("unknown key '{}' in [{section}]", e.key))
}

fn parse_shift(sec: &RawSection) -> Result<ShiftSpec> {
    let mut builtin = None;
    let mut states = None;
    let mut edges = None;
    let mut countable = None;
    let mut truncation = None;
    for e in &sec.entries {
        no_word(e)?;
        match e.key.as_str() {
            "builtin" => {
                if builtin_shift(&e.value).is_none() {
                    return Err(config_err(e.line, format!("unknown builtin shift '{}'", e.value)));
                }
                builtin = Some(e.value.clone());
            }
            "states" => states = Some(parse_list(&e.value)),
            "edges" => {
                let mut out = Vec::new();
                for tok in parse_list(&e.value) {
                    let (a, b) = tok
                        .split_once('>')
                        .ok_or_else(|| config_err(e.line, format!("edge '{tok}' must look like 'a>b'")))?;
                    out.push((a.to_string(), b.to_string()));
                }
                edges = Some(out);
            }
            "countable" | "weights" => {
                countable = Some(CountableModel::parse(&e.value).map_err(|err| config_err(e.line, err.to_string()))?)
            }
            "truncation" => truncation = Some((parse_usize(e)?, e.line)),
            _ => return Err(unknown_key(e, "shift")),
        }
    }
    let chosen = builtin.is_some() as u8 + states.is_some() as u8 + countable.is_some() as u8;
    if chosen != 1 {
        return Err(config_err(sec.line, "[shift] needs exactly one of builtin, states/edges, countable"));
    }
    if let Some(name) = builtin {
        return Ok(ShiftSpec::Builtin(name));
    }
    if let Some(model) = countable {
        let truncation = match truncation {
            Some((t, line)) if t < 2 => return Err(config_err(line, "truncation must be >= 2")),
            Some((t, _)) => t,
            None => 8,
        };
        return Ok(ShiftSpec::Countable { model, truncation });
    }
    let states = states.unwrap_or_default();
    let edges = edges.ok_or_else(|| config_err(sec.line, "explicit shift needs 'edges'"))?;
    Ok(ShiftSpec::Explicit { states, edges })
}

fn parse_function(sec: &RawSection, observable: bool) -> Result<FunctionSpec> {
    let section = if observable { "observable" } else { "potential" };
    let mut builtin = None;
    let mut indicator = None;
    let mut kind = None;
    let mut range = None;
    let mut default = None;
    let mut entries = Vec::new();
    let mut theta = None;
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut support = None;
    for e in &sec.entries {
        if e.key != "value" {
            no_word(e)?;
        }
        match e.key.as_str() {
            "builtin" if !observable => builtin = Some(e.value.clone()),
            "indicator" if observable => indicator = Some(e.value.trim_matches('"').to_string()),
            "support" if observable => support = Some(parse_usize(e)?),
            "kind" => match e.value.as_str() {
                "table" | "random" => kind = Some(e.value.clone()),
                other => return Err(config_err(e.line, format!("unknown {section} kind '{other}'"))),
            },
            "range" => {
                let r = parse_usize(e)?;
                if r == 0 {
                    return Err(config_err(e.line, "range must be >= 1"));
                }
                range = Some(r);
            }
            "default" => default = Some(parse_f64(e)?),
            "value" => {
                let word = e
                    .word
                    .clone()
                    .ok_or_else(|| config_err(e.line, "table entries look like: value \"ab\" = 1.5"))?;
                entries.push(TableEntry {
                    word,
                    value: parse_f64(e)?,
                    line: e.line,
                });
            }
            "theta" => {
                let t = parse_f64(e)?;
                if !(t > 0.0 && t < 1.0) {
                    return Err(config_err(e.line, "theta must lie in (0, 1)"));
                }
                theta = Some(t);
            }
            "lo" => lo = parse_f64(e)?,
            "hi" => hi = parse_f64(e)?,
            _ => return Err(unknown_key(e, section)),
        }
    }
    let source = if let Some(name) = builtin {
        FunctionSource::Builtin(name)
    } else if let Some(word) = indicator {
        FunctionSource::Indicator(word)
    } else if kind.as_deref() == Some("random") {
        if !(lo < hi) {
            return Err(config_err(sec.line, "random tables need lo < hi"));
        }
        FunctionSource::Random {
            range: range.unwrap_or(1),
            lo,
            hi,
        }
    } else {
        let range = match (range, entries.first()) {
            (Some(r), _) => r,
            (None, Some(first)) => first.word.chars().filter(|c| !c.is_whitespace()).count().max(1),
            (None, None) => 1,
        };
        if entries.is_empty() && default.is_none() {
            return Err(config_err(sec.line, format!("[{section}] needs a builtin, entries or a default")));
        }
        FunctionSource::Table { range, default, entries }
    };
    Ok(FunctionSpec {
        source,
        theta,
        support,
        line: sec.line,
    })
}

fn parse_measure(sec: &RawSection) -> Result<MeasureSpec> {
    let mut kind = None;
    let mut count = 1;
    let mut entries = Vec::new();
    let mut state = None;
    let mut weights = None;
    for e in &sec.entries {
        if e.key != "p" {
            no_word(e)?;
        }
        match e.key.as_str() {
            "kind" => kind = Some((e.value.clone(), e.line)),
            "count" => count = parse_usize(e)?,
            "p" => {
                let word = e
                    .word
                    .clone()
                    .ok_or_else(|| config_err(e.line, "kernel entries look like: p \"ab\" = 0.5"))?;
                entries.push(TableEntry {
                    word,
                    value: parse_f64(e)?,
                    line: e.line,
                });
            }
            "state" => state = Some(e.value.clone()),
            "weights" => {
                weights = Some(
                    parse_list(&e.value)
                        .iter()
                        .map(|w| w.parse::<f64>().map_err(|_| config_err(e.line, format!("bad weight '{w}'"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            _ => return Err(unknown_key(e, "measure")),
        }
    }
    let (kind, line) = kind.ok_or_else(|| config_err(sec.line, "[measure] needs 'kind'"))?;
    match kind.as_str() {
        "random" => Ok(MeasureSpec::Random { count }),
        "kernel" => Ok(MeasureSpec::Kernel { entries }),
        "point-mass" => Ok(MeasureSpec::PointMass(
            state.ok_or_else(|| config_err(line, "point-mass needs 'state'"))?,
        )),
        "bernoulli" => Ok(MeasureSpec::Bernoulli(
            weights.ok_or_else(|| config_err(line, "bernoulli needs 'weights'"))?,
        )),
        "gibbs" => Ok(MeasureSpec::Gibbs),
        other => Err(config_err(line, format!("unknown measure kind '{other}'"))),
    }
}

fn parse_experiment(sec: &RawSection) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec {
        kind: ExperimentKind::Pressure,
        measures: Vec::new(),
        observables: Vec::new(),
        n: None,
        k: None,
        ell: None,
        trials: None,
        seed: 0,
        output: None,
        n_max: None,
        states: Vec::new(),
        psi: None,
        perturbation: None,
    };
    let mut kind = None;
    for e in &sec.entries {
        no_word(e)?;
        match e.key.as_str() {
            "kind" => {
                kind = Some(
                    ExperimentKind::parse(&e.value)
                        .ok_or_else(|| config_err(e.line, format!("unknown experiment kind '{}'", e.value)))?,
                )
            }
            "measures" | "measure" => spec.measures = parse_list(&e.value),
            "observables" | "observable" => spec.observables = parse_list(&e.value),
            "n" => spec.n = Some(parse_range(e)?),
            "k" => spec.k = Some(parse_range(e)?),
            "ell" => spec.ell = Some(parse_usize(e)?),
            "trials" => spec.trials = Some(parse_usize(e)?),
            "seed" => {
                spec.seed = e
                    .value
                    .parse::<u64>()
                    .map_err(|_| config_err(e.line, format!("'{}' is not a u64 seed", e.value)))?
            }
            "output" => spec.output = Some(PathBuf::from(e.value.trim_matches('"'))),
            "n_max" => spec.n_max = Some(parse_usize(e)?),
            "states" | "state" => spec.states = parse_list(&e.value),
            "psi" => spec.psi = Some(e.value.clone()),
            "perturbation" => {
                let p = parse_f64(e)?;
                if !(p > 0.0) {
                    return Err(config_err(e.line, "perturbation must be positive"));
                }
                spec.perturbation = Some(p);
            }
            _ => return Err(unknown_key(e, "experiment")),
        }
    }
    spec.kind = kind.ok_or_else(|| config_err(sec.line, "[experiment] needs 'kind'"))?;
    Ok(spec)
}

/// Parses and validates a config: names resolve, table words are admissible,
/// each experiment has the inputs it needs.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let sections = lex(text)?;
    let mut shift = None;
    let mut potential = None;
    let mut named_potentials = BTreeMap::new();
    let mut observables = BTreeMap::new();
    let mut measures = BTreeMap::new();
    let mut experiment = None;
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    for sec in &sections {
        let dup = |what: &str| config_err(sec.line, format!("duplicate section [{what}]"));
        match (sec.name.as_str(), &sec.label) {
            ("shift", None) => {
                if shift.replace(parse_shift(sec)?).is_some() {
                    return Err(dup("shift"));
                }
            }
            ("potential", None) => {
                if potential.replace(parse_function(sec, false)?).is_some() {
                    return Err(dup("potential"));
                }
            }
            ("potential", Some(name)) => {
                if named_potentials.insert(name.clone(), parse_function(sec, false)?).is_some() {
                    return Err(dup(&format!("potential {name}")));
                }
            }
            ("observable", Some(name)) => {
                if observables.insert(name.clone(), parse_function(sec, true)?).is_some() {
                    return Err(dup(&format!("observable {name}")));
                }
            }
            ("measure", Some(name)) => {
                if measures.insert(name.clone(), parse_measure(sec)?).is_some() {
                    return Err(dup(&format!("measure {name}")));
                }
            }
            ("experiment", None) => {
                if experiment.replace(parse_experiment(sec)?).is_some() {
                    return Err(dup("experiment"));
                }
                lines.insert("experiment".into(), sec.line);
            }
            ("observable" | "measure", None) => {
                return Err(config_err(sec.line, format!("[{}] needs a name", sec.name)));
            }
            _ => return Err(config_err(sec.line, format!("unknown section [{}]", sec.name))),
        }
    }
    let experiment = experiment.ok_or_else(|| config_err(0, "missing [experiment] section"))?;
    let exp_line = lines["experiment"];
    for name in &experiment.observables {
        if !observables.contains_key(name) {
            return Err(config_err(exp_line, format!("undefined observable '{name}'")));
        }
    }
    for name in &experiment.measures {
        if !measures.contains_key(name) {
            return Err(config_err(exp_line, format!("undefined measure '{name}'")));
        }
    }
    if let Some(name) = &experiment.psi {
        if !named_potentials.contains_key(name) {
            return Err(config_err(exp_line, format!("undefined potential '{name}'")));
        }
    }
    let config = ExperimentConfig {
        shift,
        potential,
        named_potentials,
        observables,
        measures,
        experiment,
    };
    validate(&config, exp_line)?;
    Ok(config)
}

fn validate(config: &ExperimentConfig, line: usize) -> Result<()> {
    use ExperimentKind::*;
    let exp = &config.experiment;
    let need = |cond: bool, what: &str| {
        if cond {
            Ok(())
        } else {
            Err(config_err(line, format!("experiment '{}' needs {what}", exp.kind.name())))
        }
    };
    match exp.kind {
        Identities => {}
        Corollary1 => need(
            matches!(config.shift, Some(ShiftSpec::Countable { .. })),
            "a countable [shift]",
        )?,
        _ => need(config.shift.is_some(), "a [shift] section")?,
    }
    match exp.kind {
        Theorem1 | Theorem2 => {
            need(!exp.measures.is_empty(), "'measures'")?;
            need(!exp.observables.is_empty(), "'observables'")?;
        }
        Corollary1 | Corollary2 | Corollary3 => need(!exp.observables.is_empty(), "'observables'")?,
        _ => {}
    }
    if exp.kind == Corollary3 {
        need(exp.psi.is_some() || exp.perturbation.is_some(), "'psi' or 'perturbation'")?;
    }
    if exp.kind == Identities && config.shift.is_none() && config.potential.is_some() {
        return Err(config_err(line, "a potential without a shift is ambiguous"));
    }
    // build everything once so bad words and names surface now
    if config.shift.is_some() {
        let system = build_system(config)?;
        let rng_seed = exp.seed;
        for (name, spec) in &config.observables {
            build_observable(config, &system, spec, rng_seed).map_err(|e| annotate(e, spec.line, name))?;
        }
        for (name, spec) in &config.named_potentials {
            build_function(&system.base, spec, rng_seed, DEFAULT_THETA).map_err(|e| annotate(e, spec.line, name))?;
        }
        for name in &exp.measures {
            build_measure(&system, &config.measures[name], 0).map_err(|e| annotate(e, line, name))?;
        }
    }
    Ok(())
}

fn annotate(e: Error, line: usize, name: &str) -> Error {
    match e {
        Error::Config { .. } => e,
        other => config_err(line, format!("'{name}': {other}")),
    }
}

// ---------------------------------------------------------------- building

/// Shift, potential and Gibbs data a config describes.
pub struct System {
    pub label: String,
    /// The shift as written in the config.
    pub base: TransitionMatrix,
    pub potential: LocallyConstantFunction,
    pub equilibrium: Equilibrium,
    pub countable: Option<(CountableModel, usize)>,
}

fn build_base(spec: &ShiftSpec) -> Result<(TransitionMatrix, String, Option<(CountableModel, usize)>)> {
    match spec {
        ShiftSpec::Builtin(name) => Ok((
            builtin_shift(name).ok_or_else(|| config_err(0, format!("unknown builtin shift '{name}'")))?,
            name.clone(),
            None,
        )),
        ShiftSpec::Explicit { states, edges } => {
            let mut states = states.clone();
            for (a, b) in edges {
                for s in [a, b] {
                    if !states.contains(s) {
                        states.push(s.clone());
                    }
                }
            }
            let built = build_sft(&states, edges)?;
            Ok((built.matrix, "explicit".into(), None))
        }
        ShiftSpec::Countable { model, truncation } => Ok((
            TransitionMatrix::full_shift_numbered(*truncation),
            format!("countable-{truncation}"),
            Some((*model, *truncation)),
        )),
    }
}

pub fn build_system(config: &ExperimentConfig) -> Result<System> {
    let spec = config
        .shift
        .as_ref()
        .ok_or_else(|| config_err(0, "missing [shift] section"))?;
    let (base, shift_label, countable) = build_base(spec)?;
    let potential = match (&config.potential, countable) {
        (Some(p), _) => build_function(&base, p, derive_seed(config.experiment.seed, 5, 0), DEFAULT_THETA)
            .map_err(|e| annotate(e, p.line, "potential"))?,
        (None, Some((model, n))) => {
            let logs: Vec<f64> = (1..=n).map(|s| model.weight(s).ln()).collect();
            LocallyConstantFunction::from_state_values(&base, DEFAULT_THETA, &logs)?
        }
        (None, None) => LocallyConstantFunction::zero(&base),
    };
    let label = match &config.potential {
        Some(FunctionSpec {
            source: FunctionSource::Builtin(name),
            ..
        }) => format!("{shift_label}/{name}"),
        Some(_) => format!("{shift_label}/table"),
        None if countable.is_some() => format!("{shift_label}/log-weights"),
        None => format!("{shift_label}/zero"),
    };
    let equilibrium = Equilibrium::new(&potential)?;
    Ok(System {
        label,
        base,
        potential,
        equilibrium,
        countable,
    })
}

fn build_function(
    base: &TransitionMatrix,
    spec: &FunctionSpec,
    seed: u64,
    default_theta: f64,
) -> Result<LocallyConstantFunction> {
    let theta = spec.theta.unwrap_or(default_theta);
    let f = match &spec.source {
        FunctionSource::Builtin(name) => builtin_potential(name, base)
            .ok_or_else(|| config_err(spec.line, format!("unknown builtin potential '{name}' for this shift")))?,
        FunctionSource::Indicator(word) => {
            let w = base.parse_word(word).map_err(|e| config_err(spec.line, e.to_string()))?;
            LocallyConstantFunction::indicator(base, w.symbols())?
        }
        FunctionSource::Random { range, lo, hi } => random_function(base, *range, theta, *lo, *hi, seed)?,
        FunctionSource::Table { range, default, entries } => {
            let mut parsed = Vec::with_capacity(entries.len());
            for e in entries {
                let w = base.parse_word(&e.word).map_err(|err| config_err(e.line, err.to_string()))?;
                if w.len() != *range {
                    return Err(config_err(
                        e.line,
                        format!("word '{}' has length {}, table range is {range}", e.word, w.len()),
                    ));
                }
                parsed.push((w.into_symbols(), e.value));
            }
            LocallyConstantFunction::from_entries(base, *range, theta, &parsed, *default)
                .map_err(|err| config_err(spec.line, err.to_string()))?
        }
    };
    f.with_theta(theta)
}

/// An observable on the config's shift; for countable models also its
/// finitely supported extension.
pub enum Observable {
    Finite(LocallyConstantFunction),
    Countable(CountableObservable),
}

fn build_observable(config: &ExperimentConfig, system: &System, spec: &FunctionSpec, seed: u64) -> Result<Observable> {
    let theta = system.potential.theta();
    match system.countable {
        Some((_, truncation)) if config.experiment.kind == ExperimentKind::Corollary1 => {
            let support = spec.support.unwrap_or(truncation);
            if support == 0 {
                return Err(config_err(spec.line, "support must be >= 1"));
            }
            let local = TransitionMatrix::full_shift_numbered(support);
            let table = build_function(&local, spec, seed, theta)?;
            let obs = CountableObservable::from_fn(support, table.range(), table.theta(), |w| table.value(w))?;
            Ok(Observable::Countable(obs))
        }
        _ => Ok(Observable::Finite(build_function(&system.base, spec, seed, theta)?)),
    }
}

fn finite_observable(config: &ExperimentConfig, system: &System, name: &str, seed: u64) -> Result<LocallyConstantFunction> {
    match build_observable(config, system, &config.observables[name], seed)? {
        Observable::Finite(f) => Ok(f),
        Observable::Countable(_) => Err(Error::Precondition("expected an observable on a finite shift".into())),
    }
}

fn build_measure(system: &System, spec: &MeasureSpec, seed: u64) -> Result<MarkovMeasure> {
    let base = system.equilibrium.base();
    let recoded = system.equilibrium.recoding().is_some();
    let explicit = |what: &str| -> Result<()> {
        if recoded {
            Err(Error::Precondition(format!(
                "{what} measures need a potential of range <= 2 (the working shift is recoded)"
            )))
        } else {
            Ok(())
        }
    };
    match spec {
        MeasureSpec::Random { .. } => random_markov_measure(base, seed),
        MeasureSpec::Gibbs => Ok(system.equilibrium.measure().clone()),
        MeasureSpec::Kernel { entries } => {
            explicit("kernel")?;
            let n = base.size();
            let mut p = DMatrix::zeros(n, n);
            for e in entries {
                let w = base.parse_word(&e.word).map_err(|err| config_err(e.line, err.to_string()))?;
                if w.len() != 2 {
                    return Err(config_err(e.line, format!("kernel entry '{}' must be a transition", e.word)));
                }
                p[(w.symbols()[0], w.symbols()[1])] = e.value;
            }
            MarkovMeasure::new(base, p)
        }
        MeasureSpec::PointMass(state) => {
            explicit("point-mass")?;
            MarkovMeasure::point_mass(base, base.state_index(state)?)
        }
        MeasureSpec::Bernoulli(weights) => {
            explicit("bernoulli")?;
            MarkovMeasure::bernoulli(base, weights)
        }
    }
}

// ---------------------------------------------------------------- output

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(header: &'static [&'static str]) -> Self {
        Csv { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// One certified invariant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn max_le(&mut self, name: &str, values: impl IntoIterator<Item = f64>, tol: f64) {
        let mut worst = 0.0f64;
        let mut count = 0;
        let mut finite = true;
        for v in values {
            finite &= v.is_finite();
            worst = worst.max(v);
            count += 1;
        }
        self.add(
            name,
            finite && worst <= tol,
            format!("max {} over {count} cases (tolerance {tol:e})", num(worst)),
        );
    }

    fn min_ge0(&mut self, name: &str, values: impl IntoIterator<Item = f64>) {
        let mut worst = f64::INFINITY;
        let mut count = 0;
        for v in values {
            worst = worst.min(v);
            count += 1;
        }
        self.add(
            name,
            count == 0 || worst >= 0.0,
            format!("min {} over {count} cases", num(if count == 0 { 0.0 } else { worst })),
        );
    }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub kind: ExperimentKind,
    pub csv: String,
    pub summary: String,
    pub checks: Vec<Check>,
    pub rows: usize,
    /// Where the CSV was written, if anywhere.
    pub csv_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for the CSV and summary; overrides the config's output path
    /// directory.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Skip writing files.
    pub dry_run: bool,
}

/// Runs the configured experiment, writing `<name>.csv` and
/// `<name>.summary.txt`.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.experiment.seed = seed;
    }
    let (csv, checks, header_lines) = match config.experiment.kind {
        ExperimentKind::Pressure => run_pressure(&config)?,
        ExperimentKind::Gibbs => run_gibbs(&config)?,
        ExperimentKind::PartitionSums => run_partition_sums(&config)?,
        ExperimentKind::Theorem1 => run_theorem1(&config)?,
        ExperimentKind::Theorem2 => run_theorem2(&config)?,
        ExperimentKind::Corollary1 => run_corollary1(&config)?,
        ExperimentKind::Corollary2 => run_corollary2(&config)?,
        ExperimentKind::Corollary3 => run_corollary3(&config)?,
        ExperimentKind::Identities => run_identities(&config)?,
    };
    let kind = config.experiment.kind;
    let mut outcome = RunOutcome {
        kind,
        csv: csv.render(),
        summary: String::new(),
        checks: checks.0,
        rows: csv.rows.len(),
        csv_path: None,
    };
    let mut summary = String::new();
    let _ = writeln!(summary, "experiment: {}", kind.name());
    let _ = writeln!(summary, "seed: {}", config.experiment.seed);
    for line in header_lines {
        let _ = writeln!(summary, "{line}");
    }
    let _ = writeln!(summary, "rows: {}", outcome.rows);
    for c in &outcome.checks {
        let _ = writeln!(summary, "{}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let _ = writeln!(summary, "result: {}", if outcome.passed() { "PASS" } else { "FAIL" });
    outcome.summary = summary;

    if !options.dry_run {
        let default_name = PathBuf::from(format!("{}.csv", kind.name()));
        let configured = config.experiment.output.clone().unwrap_or(default_name);
        let path = match &options.out_dir {
            Some(dir) => dir.join(configured.file_name().unwrap_or(configured.as_os_str())),
            None => configured,
        };
        write_file(&path, &outcome.csv)?;
        write_file(&path.with_extension("summary.txt"), &outcome.summary)?;
        outcome.csv_path = Some(path);
    }
    Ok(outcome)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

type Run = Result<(Csv, Checks, Vec<String>)>;

fn trials(config: &ExperimentConfig) -> usize {
    let exp = &config.experiment;
    exp.trials.unwrap_or_else(|| {
        exp.measures
            .iter()
            .map(|m| match config.measures[m] {
                MeasureSpec::Random { count } => count,
                _ => 1,
            })
            .max()
            .unwrap_or(1)
    })
}

/// Each trial cycles through the listed measures and observables.
fn trial_inputs(
    config: &ExperimentConfig,
    system: &System,
    t: usize,
) -> Result<(u64, MarkovMeasure, LocallyConstantFunction)> {
    let exp = &config.experiment;
    let seed = derive_seed(exp.seed, 1, t as u64);
    let mu = build_measure(system, &config.measures[&exp.measures[t % exp.measures.len()]], seed)?;
    let name = &exp.observables[t % exp.observables.len()];
    let f = finite_observable(config, system, name, derive_seed(exp.seed, 2, t as u64))?;
    Ok((seed, mu, system.equilibrium.lift(&f)?))
}

fn system_line(system: &System) -> String {
    let eq = &system.equilibrium;
    format!(
        "system: {} ({} states, working shift {} states)",
        system.label,
        system.base.size(),
        eq.base().size()
    )
}

fn run_pressure(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let pd = system.equilibrium.perron();
    let (left, right) = pd.eigen_residuals();
    let mut csv = Csv::new(&[
        "system",
        "states",
        "lambda",
        "pressure",
        "lambda2_modulus",
        "kappa",
        "c",
        "eigen_product",
        "a",
        "b",
        "left_residual",
        "right_residual",
    ]);
    csv.push(vec![
        system.label.clone(),
        pd.base().size().to_string(),
        num(pd.lambda),
        num(pd.pressure),
        num(pd.lambda2_mod),
        num(pd.kappa),
        num(pd.c),
        num(pd.eigen_product),
        num(pd.a),
        num(pd.b),
        num(left),
        num(right),
    ]);
    let mut checks = Checks::default();
    checks.max_le("eigenvector residuals", [left, right], EIGEN_TOL);
    let mut lines = vec![system_line(&system), format!("pressure: {}", num(pd.pressure))];
    if let Some((model, n)) = system.countable {
        lines.push(format!("countable pressure: {}", num(model.pressure())));
        let gap = model.pressure() - pd.pressure;
        checks.max_le(
            "truncation pressure gap closed form",
            [(gap - model.pressure_gap(n)).abs()],
            IDENTITY_TOL,
        );
    }
    Ok((csv, checks, lines))
}

fn run_gibbs(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let n_max = config.experiment.n_max.unwrap_or(8);
    let cert = system.equilibrium.perron().gibbs_property_certificate(n_max)?;
    let mut csv = Csv::new(&["length", "cylinders", "min_ratio", "max_ratio", "window_lower", "window_upper"]);
    for r in &cert.per_length {
        csv.push(vec![
            r.length.to_string(),
            r.cylinders.to_string(),
            num(r.min_ratio),
            num(r.max_ratio),
            num(1.0 / cert.window_c),
            num(cert.window_c),
        ]);
    }
    let mut checks = Checks::default();
    checks.add(
        "ratios inside eigenvector window",
        cert.within_window,
        format!(
            "ratios in [{}, {}], window C = {}",
            num(cert.min_ratio),
            num(cert.max_ratio),
            num(cert.window_c)
        ),
    );
    let lines = vec![
        system_line(&system),
        format!("empirical constant: {}", num(cert.empirical_c)),
        format!("a priori constant: {}", num(cert.a_priori_c)),
    ];
    Ok((csv, checks, lines))
}

fn run_partition_sums(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let eq = &system.equilibrium;
    let (lo, hi) = config.experiment.n.unwrap_or((1, 12));
    let states: Vec<usize> = if config.experiment.states.is_empty() {
        vec![0]
    } else {
        config
            .experiment
            .states
            .iter()
            .map(|s| eq.base().state_index(s))
            .collect::<Result<_>>()?
    };
    let mut csv = Csv::new(&["state", "n", "enumeration", "matrix", "relative_difference", "log_estimate", "residual"]);
    let mut diffs = Vec::new();
    let mut final_residuals = Vec::new();
    for &s in &states {
        let gur = gurevich_estimate(eq.potential(), s, hi)?;
        for n in lo.max(1)..=hi {
            let z = partition_sum(eq.potential(), s, n)?;
            let g = gur[n - 1];
            diffs.push(z.relative_difference);
            csv.push(vec![
                eq.base().label(s).to_string(),
                n.to_string(),
                num(z.enumeration),
                num(z.matrix),
                num(z.relative_difference),
                num(g.estimate),
                num(g.residual),
            ]);
        }
        final_residuals.push(gur[hi - 1].residual.abs());
    }
    let mut checks = Checks::default();
    checks.max_le("enumeration matches matrix power", diffs, IDENTITY_TOL);
    let lines = vec![
        system_line(&system),
        format!("pressure: {}", num(eq.pressure())),
        format!(
            "largest |residual| at n = {hi}: {}",
            num(final_residuals.iter().copied().fold(0.0, f64::max))
        ),
    ];
    Ok((csv, checks, lines))
}

fn run_theorem1(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let mut csv = Csv::new(&["trial", "seed", "pressure_gap", "f_norm", "lhs", "rhs", "slack", "vacuous"]);
    let mut slacks = Vec::new();
    let mut consistency = Vec::new();
    for t in 0..trials(config) {
        let (seed, mu, f) = trial_inputs(config, &system, t)?;
        let r = pressure_gap_check(&system.equilibrium, &mu, &f)?;
        if !r.vacuous {
            slacks.push(r.slack);
        }
        if let Some(kl) = r.kl_integral.filter(|k| k.is_finite()) {
            consistency.push((kl - r.pressure_gap).abs());
        }
        csv.push(vec![
            t.to_string(),
            seed.to_string(),
            num(r.pressure_gap),
            num(r.f_norm),
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            r.vacuous.to_string(),
        ]);
    }
    let mut checks = Checks::default();
    checks.min_ge0("slack >= 0", slacks);
    checks.max_le("pressure gap equals conditional divergence", consistency, IDENTITY_TOL);
    Ok((csv, checks, vec![system_line(&system)]))
}

fn run_theorem2(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let eq = &system.equilibrium;
    let (lo, hi) = config.experiment.n.unwrap_or((1, 20));
    let ell = config.experiment.ell.unwrap_or(eq.potential().range());
    let markov_ok = ell >= 1 && eq.potential().variation(ell) == 0.0;
    let mut csv = Csv::new(&[
        "trial",
        "seed",
        "form",
        "n",
        "ell",
        "pressure_gap",
        "f_norm",
        "decay_term",
        "tail_term",
        "entropy_term",
        "radicand_raw",
        "radicand_with_present",
        "lhs",
        "rhs",
        "slack",
        "radicand_violation",
        "vacuous",
    ]);
    let (mut general, mut markov, mut radicands) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..trials(config) {
        let (seed, mu, f) = trial_inputs(config, &system, t)?;
        let mut reports = Vec::new();
        for n in lo.max(1)..=hi {
            reports.push(finitary_check(eq, &mu, &f, n)?);
        }
        if markov_ok {
            for n in lo.max(3 * ell)..=hi {
                reports.push(finitary_markov_check(eq, &mu, &f, n, ell)?);
            }
        }
        for r in reports {
            let markov_form = r.ell.is_some();
            if !r.vacuous {
                if markov_form { &mut markov } else { &mut general }.push(r.slack);
            }
            radicands.push(r.radicand_raw.unwrap_or(0.0));
            let entropy = if markov_form { r.block_entropy_rate } else { r.conditional_entropy };
            csv.push(vec![
                t.to_string(),
                seed.to_string(),
                r.kind.name().to_string(),
                r.n.unwrap_or(0).to_string(),
                r.ell.map(|l| l.to_string()).unwrap_or_default(),
                num(r.pressure_gap),
                num(r.f_norm),
                num(r.decay_term.unwrap_or(0.0)),
                num(r.tail_term.unwrap_or(0.0)),
                num(entropy.unwrap_or(0.0)),
                num(r.radicand_raw.unwrap_or(0.0)),
                r.radicand_with_present.map(num).unwrap_or_default(),
                num(r.lhs),
                num(r.rhs),
                num(r.slack),
                r.radicand_violation.to_string(),
                r.vacuous.to_string(),
            ]);
        }
    }
    let mut checks = Checks::default();
    checks.min_ge0("finitary slack >= 0", general);
    if markov_ok {
        checks.min_ge0("finite-range slack >= 0", markov);
    }
    checks.min_ge0("radicand >= -1e-10", radicands.iter().map(|r| r + RADICAND_TOL));
    let mut lines = vec![system_line(&system)];
    if !markov_ok {
        lines.push(format!("finite-range form skipped: var_{ell} of the potential is nonzero"));
    }
    Ok((csv, checks, lines))
}

fn run_corollary1(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let (model, _) = system.countable.expect("validated as countable");
    let exp = &config.experiment;
    let (lo, hi) = exp.n.unwrap_or((2, 20));
    let obs = match build_observable(config, &system, &config.observables[&exp.observables[0]], exp.seed)? {
        Observable::Countable(o) => o,
        Observable::Finite(_) => unreachable!("countable shift yields countable observables"),
    };
    let rows = truncation_harness(&model, &obs, lo.max(2)..=hi)?;
    let mut csv = Csv::new(&["n", "lhs", "rhs", "slack", "pressure_gap", "constant", "f_norm", "support_outside"]);
    for r in &rows {
        csv.push(vec![
            r.n.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            num(r.pressure_gap),
            num(r.constant),
            num(r.f_norm),
            r.support_outside.to_string(),
        ]);
    }
    let mut checks = Checks::default();
    checks.min_ge0("slack >= 0", rows.iter().filter(|r| !r.support_outside).map(|r| r.slack));
    let (ls, rs) = decay_exponents(&rows);
    let lines = vec![
        system_line(&system),
        format!("full pressure: {}", num(model.pressure())),
        format!("lhs decay exponent per step: {}", num(ls)),
        format!("rhs decay exponent per step: {}", num(rs)),
    ];
    Ok((csv, checks, lines))
}

fn run_corollary2(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let exp = &config.experiment;
    let sub = match system.countable {
        Some((model, n)) => model.truncate(n)?,
        None => FiniteSubsystem::new(&system.potential)?,
    };
    let f = finite_observable(config, &system, &exp.observables[0], exp.seed)?;
    let (lo, hi) = exp.k.or(exp.n).unwrap_or((3, 12));
    let rows = periodic_harness(&sub, &f, lo.max(3)..=hi)?;
    let mut csv = Csv::new(&[
        "k",
        "lhs",
        "rhs",
        "slack",
        "rhs_floor_exponent",
        "rhs_exact_gap",
        "periodic_gap",
        "spectral_estimate",
        "pre_asymptotic",
        "entropy_term",
        "trace_relative_difference",
        "identity_residual",
        "combined_lhs",
        "combined_rhs",
    ]);
    let (mut traces, mut identities) = (Vec::new(), Vec::new());
    for r in &rows {
        let nu = PeriodicMeasure::new(&sub, r.k)?;
        let id = periodic_identity_check(&nu, &sub);
        traces.push(nu.trace_relative_difference);
        identities.push(id.residual);
        csv.push(vec![
            r.k.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            num(r.rhs_floor_exponent),
            num(r.rhs_exact_gap),
            num(r.periodic_gap),
            num(r.spectral_estimate),
            r.pre_asymptotic.to_string(),
            num(r.entropy_term),
            num(nu.trace_relative_difference),
            num(id.residual),
            r.combined_lhs.map(num).unwrap_or_default(),
            r.combined_rhs.map(num).unwrap_or_default(),
        ]);
    }
    let mut checks = Checks::default();
    checks.max_le("trace identity", traces, IDENTITY_TOL);
    checks.max_le("periodic entropy identity", identities, IDENTITY_TOL);
    checks.min_ge0(
        "slack >= 0 (asymptotic rows)",
        rows.iter().filter(|r| !r.pre_asymptotic).map(|r| r.slack),
    );
    let combined: Vec<f64> = rows
        .iter()
        .filter(|r| !r.pre_asymptotic)
        .filter_map(|r| Some(r.combined_rhs? - r.combined_lhs?))
        .collect();
    if !combined.is_empty() {
        checks.min_ge0("combined slack >= 0", combined);
    }
    let pre = rows.iter().filter(|r| r.pre_asymptotic).count();
    let lines = vec![system_line(&system), format!("pre-asymptotic rows: {pre}")];
    Ok((csv, checks, lines))
}

fn run_corollary3(config: &ExperimentConfig) -> Run {
    let system = build_system(config)?;
    let exp = &config.experiment;
    let phi = &system.potential;
    let n = match exp.psi {
        Some(_) if exp.perturbation.is_none() => 1,
        _ => trials(config),
    };
    let mut csv = Csv::new(&[
        "trial",
        "seed",
        "sup_distance",
        "lhs",
        "rhs",
        "slack",
        "gap",
        "identity_residual",
    ]);
    let (mut slacks, mut residuals) = (Vec::new(), Vec::new());
    for t in 0..n {
        let seed = derive_seed(exp.seed, 3, t as u64);
        let psi = match (exp.perturbation, &exp.psi) {
            (Some(p), _) => {
                let d = random_function(&system.base, phi.range().max(2), phi.theta(), -p, p, seed)?;
                d.add(&phi.extend_range(phi.range().max(2))?)?
            }
            (None, Some(name)) => build_function(&system.base, &config.named_potentials[name], seed, phi.theta())?,
            (None, None) => unreachable!("validated"),
        };
        let name = &exp.observables[t % exp.observables.len()];
        let f = finite_observable(config, &system, name, derive_seed(exp.seed, 2, t as u64))?;
        let r = stability_check(phi, &psi, &f)?;
        slacks.push(r.slack);
        residuals.push(r.identity_residual);
        csv.push(vec![
            t.to_string(),
            seed.to_string(),
            num(r.sup_distance),
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            num(r.gap),
            num(r.identity_residual),
        ]);
    }
    let mut checks = Checks::default();
    checks.min_ge0("slack >= 0", slacks);
    checks.max_le("entropy-integral identity", residuals, IDENTITY_TOL);
    Ok((csv, checks, vec![system_line(&system)]))
}

/// Systems exercised by the identity suite.
pub fn builtin_suite(seed: u64) -> Result<Vec<(String, LocallyConstantFunction)>> {
    let full2 = TransitionMatrix::full_shift(2);
    let golden = TransitionMatrix::golden_mean();
    let loop3 = TransitionMatrix::loop3();
    let mut out = vec![
        ("full2/zero".to_string(), LocallyConstantFunction::zero(&full2)),
        ("full3/zero".into(), LocallyConstantFunction::zero(&TransitionMatrix::full_shift(3))),
        ("golden/zero".into(), LocallyConstantFunction::zero(&golden)),
        ("loop3/zero".into(), LocallyConstantFunction::zero(&loop3)),
    ];
    out.push((
        "full2/var-example".into(),
        builtin_potential("var-example", &full2).expect("two symbols"),
    ));
    out.push((
        "full2/bernoulli(0.3,0.7)".into(),
        builtin_potential("bernoulli(0.3, 0.7)", &full2).expect("two symbols"),
    ));
    out.push((
        "golden/random".into(),
        random_function(&golden, 2, DEFAULT_THETA, -1.0, 1.0, derive_seed(seed, 6, 0))?,
    ));
    out.push((
        "loop3/random".into(),
        random_function(&loop3, 2, DEFAULT_THETA, -1.0, 1.0, derive_seed(seed, 6, 1))?,
    ));
    Ok(out)
}

fn run_identities(config: &ExperimentConfig) -> Run {
    let exp = &config.experiment;
    let systems = match &config.shift {
        Some(_) => {
            let s = build_system(config)?;
            vec![(s.label.clone(), s.potential.clone())]
        }
        None => builtin_suite(exp.seed)?,
    };
    let trials = exp.trials.unwrap_or(10);
    let mut csv = Csv::new(&["system", "identity", "case", "value", "tolerance", "passed"]);
    let mut by_identity: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut record = |csv: &mut Csv, system: &str, identity: &'static str, case: String, value: f64, tol: f64| {
        csv.push(vec![
            system.to_string(),
            identity.to_string(),
            case,
            num(value),
            format!("{tol:e}"),
            (value.is_finite() && value <= tol).to_string(),
        ]);
        by_identity.entry(identity).or_default().push(value);
    };
    for (index, (name, phi)) in systems.iter().enumerate() {
        let eq = Equilibrium::new(phi)?;
        let pd = eq.perron();
        let (l, r) = pd.eigen_residuals();
        record(&mut csv, name, "eigen-residual", "left".into(), l, EIGEN_TOL);
        record(&mut csv, name, "eigen-residual", "right".into(), r, EIGEN_TOL);
        record(&mut csv, name, "cohomology", "max-pair".into(), cohomology_residual(&eq)?, IDENTITY_TOL);
        for n in 1..=10 {
            let z = partition_sum(eq.potential(), 0, n)?;
            record(&mut csv, name, "partition-sum", format!("n={n}"), z.relative_difference, IDENTITY_TOL);
        }
        let sub = if eq.recoding().is_none() {
            Some(FiniteSubsystem::new(eq.potential())?)
        } else {
            None
        };
        if let Some(sub) = &sub {
            for k in 1..=12 {
                let nu = PeriodicMeasure::new(sub, k)?;
                record(&mut csv, name, "trace", format!("k={k}"), nu.trace_relative_difference, IDENTITY_TOL);
                let id = periodic_identity_check(&nu, sub);
                record(&mut csv, name, "periodic-entropy", format!("k={k}"), id.residual, IDENTITY_TOL);
            }
        }
        for t in 0..trials {
            let mu = random_markov_measure(eq.base(), derive_seed(exp.seed, 10 + index as u64, t as u64))?;
            let kl = conditional_kl_integral(eq.measure(), &mu)?.value;
            let gap = eq.pressure() - mu.metric_pressure(eq.potential())?;
            record(&mut csv, name, "kl-pressure", format!("trial={t}"), (kl - gap).abs(), IDENTITY_TOL);
            let avg = entropy_averaging_check(&eq, &mu, 2, 7)?;
            record(&mut csv, name, "entropy-averaging", format!("trial={t}"), avg.identity_residual, IDENTITY_TOL);
        }
    }
    let mut rng = rng_from_seed(derive_seed(exp.seed, 9, 0));
    for t in 0..trials * 10 {
        let dim = 2 + t % 7;
        let p = random_probability_vector(&mut rng, dim);
        let q = random_probability_vector(&mut rng, dim);
        let g = pinsker_gap(&p, &q)?;
        // recorded as the violation amount, 0 when the inequality holds
        record(&mut csv, "pairs", "pinsker", format!("dim={dim}"), (g.l1 - g.bound).max(0.0), 0.0);
    }
    let mut checks = Checks::default();
    for (identity, values) in by_identity {
        let tol = match identity {
            "eigen-residual" => EIGEN_TOL,
            "pinsker" => 0.0,
            _ => IDENTITY_TOL,
        };
        checks.max_le(identity, values, tol);
    }
    let lines = vec![format!("systems: {}", systems.len())];
    Ok((csv, checks, lines))
}

/// Built-in names for `--list-builtins`.
pub fn list_builtins() -> String {
    let mut out = String::from("shifts:\n");
    for (name, desc) in crate::shift::BUILTIN_SHIFTS {
        let _ = writeln!(out, "  {name:<24} {desc}");
    }
    out.push_str("potentials:\n");
    for (name, desc) in crate::potential::BUILTIN_POTENTIALS {
        let _ = writeln!(out, "  {name:<24} {desc}");
    }
    out.push_str("countable weight families:\n");
    let _ = writeln!(out, "  {:<24} w_s = scale * r^s", "geometric(r[, scale])");
    let _ = writeln!(out, "  {:<24} w_s = scale * s^-e", "zeta(e[, scale])");
    out.push_str("measure kinds:\n");
    for k in ["random", "kernel", "point-mass", "bernoulli", "gibbs"] {
        let _ = writeln!(out, "  {k}");
    }
    out.push_str("experiments:\n");
    for k in ExperimentKind::ALL {
        let _ = writeln!(out, "  {:<24} {}", k.name(), k.description());
    }
    out
}
