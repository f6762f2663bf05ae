//! Experiment files: TOML with a top-level `seed`, an optional
//! `output_path` and exactly one command table.
//!
//! ```toml
//! seed = 1
//!
//! [search]
//! n_cells = 3
//! p_detect = 0.9
//! p_false = 0.1
//! ```
//!
//! Parsing reports every problem at once, each with its line (when it can be
//! located) and dotted field name. [`ExperimentConfig::to_canonical`] writes
//! every field, defaults included, in a fixed order; parsing that text gives
//! back the same config.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;
use toml::{Table, Value};

pub const DEFAULT_OUTPUT_PATH: &str = "results";

const COMMANDS: [&str; 4] = ["search", "tsp", "qsim", "noise"];

/// One validation problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("{} problem(s) in config:\n{}", .0.len(), render(.0))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Syntax(_) => &[],
            ConfigError::Invalid(v) => v,
        }
    }
}

fn render(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_path: String,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Search(SearchParams),
    Tsp(TspParams),
    Qsim(QsimParams),
    Noise(NoiseParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Search(_) => "search",
            Command::Tsp(_) => "tsp",
            Command::Qsim(_) => "qsim",
            Command::Noise(_) => "noise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySpec {
    Greedy,
    MostLikely,
    BruteForce { horizon: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub n_cells: usize,
    pub true_cell: usize,
    pub p_detect: f64,
    pub p_false: f64,
    pub policy: PolicySpec,
    pub max_steps: usize,
    pub stop_threshold: f64,
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TspSource {
    /// TSPLIB file, relative paths resolved against the config's directory.
    File(String),
    Inline(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TspParams {
    pub source: TspSource,
    pub alpha: f64,
    pub beta: f64,
    pub node_ratio: f64,
    /// Absolute; `None` means `0.2 × spread`.
    pub k_start: Option<f64>,
    pub k_decay: f64,
    /// Absolute; `None` means `0.01 × spread`.
    pub k_min: Option<f64>,
    pub iters_per_stage: usize,
    pub step_size: f64,
    pub baselines: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsimMode {
    Mean,
    Trajectory,
    Ensemble,
}

impl QsimMode {
    fn as_str(self) -> &'static str {
        match self {
            QsimMode::Mean => "mean",
            QsimMode::Trajectory => "trajectory",
            QsimMode::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub delta: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QsimParams {
    pub d: usize,
    pub omega_r: f64,
    pub hbar: f64,
    pub qubits: Vec<QubitParams>,
    pub rate: f64,
    /// Reset targets; `None` means every qubit.
    pub targets: Option<Vec<usize>>,
    pub dt: f64,
    pub t_max: f64,
    pub record_stride: usize,
    pub mode: QsimMode,
    pub n_trajectories: usize,
    pub initial_cavity: usize,
    /// Initial qubit levels; `None` means all in `|0⟩`.
    pub initial_qubits: Option<Vec<usize>>,
    pub truncation_guard: bool,
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpec {
    White,
    Ou,
    Se,
}

impl KernelSpec {
    fn as_str(self) -> &'static str {
        match self {
            KernelSpec::White => "white",
            KernelSpec::Ou => "ou",
            KernelSpec::Se => "se",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanSpec {
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub omega0: f64,
    pub mass: f64,
    pub x0: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub kernel: KernelSpec,
    pub variance: f64,
    /// Required for `ou` and `se`.
    pub correlation_time: Option<f64>,
    pub dt: f64,
    pub n_points: usize,
    pub t0: f64,
    pub n_paths: usize,
    pub max_lag: usize,
    pub mean: MeanSpec,
    pub oscillator: Option<OscillatorParams>,
}

/// Parses and validates an experiment file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut r = Reader::new(text);
    let mut top = Fields::new("", &table);
    let seed = top.u64(&mut r, "seed");
    let output_path = top.string_or(&mut r, "output_path", DEFAULT_OUTPUT_PATH);
    if output_path.is_empty() {
        r.issue("", "output_path", "must not be empty");
    }
    let present: Vec<&str> = COMMANDS.iter().copied().filter(|c| table.contains_key(*c)).collect();
    for c in &present {
        top.mark(c);
    }
    top.finish(&mut r);
    let command = match present.as_slice() {
        [] => {
            r.issue("", "command", "no command block; expected exactly one of [search], [tsp], [qsim], [noise]");
            None
        }
        [one] => match table.get(*one) {
            Some(Value::Table(t)) => match *one {
                "search" => parse_search(&mut r, t).map(Command::Search),
                "tsp" => parse_tsp(&mut r, t).map(Command::Tsp),
                "qsim" => parse_qsim(&mut r, t).map(Command::Qsim),
                _ => parse_noise(&mut r, t).map(Command::Noise),
            },
            _ => {
                r.issue("", one, "must be a table");
                None
            }
        },
        many => {
            let names: Vec<String> = many.iter().map(|c| format!("[{c}]")).collect();
            r.issue(
                "",
                "command",
                &format!("exactly one command block allowed, found {}", names.join(", ")),
            );
            None
        }
    };
    match (r.issues.is_empty(), seed, command) {
        (true, Some(seed), Some(command)) => Ok(ExperimentConfig {
            seed,
            output_path,
            command,
        }),
        _ => Err(ConfigError::Invalid(r.issues)),
    }
}

/// Issue collector with line lookup into the source text.
struct Reader<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            issues: Vec::new(),
        }
    }

    /// 1-based line of `key = …` inside table `section`, falling back to the
    /// table header.
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let base = section.split('[').next().unwrap_or(section);
        let mut current = String::new();
        let mut header_line = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') {
                current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
                if current == base && header_line.is_none() {
                    header_line = Some(i + 1);
                }
                continue;
            }
            if current == base {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim().trim_matches('"') == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        if key.is_empty() {
            return header_line;
        }
        header_line.or_else(|| {
            // dotted parent, e.g. the `qubits = [...]` line of `qsim.qubits[0]`
            let (parent, child) = base.rsplit_once('.')?;
            self.line_of(parent, child)
        })
    }

    fn issue(&mut self, section: &str, key: &str, message: &str) {
        let field = match (section.is_empty(), key.is_empty()) {
            (true, _) => key.to_string(),
            (false, true) => section.to_string(),
            (false, false) => format!("{section}.{key}"),
        };
        self.issues.push(ConfigIssue {
            line: self.line_of(section, key),
            field,
            message: message.to_string(),
        });
    }

    fn check(&mut self, ok: bool, section: &str, key: &str, message: &str) {
        if !ok {
            self.issue(section, key, message);
        }
    }
}

/// Typed access to one table that remembers which keys were read.
struct Fields<'t> {
    section: String,
    table: &'t Table,
    seen: BTreeSet<String>,
}

impl<'t> Fields<'t> {
    fn new(section: &str, table: &'t Table) -> Self {
        Self {
            section: section.to_string(),
            table,
            seen: BTreeSet::new(),
        }
    }

    fn mark(&mut self, key: &str) {
        self.seen.insert(key.to_string());
    }

    fn raw(&mut self, key: &str) -> Option<&'t Value> {
        self.mark(key);
        self.table.get(key)
    }

    fn missing(&self, r: &mut Reader, key: &str) {
        r.issue(&self.section, key, "missing required key");
    }

    fn wrong(&self, r: &mut Reader, key: &str, expected: &str) {
        r.issue(&self.section, key, &format!("expected {expected}"));
    }

    fn opt_f64(&mut self, r: &mut Reader, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.wrong(r, key, "a finite number");
                None
            }
        }
    }

    fn f64(&mut self, r: &mut Reader, key: &str) -> Option<f64> {
        if !self.table.contains_key(key) {
            self.mark(key);
            self.missing(r, key);
            return None;
        }
        self.opt_f64(r, key)
    }

    fn f64_or(&mut self, r: &mut Reader, key: &str, default: f64) -> f64 {
        self.opt_f64(r, key).unwrap_or(default)
    }

    fn opt_u64(&mut self, r: &mut Reader, key: &str) -> Option<u64> {
        match self.raw(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.wrong(r, key, "a non-negative integer");
                None
            }
        }
    }

    fn u64(&mut self, r: &mut Reader, key: &str) -> Option<u64> {
        if !self.table.contains_key(key) {
            self.mark(key);
            self.missing(r, key);
            return None;
        }
        self.opt_u64(r, key)
    }

    fn usize(&mut self, r: &mut Reader, key: &str) -> Option<usize> {
        self.u64(r, key).map(|v| v as usize)
    }

    fn usize_or(&mut self, r: &mut Reader, key: &str, default: usize) -> usize {
        self.opt_u64(r, key).map(|v| v as usize).unwrap_or(default)
    }

    fn opt_string(&mut self, r: &mut Reader, key: &str) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.wrong(r, key, "a string");
                None
            }
        }
    }

    fn string_or(&mut self, r: &mut Reader, key: &str, default: &str) -> String {
        self.opt_string(r, key).unwrap_or_else(|| default.to_string())
    }

    fn bool_or(&mut self, r: &mut Reader, key: &str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.wrong(r, key, "true or false");
                default
            }
        }
    }

    fn opt_array(&mut self, r: &mut Reader, key: &str) -> Option<&'t Vec<Value>> {
        match self.raw(key)? {
            Value::Array(a) => Some(a),
            _ => {
                self.wrong(r, key, "an array");
                None
            }
        }
    }

    fn opt_f64_list(&mut self, r: &mut Reader, key: &str) -> Option<Vec<f64>> {
        let a = self.opt_array(r, key)?;
        let out: Option<Vec<f64>> = a
            .iter()
            .map(|v| match v {
                Value::Float(x) if x.is_finite() => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect();
        if out.is_none() {
            self.wrong(r, key, "an array of finite numbers");
        }
        out
    }

    fn opt_usize_list(&mut self, r: &mut Reader, key: &str) -> Option<Vec<usize>> {
        let a = self.opt_array(r, key)?;
        let out: Option<Vec<usize>> = a
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as usize),
                _ => None,
            })
            .collect();
        if out.is_none() {
            self.wrong(r, key, "an array of non-negative integers");
        }
        out
    }

    fn opt_table(&mut self, r: &mut Reader, key: &str) -> Option<&'t Table> {
        match self.raw(key)? {
            Value::Table(t) => Some(t),
            _ => {
                self.wrong(r, key, "a table");
                None
            }
        }
    }

    /// Reports every key that was never read.
    fn finish(self, r: &mut Reader) {
        for key in self.table.keys() {
            if !self.seen.contains(key) {
                r.issue(&self.section, key, "unknown key");
            }
        }
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn parse_search(r: &mut Reader, t: &Table) -> Option<SearchParams> {
    let s = "search";
    let mut f = Fields::new(s, t);
    let n_cells = f.usize(r, "n_cells");
    let true_cell = f.usize_or(r, "true_cell", 0);
    let p_detect = f.f64(r, "p_detect");
    let p_false = f.f64(r, "p_false");
    let policy_name = f.string_or(r, "policy", "greedy");
    let horizon = f.opt_u64(r, "horizon").map(|h| h as usize);
    let max_steps = f.usize_or(r, "max_steps", 100);
    let stop_threshold = f.f64_or(r, "stop_threshold", 0.99);
    let prior = f.opt_f64_list(r, "prior");
    f.finish(r);

    let before = r.issues.len();
    if let Some(n) = n_cells {
        r.check(n >= 1, s, "n_cells", "must be at least 1");
        r.check(true_cell < n.max(1), s, "true_cell", &format!("must be below n_cells = {n}"));
        if let Some(p) = &prior {
            r.check(p.len() == n, s, "prior", &format!("must have n_cells = {n} entries"));
        }
    }
    for (key, p) in [("p_detect", p_detect), ("p_false", p_false)] {
        if let Some(p) = p {
            r.check(in_unit(p), s, key, &format!("value {p} is outside [0, 1]"));
        }
    }
    r.check(
        stop_threshold > 0.0 && stop_threshold <= 1.0,
        s,
        "stop_threshold",
        "must lie in (0, 1]",
    );
    if let Some(p) = &prior {
        let total: f64 = p.iter().sum();
        r.check(
            p.iter().all(|&x| x >= 0.0) && total > 0.0,
            s,
            "prior",
            "weights must be non-negative with a positive sum",
        );
    }
    let policy = match (policy_name.as_str(), horizon) {
        ("greedy", None) => Some(PolicySpec::Greedy),
        ("most_likely", None) => Some(PolicySpec::MostLikely),
        ("brute_force", Some(h)) if h >= 1 => Some(PolicySpec::BruteForce { horizon: h }),
        ("brute_force", Some(_)) => {
            r.issue(s, "horizon", "must be at least 1");
            None
        }
        ("brute_force", None) => {
            r.issue(s, "horizon", "missing required key (policy = \"brute_force\")");
            None
        }
        ("greedy" | "most_likely", Some(_)) => {
            r.issue(s, "horizon", "only allowed with policy = \"brute_force\"");
            None
        }
        (other, _) => {
            r.issue(
                s,
                "policy",
                &format!("unknown policy {other:?}; expected \"greedy\", \"most_likely\" or \"brute_force\""),
            );
            None
        }
    };
    if let (Some(PolicySpec::BruteForce { horizon }), Some(n)) = (policy, n_cells) {
        let nodes = bqo_core::belief_search::tree_size(n, horizon);
        r.check(
            nodes <= bqo_core::belief_search::MAX_TREE_NODES,
            s,
            "horizon",
            &format!("policy tree of {nodes} nodes exceeds the budget"),
        );
    }
    if r.issues.len() > before {
        return None;
    }
    Some(SearchParams {
        n_cells: n_cells?,
        true_cell,
        p_detect: p_detect?,
        p_false: p_false?,
        policy: policy?,
        max_steps,
        stop_threshold,
        prior,
    })
}

fn parse_tsp(r: &mut Reader, t: &Table) -> Option<TspParams> {
    let s = "tsp";
    let mut f = Fields::new(s, t);
    let instance = f.opt_string(r, "instance");
    let cities = f.opt_array(r, "cities");
    let alpha = f.f64_or(r, "alpha", 50.0);
    let beta = f.f64_or(r, "beta", 1.0);
    let node_ratio = f.f64_or(r, "node_ratio", 2.5);
    let k_start = f.opt_f64(r, "k_start");
    let k_decay = f.f64_or(r, "k_decay", 0.99);
    let k_min = f.opt_f64(r, "k_min");
    let iters_per_stage = f.usize_or(r, "iters_per_stage", 10);
    let step_size = f.f64_or(r, "step_size", 1.0);
    let baselines = f.bool_or(r, "baselines", true);
    f.finish(r);

    let before = r.issues.len();
    let source = match (instance, cities) {
        (Some(path), None) => Some(TspSource::File(path)),
        (None, Some(list)) => {
            let coords: Option<Vec<[f64; 2]>> = list
                .iter()
                .map(|v| match v.as_array().map(|a| a.as_slice()) {
                    Some([x, y]) => Some([num(x)?, num(y)?]),
                    _ => None,
                })
                .collect();
            match coords {
                Some(c) if c.len() >= 3 => Some(TspSource::Inline(c)),
                Some(_) => {
                    r.issue(s, "cities", "need at least 3 cities");
                    None
                }
                None => {
                    r.issue(s, "cities", "expected an array of [x, y] pairs of finite numbers");
                    None
                }
            }
        }
        (Some(_), Some(_)) => {
            r.issue(s, "instance", "give either instance or cities, not both");
            None
        }
        (None, None) => {
            r.issue(s, "instance", "missing required key (or give cities = [[x, y], ...])");
            None
        }
    };
    r.check(alpha > 0.0, s, "alpha", "must be positive");
    r.check(beta > 0.0, s, "beta", "must be positive");
    r.check(node_ratio >= 1.0, s, "node_ratio", "must be at least 1");
    r.check(k_decay > 0.0 && k_decay < 1.0, s, "k_decay", "must lie in (0, 1)");
    if let Some(k) = k_start {
        r.check(k > 0.0, s, "k_start", "must be positive");
    }
    if let Some(k) = k_min {
        r.check(k > 0.0, s, "k_min", "must be positive");
        if let Some(k0) = k_start {
            r.check(k < k0, s, "k_min", "must be below k_start");
        }
    }
    r.check(iters_per_stage >= 1, s, "iters_per_stage", "must be at least 1");
    r.check(step_size > 0.0, s, "step_size", "must be positive");
    if r.issues.len() > before {
        return None;
    }
    Some(TspParams {
        source: source?,
        alpha,
        beta,
        node_ratio,
        k_start,
        k_decay,
        k_min,
        iters_per_stage,
        step_size,
        baselines,
    })
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) if x.is_finite() => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_qsim(r: &mut Reader, t: &Table) -> Option<QsimParams> {
    let s = "qsim";
    let mut f = Fields::new(s, t);
    let d = f.usize(r, "d");
    let omega_r = f.f64(r, "omega_r");
    let hbar = f.f64_or(r, "hbar", 1.0);
    let qubit_values = f.opt_array(r, "qubits");
    let rate = f.f64_or(r, "rate", 0.0);
    let targets = f.opt_usize_list(r, "targets");
    let dt = f.f64(r, "dt");
    let t_max = f.f64(r, "t_max");
    let record_stride = f.usize_or(r, "record_stride", 1);
    let mode_name = f.string_or(r, "mode", "mean");
    let n_trajectories = f.usize_or(r, "n_trajectories", 1);
    let initial_cavity = f.usize_or(r, "initial_cavity", 0);
    let initial_qubits = f.opt_usize_list(r, "initial_qubits");
    let truncation_guard = f.bool_or(r, "truncation_guard", true);
    let truncation_tol = f.f64_or(r, "truncation_tol", bqo_core::cavity::DEFAULT_TRUNCATION_TOL);
    f.finish(r);

    let before = r.issues.len();
    let mut qubits = Vec::new();
    for (j, v) in qubit_values.into_iter().flatten().enumerate() {
        let sec = format!("qsim.qubits[{j}]");
        match v {
            Value::Table(qt) => {
                let mut qf = Fields::new(&sec, qt);
                let delta = qf.f64(r, "delta");
                let g = qf.f64(r, "g");
                qf.finish(r);
                if let Some(g) = g {
                    r.check(g >= 0.0, &sec, "g", "must be non-negative");
                }
                if let (Some(delta), Some(g)) = (delta, g) {
                    qubits.push(QubitParams { delta, g });
                }
            }
            _ => r.issue(&sec, "", "expected a table { delta = ..., g = ... }"),
        }
    }
    let nq = qubits.len();
    if let Some(d) = d {
        r.check(d >= 2, s, "d", "must be at least 2");
        r.check(initial_cavity < d.max(1), s, "initial_cavity", &format!("must be below d = {d}"));
        let dim = (0..nq).fold(d, |acc, _| acc.saturating_mul(2));
        r.check(
            dim <= bqo_core::cavity::DEFAULT_DIM_CAP,
            s,
            "qubits",
            &format!("Hilbert dimension {dim} exceeds the cap {}", bqo_core::cavity::DEFAULT_DIM_CAP),
        );
    }
    r.check(hbar > 0.0, s, "hbar", "must be positive");
    r.check(rate >= 0.0, s, "rate", "must be non-negative");
    if let Some(targets) = &targets {
        r.check(
            targets.iter().all(|&q| q < nq),
            s,
            "targets",
            &format!("qubit indices must be below {nq}"),
        );
    }
    if let Some(levels) = &initial_qubits {
        r.check(levels.len() == nq, s, "initial_qubits", &format!("must have {nq} entries"));
        r.check(levels.iter().all(|&l| l < 2), s, "initial_qubits", "levels must be 0 or 1");
    }
    if let Some(dt) = dt {
        r.check(dt > 0.0, s, "dt", "must be positive");
        r.check(rate * dt <= 1.0, s, "rate", &format!("rate·dt = {} exceeds 1", rate * dt));
        if let Some(t_max) = t_max {
            r.check(t_max >= dt, s, "t_max", "must be at least dt");
        }
    }
    r.check(record_stride >= 1, s, "record_stride", "must be at least 1");
    r.check(n_trajectories >= 1, s, "n_trajectories", "must be at least 1");
    r.check(truncation_tol > 0.0, s, "truncation_tol", "must be positive");
    let mode = match mode_name.as_str() {
        "mean" => Some(QsimMode::Mean),
        "trajectory" => Some(QsimMode::Trajectory),
        "ensemble" => Some(QsimMode::Ensemble),
        other => {
            r.issue(
                s,
                "mode",
                &format!("unknown mode {other:?}; expected \"mean\", \"trajectory\" or \"ensemble\""),
            );
            None
        }
    };
    if r.issues.len() > before {
        return None;
    }
    Some(QsimParams {
        d: d?,
        omega_r: omega_r?,
        hbar,
        qubits,
        rate,
        targets,
        dt: dt?,
        t_max: t_max?,
        record_stride,
        mode: mode?,
        n_trajectories,
        initial_cavity,
        initial_qubits,
        truncation_guard,
        truncation_tol,
    })
}

fn parse_noise(r: &mut Reader, t: &Table) -> Option<NoiseParams> {
    let s = "noise";
    let mut f = Fields::new(s, t);
    let kernel_name = f.opt_string(r, "kernel");
    if !t.contains_key("kernel") {
        r.issue(s, "kernel", "missing required key");
    }
    let variance = f.f64(r, "variance");
    let correlation_time = f.opt_f64(r, "correlation_time");
    let dt = f.f64(r, "dt");
    let n_points = f.usize(r, "n_points");
    let t0 = f.f64_or(r, "t0", 0.0);
    let n_paths = f.usize_or(r, "n_paths", 1000);
    let max_lag = f.usize_or(r, "max_lag", 0);
    let mean_table = f.opt_table(r, "mean");
    let osc_table = f.opt_table(r, "oscillator");
    f.finish(r);

    let before = r.issues.len();
    let kernel = match kernel_name.as_deref() {
        Some("white") => Some(KernelSpec::White),
        Some("ou") => Some(KernelSpec::Ou),
        Some("se") => Some(KernelSpec::Se),
        Some(other) => {
            r.issue(s, "kernel", &format!("unknown kernel {other:?}; expected \"white\", \"ou\" or \"se\""));
            None
        }
        None => None,
    };
    match (kernel, correlation_time) {
        (Some(KernelSpec::Ou | KernelSpec::Se), None) => {
            r.issue(s, "correlation_time", "missing required key for this kernel")
        }
        (Some(KernelSpec::White), Some(_)) => {
            r.issue(s, "correlation_time", "not used by the white kernel")
        }
        (_, Some(tau)) => r.check(tau > 0.0, s, "correlation_time", "must be positive"),
        _ => {}
    }
    if let Some(v) = variance {
        r.check(v > 0.0, s, "variance", "must be positive");
    }
    if let Some(dt) = dt {
        r.check(dt > 0.0, s, "dt", "must be positive");
    }
    if let Some(n) = n_points {
        r.check(n >= 1, s, "n_points", "must be at least 1");
        r.check(max_lag < n.max(1), s, "max_lag", "must be below n_points");
    }
    r.check(n_paths >= 2, s, "n_paths", "must be at least 2");
    let mean = match mean_table {
        None => Some(MeanSpec::Constant { value: 0.0 }),
        Some(mt) => parse_mean(r, mt),
    };
    let oscillator = osc_table.and_then(|ot| {
        let sec = "noise.oscillator";
        let mut of = Fields::new(sec, ot);
        let omega0 = of.f64(r, "omega0");
        let mass = of.f64_or(r, "mass", 1.0);
        let x0 = of.f64_or(r, "x0", 0.0);
        let v0 = of.f64_or(r, "v0", 0.0);
        of.finish(r);
        r.check(mass > 0.0, sec, "mass", "must be positive");
        if let Some(w) = omega0 {
            r.check(w > 0.0, sec, "omega0", "must be positive");
            if let Some(dt) = dt {
                r.check(
                    w * dt <= bqo_core::gp_noise::MAX_OMEGA_DT,
                    sec,
                    "omega0",
                    &format!(
                        "omega0·dt = {} exceeds {}",
                        w * dt,
                        bqo_core::gp_noise::MAX_OMEGA_DT
                    ),
                );
            }
        }
        Some(OscillatorParams {
            omega0: omega0?,
            mass,
            x0,
            v0,
        })
    });
    if r.issues.len() > before {
        return None;
    }
    Some(NoiseParams {
        kernel: kernel?,
        variance: variance?,
        correlation_time,
        dt: dt?,
        n_points: n_points?,
        t0,
        n_paths,
        max_lag,
        mean: mean?,
        oscillator,
    })
}

fn parse_mean(r: &mut Reader, t: &Table) -> Option<MeanSpec> {
    let sec = "noise.mean";
    let mut f = Fields::new(sec, t);
    let kind = f.string_or(r, "kind", "constant");
    let out = match kind.as_str() {
        "constant" => Some(MeanSpec::Constant {
            value: f.f64_or(r, "value", 0.0),
        }),
        "linear" => Some(MeanSpec::Linear {
            offset: f.f64_or(r, "offset", 0.0),
            slope: f.f64_or(r, "slope", 0.0),
        }),
        "sinusoid" => {
            let amplitude = f.f64(r, "amplitude");
            let omega = f.f64(r, "omega");
            let phase = f.f64_or(r, "phase", 0.0);
            match (amplitude, omega) {
                (Some(amplitude), Some(omega)) => Some(MeanSpec::Sinusoid { amplitude, omega, phase }),
                _ => None,
            }
        }
        other => {
            r.issue(
                sec,
                "kind",
                &format!("unknown mean {other:?}; expected \"constant\", \"linear\" or \"sinusoid\""),
            );
            None
        }
    };
    f.finish(r);
    out
}

/// Shortest round-trip float text that TOML reads back as a float.
fn float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn string(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

impl ExperimentConfig {
    /// Every field in a fixed order.
    pub fn to_canonical(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "output_path = {}", string(&self.output_path));
        let _ = writeln!(o);
        let _ = writeln!(o, "[{}]", self.command.name());
        match &self.command {
            Command::Search(p) => {
                let _ = writeln!(o, "n_cells = {}", p.n_cells);
                let _ = writeln!(o, "true_cell = {}", p.true_cell);
                let _ = writeln!(o, "p_detect = {}", float(p.p_detect));
                let _ = writeln!(o, "p_false = {}", float(p.p_false));
                match p.policy {
                    PolicySpec::Greedy => {
                        let _ = writeln!(o, "policy = \"greedy\"");
                    }
                    PolicySpec::MostLikely => {
                        let _ = writeln!(o, "policy = \"most_likely\"");
                    }
                    PolicySpec::BruteForce { horizon } => {
                        let _ = writeln!(o, "policy = \"brute_force\"");
                        let _ = writeln!(o, "horizon = {horizon}");
                    }
                }
                let _ = writeln!(o, "max_steps = {}", p.max_steps);
                let _ = writeln!(o, "stop_threshold = {}", float(p.stop_threshold));
                if let Some(prior) = &p.prior {
                    let _ = writeln!(o, "prior = {}", list(prior, |x| float(*x)));
                }
            }
            Command::Tsp(p) => {
                match &p.source {
                    TspSource::File(path) => {
                        let _ = writeln!(o, "instance = {}", string(path));
                    }
                    TspSource::Inline(c) => {
                        let _ = writeln!(o, "cities = {}", list(c, |[x, y]| format!("[{}, {}]", float(*x), float(*y))));
                    }
                }
                let _ = writeln!(o, "alpha = {}", float(p.alpha));
                let _ = writeln!(o, "beta = {}", float(p.beta));
                let _ = writeln!(o, "node_ratio = {}", float(p.node_ratio));
                if let Some(k) = p.k_start {
                    let _ = writeln!(o, "k_start = {}", float(k));
                }
                let _ = writeln!(o, "k_decay = {}", float(p.k_decay));
                if let Some(k) = p.k_min {
                    let _ = writeln!(o, "k_min = {}", float(k));
                }
                let _ = writeln!(o, "iters_per_stage = {}", p.iters_per_stage);
                let _ = writeln!(o, "step_size = {}", float(p.step_size));
                let _ = writeln!(o, "baselines = {}", p.baselines);
            }
            Command::Qsim(p) => {
                let _ = writeln!(o, "d = {}", p.d);
                let _ = writeln!(o, "omega_r = {}", float(p.omega_r));
                let _ = writeln!(o, "hbar = {}", float(p.hbar));
                let _ = writeln!(
                    o,
                    "qubits = {}",
                    list(&p.qubits, |q| format!("{{ delta = {}, g = {} }}", float(q.delta), float(q.g)))
                );
                let _ = writeln!(o, "rate = {}", float(p.rate));
                if let Some(t) = &p.targets {
                    let _ = writeln!(o, "targets = {}", list(t, |q| q.to_string()));
                }
                let _ = writeln!(o, "dt = {}", float(p.dt));
                let _ = writeln!(o, "t_max = {}", float(p.t_max));
                let _ = writeln!(o, "record_stride = {}", p.record_stride);
                let _ = writeln!(o, "mode = \"{}\"", p.mode.as_str());
                let _ = writeln!(o, "n_trajectories = {}", p.n_trajectories);
                let _ = writeln!(o, "initial_cavity = {}", p.initial_cavity);
                if let Some(levels) = &p.initial_qubits {
                    let _ = writeln!(o, "initial_qubits = {}", list(levels, |l| l.to_string()));
                }
                let _ = writeln!(o, "truncation_guard = {}", p.truncation_guard);
                let _ = writeln!(o, "truncation_tol = {}", float(p.truncation_tol));
            }
            Command::Noise(p) => {
                let _ = writeln!(o, "kernel = \"{}\"", p.kernel.as_str());
                let _ = writeln!(o, "variance = {}", float(p.variance));
                if let Some(tau) = p.correlation_time {
                    let _ = writeln!(o, "correlation_time = {}", float(tau));
                }
                let _ = writeln!(o, "dt = {}", float(p.dt));
                let _ = writeln!(o, "n_points = {}", p.n_points);
                let _ = writeln!(o, "t0 = {}", float(p.t0));
                let _ = writeln!(o, "n_paths = {}", p.n_paths);
                let _ = writeln!(o, "max_lag = {}", p.max_lag);
                let _ = writeln!(o);
                let _ = writeln!(o, "[noise.mean]");
                match p.mean {
                    MeanSpec::Constant { value } => {
                        let _ = writeln!(o, "kind = \"constant\"");
                        let _ = writeln!(o, "value = {}", float(value));
                    }
                    MeanSpec::Linear { offset, slope } => {
                        let _ = writeln!(o, "kind = \"linear\"");
                        let _ = writeln!(o, "offset = {}", float(offset));
                        let _ = writeln!(o, "slope = {}", float(slope));
                    }
                    MeanSpec::Sinusoid { amplitude, omega, phase } => {
                        let _ = writeln!(o, "kind = \"sinusoid\"");
                        let _ = writeln!(o, "amplitude = {}", float(amplitude));
                        let _ = writeln!(o, "omega = {}", float(omega));
                        let _ = writeln!(o, "phase = {}", float(phase));
                    }
                }
                if let Some(osc) = p.oscillator {
                    let _ = writeln!(o);
                    let _ = writeln!(o, "[noise.oscillator]");
                    let _ = writeln!(o, "omega0 = {}", float(osc.omega0));
                    let _ = writeln!(o, "mass = {}", float(osc.mass));
                    let _ = writeln!(o, "x0 = {}", float(osc.x0));
                    let _ = writeln!(o, "v0 = {}", float(osc.v0));
                }
            }
        }
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 1\n\n[search]\nn_cells = 3\np_detect = 0.9\np_false = 0.1\n";

    #[test]
    fn minimal_search_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.output_path, DEFAULT_OUTPUT_PATH);
        let canonical = cfg.to_canonical();
        let again = parse_config(&canonical).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_canonical(), canonical);
    }

    #[test]
    fn out_of_range_probability_is_one_error() {
        let text = MINIMAL.replace("p_detect = 0.9", "p_detect = 1.2");
        let err = parse_config(&text).unwrap_err();
        let issues = err.issues();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].field, "search.p_detect");
        assert_eq!(issues[0].line, Some(5));
        assert!(issues[0].message.contains("[0, 1]"));
    }

    #[test]
    fn two_commands_are_rejected() {
        let text = format!("{MINIMAL}\n[noise]\nkernel = \"white\"\nvariance = 1.0\ndt = 0.1\nn_points = 4\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.issues().len(), 1);
        assert!(err.issues()[0].message.contains("exactly one command"));
    }

    #[test]
    fn all_problems_reported_together() {
        let text = "output_path = 3\n\n[search]\nn_cells = 0\np_detect = -1\np_fals = 0.1\n";
        let err = parse_config(text).unwrap_err();
        let fields: Vec<&str> = err.issues().iter().map(|i| i.field.as_str()).collect();
        for f in ["seed", "output_path", "search.p_false", "search.p_fals", "search.n_cells", "search.p_detect"] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
        let unknown = err.issues().iter().find(|i| i.field == "search.p_fals").unwrap();
        assert_eq!(unknown.message, "unknown key");
        assert_eq!(unknown.line, Some(6));
        let missing = err.issues().iter().find(|i| i.field == "seed").unwrap();
        assert!(missing.message.contains("missing"));
    }

    #[test]
    fn unknown_top_level_key() {
        let err = parse_config(&format!("sead = 2\n{MINIMAL}")).unwrap_err();
        assert_eq!(err.issues().len(), 1);
        assert_eq!(err.issues()[0].field, "sead");
    }

    #[test]
    fn every_command_round_trips() {
        let texts = [
            "seed = 4\noutput_path = \"o\"\n[search]\nn_cells = 4\np_detect = 1\np_false = 0\npolicy = \"brute_force\"\nhorizon = 2\nprior = [1, 2, 3, 4]\n",
            "seed = 4\n[tsp]\ncities = [[0, 0], [3, 0], [0, 4]]\nk_start = 0.5\nk_min = 0.01\nbaselines = false\n",
            "seed = 4\n[tsp]\ninstance = \"a b.tsp\"\n",
            "seed = 9\n[qsim]\nd = 3\nomega_r = 1\nqubits = [{ delta = 1.0, g = 0.05 }]\nrate = 0.1\ndt = 0.02\nt_max = 1e2\nmode = \"ensemble\"\nn_trajectories = 8\ninitial_cavity = 1\ninitial_qubits = [0]\ntargets = [0]\ntruncation_guard = false\n",
            "seed = 0\n[noise]\nkernel = \"ou\"\nvariance = 2\ncorrelation_time = 0.3\ndt = 1e-3\nn_points = 10\n[noise.mean]\nkind = \"sinusoid\"\namplitude = 1\nomega = 2\n[noise.oscillator]\nomega0 = 1\n",
        ];
        for text in texts {
            let cfg = parse_config(text).unwrap_or_else(|e| panic!("{text}\n{e}"));
            let canonical = cfg.to_canonical();
            assert_eq!(parse_config(&canonical).unwrap(), cfg, "{canonical}");
        }
    }

    #[test]
    fn qubit_fields_are_located() {
        let text = "seed = 1\n[qsim]\nd = 3\nomega_r = 1\ndt = 0.1\nt_max = 1\nqubits = [{ delta = 1.0 }]\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.issues().len(), 1);
        assert_eq!(err.issues()[0].field, "qsim.qubits[0].g");
        assert_eq!(err.issues()[0].line, Some(7));
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(parse_config("seed = = 1"), Err(ConfigError::Syntax(_))));
    }
}
