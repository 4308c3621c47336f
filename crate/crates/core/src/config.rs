//! Problem definitions as TOML.
//!
//! ```toml
//! mode = "single_sink"          # single_sink | who_goes_where | free_pairing | graph_stp
//! preset = "pentagon(0.5)"      # or explicit points below
//! alpha = 0.0
//! method = "psi"                # psi | phi
//! seed = 0
//! terminals = [[0.25, 0.3333], [0.75, 0.6667]]   # single_sink, graph_stp; sink last
//! sources = [[0.1, 0.5]]                          # who_goes_where, free_pairing
//! sinks = [[0.9, 0.5]]
//! permutation_cap = 7
//!
//! [grid]
//! size = 32
//!
//! [refine]
//! rounds = 5
//! used_threshold = 0.01
//! unused_threshold = 1e-8
//! selection_radius = 1
//!
//! [solver]
//! gamma = 0.6
//! step_ratio = 1.0
//! max_iters = 300000
//! eps_feas = 1e-5
//! eps_rel = 1e-6
//! window = 500
//! check_every = 100
//! dykstra_tol = 1e-8
//! dykstra_sweeps = 50
//!
//! [graph]
//! scatter = "grid"              # grid | random | file
//! k = 1681
//! m = 30
//! file = "graph.txt"            # edge list, with scatter = "file"
//! ```
//!
//! Keys given explicitly override what a preset sets. Parsing reports every
//! violation at once.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::refine::RefinePolicy;
use crate::shapes::regular_polygon;
use crate::solver::{Method, SolverOptions, StoppingRule, DEFAULT_PERMUTATION_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Steiner / irrigation with every terminal sending unit mass to the last.
    SingleSink,
    /// Source `i` sends to sink `i`.
    WhoGoesWhere,
    /// Cheapest assignment of sinks to sources.
    FreePairing,
    /// Relaxation on an embedded graph.
    GraphStp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SingleSink => "single_sink",
            Mode::WhoGoesWhere => "who_goes_where",
            Mode::FreePairing => "free_pairing",
            Mode::GraphStp => "graph_stp",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        [Mode::SingleSink, Mode::WhoGoesWhere, Mode::FreePairing, Mode::GraphStp]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scatter {
    /// `√k × √k` lattice.
    Grid,
    /// `k` uniform points from the config seed.
    Random,
    /// Edge-list file; `k` and `m` are ignored.
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphParams {
    pub scatter: Scatter,
    pub k: usize,
    pub m: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            scatter: Scatter::Grid,
            k: 1681,
            m: 30,
        }
    }
}

/// Plain-data solver settings (the options minus the progress callback).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub gamma: f64,
    pub step_ratio: f64,
    pub stop: StoppingRule,
    pub dykstra_tol: f64,
    pub dykstra_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings::from(&SolverOptions::default())
    }
}

impl From<&SolverOptions> for SolverSettings {
    fn from(o: &SolverOptions) -> Self {
        SolverSettings {
            gamma: o.gamma,
            step_ratio: o.step_ratio,
            stop: o.stop,
            dykstra_tol: o.dykstra_tol,
            dykstra_sweeps: o.dykstra_sweeps,
        }
    }
}

impl SolverSettings {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            gamma: self.gamma,
            step_ratio: self.step_ratio,
            stop: self.stop,
            dykstra_tol: self.dykstra_tol,
            dykstra_sweeps: self.dykstra_sweeps,
            progress: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerminalConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub method: Method,
    pub seed: u64,
    pub terminals: Vec<[f64; 2]>,
    pub sources: Vec<[f64; 2]>,
    pub sinks: Vec<[f64; 2]>,
    pub permutation_cap: usize,
    /// `initial_size` carries `[grid] size`.
    pub refine: RefinePolicy,
    pub solver: SolverSettings,
    pub graph: GraphParams,
}

impl Default for TerminalConfig {
    fn default() -> Self {
        TerminalConfig {
            mode: Mode::SingleSink,
            alpha: 0.0,
            method: Method::Psi,
            seed: 0,
            terminals: Vec::new(),
            sources: Vec::new(),
            sinks: Vec::new(),
            permutation_cap: DEFAULT_PERMUTATION_CAP,
            refine: RefinePolicy::default(),
            solver: SolverSettings::default(),
            graph: GraphParams::default(),
        }
    }
}

/// What a preset fills in; `None` leaves the default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Preset {
    pub mode: Option<Mode>,
    pub terminals: Vec<[f64; 2]>,
    pub sources: Vec<[f64; 2]>,
    pub sinks: Vec<[f64; 2]>,
    pub alpha: Option<f64>,
    pub grid_size: Option<u32>,
    pub rounds: Option<usize>,
    pub graph: Option<GraphParams>,
}

pub const PRESET_NAMES: &[&str] = &[
    "two_terminal",
    "triangle(side)",
    "square(side)",
    "pentagon(side)",
    "hexagon(side)",
    "hexagon_center(side)",
    "random(n)",
    "irrigation[(alpha)]",
    "branched[(alpha)]",
    "graph_stp(3|4|13)",
];

pub const IRRIGATION_SOURCES: [[f64; 2]; 4] = [[0.4, 0.9], [0.3, 0.65], [0.2, 0.4], [0.1, 0.15]];
pub const IRRIGATION_SINK: [f64; 2] = [0.9, 0.27];
pub const BRANCHED_SOURCES: [[f64; 2]; 4] = [[0.1, 0.55], [0.1, 0.4], [0.1, 0.25], [0.1, 0.1]];
pub const BRANCHED_SINKS: [[f64; 2]; 2] = [[0.9, 0.2], [0.9, 0.45]];

const CENTER: [f64; 2] = [0.5, 0.5];

fn square(side: f64) -> Vec<[f64; 2]> {
    let (lo, hi) = (0.5 - side / 2.0, 0.5 + side / 2.0);
    vec![[lo, lo], [hi, lo], [hi, hi], [lo, hi]]
}

/// `n` uniform points in `[0.1, 0.9]²`.
pub fn random_terminals(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0.1 + 0.8 * rng.gen::<f64>(), 0.1 + 0.8 * rng.gen::<f64>()]).collect()
}

/// Expands a preset name such as `pentagon(0.5)`. `seed` feeds the random
/// layouts.
pub fn preset(spec: &str, seed: u64) -> std::result::Result<Preset, String> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(p) if spec.ends_with(')') => (&spec[..p], Some(&spec[p + 1..spec.len() - 1])),
        Some(_) => return Err(format!("preset `{spec}`: unbalanced parenthesis")),
        None => (spec, None),
    };
    let arg = |what: &str| -> std::result::Result<f64, String> {
        let a = args.ok_or_else(|| format!("preset `{name}` needs a {what} argument"))?;
        a.trim().parse::<f64>().map_err(|_| format!("preset `{spec}`: bad {what} `{}`", a.trim()))
    };
    let opt_arg = |what: &str| args.map(|_| arg(what)).transpose();
    let side = || -> std::result::Result<f64, String> {
        let s = arg("side")?;
        if !(s > 0.0 && s < 1.0) {
            return Err(format!("preset `{spec}`: side must lie in (0, 1)"));
        }
        Ok(s)
    };
    let single = |terminals| Preset {
        mode: Some(Mode::SingleSink),
        terminals,
        ..Preset::default()
    };
    let p = match name {
        "two_terminal" => Preset {
            grid_size: Some(201),
            rounds: Some(0),
            ..single(vec![[0.25, 1.0 / 3.0], [0.75, 2.0 / 3.0]])
        },
        "triangle" => single(regular_polygon(3, side()?, CENTER)),
        "square" => single(square(side()?)),
        "pentagon" => single(regular_polygon(5, side()?, CENTER)),
        "hexagon" => single(regular_polygon(6, side()?, CENTER)),
        "hexagon_center" => {
            let mut t = regular_polygon(6, side()?, CENTER);
            t.push(CENTER);
            single(t)
        }
        "random" => {
            let n = arg("count")?;
            if n.fract() != 0.0 || !(2.0..=25.0).contains(&n) {
                return Err(format!("preset `{spec}`: count must be an integer in [2, 25]"));
            }
            single(random_terminals(n as usize, seed))
        }
        "irrigation" => {
            let mut t = IRRIGATION_SOURCES.to_vec();
            t.push(IRRIGATION_SINK);
            Preset {
                alpha: opt_arg("alpha")?,
                ..single(t)
            }
        }
        "branched" => Preset {
            mode: Some(Mode::FreePairing),
            sources: BRANCHED_SOURCES.to_vec(),
            sinks: vec![BRANCHED_SINKS[0], BRANCHED_SINKS[0], BRANCHED_SINKS[1], BRANCHED_SINKS[1]],
            alpha: opt_arg("alpha")?,
            ..Preset::default()
        },
        "graph_stp" => {
            let n = arg("terminal count")?;
            let terminals = match n as i64 {
                3 if n == 3.0 => regular_polygon(3, 0.6, CENTER),
                4 if n == 4.0 => square(0.6),
                13 if n == 13.0 => random_terminals(13, seed),
                _ => return Err(format!("preset `{spec}`: terminal count must be 3, 4 or 13")),
            };
            Preset {
                mode: Some(Mode::GraphStp),
                terminals,
                graph: Some(GraphParams::default()),
                ..Preset::default()
            }
        }
        _ => {
            return Err(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            ))
        }
    };
    if args.is_some() && name == "two_terminal" {
        return Err("preset `two_terminal` takes no argument".into());
    }
    Ok(p)
}

/// Pulls typed keys out of a table, collecting every failure.
struct Reader {
    errs: Vec<String>,
}

impl Reader {
    fn take<T: DeserializeOwned>(&mut self, t: &mut Table, key: &str, path: &str) -> Option<T> {
        let v = t.remove(key)?;
        match v.try_into::<T>() {
            Ok(x) => Some(x),
            Err(e) => {
                let msg = e.to_string();
                self.errs.push(format!("{path}{key}: {}", msg.trim()));
                None
            }
        }
    }

    fn section(&mut self, t: &mut Table, key: &str) -> Table {
        match t.remove(key) {
            Some(Value::Table(s)) => s,
            Some(_) => {
                self.errs.push(format!("{key}: expected a [{key}] section"));
                Table::new()
            }
            None => Table::new(),
        }
    }

    fn unknown(&mut self, t: &Table, path: &str) {
        for k in t.keys() {
            self.errs.push(format!("unknown key `{path}{k}`"));
        }
    }
}

fn in_open_square(p: [f64; 2]) -> bool {
    p.iter().all(|&x| x > 0.0 && x < 1.0)
}

/// Command-line values that replace (or add) config keys before presets
/// are expanded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub rounds: Option<usize>,
    pub gamma: Option<f64>,
    pub max_iters: Option<usize>,
}

impl Overrides {
    fn apply(&self, root: &mut Table) {
        fn set(t: &mut Table, section: Option<&str>, key: &str, v: Value) {
            let t = match section {
                Some(s) => match t.entry(s).or_insert_with(|| Value::Table(Table::new())) {
                    Value::Table(inner) => inner,
                    // a malformed section is reported by the parser
                    _ => return,
                },
                None => t,
            };
            t.insert(key.to_string(), v);
        }
        if let Some(s) = self.seed {
            set(root, None, "seed", Value::Integer(s as i64));
        }
        if let Some(a) = self.alpha {
            set(root, None, "alpha", Value::Float(a));
        }
        if let Some(r) = self.rounds {
            set(root, Some("refine"), "rounds", Value::Integer(r as i64));
        }
        if let Some(g) = self.gamma {
            set(root, Some("solver"), "gamma", Value::Float(g));
        }
        if let Some(m) = self.max_iters {
            set(root, Some("solver"), "max_iters", Value::Integer(m as i64));
        }
    }
}

pub fn parse_config(text: &str) -> Result<TerminalConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<TerminalConfig> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string().trim().to_string()]))?;
    overrides.apply(&mut root);
    let mut r = Reader { errs: Vec::new() };
    let mut c = TerminalConfig::default();

    let mode: Option<String> = r.take(&mut root, "mode", "");
    let preset_name: Option<String> = r.take(&mut root, "preset", "");
    let alpha: Option<f64> = r.take(&mut root, "alpha", "");
    let method: Option<String> = r.take(&mut root, "method", "");
    if let Some(s) = r.take::<i64>(&mut root, "seed", "") {
        match u64::try_from(s) {
            Ok(s) => c.seed = s,
            Err(_) => r.errs.push(format!("seed: must be nonnegative, got {s}")),
        }
    }
    let terminals: Option<Vec<[f64; 2]>> = r.take(&mut root, "terminals", "");
    let sources: Option<Vec<[f64; 2]>> = r.take(&mut root, "sources", "");
    let sinks: Option<Vec<[f64; 2]>> = r.take(&mut root, "sinks", "");
    let cap: Option<usize> = r.take(&mut root, "permutation_cap", "");

    let mut grid = r.section(&mut root, "grid");
    let grid_size: Option<u32> = r.take(&mut grid, "size", "grid.");
    r.unknown(&grid, "grid.");

    let mut refine = r.section(&mut root, "refine");
    let rounds: Option<usize> = r.take(&mut refine, "rounds", "refine.");
    if let Some(x) = r.take(&mut refine, "used_threshold", "refine.") {
        c.refine.used_threshold = x;
    }
    if let Some(x) = r.take(&mut refine, "unused_threshold", "refine.") {
        c.refine.unused_threshold = x;
    }
    if let Some(x) = r.take(&mut refine, "selection_radius", "refine.") {
        c.refine.selection_radius = x;
    }
    r.unknown(&refine, "refine.");

    let mut solver = r.section(&mut root, "solver");
    let s = &mut c.solver;
    macro_rules! set {
        ($field:expr, $key:literal) => {
            if let Some(x) = r.take(&mut solver, $key, "solver.") {
                $field = x;
            }
        };
    }
    set!(s.gamma, "gamma");
    set!(s.step_ratio, "step_ratio");
    set!(s.stop.max_iters, "max_iters");
    set!(s.stop.eps_feas, "eps_feas");
    set!(s.stop.eps_rel, "eps_rel");
    set!(s.stop.window, "window");
    set!(s.stop.check_every, "check_every");
    set!(s.dykstra_tol, "dykstra_tol");
    set!(s.dykstra_sweeps, "dykstra_sweeps");
    r.unknown(&solver, "solver.");

    let mut graph = r.section(&mut root, "graph");
    let scatter: Option<String> = r.take(&mut graph, "scatter", "graph.");
    let gk: Option<usize> = r.take(&mut graph, "k", "graph.");
    let gm: Option<usize> = r.take(&mut graph, "m", "graph.");
    let gfile: Option<String> = r.take(&mut graph, "file", "graph.");
    r.unknown(&graph, "graph.");
    r.unknown(&root, "");

    let p = match preset_name.as_deref().map(|name| preset(name, c.seed)) {
        Some(Ok(p)) => p,
        Some(Err(e)) => {
            r.errs.push(e);
            Preset::default()
        }
        None => Preset::default(),
    };
    if preset_name.is_some() && (terminals.is_some() || sources.is_some() || sinks.is_some()) {
        r.errs.push("a preset and explicit terminals/sources/sinks cannot be combined".into());
    }

    c.mode = match mode.as_deref() {
        Some(m) => Mode::parse(m).unwrap_or_else(|| {
            r.errs.push(format!(
                "mode: unknown mode `{m}` (single_sink, who_goes_where, free_pairing, graph_stp)"
            ));
            Mode::SingleSink
        }),
        None => p.mode.unwrap_or(Mode::SingleSink),
    };
    c.method = match method.as_deref() {
        None | Some("psi") => Method::Psi,
        Some("phi") => Method::Phi,
        Some(m) => {
            r.errs.push(format!("method: unknown method `{m}` (psi, phi)"));
            Method::Psi
        }
    };
    c.alpha = alpha.or(p.alpha).unwrap_or(0.0);
    c.terminals = terminals.unwrap_or(p.terminals);
    c.sources = sources.unwrap_or(p.sources);
    c.sinks = sinks.unwrap_or(p.sinks);
    c.permutation_cap = cap.unwrap_or(DEFAULT_PERMUTATION_CAP);
    c.refine.initial_size = grid_size.or(p.grid_size).unwrap_or(c.refine.initial_size);
    c.refine.max_rounds = rounds.or(p.rounds).unwrap_or(c.refine.max_rounds);
    let base_graph = p.graph.unwrap_or_default();
    c.graph = GraphParams {
        scatter: match (scatter.as_deref(), gfile) {
            (Some("file"), Some(f)) => Scatter::File(f),
            (Some("file"), None) => {
                r.errs.push("graph.scatter = \"file\" needs graph.file".into());
                Scatter::Grid
            }
            (_, Some(_)) => {
                r.errs.push("graph.file is only read with graph.scatter = \"file\"".into());
                Scatter::Grid
            }
            (None, None) => base_graph.scatter,
            (Some("grid"), None) => Scatter::Grid,
            (Some("random"), None) => Scatter::Random,
            (Some(s), None) => {
                r.errs.push(format!("graph.scatter: unknown scatter `{s}` (grid, random, file)"));
                Scatter::Grid
            }
        },
        k: gk.unwrap_or(base_graph.k),
        m: gm.unwrap_or(base_graph.m),
    };
    r.errs.extend(violations(&c));
    if r.errs.is_empty() {
        Ok(c)
    } else {
        Err(Error::Config(r.errs))
    }
}

/// Every semantic problem with a resolved config.
pub fn violations(c: &TerminalConfig) -> Vec<String> {
    let mut e = Vec::new();
    if !(0.0..=1.0).contains(&c.alpha) {
        e.push(format!("alpha must lie in [0, 1], got {}", c.alpha));
    }
    let check_points = |e: &mut Vec<String>, what: &str, pts: &[[f64; 2]]| {
        for (k, p) in pts.iter().enumerate() {
            if !in_open_square(*p) {
                e.push(format!("{what}[{k}] = {p:?} lies outside the open unit square"));
            }
        }
    };
    match c.mode {
        Mode::GraphStp if matches!(c.graph.scatter, Scatter::File(_)) => {
            if !c.terminals.is_empty() || !c.sources.is_empty() || !c.sinks.is_empty() {
                e.push("graph.scatter = \"file\" takes its terminals from the edge list".into());
            }
        }
        Mode::SingleSink | Mode::GraphStp => {
            if c.terminals.len() < 2 {
                e.push(format!(
                    "mode {} needs at least 2 terminals (the last is the sink), got {}",
                    c.mode.name(),
                    c.terminals.len()
                ));
            }
            if !c.sources.is_empty() || !c.sinks.is_empty() {
                e.push(format!("mode {} takes `terminals`, not sources/sinks", c.mode.name()));
            }
            if c.terminals.len() > 25 {
                e.push(format!("at most 25 terminals are supported, got {}", c.terminals.len()));
            }
            check_points(&mut e, "terminals", &c.terminals);
        }
        Mode::WhoGoesWhere | Mode::FreePairing => {
            if c.sources.is_empty() || c.sources.len() != c.sinks.len() {
                e.push(format!(
                    "mode {} needs equal, positive source and sink counts, got {} and {}",
                    c.mode.name(),
                    c.sources.len(),
                    c.sinks.len()
                ));
            }
            if !c.terminals.is_empty() {
                e.push(format!("mode {} takes sources/sinks, not `terminals`", c.mode.name()));
            }
            if c.sources.len() > 24 {
                e.push(format!("at most 24 fields are supported, got {}", c.sources.len()));
            }
            if c.mode == Mode::FreePairing && c.sources.len() > c.permutation_cap {
                e.push(format!(
                    "{} sources exceed permutation_cap = {}",
                    c.sources.len(),
                    c.permutation_cap
                ));
            }
            check_points(&mut e, "sources", &c.sources);
            check_points(&mut e, "sinks", &c.sinks);
        }
    }
    if c.refine.initial_size > 4096 {
        e.push(format!("grid.size must be at most 4096, got {}", c.refine.initial_size));
    }
    if let Err(Error::Config(v)) = c.refine.validate() {
        e.extend(v.into_iter().map(|m| format!("refine: {m}")));
    }
    let s = &c.solver;
    if !(s.gamma >= 0.0 && s.gamma <= 2.0) {
        e.push(format!("solver.gamma must lie in [0, 2], got {}", s.gamma));
    }
    if !(s.step_ratio > 0.0 && s.step_ratio.is_finite()) {
        e.push(format!("solver.step_ratio must be positive, got {}", s.step_ratio));
    }
    for (name, v) in [
        ("eps_feas", s.stop.eps_feas),
        ("eps_rel", s.stop.eps_rel),
        ("dykstra_tol", s.dykstra_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            e.push(format!("solver.{name} must be positive, got {v}"));
        }
    }
    for (name, v) in [
        ("max_iters", s.stop.max_iters),
        ("window", s.stop.window),
        ("check_every", s.stop.check_every),
        ("dykstra_sweeps", s.dykstra_sweeps),
    ] {
        if v == 0 {
            e.push(format!("solver.{name} must be at least 1"));
        }
    }
    if c.mode == Mode::GraphStp {
        let g = &c.graph;
        if g.m == 0 {
            e.push("graph.m must be at least 1".into());
        }
        if g.scatter == Scatter::Grid {
            let r = (g.k as f64).sqrt().round() as usize;
            if r * r != g.k || r < 2 {
                e.push(format!("graph.k = {} must be a square of at least 4 for a grid scatter", g.k));
            }
        }
    }
    e
}

fn points(s: &mut String, key: &str, pts: &[[f64; 2]]) {
    if pts.is_empty() {
        return;
    }
    let items: Vec<String> = pts.iter().map(|p| format!("[{:?}, {:?}]", p[0], p[1])).collect();
    let _ = writeln!(s, "{key} = [{}]", items.join(", "));
}

impl TerminalConfig {
    /// Fully resolved TOML: `parse_config(&c.to_toml()) == c`.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode = \"{}\"", self.mode.name());
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let method = match self.method {
            Method::Psi => "psi",
            Method::Phi => "phi",
        };
        let _ = writeln!(s, "method = \"{method}\"");
        let _ = writeln!(s, "seed = {}", self.seed);
        points(&mut s, "terminals", &self.terminals);
        points(&mut s, "sources", &self.sources);
        points(&mut s, "sinks", &self.sinks);
        let _ = writeln!(s, "permutation_cap = {}", self.permutation_cap);
        let r = &self.refine;
        let _ = writeln!(s, "\n[grid]\nsize = {}", r.initial_size);
        let _ = writeln!(
            s,
            "\n[refine]\nrounds = {}\nused_threshold = {:?}\nunused_threshold = {:?}\nselection_radius = {}",
            r.max_rounds, r.used_threshold, r.unused_threshold, r.selection_radius
        );
        let v = &self.solver;
        let _ = writeln!(
            s,
            "\n[solver]\ngamma = {:?}\nstep_ratio = {:?}\nmax_iters = {}\neps_feas = {:?}\neps_rel = {:?}\n\
             window = {}\ncheck_every = {}\ndykstra_tol = {:?}\ndykstra_sweeps = {}",
            v.gamma,
            v.step_ratio,
            v.stop.max_iters,
            v.stop.eps_feas,
            v.stop.eps_rel,
            v.stop.window,
            v.stop.check_every,
            v.dykstra_tol,
            v.dykstra_sweeps
        );
        let g = &self.graph;
        let scatter = match &g.scatter {
            Scatter::Grid => "grid",
            Scatter::Random => "random",
            Scatter::File(_) => "file",
        };
        let _ = writeln!(s, "\n[graph]\nscatter = \"{scatter}\"\nk = {}\nm = {}", g.k, g.m);
        if let Scatter::File(f) = &g.scatter {
            let _ = writeln!(s, "file = {}", Value::String(f.clone()));
        }
        s
    }

    /// Re-checks after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        let v = violations(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::dist;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("terminals = [[0.25, 0.3], [0.75, 0.6]]\n").unwrap();
        assert_eq!(c.mode, Mode::SingleSink);
        assert_eq!(c.solver.gamma, 0.6);
        assert_eq!(c.refine.initial_size, 32);
        assert_eq!(c.refine.max_rounds, 5);
        assert_eq!(c.alpha, 0.0);
    }

    #[test]
    fn pentagon_preset_has_the_sink_last() {
        let c = parse_config("preset = \"pentagon(0.5)\"").unwrap();
        assert_eq!(c.terminals.len(), 5);
        for k in 0..5 {
            assert!((dist(c.terminals[k], c.terminals[(k + 1) % 5]) - 0.5).abs() < 1e-12);
        }
        // sink is vertex 5, the last one counter-clockwise from the top
        let r = 0.5 / (2.0 * (std::f64::consts::PI / 5.0).sin());
        let t = std::f64::consts::PI / 2.0 + 8.0 * std::f64::consts::PI / 5.0;
        assert!(dist(c.terminals[4], [0.5 + r * t.cos(), 0.5 + r * t.sin()]) < 1e-12);
    }

    #[test]
    fn alpha_out_of_range_names_the_bound() {
        let Err(Error::Config(v)) = parse_config("alpha = 1.5\npreset = \"square(0.5)\"") else {
            panic!()
        };
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("[0, 1]"), "{v:?}");
    }

    #[test]
    fn every_violation_is_reported() {
        let text = "alpha = -1\nbogus = 3\nterminals = [[0.5, 0.5], [1.2, 0.5]]\n\
                    [grid]\nsize = 1\n[solver]\ngamma = \"x\"\nspeed = 2\n";
        let Err(Error::Config(v)) = parse_config(text) else { panic!() };
        let joined = v.join("\n");
        for needle in ["alpha", "bogus", "terminals[1]", "grid size", "solver.gamma", "solver.speed"] {
            assert!(joined.contains(needle), "missing {needle} in {joined}");
        }
    }

    #[test]
    fn explicit_keys_override_the_preset() {
        let c = parse_config("preset = \"two_terminal\"\n[grid]\nsize = 64\n").unwrap();
        assert_eq!(c.refine.initial_size, 64);
        assert_eq!(c.refine.max_rounds, 0);
        let c = parse_config("preset = \"irrigation(0.8)\"\nalpha = 0.6").unwrap();
        assert_eq!(c.alpha, 0.6);
    }

    #[test]
    fn preset_and_points_conflict() {
        assert!(parse_config("preset = \"square(0.5)\"\nterminals = [[0.2, 0.2], [0.4, 0.4]]").is_err());
        assert!(parse_config("preset = \"octagon(0.5)\"").is_err());
        assert!(parse_config("preset = \"graph_stp(5)\"").is_err());
    }

    #[test]
    fn resolved_echo_round_trips() {
        for p in ["pentagon(0.5)", "branched(0.65)", "graph_stp(13)", "random(9)", "two_terminal"] {
            let c = parse_config(&format!("preset = \"{p}\"\nseed = 7\nmethod = \"phi\"")).unwrap();
            assert_eq!(parse_config(&c.to_toml()).unwrap(), c, "{p}");
        }
        let c = parse_config("mode = \"graph_stp\"\n[graph]\nscatter = \"file\"\nfile = \"a \\\"b\\\".txt\"").unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn random_presets_follow_the_seed() {
        let a = parse_config("preset = \"random(9)\"\nseed = 1").unwrap();
        let b = parse_config("preset = \"random(9)\"\nseed = 1").unwrap();
        let c = parse_config("preset = \"random(9)\"\nseed = 2").unwrap();
        assert_eq!(a.terminals, b.terminals);
        assert_ne!(a.terminals, c.terminals);
    }

    #[test]
    fn overrides_beat_the_file_and_the_preset() {
        let o = Overrides {
            seed: Some(3),
            alpha: Some(0.5),
            rounds: Some(2),
            gamma: Some(1.0),
            max_iters: Some(10),
        };
        let c = parse_config_with("preset = \"random(5)\"\nalpha = 0.1\n[solver]\ngamma = 0.2", &o).unwrap();
        assert_eq!(c.terminals, random_terminals(5, 3));
        assert_eq!((c.alpha, c.refine.max_rounds), (0.5, 2));
        assert_eq!((c.solver.gamma, c.solver.stop.max_iters), (1.0, 10));
    }

    #[test]
    fn mode_specific_shapes_are_checked() {
        assert!(parse_config("mode = \"who_goes_where\"\nsources = [[0.2, 0.2]]\nsinks = []").is_err());
        assert!(parse_config("mode = \"who_goes_where\"\nsources = [[0.2, 0.2]]\nsinks = [[0.8, 0.8]]").is_ok());
        assert!(parse_config("terminals = [[0.2, 0.2]]").is_err());
    }
}
