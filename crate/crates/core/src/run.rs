//! One job from a config: dispatch to the refinement loop, the pairing
//! search or the graph solver, and write the result artifacts.
//!
//! Files written to the output directory:
//!
//! | file | content |
//! |---|---|
//! | `config.toml` | the input text, unchanged |
//! | `resolved.toml` | the config after presets and overrides |
//! | `energies.tsv` | one row per refinement round |
//! | `permutations.tsv` | one row per assignment (free pairing) |
//! | `round<r>.dump`, `round<r>.svg` | grid, field averages and shading per round |
//! | `graph.txt`, `flows.txt`, `graph.svg`, `problem.lp` | graph runs |
//! | `progress.log` | one line per convergence check |
//! | `summary.txt` | energy, status and wall time |

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::config::{Mode, Scatter, TerminalConfig};
use crate::error::{Error, Result};
use crate::graph::{
    augment, exact_steiner_dp, export_lp, grid_scatter, knn_graph, parse_edge_list, random_scatter, solve_graph,
    write_edge_list, write_flow_solution, EmbeddedGraph, FlowSolution, GraphSolveOptions, DP_TERMINAL_CAP,
};
use crate::grid::{FieldDemand, FieldStack, GridDump, QuadGrid};
use crate::kalpha::Alpha;
use crate::refine::{refine_loop, RoundRecord};
use crate::render::{render_dump, render_graph, RenderOptions};
use crate::solver::{who_goes_where, Assignment, CheckRecord, PermutationEnergy, SolveStatus, SolverOptions};

/// Exit status for a run that finished without meeting its stopping rule.
pub const EXIT_NOT_CONVERGED: i32 = 1;

/// Process exit code for each failure class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::AlphaOutOfRange(_) | Error::InvalidInput(_) => 2,
        Error::Parse { .. } | Error::Io(_) => 3,
        Error::TerminalOnBoundary { .. } | Error::TerminalCollision { .. } | Error::Disconnected { .. } => 4,
        Error::TooManyColumns { .. } | Error::CapExceeded { .. } => 5,
        Error::Diverged { .. } | Error::Degenerate(_) | Error::InfeasibleLayout { .. } => 6,
        Error::DimensionMismatch(_) | Error::NotSiblings => 70,
    }
}

/// Final grid state of a flat run.
#[derive(Clone, Debug)]
pub struct FieldOutcome {
    pub grid: QuadGrid,
    pub fields: FieldStack,
    pub density: Vec<f64>,
    pub demands: Vec<FieldDemand>,
}

#[derive(Clone, Debug)]
pub struct GraphOutcome {
    pub graph: EmbeddedGraph,
    pub solution: FlowSolution,
    /// Exact Steiner tree length, when the terminal count allows the DP.
    pub exact: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub energy: f64,
    pub status: SolveStatus,
    pub rounds: Vec<RoundRecord>,
    /// Free pairing: every assignment on the initial grid.
    pub permutations: Vec<PermutationEnergy>,
    pub assignment: Option<Assignment>,
    pub feasibility: f64,
    pub field: Option<FieldOutcome>,
    pub graph: Option<GraphOutcome>,
    pub artifacts: Vec<PathBuf>,
    /// The input text as given.
    pub config_echo: String,
    pub wall_time: f64,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            SolveStatus::Converged => 0,
            SolveStatus::MaxIterations => EXIT_NOT_CONVERGED,
        }
    }
}

struct Out<'a> {
    dir: Option<&'a Path>,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        if let Some(d) = self.dir {
            let p = d.join(name);
            std::fs::write(&p, content)?;
            self.files.push(p);
        }
        Ok(())
    }
}

fn demands_of(cfg: &TerminalConfig, sinks: &[[f64; 2]]) -> Vec<FieldDemand> {
    match cfg.mode {
        Mode::SingleSink => {
            let (sink, rest) = cfg.terminals.split_last().expect("validated: at least two terminals");
            rest.iter().map(|&p| FieldDemand { source: p, sink: *sink }).collect()
        }
        _ => cfg
            .sources
            .iter()
            .zip(sinks)
            .map(|(&source, &sink)| FieldDemand { source, sink })
            .collect(),
    }
}

fn rounds_table(rounds: &[RoundRecord]) -> String {
    let mut s = String::from("round\tcells\tfinest_h\tgroups\tenergy\tpairing\tfeasibility\titerations\tstatus\n");
    for r in rounds {
        let _ = writeln!(
            s,
            "{}\t{}\t{:?}\t{}\t{:.12e}\t{:.12e}\t{:.3e}\t{}\t{:?}",
            r.round, r.n_cells, r.finest_h, r.n_groups, r.energy, r.pairing, r.feasibility, r.iterations, r.status
        );
    }
    s
}

fn permutations_table(perms: &[PermutationEnergy], best: &Assignment) -> String {
    let mut s = String::from("assignment\tenergy\titerations\tstatus\tbest\n");
    for p in perms {
        let a: Vec<String> = p.assignment.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(
            s,
            "{}\t{:.12e}\t{}\t{:?}\t{}",
            a.join(","),
            p.energy,
            p.iterations,
            p.status,
            u8::from(&p.assignment == best)
        );
    }
    s
}

/// Builds the graph a `graph_stp` config describes.
pub fn build_graph(cfg: &TerminalConfig) -> Result<EmbeddedGraph> {
    let scatter = match &cfg.graph.scatter {
        Scatter::File(f) => return parse_edge_list(&std::fs::read_to_string(f)?),
        Scatter::Grid => grid_scatter((cfg.graph.k as f64).sqrt().round() as usize),
        Scatter::Random => random_scatter(cfg.graph.k, cfg.seed),
    };
    let (points, terminals) = augment(&cfg.terminals, &scatter);
    knn_graph(&points, &terminals, cfg.graph.m)
}

/// The graph solver keeps its own tight tolerances; the config supplies the
/// step parameters and iteration budget.
fn graph_options(cfg: &TerminalConfig, opts: &SolverOptions) -> GraphSolveOptions {
    let mut o = GraphSolveOptions::default();
    o.solver.progress = opts.progress.clone();
    o.solver.gamma = cfg.solver.gamma;
    o.solver.step_ratio = cfg.solver.step_ratio;
    o.solver.stop.max_iters = cfg.solver.stop.max_iters;
    o
}

/// Runs `cfg`, writing artifacts to `out_dir` when given. `echo` is the
/// config text as read.
pub fn run(cfg: &TerminalConfig, echo: &str, out_dir: Option<&Path>) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
    }
    let mut out = Out { dir: out_dir, files: Vec::new() };
    out.write("config.toml", echo)?;
    out.write("resolved.toml", &cfg.to_toml())?;

    let log: Option<Arc<Mutex<BufWriter<File>>>> = match out_dir {
        Some(d) => {
            let mut f = BufWriter::new(File::create(d.join("progress.log"))?);
            writeln!(f, "{}", CheckRecord::LOG_HEADER)?;
            out.files.push(d.join("progress.log"));
            Some(Arc::new(Mutex::new(f)))
        }
        None => None,
    };
    let mut opts: SolverOptions = cfg.solver.options();
    if let Some(log) = &log {
        let log = Arc::clone(log);
        opts.progress = Some(Arc::new(move |r: &CheckRecord| {
            if let Ok(mut f) = log.lock() {
                let _ = writeln!(f, "{}", r.log_line());
            }
        }));
    }

    let mut result = match cfg.mode {
        Mode::GraphStp => run_graph(cfg, &opts, &mut out)?,
        _ => run_flat(cfg, &opts, &mut out)?,
    };
    if let Some(log) = log {
        if let Ok(mut f) = log.lock() {
            f.flush()?;
        }
    }
    result.wall_time = start.elapsed().as_secs_f64();
    result.config_echo = echo.to_string();
    let summary = format!(
        "energy {:.12e}\nstatus {:?}\nfeasibility {:.3e}\nwall_time {:.3}\n",
        result.energy, result.status, result.feasibility, result.wall_time
    );
    out.write("summary.txt", &summary)?;
    result.artifacts = out.files;
    Ok(result)
}

fn run_flat(cfg: &TerminalConfig, opts: &SolverOptions, out: &mut Out<'_>) -> Result<RunResult> {
    let alpha = Alpha::new(cfg.alpha)?;
    let (permutations, assignment, sinks) = if cfg.mode == Mode::FreePairing {
        let grid = QuadGrid::build_uniform(cfg.refine.initial_size)?;
        let pr = who_goes_where(&grid, &cfg.sources, &cfg.sinks, alpha, cfg.method, opts, cfg.permutation_cap)?;
        let best = pr.best_assignment().clone();
        out.write("permutations.tsv", &permutations_table(&pr.energies, &best))?;
        let sinks: Vec<[f64; 2]> = best.iter().map(|&t| cfg.sinks[t]).collect();
        (pr.energies, Some(best), sinks)
    } else {
        (Vec::new(), None, cfg.sinks.clone())
    };
    let demands = demands_of(cfg, &sinks);
    let markers: Vec<[f64; 2]> = match cfg.mode {
        Mode::SingleSink => cfg.terminals.clone(),
        _ => cfg.sources.iter().chain(&cfg.sinks).copied().collect(),
    };
    let mut write_err = None;
    let res = refine_loop(&demands, alpha, &cfg.refine, cfg.method, opts, None, |v| {
        if out.dir.is_none() || write_err.is_some() {
            return;
        }
        let r = GridDump::new(v.grid, v.fields, v.density, &markers).and_then(|dump| {
            out.write(&format!("round{}.dump", v.round), &dump.to_text())?;
            out.write(&format!("round{}.svg", v.round), &render_dump(&dump, &RenderOptions::default()))
        });
        if let Err(e) = r {
            write_err = Some(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    out.write("energies.tsv", &rounds_table(&res.rounds))?;
    let last = res.rounds.last().expect("at least one round");
    let status = if res.rounds.iter().all(|r| r.status == SolveStatus::Converged)
        && permutations.iter().all(|p| p.status == SolveStatus::Converged)
    {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(RunResult {
        energy: last.energy,
        status,
        feasibility: last.feasibility,
        rounds: res.rounds.clone(),
        permutations,
        assignment,
        field: Some(FieldOutcome {
            fields: res.fields().clone(),
            grid: res.grid,
            density: res.density,
            demands,
        }),
        graph: None,
        artifacts: Vec::new(),
        config_echo: String::new(),
        wall_time: 0.0,
    })
}

fn run_graph(cfg: &TerminalConfig, opts: &SolverOptions, out: &mut Out<'_>) -> Result<RunResult> {
    let g = build_graph(cfg)?;
    let sol = solve_graph(&g, &graph_options(cfg, opts))?;
    let exact = if g.terminals.len() <= DP_TERMINAL_CAP {
        Some(exact_steiner_dp(&g)?.length)
    } else {
        None
    };
    out.write("graph.txt", &write_edge_list(&g))?;
    out.write("flows.txt", &write_flow_solution(&g, &sol))?;
    out.write("graph.svg", &render_graph(&g, Some(&sol.flows)))?;
    out.write("problem.lp", &export_lp(&g))?;
    let mut table = String::from("vertices\tedges\tenergy\tlower_bound\tsupport_length\texact\titerations\tstatus\n");
    let _ = writeln!(
        table,
        "{}\t{}\t{:.12e}\t{:.12e}\t{:.12e}\t{}\t{}\t{:?}",
        g.n_vertices(),
        g.n_edges(),
        sol.energy,
        sol.lower_bound,
        sol.support_length(&g),
        exact.map_or("-".to_string(), |x| format!("{x:.12e}")),
        sol.iterations,
        sol.status
    );
    out.write("energies.tsv", &table)?;
    Ok(RunResult {
        energy: sol.energy,
        status: sol.status,
        feasibility: sol.feasibility,
        rounds: Vec::new(),
        permutations: Vec::new(),
        assignment: None,
        field: None,
        graph: Some(GraphOutcome { graph: g, solution: sol, exact }),
        artifacts: Vec::new(),
        config_echo: String::new(),
        wall_time: 0.0,
    })
}
