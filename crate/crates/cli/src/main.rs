//! Command-line front end: one job per invocation, or a batch of
//! independent jobs run concurrently with separate output directories.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use steinrelax::config::{parse_config_with, Mode, Overrides, TerminalConfig};
use steinrelax::graph::{parse_edge_list, parse_flow_solution};
use steinrelax::grid::read_dump;
use steinrelax::render::{render_dump, render_graph, RenderOptions};
use steinrelax::run::{exit_code, run, RunResult};
use steinrelax::Error;

#[derive(Parser)]
#[command(name = "steinrelax", version, about = "Convex relaxation solver for Steiner trees and branched transport")]
struct Cli {
    /// Worker threads for the permutation search and batch mode.
    #[arg(long, env = "STEINRELAX_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a planar instance (single sink, prescribed or free pairing).
    Solve(JobArgs),
    /// Solve the relaxation on a graph.
    Graph {
        #[command(flatten)]
        job: JobArgs,
        /// Edge-list file; replaces the config's scatter.
        #[arg(long, conflicts_with_all = ["config", "preset"])]
        edges: Option<PathBuf>,
    },
    /// Run several configs concurrently, each in `<out-dir>/<config stem>`.
    Batch {
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Render a grid dump or a graph edge list as SVG.
    Render {
        input: PathBuf,
        /// Flow solution to highlight (graph input).
        #[arg(long)]
        flows: Option<PathBuf>,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Outline every cell (default: only mixed-level grids).
        #[arg(long)]
        outlines: Option<bool>,
    },
}

#[derive(Args)]
struct JobArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset instead of a config file, e.g. `pentagon(0.5)`.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args, Clone)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Refinement rounds after the initial solve.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Iteration budget per solve.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            alpha: self.alpha,
            rounds: self.rounds,
            gamma: self.gamma,
            max_iters: self.max_iters,
        }
    }
}

/// Config text as the run will echo it.
fn job_text(job: &JobArgs) -> anyhow::Result<String> {
    match (&job.config, &job.preset) {
        (Some(p), _) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        (None, Some(name)) => Ok(format!("preset = {}\n", toml_string(name))),
        (None, None) => bail!("give --config or --preset"),
    }
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn report(r: &RunResult, out: &Path) {
    println!("energy {:.9}", r.energy);
    if let Some(a) = &r.assignment {
        println!("assignment {a:?}");
    }
    if let Some(g) = &r.graph {
        println!("lower_bound {:.9}", g.solution.lower_bound);
        if let Some(x) = g.exact {
            println!("exact {x:.9}");
        }
    }
    println!("status {:?}", r.status);
    println!("wall_time {:.2}s", r.wall_time);
    println!("artifacts {}", out.display());
}

fn solve_one(text: &str, overrides: &Overrides, out: &Path, want: Option<Mode>) -> Result<RunResult, Error> {
    let cfg: TerminalConfig = parse_config_with(text, overrides)?;
    if let Some(m) = want {
        if cfg.mode != m {
            return Err(Error::Config(vec![format!(
                "this subcommand needs mode = \"{}\", the config has \"{}\"",
                m.name(),
                cfg.mode.name()
            )]));
        }
    }
    run(&cfg, text, Some(out))
}

fn finish(res: Result<RunResult, Error>, out: &Path) -> ExitCode {
    match res {
        Ok(r) => {
            report(&r, out);
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match main_inner(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(3, exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn main_inner(cmd: Cmd) -> anyhow::Result<ExitCode> {
    Ok(match cmd {
        Cmd::Solve(job) => {
            let text = job_text(&job)?;
            finish(solve_one(&text, &job.overrides.overrides(), &job.out_dir, None), &job.out_dir)
        }
        Cmd::Graph { job, edges } => {
            let text = match edges {
                Some(p) => format!(
                    "mode = \"graph_stp\"\n[graph]\nscatter = \"file\"\nfile = {}\n",
                    toml_string(&p.to_string_lossy())
                ),
                None => job_text(&job)?,
            };
            finish(
                solve_one(&text, &job.overrides.overrides(), &job.out_dir, Some(Mode::GraphStp)),
                &job.out_dir,
            )
        }
        Cmd::Batch { configs, out_dir, overrides } => {
            if configs.is_empty() {
                bail!("batch needs at least one config");
            }
            let o = overrides.overrides();
            let mut dirs: Vec<PathBuf> = configs
                .iter()
                .map(|c| out_dir.join(c.file_stem().unwrap_or_default()))
                .collect();
            dirs.sort();
            if dirs.windows(2).any(|w| w[0] == w[1]) {
                bail!("batch configs must have distinct file stems");
            }
            let codes: Vec<u8> = configs
                .par_iter()
                .map(|c| {
                    let dir = out_dir.join(c.file_stem().unwrap_or_default());
                    let res = std::fs::read_to_string(c)
                        .map_err(Error::from)
                        .and_then(|text| solve_one(&text, &o, &dir, None));
                    match res {
                        Ok(r) => {
                            println!("{}\tenergy {:.9}\t{:?}", c.display(), r.energy, r.status);
                            r.exit_code() as u8
                        }
                        Err(e) => {
                            eprintln!("{}\terror: {e}", c.display());
                            exit_code(&e) as u8
                        }
                    }
                })
                .collect();
            ExitCode::from(codes.into_iter().max().unwrap_or(0))
        }
        Cmd::Render { input, flows, output, outlines } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let svg = if text.starts_with("# steinrelax-graph") {
                let g = parse_edge_list(&text)?;
                let f = match flows {
                    Some(p) => Some(parse_flow_solution(&std::fs::read_to_string(p)?, &g)?),
                    None => None,
                };
                render_graph(&g, f.as_deref())
            } else {
                let dump = read_dump(&text)?;
                render_dump(
                    &dump,
                    &RenderOptions {
                        outlines,
                        ..RenderOptions::default()
                    },
                )
            };
            match output {
                Some(p) => std::fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{svg}"),
            }
            ExitCode::SUCCESS
        }
    })
}
