use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("subset enumeration over {n} columns exceeds the cap of {cap}")]
    TooManyColumns { n: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("terminal {point:?} lies on or outside the domain boundary")]
    TerminalOnBoundary { point: [f64; 2] },

    #[error("terminals {a:?} and {b:?} fall in the same cell")]
    TerminalCollision { a: [f64; 2], b: [f64; 2] },

    #[error("merge request covers cells that are not complete sibling quadruples")]
    NotSiblings,

    #[error("cell {cell} cannot carry field {field}: no active subset contains it")]
    InfeasibleLayout { cell: usize, field: usize },

    #[error("solver diverged at iteration {iter}: magnitude {magnitude:e}")]
    Diverged { iter: usize, magnitude: f64 },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("{what} cap exceeded: {got} > {cap}")]
    CapExceeded { what: &'static str, got: usize, cap: usize },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
