use std::io;

use thiserror::Error;

/// Everything that can go wrong while loading, placing, or evaluating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid {field} for module {module}: {reason}")]
    InvalidModule {
        module: String,
        field: &'static str,
        reason: String,
    },

    #[error("invalid grid.{field}: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("problem has no modules")]
    NoModules,

    #[error("unknown module id {0:?}")]
    UnknownModule(String),

    #[error("module {module} does not contain cell ({row}, {col})")]
    CellNotInModule { module: String, row: u32, col: u32 },

    #[error("cell ({row}, {col}) lies outside the {rows}x{cols} array")]
    CellOutOfBounds {
        row: u32,
        col: u32,
        rows: u32,
        cols: u32,
    },

    #[error("placement is infeasible: {overlap} overlapping cells between concurrent modules")]
    Infeasible { overlap: u64 },

    #[error("module {module} does not fit inside the core area at ({row}, {col})")]
    OutOfCore { module: String, row: u32, col: u32 },

    #[error("cannot construct a placement: bounds {rows}x{cols} too tight, need at least {needed_rows}x{needed_cols}")]
    BoundsTooTight {
        rows: u32,
        cols: u32,
        needed_rows: u32,
        needed_cols: u32,
    },

    #[error("no feasible placement found")]
    NoFeasiblePlacement,

    #[error("oracle size bound exceeded: {cells} cells > {limit}")]
    OracleTooLarge { cells: usize, limit: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
