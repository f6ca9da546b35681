use thiserror::Error;

use crate::instances::Violation;
use crate::lp::FractionalSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("lp is infeasible")]
    Infeasible,

    #[error("lp is unbounded")]
    Unbounded,

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("cutting-plane loop hit the cap of {rounds} rounds")]
    RoundCap {
        rounds: usize,
        last: Box<FractionalSolution>,
    },

    #[error("brute force supports at most {cap} vertices, got {n}")]
    TooLarge { n: usize, cap: usize },

    #[error("edge {edge} never accumulates its requirement under the schedule")]
    ScheduleIncomplete { edge: usize },

    #[error("malformed schedule: {0}")]
    InvalidSchedule(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
