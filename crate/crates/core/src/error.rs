use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A size guard was exceeded (enumeration or simulation would be too large).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("system generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error(
        "{equations} equations exceed the capacity {capacity} of a level-{level} oracle on {ancillas} ancillae; \
         at least {required} ancillae are needed"
    )]
    Capacity {
        equations: usize,
        level: usize,
        ancillas: usize,
        capacity: u64,
        required: usize,
    },

    /// An operator was applied to a state that violates its precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no (J, K) within J <= {j_max}, K <= {k_max} reaches the target; best achievable success probability is {best:.6}")]
    Infeasible { j_max: u64, k_max: u64, best: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 2 for input problems,
    /// 3 for resource guards, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Json(_) | Error::Capacity { .. } => 2,
            Error::Resource(_) => 3,
            _ => 1,
        }
    }
}
