use std::io;

/// Errors produced by the registration library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A text input (OBJ, landmark, part or config file) could not be parsed.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Mesh connectivity or shape is inconsistent.
    #[error("invalid mesh structure: {0}")]
    Structure(String),

    /// A triangle has (numerically) zero area.
    #[error("degenerate triangle: face {face} has zero area")]
    DegenerateFace { face: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Point configuration does not determine a transform (collinear or coincident points).
    #[error("rank-deficient point configuration: {0}")]
    RankDeficient(String),

    /// A linear solve failed or missed its residual target.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The GP observation system is numerically singular.
    #[error("ill-conditioned kernel system: {0}; try a larger noise variance")]
    Conditioning(String),

    /// Mutual nearest neighbours produced no constraint for the projection.
    #[error("projection failed: {0}")]
    Projection(String),

    /// ICPD found no mutual correspondence between template and scan.
    #[error("alignment failure: {0}")]
    Alignment(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 argument error, 3 data error, 4 solver error.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Argument(_) => 2,
            Error::Parse { .. }
            | Error::Structure(_)
            | Error::DegenerateFace { .. }
            | Error::RankDeficient(_)
            | Error::Io(_) => 3,
            Error::Solver(_)
            | Error::Conditioning(_)
            | Error::Projection(_)
            | Error::Alignment(_) => 4,
            Error::Stage { .. } => unreachable!("root() strips stage wrappers"),
        }
    }
}
