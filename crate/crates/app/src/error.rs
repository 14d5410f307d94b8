use std::path::PathBuf;

/// Errors of the command line tool and the service.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] girthkit::Error),

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("unknown patient {0:?}")]
    UnknownPatient(String),

    #[error("unknown session {session:?} for patient {patient:?}")]
    UnknownSession { patient: String, session: String },

    #[error("{0} already exists")]
    Conflict(String),

    #[error("invalid request: {0}")]
    BadRequest(String),

    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("cannot start service: {0}")]
    Startup(String),
}

impl AppError {
    /// Process exit code: 2 for usage and configuration mistakes, 1 for
    /// everything the domain rejects.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) | AppError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Short machine-readable error kind used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        use girthkit::Error as E;
        match self {
            AppError::Core(e) => match e {
                E::Parse { .. } => "ParseError",
                E::EmptyMesh => "EmptyMesh",
                E::Io { .. } => "IoError",
                E::InvalidParam(_) => "InvalidParam",
                E::NoSection { .. } => "NoSection",
                E::NotOrganized => "NotOrganized",
                E::InsufficientPoints(_) => "InsufficientPoints",
                E::InvalidCapture(_) => "InvalidCapture",
                E::NonConvergent { .. } => "NonConvergent",
                E::DegenerateConfiguration(_) => "DegenerateConfiguration",
                E::NoConsensus { .. } => "NoConsensus",
                E::InsufficientCorrespondence { .. } => "InsufficientCorrespondence",
                E::UnknownCamera(_) => "UnknownCamera",
                E::UnknownPreset(_) => "UnknownPreset",
            },
            AppError::UnknownModel(_) => "UnknownModel",
            AppError::UnknownPatient(_) => "UnknownPatient",
            AppError::UnknownSession { .. } => "UnknownSession",
            AppError::Conflict(_) => "Conflict",
            AppError::BadRequest(_) => "BadRequest",
            AppError::Config { .. } => "ConfigError",
            AppError::Usage(_) => "UsageError",
            AppError::Startup(_) => "StartupError",
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
