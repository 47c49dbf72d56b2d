use thiserror::Error;

/// Which of the six tube evaluators produced a bad value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Component {
    F,
    DF,
    DDF,
    L,
    DL,
    DDL,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Component::F => "f",
            Component::DF => "df",
            Component::DDF => "ddf",
            Component::L => "L",
            Component::DL => "dL",
            Component::DDL => "ddL",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation error at t={t}: component {component} is not finite")]
    Evaluation { t: f64, component: Component },

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },

    #[error("inner tube is not contained in outer tube at t={t}")]
    Containment { t: f64 },

    #[error("parameters outside the covered regions: {0}")]
    Region(String),

    #[error("step rejection limit reached at t={t}, y={y}")]
    Step { t: f64, y: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Catalog(_) | Error::Config(_) | Error::Expr(_) | Error::Input(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
