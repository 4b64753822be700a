use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("CFL violation: dt/dx * |lambda_{index}| = {courant} exceeds {limit}")]
    Cfl {
        index: usize,
        courant: f64,
        limit: f64,
    },

    /// No sign change was found for an equilibrium or inverse map, i.e. the
    /// reaction violates the existence assumption `v f(v, w) >= 0`.
    #[error("no bracket found for {what} at {at} after {doublings} doublings")]
    BracketNotFound {
        what: &'static str,
        at: f64,
        doublings: usize,
    },

    #[error("root solve for {what} did not converge: bracket [{lo}, {hi}]")]
    RootNotConverged {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("cell solve did not converge at cell {cell:?} (final residual {final_residual:e}, {} recorded iterations)", .history.len())]
    CellNotConverged {
        cell: Option<usize>,
        final_residual: f64,
        history: Vec<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("rejected input: {0}")]
    Rejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config serialize error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidState(format!(
            "{what}: component {pos} is not finite ({})",
            values[pos]
        )));
    }
    Ok(())
}
