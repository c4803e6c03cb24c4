use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("catalog line {line}: {message}")]
    CatalogParse { line: u64, message: String },

    #[error("empty catalog: {0}")]
    EmptyCatalog(String),

    #[error("flow network: {0}")]
    Network(String),

    #[error("negative-cost residual cycle through node {node}")]
    NegativeCycle { node: usize },

    #[error("antipodal point in gradient evaluation")]
    Antipodal,

    #[error(
        "no cover with at most {max_discs} discs reaches the coverage target ({best_covered} of {target} galaxies)"
    )]
    Infeasible {
        max_discs: usize,
        target: usize,
        best_covered: usize,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
