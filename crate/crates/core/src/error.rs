use thiserror::Error;

/// Errors surfaced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("port index {index} out of range [1, {num_ports}]")]
    PortIndex { index: usize, num_ports: usize },

    #[error("port indices must be strictly increasing")]
    PortOrder,

    #[error("partial-port layout overflows the array: last observed port {last} exceeds N = {num_ports}")]
    PortOverflow { last: usize, num_ports: usize },

    #[error("subsampled DFT codebook needs pilot_length <= 2^pilot_bits (got {pilot_length} > {codebook_size})")]
    PilotTooLong {
        pilot_length: usize,
        codebook_size: usize,
    },

    #[error("distinct pilot assignment needs num_devices <= 2^pilot_bits (got {num_devices} > {codebook_size})")]
    TooManyDevices {
        num_devices: usize,
        codebook_size: usize,
    },

    #[error("pilot index {index} out of range [1, {codebook_size}]")]
    PilotIndex { index: usize, codebook_size: usize },

    #[error("channel would carry zero power: rice_factor = 0 together with num_scatterers = 0")]
    ZeroPowerChannel,

    #[error("dictionary grids do not match (got {got} grid points, expected {expected})")]
    GridMismatch { got: usize, expected: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("response matrix needs at least as many rows as paths (got {rows} rows for {paths} paths)")]
    TooFewPorts { rows: usize, paths: usize },

    #[error("gap objective diverges: response is rank deficient and gamma = 0")]
    RankDeficient,

    #[error("regularizer must be non-negative and finite (got {0})")]
    InvalidRegularizer(f64),

    #[error("gap candidate set is empty")]
    EmptyCandidateSet,

    #[error("optimal assignment supports at most {max} paths per device (got {got})")]
    TooManyPaths { got: usize, max: usize },

    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
