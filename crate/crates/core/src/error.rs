use thiserror::Error;

use crate::netmodel::{BusId, LineId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("duplicate line id {0}")]
    DuplicateLine(LineId),
    #[error("line {0} is a self-loop")]
    SelfLoop(LineId),
    #[error("line {line} has non-positive susceptance {value}")]
    NonPositiveSusceptance { line: LineId, value: f64 },
    #[error("unknown bus {0}")]
    UnknownBus(usize),
    #[error("unknown line {0}")]
    UnknownLine(LineId),
    #[error("line {line} is not incident to bus {bus}")]
    LineNotIncident { line: LineId, bus: BusId },

    #[error("network is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("injections are unbalanced (sum = {sum:e})")]
    UnbalancedInjection { sum: f64 },
    #[error("source and sink are the same bus {0}")]
    SameBus(BusId),
    #[error("tripping bridge line {0} islands the network")]
    BridgeOutage(LineId),
    #[error("monitored and tripped line are both {0}")]
    SameLine(LineId),
    #[error("bridge tests disagree for line {line}: numeric={numeric}, structural={structural}")]
    BridgeDiagnostic {
        line: LineId,
        numeric: bool,
        structural: bool,
    },
    #[error("outage set islands the network")]
    Islanding,
    #[error("monitored line {0} is in the tripped set")]
    MonitoredTripped(LineId),
    #[error("reference line {0} is not in the tripped set")]
    ReferenceNotTripped(LineId),
    #[error("invalid two-bus decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("rational fit residual {residual:e} exceeds tolerance")]
    FitResidual { residual: f64 },

    #[error("invalid joint: {0}")]
    InvalidJoint(String),
    #[error("expected a {expected} interface")]
    WrongInterfaceKind { expected: &'static str },
    #[error("design condition violated: {0}")]
    DesignCondition(String),
    #[error("line {0} is not in the first sub-grid")]
    NotInFirstSubgrid(LineId),

    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("component containing bus {bus} has {count} slack buses")]
    SlackCount { bus: usize, count: usize },
    #[error("invalid AC case: {0}")]
    InvalidCase(String),
    #[error("tripped flow {flow:e} is below threshold {threshold:e}")]
    BelowThreshold { flow: f64, threshold: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing section `{0}`")]
    MissingSection(&'static str),
    #[error("branch {0} has zero reactance")]
    ZeroReactance(usize),
    #[error("branch {0} has negative reactance (use the absolute-value override to accept it)")]
    NegativeReactance(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("declared tie-lines {declared:?} differ from crossing branches {computed:?}")]
    TieLineMismatch {
        declared: Vec<usize>,
        computed: Vec<usize>,
    },
    #[error("empty input")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for input errors, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Disconnected { .. }
            | Error::UnbalancedInjection { .. }
            | Error::BridgeOutage(_)
            | Error::BridgeDiagnostic { .. }
            | Error::Islanding
            | Error::FitResidual { .. }
            | Error::NonConvergence { .. }
            | Error::SingularJacobian
            | Error::BelowThreshold { .. } => 2,
            _ => 1,
        }
    }
}
