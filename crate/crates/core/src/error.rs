use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("transition matrix invalid: {0}")]
    InvalidTransitions(String),
    #[error("chain is reducible; strongly connected component {component:?} does not reach every state")]
    Reducible { component: Vec<usize> },
    #[error("chain is periodic with period {period}")]
    Periodic { period: usize },
    #[error("stationary vector rejected: {0}")]
    InvalidStationary(String),
    #[error("word {word:?} is inadmissible at position {position}")]
    Inadmissible { word: Vec<u8>, position: usize },
    #[error("symbol {symbol} outside alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("exact computation needs {needed} automaton states, budget is {budget}; use Monte Carlo")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("rejection sampling acceptance {acceptance:e} below 1e-6; hole too small")]
    RejectionTooRare { acceptance: f64 },
    #[error("degenerate extremal index (alpha_1 = {0:e})")]
    DegenerateExtremalIndex(f64),
    #[error("tube around segment overlaps itself under wrap (separation {separation}, width {width})")]
    TubeOverlap { separation: f64, width: f64 },
    #[error("hole contains no cylinder of depth {depth}; increase depth")]
    EmptyInnerApproximation { depth: usize },
    #[error("exceedance identity mismatch at sample {sample}")]
    ExceedanceMismatch { sample: usize },
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
