use thiserror::Error;

/// Errors raised by matching construction, index evaluation, instance
/// generation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("player {0} appears more than once")]
    DuplicatePlayer(usize),
    #[error("player {player} is out of range for {players} players")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("pair ({0}, {0}) matches a player with itself")]
    SelfPair(usize),
    #[error("expected {expected} pairs, got {got}")]
    WrongPairCount { expected: usize, got: usize },
    #[error("odd number of players: {0}")]
    OddPlayerCount(usize),
    #[error("invalid swap: {0}")]
    InvalidSwap(String),
    #[error("inter-pair strict order violated between couples {upper} and {lower}")]
    AssumptionViolated { upper: usize, lower: usize },
    #[error("{name} = {value} is outside its domain")]
    OutOfDomain { name: &'static str, value: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("L = {l} is too large for exhaustive enumeration (max {max})")]
    TooLarge { l: usize, max: usize },
    #[error("feedback does not match the played matching")]
    FeedbackMismatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
