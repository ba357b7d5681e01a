use thiserror::Error;

/// Errors raised by the protocol library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A parameter set violates one of its constraints.
    #[error("invalid parameters: {0}")]
    Params(String),

    /// Two operands were built under different parameters.
    #[error("parameter mismatch: {0}")]
    Mismatch(String),

    /// A value lies outside its centered residue range.
    #[error("value {value} is outside the centered range of Z_{modulus}")]
    OutOfRange { value: i64, modulus: u64 },

    /// A protocol state machine received a message it cannot accept in its current phase.
    #[error("protocol state violation: {0}")]
    State(String),

    /// The protocol could not complete (missing share, dropped message, incomplete run).
    #[error("protocol aborted: {0}")]
    Abort(String),

    /// The shared inner product is longer than the noise budget allows in a single run.
    #[error("inner product length {len} exceeds the supported maximum {max}")]
    InnerProductTooLong { len: usize, max: usize },

    /// A triple was offered a second time to a consumer or a vault.
    #[error("triple {0} was already used")]
    TripleReused(u64),

    /// The offline phase has no fresh triples left.
    #[error("offline phase depleted: {needed} triples needed, {available} available")]
    Depleted { needed: usize, available: usize },

    /// No message was waiting on a channel.
    #[error("timeout waiting for message from {from} to {to}")]
    Timeout { from: String, to: String },

    /// A byte string did not decode.
    #[error("decode error: {0}")]
    Decode(String),

    /// Filesystem failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
