//! Beaver triple generation from an additive-only RLWE encryption scheme,
//! with triple dispensing to compute servers and a SPDZ-style online phase.
//!
//! The crate is organised bottom-up:
//!
//! - [`ring`]: arithmetic in `Z_q[x]/(x^n + 1)` and the samplers.
//! - [`ahe`]: public-key encryption supporting ciphertext addition and plaintext scalars.
//! - [`triplegen`]: the two-party shared scalar product and triple generation.
//! - [`dispense`]: splitting triple shares across servers and the server vaults.
//! - [`spdz`]: the online phase (sharing, opening, Beaver multiplication).
//! - [`transport`]: framed messages over an in-memory bus with a replayable transcript.
//! - [`pipeline`], [`config`], [`bench`], [`cli`]: end-to-end runs and the command line.

pub mod ahe;
pub mod bench;
pub mod cli;
pub mod config;
pub mod dispense;
pub mod error;
pub mod pipeline;
pub mod ring;
pub mod seed;
pub mod spdz;
pub mod transport;
pub mod triplegen;

pub use ahe::{AheParams, Ciphertext, PublicKey, SecretKey};
pub use error::{Error, Result};
pub use ring::{RingElement, RingParams};
pub use seed::MasterSeed;
