//! Blind in-window TCP attack discovery over a queuing side channel,
//! together with a packet-level simulator to run it against.

mod error;
pub mod attacker;
pub mod harness;
pub mod netsim;
pub mod seqspace;
pub mod stack;

pub use error::{Error, Result};
