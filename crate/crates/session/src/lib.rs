//! Live steering of the LFPC walker.
//!
//! A [`Session`] owns the dynamics and advances them one tick at a time;
//! [`server`] exposes sessions over WebSocket, one per connection, speaking
//! the newline-delimited JSON messages in [`protocol`].

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{parse_command, EventTag, ServerMessage, SessionCommand, SessionUpdate};
pub use session::{Session, SessionConfig};
