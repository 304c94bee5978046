//! Wire protocol, frame server and latency budget.

mod budget;
mod client;
pub mod codec;
mod server;

use thiserror::Error;

pub use budget::{latency_budget, BudgetError, BudgetInput, BudgetReport};
pub use client::Client;
pub use codec::{
    decode_frame, decode_message, decode_overlay, encode_frame, encode_message, encode_overlay,
    Bye, ByeCode, DecodeError, Hello, Message, MsgType, Stats,
};
pub use server::{handle_connection, serve, ConnectionSummary, ServerConfig, SessionFactory};

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("connection closed")]
    Closed,
}

/// Incremental message reader over a byte stream that may time out.
pub(crate) struct MessageReader<R> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: std::io::Read> MessageReader<R> {
    pub fn new(inner: R) -> Self {
        MessageReader {
            inner,
            buf: Vec::new(),
        }
    }

    /// Next complete message. Read timeouts surface as `Io` errors with
    /// kind `WouldBlock` or `TimedOut`; partial input is kept for the next
    /// call. End of stream is `Closed`.
    pub fn next(&mut self) -> Result<Message, NetError> {
        loop {
            if let Some(n) = codec::message_len(&self.buf)? {
                let (msg, used) = codec::decode_message(&self.buf[..n])?;
                debug_assert_eq!(used, n);
                self.buf.drain(..n);
                return Ok(msg);
            }
            let mut chunk = [0u8; 64 * 1024];
            match self.inner.read(&mut chunk) {
                Ok(0) => return Err(NetError::Closed),
                Ok(k) => self.buf.extend_from_slice(&chunk[..k]),
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
}

pub(crate) fn is_timeout(e: &NetError) -> bool {
    matches!(e, NetError::Io(io) if matches!(io.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut))
}
