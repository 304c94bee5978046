use std::io::Write;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::codec::{encode_message, Bye, Hello, Message};
use super::{MessageReader, NetError};
use crate::types::Frame;

/// Minimal blocking client, mainly for replay harnesses.
pub struct Client {
    writer: TcpStream,
    reader: MessageReader<TcpStream>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs, hello: &Hello) -> Result<Self, NetError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut c = Client {
            writer: stream.try_clone()?,
            reader: MessageReader::new(stream),
        };
        c.send(&Message::Hello(hello.clone()))?;
        Ok(c)
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), NetError> {
        self.writer.write_all(&encode_message(msg))?;
        Ok(())
    }

    pub fn send_frame(&mut self, frame: &Frame) -> Result<(), NetError> {
        self.send(&Message::Frame(frame.clone()))
    }

    pub fn request_stats(&mut self) -> Result<(), NetError> {
        self.send(&Message::Stats(None))
    }

    pub fn bye(&mut self) -> Result<(), NetError> {
        self.send(&Message::Bye(Bye::normal()))
    }

    pub fn recv(&mut self) -> Result<Message, NetError> {
        self.reader.next()
    }

    /// Bounds how long [`Client::recv`] blocks; `None` waits forever.
    pub fn set_read_timeout(&self, timeout: Option<Duration>) -> Result<(), NetError> {
        Ok(self.writer.set_read_timeout(timeout)?)
    }

    /// A second handle for sending while another thread receives.
    pub fn sender(&self) -> Result<TcpStream, NetError> {
        Ok(self.writer.try_clone()?)
    }
}
