//! Frame server: one reader and one processing thread per connection, with
//! a single-slot mailbox between them so that only the newest unprocessed
//! frame is kept.

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use super::codec::{encode_message, Bye, ByeCode, Hello, Message, Stats};
use super::{is_timeout, MessageReader, NetError};
use crate::hooks::monotonic_us;
use crate::interventions::Session;
use crate::types::{Frame, LatencyRecord};

/// Builds the session for a client from its HELLO; an error refuses it.
pub type SessionFactory = Arc<dyn Fn(&Hello) -> Result<Session, String> + Send + Sync>;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Unsolicited STATS are sent after this many processed frames.
    pub stats_every: u64,
    /// How often blocked reads and accepts check for shutdown.
    pub poll_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            stats_every: 100,
            poll_interval: Duration::from_millis(50),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConnectionSummary {
    pub received: u64,
    pub processed: u64,
    pub dropped: u64,
}

/// Accepts connections until `shutdown` is set, then waits for every open
/// session to say BYE.
pub fn serve(
    listener: TcpListener,
    factory: SessionFactory,
    cfg: ServerConfig,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    let mut workers: Vec<thread::JoinHandle<()>> = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                let (factory, cfg, shutdown) = (factory.clone(), cfg.clone(), shutdown.clone());
                workers.push(thread::spawn(move || {
                    let _ = handle_connection(stream, &factory, &cfg, &shutdown);
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                thread::sleep(cfg.poll_interval.min(Duration::from_millis(10)));
            }
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
        workers.retain(|w| !w.is_finished());
    }
    // Connections still queued in the backlog get a shutdown BYE too.
    while let Ok((stream, _)) = listener.accept() {
        stream.set_nonblocking(false)?;
        let (factory, cfg, shutdown) = (factory.clone(), cfg.clone(), shutdown.clone());
        workers.push(thread::spawn(move || {
            let _ = handle_connection(stream, &factory, &cfg, &shutdown);
        }));
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

#[derive(Default)]
struct Mailbox {
    latest: Option<(Frame, u64)>,
    stats_requested: bool,
    /// Set once the reader stops; the inner value is the BYE to send after
    /// draining, if the peer is still there.
    closing: Option<Option<Bye>>,
    received: u64,
    dropped: u64,
}

type Shared = Arc<(Mutex<Mailbox>, Condvar)>;

fn send(writer: &Mutex<TcpStream>, msg: &Message) -> Result<(), NetError> {
    let bytes = encode_message(msg);
    writer
        .lock()
        .expect("writer lock poisoned")
        .write_all(&bytes)?;
    Ok(())
}

fn bye(code: ByeCode, reason: impl Into<String>) -> Message {
    Message::Bye(Bye {
        code,
        reason: reason.into(),
    })
}

/// Runs one client session to completion.
pub fn handle_connection(
    stream: TcpStream,
    factory: &SessionFactory,
    cfg: &ServerConfig,
    shutdown: &AtomicBool,
) -> Result<ConnectionSummary, NetError> {
    stream.set_read_timeout(Some(cfg.poll_interval))?;
    stream.set_nodelay(true)?;
    let writer = Arc::new(Mutex::new(stream.try_clone()?));
    let mut reader = MessageReader::new(stream);

    let hello = loop {
        match reader.next() {
            Ok(Message::Hello(h)) => break h,
            Ok(other) => {
                let reason = format!("expected HELLO, got {:?}", other.msg_type());
                let _ = send(&writer, &bye(ByeCode::ProtocolError, reason.clone()));
                return Err(NetError::Protocol(reason));
            }
            Err(e) if is_timeout(&e) => {
                if shutdown.load(Ordering::SeqCst) {
                    let _ = send(&writer, &bye(ByeCode::Shutdown, "server shutting down"));
                    return Ok(ConnectionSummary::default());
                }
            }
            Err(NetError::Decode(e)) => {
                let _ = send(&writer, &bye(ByeCode::ProtocolError, e.to_string()));
                return Err(e.into());
            }
            Err(e) => return Err(e),
        }
    };
    if hello.compression != 0 {
        let reason = format!("compression {} is not supported", hello.compression);
        let _ = send(&writer, &bye(ByeCode::Refused, reason.clone()));
        return Err(NetError::Protocol(reason));
    }
    let session = match factory(&hello) {
        Ok(s) => s,
        Err(reason) => {
            let _ = send(&writer, &bye(ByeCode::Refused, reason.clone()));
            return Err(NetError::Protocol(reason));
        }
    };

    let shared: Shared = Arc::new((Mutex::new(Mailbox::default()), Condvar::new()));
    let processor = {
        let (shared, writer, every) = (shared.clone(), writer.clone(), cfg.stats_every);
        thread::spawn(move || process(session, shared, writer, every))
    };

    let close = |b: Option<Bye>| {
        let (lock, cv) = &*shared;
        lock.lock().expect("mailbox poisoned").closing = Some(b);
        cv.notify_all();
    };
    let outcome = loop {
        match reader.next() {
            Ok(Message::Frame(f)) => {
                if f.width() > hello.max_width || f.height() > hello.max_height {
                    let reason = format!(
                        "frame {}x{} exceeds the announced {}x{}",
                        f.width(),
                        f.height(),
                        hello.max_width,
                        hello.max_height
                    );
                    close(Some(Bye {
                        code: ByeCode::ProtocolError,
                        reason: reason.clone(),
                    }));
                    break Err(NetError::Protocol(reason));
                }
                let (lock, cv) = &*shared;
                let mut mb = lock.lock().expect("mailbox poisoned");
                mb.received += 1;
                if mb.latest.is_some() {
                    mb.dropped += 1;
                }
                mb.latest = Some((f, monotonic_us()));
                cv.notify_all();
            }
            Ok(Message::Stats(None)) => {
                let (lock, cv) = &*shared;
                lock.lock().expect("mailbox poisoned").stats_requested = true;
                cv.notify_all();
            }
            Ok(Message::Bye(_)) => {
                close(Some(Bye::normal()));
                break Ok(());
            }
            Ok(other) => {
                let reason = format!("unexpected {:?} message", other.msg_type());
                close(Some(Bye {
                    code: ByeCode::ProtocolError,
                    reason: reason.clone(),
                }));
                break Err(NetError::Protocol(reason));
            }
            Err(e) if is_timeout(&e) => {
                if shutdown.load(Ordering::SeqCst) {
                    close(Some(Bye {
                        code: ByeCode::Shutdown,
                        reason: "server shutting down".into(),
                    }));
                    break Ok(());
                }
            }
            Err(NetError::Closed) => {
                close(None);
                break Ok(());
            }
            Err(NetError::Decode(e)) => {
                close(Some(Bye {
                    code: ByeCode::ProtocolError,
                    reason: e.to_string(),
                }));
                break Err(e.into());
            }
            Err(e) => {
                close(None);
                break Err(e);
            }
        }
    };
    let processed = processor.join().expect("processor thread panicked");
    let mb = shared.0.lock().expect("mailbox poisoned");
    outcome.map(|()| ConnectionSummary {
        received: mb.received,
        processed,
        dropped: mb.dropped,
    })
}

/// Processing loop; returns the number of frames answered.
fn process(
    mut session: Session,
    shared: Shared,
    writer: Arc<Mutex<TcpStream>>,
    stats_every: u64,
) -> u64 {
    let mut processed = 0u64;
    let mut records: Vec<LatencyRecord> = Vec::new();
    let stats = |mb: &Mailbox, processed: u64, records: &mut Vec<LatencyRecord>| {
        Message::Stats(Some(Stats {
            frames_received: mb.received,
            frames_processed: processed,
            frames_dropped: mb.dropped,
            records: std::mem::take(records),
        }))
    };
    loop {
        let (lock, cv) = &*shared;
        let mut mb = lock.lock().expect("mailbox poisoned");
        while mb.latest.is_none() && !mb.stats_requested && mb.closing.is_none() {
            mb = cv.wait(mb).expect("mailbox poisoned");
        }
        let job = mb.latest.take();
        let stats_requested = std::mem::take(&mut mb.stats_requested);
        let closing = if job.is_none() {
            mb.closing.clone()
        } else {
            None
        };
        drop(mb);

        let mut sent = Ok(());
        if let Some((frame, t_receive_us)) = job {
            let out = session.step(&frame);
            let mut rec = out.record;
            rec.t_receive_us = t_receive_us;
            sent = send(&writer, &Message::Overlay(out.plan));
            rec.t_sent_us = monotonic_us();
            records.push(rec);
            processed += 1;
        }
        let periodic =
            stats_every > 0 && processed > 0 && processed % stats_every == 0 && !records.is_empty();
        if sent.is_ok() && (stats_requested || periodic) {
            let msg = stats(
                &lock.lock().expect("mailbox poisoned"),
                processed,
                &mut records,
            );
            sent = send(&writer, &msg);
        }
        if sent.is_err() {
            return processed;
        }
        if let Some(final_bye) = closing {
            if let Some(b) = final_bye {
                let _ = send(&writer, &Message::Bye(b));
            }
            return processed;
        }
    }
}
