//! Byte layout of the wire protocol. All integers are little-endian.
//!
//! Every message is `"GTRM"`, a version byte, a type byte, a `u32` payload
//! length and the payload.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::types::{
    Frame, LatencyRecord, OpKind, OverlayOp, OverlayPlan, PixelFormat, Region, Rgba,
};

pub const MAGIC: [u8; 4] = *b"GTRM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Upper bound on a payload; larger length fields are rejected up front.
pub const MAX_PAYLOAD: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgType {
    Hello = 1,
    Frame = 2,
    Overlay = 3,
    Stats = 4,
    Bye = 5,
}

impl MsgType {
    fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => MsgType::Hello,
            2 => MsgType::Frame,
            3 => MsgType::Overlay,
            4 => MsgType::Stats,
            5 => MsgType::Bye,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("truncated: need {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("payload length {0} exceeds the limit")]
    TooLarge(usize),
    #[error("unknown op kind {kind} at offset {offset}")]
    UnknownOpKind { kind: u8, offset: usize },
    #[error("unknown pixel format {value} at offset {offset}")]
    UnknownPixelFormat { value: u8, offset: usize },
    #[error("expected a {expected:?} message, got {actual:?}")]
    WrongType { expected: MsgType, actual: MsgType },
    #[error("{extra} unexpected bytes after the payload at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("invalid field at offset {offset}: {reason}")]
    Invalid { offset: usize, reason: String },
}

/// Session parameters sent by the client first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub max_width: u32,
    pub max_height: u32,
    /// Reserved; only 0 (raw pixels) is accepted.
    pub compression: u8,
    /// Interventions to enable; empty means all configured ones.
    pub interventions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub frames_received: u64,
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub records: Vec<LatencyRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByeCode {
    Normal = 0,
    ProtocolError = 1,
    Refused = 2,
    Shutdown = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bye {
    pub code: ByeCode,
    pub reason: String,
}

impl Bye {
    pub fn normal() -> Self {
        Bye {
            code: ByeCode::Normal,
            reason: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello(Hello),
    Frame(Frame),
    Overlay(OverlayPlan),
    /// `None` is a request for statistics.
    Stats(Option<Stats>),
    Bye(Bye),
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::Hello(_) => MsgType::Hello,
            Message::Frame(_) => MsgType::Frame,
            Message::Overlay(_) => MsgType::Overlay,
            Message::Stats(_) => MsgType::Stats,
            Message::Bye(_) => MsgType::Bye,
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn region(&mut self, r: Region) {
        for v in [r.x, r.y, r.w, r.h] {
            self.u32(v);
        }
    }
    /// Strings longer than the prefix allows are truncated at a char
    /// boundary.
    fn str16(&mut self, s: &str) {
        let mut end = s.len().min(u16::MAX as usize);
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        self.u16(end as u16);
        self.bytes(&s.as_bytes()[..end]);
    }
    fn str32(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    /// Offset of `buf[0]` within the whole message, for error reports.
    base: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], base: usize) -> Self {
        Reader { buf, pos: 0, base }
    }
    fn offset(&self) -> usize {
        self.base + self.pos
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(DecodeError::Truncated {
                offset: self.offset(),
                needed: n,
                available,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("take returns N bytes"))
    }
    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, DecodeError> {
        self.array().map(u16::from_le_bytes)
    }
    fn i16(&mut self) -> Result<i16, DecodeError> {
        self.array().map(i16::from_le_bytes)
    }
    fn u32(&mut self) -> Result<u32, DecodeError> {
        self.array().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> Result<u64, DecodeError> {
        self.array().map(u64::from_le_bytes)
    }
    fn f32(&mut self) -> Result<f32, DecodeError> {
        self.array().map(f32::from_le_bytes)
    }
    fn rgba(&mut self) -> Result<Rgba, DecodeError> {
        self.array().map(Rgba)
    }
    fn region(&mut self) -> Result<Region, DecodeError> {
        Ok(Region {
            x: self.u32()?,
            y: self.u32()?,
            w: self.u32()?,
            h: self.u32()?,
        })
    }
    fn string(&mut self, len: usize) -> Result<String, DecodeError> {
        let at = self.offset();
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|_| DecodeError::Invalid {
            offset: at,
            reason: "string is not UTF-8".into(),
        })
    }
    fn str16(&mut self) -> Result<String, DecodeError> {
        let n = self.u16()? as usize;
        self.string(n)
    }
    fn str32(&mut self) -> Result<String, DecodeError> {
        let n = self.u32()? as usize;
        self.string(n)
    }
    fn finish(&self) -> Result<(), DecodeError> {
        let extra = self.buf.len() - self.pos;
        if extra > 0 {
            return Err(DecodeError::TrailingBytes {
                offset: self.offset(),
                extra,
            });
        }
        Ok(())
    }
}

const PIXEL_RGBA8: u8 = 0;
const PIXEL_GRAY8: u8 = 1;

const OP_FILL_RECT: u8 = 1;
const OP_PATCH: u8 = 2;
const OP_VEIL: u8 = 3;
const OP_LABEL: u8 = 4;

pub fn frame_payload(frame: &Frame) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(25 + frame.data().len()));
    w.u64(frame.id());
    w.u64(frame.timestamp_us());
    w.u32(frame.width());
    w.u32(frame.height());
    w.u8(match frame.format() {
        PixelFormat::Rgba8 => PIXEL_RGBA8,
        PixelFormat::Gray8 => PIXEL_GRAY8,
    });
    w.bytes(frame.data());
    w.0
}

fn read_frame(r: &mut Reader) -> Result<Frame, DecodeError> {
    let start = r.offset();
    let id = r.u64()?;
    let ts = r.u64()?;
    let width = r.u32()?;
    let height = r.u32()?;
    let fmt_at = r.offset();
    let format = match r.u8()? {
        PIXEL_RGBA8 => PixelFormat::Rgba8,
        PIXEL_GRAY8 => PixelFormat::Gray8,
        value => {
            return Err(DecodeError::UnknownPixelFormat {
                value,
                offset: fmt_at,
            })
        }
    };
    let len = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(format.bytes_per_pixel()))
        .filter(|&n| n <= MAX_PAYLOAD)
        .ok_or_else(|| DecodeError::Invalid {
            offset: start,
            reason: "frame too large".into(),
        })?;
    let data = r.take(len)?.to_vec();
    Frame::new(id, ts, width, height, format, data).map_err(|e| DecodeError::Invalid {
        offset: start,
        reason: e.to_string(),
    })
}

pub fn overlay_payload(plan: &OverlayPlan) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u64(plan.frame_id);
    w.u32(plan.ops.len() as u32);
    for op in &plan.ops {
        match &op.kind {
            OpKind::FillRect { region, color } => {
                w.u8(OP_FILL_RECT);
                w.i16(op.z);
                w.region(*region);
                w.bytes(&color.0);
            }
            OpKind::Patch { region, pixels } => {
                w.u8(OP_PATCH);
                w.i16(op.z);
                w.region(*region);
                w.bytes(pixels);
            }
            OpKind::Veil { alpha, color } => {
                w.u8(OP_VEIL);
                w.i16(op.z);
                w.f32(*alpha);
                w.bytes(&color.0);
            }
            OpKind::Label {
                region,
                text,
                color,
            } => {
                w.u8(OP_LABEL);
                w.i16(op.z);
                w.region(*region);
                w.str32(text);
                w.bytes(&color.0);
            }
        }
    }
    w.0
}

fn read_overlay(r: &mut Reader) -> Result<OverlayPlan, DecodeError> {
    let frame_id = r.u64()?;
    let count = r.u32()?;
    let mut ops = Vec::new();
    for _ in 0..count {
        let at = r.offset();
        let kind = r.u8()?;
        let z = r.i16()?;
        let kind = match kind {
            OP_FILL_RECT => OpKind::FillRect {
                region: r.region()?,
                color: r.rgba()?,
            },
            OP_PATCH => {
                let region = r.region()?;
                let len = region
                    .area()
                    .checked_mul(4)
                    .filter(|&n| n <= MAX_PAYLOAD)
                    .ok_or_else(|| DecodeError::Invalid {
                        offset: at,
                        reason: "patch too large".into(),
                    })?;
                OpKind::Patch {
                    region,
                    pixels: r.take(len)?.to_vec(),
                }
            }
            OP_VEIL => {
                let alpha_at = r.offset();
                let alpha = r.f32()?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(DecodeError::Invalid {
                        offset: alpha_at,
                        reason: format!("veil alpha {alpha} outside [0, 1]"),
                    });
                }
                OpKind::Veil {
                    alpha,
                    color: r.rgba()?,
                }
            }
            OP_LABEL => OpKind::Label {
                region: r.region()?,
                text: r.str32()?,
                color: r.rgba()?,
            },
            kind => return Err(DecodeError::UnknownOpKind { kind, offset: at }),
        };
        ops.push(OverlayOp { kind, z });
    }
    Ok(OverlayPlan { frame_id, ops })
}

pub fn hello_payload(h: &Hello) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u32(h.max_width);
    w.u32(h.max_height);
    w.u8(h.compression);
    w.u16(h.interventions.len() as u16);
    for name in &h.interventions {
        w.str16(name);
    }
    w.0
}

fn read_hello(r: &mut Reader) -> Result<Hello, DecodeError> {
    let max_width = r.u32()?;
    let max_height = r.u32()?;
    let compression = r.u8()?;
    let n = r.u16()?;
    let interventions = (0..n).map(|_| r.str16()).collect::<Result<_, _>>()?;
    Ok(Hello {
        max_width,
        max_height,
        compression,
        interventions,
    })
}

pub fn stats_payload(s: &Stats) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u64(s.frames_received);
    w.u64(s.frames_processed);
    w.u64(s.frames_dropped);
    w.u32(s.records.len() as u32);
    for rec in &s.records {
        w.u64(rec.frame_id);
        w.u64(rec.t_receive_us);
        w.u64(rec.t_plan_ready_us);
        w.u64(rec.t_sent_us);
        w.u16(rec.per_hook_us.len() as u16);
        for (name, us) in &rec.per_hook_us {
            w.str16(name);
            w.u64(*us);
        }
        w.u16(rec.skipped.len() as u16);
        for (name, err) in &rec.skipped {
            w.str16(name);
            w.str16(err);
        }
    }
    w.0
}

fn read_stats(r: &mut Reader) -> Result<Stats, DecodeError> {
    let mut s = Stats {
        frames_received: r.u64()?,
        frames_processed: r.u64()?,
        frames_dropped: r.u64()?,
        records: Vec::new(),
    };
    for _ in 0..r.u32()? {
        let mut rec = LatencyRecord {
            frame_id: r.u64()?,
            t_receive_us: r.u64()?,
            t_plan_ready_us: r.u64()?,
            t_sent_us: r.u64()?,
            per_hook_us: BTreeMap::new(),
            skipped: BTreeMap::new(),
        };
        for _ in 0..r.u16()? {
            let name = r.str16()?;
            rec.per_hook_us.insert(name, r.u64()?);
        }
        for _ in 0..r.u16()? {
            let name = r.str16()?;
            rec.skipped.insert(name, r.str16()?);
        }
        s.records.push(rec);
    }
    Ok(s)
}

pub fn bye_payload(b: &Bye) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u8(b.code as u8);
    w.str16(&b.reason);
    w.0
}

fn read_bye(r: &mut Reader) -> Result<Bye, DecodeError> {
    if r.buf.is_empty() {
        return Ok(Bye::normal());
    }
    let at = r.offset();
    let code = match r.u8()? {
        0 => ByeCode::Normal,
        1 => ByeCode::ProtocolError,
        2 => ByeCode::Refused,
        3 => ByeCode::Shutdown,
        c => {
            return Err(DecodeError::Invalid {
                offset: at,
                reason: format!("unknown BYE code {c}"),
            })
        }
    };
    Ok(Bye {
        code,
        reason: r.str16()?,
    })
}

/// Wraps `payload` in a message header.
pub fn encode_raw(ty: MsgType, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(ty as u8);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn encode_message(msg: &Message) -> Vec<u8> {
    let payload = match msg {
        Message::Hello(h) => hello_payload(h),
        Message::Frame(f) => frame_payload(f),
        Message::Overlay(p) => overlay_payload(p),
        Message::Stats(Some(s)) => stats_payload(s),
        Message::Stats(None) => Vec::new(),
        Message::Bye(b) => bye_payload(b),
    };
    encode_raw(msg.msg_type(), &payload)
}

/// Validates the header at the start of `buf`. Returns the full message
/// length, or `None` while more bytes are needed.
pub fn message_len(buf: &[u8]) -> Result<Option<usize>, DecodeError> {
    if buf.len() >= 4 && buf[..4] != MAGIC {
        return Err(DecodeError::BadMagic(buf[..4].try_into().expect("4 bytes")));
    }
    if buf.len() >= 5 && buf[4] != VERSION {
        return Err(DecodeError::BadVersion(buf[4]));
    }
    if buf.len() >= 6 && MsgType::from_byte(buf[5]).is_none() {
        return Err(DecodeError::UnknownType(buf[5]));
    }
    if buf.len() < HEADER_LEN {
        return Ok(None);
    }
    let len = u32::from_le_bytes(buf[6..10].try_into().expect("4 bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(DecodeError::TooLarge(len));
    }
    Ok((buf.len() >= HEADER_LEN + len).then_some(HEADER_LEN + len))
}

/// Decodes one message from the front of `buf`; returns it with the number
/// of bytes consumed.
pub fn decode_message(buf: &[u8]) -> Result<(Message, usize), DecodeError> {
    let total = match message_len(buf)? {
        Some(n) => n,
        None if buf.len() < HEADER_LEN => {
            return Err(DecodeError::Truncated {
                offset: 0,
                needed: HEADER_LEN,
                available: buf.len(),
            })
        }
        None => {
            let len = u32::from_le_bytes(buf[6..10].try_into().expect("4 bytes")) as usize;
            return Err(DecodeError::Truncated {
                offset: HEADER_LEN,
                needed: len,
                available: buf.len() - HEADER_LEN,
            });
        }
    };
    let ty = MsgType::from_byte(buf[5]).expect("checked by message_len");
    let mut r = Reader::new(&buf[HEADER_LEN..total], HEADER_LEN);
    let msg = match ty {
        MsgType::Hello => Message::Hello(read_hello(&mut r)?),
        MsgType::Frame => Message::Frame(read_frame(&mut r)?),
        MsgType::Overlay => Message::Overlay(read_overlay(&mut r)?),
        MsgType::Stats if r.buf.is_empty() => Message::Stats(None),
        MsgType::Stats => Message::Stats(Some(read_stats(&mut r)?)),
        MsgType::Bye => Message::Bye(read_bye(&mut r)?),
    };
    r.finish()?;
    Ok((msg, total))
}

fn decode_exact(buf: &[u8], expected: MsgType) -> Result<Message, DecodeError> {
    let (msg, used) = decode_message(buf)?;
    if msg.msg_type() != expected {
        return Err(DecodeError::WrongType {
            expected,
            actual: msg.msg_type(),
        });
    }
    if used != buf.len() {
        return Err(DecodeError::TrailingBytes {
            offset: used,
            extra: buf.len() - used,
        });
    }
    Ok(msg)
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    encode_raw(MsgType::Frame, &frame_payload(frame))
}

pub fn decode_frame(buf: &[u8]) -> Result<Frame, DecodeError> {
    match decode_exact(buf, MsgType::Frame)? {
        Message::Frame(f) => Ok(f),
        _ => unreachable!("type checked"),
    }
}

pub fn encode_overlay(plan: &OverlayPlan) -> Vec<u8> {
    encode_raw(MsgType::Overlay, &overlay_payload(plan))
}

pub fn decode_overlay(buf: &[u8]) -> Result<OverlayPlan, DecodeError> {
    match decode_exact(buf, MsgType::Overlay)? {
        Message::Overlay(p) => Ok(p),
        _ => unreachable!("type checked"),
    }
}
