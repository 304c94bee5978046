//! Screen-frame intervention pipeline.
//!
//! Frames flow through detection hooks that emit overlay plans; plans are
//! composited back onto the frame or streamed to a client over a small
//! binary protocol.

pub mod corpus;
pub mod hooks;
pub mod imaging;
pub mod interventions;
pub mod io;
pub mod net;
pub mod overlay;
pub mod types;

pub use overlay::{composite, CompositeError};
pub use types::{
    Detection, Frame, LatencyRecord, OpKind, OverlayOp, OverlayPlan, PixelFormat, Region, Rgba,
    TypeError,
};
