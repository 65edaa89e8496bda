//! Multi-granular network traffic analysis toolkit.
//!
//! The crate turns packet captures into a token-based traffic representation,
//! trains a small attention encoder with task-specific heads on it, and
//! evaluates the results. The pieces compose as a pipeline:
//!
//! ```text
//! pcap / record files --> capture --> assemble --> features --> codec
//!                                                                 |
//!              metrics <-- heads <-- model (attention encoder) <--+
//! ```
//!
//! [`synth`] generates labeled synthetic traffic so the whole pipeline can be
//! exercised deterministically without real captures, and [`checkpoint`]
//! persists trained models together with the binning tables they depend on.

pub mod assemble;
pub mod capture;
pub mod checkpoint;
pub mod codec;
pub mod features;
pub mod heads;
pub mod metrics;
pub mod model;
pub mod synth;

pub use capture::{Direction, InternalNet, PacketRecord, Protocol};
