//! Work cost of quantum processes.
//!
//! The crate is layered as follows.
//!
//! - [`qmat`]: Hermitian linear algebra, partial traces, states and purifications.
//! - [`majorize`]: spectra, majorization and the λ-majorization linear program.
//! - [`channel`]: completely positive maps in Choi form.
//! - [`entropy`]: single-shot and smoothed entropies.
//! - [`sdp`]: a block SDP solver and the work-cost program.
//! - [`landauer`]: optimal processes, dual witnesses and work bounds.

pub mod channel;
pub mod entropy;
pub mod error;
pub mod io;
pub mod landauer;
mod linalg;
pub mod majorize;
pub mod qmat;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};
