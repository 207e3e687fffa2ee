//! Reed-Muller codes on binary-input symmetric channels.
//!
//! The crate covers encoding and F2 geometry ([`rm`], [`gf2`]), BSC and
//! finite BMS channels ([`channel`]), exact bitwise-MAP decoding with exact
//! tie detection ([`decode`]), petal-majority boosting over subspace
//! sunflowers ([`sunflower`]), list and grid reconstruction of whole
//! codewords ([`reconstruct`]), biased Fourier-Walsh analysis of the
//! conditional error function ([`fourier`]), and closed-form bounds
//! ([`bounds`]).
//!
//! Real-valued code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.
//!
//! Coordinate `i` of a length-2^m word is the point x ∈ F2^m with
//! `x_j = (i >> (j-1)) & 1`. A monomial ∏_{j∈S} x_j is stored as the mask of
//! S under the same convention.

pub mod bounds;
pub mod channel;
pub mod decode;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod gf2;
pub mod reconstruct;
pub mod rm;
pub mod scalar;
pub mod stats;
pub mod sunflower;
pub mod verify;

pub use error::{Error, Guards, Result};
pub use rm::{CoeffVector, RmCode, Word};
pub use scalar::Real;

pub type Channel = channel::BmsChannel<f64>;
pub type Observation = channel::BmsObservation<f64>;
pub type Fourier = fourier::FourierTable<f64>;
