//! Link-level simulator for massive MIMO base stations with asymmetrical
//! transceivers: `M` transmit RF chains but only `N < M` receive RF chains.
//!
//! The crate covers the whole chain of a time-division duplex frame:
//!
//! * [`channel`]: parametric multipath channels and ULA steering vectors,
//! * [`array`]: receive-antenna selection and beam patterns,
//! * [`uplink`]: pilots, LS/LMMSE estimation, MRC/ZF detection, uplink SE and
//!   the SNR loss caused by unresolved paths,
//! * [`transfer`]: DFT- and mNOMP-based uplink-to-downlink channel transfer,
//! * [`downlink`]: MRT/ZF precoding, downlink SE and NMSE,
//! * [`econ`]: hardware cost, power and energy efficiency,
//! * [`harness`]: config-driven, seeded Monte-Carlo experiments with CSV output.
//!
//! All Monte-Carlo randomness flows through caller-owned RNGs derived from
//! [`harness::SeedStream`], so every result is a pure function of its inputs.

pub mod array;
pub mod channel;
pub mod downlink;
pub mod econ;
mod error;
pub mod harness;
pub mod linalg;
pub mod transfer;
pub mod uplink;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex dense matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
