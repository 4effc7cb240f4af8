//! Uplink multiple access with heterogeneous blocklengths and error targets.
//!
//! Users share a Gaussian MAC but transmit blocks of different lengths, so
//! the tail of a long block sees fewer interferers than its head. Each user
//! splits its block into sub-blocks with constant interferer sets, uses a
//! (possibly different) QAM constellation in each, and the receiver decodes
//! every user by treating interference as noise (TIN).
//!
//! * [`f2`] and [`detmac`]: the GF(2) deterministic model and its generator designs.
//! * [`signaling`]: QAM construction, power scaling and superposition.
//! * [`infodensity`]: Monte-Carlo TIN information-density statistics.
//! * [`fblrate`]: finite-blocklength rates, error bounds and Gaussian benchmarks.
//! * [`pipeline`]: allocation enumeration, rate sweeps and code parameters.

pub mod channel;
pub mod detmac;
pub mod error;
pub mod f2;
pub mod fblrate;
pub mod infodensity;
pub mod pipeline;
pub mod signaling;

pub use num_complex;

pub use channel::{BitAllocation, ChannelConfig, SchemeType, UserLink};
pub use detmac::{ComponentLayout, DetConfig, Piece};
pub use error::{Error, Result};
pub use f2::F2Matrix;
pub use fblrate::{BenchmarkRegion, RateReport};
pub use infodensity::DensityStats;
pub use pipeline::{CodeParams, RegionPoint, SelectionPolicy};
pub use signaling::{Constellation, SchemeSignaling};
