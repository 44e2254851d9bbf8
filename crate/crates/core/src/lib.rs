//! Perfect teleportation of a qubit through a partially entangled two-qutrit
//! channel: measurement-basis construction, exact state-vector verification,
//! resource accounting and parameter sweeps.
//!
//! The numerical core is generic over [`numeric::Real`] (`f32`, `f64`); the
//! aliases below fix it to `f64`.
// negated float comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod explorer;
pub mod numeric;
pub mod qlinalg;
pub mod resources;
pub mod scheme;
pub mod teleport;

pub use numeric::Real;

pub type CVec = qlinalg::CVec<f64>;
pub type CMat = qlinalg::CMat<f64>;
pub type SchmidtChannel = channel::SchmidtChannel<f64>;
pub type SchemeParams = scheme::SchemeParams<f64>;
pub type Scheme = scheme::Scheme<f64>;
pub type MeasurementBasis = scheme::MeasurementBasis<f64>;
pub type AdmissibleRange = scheme::AdmissibleRange<f64>;
pub type InputQubit = teleport::InputQubit<f64>;
pub type TeleportReport = teleport::TeleportReport<f64>;
pub type ResourceReport = resources::ResourceReport<f64>;
pub type SweepRecord = explorer::SweepRecord<f64>;
pub type SweepOutput = explorer::SweepOutput<f64>;
