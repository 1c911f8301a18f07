//! Beta-power load modelling and load-driven room generation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`eeg`]: ingest sessions, estimate Welch spectra and extract band power.
//! 2. [`model`]: fit a cubic response of beta power to interference intensity,
//!    locate its inflection and its maximizer ([`optim`] provides the simplex search).
//! 3. [`space`] and [`layout`]: remap a Cognitive Load Index to four discrete
//!    spatial variables and realize them as a validated grid layout.
//! 4. [`adapt`]: close the loop against simulated participants.

pub mod adapt;
pub mod eeg;
pub mod layout;
pub mod model;
pub mod optim;
pub mod space;

pub use eeg::{EegSession, EegWindow, FrequencyBand, PowerSpectrum, SignalError};
pub use layout::{LayoutError, LayoutGeometry, ValidationReport};
pub use model::{CliOptimum, LoadModel, ModelError, ObservationSet, Optimum, OptimumKind};
pub use space::{SpaceError, SpatialConfig, VariableKind, VariableSpec};
