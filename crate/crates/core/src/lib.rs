//! Fringe projection profilometry toolkit.
//!
//! Implements a desk-scale digital fringe projection (DFP) measurement loop
//! that can be verified end to end against known ground truth:
//!
//! 1. **synth** – digital twin of the optical path: height fields, a
//!    crossed-optical-axes height-to-phase model, and a noisy four-step
//!    fringe renderer for both the reference plane and the object.
//! 2. **demod** – four-step phase-shifting demodulation producing wrapped
//!    phase, modulation, and a validity mask.
//! 3. **spatial** – spatial unwrapping of the smooth reference plane
//!    (scan-line and quality-guided flood fill) to obtain the minimum
//!    phase map.
//! 4. **temporal** – geometric-constraint unwrapping against the reference
//!    plane, residual-wrap correction, and the conventional dual-frequency
//!    baseline for comparison.
//! 5. **metrics** – quantitative comparison against ground truth.
//! 6. **pipeline** – end-to-end orchestration, file products, and the
//!    ratio/noise/seed sweep harness.
//!
//! Raster containers and the PGM / FPHM file formats live in [`raster`].

pub mod demod;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod spatial;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
pub use raster::{wrap_to_principal, Grid, Mask, Unit};
