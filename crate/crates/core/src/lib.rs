//! Compressive-sensing MRI reconstruction with a cross-domain stochastically
//! fully connected conditional random field (CD-SFCRF).
//!
//! The model recovers a spatial-domain image from sparsely sampled k-space
//! measurements by minimizing a cross-domain energy: a unary data-fidelity
//! term enforced on the acquired k-space bins plus a stochastic pairwise
//! smoothness term over cliques drawn in the spatial domain. Inference is
//! iterative gradient descent starting from the zero-filled reconstruction.
//!
//! Module map:
//!
//! * [`transform`] — unitary DC-centered 2-D DFT, radial undersampling
//!   masks, zero-filled reconstruction.
//! * [`phantom`] — synthetic prostate phantom ground truth.
//! * [`graph`] — stochastic clique sampling (the "stochastically fully
//!   connected" structure).
//! * [`energy`] — cross-domain energy and its analytic gradients.
//! * [`optimizer`] — the reconstruction loop and grid tuning.
//! * [`metrics`] — PSNR / SSIM / relative-L2 quality metrics.
//! * [`io`] — file formats (CDIM/CDKS raw grids, PBM masks, PGM previews,
//!   flat key-value spec and config files).

pub mod energy;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod phantom;
pub mod rng;
pub mod transform;

pub use error::{Error, Result};
pub use transform::{Image, KSpace, SamplingMask};
