//! Robustness benchmarking toolkit for traffic-sign detection under
//! simulated acquisition challenges.
//!
//! The crate is organized by pipeline stage:
//!
//! 1. **imaging** – frames, luminance, residuals, PNG/PPM I/O.
//! 2. **challenge** – the twelve parameterized challenge conditions, level 0–5,
//!    composition of concurrent conditions and grid synthesis.
//! 3. **annotations** – sign vocabulary, bounding-box text format, dataset splits.
//! 4. **metrics** – IoU matching, precision/recall/F-beta, degradation tables.
//! 5. **spectral** – residual log-magnitude spectra, averaged maps, rendering.
//! 6. **stats** – Spearman rank correlation against detection performance.
//!
//! Every stochastic transform is a pure function of its inputs and a 64-bit
//! seed, so outputs are reproducible regardless of thread count.

pub mod annotations;
pub mod challenge;
pub mod imaging;
pub mod metrics;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use annotations::{Annotation, BoundingBox, Detection, SignType, SplitMode, SplitPlan};
pub use challenge::{ChallengeSpec, ChallengeType};
pub use imaging::{Frame, FrameSequence, LumaFrame, Rgb};
pub use metrics::{ConfusionCounts, DegradationCell, MetricsRecord};
pub use spectral::{SpectrumMap, SpectrumStats};
pub use stats::{CorrelationResult, PairedSeries};
