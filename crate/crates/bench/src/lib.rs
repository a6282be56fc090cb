//! Fixtures shared by the pipeline benchmarks.

use robustbench_core::imaging::asset::synthetic_scene;
use robustbench_core::FrameSequence;

/// A panning test scene of the given size.
pub fn scene(width: usize, height: usize, frames: usize) -> FrameSequence {
    synthetic_scene(width, height, frames, 1).0
}
