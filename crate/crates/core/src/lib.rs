//! Explicit dynamic fracture with edge-smoothed finite elements and a
//! cracking-element crack model.

pub mod bench;
pub mod cem;
pub mod dynamics;
pub mod esfem;
pub mod material;
pub mod mesh;
pub mod simulation;

/// Sizes the global worker pool. Results do not depend on the count.
pub fn set_worker_threads(n: usize) -> Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()
}
