//! Tensor-valued images on a periodic grid under the hyperoctahedral group.
//!
//! Modules build up from tensors and images to invariant filter banks. On top
//! of those sit the GI-Net models in [`net`], which train on the simulated
//! fields in [`physics`]. [`counting`] gives exact dimensions of the spaces of
//! equivariant polynomial maps.

pub mod counting;
pub mod error;
pub mod filters;
pub mod format;
pub mod image;
pub mod net;
pub mod numerics;
pub mod physics;
pub mod symmetry;
pub mod tensor;

pub use error::{Error, Result};
pub use image::{Boundary, GeometricImage};
pub use symmetry::{Group, GroupElement};
pub use tensor::{ContractionPlan, GeometricTensor, Parity, TensorSpec};
