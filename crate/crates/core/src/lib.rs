//! Non-rigid registration of a template triangle mesh onto raw 3D scans.
//!
//! The pipeline aligns the scan to the template from landmarks, optionally adapts the
//! template to the scan's layout (Laplace-Beltrami editing or a Gaussian-process posterior
//! mean), morphs it with iterative coherent point drift, and finally snaps it onto the scan
//! with a Laplacian-regularised projection.

pub mod cpd;
pub mod deform;
pub mod error;
pub mod gpmm;
pub mod icpd;
pub mod landmarks;
pub mod mesh;
pub mod pipeline;
pub mod rigid;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{Correspondence, Correspondences, Point, TriMesh};
