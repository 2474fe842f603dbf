//! Proxy dynamic graphs over a single image.
//!
//! A scene (image, depth, camera, part masks) is lifted into per-part point
//! clouds and arranged in a kinematic forest of 1-DoF edges. Posing the graph
//! and interpolating from rest produces a tracking video, the evolving
//! disocclusion mask and ground-truth flow. The [`latent`] module turns those
//! into conditioning bundles for a video diffusion backend and [`metrics`]
//! scores the results.
//!
//! ```
//! use proxydyn::synth::{synth_scene, SyntheticSpec};
//!
//! let spec: SyntheticSpec = serde_json::from_str(r#"{
//!     "width": 64, "height": 48, "focal": 60.0,
//!     "background": {"depth": 5.0, "texture_seed": 1},
//!     "primitives": [{
//!         "id": "door", "rows": [10, 30], "cols": [20, 40], "depth": 3.0,
//!         "texture_seed": 2,
//!         "motion": {"parent": "static", "kind": "translation",
//!                    "axis": [1.0, 0.0, 0.0], "range": [-1.0, 1.0]}
//!     }]
//! }"#).unwrap();
//! let synth = synth_scene(&spec).unwrap();
//! assert!(synth.pdg.is_valid());
//! ```

pub mod camera;
pub mod document;
pub mod error;
pub mod latent;
pub mod metrics;
pub mod motion;
pub mod pdg;
pub mod raster;
pub mod scene;
pub mod synth;
pub mod tensor;
pub mod transform;

pub use camera::CameraModel;
pub use error::{Error, IoError};
pub use pdg::{forward_kinematics, validate_pdg, MotionEdge, MotionKind, PartNode, Pdg, Pose, STATIC_ROOT};
pub use raster::{Field, Grid, Image, Mask};
pub use scene::Scene;
pub use tensor::Tensor4;
pub use transform::RigidTransform;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/motion.md")]
    mod motion {}
    #[doc = include_str!("../../../book/src/latents.md")]
    mod latents {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
