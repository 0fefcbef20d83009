//! Salient object detection with an extremely-downsampled network (EDN):
//! a from-scratch NCHW inference stack (dilated/grouped convolution, batch
//! norm, pooling, bilinear resize), the EDB + SCPC encoder/decoder graph,
//! hybrid BCE+Dice losses with analytic gradients, the full saliency
//! evaluation suite (MAE, max/weighted F-measure, S-measure, E-measure,
//! exact Euclidean distance transform, region partition analysis), and the
//! file formats that make it operable as a CLI tool.

pub mod error;
pub mod graph;
pub mod io;
pub mod layers;
pub mod loss;
pub mod metrics;
pub mod tensor;

pub use error::{EdnError, Result};
