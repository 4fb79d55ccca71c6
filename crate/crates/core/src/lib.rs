//! Structural OCR for printed Persian/Arabic (Naskh) text.
//!
//! Sub-words are thinned to skeletons, split into simple strokes, and each
//! stroke is approximated with quantized straight lines that are grouped into
//! eight primitive shapes. Primitive sequences plus dot counts are matched
//! against a table of character templates.

pub mod harness;
pub mod pipeline;
pub mod preprocess;
pub mod primitive;
pub mod raster;
pub mod recognize;
pub mod segment;
pub mod skeleton;
