//! Generative modelling of document layouts.
//!
//! A layout is a page of labeled, axis-aligned boxes. This crate turns layouts
//! into left-deep binary hierarchies, encodes those hierarchies with a recursive
//! variational autoencoder, samples new layouts from the learned latent space and
//! scores layouts against each other with a matching-based similarity metric.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, rendering and the
//! command line front end live in the `read` crate.
#![no_std]

extern crate alloc;

pub mod docsim;
pub mod error;
pub mod generate;
pub mod geometry;
pub mod hierarchy;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{DocumentLayout, LabelVocabulary, LabeledBox, Rect};
pub use hierarchy::{LayoutTree, RelativePosition, SpatialRelation};
pub use model::{ModelConfig, ModelParams};
