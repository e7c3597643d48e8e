//! File formats, SVG rendering and the `read` command line tool.
//!
//! Layouts are stored one per JSON file, with page-normalized coordinates:
//!
//! ```json
//! { "source_id": "p1", "page": {"width": 1700, "height": 2200},
//!   "boxes": [ {"label": "title", "x": 0.1, "y": 0.05, "w": 0.8, "h": 0.05} ] }
//! ```

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod layout_io;
pub mod svg;

pub use error::{Error, Result};
