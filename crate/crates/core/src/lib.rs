//! In-place anonymization of whole-slide images in their native vendor
//! formats.
//!
//! The two main entry points are [`detect_format`] and [`anonymize`];
//! [`audit_level`] grades a file against the anonymization ladder.
//!
//! ```no_run
//! use std::path::Path;
//! use wsi_anon::{anonymize, AnonymizationConfig};
//!
//! let report = anonymize(Path::new("slide.svs"), &AnonymizationConfig::default())?;
//! println!("{} reached {}", report.output.display(), report.achieved_level);
//! # Ok::<(), wsi_anon::Error>(())
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod forge;
pub mod format;
pub mod io;
pub mod patch;
pub mod stream;
pub mod tiff;
pub mod vendors;

pub use engine::{
    anonymize, anonymize_source, audit_level, audit_source, detect_format, is_supported,
    plan_source, AnonymizationConfig, AnonymizationReport, NewName, PolicyLevel,
};
pub use error::{Error, Result};
pub use format::{profile, Family, FormatProfile, Vendor, VendorFormat};
pub use io::{open_source, ByteSink, ByteSource, FileBytes, MemBytes};
pub use patch::{apply_plan, Patch, PatchPlan};
pub use stream::StreamSession;
