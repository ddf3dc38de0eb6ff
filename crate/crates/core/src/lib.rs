//! Activity recognition from human body capacitance (HBC) and inertial
//! sensors: session simulation, preprocessing, feature extraction, class
//! balancing, classification, repetition counting, pairwise collaboration
//! detection and cross-validated evaluation.

pub mod balance;
pub mod counting;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod pairwise;
pub mod pipeline;
pub mod report;
pub mod seeds;
pub mod simulate;
pub mod types;

pub use error::{Error, ErrorCategory, Result};
pub use types::{Channel, Label, LabelSet, LabelSetId, SampleFrame, Session, SessionMeta, Window};
