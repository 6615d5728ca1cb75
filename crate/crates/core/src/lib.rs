//! Financial ticket recognition: preprocessing, classification, type-routed
//! recognition, text structuring, accounting entries, the ticket warehouse
//! and evaluation metrics.
//!
//! Learned components sit behind backend traits; the crate ships
//! deterministic fixture backends and a seeded noise model in their place.

pub mod classify;
pub mod config;
pub mod entry;
pub mod fixtures;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod recognize;
pub mod structure;
pub mod types;
pub mod warehouse;

pub use config::{CategoryInfo, CategoryRegistry, ConfigError, EntryConfig, PipelineConfig};
pub use geometry::BBox;
pub use pipeline::{process_and_ingest, process_ticket, process_ticket_with, PipelineError, ProcessOptions};
pub use preprocess::RawTicketImage;
pub use recognize::{BackendSet, NoiseModel};
pub use types::{
    AuditState, OutcomeStatus, ProcessOutcome, RegionKind, Stage, TextRegion, TicketRecord, TicketType,
};
pub use warehouse::{compute_level, Warehouse, WarehouseError, WarehouseRecord};
