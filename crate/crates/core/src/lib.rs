//! Scholarly research output and impact analytics.
//!
//! The crate turns a citation corpus (real or generated by [`synth`]) into
//! per-(field, region, year) panels: publication counts, citation counts,
//! saliency (future eigenvalue centrality) and conditional saliency ratios,
//! plus transregional collaboration panels and convergence trend reports.

pub mod aggregate;
pub mod collab;
pub mod corpus;
pub mod error;
pub mod fields;
pub mod panel;
pub mod regions;
pub mod saliency;
pub mod stats;
pub mod synth;
pub mod trends;

pub use corpus::{ArticleId, CorpusIndex, CountryCode, IngestConfig};
pub use error::{Error, Result};
pub use fields::FieldGrouping;
pub use regions::{IncomeGroup, Region, RegionTable};
pub use saliency::{CentralityConfig, SaliencyMode, SaliencyVector};
