//! Author name disambiguation over bibliographic records.
//!
//! Records are ingested from the DBLP XML dump, author names are reduced to
//! atomic name variates ("L Wang"), and every atomic variate gets its own
//! block of records and its own neural classifier. A query name is first
//! routed by how many registry authors it matches; only ambiguous names
//! reach a block model, which scores every co-author pair of the query
//! record and sums the per-pair probability vectors.
//!
//! The numeric layers ([`neural`], [`encoders`], [`disambiguate`]) are generic
//! over the scalar type through [`Real`]. Training defaults to `f64`; the
//! aliases below name the common instantiations.

pub mod blocking;
pub mod corpus;
pub mod disambiguate;
pub mod encoders;
pub mod error;
pub mod evaluation;
pub mod names;
pub mod neural;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub use blocking::{block_stats, build_block, Block, BlockEntry, BlockStats};
pub use corpus::{AuthorId, AuthorMention, BibRecord, RecordKind};
pub use names::{AtomicVariate, AuthorRegistry, NormalizedName, RaResult};

/// Two-branch classifier at training precision.
pub type Model = neural::Network<f64>;
/// Two-branch classifier at single precision, for inference-only use.
pub type ModelF32 = neural::Network<f32>;
/// Model inputs at training precision.
pub type Features = encoders::FeatureVectorPair<f64>;
/// Adam optimizer state at training precision.
pub type Adam = neural::AdamState<f64>;
/// Block prediction at training precision.
pub type Prediction = disambiguate::Prediction<f64>;
