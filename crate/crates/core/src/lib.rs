//! Adaptive recommendation over knowledge contexts.
//!
//! A knowledge context is the relational substrate of one information
//! resource: which keywords qualify which records and which documents cite
//! which. From it we derive set-overlap proximity networks ([`proximity`]),
//! learn document associations from user trails ([`apweb`]), retrieve by
//! spreading activation ([`spreading`]) and build and adapt keyword categories
//! through conversation ([`talkmine`]).
//!
//! The numeric code is generic over [`Scalar`] (`f32`, `f64`, or the exact
//! [`Rational`]) and, where roots or logarithms are needed, [`Real`]. The
//! aliases below fix the scalar for everyday use.

pub mod apweb;
pub mod corpus;
pub mod error;
pub mod proximity;
pub mod scalar;
pub mod spreading;
pub mod talkmine;

pub use corpus::{ingest, DocumentId, IngestOptions, KeywordId, KnowledgeContext, Record, RecordId};
pub use error::{Error, Result};
pub use proximity::{ProximityKind, SemiMetricRatio};
pub use scalar::{Rational, Real, Scalar};

pub type Proximity = proximity::SparseProximity<f64>;
pub type ExactProximity = proximity::SparseProximity<Rational>;
pub type Proximity32 = proximity::SparseProximity<f32>;

pub type RewardConfig = apweb::RewardConfig<f64>;
pub type CompositeWeights = apweb::CompositeWeights<f64>;
pub type SpreadConfig = spreading::SpreadConfig<f64>;
pub type Spread = spreading::Spread<f64>;
pub type HitsScores = proximity::HitsScores<f64>;

pub type AdaptiveContext = talkmine::AdaptiveContext<f64>;
pub type ConversationState = talkmine::ConversationState<f64>;
pub type ConversationConfig = talkmine::ConversationConfig<f64>;
pub type FuzzyCategory = talkmine::FuzzyCategory<f64>;
pub type Question = talkmine::Question<f64>;
pub type HebbianRates = talkmine::HebbianRates<f64>;
