//! Recommendation service over adaptive knowledge contexts.
//!
//! [`engine::Engine`] holds the contexts, sessions and click log and runs
//! adaptation cycles; [`http`] exposes it as JSON over HTTP; [`snapshot`]
//! persists it as a directory of text files; [`sim`] drives synthetic user
//! communities through the HTTP surface.

pub mod config;
pub mod engine;
pub mod error;
pub mod http;
pub mod sim;
pub mod snapshot;

pub use config::{AdaptationMode, ContextSource, EngineConfig};
pub use engine::{CycleReport, Engine, Event, Network, Recommendation, Related, Turn};
pub use error::ServiceError;
pub use sim::{run_community_sim, simulate, CommunitySpec, SimReport};
pub use snapshot::{read_journal, restore_snapshot, write_snapshot};
