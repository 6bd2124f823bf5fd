//! Deterministic simulator for social caching in DHT-based online social
//! networks.
//!
//! Peers resolve content requests through a social cache (content pushed by
//! subscribed friends), a TTL/LRU "current" cache and finally the DHT. A
//! synthetic trace of posts, lookups and friend requests drives the run; the
//! metrics ledger records hit ratios and traffic over simulated time.

pub mod config;
pub mod error;
pub mod experiment;
pub mod info_cache;
pub mod metrics;
pub mod model;
pub mod node;
pub mod overlay;
pub mod sim;
pub mod social;
pub mod workload;

pub use config::{CacheSetup, ScenarioConfig};
pub use error::{ConfigError, Error, ModelError, OverlayError, PeerError, SocialError, WorkloadError};
pub use info_cache::{CacheLookup, CurrentCache, LookupResult, Source};
pub use metrics::{cache_hit_ratio, Counters, MetricsLedger, RunSummary};
pub use model::{ContentObject, InteractionKind, SimTime, StorageKey, UserId};
pub use node::{Network, Peer};
pub use sim::Simulation;
pub use social::{SocialCache, StrategyConfig, StrategyKind, Trigger};
pub use workload::{TraceEvent, TraceGenerator};
