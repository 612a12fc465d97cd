//! Market data ingestion, technical indicators, a share-trading environment,
//! trading agents (baselines and advantage actor-critic) and behavioral
//! analytics over episode logs.

pub mod agents;
pub mod analytics;
pub mod env;
pub mod indicators;
pub mod marketdata;

pub use analytics::{AnalyticsError, BehaviorReport};
pub use agents::{A2CConfig, A2CPolicy, AgentError, Policy};
pub use env::{Action, EnvConfig, EnvError, EpisodeLog, TradingEnv};
pub use indicators::{FeaturePanel, IndicatorConfig, IndicatorError};
pub use marketdata::{MarketDataError, MarketPanel, Timestamp};
