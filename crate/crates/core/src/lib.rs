//! Tweet sentiment to stock movement inference.
//!
//! The pipeline ingests company tweets, scores them with a pattern lexicon,
//! aggregates daily sentiment, correlates it with index-corrected percent
//! movement under sliding-window smoothing, fits a lagged least-squares model
//! and turns its predictions into buy/hold/sell recommendations. Days with an
//! extreme predicted move get a report of their most repeated tweets.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which the file formats and the
//! pipeline use.

pub mod aggregate;
pub mod config;
pub mod corpus;
pub mod error;
pub mod market;
pub mod pipeline;
pub mod predict;
pub mod report;
pub mod scalar;
pub mod sentiment;

pub use config::PipelineConfig;
pub use corpus::{CleanTweet, CompanyId, KeywordFilter, RawTweet, TweetCorpus};
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineError, Stage, Summary};
pub use predict::{DateRange, Lags, Recommendation};
pub use scalar::Scalar;

pub type SentimentScore = sentiment::SentimentScore<f64>;
pub type Lexicon = sentiment::Lexicon<f64>;
pub type LexiconEntry = sentiment::LexiconEntry<f64>;
pub type DailySentimentRow = aggregate::DailySentimentRow<f64>;
pub type MetaStats = aggregate::MetaStats<f64>;
pub type PriceBar = market::PriceBar<f64>;
pub type MovementSeries = market::MovementSeries<f64>;
pub type CorrelationTable = market::CorrelationTable<f64>;
pub type FeatureRow = predict::FeatureRow<f64>;
pub type LinearModel = predict::LinearModel<f64>;
pub type EvalReport = predict::EvalReport<f64>;
pub type RecommendationRule = predict::RecommendationRule<f64>;
pub type ExtremeDayReport = report::ExtremeDayReport<f64>;
