//! Batch pair-trading research engine.
//!
//! The pipeline screens a daily price panel for correlated pairs, confirms
//! them with the Engle-Granger cointegration test, turns each surviving
//! pair's spread into z-score trading signals, optimizes the entry/exit
//! thresholds per pair on a training window (exhaustive grid or a
//! sequential Parzen-density search), and evaluates baseline versus
//! optimized thresholds on a held-out test window. Every stage is
//! point-in-time clean: decisions only ever read data that precedes them.
//!
//! All numeric code is generic over the [`num::Real`] scalar; the aliases
//! below fix the `f64` instantiation used by the CLI and file formats.

pub mod backtest;
pub mod cointegration;
pub mod commands;
pub mod config;
pub mod error;
pub mod market_data;
pub mod num;
pub mod optimizer;
pub mod pair_screen;
pub mod report;
pub mod signal_engine;
pub mod synth;

pub use error::{Error, Result};
pub use market_data::WindowSpec;
pub use pair_screen::PairKey;

/// Working-precision (`f64`) instantiations of the core types.
pub type Panel = market_data::PricePanel<f64>;
pub type Returns = market_data::ReturnPanel<f64>;
pub type Screen = pair_screen::ScreenResult<f64>;
pub type Ols = cointegration::OlsFit<f64>;
pub type Adf = cointegration::AdfResult<f64>;
pub type Coint = cointegration::CointResult<f64>;
pub type Model = signal_engine::SpreadModel<f64>;
pub type Signals = signal_engine::SignalSeries<f64>;
pub type Bands = signal_engine::Thresholds<f64>;
pub type Report = backtest::BacktestReport<f64>;
pub type Space = optimizer::SearchSpace<f64>;
pub type Optimization = optimizer::OptimizationResult<f64>;

/// Single-precision aliases, for callers trading accuracy for memory.
pub type Panel32 = market_data::PricePanel<f32>;
pub type Model32 = signal_engine::SpreadModel<f32>;
pub type Report32 = backtest::BacktestReport<f32>;
