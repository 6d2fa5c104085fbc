//! Run configuration: a TOML file of key = value pairs plus CLI flag
//! overrides (flags win). One seed drives every random choice in a run.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::backtest::{BacktestParams, LegWeighting, ReturnMode, SplitConfig};
use crate::cointegration::{CointBasis, CointConfig, PvalueSurface};
use crate::error::{Error, Result};
use crate::market_data::{LoadOptions, WindowSpec, DEFAULT_MISSING_CUTOFF};
use crate::optimizer::{
    AxisSpec, ModelFit, ObjectiveMetric, OptimizeParams, SearchMethod, SearchSpace, DEFAULT_TRIALS,
};
use crate::pair_screen::DEFAULT_CORRELATION_THRESHOLD;
use crate::cointegration::DEFAULT_COINTEGRATION_THRESHOLD;
use crate::signal_engine::{ExitRule, Thresholds};

/// Baseline thresholds compared against the optimized ones.
pub const DEFAULT_BASELINE: (f64, f64) = (2.0, 1.0);

/// Fully resolved configuration for a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub correlation_threshold: f64,
    pub cointegration_threshold: f64,
    pub method: SearchMethod,
    pub budget: usize,
    pub return_mode: ReturnMode,
    pub baseline: Thresholds<f64>,
    pub search_space: SearchSpace<f64>,
    /// None means derive the default segmentation from the panel: the last
    /// 63 rows are the test window, the 252 before them the training
    /// window, everything earlier the pair-selection window.
    pub splits: Option<SplitsConfigRaw>,
    pub max_missing_frac: f64,
    /// Optional uniform subsample of the pair universe before screening.
    pub screen_sample: Option<usize>,
    pub use_transform: bool,
    pub transform_shift: f64,
    pub coint: CointConfig,
    pub exit_rule: ExitRule,
    pub weighting: LegWeighting,
    pub cost_per_trade: f64,
    pub model_fit: ModelFit,
    pub metric: ObjectiveMetric,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_path: PathBuf::new(),
            output_dir: PathBuf::from("run_out"),
            seed: 0,
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            cointegration_threshold: DEFAULT_COINTEGRATION_THRESHOLD,
            method: SearchMethod::Grid,
            budget: DEFAULT_TRIALS,
            return_mode: ReturnMode::Compounded,
            baseline: Thresholds::new(DEFAULT_BASELINE.0, DEFAULT_BASELINE.1)
                .expect("valid baseline"),
            search_space: SearchSpace::default(),
            splits: None,
            max_missing_frac: DEFAULT_MISSING_CUTOFF,
            screen_sample: None,
            use_transform: false,
            transform_shift: crate::market_data::DEFAULT_LOG_SHIFT,
            coint: CointConfig::default(),
            exit_rule: ExitRule::Band,
            weighting: LegWeighting::EqualNotional,
            cost_per_trade: 0.0,
            model_fit: ModelFit::RefitHalf,
            metric: ObjectiveMetric::CumulativeReturn,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        raw.resolve()
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            missing_cutoff: self.max_missing_frac,
            date_column: None,
        }
    }

    pub fn backtest_params(&self) -> BacktestParams<f64> {
        BacktestParams {
            mode: self.return_mode,
            weighting: self.weighting,
            exit_rule: self.exit_rule,
            cost_per_trade: self.cost_per_trade,
        }
    }

    pub fn optimize_params(&self) -> OptimizeParams<f64> {
        OptimizeParams {
            method: self.method,
            budget: self.budget,
            seed: self.seed,
            model_fit: self.model_fit,
            metric: self.metric,
            backtest: self.backtest_params(),
        }
    }

    /// Resolve the temporal segmentation against the loaded panel's dates.
    pub fn resolve_splits(&self, panel_dates: &[NaiveDate]) -> Result<SplitConfig> {
        let splits = match &self.splits {
            Some(raw) => raw.to_splits()?,
            None => derive_default_splits(panel_dates)?,
        };
        splits.validate()?;
        Ok(splits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_path.as_os_str().is_empty() {
            return Err(Error::Config("no data file given".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation_threshold) {
            return Err(Error::Config(format!(
                "correlation threshold {} outside [0, 1]",
                self.correlation_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.cointegration_threshold) {
            return Err(Error::Config(format!(
                "cointegration threshold {} outside [0, 1]",
                self.cointegration_threshold
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("trial budget must be positive".into()));
        }
        Ok(())
    }
}

/// Default segmentation: test = last 63 rows (about 3 months), training =
/// the 252 rows before that (about a year), pair selection = the rest.
fn derive_default_splits(dates: &[NaiveDate]) -> Result<SplitConfig> {
    const TEST_ROWS: usize = 63;
    const TRAIN_ROWS: usize = 252;
    const MIN_SELECT_ROWS: usize = 60;
    if dates.len() < TEST_ROWS + TRAIN_ROWS + MIN_SELECT_ROWS {
        return Err(Error::Config(format!(
            "panel has {} rows; need at least {} for the default windows, \
             or set [splits] explicitly",
            dates.len(),
            TEST_ROWS + TRAIN_ROWS + MIN_SELECT_ROWS
        )));
    }
    let n = dates.len();
    let test_start = n - TEST_ROWS;
    let train_start = test_start - TRAIN_ROWS;
    Ok(SplitConfig {
        pair_selection: WindowSpec::new(dates[0], dates[train_start - 1])?,
        training: WindowSpec::new(dates[train_start], dates[test_start - 1])?,
        validation: None,
        test: WindowSpec::new(dates[test_start], dates[n - 1])?,
    })
}

/// Date windows as written in the config file.
#[derive(Debug, Clone, Deserialize)]
pub struct SplitsConfigRaw {
    pub pair_selection: RawWindow,
    pub training: RawWindow,
    #[serde(default)]
    pub validation: Option<RawWindow>,
    pub test: RawWindow,
}

impl SplitsConfigRaw {
    pub fn to_splits(&self) -> Result<SplitConfig> {
        Ok(SplitConfig {
            pair_selection: self.pair_selection.to_window()?,
            training: self.training.to_window()?,
            validation: self
                .validation
                .as_ref()
                .map(|w| w.to_window())
                .transpose()?,
            test: self.test.to_window()?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawWindow {
    pub start: String,
    pub end: String,
}

impl RawWindow {
    fn to_window(&self) -> Result<WindowSpec> {
        let parse = |s: &str| {
            NaiveDate::from_str(s)
                .map_err(|_| Error::Config(format!("unparsable date {s:?} in splits")))
        };
        WindowSpec::new(parse(&self.start)?, parse(&self.end)?)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: Option<String>,
    output: Option<String>,
    seed: Option<u64>,
    correlation_threshold: Option<f64>,
    cointegration_threshold: Option<f64>,
    method: Option<String>,
    trials: Option<usize>,
    return_mode: Option<String>,
    splits: Option<SplitsConfigRaw>,
    baseline: Option<RawBaseline>,
    search_space: Option<RawSearchSpace>,
    screen: Option<RawScreen>,
    coint: Option<RawCoint>,
    signals: Option<RawSignals>,
    backtest: Option<RawBacktest>,
    optimizer: Option<RawOptimizer>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    theta_in: Option<f64>,
    theta_out: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearchSpace {
    theta_in: Option<RawAxis>,
    theta_out: Option<RawAxis>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    low: f64,
    high: f64,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScreen {
    max_pairs: Option<usize>,
    max_missing_frac: Option<f64>,
    use_transform: Option<bool>,
    transform_shift: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoint {
    with_intercept: Option<bool>,
    basis: Option<String>,
    surface: Option<String>,
    max_lags: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignals {
    exit_rule: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBacktest {
    weighting: Option<String>,
    cost_per_trade: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    model_fit: Option<String>,
    objective: Option<String>,
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(d) = self.data {
            cfg.data_path = PathBuf::from(d);
        }
        if let Some(o) = self.output {
            cfg.output_dir = PathBuf::from(o);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.correlation_threshold {
            cfg.correlation_threshold = c;
        }
        if let Some(c) = self.cointegration_threshold {
            cfg.cointegration_threshold = c;
            cfg.coint.p_threshold = c;
        }
        if let Some(m) = self.method {
            cfg.method = m.parse()?;
        }
        if let Some(t) = self.trials {
            cfg.budget = t;
        }
        if let Some(mode) = self.return_mode {
            cfg.return_mode = match mode.as_str() {
                "compounded" => ReturnMode::Compounded,
                "arithmetic" => ReturnMode::Arithmetic,
                other => {
                    return Err(Error::Config(format!(
                        "unknown return mode {other:?}"
                    )))
                }
            };
        }
        cfg.splits = self.splits;
        if let Some(b) = self.baseline {
            let ti = b.theta_in.unwrap_or(DEFAULT_BASELINE.0);
            let to = b.theta_out.unwrap_or(DEFAULT_BASELINE.1);
            cfg.baseline = Thresholds::new(ti, to)?;
        }
        if let Some(s) = self.search_space {
            let default = SearchSpace::<f64>::default();
            let theta_in = match s.theta_in {
                Some(a) => AxisSpec::new(a.low, a.high, a.step)?,
                None => default.theta_in,
            };
            let theta_out = match s.theta_out {
                Some(a) => AxisSpec::new(a.low, a.high, a.step)?,
                None => default.theta_out,
            };
            cfg.search_space = SearchSpace::new(theta_in, theta_out)?;
        }
        if let Some(s) = self.screen {
            if let Some(k) = s.max_pairs {
                cfg.screen_sample = Some(k);
            }
            if let Some(f) = s.max_missing_frac {
                cfg.max_missing_frac = f;
            }
            if let Some(t) = s.use_transform {
                cfg.use_transform = t;
            }
            if let Some(sh) = s.transform_shift {
                cfg.transform_shift = sh;
            }
        }
        if let Some(c) = self.coint {
            if let Some(w) = c.with_intercept {
                cfg.coint.with_intercept = w;
            }
            if let Some(b) = c.basis {
                cfg.coint.basis = match b.as_str() {
                    "levels" => CointBasis::Levels,
                    "returns" => CointBasis::Returns,
                    other => {
                        return Err(Error::Config(format!("unknown coint basis {other:?}")))
                    }
                };
            }
            if let Some(s) = c.surface {
                cfg.coint.surface = match s.as_str() {
                    "engle-granger" => PvalueSurface::EngleGranger,
                    "adf" => PvalueSurface::PlainAdf,
                    other => {
                        return Err(Error::Config(format!("unknown p-value surface {other:?}")))
                    }
                };
            }
            cfg.coint.max_lags = c.max_lags;
        }
        if let Some(s) = self.signals {
            if let Some(rule) = s.exit_rule {
                cfg.exit_rule = match rule.as_str() {
                    "band" => ExitRule::Band,
                    "zero-cross" => ExitRule::ZeroCross,
                    other => {
                        return Err(Error::Config(format!("unknown exit rule {other:?}")))
                    }
                };
            }
        }
        if let Some(b) = self.backtest {
            if let Some(w) = b.weighting {
                cfg.weighting = match w.as_str() {
                    "equal-notional" => LegWeighting::EqualNotional,
                    "beta-shares" => LegWeighting::BetaShares,
                    other => {
                        return Err(Error::Config(format!("unknown weighting {other:?}")))
                    }
                };
            }
            if let Some(c) = b.cost_per_trade {
                cfg.cost_per_trade = c;
            }
        }
        if let Some(o) = self.optimizer {
            if let Some(m) = o.model_fit {
                cfg.model_fit = match m.as_str() {
                    "refit-half" => ModelFit::RefitHalf,
                    "inherit" => ModelFit::Inherit,
                    other => {
                        return Err(Error::Config(format!("unknown model_fit {other:?}")))
                    }
                };
            }
            if let Some(m) = o.objective {
                cfg.metric = match m.as_str() {
                    "cumulative-return" => ObjectiveMetric::CumulativeReturn,
                    "sharpe" => ObjectiveMetric::Sharpe,
                    other => {
                        return Err(Error::Config(format!("unknown objective {other:?}")))
                    }
                };
            }
        }
        Ok(cfg)
    }
}
