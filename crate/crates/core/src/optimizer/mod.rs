//! Per-pair threshold search maximizing training-window cumulative return,
//! by exhaustive grid or a sequential Parzen-density sampler, under the
//! same point-in-time discipline as the backtester.

mod grid;
mod tpe;

pub use grid::grid_search;
pub use tpe::{tpe_search, GAMMA, N_CANDIDATES, N_STARTUP};

use rayon::prelude::*;

use crate::backtest::{run_backtest, BacktestParams, SplitConfig};
use crate::error::{Error, Result};
use crate::market_data::{PricePanel, WindowSpec};
use crate::num::{mean, sample_std, Real};
use crate::pair_screen::PairKey;
use crate::signal_engine::{fit_spread_model, SpreadModel, Thresholds};

/// Default number of sequential-search trials.
pub const DEFAULT_TRIALS: usize = 100;

/// One search axis: closed range plus an optional grid step. The grid
/// method requires steps; the sequential sampler treats every axis as
/// continuous and ignores them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec<F: Real> {
    pub low: F,
    pub high: F,
    pub step: Option<F>,
}

impl<F: Real> AxisSpec<F> {
    pub fn new(low: F, high: F, step: Option<F>) -> Result<Self> {
        let ordered = low < high; // also rejects NaN bounds
        if !ordered {
            return Err(Error::Config(format!(
                "axis range [{low}, {high}] is empty"
            )));
        }
        if let Some(s) = step {
            if s <= F::zero() {
                return Err(Error::Config(format!("axis step {s} must be positive")));
            }
        }
        Ok(Self { low, high, step })
    }

    /// Grid points `low, low+step, ..` up to and including `high` (within
    /// floating-point slack).
    pub fn grid_points(&self) -> Result<Vec<F>> {
        let step = self
            .step
            .ok_or_else(|| Error::Config("grid search needs a step on every axis".into()))?;
        let raw = ((self.high - self.low) / step).to64();
        let count = (raw + 1e-9).floor() as usize;
        Ok((0..=count)
            .map(|i| self.low + F::of(i as f64) * step)
            .collect())
    }
}

/// The (theta_in, theta_out) search box with the feasibility constraint
/// theta_out < theta_in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace<F: Real> {
    pub theta_in: AxisSpec<F>,
    pub theta_out: AxisSpec<F>,
}

impl<F: Real> SearchSpace<F> {
    pub fn new(theta_in: AxisSpec<F>, theta_out: AxisSpec<F>) -> Result<Self> {
        if theta_out.low < F::zero() {
            return Err(Error::Config("theta_out range must be nonnegative".into()));
        }
        let feasible = theta_out.low < theta_in.high;
        if !feasible {
            return Err(Error::Config(
                "infeasible space: no point satisfies theta_out < theta_in".into(),
            ));
        }
        Ok(Self {
            theta_in,
            theta_out,
        })
    }

    pub fn feasible(&self, theta_in: F, theta_out: F) -> bool {
        theta_in >= self.theta_in.low
            && theta_in <= self.theta_in.high
            && theta_out >= self.theta_out.low
            && theta_out <= self.theta_out.high
            && theta_out < theta_in
    }
}

impl<F: Real> Default for SearchSpace<F> {
    /// theta_in in [1.0, 2.5], theta_out in [0.0, 1.0], step 0.1 on both.
    fn default() -> Self {
        Self {
            theta_in: AxisSpec {
                low: F::of(1.0),
                high: F::of(2.5),
                step: Some(F::of(0.1)),
            },
            theta_out: AxisSpec {
                low: F::zero(),
                high: F::of(1.0),
                step: Some(F::of(0.1)),
            },
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial<F: Real> {
    pub thresholds: Thresholds<F>,
    pub objective: F,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Grid,
    Tpe,
}

impl SearchMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchMethod::Grid => "grid",
            SearchMethod::Tpe => "tpe",
        }
    }
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(SearchMethod::Grid),
            "tpe" => Ok(SearchMethod::Tpe),
            other => Err(Error::Config(format!(
                "unknown method {other:?}, expected grid or tpe"
            ))),
        }
    }
}

/// Raw outcome of one search: the argmax with deterministic tie-breaking
/// (smaller theta_in, then smaller theta_out) and the full trial history.
#[derive(Debug, Clone)]
pub struct SearchResult<F: Real> {
    pub best: Thresholds<F>,
    pub best_objective: F,
    pub history: Vec<Trial<F>>,
    pub method: SearchMethod,
}

pub(crate) fn pick_best<F: Real>(history: &[Trial<F>]) -> Option<Trial<F>> {
    let mut best: Option<Trial<F>> = None;
    for t in history {
        best = Some(match best {
            None => *t,
            Some(b) => {
                let better = t.objective > b.objective
                    || (t.objective == b.objective
                        && (t.thresholds.theta_in() < b.thresholds.theta_in()
                            || (t.thresholds.theta_in() == b.thresholds.theta_in()
                                && t.thresholds.theta_out() < b.thresholds.theta_out())));
                if better {
                    *t
                } else {
                    b
                }
            }
        });
    }
    best
}

/// Training objective: cumulative return of a backtest over the training
/// window with the frozen model. Deterministic; identical inputs give
/// bit-identical values.
pub fn objective<F: Real>(
    panel: &PricePanel<F>,
    pair: &PairKey,
    model: &SpreadModel<F>,
    thresholds: &Thresholds<F>,
    training: &WindowSpec,
    params: &BacktestParams<F>,
    metric: ObjectiveMetric,
) -> Result<F> {
    let report = run_backtest(panel, pair, model, thresholds, training, params)?;
    Ok(match metric {
        ObjectiveMetric::CumulativeReturn => report.cumulative_return,
        ObjectiveMetric::Sharpe => {
            if report.return_std == F::zero() {
                F::zero()
            } else {
                mean(&report.daily_returns) / report.return_std * F::of(252.0f64.sqrt())
            }
        }
    })
}

/// What the search maximizes. Cumulative return is the study objective;
/// Sharpe is a configuration extra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMetric {
    #[default]
    CumulativeReturn,
    Sharpe,
}

/// Where the spread model evaluated inside the optimizer comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelFit {
    /// Refit on the first half of the training window and score candidates
    /// on the second half.
    #[default]
    RefitHalf,
    /// Keep the selection-window model and score on the whole training
    /// window.
    Inherit,
}

/// Universe-level optimizer knobs.
#[derive(Debug, Clone)]
pub struct OptimizeParams<F: Real> {
    pub method: SearchMethod,
    /// Trial budget for the sequential method; the grid ignores it.
    pub budget: usize,
    pub seed: u64,
    pub model_fit: ModelFit,
    pub metric: ObjectiveMetric,
    pub backtest: BacktestParams<F>,
}

impl<F: Real> Default for OptimizeParams<F> {
    fn default() -> Self {
        Self {
            method: SearchMethod::Grid,
            budget: DEFAULT_TRIALS,
            seed: 0,
            model_fit: ModelFit::default(),
            metric: ObjectiveMetric::default(),
            backtest: BacktestParams::default(),
        }
    }
}

/// Optimization outcome for one pair. `best` is the final selection
/// (validation-aware when a validation window exists); `best_objective`
/// is the maximum training objective over the history. `degenerate` marks
/// pairs whose training window never crossed any threshold in the space.
#[derive(Debug, Clone)]
pub struct OptimizationResult<F: Real> {
    pub pair: PairKey,
    pub best: Thresholds<F>,
    pub best_objective: F,
    pub validation_objective: Option<F>,
    pub history: Vec<Trial<F>>,
    pub method: SearchMethod,
    pub degenerate: bool,
}

/// Universe-level output: per-pair results, per-pair failures, and the
/// cross-pair dispersion of the chosen thresholds.
#[derive(Debug, Clone)]
pub struct UniverseOptimization<F: Real> {
    pub results: Vec<OptimizationResult<F>>,
    pub failures: Vec<(PairKey, String)>,
    pub theta_in_mean: F,
    pub theta_in_std: F,
    pub theta_out_mean: F,
    pub theta_out_std: F,
}

/// FNV-1a over the run seed and the pair name, so per-pair randomness is
/// independent of pair ordering and parallel scheduling.
pub(crate) fn pair_seed(run_seed: u64, pair: &PairKey) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in run_seed
        .to_le_bytes()
        .iter()
        .chain(pair.x().as_bytes())
        .chain(&[0x1f])
        .chain(pair.y().as_bytes())
    {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Optimize every selection independently on the training window.
/// Parallel across pairs, sequential within a search; per-pair failures
/// are recorded and excluded from the aggregates.
pub fn optimize_universe<F: Real>(
    panel: &PricePanel<F>,
    selections: &[(PairKey, SpreadModel<F>)],
    splits: &SplitConfig,
    space: &SearchSpace<F>,
    params: &OptimizeParams<F>,
) -> Result<UniverseOptimization<F>> {
    if selections.is_empty() {
        return Err(Error::Data("no pairs selected for optimization".into()));
    }
    splits.validate()?;

    let outcomes: Vec<(PairKey, Result<OptimizationResult<F>>)> = selections
        .par_iter()
        .map(|(pair, model)| {
            (
                pair.clone(),
                optimize_pair(panel, pair, model, splits, space, params),
            )
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (pair, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push((pair, e.to_string())),
        }
    }
    results.sort_by(|a, b| a.pair.cmp(&b.pair));

    let ins: Vec<F> = results.iter().map(|r| r.best.theta_in()).collect();
    let outs: Vec<F> = results.iter().map(|r| r.best.theta_out()).collect();
    Ok(UniverseOptimization {
        theta_in_mean: mean(&ins),
        theta_in_std: sample_std(&ins),
        theta_out_mean: mean(&outs),
        theta_out_std: sample_std(&outs),
        results,
        failures,
    })
}

fn optimize_pair<F: Real>(
    panel: &PricePanel<F>,
    pair: &PairKey,
    selection_model: &SpreadModel<F>,
    splits: &SplitConfig,
    space: &SearchSpace<F>,
    params: &OptimizeParams<F>,
) -> Result<OptimizationResult<F>> {
    let (model, eval_window) = match params.model_fit {
        ModelFit::Inherit => (selection_model.clone(), splits.training),
        ModelFit::RefitHalf => {
            let training = panel.slice(&splits.training)?;
            let dates = training.dates();
            let half = dates.len() / 2;
            if half < crate::signal_engine::MIN_FIT_POINTS || dates.len() - half < 2 {
                return Err(Error::TooShort {
                    needed: 2 * crate::signal_engine::MIN_FIT_POINTS,
                    got: dates.len(),
                });
            }
            let fit_window = WindowSpec::new(dates[0], dates[half - 1])?;
            let eval_window = WindowSpec::new(dates[half], dates[dates.len() - 1])?;
            (fit_spread_model(panel, pair, &fit_window)?, eval_window)
        }
    };

    let mut eval = |th: &Thresholds<F>| {
        objective(
            panel,
            pair,
            &model,
            th,
            &eval_window,
            &params.backtest,
            params.metric,
        )
    };
    let search = match params.method {
        SearchMethod::Grid => grid_search(space, &mut eval)?,
        SearchMethod::Tpe => {
            let seed = pair_seed(params.seed, pair);
            tpe_search(space, &mut eval, params.budget, seed)?
        }
    };

    let degenerate = search.history.iter().all(|t| t.objective == F::zero());

    // With a validation window, re-score the top five training candidates
    // there and let the validation winner pick the final thresholds.
    let (best, validation_objective) = match splits.validation {
        None => (search.best, None),
        Some(validation) => {
            let mut ranked = search.history.clone();
            ranked.sort_by(|a, b| {
                b.objective
                    .partial_cmp(&a.objective)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| {
                        a.thresholds
                            .theta_in()
                            .partial_cmp(&b.thresholds.theta_in())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .then_with(|| {
                        a.thresholds
                            .theta_out()
                            .partial_cmp(&b.thresholds.theta_out())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
            });
            ranked.dedup_by(|a, b| a.thresholds == b.thresholds);
            let mut chosen: Option<(Thresholds<F>, F)> = None;
            for trial in ranked.iter().take(5) {
                let score = objective(
                    panel,
                    pair,
                    &model,
                    &trial.thresholds,
                    &validation,
                    &params.backtest,
                    params.metric,
                )?;
                let replace = match &chosen {
                    None => true,
                    Some((_, s)) => score > *s,
                };
                if replace {
                    chosen = Some((trial.thresholds, score));
                }
            }
            let (th, score) = chosen.expect("at least one candidate");
            (th, Some(score))
        }
    };

    Ok(OptimizationResult {
        pair: pair.clone(),
        best,
        best_objective: search.best_objective,
        validation_objective,
        history: search.history,
        method: search.method,
        degenerate,
    })
}
