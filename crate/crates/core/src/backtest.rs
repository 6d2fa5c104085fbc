//! Daily strategy returns and cumulative performance under point-in-time
//! discipline.
//!
//! The temporal layout is pair-selection -> training -> (validation) ->
//! test, strictly ordered and non-overlapping. `run_backtest` refuses any
//! window that does not strictly follow the model's fit window: a PIT
//! violation is an error, never a warning.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::{compute_returns, PricePanel, WindowSpec};
use crate::num::{mean, sample_std, Real};
use crate::pair_screen::PairKey;
use crate::signal_engine::{generate_signals_with, ExitRule, SignalSeries, SpreadModel, Thresholds};

/// The study's temporal segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitConfig {
    pub pair_selection: WindowSpec,
    pub training: WindowSpec,
    pub validation: Option<WindowSpec>,
    pub test: WindowSpec,
}

impl SplitConfig {
    /// Validate strict ordering: selection < training < (validation) < test.
    pub fn validate(&self) -> Result<()> {
        let mut windows = vec![("pair_selection", self.pair_selection), ("training", self.training)];
        if let Some(v) = self.validation {
            windows.push(("validation", v));
        }
        windows.push(("test", self.test));
        for w in windows.windows(2) {
            let (name_a, a) = w[0];
            let (name_b, b) = w[1];
            if !a.strictly_precedes(&b) {
                return Err(Error::Pit(format!(
                    "{name_a} window {}..{} must end before {name_b} window {}..{}",
                    a.start(),
                    a.end(),
                    b.start(),
                    b.end()
                )));
            }
        }
        Ok(())
    }
}

/// How daily returns are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnMode {
    /// Product of (1 + r) minus one.
    #[default]
    Compounded,
    /// Plain sum of daily returns.
    Arithmetic,
}

/// Position sizing across the two legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LegWeighting {
    /// Half the notional on each leg; gross exposure 1 when in a position.
    #[default]
    EqualNotional,
    /// One share of the first leg against beta shares of the second, the
    /// exact spread portfolio.
    BetaShares,
}

/// Backtest knobs. Costs default to zero (none are modeled by default);
/// `cost_per_trade` is a return fraction charged once at entry and once at
/// exit when set.
#[derive(Debug, Clone, Copy)]
pub struct BacktestParams<F: Real> {
    pub mode: ReturnMode,
    pub weighting: LegWeighting,
    pub exit_rule: ExitRule,
    pub cost_per_trade: F,
}

impl<F: Real> Default for BacktestParams<F> {
    fn default() -> Self {
        Self {
            mode: ReturnMode::default(),
            weighting: LegWeighting::default(),
            exit_rule: ExitRule::default(),
            cost_per_trade: F::zero(),
        }
    }
}

/// Single-pair backtest output.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport<F: Real> {
    pub pair: PairKey,
    /// One return per day after the window's first date.
    pub daily_returns: Vec<F>,
    /// Aggregated per the requested mode.
    pub cumulative_return: F,
    pub n_trades: usize,
    pub return_std: F,
    /// Most negative peak-to-trough drawdown of the compounded equity
    /// curve, in [-1, 0].
    pub max_drawdown: F,
    pub signals: SignalSeries<F>,
}

/// Daily portfolio returns from a position series and per-leg returns:
/// `r_t = position_t * 0.5 * (r_y - r_x)`, the equal-notional convention.
/// Position +1 is short the first leg, long the second. The return vectors
/// have one fewer entry than the signal dates.
pub fn pair_daily_returns<F: Real>(
    signals: &SignalSeries<F>,
    x_returns: &[F],
    y_returns: &[F],
) -> Result<Vec<F>> {
    if x_returns.len() != y_returns.len() {
        return Err(Error::LengthMismatch {
            left: x_returns.len(),
            right: y_returns.len(),
        });
    }
    if signals.positions.len() != x_returns.len() + 1 {
        return Err(Error::LengthMismatch {
            left: signals.positions.len(),
            right: x_returns.len() + 1,
        });
    }
    let half = F::of(0.5);
    Ok((0..x_returns.len())
        .map(|i| {
            let pos = F::of(signals.positions[i + 1] as f64);
            pos * half * (y_returns[i] - x_returns[i])
        })
        .collect())
}

/// Aggregate daily returns. Compounded mode requires every return > -1.
pub fn cumulative_return<F: Real>(daily: &[F], mode: ReturnMode) -> Result<F> {
    match mode {
        ReturnMode::Compounded => {
            let mut acc = F::one();
            for &r in daily {
                if r <= -F::one() {
                    return Err(Error::Numerical(format!(
                        "daily return {r} <= -1 cannot compound"
                    )));
                }
                acc = acc * (F::one() + r);
            }
            Ok(acc - F::one())
        }
        ReturnMode::Arithmetic => Ok(daily.iter().fold(F::zero(), |acc, &r| acc + r)),
    }
}

/// Compounded equity curve starting at 1.
pub fn equity_curve<F: Real>(daily: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(daily.len());
    let mut acc = F::one();
    for &r in daily {
        acc = acc * (F::one() + r);
        out.push(acc);
    }
    out
}

/// Most negative drawdown of the compounded equity curve, in [-1, 0].
pub fn max_drawdown<F: Real>(daily: &[F]) -> F {
    let mut peak = F::one();
    let mut worst = F::zero();
    let mut acc = F::one();
    for &r in daily {
        acc = acc * (F::one() + r);
        peak = peak.max(acc);
        worst = worst.min(acc / peak - F::one());
    }
    worst
}

/// Backtest one pair over `window` with a frozen model. The model's fit
/// window must end strictly before the evaluated data begins.
pub fn run_backtest<F: Real>(
    panel: &PricePanel<F>,
    pair: &PairKey,
    model: &SpreadModel<F>,
    thresholds: &Thresholds<F>,
    window: &WindowSpec,
    params: &BacktestParams<F>,
) -> Result<BacktestReport<F>> {
    let sliced = panel.slice(window)?;
    let eval_start = sliced.dates()[0];
    if model.fit_window.end() >= eval_start {
        return Err(Error::Pit(format!(
            "model fit window ends {} but evaluation starts {}",
            model.fit_window.end(),
            eval_start
        )));
    }
    let x = sliced.series(pair.x())?;
    let y = sliced.series(pair.y())?;
    let signals = generate_signals_with(model, &x, &y, sliced.dates(), thresholds, params.exit_rule)?;

    let mut daily = if sliced.n_dates() < 2 {
        Vec::new()
    } else {
        match params.weighting {
            LegWeighting::EqualNotional => {
                let rets = compute_returns(&sliced)?;
                let cx = rets.ticker_index(pair.x()).expect("ticker present");
                let cy = rets.ticker_index(pair.y()).expect("ticker present");
                pair_daily_returns(&signals, &rets.column(cx), &rets.column(cy))?
            }
            LegWeighting::BetaShares => beta_share_returns(&signals, &x, &y, model.beta),
        }
    };
    apply_trade_costs(&mut daily, &signals, params.cost_per_trade);

    let cumulative = cumulative_return(&daily, params.mode)?;
    Ok(BacktestReport {
        pair: pair.clone(),
        cumulative_return: cumulative,
        n_trades: signals.trades.len(),
        return_std: sample_std(&daily),
        max_drawdown: max_drawdown(&daily),
        daily_returns: daily,
        signals,
    })
}

/// Spread-portfolio returns: short one share of x against beta shares of
/// y (direction given by the position), normalized by the position's gross
/// notional at the previous close.
fn beta_share_returns<F: Real>(signals: &SignalSeries<F>, x: &[F], y: &[F], beta: F) -> Vec<F> {
    let mut out = Vec::with_capacity(x.len().saturating_sub(1));
    for t in 1..x.len() {
        let pos = F::of(signals.positions[t] as f64);
        if pos == F::zero() {
            out.push(F::zero());
            continue;
        }
        let pnl = pos * (beta * (y[t] - y[t - 1]) - (x[t] - x[t - 1]));
        let gross = x[t - 1] + beta.abs() * y[t - 1];
        out.push(pnl / gross);
    }
    out
}

/// Charge `cost` once on each entry day and once on each exit day.
fn apply_trade_costs<F: Real>(daily: &mut [F], signals: &SignalSeries<F>, cost: F) {
    if cost == F::zero() || daily.is_empty() {
        return;
    }
    for t in 1..signals.positions.len() {
        let entered = signals.positions[t] != 0 && signals.positions[t - 1] == 0;
        let exited = signals.positions[t] == 0 && signals.positions[t - 1] != 0;
        if entered || exited {
            daily[t - 1] = daily[t - 1] - cost;
        }
    }
    // Forced close on the final date.
    if signals.positions.last().copied().unwrap_or(0) != 0 {
        let last = daily.len() - 1;
        daily[last] = daily[last] - cost;
    }
}

/// Cross-pair summary statistics of cumulative returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats<F: Real> {
    pub mean: F,
    pub std: F,
    pub min: F,
    pub max: F,
    pub count: usize,
}

impl<F: Real> SummaryStats<F> {
    pub fn from_values(values: &[F]) -> Self {
        if values.is_empty() {
            return Self {
                mean: F::zero(),
                std: F::zero(),
                min: F::zero(),
                max: F::zero(),
                count: 0,
            };
        }
        let mut lo = values[0];
        let mut hi = values[0];
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self {
            mean: mean(values),
            std: sample_std(values),
            min: lo,
            max: hi,
            count: values.len(),
        }
    }
}

/// Portfolio-level backtest output. Reports come back sorted by pair key;
/// per-pair failures are recorded, excluded from the aggregates, and
/// counted.
#[derive(Debug, Clone)]
pub struct PortfolioReport<F: Real> {
    pub reports: Vec<BacktestReport<F>>,
    pub failures: Vec<(PairKey, String)>,
    pub stats: SummaryStats<F>,
}

/// Backtest every selection over `window` and aggregate. Parallel across
/// pairs; the merge is deterministic (sorted by pair key).
pub fn run_portfolio<F: Real>(
    panel: &PricePanel<F>,
    selections: &[(PairKey, SpreadModel<F>, Thresholds<F>)],
    window: &WindowSpec,
    params: &BacktestParams<F>,
) -> Result<PortfolioReport<F>> {
    if selections.is_empty() {
        return Err(Error::Data("no pairs selected for the portfolio".into()));
    }
    let outcomes: Vec<(PairKey, Result<BacktestReport<F>>)> = selections
        .par_iter()
        .map(|(pair, model, thresholds)| {
            (
                pair.clone(),
                run_backtest(panel, pair, model, thresholds, window, params),
            )
        })
        .collect();

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (pair, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push((pair, e.to_string())),
        }
    }
    reports.sort_by(|a, b| a.pair.cmp(&b.pair));
    let values: Vec<F> = reports.iter().map(|r| r.cumulative_return).collect();
    Ok(PortfolioReport {
        stats: SummaryStats::from_values(&values),
        reports,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn d(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + chrono::Duration::days(i as i64)
    }

    fn window(a: usize, b: usize) -> WindowSpec {
        WindowSpec::new(d(a), d(b)).unwrap()
    }

    fn signals_with_positions(positions: Vec<i8>) -> SignalSeries<f64> {
        SignalSeries {
            dates: (0..positions.len()).map(d).collect(),
            z_scores: vec![0.0; positions.len()],
            positions,
            trades: vec![],
        }
    }

    #[test]
    fn split_ordering_enforced() {
        let ok = SplitConfig {
            pair_selection: window(0, 9),
            training: window(10, 19),
            validation: Some(window(20, 24)),
            test: window(25, 30),
        };
        assert!(ok.validate().is_ok());

        let overlapping = SplitConfig {
            pair_selection: window(0, 10),
            training: window(10, 19),
            validation: None,
            test: window(20, 30),
        };
        assert!(matches!(overlapping.validate(), Err(Error::Pit(_))));
    }

    #[test]
    fn flat_positions_zero_returns() {
        let sig = signals_with_positions(vec![0, 0, 0, 0]);
        let r = pair_daily_returns(&sig, &[0.01, 0.02, -0.01], &[0.0, 0.01, 0.02]).unwrap();
        assert_eq!(r, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn long_spread_return_sign() {
        let sig = signals_with_positions(vec![0, 1]);
        let r = pair_daily_returns(&sig, &[0.01], &[0.02]).unwrap();
        assert_relative_eq!(r[0], 0.005, epsilon = 1e-15);

        let sig = signals_with_positions(vec![0, -1]);
        let r = pair_daily_returns(&sig, &[0.01], &[0.02]).unwrap();
        assert_relative_eq!(r[0], -0.005, epsilon = 1e-15);
    }

    #[test]
    fn cumulative_modes() {
        let daily = [0.01f64, -0.005];
        assert_relative_eq!(
            cumulative_return(&daily, ReturnMode::Compounded).unwrap(),
            0.00495,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            cumulative_return(&daily, ReturnMode::Arithmetic).unwrap(),
            0.005,
            epsilon = 1e-15
        );
        assert_eq!(
            cumulative_return(&[] as &[f64], ReturnMode::Compounded).unwrap(),
            0.0
        );
        assert!(cumulative_return(&[-1.5f64], ReturnMode::Compounded).is_err());
    }

    #[test]
    fn drawdown_in_range() {
        let daily = [0.10f64, -0.20, 0.05, -0.02];
        let dd = max_drawdown(&daily);
        assert!((-1.0..=0.0).contains(&dd));
        assert_relative_eq!(dd, -0.2, epsilon = 1e-12);
    }

    fn pair_panel(x: &[f64], y: &[f64]) -> PricePanel<f64> {
        let dates: Vec<NaiveDate> = (0..x.len()).map(d).collect();
        let mut prices = Vec::new();
        for (xi, yi) in x.iter().zip(y.iter()) {
            prices.push(*xi);
            prices.push(*yi);
        }
        PricePanel::new(dates, vec!["AA".into(), "BB".into()], prices).unwrap()
    }

    /// Deterministic panel where the spread widens then converges.
    fn convergence_panel(n_fit: usize) -> (PricePanel<f64>, SpreadModel<f64>, PairKey) {
        let pair = PairKey::new("AA", "BB").unwrap();
        let n = n_fit + 12;
        let y: Vec<f64> = (0..n).map(|i| 100.0 + 0.1 * i as f64).collect();
        let mut x: Vec<f64> = y.iter().map(|v| 1.5 * v).collect();
        // A +/-1 unit oscillation during the fit window pins sigma_z;
        // afterwards a 6-unit divergence converges back linearly.
        for (i, xi) in x.iter_mut().take(n_fit).enumerate() {
            *xi += if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        for k in 0..12 {
            x[n_fit + k] += (6.0 - k as f64 * 0.5).max(0.0);
        }
        let panel = pair_panel(&x, &y);
        let fit_window = window(0, n_fit - 1);
        let model = crate::signal_engine::fit_spread_model(&panel, &pair, &fit_window).unwrap();
        (panel, model, pair)
    }

    #[test]
    fn pit_violation_is_an_error() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        // Evaluation window overlaps the fit window.
        let overlap = window(10, 41);
        let err = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &overlap,
            &BacktestParams::default(),
        );
        assert!(matches!(err, Err(Error::Pit(_))));
    }

    #[test]
    fn quiet_window_zero_trades_zero_return() {
        let pair = PairKey::new("AA", "BB").unwrap();
        let y: Vec<f64> = (0..60).map(|i| 100.0 + 0.1 * i as f64).collect();
        let mut x: Vec<f64> = y.iter().map(|v| 1.5 * v).collect();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let panel = pair_panel(&x, &y);
        let model = crate::signal_engine::fit_spread_model(&panel, &pair, &window(0, 29)).unwrap();
        let th = Thresholds::new(5.0, 0.5).unwrap();
        let report = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(30, 59),
            &BacktestParams::default(),
        )
        .unwrap();
        assert_eq!(report.n_trades, 0);
        assert_eq!(report.cumulative_return, 0.0);
        assert!(report.daily_returns.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn convergence_trade_is_profitable() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let report = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(30, 41),
            &BacktestParams::default(),
        )
        .unwrap();
        assert!(report.n_trades >= 1);
        assert!(
            report.cumulative_return > 0.0,
            "convergence capture should profit, got {}",
            report.cumulative_return
        );
    }

    #[test]
    fn flipped_roles_still_profit_on_convergence() {
        // Same price paths, but ticker names arranged so the regression
        // roles swap: the spread and every z-score flip sign, entries
        // mirror, and the convergence trade stays profitable.
        let n_fit = 30;
        let n = n_fit + 12;
        let y: Vec<f64> = (0..n).map(|i| 100.0 + 0.1 * i as f64).collect();
        let mut x: Vec<f64> = y.iter().map(|v| 1.5 * v).collect();
        for (i, xi) in x.iter_mut().take(n_fit).enumerate() {
            *xi += if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        for k in 0..12 {
            x[n_fit + k] += (6.0 - k as f64 * 0.5).max(0.0);
        }
        // "AA" holds the y-series now, so the pair (AA, BB) regresses the
        // clean leg on the noisy one.
        let dates: Vec<NaiveDate> = (0..n).map(d).collect();
        let mut prices = Vec::new();
        for (yi, xi) in y.iter().zip(x.iter()) {
            prices.push(*yi);
            prices.push(*xi);
        }
        let panel = PricePanel::new(dates, vec!["AA".into(), "BB".into()], prices).unwrap();
        let pair = PairKey::new("AA", "BB").unwrap();
        let model = crate::signal_engine::fit_spread_model(&panel, &pair, &window(0, n_fit - 1)).unwrap();
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let report = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(n_fit, n - 1),
            &BacktestParams::default(),
        )
        .unwrap();
        assert!(report.n_trades >= 1);
        assert!(report.cumulative_return > 0.0);
    }

    #[test]
    fn beta_share_weighting_also_profits() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let params = BacktestParams {
            weighting: LegWeighting::BetaShares,
            ..BacktestParams::default()
        };
        let report = run_backtest(&panel, &pair, &model, &th, &window(30, 41), &params).unwrap();
        assert!(report.cumulative_return > 0.0);
    }

    #[test]
    fn trade_costs_reduce_returns() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let free = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(30, 41),
            &BacktestParams::default(),
        )
        .unwrap();
        let costly = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(30, 41),
            &BacktestParams {
                cost_per_trade: 0.001,
                ..BacktestParams::default()
            },
        )
        .unwrap();
        assert!(costly.cumulative_return < free.cumulative_return);
    }

    #[test]
    fn pit_truncation_bit_equality() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let eval = window(30, 38);
        let full = run_backtest(&panel, &pair, &model, &th, &eval, &BacktestParams::default())
            .unwrap();
        let truncated_panel = panel.slice(&window(0, 38)).unwrap();
        let trunc = run_backtest(
            &truncated_panel,
            &pair,
            &model,
            &th,
            &eval,
            &BacktestParams::default(),
        )
        .unwrap();
        assert_eq!(full, trunc);
    }

    #[test]
    fn portfolio_single_pair_stats() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let selections = vec![(pair.clone(), model.clone(), th)];
        let report = run_portfolio(
            &panel,
            &selections,
            &window(30, 41),
            &BacktestParams::default(),
        )
        .unwrap();
        assert_eq!(report.stats.count, 1);
        assert_eq!(report.stats.mean, report.reports[0].cumulative_return);
        assert_eq!(report.stats.std, 0.0);
        assert_eq!(report.stats.min, report.stats.max);
    }

    #[test]
    fn portfolio_identical_copies_zero_dispersion() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let selections: Vec<_> = (0..5).map(|_| (pair.clone(), model.clone(), th)).collect();
        let report = run_portfolio(
            &panel,
            &selections,
            &window(30, 41),
            &BacktestParams::default(),
        )
        .unwrap();
        assert_eq!(report.stats.count, 5);
        assert_relative_eq!(report.stats.std, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn portfolio_records_failures() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let mut bad_model = model.clone();
        bad_model.fit_window = window(0, 60); // overlaps evaluation
        let selections = vec![
            (pair.clone(), model, th),
            (pair.clone(), bad_model, th),
        ];
        let report = run_portfolio(
            &panel,
            &selections,
            &window(30, 41),
            &BacktestParams::default(),
        )
        .unwrap();
        assert_eq!(report.reports.len(), 1);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.stats.count, 1);
    }

    #[test]
    fn single_date_window_yields_empty_report() {
        let (panel, model, pair) = convergence_panel(30);
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let report = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(30, 30),
            &BacktestParams::default(),
        )
        .unwrap();
        assert!(report.daily_returns.is_empty());
        assert_eq!(report.cumulative_return, 0.0);
        assert_eq!(report.n_trades, 0);
    }

    #[test]
    fn full_path_runs_in_f32() {
        let n_fit = 30usize;
        let n = n_fit + 12;
        let y: Vec<f32> = (0..n).map(|i| 100.0 + 0.1 * i as f32).collect();
        let mut x: Vec<f32> = y.iter().map(|v| 1.5 * v).collect();
        for (i, xi) in x.iter_mut().take(n_fit).enumerate() {
            *xi += if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        for k in 0..12 {
            x[n_fit + k] += (6.0 - k as f32 * 0.5).max(0.0);
        }
        let dates: Vec<NaiveDate> = (0..n).map(d).collect();
        let mut prices = Vec::new();
        for (xi, yi) in x.iter().zip(y.iter()) {
            prices.push(*xi);
            prices.push(*yi);
        }
        let panel =
            PricePanel::<f32>::new(dates, vec!["AA".into(), "BB".into()], prices).unwrap();
        let pair = PairKey::new("AA", "BB").unwrap();
        let model =
            crate::signal_engine::fit_spread_model(&panel, &pair, &window(0, n_fit - 1)).unwrap();
        let th = Thresholds::new(2.0f32, 0.5).unwrap();
        let report = run_backtest(
            &panel,
            &pair,
            &model,
            &th,
            &window(n_fit, n - 1),
            &BacktestParams::default(),
        )
        .unwrap();
        assert!(report.n_trades >= 1);
        assert!(report.cumulative_return > 0.0);
    }

    proptest! {
        // Compounded return dominates arithmetic minus the second-order
        // correction on small returns.
        #[test]
        fn compounding_bound(daily in proptest::collection::vec(-0.05f64..0.05, 0..120)) {
            let comp = cumulative_return(&daily, ReturnMode::Compounded).unwrap();
            let arith = cumulative_return(&daily, ReturnMode::Arithmetic).unwrap();
            let second: f64 = daily.iter().map(|r| r * r).sum();
            let third: f64 = daily.iter().map(|r| r.abs().powi(3)).sum();
            prop_assert!(comp >= arith - 0.5 * second - third - 1e-12);
        }

        // The compounded aggregate matches the equity curve's endpoint.
        #[test]
        fn equity_endpoint_matches(daily in proptest::collection::vec(-0.2f64..0.2, 1..60)) {
            let comp = cumulative_return(&daily, ReturnMode::Compounded).unwrap();
            let curve = equity_curve(&daily);
            prop_assert!((curve.last().unwrap() - (1.0 + comp)).abs() < 1e-12);
        }
    }
}
