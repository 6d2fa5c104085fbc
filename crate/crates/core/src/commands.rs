//! Pipeline orchestration behind the CLI verbs: screen -> coint ->
//! optimize -> backtest, plus the plot-bundle report. Each standalone verb
//! picks up its inputs from the previous phase's files in the output
//! directory; `pipeline` runs all four in memory and writes a hashed run
//! manifest. Phase boundaries are barriers; a failing phase aborts with a
//! phase-tagged error and the manifest is flagged incomplete.

use std::fs;
use std::path::{Path, PathBuf};

use crate::backtest::{cumulative_return, run_portfolio, PortfolioReport, ReturnMode, SplitConfig};
use crate::cointegration::{coint_filter, CointRun};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::market_data::{
    compute_returns, load_panel, transformed_returns, ReturnPanel, DEFAULT_LOG_EPSILON,
};
use crate::optimizer::{optimize_universe, UniverseOptimization};
use crate::pair_screen::{
    correlation_histogram, enumerate_pairs, sample_pairs, screen_universe, PairKey, ScreenResult,
};
use crate::report;
use crate::report::{ManifestBuilder, PortfolioSummary, StrategyBlock, WindowJson};
use crate::signal_engine::{fit_spread_model, SpreadModel, Thresholds};
use crate::Panel;

/// Loaded panel plus resolved windows; the starting point of every verb.
pub struct Inputs {
    pub panel: Panel,
    pub splits: SplitConfig,
    pub dropped_tickers: usize,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    cfg.validate()?;
    let loaded = load_panel::<f64>(&cfg.data_path, &cfg.load_options())?;
    let splits = cfg.resolve_splits(loaded.panel.dates())?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;
    Ok(Inputs {
        panel: loaded.panel,
        splits,
        dropped_tickers: loaded.dropped.len(),
    })
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

// --- phase implementations (compute + write) ---

fn phase_screen(
    cfg: &RunConfig,
    panel: &Panel,
    splits: &SplitConfig,
) -> Result<Vec<ScreenResult<f64>>> {
    let selection = panel.slice(&splits.pair_selection)?;
    let returns: ReturnPanel<f64> = if cfg.use_transform {
        transformed_returns(&selection, cfg.transform_shift, DEFAULT_LOG_EPSILON)?
    } else {
        compute_returns(&selection)?
    };
    let mut pairs = enumerate_pairs(selection.tickers())?;
    if let Some(k) = cfg.screen_sample {
        if k < pairs.len() {
            pairs = sample_pairs(&pairs, k, cfg.seed)?;
        }
    }
    let results = screen_universe(
        &returns,
        &selection.date_window(),
        cfg.correlation_threshold,
        Some(&pairs),
    )?;
    report::write_screen_results(&out_path(cfg, "screen_results.csv"), &results)?;
    let hist = correlation_histogram(&results);
    report::write_histogram(&out_path(cfg, "correlation_histogram.csv"), &hist)?;
    Ok(results)
}

fn phase_coint(
    cfg: &RunConfig,
    panel: &Panel,
    splits: &SplitConfig,
    survivors: &[PairKey],
) -> Result<CointRun<f64>> {
    let run = coint_filter(panel, &splits.pair_selection, survivors, &cfg.coint)?;
    report::write_coint_results(&out_path(cfg, "coint_results.csv"), &run)?;
    Ok(run)
}

fn phase_optimize(
    cfg: &RunConfig,
    panel: &Panel,
    splits: &SplitConfig,
    pairs: &[PairKey],
) -> Result<UniverseOptimization<f64>> {
    if pairs.is_empty() {
        return Err(Error::Data(
            "no cointegrated pairs to optimize; lower the thresholds or widen the data".into(),
        ));
    }
    // Selection-window models; the optimizer refits per its mode.
    let mut selections: Vec<(PairKey, SpreadModel<f64>)> = Vec::new();
    let mut failures: Vec<(PairKey, String)> = Vec::new();
    for pair in pairs {
        match fit_spread_model(panel, pair, &splits.pair_selection) {
            Ok(model) => selections.push((pair.clone(), model)),
            Err(e) => failures.push((pair.clone(), e.to_string())),
        }
    }
    if selections.is_empty() {
        return Err(Error::Data("every selected pair failed model fitting".into()));
    }
    let mut universe = optimize_universe(
        panel,
        &selections,
        splits,
        &cfg.search_space,
        &cfg.optimize_params(),
    )?;
    universe.failures.extend(failures);
    report::write_optimization_results(
        &out_path(cfg, "optimization_results.csv"),
        &universe.results,
    )?;
    for result in &universe.results {
        report::write_trials(
            &out_path(cfg, &format!("trials_{}.csv", result.pair.label())),
            result,
        )?;
    }
    Ok(universe)
}

struct BacktestPhase {
    summary: PortfolioSummary,
    per_pair_files: Vec<PathBuf>,
}

/// Counting context carried into the summary.
#[derive(Debug, Clone, Copy, Default)]
struct PhaseCounts {
    pairs_total: usize,
    pairs_passed: usize,
    pairs_cointegrated: usize,
}

fn phase_backtest(
    cfg: &RunConfig,
    panel: &Panel,
    splits: &SplitConfig,
    chosen: &[(PairKey, f64, f64)],
    counts: PhaseCounts,
) -> Result<BacktestPhase> {
    if chosen.is_empty() {
        return Err(Error::Data("no optimized pairs to backtest".into()));
    }
    // The test-window model is refit on the full training window: the most
    // recent data that still strictly precedes the test window.
    let mut failures: Vec<(PairKey, String)> = Vec::new();
    let mut base_sel = Vec::new();
    let mut opt_sel = Vec::new();
    let mut theta_by_pair: Vec<(PairKey, f64, f64)> = Vec::new();
    for (pair, theta_in, theta_out) in chosen {
        let model = match fit_spread_model(panel, pair, &splits.training) {
            Ok(m) => m,
            Err(e) => {
                failures.push((pair.clone(), e.to_string()));
                continue;
            }
        };
        let thresholds = match Thresholds::new(*theta_in, *theta_out) {
            Ok(t) => t,
            Err(e) => {
                failures.push((pair.clone(), e.to_string()));
                continue;
            }
        };
        base_sel.push((pair.clone(), model.clone(), cfg.baseline));
        opt_sel.push((pair.clone(), model, thresholds));
        theta_by_pair.push((pair.clone(), *theta_in, *theta_out));
    }
    if opt_sel.is_empty() {
        return Err(Error::Data(
            "every pair failed test-window model fitting".into(),
        ));
    }
    let params = cfg.backtest_params();
    let baseline = run_portfolio(panel, &base_sel, &splits.test, &params)?;
    let optimized = run_portfolio(panel, &opt_sel, &splits.test, &params)?;

    let mut per_pair_files = Vec::new();
    for rep in &optimized.reports {
        let label = rep.pair.label();
        let signals_path = out_path(cfg, &format!("signals_{label}.csv"));
        report::write_signals(&signals_path, &rep.signals)?;
        let trades_path = out_path(cfg, &format!("trades_{label}.csv"));
        report::write_trades(&trades_path, &rep.signals)?;
        let backtest_path = out_path(cfg, &format!("backtest_{label}.csv"));
        report::write_backtest(&backtest_path, rep)?;
        per_pair_files.extend([signals_path, trades_path, backtest_path]);
    }

    let summary = build_summary(
        cfg,
        splits,
        counts,
        &theta_by_pair,
        &baseline,
        &optimized,
        failures.len() + baseline.failures.len() + optimized.failures.len(),
    );
    report::write_summary(&out_path(cfg, "portfolio_summary.json"), &summary)?;
    Ok(BacktestPhase {
        summary,
        per_pair_files,
    })
}

fn strategy_block(portfolio: &PortfolioReport<f64>) -> StrategyBlock {
    let both = |mode: ReturnMode| {
        let values: Vec<f64> = portfolio
            .reports
            .iter()
            .map(|r| cumulative_return(&r.daily_returns, mode).unwrap_or(f64::NAN))
            .collect();
        crate::backtest::SummaryStats::from_values(&values).into()
    };
    StrategyBlock {
        compounded: both(ReturnMode::Compounded),
        arithmetic: both(ReturnMode::Arithmetic),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_summary(
    cfg: &RunConfig,
    splits: &SplitConfig,
    counts: PhaseCounts,
    theta_by_pair: &[(PairKey, f64, f64)],
    baseline: &PortfolioReport<f64>,
    optimized: &PortfolioReport<f64>,
    failures: usize,
) -> PortfolioSummary {
    let window_json = |w: &crate::market_data::WindowSpec| WindowJson {
        start: w.start().to_string(),
        end: w.end().to_string(),
    };
    let mut windows = vec![
        ("pair_selection".to_string(), window_json(&splits.pair_selection)),
        ("training".to_string(), window_json(&splits.training)),
    ];
    if let Some(v) = &splits.validation {
        windows.push(("validation".to_string(), window_json(v)));
    }
    windows.push(("test".to_string(), window_json(&splits.test)));

    let ins: Vec<f64> = theta_by_pair.iter().map(|(_, i, _)| *i).collect();
    let outs: Vec<f64> = theta_by_pair.iter().map(|(_, _, o)| *o).collect();
    let in_stats = crate::backtest::SummaryStats::from_values(&ins);
    let out_stats = crate::backtest::SummaryStats::from_values(&outs);

    let find = |reports: &[crate::backtest::BacktestReport<f64>], pair: &PairKey| {
        reports.iter().find(|r| &r.pair == pair).map(|r| {
            (
                cumulative_return(&r.daily_returns, cfg.return_mode).unwrap_or(f64::NAN),
                r.n_trades,
            )
        })
    };
    let pairs = theta_by_pair
        .iter()
        .map(|(pair, theta_in, theta_out)| {
            let base = find(&baseline.reports, pair);
            let opt = find(&optimized.reports, pair);
            report::PairRow {
                ticker_x: pair.x().to_string(),
                ticker_y: pair.y().to_string(),
                theta_in: *theta_in,
                theta_out: *theta_out,
                training_objective: None,
                baseline_return: base.map(|(r, _)| r),
                optimized_return: opt.map(|(r, _)| r),
                baseline_trades: base.map(|(_, n)| n),
                optimized_trades: opt.map(|(_, n)| n),
            }
        })
        .collect();

    PortfolioSummary {
        seed: cfg.seed,
        method: cfg.method.as_str().to_string(),
        budget: cfg.budget,
        correlation_threshold: cfg.correlation_threshold,
        cointegration_threshold: cfg.cointegration_threshold,
        return_mode: match cfg.return_mode {
            ReturnMode::Compounded => "compounded".into(),
            ReturnMode::Arithmetic => "arithmetic".into(),
        },
        windows,
        counts: report::CountsBlock {
            pairs_total: counts.pairs_total,
            pairs_passed_correlation: counts.pairs_passed,
            pairs_cointegrated: counts.pairs_cointegrated,
            pairs_optimized: theta_by_pair.len(),
            pairs_backtested: optimized.reports.len(),
            failures,
        },
        thresholds: report::ThresholdStats {
            theta_in_mean: in_stats.mean,
            theta_in_std: in_stats.std,
            theta_out_mean: out_stats.mean,
            theta_out_std: out_stats.std,
        },
        baseline: strategy_block(baseline),
        optimized: strategy_block(optimized),
        pairs,
    }
}

// --- CLI verbs ---

/// Screen phase only: correlation results plus the histogram data file.
pub fn cmd_screen(cfg: &RunConfig) -> Result<Vec<ScreenResult<f64>>> {
    let inputs = load_inputs(cfg)?;
    phase_screen(cfg, &inputs.panel, &inputs.splits).map_err(|e| e.in_phase("screen"))
}

/// Cointegration phase; requires `screen_results.csv` in the output dir.
pub fn cmd_coint(cfg: &RunConfig) -> Result<CointRun<f64>> {
    let inputs = load_inputs(cfg)?;
    let screen_path = out_path(cfg, "screen_results.csv");
    if !screen_path.exists() {
        return Err(Error::Data(format!(
            "{} not found: run the screen phase first",
            screen_path.display()
        )));
    }
    let survivors = report::read_screen_survivors(&screen_path)?;
    phase_coint(cfg, &inputs.panel, &inputs.splits, &survivors).map_err(|e| e.in_phase("coint"))
}

/// Optimization phase; requires `coint_results.csv` in the output dir.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<UniverseOptimization<f64>> {
    let inputs = load_inputs(cfg)?;
    let coint_path = out_path(cfg, "coint_results.csv");
    if !coint_path.exists() {
        return Err(Error::Data(format!(
            "{} not found: run the coint phase first",
            coint_path.display()
        )));
    }
    let pairs = report::read_cointegrated_pairs(&coint_path)?;
    phase_optimize(cfg, &inputs.panel, &inputs.splits, &pairs).map_err(|e| e.in_phase("optimize"))
}

/// Backtest phase; requires `optimization_results.csv` (and the earlier
/// phase files for the summary counts) in the output dir.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<PortfolioSummary> {
    let inputs = load_inputs(cfg)?;
    let opt_path = out_path(cfg, "optimization_results.csv");
    if !opt_path.exists() {
        return Err(Error::Data(format!(
            "{} not found: run the optimize phase first",
            opt_path.display()
        )));
    }
    let chosen = report::read_optimized_thresholds(&opt_path)?;
    let counts = staged_counts(cfg)?;
    let phase = phase_backtest(cfg, &inputs.panel, &inputs.splits, &chosen, counts)
        .map_err(|e| e.in_phase("backtest"))?;
    Ok(phase.summary)
}

fn staged_counts(cfg: &RunConfig) -> Result<PhaseCounts> {
    let screen_path = out_path(cfg, "screen_results.csv");
    let coint_path = out_path(cfg, "coint_results.csv");
    let mut counts = PhaseCounts::default();
    if screen_path.exists() {
        let text = fs::read_to_string(&screen_path).map_err(|e| Error::Io {
            path: screen_path.clone(),
            source: e,
        })?;
        counts.pairs_total = text.lines().count().saturating_sub(1);
        counts.pairs_passed = report::read_screen_survivors(&screen_path)?.len();
    }
    if coint_path.exists() {
        counts.pairs_cointegrated = report::read_cointegrated_pairs(&coint_path)?.len();
    }
    Ok(counts)
}

/// Full pipeline with a hashed run manifest. Any phase failure aborts and
/// flags the manifest incomplete with the failing phase's name.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<PortfolioSummary> {
    let inputs = load_inputs(cfg)?;
    let mut manifest = ManifestBuilder::new(&cfg.output_dir, cfg.seed);
    match pipeline_inner(cfg, &inputs, &mut manifest) {
        Ok(summary) => {
            manifest.finish(None)?;
            Ok(summary)
        }
        Err(e) => {
            let phase = match &e {
                Error::Phase { phase, .. } => phase,
                _ => "pipeline",
            };
            // Best effort: the manifest records what was written.
            let _ = manifest.finish(Some(phase));
            Err(e)
        }
    }
}

fn pipeline_inner(
    cfg: &RunConfig,
    inputs: &Inputs,
    manifest: &mut ManifestBuilder,
) -> Result<PortfolioSummary> {
    let panel = &inputs.panel;
    let splits = &inputs.splits;

    let screen = phase_screen(cfg, panel, splits).map_err(|e| e.in_phase("screen"))?;
    manifest.add(&out_path(cfg, "screen_results.csv"))?;
    manifest.add(&out_path(cfg, "correlation_histogram.csv"))?;
    let survivors: Vec<PairKey> = screen
        .iter()
        .filter(|r| r.passed)
        .map(|r| r.pair.clone())
        .collect();

    let coint = phase_coint(cfg, panel, splits, &survivors).map_err(|e| e.in_phase("coint"))?;
    manifest.add(&out_path(cfg, "coint_results.csv"))?;
    let cointegrated: Vec<PairKey> = coint
        .results
        .iter()
        .filter(|r| r.cointegrated)
        .map(|r| r.pair.clone())
        .collect();

    let universe =
        phase_optimize(cfg, panel, splits, &cointegrated).map_err(|e| e.in_phase("optimize"))?;
    manifest.add(&out_path(cfg, "optimization_results.csv"))?;
    for result in &universe.results {
        manifest.add(&out_path(cfg, &format!("trials_{}.csv", result.pair.label())))?;
    }

    let chosen: Vec<(PairKey, f64, f64)> = universe
        .results
        .iter()
        .map(|r| (r.pair.clone(), r.best.theta_in(), r.best.theta_out()))
        .collect();
    let counts = PhaseCounts {
        pairs_total: screen.len(),
        pairs_passed: survivors.len(),
        pairs_cointegrated: cointegrated.len(),
    };
    let mut phase = phase_backtest(cfg, panel, splits, &chosen, counts)
        .map_err(|e| e.in_phase("backtest"))?;
    for f in &phase.per_pair_files {
        manifest.add(f)?;
    }

    // The pipeline knows the training objective per pair; patch it into
    // the summary rows (the staged flow leaves it absent) before the
    // summary is hashed.
    for row in &mut phase.summary.pairs {
        if let Ok(pair) = PairKey::new(row.ticker_x.clone(), row.ticker_y.clone()) {
            if let Some(r) = universe.results.iter().find(|r| r.pair == pair) {
                row.training_objective = Some(r.best_objective);
            }
        }
    }
    report::write_summary(&out_path(cfg, "portfolio_summary.json"), &phase.summary)?;
    manifest.add(&out_path(cfg, "portfolio_summary.json"))?;
    Ok(phase.summary)
}

/// Emit the plot-ready bundle from a completed run directory: one z-score
/// file and one equity file per surviving pair. No rendering happens here.
pub fn cmd_report(run_dir: &Path) -> Result<Vec<PathBuf>> {
    if !run_dir.is_dir() {
        return Err(Error::Data(format!(
            "{} is not a run directory",
            run_dir.display()
        )));
    }
    for (file, phase) in [
        ("screen_results.csv", "screen"),
        ("coint_results.csv", "coint"),
        ("optimization_results.csv", "optimize"),
        ("portfolio_summary.json", "backtest"),
    ] {
        if !run_dir.join(file).exists() {
            return Err(Error::Data(format!(
                "run directory is missing {file}: the {phase} phase has not completed"
            )));
        }
    }

    let chosen = report::read_optimized_thresholds(&run_dir.join("optimization_results.csv"))?;
    let mut written = Vec::new();
    for (pair, theta_in, theta_out) in chosen {
        let label = pair.label();
        let signals_path = run_dir.join(format!("signals_{label}.csv"));
        let backtest_path = run_dir.join(format!("backtest_{label}.csv"));
        if !signals_path.exists() || !backtest_path.exists() {
            // Pair failed in the backtest phase; nothing to plot.
            continue;
        }
        let signals = read_signals_file(&signals_path, &run_dir.join(format!("trades_{label}.csv")))?;
        let z_path = run_dir.join(format!("plot_zscore_{label}.csv"));
        report::write_plot_zscore(&z_path, &signals, theta_in, theta_out)?;
        let e_path = run_dir.join(format!("plot_equity_{label}.csv"));
        report::write_plot_equity(&e_path, &backtest_path)?;
        written.push(z_path);
        written.push(e_path);
    }
    if written.is_empty() {
        return Err(Error::Data(
            "run directory holds no per-pair backtest outputs to plot".into(),
        ));
    }
    Ok(written)
}

/// Rebuild a signal series from its emitted files (scores, positions,
/// trade dates; trigger scores are not needed for plotting).
fn read_signals_file(
    signals_path: &Path,
    trades_path: &Path,
) -> Result<crate::signal_engine::SignalSeries<f64>> {
    let text = fs::read_to_string(signals_path).map_err(|e| Error::Io {
        path: signals_path.to_path_buf(),
        source: e,
    })?;
    let mut dates = Vec::new();
    let mut z_scores = Vec::new();
    let mut positions = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Data(format!(
                "{}: bad signals row at line {}",
                signals_path.display(),
                i + 1
            )));
        }
        dates.push(fields[0].parse().map_err(|_| {
            Error::Data(format!("{}: bad date {:?}", signals_path.display(), fields[0]))
        })?);
        z_scores.push(fields[1].parse().map_err(|_| {
            Error::Data(format!("{}: bad z {:?}", signals_path.display(), fields[1]))
        })?);
        positions.push(fields[2].parse().map_err(|_| {
            Error::Data(format!("{}: bad position {:?}", signals_path.display(), fields[2]))
        })?);
    }
    let mut trades = Vec::new();
    if trades_path.exists() {
        let text = fs::read_to_string(trades_path).map_err(|e| Error::Io {
            path: trades_path.to_path_buf(),
            source: e,
        })?;
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                continue;
            }
            let parse_date = |s: &str| {
                s.parse::<chrono::NaiveDate>()
                    .map_err(|_| Error::Data(format!("{}: bad date {s:?}", trades_path.display())))
            };
            trades.push(crate::signal_engine::Trade {
                entry_date: parse_date(fields[0])?,
                exit_date: parse_date(fields[1])?,
                direction: fields[2].parse().unwrap_or(0),
                entry_z: fields[3].parse().unwrap_or(f64::NAN),
                exit_z: fields[4].parse().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(crate::signal_engine::SignalSeries {
        dates,
        z_scores,
        positions,
        trades,
    })
}
