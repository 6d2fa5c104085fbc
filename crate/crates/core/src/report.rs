//! CSV and JSON emission for every pipeline artifact, plus the readers the
//! standalone phase commands use to pick up where the previous phase left
//! off. All writers are deterministic: fixed column orders, fixed float
//! formatting (Rust's shortest round-trip representation), rows sorted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::{equity_curve, BacktestReport, SummaryStats};
use crate::cointegration::CointRun;
use crate::error::{Error, Result};
use crate::optimizer::OptimizationResult;
use crate::pair_screen::{HistogramBin, PairKey, ScreenResult};
use crate::signal_engine::SignalSeries;

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

// --- screen phase ---

pub fn write_screen_results(path: &Path, results: &[ScreenResult<f64>]) -> Result<()> {
    let mut out = String::from("ticker_x,ticker_y,correlation,passed\n");
    for r in results {
        let corr = r.correlation.map(fmt_f).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.pair.x(), r.pair.y(), corr, r.passed);
    }
    write_file(path, &out)
}

pub fn read_screen_survivors(path: &Path) -> Result<Vec<PairKey>> {
    let text = read_file(path)?;
    let mut survivors = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Data(format!(
                "{}: bad screen row at line {}",
                path.display(),
                i + 1
            )));
        }
        if fields[3] == "true" {
            survivors.push(PairKey::new(fields[0], fields[1])?);
        }
    }
    Ok(survivors)
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    let mut out = String::from("bin_low,bin_high,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", fmt_f(b.low), fmt_f(b.high), b.count);
    }
    write_file(path, &out)
}

// --- cointegration phase ---

pub fn write_coint_results(path: &Path, run: &CointRun<f64>) -> Result<()> {
    let mut out = String::from("ticker_x,ticker_y,beta,alpha,adf_t,p_value,lags,cointegrated\n");
    for r in &run.results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.pair.x(),
            r.pair.y(),
            fmt_f(r.ols.beta),
            fmt_f(r.ols.alpha),
            fmt_f(r.adf.t_stat),
            fmt_f(r.adf.p_value),
            r.adf.lags_used,
            r.cointegrated
        );
    }
    write_file(path, &out)
}

pub fn read_cointegrated_pairs(path: &Path) -> Result<Vec<PairKey>> {
    let text = read_file(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Data(format!(
                "{}: bad cointegration row at line {}",
                path.display(),
                i + 1
            )));
        }
        if fields[7] == "true" {
            pairs.push(PairKey::new(fields[0], fields[1])?);
        }
    }
    Ok(pairs)
}

// --- optimization phase ---

pub fn write_optimization_results(path: &Path, results: &[OptimizationResult<f64>]) -> Result<()> {
    let mut out = String::from("ticker_x,ticker_y,method,theta_in,theta_out,objective,n_trials\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.pair.x(),
            r.pair.y(),
            r.method.as_str(),
            fmt_f(r.best.theta_in()),
            fmt_f(r.best.theta_out()),
            fmt_f(r.best_objective),
            r.history.len()
        );
    }
    write_file(path, &out)
}

pub fn read_optimized_thresholds(path: &Path) -> Result<Vec<(PairKey, f64, f64)>> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Data(format!(
                "{}: bad optimization row at line {}",
                path.display(),
                i + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Data(format!("{}: bad float {s:?}", path.display())))
        };
        out.push((
            PairKey::new(fields[0], fields[1])?,
            parse(fields[3])?,
            parse(fields[4])?,
        ));
    }
    Ok(out)
}

pub fn write_trials(path: &Path, result: &OptimizationResult<f64>) -> Result<()> {
    let mut out = String::from("index,theta_in,theta_out,objective\n");
    for t in &result.history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t.index,
            fmt_f(t.thresholds.theta_in()),
            fmt_f(t.thresholds.theta_out()),
            fmt_f(t.objective)
        );
    }
    write_file(path, &out)
}

// --- backtest phase ---

pub fn write_signals(path: &Path, signals: &SignalSeries<f64>) -> Result<()> {
    let mut out = String::from("date,z_score,position\n");
    for i in 0..signals.dates.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            signals.dates[i],
            fmt_f(signals.z_scores[i]),
            signals.positions[i]
        );
    }
    write_file(path, &out)
}

pub fn write_trades(path: &Path, signals: &SignalSeries<f64>) -> Result<()> {
    let mut out = String::from("entry_date,exit_date,direction,entry_z,exit_z\n");
    for t in &signals.trades {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.entry_date,
            t.exit_date,
            t.direction,
            fmt_f(t.entry_z),
            fmt_f(t.exit_z)
        );
    }
    write_file(path, &out)
}

/// Daily return and compounded equity rows; dates are the evaluation
/// window's dates after the first.
pub fn write_backtest(path: &Path, report: &BacktestReport<f64>) -> Result<()> {
    let mut out = String::from("date,daily_return,equity\n");
    let equity = equity_curve(&report.daily_returns);
    for (i, (r, e)) in report.daily_returns.iter().zip(equity.iter()).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            report.signals.dates[i + 1],
            fmt_f(*r),
            fmt_f(*e)
        );
    }
    write_file(path, &out)
}

// --- summary ---

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsBlock {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl From<SummaryStats<f64>> for StatsBlock {
    fn from(s: SummaryStats<f64>) -> Self {
        Self {
            mean: s.mean,
            std: s.std,
            min: s.min,
            max: s.max,
            count: s.count,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyBlock {
    pub compounded: StatsBlock,
    pub arithmetic: StatsBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowJson {
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRow {
    pub ticker_x: String,
    pub ticker_y: String,
    pub theta_in: f64,
    pub theta_out: f64,
    pub training_objective: Option<f64>,
    pub baseline_return: Option<f64>,
    pub optimized_return: Option<f64>,
    pub baseline_trades: Option<usize>,
    pub optimized_trades: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsBlock {
    pub pairs_total: usize,
    pub pairs_passed_correlation: usize,
    pub pairs_cointegrated: usize,
    pub pairs_optimized: usize,
    pub pairs_backtested: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub theta_in_mean: f64,
    pub theta_in_std: f64,
    pub theta_out_mean: f64,
    pub theta_out_std: f64,
}

/// Baseline-vs-optimized comparison on the test window, plus run context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub seed: u64,
    pub method: String,
    pub budget: usize,
    pub correlation_threshold: f64,
    pub cointegration_threshold: f64,
    pub return_mode: String,
    pub windows: Vec<(String, WindowJson)>,
    pub counts: CountsBlock,
    pub thresholds: ThresholdStats,
    pub baseline: StrategyBlock,
    pub optimized: StrategyBlock,
    pub pairs: Vec<PairRow>,
}

pub fn write_summary(path: &Path, summary: &PortfolioSummary) -> Result<()> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Data(format!("summary serialization: {e}")))?;
    write_file(path, &json)
}

pub fn read_summary(path: &Path) -> Result<PortfolioSummary> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: bad summary: {e}", path.display())))
}

// --- run manifest ---

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: String,
    pub failed_phase: Option<String>,
    pub generated_at: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

/// Collects every file a run writes and hashes it into the manifest.
#[derive(Debug)]
pub struct ManifestBuilder {
    root: PathBuf,
    seed: u64,
    files: Vec<ManifestEntry>,
}

impl ManifestBuilder {
    pub fn new(root: &Path, seed: u64) -> Self {
        Self {
            root: root.to_path_buf(),
            seed,
            files: Vec::new(),
        }
    }

    /// Record a file already written under the run root.
    pub fn add(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let digest = Sha256::digest(&bytes);
        let rel = path
            .strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.files.push(ManifestEntry {
            path: rel,
            sha256: format!("{digest:x}"),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn finish(mut self, failed_phase: Option<&'static str>) -> Result<()> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            status: if failed_phase.is_none() {
                "complete".into()
            } else {
                "incomplete".into()
            },
            failed_phase: failed_phase.map(str::to_string),
            generated_at: chrono::Utc::now().to_rfc3339(),
            seed: self.seed,
            files: self.files,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Data(format!("manifest serialization: {e}")))?;
        write_file(&self.root.join("run_manifest.json"), &json)
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: bad manifest: {e}", path.display())))
}

// --- plot bundle ---

/// Plot-ready z-score file: the score series with constant threshold
/// columns and entry/exit markers pulled from the trade log.
pub fn write_plot_zscore(
    path: &Path,
    signals: &SignalSeries<f64>,
    theta_in: f64,
    theta_out: f64,
) -> Result<()> {
    let mut markers: Vec<&'static str> = vec![""; signals.dates.len()];
    for t in &signals.trades {
        if let Some(i) = signals.dates.iter().position(|d| *d == t.entry_date) {
            markers[i] = "entry";
        }
        if let Some(i) = signals.dates.iter().position(|d| *d == t.exit_date) {
            markers[i] = "exit";
        }
    }
    let mut out = String::from("date,z_score,position,theta_in,theta_out,marker\n");
    for (i, marker) in markers.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            signals.dates[i],
            fmt_f(signals.z_scores[i]),
            signals.positions[i],
            fmt_f(theta_in),
            fmt_f(theta_out),
            marker
        );
    }
    write_file(path, &out)
}

/// Plot-ready equity file (date, equity), read back from a backtest CSV.
pub fn write_plot_equity(path: &Path, backtest_csv: &Path) -> Result<()> {
    let text = read_file(backtest_csv)?;
    let mut out = String::from("date,equity\n");
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Data(format!(
                "{}: bad backtest row",
                backtest_csv.display()
            )));
        }
        let _ = writeln!(out, "{},{}", fields[0], fields[2]);
    }
    write_file(path, &out)
}

/// Parse dates out of a signals CSV (used by the report command checks).
pub fn read_signal_dates(path: &Path) -> Result<Vec<NaiveDate>> {
    let text = read_file(path)?;
    let mut dates = Vec::new();
    for line in text.lines().skip(1) {
        let field = line.split(',').next().unwrap_or("");
        let d = field
            .parse()
            .map_err(|_| Error::Data(format!("{}: bad date {field:?}", path.display())))?;
        dates.push(d);
    }
    Ok(dates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    #[test]
    fn screen_round_trip() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("screen_results.csv");
        let results = vec![
            ScreenResult {
                pair: PairKey::new("A", "B").unwrap(),
                correlation: Some(0.9123),
                passed: true,
            },
            ScreenResult {
                pair: PairKey::new("A", "C").unwrap(),
                correlation: Some(0.1),
                passed: false,
            },
            ScreenResult {
                pair: PairKey::new("B", "C").unwrap(),
                correlation: None,
                passed: false,
            },
        ];
        write_screen_results(&path, &results).unwrap();
        let survivors = read_screen_survivors(&path).unwrap();
        assert_eq!(survivors, vec![PairKey::new("A", "B").unwrap()]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("ticker_x,ticker_y,correlation,passed\n"));
        assert!(text.contains("B,C,,false"));
    }

    #[test]
    fn manifest_hashes_files() {
        let dir = TempDir::new().unwrap();
        let f = dir.path().join("a.csv");
        std::fs::write(&f, "hello\n").unwrap();
        let mut builder = ManifestBuilder::new(dir.path(), 7);
        builder.add(&f).unwrap();
        builder.finish(None).unwrap();
        let manifest = read_manifest(&dir.path().join("run_manifest.json")).unwrap();
        assert_eq!(manifest.status, "complete");
        assert_eq!(manifest.seed, 7);
        assert_eq!(manifest.files.len(), 1);
        assert_eq!(manifest.files[0].path, "a.csv");
        assert_eq!(manifest.files[0].bytes, 6);
        // sha256 of "hello\n"
        assert_eq!(
            manifest.files[0].sha256,
            "5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03"
        );
    }

    #[test]
    fn summary_round_trips_via_json() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("portfolio_summary.json");
        let block = StatsBlock {
            mean: 0.05,
            std: 0.01,
            min: 0.0,
            max: 0.2,
            count: 3,
        };
        let summary = PortfolioSummary {
            seed: 1,
            method: "grid".into(),
            budget: 100,
            correlation_threshold: 0.8,
            cointegration_threshold: 0.05,
            return_mode: "compounded".into(),
            windows: vec![(
                "test".into(),
                WindowJson {
                    start: "2022-01-01".into(),
                    end: "2022-03-31".into(),
                },
            )],
            counts: CountsBlock {
                pairs_total: 10,
                pairs_passed_correlation: 5,
                pairs_cointegrated: 3,
                pairs_optimized: 3,
                pairs_backtested: 3,
                failures: 0,
            },
            thresholds: ThresholdStats {
                theta_in_mean: 1.4,
                theta_in_std: 0.2,
                theta_out_mean: 0.4,
                theta_out_std: 0.1,
            },
            baseline: StrategyBlock {
                compounded: block.clone(),
                arithmetic: block.clone(),
            },
            optimized: StrategyBlock {
                compounded: block.clone(),
                arithmetic: block,
            },
            pairs: vec![],
        };
        write_summary(&path, &summary).unwrap();
        let back = read_summary(&path).unwrap();
        assert_eq!(back.counts.pairs_total, 10);
        assert_eq!(back.method, "grid");
    }
}
