//! Price panel ingestion, cleaning, return computation and the optional
//! normalization transforms.
//!
//! Input format is a wide CSV with a header row `date,TICKER1,TICKER2,...`,
//! ISO-8601 dates and decimal-point floats. Cleaning rules:
//! 1. Tickers whose raw missing-value fraction exceeds the cutoff are dropped.
//! 2. Interior gaps are forward-filled (past data only).
//! 3. Leading rows that cannot be filled are removed.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::num::Real;

/// Default cutoff on the per-ticker missing-value fraction.
pub const DEFAULT_MISSING_CUTOFF: f64 = 0.05;
/// Default shift used by [`log_shift_transform`]. The value is
/// configuration, not calibration: no reference pins it down.
pub const DEFAULT_LOG_SHIFT: f64 = 0.5;
/// Default clamp applied before taking logs in [`log_shift_transform`].
pub const DEFAULT_LOG_EPSILON: f64 = 1e-6;

/// Inclusive date window. Both ends are clamped to the panel's range when
/// sliced, so a window may extend past the data without error as long as
/// the intersection is nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowSpec {
    start: NaiveDate,
    end: NaiveDate,
}

impl WindowSpec {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!(
                "window start {start} is after end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        d >= self.start && d <= self.end
    }

    /// True when `self` ends strictly before `other` begins.
    pub fn strictly_precedes(&self, other: &WindowSpec) -> bool {
        self.end < other.start
    }
}

/// Aligned date x ticker matrix of strictly positive prices (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<F: Real> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Vec<F>,
}

impl<F: Real> PricePanel<F> {
    /// Build a panel, validating every invariant: strictly increasing dates,
    /// positive finite prices, dimensions `|dates| x |tickers|`.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Vec<F>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::Data("panel has no dates".into()));
        }
        if tickers.len() < 2 {
            return Err(Error::Data(format!(
                "panel needs at least 2 tickers, got {}",
                tickers.len()
            )));
        }
        if prices.len() != dates.len() * tickers.len() {
            return Err(Error::Data(format!(
                "price matrix has {} cells, expected {} x {}",
                prices.len(),
                dates.len(),
                tickers.len()
            )));
        }
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Data(format!(
                    "dates not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > F::zero()) {
                let (r, c) = (i / tickers.len(), i % tickers.len());
                return Err(Error::Data(format!(
                    "non-positive or non-finite price {} for {} on {}",
                    p, tickers[c], dates[r]
                )));
            }
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn price(&self, row: usize, col: usize) -> F {
        self.prices[row * self.tickers.len() + col]
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    /// Full price series for one ticker.
    pub fn series(&self, ticker: &str) -> Result<Vec<F>> {
        let col = self
            .ticker_index(ticker)
            .ok_or_else(|| Error::Data(format!("ticker {ticker} not in panel")))?;
        Ok(self.column(col))
    }

    pub fn column(&self, col: usize) -> Vec<F> {
        (0..self.dates.len()).map(|r| self.price(r, col)).collect()
    }

    /// Sub-panel restricted to dates inside `window` (window clamped to the
    /// panel's range). The original panel is untouched.
    pub fn slice(&self, window: &WindowSpec) -> Result<PricePanel<F>> {
        let (lo, hi) = date_slice_bounds(&self.dates, window)?;
        let w = self.tickers.len();
        Ok(PricePanel {
            dates: self.dates[lo..hi].to_vec(),
            tickers: self.tickers.clone(),
            prices: self.prices[lo * w..hi * w].to_vec(),
        })
    }

    /// The window actually covered by the panel's dates.
    pub fn date_window(&self) -> WindowSpec {
        WindowSpec {
            start: self.dates[0],
            end: *self.dates.last().expect("panel has dates"),
        }
    }

    /// Serialize to the wide CSV format, floats at 10 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("date");
        for t in &self.tickers {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for (r, d) in self.dates.iter().enumerate() {
            let _ = write!(out, "{}", d.format("%Y-%m-%d"));
            for c in 0..self.tickers.len() {
                out.push(',');
                out.push_str(&fmt_sig10(self.price(r, c).to64()));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Matrix of simple returns; one fewer row than the source panel, each row
/// stamped with the later date of its price pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<F: Real> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    returns: Vec<F>,
}

impl<F: Real> ReturnPanel<F> {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn ret(&self, row: usize, col: usize) -> F {
        self.returns[row * self.tickers.len() + col]
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn column(&self, col: usize) -> Vec<F> {
        (0..self.dates.len()).map(|r| self.ret(r, col)).collect()
    }

    /// Rows whose date falls inside `window` (clamped).
    pub fn slice(&self, window: &WindowSpec) -> Result<ReturnPanel<F>> {
        let (lo, hi) = date_slice_bounds(&self.dates, window)?;
        let w = self.tickers.len();
        Ok(ReturnPanel {
            dates: self.dates[lo..hi].to_vec(),
            tickers: self.tickers.clone(),
            returns: self.returns[lo * w..hi * w].to_vec(),
        })
    }
}

fn date_slice_bounds(dates: &[NaiveDate], window: &WindowSpec) -> Result<(usize, usize)> {
    let lo = dates.partition_point(|d| *d < window.start);
    let hi = dates.partition_point(|d| *d <= window.end);
    if lo >= hi {
        return Err(Error::Data(format!(
            "window {}..{} does not intersect the panel range {}..{}",
            window.start,
            window.end,
            dates[0],
            dates[dates.len() - 1]
        )));
    }
    Ok((lo, hi))
}

/// Ticker dropped during cleaning, with its raw missing fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedTicker {
    pub ticker: String,
    pub missing_frac: f64,
}

/// A cleaned panel plus a record of what cleaning removed.
#[derive(Debug, Clone)]
pub struct LoadedPanel<F: Real> {
    pub panel: PricePanel<F>,
    pub dropped: Vec<DroppedTicker>,
    pub leading_rows_dropped: usize,
}

/// Layout hints and cleaning knobs for [`load_panel`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Tickers with a missing fraction strictly above this are dropped.
    pub missing_cutoff: f64,
    /// Name of the date column; defaults to the first column.
    pub date_column: Option<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            missing_cutoff: DEFAULT_MISSING_CUTOFF,
            date_column: None,
        }
    }
}

/// Read a wide CSV into a clean panel. Deterministic: identical bytes in,
/// identical panel out.
pub fn load_panel<F: Real>(path: &Path, options: &LoadOptions) -> Result<LoadedPanel<F>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_panel(&raw, options)
}

/// CSV-text form of [`load_panel`], used by tests and in-memory callers.
pub fn parse_panel<F: Real>(csv_text: &str, options: &LoadOptions) -> Result<LoadedPanel<F>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad CSV header: {e}")))?
        .clone();
    if headers.len() < 3 {
        return Err(Error::Data(
            "need a date column and at least 2 ticker columns".into(),
        ));
    }
    let date_col = match &options.date_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("date column {name} not found")))?,
        None => 0,
    };
    let tickers: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != date_col)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    let ticker_cols: Vec<usize> = (0..headers.len()).filter(|i| *i != date_col).collect();

    let mut dates = Vec::new();
    let mut cells: Vec<Option<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("CSV row {}: {e}", line + 2)))?;
        let date_str = record.get(date_col).unwrap_or("").trim();
        let date = NaiveDate::from_str(date_str).map_err(|_| {
            Error::Data(format!("row {}: unparsable date {date_str:?}", line + 2))
        })?;
        dates.push(date);
        for &c in &ticker_cols {
            let field = record.get(c).unwrap_or("").trim();
            if field.is_empty() || field.eq_ignore_ascii_case("nan") || field.eq_ignore_ascii_case("na") {
                cells.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!("row {}: unparsable price {field:?}", line + 2))
                })?;
                if v.is_nan() {
                    cells.push(None);
                } else {
                    cells.push(Some(v));
                }
            }
        }
    }
    if dates.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 data rows, got {}",
            dates.len()
        )));
    }
    for w in dates.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Data(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }

    let n_rows = dates.len();
    let n_cols = tickers.len();

    // Drop tickers whose raw missing fraction exceeds the cutoff.
    let mut dropped = Vec::new();
    let mut kept_cols = Vec::new();
    for c in 0..n_cols {
        let missing = (0..n_rows).filter(|&r| cells[r * n_cols + c].is_none()).count();
        let frac = missing as f64 / n_rows as f64;
        if frac > options.missing_cutoff {
            dropped.push(DroppedTicker {
                ticker: tickers[c].clone(),
                missing_frac: frac,
            });
        } else {
            kept_cols.push(c);
        }
    }
    if kept_cols.len() < 2 {
        return Err(Error::Data(format!(
            "fewer than 2 tickers survive the {:.0}% missing cutoff",
            options.missing_cutoff * 100.0
        )));
    }

    // Forward-fill interior gaps, column by column.
    let mut filled: Vec<Option<f64>> = Vec::with_capacity(n_rows * kept_cols.len());
    filled.resize(n_rows * kept_cols.len(), None);
    let kept_n = kept_cols.len();
    for (kc, &c) in kept_cols.iter().enumerate() {
        let mut last: Option<f64> = None;
        for r in 0..n_rows {
            let v = cells[r * n_cols + c].or(last);
            filled[r * kept_n + kc] = v;
            last = v;
        }
    }

    // Remove leading rows that still have gaps (nothing earlier to fill from).
    let first_full = (0..n_rows)
        .find(|&r| (0..kept_n).all(|c| filled[r * kept_n + c].is_some()))
        .ok_or_else(|| Error::Data("no fully populated rows after forward fill".into()))?;

    let out_dates: Vec<NaiveDate> = dates[first_full..].to_vec();
    let mut out_prices: Vec<F> = Vec::with_capacity((n_rows - first_full) * kept_n);
    for r in first_full..n_rows {
        for c in 0..kept_n {
            let v = filled[r * kept_n + c].expect("filled after first full row");
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Data(format!(
                    "non-positive price {v} for {} on {} after cleaning",
                    tickers[kept_cols[c]], dates[r]
                )));
            }
            out_prices.push(F::of(v));
        }
    }
    let out_tickers: Vec<String> = kept_cols.iter().map(|&c| tickers[c].clone()).collect();

    Ok(LoadedPanel {
        panel: PricePanel::new(out_dates, out_tickers, out_prices)?,
        dropped,
        leading_rows_dropped: first_full,
    })
}

/// Simple returns `(P_t - P_{t-1}) / P_{t-1}` for every ticker; the output
/// row carries the later date of each pair.
pub fn compute_returns<F: Real>(panel: &PricePanel<F>) -> Result<ReturnPanel<F>> {
    if panel.n_dates() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: panel.n_dates(),
        });
    }
    let w = panel.n_tickers();
    let mut returns = Vec::with_capacity((panel.n_dates() - 1) * w);
    for r in 1..panel.n_dates() {
        for c in 0..w {
            let prev = panel.price(r - 1, c);
            returns.push((panel.price(r, c) - prev) / prev);
        }
    }
    Ok(ReturnPanel {
        dates: panel.dates()[1..].to_vec(),
        tickers: panel.tickers().to_vec(),
        returns,
    })
}

/// Min-max rescaling to [0, 1]. Order-preserving; errors on a constant
/// series (max = min).
pub fn normalize_minmax<F: Real>(series: &[F]) -> Result<Vec<F>> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let mut lo = series[0];
    let mut hi = series[0];
    for &v in series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return Err(Error::Degenerate(
            "constant series: min equals max".into(),
        ));
    }
    let span = hi - lo;
    Ok(series.iter().map(|&v| (v - lo) / span).collect())
}

/// Shifted-log transform `(1 - shift) * ln(max(v, epsilon))` applied to a
/// series already scaled into [0, 1]. Values below `epsilon` are clamped
/// before the log; `shift` must lie in [0, 1).
pub fn log_shift_transform<F: Real>(normalized: &[F], shift: F, epsilon: F) -> Result<Vec<F>> {
    if shift < F::zero() || shift >= F::one() {
        return Err(Error::Config(format!(
            "shift {shift} outside [0, 1)"
        )));
    }
    if epsilon <= F::zero() {
        return Err(Error::Config(format!("epsilon {epsilon} must be positive")));
    }
    let scale = F::one() - shift;
    Ok(normalized
        .iter()
        .map(|&v| scale * v.max(epsilon).ln())
        .collect())
}

/// The opt-in preprocessing pipeline: min-max, shifted log, then simple
/// returns of the transformed level. The transformed level is zero at the
/// series maximum, so the return right after an interior maximum divides
/// by zero; such series surface as degenerate during screening rather than
/// failing the whole run.
pub fn transformed_returns<F: Real>(
    panel: &PricePanel<F>,
    shift: F,
    epsilon: F,
) -> Result<ReturnPanel<F>> {
    if panel.n_dates() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: panel.n_dates(),
        });
    }
    let w = panel.n_tickers();
    let n = panel.n_dates();
    let mut cols: Vec<Vec<F>> = Vec::with_capacity(w);
    for c in 0..w {
        let normalized = normalize_minmax(&panel.column(c))?;
        cols.push(log_shift_transform(&normalized, shift, epsilon)?);
    }
    let mut returns = Vec::with_capacity((n - 1) * w);
    for r in 1..n {
        for col in cols.iter() {
            returns.push((col[r] - col[r - 1]) / col[r - 1]);
        }
    }
    Ok(ReturnPanel {
        dates: panel.dates()[1..].to_vec(),
        tickers: panel.tickers().to_vec(),
        returns,
    })
}

/// Format with 10 significant digits, plain decimal notation.
pub fn fmt_sig10(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (9 - exp).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        s
    }
}
