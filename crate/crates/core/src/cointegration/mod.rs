//! Engle-Granger two-step cointegration testing.
//!
//! Step 1 regresses the first-named ticker on the second (`x = alpha +
//! beta*y + z`); step 2 runs the ADF test on the residual spread. The
//! p-value defaults to the residual-adjusted two-variable surface, which is
//! stricter than the plain unit-root surface because the hedge ratio was
//! estimated. Cointegration is directional: the engine always regresses
//! first-named on second-named.

mod adf;
mod mackinnon;
mod ols;

pub use adf::{adf_test, schwert_max_lags, AdfResult};
pub use mackinnon::{max_n_vars, tau_pvalue, tau_quantile};
pub use ols::{fit_ols, lstsq, Lstsq, OlsFit};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::{compute_returns, PricePanel, WindowSpec};
use crate::num::{sample_var, Real};
use crate::pair_screen::PairKey;

/// Default p-value threshold for declaring a pair cointegrated.
pub const DEFAULT_COINTEGRATION_THRESHOLD: f64 = 0.05;

/// Which response surface converts the residual ADF statistic into a
/// p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PvalueSurface {
    /// Two-variable residual-based surface (hedge ratio estimated).
    #[default]
    EngleGranger,
    /// Plain unit-root surface, as if the spread were observed directly.
    PlainAdf,
}

impl PvalueSurface {
    fn n_vars(self) -> usize {
        match self {
            PvalueSurface::EngleGranger => 2,
            PvalueSurface::PlainAdf => 1,
        }
    }
}

/// Data the test runs on: price levels (default) or simple returns. The
/// returns mode exists for reproduction studies; returns are generically
/// stationary, which makes the test close to vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CointBasis {
    #[default]
    Levels,
    Returns,
}

/// Knobs for the Engle-Granger test.
#[derive(Debug, Clone)]
pub struct CointConfig {
    pub p_threshold: f64,
    /// Intercept in the cointegrating regression. Disable for the literal
    /// `z = x - beta*y` spread.
    pub with_intercept: bool,
    pub surface: PvalueSurface,
    pub basis: CointBasis,
    pub max_lags: Option<usize>,
}

impl Default for CointConfig {
    fn default() -> Self {
        Self {
            p_threshold: DEFAULT_COINTEGRATION_THRESHOLD,
            with_intercept: true,
            surface: PvalueSurface::default(),
            basis: CointBasis::default(),
            max_lags: None,
        }
    }
}

/// Outcome of a single Engle-Granger test (no pair identity attached).
#[derive(Debug, Clone)]
pub struct CointTest<F: Real> {
    pub ols: OlsFit<F>,
    pub adf: AdfResult<F>,
    pub cointegrated: bool,
}

/// Per-pair cointegration result.
#[derive(Debug, Clone)]
pub struct CointResult<F: Real> {
    pub pair: PairKey,
    pub ols: OlsFit<F>,
    pub adf: AdfResult<F>,
    pub cointegrated: bool,
}

/// Two-step Engle-Granger test with default settings and the given
/// p-value threshold.
pub fn engle_granger<F: Real>(x: &[F], y: &[F], p_threshold: f64) -> Result<CointTest<F>> {
    engle_granger_with(
        x,
        y,
        &CointConfig {
            p_threshold,
            ..CointConfig::default()
        },
    )
}

/// Two-step Engle-Granger test with explicit configuration.
pub fn engle_granger_with<F: Real>(x: &[F], y: &[F], cfg: &CointConfig) -> Result<CointTest<F>> {
    let ols = fit_ols(x, y, cfg.with_intercept)?;
    if sample_var(&ols.residuals) == F::zero() {
        return Err(Error::Degenerate(
            "residual spread has zero variance".into(),
        ));
    }
    let (t_stat, lags_used, n_obs) = adf::adf_tstat(&ols.residuals, cfg.max_lags)?;
    let p_value = F::of(mackinnon::tau_pvalue(t_stat.to64(), cfg.surface.n_vars()));
    let adf = AdfResult {
        t_stat,
        p_value,
        lags_used,
        n_obs,
    };
    let cointegrated = adf.p_value.to64() < cfg.p_threshold;
    Ok(CointTest {
        ols,
        adf,
        cointegrated,
    })
}

/// Run of [`coint_filter`]: per-pair results plus the pairs that failed
/// with the reason, which are recorded rather than fatal.
#[derive(Debug, Clone)]
pub struct CointRun<F: Real> {
    /// Sorted by ascending p-value, ties by pair key.
    pub results: Vec<CointResult<F>>,
    pub failures: Vec<(PairKey, String)>,
}

/// Engle-Granger test for every surviving pair on the windowed panel.
/// Parallel across pairs with a deterministic merge.
pub fn coint_filter<F: Real>(
    panel: &PricePanel<F>,
    window: &WindowSpec,
    survivors: &[PairKey],
    cfg: &CointConfig,
) -> Result<CointRun<F>> {
    if survivors.is_empty() {
        return Err(Error::Data("no pairs to test".into()));
    }
    let windowed = panel.slice(window)?;

    let outcomes: Vec<(PairKey, Result<CointTest<F>>)> = survivors
        .par_iter()
        .map(|pair| {
            let run = || -> Result<CointTest<F>> {
                let (x, y) = pair_series(&windowed, pair, cfg.basis)?;
                engle_granger_with(&x, &y, cfg)
            };
            (pair.clone(), run())
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (pair, outcome) in outcomes {
        match outcome {
            Ok(test) => results.push(CointResult {
                pair,
                ols: test.ols,
                adf: test.adf,
                cointegrated: test.cointegrated,
            }),
            Err(e) => failures.push((pair, e.to_string())),
        }
    }
    results.sort_by(|a, b| {
        a.adf
            .p_value
            .partial_cmp(&b.adf.p_value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.pair.cmp(&b.pair))
    });
    Ok(CointRun { results, failures })
}

fn pair_series<F: Real>(
    windowed: &PricePanel<F>,
    pair: &PairKey,
    basis: CointBasis,
) -> Result<(Vec<F>, Vec<F>)> {
    match basis {
        CointBasis::Levels => Ok((windowed.series(pair.x())?, windowed.series(pair.y())?)),
        CointBasis::Returns => {
            let rets = compute_returns(windowed)?;
            let cx = rets
                .ticker_index(pair.x())
                .ok_or_else(|| Error::Data(format!("ticker {} not in panel", pair.x())))?;
            let cy = rets
                .ticker_index(pair.y())
                .ok_or_else(|| Error::Data(format!("ticker {} not in panel", pair.y())))?;
            Ok((rets.column(cx), rets.column(cy)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn walk(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 1..n {
            let e: f64 = rng.sample(StandardNormal);
            x[i] = x[i - 1] + e;
        }
        x
    }

    fn ar1(n: usize, phi: f64, rng: &mut ChaCha20Rng) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 1..n {
            let e: f64 = rng.sample(StandardNormal);
            x[i] = phi * x[i - 1] + e;
        }
        x
    }

    #[test]
    fn cointegrated_pair_detected() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut hits = 0;
        for _ in 0..25 {
            let y = walk(750, &mut rng);
            let noise = ar1(750, 0.5, &mut rng);
            let x: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| 1.5 * a + b).collect();
            let res = engle_granger(&x, &y, 0.05).unwrap();
            if res.cointegrated {
                hits += 1;
            }
        }
        assert!(hits >= 23, "only {hits}/25 cointegrated pairs detected");
    }

    #[test]
    fn independent_walks_rarely_flagged() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let mut hits = 0;
        for _ in 0..25 {
            let x = walk(750, &mut rng);
            let y = walk(750, &mut rng);
            let res = engle_granger(&x, &y, 0.05).unwrap();
            if res.cointegrated {
                hits += 1;
            }
        }
        assert!(hits <= 4, "{hits}/25 independent walks flagged");
    }

    #[test]
    fn identical_series_is_degenerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let x = walk(100, &mut rng);
        assert!(matches!(
            engle_granger(&x, &x, 0.05),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn no_intercept_mode_reproduces_raw_spread() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let y = walk(200, &mut rng);
        let noise = ar1(200, 0.3, &mut rng);
        let x: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| 2.0 * a + b).collect();
        let cfg = CointConfig {
            with_intercept: false,
            ..CointConfig::default()
        };
        let res = engle_granger_with(&x, &y, &cfg).unwrap();
        assert_eq!(res.ols.alpha, 0.0);
        for (i, z) in res.ols.residuals.iter().enumerate() {
            assert!((z - (x[i] - res.ols.beta * y[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_surface_is_less_strict() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let y = walk(400, &mut rng);
        let noise = ar1(400, 0.8, &mut rng);
        let x: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let eg = engle_granger_with(&x, &y, &CointConfig::default()).unwrap();
        let plain = engle_granger_with(
            &x,
            &y,
            &CointConfig {
                surface: PvalueSurface::PlainAdf,
                ..CointConfig::default()
            },
        )
        .unwrap();
        assert_eq!(eg.adf.t_stat, plain.adf.t_stat);
        assert!(plain.adf.p_value <= eg.adf.p_value);
    }

    fn two_ticker_panel(x: &[f64], y: &[f64]) -> PricePanel<f64> {
        let dates: Vec<NaiveDate> = (0..x.len() as i64)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(i))
            .collect();
        let mut prices = Vec::new();
        for i in 0..x.len() {
            prices.push(x[i]);
            prices.push(y[i]);
        }
        PricePanel::new(dates, vec!["AAA".into(), "BBB".into()], prices).unwrap()
    }

    #[test]
    fn filter_rejects_empty_survivors() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let y: Vec<f64> = walk(100, &mut rng).iter().map(|v| v + 200.0).collect();
        let x: Vec<f64> = y.iter().map(|v| v * 1.1).collect();
        let panel = two_ticker_panel(&x, &y);
        let err = coint_filter(&panel, &panel.date_window(), &[], &CointConfig::default());
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn filter_threshold_one_marks_all_computable_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let y: Vec<f64> = walk(120, &mut rng).iter().map(|v| v + 300.0).collect();
        let noise = ar1(120, 0.4, &mut rng);
        let x: Vec<f64> = y
            .iter()
            .zip(&noise)
            .map(|(a, b)| 0.8 * a + b + 50.0)
            .collect();
        let panel = two_ticker_panel(&x, &y);
        let pair = PairKey::new("AAA", "BBB").unwrap();
        let cfg = CointConfig {
            p_threshold: 1.0,
            ..CointConfig::default()
        };
        let run = coint_filter(&panel, &panel.date_window(), &[pair], &cfg).unwrap();
        assert_eq!(run.results.len(), 1);
        assert!(run.results[0].cointegrated);
        assert!(run.failures.is_empty());
    }

    #[test]
    fn filter_records_failures_without_aborting() {
        // Ticker CCC is a constant series: its spread against anything has
        // an exact linear fit and zero-variance residuals.
        let mut rng = ChaCha20Rng::seed_from_u64(18);
        let y: Vec<f64> = walk(100, &mut rng).iter().map(|v| v + 500.0).collect();
        let noise = ar1(100, 0.4, &mut rng);
        let x: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b + 10.0).collect();
        let dates: Vec<NaiveDate> = (0..x.len() as i64)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(i))
            .collect();
        let mut prices = Vec::new();
        for i in 0..x.len() {
            prices.push(x[i]);
            prices.push(y[i]);
            prices.push(42.0);
        }
        let panel = PricePanel::new(
            dates,
            vec!["AAA".into(), "BBB".into(), "CCC".into()],
            prices,
        )
        .unwrap();
        let pairs = vec![
            PairKey::new("AAA", "BBB").unwrap(),
            PairKey::new("AAA", "CCC").unwrap(),
        ];
        let run =
            coint_filter(&panel, &panel.date_window(), &pairs, &CointConfig::default()).unwrap();
        assert_eq!(run.results.len(), 1);
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].0, PairKey::new("AAA", "CCC").unwrap());
    }

    #[test]
    fn returns_basis_is_close_to_vacuous() {
        // Returns of independent walks are stationary, so the test on
        // returns flags "cointegration" even for unrelated tickers. The
        // mode exists for reproduction studies only.
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let x: Vec<f64> = walk(300, &mut rng).iter().map(|v| v + 500.0).collect();
        let y: Vec<f64> = walk(300, &mut rng).iter().map(|v| v + 500.0).collect();
        let panel = two_ticker_panel(&x, &y);
        let pair = PairKey::new("AAA", "BBB").unwrap();
        let cfg = CointConfig {
            basis: CointBasis::Returns,
            ..CointConfig::default()
        };
        let run =
            coint_filter(&panel, &panel.date_window(), &[pair], &cfg).unwrap();
        assert_eq!(run.results.len(), 1);
        assert!(run.results[0].cointegrated);
    }

    #[test]
    fn results_sorted_by_pvalue() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let base = walk(300, &mut rng);
        let y: Vec<f64> = base.iter().map(|v| v + 400.0).collect();
        let tight = ar1(300, 0.2, &mut rng);
        let loose = walk(300, &mut rng);
        let x1: Vec<f64> = y.iter().zip(&tight).map(|(a, b)| a + b + 20.0).collect();
        let x2: Vec<f64> = loose.iter().map(|v| v + 400.0).collect();
        let dates: Vec<NaiveDate> = (0..300i64)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(i))
            .collect();
        let mut prices = Vec::new();
        for i in 0..300 {
            prices.push(x1[i]);
            prices.push(x2[i]);
            prices.push(y[i]);
        }
        let panel = PricePanel::new(
            dates,
            vec!["P1".into(), "P2".into(), "QQ".into()],
            prices,
        )
        .unwrap();
        let pairs = vec![
            PairKey::new("P1", "QQ").unwrap(),
            PairKey::new("P2", "QQ").unwrap(),
        ];
        let run =
            coint_filter(&panel, &panel.date_window(), &pairs, &CointConfig::default()).unwrap();
        assert_eq!(run.results.len(), 2);
        assert!(run.results[0].adf.p_value <= run.results[1].adf.p_value);
        assert_eq!(run.results[0].pair, PairKey::new("P1", "QQ").unwrap());
    }
}
