//! Augmented Dickey-Fuller unit-root test with AIC lag selection.
//!
//! Test regression (constant, no trend):
//! `dz_t = c + gamma * z_{t-1} + sum_{i=1..p} phi_i * dz_{t-i} + e_t`.
//! The lag order p minimizes AIC over 0..=max_lags, with all candidates
//! fit on a common sample trimmed at max_lags; the reported statistic comes
//! from a refit on the full sample available at the chosen lag. This
//! matches the reference econometrics implementations, so fixture
//! statistics agree to high precision.

use crate::error::{Error, Result};
use crate::num::Real;

use super::mackinnon;
use super::ols::lstsq;

/// Result of the Augmented Dickey-Fuller test.
#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult<F: Real> {
    /// t-statistic of the lagged-level coefficient.
    pub t_stat: F,
    /// Asymptotic p-value from the MacKinnon response surface.
    pub p_value: F,
    /// Lag order selected by AIC.
    pub lags_used: usize,
    /// Observations in the final test regression.
    pub n_obs: usize,
}

/// Schwert's rule of thumb: `floor(12 * (T/100)^(1/4))`.
pub fn schwert_max_lags(t: usize) -> usize {
    (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

/// ADF test with a constant, lag order chosen by AIC over
/// `0..=max_lags` (default: Schwert's rule). The p-value uses the plain
/// unit-root surface; cointegration residuals go through
/// [`super::engle_granger`], which applies the stricter surface.
pub fn adf_test<F: Real>(series: &[F], max_lags: Option<usize>) -> Result<AdfResult<F>> {
    let (t_stat, lags_used, n_obs) = adf_tstat(series, max_lags)?;
    let p_value = F::of(mackinnon::tau_pvalue(t_stat.to64(), 1));
    Ok(AdfResult {
        t_stat,
        p_value,
        lags_used,
        n_obs,
    })
}

/// The regression machinery shared by the plain test and the
/// Engle-Granger residual test: returns (t_stat, lags_used, n_obs).
pub(crate) fn adf_tstat<F: Real>(
    series: &[F],
    max_lags: Option<usize>,
) -> Result<(F, usize, usize)> {
    let t_len = series.len();
    if t_len < 15 {
        return Err(Error::TooShort {
            needed: 15,
            got: t_len,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite input".into()));
    }

    // Cap so the trimmed selection sample keeps positive degrees of
    // freedom: nobs = T-1-maxlag rows against maxlag+2 columns.
    let cap = (t_len - 4) / 2;
    let max_lags = max_lags.unwrap_or_else(|| schwert_max_lags(t_len)).min(cap);

    let diffs: Vec<F> = series.windows(2).map(|w| w[1] - w[0]).collect();

    // Lag selection on the common sample trimmed at max_lags.
    let best_lag = if max_lags == 0 {
        0
    } else {
        let offset = max_lags;
        let nsel = diffs.len() - offset;
        let endog: Vec<F> = diffs[offset..].to_vec();
        let level: Vec<F> = (0..nsel).map(|r| series[offset + r]).collect();
        let ones: Vec<F> = vec![F::one(); nsel];

        let mut best: Option<(f64, usize)> = None;
        for p in 0..=max_lags {
            let mut cols: Vec<Vec<F>> = Vec::with_capacity(p + 2);
            cols.push(level.clone());
            for lag in 1..=p {
                cols.push((0..nsel).map(|r| diffs[offset + r - lag]).collect());
            }
            cols.push(ones.clone());
            let fit = match lstsq(&cols, &endog) {
                Ok(f) => f,
                Err(e) => {
                    // A singular candidate at p = 0 means the series itself
                    // is degenerate; higher lags just skip the candidate.
                    if p == 0 {
                        return Err(e);
                    }
                    continue;
                }
            };
            let n = fit.nobs as f64;
            let k = fit.ncols as f64;
            let aic = n * (fit.ssr.to64() / n).ln() + 2.0 * k;
            match best {
                Some((b, _)) if aic >= b => {}
                _ => best = Some((aic, p)),
            }
        }
        best
            .ok_or_else(|| Error::Numerical("no admissible lag order".into()))?
            .1
    };

    // Final regression on everything available at the chosen lag.
    let offset = best_lag;
    let nfin = diffs.len() - offset;
    let endog: Vec<F> = diffs[offset..].to_vec();
    let mut cols: Vec<Vec<F>> = Vec::with_capacity(best_lag + 2);
    cols.push((0..nfin).map(|r| series[offset + r]).collect());
    for lag in 1..=best_lag {
        cols.push((0..nfin).map(|r| diffs[offset + r - lag]).collect());
    }
    cols.push(vec![F::one(); nfin]);
    let fit = lstsq(&cols, &endog)?;
    let t_stat = fit.coefs[0] / fit.stderrs[0];
    Ok((t_stat, best_lag, nfin))
}
