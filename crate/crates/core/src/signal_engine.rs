//! Spread model fitting, z-scores, and the two-threshold entry/exit state
//! machine.
//!
//! Timing contract: the position held over day t is decided from the
//! z-score of day t-1, so no same-day information leaks into the signal.
//! Position +1 means the spread is rich: short the first-named ticker,
//! long the second. Any open position is force-closed on the final date.

use chrono::NaiveDate;

use crate::cointegration::fit_ols;
use crate::error::{Error, Result};
use crate::market_data::{PricePanel, WindowSpec};
use crate::num::{mean, sample_std, Real};
use crate::pair_screen::PairKey;

/// Minimum window length for fitting a spread model on panel data.
pub const MIN_FIT_POINTS: usize = 15;

/// Entry/exit thresholds in z-score units, `0 <= theta_out < theta_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<F: Real> {
    theta_in: F,
    theta_out: F,
}

impl<F: Real> Thresholds<F> {
    pub fn new(theta_in: F, theta_out: F) -> Result<Self> {
        if !(theta_out >= F::zero() && theta_out < theta_in) {
            return Err(Error::Config(format!(
                "thresholds need 0 <= theta_out < theta_in, got in={theta_in} out={theta_out}"
            )));
        }
        Ok(Self {
            theta_in,
            theta_out,
        })
    }

    pub fn theta_in(&self) -> F {
        self.theta_in
    }

    pub fn theta_out(&self) -> F {
        self.theta_out
    }
}

/// Spread parameters frozen on a fit window and applied forward unchanged:
/// hedge ratio, intercept, and the spread's in-window mean and standard
/// deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadModel<F: Real> {
    pub pair: PairKey,
    pub beta: F,
    pub alpha: F,
    pub mu_z: F,
    pub sigma_z: F,
    /// Window the parameters were estimated on (clamped to actual data).
    pub fit_window: WindowSpec,
}

impl<F: Real> SpreadModel<F> {
    /// Fit directly from price series (already restricted to the window
    /// the caller wants frozen). Panel-level callers should prefer
    /// [`fit_spread_model`], which slices and enforces the minimum length.
    pub fn from_series(
        x: &[F],
        y: &[F],
        pair: PairKey,
        fit_window: WindowSpec,
    ) -> Result<Self> {
        let ols = fit_ols(x, y, true)?;
        let mu_z = mean(&ols.residuals);
        let sigma_z = sample_std(&ols.residuals);
        if sigma_z <= F::zero() {
            return Err(Error::Degenerate("spread has zero variance".into()));
        }
        Ok(Self {
            pair,
            beta: ols.beta,
            alpha: ols.alpha,
            mu_z,
            sigma_z,
            fit_window,
        })
    }

    /// Z-score of one observation: `(x - alpha - beta*y - mu_z) / sigma_z`.
    pub fn z_score(&self, x_t: F, y_t: F) -> F {
        (x_t - self.alpha - self.beta * y_t - self.mu_z) / self.sigma_z
    }

    pub fn z_scores(&self, x: &[F], y: &[F]) -> Result<Vec<F>> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(x.iter()
            .zip(y.iter())
            .map(|(&a, &b)| self.z_score(a, b))
            .collect())
    }
}

/// Fit a spread model on the panel data inside `window` (>= 15 points).
/// The recorded `fit_window` is the effective (clamped) window, so
/// point-in-time checks compare against what was actually used.
pub fn fit_spread_model<F: Real>(
    panel: &PricePanel<F>,
    pair: &PairKey,
    window: &WindowSpec,
) -> Result<SpreadModel<F>> {
    let sliced = panel.slice(window)?;
    if sliced.n_dates() < MIN_FIT_POINTS {
        return Err(Error::TooShort {
            needed: MIN_FIT_POINTS,
            got: sliced.n_dates(),
        });
    }
    let x = sliced.series(pair.x())?;
    let y = sliced.series(pair.y())?;
    SpreadModel::from_series(&x, &y, pair.clone(), sliced.date_window())
}

/// How a position is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExitRule {
    /// Exit when |z| falls to theta_out (symmetric band around zero).
    #[default]
    Band,
    /// Exit when z touches or crosses zero, regardless of theta_out.
    ZeroCross,
}

/// One round trip. `exit_date` is the first flat date after the run, or
/// the final date when the position was force-closed there. `entry_z` /
/// `exit_z` are the prior-day scores that triggered each transition (for a
/// forced close, the final date's score).
#[derive(Debug, Clone, PartialEq)]
pub struct Trade<F: Real> {
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub direction: i8,
    pub entry_z: F,
    pub exit_z: F,
}

/// Dated z-scores, daily positions in {-1, 0, +1}, and the trade log.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries<F: Real> {
    pub dates: Vec<NaiveDate>,
    pub z_scores: Vec<F>,
    pub positions: Vec<i8>,
    pub trades: Vec<Trade<F>>,
}

/// State machine over a z-score series: returns positions (one per
/// observation, first always flat) and (entry_idx, exit_idx, direction)
/// index triples. For a forced final close exit_idx is the last index,
/// which is still part of the run.
pub fn positions_from_z<F: Real>(
    z: &[F],
    thresholds: &Thresholds<F>,
    exit: ExitRule,
) -> (Vec<i8>, Vec<(usize, usize, i8)>) {
    let n = z.len();
    let mut positions = vec![0i8; n];
    let mut trades = Vec::new();
    let mut open: Option<(usize, i8)> = None;

    for t in 1..n {
        let signal = z[t - 1];
        let prev = positions[t - 1];
        if prev == 0 {
            positions[t] = if signal > thresholds.theta_in() {
                1
            } else if signal < -thresholds.theta_in() {
                -1
            } else {
                0
            };
            if positions[t] != 0 {
                open = Some((t, positions[t]));
            }
        } else {
            let should_exit = match exit {
                ExitRule::Band => signal.abs() <= thresholds.theta_out(),
                ExitRule::ZeroCross => {
                    (prev > 0 && signal <= F::zero()) || (prev < 0 && signal >= F::zero())
                }
            };
            if should_exit {
                // Exit takes effect first; re-entry may use the next
                // day's score at the earliest.
                positions[t] = 0;
                let (entry, dir) = open.take().expect("open position");
                trades.push((entry, t, dir));
            } else {
                positions[t] = prev;
            }
        }
    }
    // Force-close anything still open on the final date.
    if let Some((entry, dir)) = open {
        trades.push((entry, n - 1, dir));
    }
    (positions, trades)
}

/// Apply the frozen model to aligned price series and run the state
/// machine. Sequential within the pair; pure across pairs.
pub fn generate_signals<F: Real>(
    model: &SpreadModel<F>,
    x: &[F],
    y: &[F],
    dates: &[NaiveDate],
    thresholds: &Thresholds<F>,
) -> Result<SignalSeries<F>> {
    generate_signals_with(model, x, y, dates, thresholds, ExitRule::Band)
}

pub fn generate_signals_with<F: Real>(
    model: &SpreadModel<F>,
    x: &[F],
    y: &[F],
    dates: &[NaiveDate],
    thresholds: &Thresholds<F>,
    exit: ExitRule,
) -> Result<SignalSeries<F>> {
    if x.len() != dates.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: dates.len(),
        });
    }
    let z = model.z_scores(x, y)?;
    Ok(signals_from_z(z, dates, thresholds, exit))
}

fn signals_from_z<F: Real>(
    z: Vec<F>,
    dates: &[NaiveDate],
    thresholds: &Thresholds<F>,
    exit: ExitRule,
) -> SignalSeries<F> {
    let (positions, trade_idx) = positions_from_z(&z, thresholds, exit);
    let trades = trade_idx
        .into_iter()
        .map(|(entry, exit_i, direction)| Trade {
            entry_date: dates[entry],
            exit_date: dates[exit_i],
            direction,
            entry_z: z[entry - 1],
            exit_z: if positions[exit_i] == 0 {
                z[exit_i - 1]
            } else {
                z[exit_i]
            },
        })
        .collect();
    SignalSeries {
        dates: dates.to_vec(),
        z_scores: z,
        positions,
        trades,
    }
}

/// Rolling-window alternative to the frozen model: for each date from
/// `lookback` on, the spread parameters are re-estimated on the trailing
/// `lookback` observations ending the previous day, and the z-score of the
/// current observation uses those parameters. Output starts at index
/// `lookback`.
pub fn generate_signals_rolling<F: Real>(
    pair: &PairKey,
    x: &[F],
    y: &[F],
    dates: &[NaiveDate],
    lookback: usize,
    thresholds: &Thresholds<F>,
) -> Result<SignalSeries<F>> {
    if x.len() != y.len() || x.len() != dates.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: dates.len(),
        });
    }
    if lookback < MIN_FIT_POINTS {
        return Err(Error::Config(format!(
            "rolling lookback must be at least {MIN_FIT_POINTS}"
        )));
    }
    if x.len() <= lookback {
        return Err(Error::TooShort {
            needed: lookback + 1,
            got: x.len(),
        });
    }
    let mut z = Vec::with_capacity(x.len() - lookback);
    for t in lookback..x.len() {
        let window = WindowSpec::new(dates[t - lookback], dates[t - 1])?;
        let model =
            SpreadModel::from_series(&x[t - lookback..t], &y[t - lookback..t], pair.clone(), window)?;
        z.push(model.z_score(x[t], y[t]));
    }
    Ok(signals_from_z(
        z,
        &dates[lookback..],
        thresholds,
        ExitRule::Band,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn d(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + chrono::Duration::days(i as i64)
    }

    fn dates(n: usize) -> Vec<NaiveDate> {
        (0..n).map(d).collect()
    }

    fn fixture_model() -> SpreadModel<f64> {
        // The 4-point hedge fixture: beta=1.4, alpha=0.5,
        // residuals [0.1, -0.3, 0.3, -0.1], mu=0, sigma=sqrt(0.2/3).
        let y = [1.0f64, 2.0, 3.0, 4.0];
        let x = [2.0f64, 3.0, 5.0, 6.0];
        let window = WindowSpec::new(d(0), d(3)).unwrap();
        SpreadModel::from_series(&x, &y, PairKey::new("X", "Y").unwrap(), window).unwrap()
    }

    #[test]
    fn thresholds_validate_ordering() {
        assert!(Thresholds::new(2.0f64, 0.5).is_ok());
        assert!(Thresholds::new(1.0f64, 1.0).is_err());
        assert!(Thresholds::new(1.0f64, -0.1).is_err());
        assert!(Thresholds::new(0.0f64, 0.0).is_err());
    }

    #[test]
    fn fixture_moments() {
        let m = fixture_model();
        assert_relative_eq!(m.beta, 1.4, epsilon = 1e-12);
        assert_relative_eq!(m.alpha, 0.5, epsilon = 1e-12);
        assert!(m.mu_z.abs() < 1e-12);
        assert_relative_eq!(m.sigma_z, (0.2f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(m.sigma_z, 0.2582, epsilon = 1e-4);
    }

    #[test]
    fn z_score_examples() {
        let m = fixture_model();
        // Spread exactly at the mean.
        let y0 = 2.0;
        let x_at_mean = m.alpha + m.beta * y0 + m.mu_z;
        assert!(m.z_score(x_at_mean, y0).abs() < 1e-12);
        // One standard deviation above.
        assert_relative_eq!(m.z_score(x_at_mean + m.sigma_z, y0), 1.0, epsilon = 1e-12);
        // Hand-computed point: (6.2 - 0.5 - 5.6) / 0.2582 ~ 0.3873.
        assert_relative_eq!(m.z_score(6.2, 4.0), 0.3873, epsilon = 1e-4);
    }

    #[test]
    fn identical_series_degenerate() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let window = WindowSpec::new(d(0), d(4)).unwrap();
        assert!(matches!(
            SpreadModel::from_series(&x, &x, PairKey::new("A", "B").unwrap(), window),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn spread_recovery_on_noisy_pair() {
        use rand::Rng;
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let n = 4000;
        let y: Vec<f64> = (0..n).map(|i| 100.0 + (i as f64) * 0.01).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|v| 2.0 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let window = WindowSpec::new(d(0), d(n - 1)).unwrap();
        let m = SpreadModel::from_series(&x, &y, PairKey::new("A", "B").unwrap(), window).unwrap();
        let tol = 3.0 / (n as f64).sqrt();
        assert!((m.beta - 2.0).abs() < tol * 3.0, "beta {}", m.beta);
        assert!(m.mu_z.abs() < tol, "mu {}", m.mu_z);
        assert!((m.sigma_z - 1.0).abs() < tol * 3.0, "sigma {}", m.sigma_z);
    }

    // --- state machine ---

    fn run_z(z: &[f64], theta_in: f64, theta_out: f64) -> (Vec<i8>, Vec<(usize, usize, i8)>) {
        let th = Thresholds::new(theta_in, theta_out).unwrap();
        positions_from_z(z, &th, ExitRule::Band)
    }

    #[test]
    fn hand_traced_entry_and_forced_close() {
        let (pos, trades) = run_z(&[0.0, 2.5, 1.5, 0.3], 2.0, 0.5);
        assert_eq!(pos, vec![0, 0, 1, 1]);
        // The exit signal (z = 0.3) arrives on the final date, so the
        // position is force-closed there: one trade.
        assert_eq!(trades, vec![(2, 3, 1)]);
    }

    #[test]
    fn hand_traced_negative_entry() {
        let (pos, trades) = run_z(&[-3.0, -3.0, -3.0], 2.0, 0.5);
        assert_eq!(pos, vec![0, -1, -1]);
        assert_eq!(trades, vec![(1, 2, -1)]);
    }

    #[test]
    fn no_entry_inside_band() {
        let (pos, trades) = run_z(&[1.0, -1.5, 0.5, 1.9, -1.0], 2.0, 0.5);
        assert!(pos.iter().all(|&p| p == 0));
        assert!(trades.is_empty());
    }

    #[test]
    fn normal_exit_mid_series() {
        let (pos, trades) = run_z(&[0.0, 2.5, 0.3, 0.1, 0.0], 2.0, 0.5);
        assert_eq!(pos, vec![0, 0, 1, 0, 0]);
        assert_eq!(trades, vec![(2, 3, 1)]);
    }

    #[test]
    fn exit_with_zero_band_needs_exact_zero() {
        let (pos, trades) = run_z(&[0.0, 2.5, 0.001, -0.001, 0.0, 0.5], 2.0, 0.0);
        // |z| never equals zero until index 4; position holds through it.
        assert_eq!(pos, vec![0, 0, 1, 1, 1, 0]);
        assert_eq!(trades, vec![(2, 5, 1)]);
    }

    #[test]
    fn zero_cross_exit_rule() {
        let th = Thresholds::new(2.0f64, 0.5).unwrap();
        let z = [0.0, 2.5, 1.2, -0.1, 0.4];
        let (pos, trades) = positions_from_z(&z, &th, ExitRule::ZeroCross);
        // Band rule would exit on z=-0.1 too; zero-cross ignores theta_out.
        assert_eq!(pos, vec![0, 0, 1, 1, 0]);
        assert_eq!(trades, vec![(2, 4, 1)]);
    }

    #[test]
    fn entries_equal_exits() {
        let z = [0.0, 3.0, 0.2, -2.5, -1.0, -0.1, 2.2, 2.2];
        let (pos, trades) = run_z(&z, 2.0, 0.5);
        assert_eq!(pos[0], 0);
        // Each trade is a complete (entry, exit) record.
        let entries = trades.len();
        let runs = pos
            .windows(2)
            .filter(|w| w[0] == 0 && w[1] != 0)
            .count();
        assert_eq!(entries, runs);
    }

    #[test]
    fn signals_carry_dates_and_trigger_scores() {
        let m = fixture_model();
        let y = vec![2.0f64; 6];
        let base = m.alpha + m.beta * 2.0;
        // z path: 0, 2.5, 1.5, 0.3, 0.0, 0.0
        let zs = [0.0, 2.5, 1.5, 0.3, 0.0, 0.0];
        let x: Vec<f64> = zs.iter().map(|z| base + z * m.sigma_z).collect();
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let sig = generate_signals(&m, &x, &y, &dates(6), &th).unwrap();
        assert_eq!(sig.positions, vec![0, 0, 1, 1, 0, 0]);
        assert_eq!(sig.trades.len(), 1);
        let trade = &sig.trades[0];
        assert_eq!(trade.entry_date, d(2));
        assert_eq!(trade.exit_date, d(4));
        assert_relative_eq!(trade.entry_z, 2.5, epsilon = 1e-9);
        assert_relative_eq!(trade.exit_z, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn affine_spread_rescale_keeps_z_scores() {
        // x' = alpha + beta*y + k*z has the same fitted z-scores because
        // in-sample residuals are orthogonal to the regressor.
        let y = [1.0f64, 2.0, 3.0, 4.0];
        let x = [2.0f64, 3.0, 5.0, 6.0];
        let m = fixture_model();
        let k = 3.7;
        let x2: Vec<f64> = x
            .iter()
            .zip(y.iter())
            .map(|(&xi, &yi)| {
                let z = xi - m.alpha - m.beta * yi;
                m.alpha + m.beta * yi + k * z
            })
            .collect();
        let window = WindowSpec::new(d(0), d(3)).unwrap();
        let m2 =
            SpreadModel::from_series(&x2, &y, PairKey::new("X", "Y").unwrap(), window).unwrap();
        for i in 0..4 {
            assert_relative_eq!(
                m.z_score(x[i], y[i]),
                m2.z_score(x2[i], y[i]),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn sign_antisymmetry() {
        let z: Vec<f64> = vec![0.0, 2.4, 1.0, 0.2, -2.6, -1.2, -0.3, 0.0, 2.1];
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let (pos_a, trades_a) = run_z(&z, 2.0, 0.5);
        let (pos_b, trades_b) = run_z(&neg, 2.0, 0.5);
        let flipped: Vec<i8> = pos_a.iter().map(|p| -p).collect();
        assert_eq!(pos_b, flipped);
        assert_eq!(trades_a.len(), trades_b.len());
        for (a, b) in trades_a.iter().zip(trades_b.iter()) {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert_eq!(a.2, -b.2);
        }
    }

    #[test]
    fn rolling_mode_runs_and_respects_lookback() {
        use rand::Rng;
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(21);
        let n = 80;
        let y: Vec<f64> = (0..n).map(|i| 50.0 + i as f64 * 0.1).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|v| 1.2 * v + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let th = Thresholds::new(2.0, 0.5).unwrap();
        let pair = PairKey::new("A", "B").unwrap();
        let sig = generate_signals_rolling(&pair, &x, &y, &dates(n), 20, &th).unwrap();
        assert_eq!(sig.dates.len(), n - 20);
        assert_eq!(sig.positions.len(), n - 20);
        assert_eq!(sig.positions[0], 0);
    }

    proptest! {
        // Positions at time t depend only on z[0..t-1]: appending future
        // observations never rewrites the past.
        #[test]
        fn prefix_stability(
            z in proptest::collection::vec(-4.0f64..4.0, 4..60),
            extra in proptest::collection::vec(-4.0f64..4.0, 1..20))
        {
            let th = Thresholds::new(2.0f64, 0.5).unwrap();
            let (pos_a, _) = positions_from_z(&z, &th, ExitRule::Band);
            let mut longer = z.clone();
            longer.extend_from_slice(&extra);
            let (pos_b, _) = positions_from_z(&longer, &th, ExitRule::Band);
            prop_assert_eq!(&pos_a[..], &pos_b[..z.len()]);
        }

        // Every nonzero run in positions maps to exactly one trade.
        #[test]
        fn runs_match_trades(z in proptest::collection::vec(-4.0f64..4.0, 2..80)) {
            let th = Thresholds::new(1.5f64, 0.3).unwrap();
            let (pos, trades) = positions_from_z(&z, &th, ExitRule::Band);
            let mut runs = 0;
            for t in 1..pos.len() {
                if pos[t] != 0 && pos[t - 1] == 0 {
                    runs += 1;
                }
            }
            prop_assert_eq!(runs, trades.len());
            prop_assert_eq!(pos[0], 0);
        }
    }
}
