//! Synthetic series generators: random walks, AR(1), Ornstein-Uhlenbeck
//! spreads, and cointegrated price pairs with known reversion strength.
//! Used by the test and acceptance suites; handy for demo data too.

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::market_data::PricePanel;
use crate::num::Real;

/// Seeded generator shared by all synthesizers.
pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn gauss<F: Real>(rng: &mut ChaCha20Rng) -> F {
    F::of(rng.sample::<f64, _>(StandardNormal))
}

/// `n` consecutive calendar dates starting at `start`.
pub fn dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n as i64).map(|i| start + chrono::Duration::days(i)).collect()
}

/// Driftless Gaussian random walk starting at `x0`.
pub fn random_walk<F: Real>(n: usize, sigma: F, x0: F, rng: &mut ChaCha20Rng) -> Vec<F> {
    let mut x = Vec::with_capacity(n);
    let mut cur = x0;
    x.push(cur);
    for _ in 1..n {
        cur = cur + sigma * gauss(rng);
        x.push(cur);
    }
    x
}

/// Zero-mean AR(1): `x_t = phi * x_{t-1} + sigma * e_t`.
pub fn ar1<F: Real>(n: usize, phi: F, sigma: F, rng: &mut ChaCha20Rng) -> Vec<F> {
    let mut x = Vec::with_capacity(n);
    let mut cur = F::zero();
    x.push(cur);
    for _ in 1..n {
        cur = phi * cur + sigma * gauss(rng);
        x.push(cur);
    }
    x
}

/// Discrete Ornstein-Uhlenbeck parameters. The daily autoregression is
/// `z_t = mu + phi (z_{t-1} - mu) + eps`, with `phi = 2^(-1/half_life)` so
/// a displacement halves in `half_life` steps.
#[derive(Debug, Clone, Copy)]
pub struct OuParams<F: Real> {
    pub half_life: F,
    pub mu: F,
    /// Stationary standard deviation of the process.
    pub stationary_sd: F,
}

impl<F: Real> OuParams<F> {
    pub fn phi(&self) -> F {
        F::of(2.0).powf(-F::one() / self.half_life)
    }

    /// Innovation scale giving the requested stationary sd.
    pub fn innovation_sd(&self) -> F {
        let phi = self.phi();
        self.stationary_sd * (F::one() - phi * phi).sqrt()
    }
}

/// Sample an OU path of length `n`, started at the stationary mean.
pub fn ou_path<F: Real>(n: usize, params: &OuParams<F>, rng: &mut ChaCha20Rng) -> Vec<F> {
    let phi = params.phi();
    let innov = params.innovation_sd();
    let mut z = Vec::with_capacity(n);
    let mut cur = params.mu;
    z.push(cur);
    for _ in 1..n {
        cur = params.mu + phi * (cur - params.mu) + innov * gauss(rng);
        z.push(cur);
    }
    z
}

/// Recipe for a cointegrated price pair: `y` is a positive geometric walk,
/// `x = alpha + beta * y + z` with an OU spread `z`.
#[derive(Debug, Clone, Copy)]
pub struct PairRecipe<F: Real> {
    pub n: usize,
    pub beta: F,
    pub alpha: F,
    pub y0: F,
    /// Daily log-volatility of the `y` leg.
    pub y_vol: F,
    pub spread: OuParams<F>,
}

impl<F: Real> Default for PairRecipe<F> {
    fn default() -> Self {
        Self {
            n: 500,
            beta: F::of(1.5),
            alpha: F::zero(),
            y0: F::of(100.0),
            y_vol: F::of(0.004),
            spread: OuParams {
                half_life: F::of(10.0),
                mu: F::zero(),
                stationary_sd: F::of(1.5),
            },
        }
    }
}

/// Generate the two price series of a cointegrated pair.
pub fn cointegrated_pair<F: Real>(recipe: &PairRecipe<F>, rng: &mut ChaCha20Rng) -> (Vec<F>, Vec<F>) {
    let mut y = Vec::with_capacity(recipe.n);
    let mut log_y = recipe.y0.ln();
    y.push(recipe.y0);
    for _ in 1..recipe.n {
        log_y = log_y + recipe.y_vol * gauss::<F>(rng);
        y.push(log_y.exp());
    }
    let z = ou_path(recipe.n, &recipe.spread, rng);
    let x: Vec<F> = y
        .iter()
        .zip(z.iter())
        .map(|(&yi, &zi)| recipe.alpha + recipe.beta * yi + zi)
        .collect();
    (x, y)
}

/// Two-ticker panel built from a pair recipe.
pub fn pair_panel<F: Real>(
    recipe: &PairRecipe<F>,
    ticker_x: &str,
    ticker_y: &str,
    start: NaiveDate,
    rng: &mut ChaCha20Rng,
) -> Result<PricePanel<F>> {
    let (x, y) = cointegrated_pair(recipe, rng);
    let mut prices = Vec::with_capacity(2 * recipe.n);
    let swap = ticker_x > ticker_y;
    for i in 0..recipe.n {
        if swap {
            prices.push(y[i]);
            prices.push(x[i]);
        } else {
            prices.push(x[i]);
            prices.push(y[i]);
        }
    }
    let tickers = if swap {
        vec![ticker_y.to_string(), ticker_x.to_string()]
    } else {
        vec![ticker_x.to_string(), ticker_y.to_string()]
    };
    PricePanel::new(dates(start, recipe.n), tickers, prices)
}

/// Panel of independent geometric random walks, for scale and null tests.
pub fn walk_universe<F: Real>(
    n_tickers: usize,
    n_days: usize,
    daily_vol: F,
    start: NaiveDate,
    rng: &mut ChaCha20Rng,
) -> Result<PricePanel<F>> {
    let mut cols: Vec<Vec<F>> = Vec::with_capacity(n_tickers);
    for _ in 0..n_tickers {
        let mut col = Vec::with_capacity(n_days);
        let mut log_p = F::of(100.0).ln();
        col.push(log_p.exp());
        for _ in 1..n_days {
            log_p = log_p + daily_vol * gauss::<F>(rng);
            col.push(log_p.exp());
        }
        cols.push(col);
    }
    let tickers: Vec<String> = (0..n_tickers).map(|i| format!("T{i:04}")).collect();
    let mut prices = Vec::with_capacity(n_tickers * n_days);
    for r in 0..n_days {
        for col in &cols {
            prices.push(col[r]);
        }
    }
    PricePanel::new(dates(start, n_days), tickers, prices)
}
