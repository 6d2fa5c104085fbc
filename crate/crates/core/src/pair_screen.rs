//! Pair universe enumeration and correlation screening.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::{ReturnPanel, WindowSpec};
use crate::num::{mean, Real};

/// Default correlation threshold for the screening pass.
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.8;

/// Number of histogram bins over [-1, 1] emitted by the screen phase.
pub const HISTOGRAM_BINS: usize = 40;

/// An unordered ticker pair in canonical form: `x < y` lexicographically,
/// so (A,B) and (B,A) collapse to one key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    x: String,
    y: String,
}

impl PairKey {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(Error::Config(format!("pair of identical tickers {a:?}")));
        }
        if a < b {
            Ok(Self { x: a, y: b })
        } else {
            Ok(Self { x: b, y: a })
        }
    }

    /// First-named ticker: the regressand in the cointegrating regression.
    pub fn x(&self) -> &str {
        &self.x
    }

    /// Second-named ticker: the regressor.
    pub fn y(&self) -> &str {
        &self.y
    }

    /// File-name friendly label `X_Y`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.x, self.y)
    }
}

impl std::fmt::Display for PairKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Screening outcome for one pair. `correlation` is `None` when either leg
/// was degenerate (zero variance or non-finite returns); such pairs never
/// pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult<F: Real> {
    pub pair: PairKey,
    pub correlation: Option<F>,
    pub passed: bool,
}

/// All `n(n-1)/2` canonical pairs of the distinct tickers, in lexicographic
/// order.
pub fn enumerate_pairs(tickers: &[String]) -> Result<Vec<PairKey>> {
    let mut distinct: Vec<&String> = tickers.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 distinct tickers, got {}",
            distinct.len()
        )));
    }
    let n = distinct.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(PairKey {
                x: distinct[i].clone(),
                y: distinct[j].clone(),
            });
        }
    }
    Ok(pairs)
}

/// Draw `k` distinct pairs uniformly without replacement, reproducible from
/// `seed`. Output is in draw order.
pub fn sample_pairs(pairs: &[PairKey], k: usize, seed: u64) -> Result<Vec<PairKey>> {
    if k == 0 || k > pairs.len() {
        return Err(Error::Config(format!(
            "sample size {k} out of range 1..={}",
            pairs.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    // Partial Fisher-Yates: the first k slots end up uniform without
    // replacement.
    for i in 0..k {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    Ok(idx[..k].iter().map(|&i| pairs[i].clone()).collect())
}

/// Pearson correlation with sample moments, clamped into [-1, 1] against
/// rounding. Inputs must be equal-length (>= 3), finite, and non-constant.
pub fn correlation<F: Real>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite input".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == F::zero() || syy == F::zero() {
        return Err(Error::Degenerate("zero-variance series".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.min(F::one()).max(-F::one()))
}

/// Correlation-screen every candidate pair on the returns inside `window`.
///
/// Results are one per candidate, sorted by descending correlation and then
/// by pair key; degenerate pairs sort last and are marked failed rather than
/// aborting the run. The per-pair work is a parallel map with a
/// deterministic merge, so output is identical at any thread count.
pub fn screen_universe<F: Real>(
    returns: &ReturnPanel<F>,
    window: &WindowSpec,
    threshold: F,
    pairs: Option<&[PairKey]>,
) -> Result<Vec<ScreenResult<F>>> {
    let windowed = returns.slice(window)?;
    if windowed.n_dates() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: windowed.n_dates(),
        });
    }
    let owned_pairs;
    let pairs: &[PairKey] = match pairs {
        Some(p) => p,
        None => {
            owned_pairs = enumerate_pairs(windowed.tickers())?;
            &owned_pairs
        }
    };

    // Per-ticker centering is hoisted out of the pair loop so each pair
    // costs one dot product.
    let n_cols = windowed.tickers().len();
    let mut centered: Vec<Vec<F>> = Vec::with_capacity(n_cols);
    let mut sumsq: Vec<F> = Vec::with_capacity(n_cols);
    let mut usable: Vec<bool> = Vec::with_capacity(n_cols);
    for c in 0..n_cols {
        let col = windowed.column(c);
        let finite = col.iter().all(|v| v.is_finite());
        let m = mean(&col);
        let centered_col: Vec<F> = col.iter().map(|&v| v - m).collect();
        let ss = centered_col
            .iter()
            .fold(F::zero(), |acc, &d| acc + d * d);
        usable.push(finite && ss > F::zero());
        sumsq.push(ss);
        centered.push(centered_col);
    }

    let col_index = |t: &str| windowed.ticker_index(t);
    let mut results: Vec<ScreenResult<F>> = pairs
        .par_iter()
        .map(|pair| {
            let (ci, cj) = match (col_index(pair.x()), col_index(pair.y())) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return ScreenResult {
                        pair: pair.clone(),
                        correlation: None,
                        passed: false,
                    }
                }
            };
            if !(usable[ci] && usable[cj]) {
                return ScreenResult {
                    pair: pair.clone(),
                    correlation: None,
                    passed: false,
                };
            }
            let mut dot = F::zero();
            for (&u, &v) in centered[ci].iter().zip(centered[cj].iter()) {
                dot = dot + u * v;
            }
            let r = dot / (sumsq[ci].sqrt() * sumsq[cj].sqrt());
            let r = r.min(F::one()).max(-F::one());
            ScreenResult {
                pair: pair.clone(),
                correlation: Some(r),
                passed: r >= threshold,
            }
        })
        .collect();

    results.sort_by(|a, b| match (a.correlation, b.correlation) {
        (Some(ra), Some(rb)) => rb
            .partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.pair.cmp(&b.pair)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.pair.cmp(&b.pair),
    });
    Ok(results)
}

/// One histogram bin over the correlation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: u64,
}

/// 40 equal bins over [-1, 1]; counts sum to the number of screened
/// (non-degenerate) pairs.
pub fn correlation_histogram<F: Real>(results: &[ScreenResult<F>]) -> Vec<HistogramBin> {
    let width = 2.0 / HISTOGRAM_BINS as f64;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for r in results {
        if let Some(c) = r.correlation {
            let idx = (((c.to64() + 1.0) / width).floor() as usize).min(HISTOGRAM_BINS - 1);
            counts[idx] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            low: -1.0 + i as f64 * width,
            high: -1.0 + (i + 1) as f64 * width,
            count,
        })
        .collect()
}
