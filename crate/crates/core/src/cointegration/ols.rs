//! Ordinary least squares: the closed-form two-variable fit used for hedge
//! ratios, and a small Householder-QR solver for the multi-column test
//! regressions.

use crate::error::{Error, Result};
use crate::num::{mean, Real};

/// Two-variable OLS fit of `x` on `y`: `x = alpha + beta * y + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<F: Real> {
    pub beta: F,
    pub alpha: F,
    pub residuals: Vec<F>,
    pub r_squared: F,
}

/// Closed-form normal-equation fit of `x` on `y`. With `with_intercept`
/// false the intercept is pinned to zero (`beta = sum(xy)/sum(y^2)`).
pub fn fit_ols<F: Real>(x: &[F], y: &[F], with_intercept: bool) -> Result<OlsFit<F>> {
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

    let (beta, alpha) = if with_intercept {
        let mx = mean(x);
        let my = mean(y);
        let mut sxy = F::zero();
        let mut syy = F::zero();
        for (&xi, &yi) in x.iter().zip(y.iter()) {
            sxy = sxy + (xi - mx) * (yi - my);
            syy = syy + (yi - my) * (yi - my);
        }
        if syy == F::zero() {
            return Err(Error::Degenerate("zero-variance regressor".into()));
        }
        let beta = sxy / syy;
        (beta, mx - beta * my)
    } else {
        let mut sxy = F::zero();
        let mut syy = F::zero();
        for (&xi, &yi) in x.iter().zip(y.iter()) {
            sxy = sxy + xi * yi;
            syy = syy + yi * yi;
        }
        if syy == F::zero() {
            return Err(Error::Degenerate("zero regressor".into()));
        }
        (sxy / syy, F::zero())
    };

    let residuals: Vec<F> = x
        .iter()
        .zip(y.iter())
        .map(|(&xi, &yi)| xi - alpha - beta * yi)
        .collect();
    let ssr = residuals.iter().fold(F::zero(), |acc, &z| acc + z * z);
    // Centered total sum of squares with an intercept, uncentered without.
    let sst = if with_intercept {
        let mx = mean(x);
        x.iter().fold(F::zero(), |acc, &xi| {
            acc + (xi - mx) * (xi - mx)
        })
    } else {
        x.iter().fold(F::zero(), |acc, &xi| acc + xi * xi)
    };
    let r_squared = if sst == F::zero() {
        F::one()
    } else {
        (F::one() - ssr / sst).min(F::one()).max(F::zero())
    };

    Ok(OlsFit {
        beta,
        alpha,
        residuals,
        r_squared,
    })
}

/// Multi-column least-squares solution with coefficient standard errors,
/// via Householder QR. Columns are the design matrix; `y` the response.
#[derive(Debug, Clone)]
pub struct Lstsq<F: Real> {
    pub coefs: Vec<F>,
    pub stderrs: Vec<F>,
    pub ssr: F,
    pub nobs: usize,
    pub ncols: usize,
}

pub fn lstsq<F: Real>(cols: &[Vec<F>], y: &[F]) -> Result<Lstsq<F>> {
    let k = cols.len();
    let n = y.len();
    if k == 0 || cols.iter().any(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: cols.first().map_or(0, |c| c.len()),
            right: n,
        });
    }
    if n <= k {
        return Err(Error::TooShort { needed: k + 1, got: n });
    }

    // Column-major working copy of [A | y].
    let mut a: Vec<Vec<F>> = cols.to_vec();
    let mut b: Vec<F> = y.to_vec();

    let mut r_diag_max = F::zero();
    for j in 0..k {
        // Householder reflector for column j over rows j..n.
        let norm = a[j][j..n]
            .iter()
            .fold(F::zero(), |acc, &v| acc + v * v)
            .sqrt();
        if norm == F::zero() {
            return Err(Error::Numerical("singular design matrix".into()));
        }
        let alpha = if a[j][j] >= F::zero() { -norm } else { norm };
        let mut v: Vec<F> = (j..n).map(|i| a[j][i]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(F::zero(), |acc, &t| acc + t * t);
        if vnorm2 > F::zero() {
            // Apply I - 2 v v^T / (v^T v) to the remaining columns and b.
            for col in a.iter_mut().skip(j) {
                let mut dot = F::zero();
                for (t, &vi) in v.iter().enumerate() {
                    dot = dot + vi * col[j + t];
                }
                let f = F::of(2.0) * dot / vnorm2;
                for (t, &vi) in v.iter().enumerate() {
                    col[j + t] = col[j + t] - f * vi;
                }
            }
            let mut dot = F::zero();
            for (t, &vi) in v.iter().enumerate() {
                dot = dot + vi * b[j + t];
            }
            let f = F::of(2.0) * dot / vnorm2;
            for (t, &vi) in v.iter().enumerate() {
                b[j + t] = b[j + t] - f * vi;
            }
        }
        a[j][j] = alpha;
        r_diag_max = r_diag_max.max(alpha.abs());
    }

    // Rank check against the largest diagonal.
    let tol = r_diag_max * F::of(1e-12);
    if a.iter().enumerate().any(|(j, col)| col[j].abs() <= tol) {
        return Err(Error::Numerical("singular design matrix".into()));
    }

    // Back-substitute R x = Q^T y (upper k rows of b).
    let mut coefs = vec![F::zero(); k];
    for j in (0..k).rev() {
        let mut s = b[j];
        for (m, &c) in coefs.iter().enumerate().take(k).skip(j + 1) {
            s = s - a[m][j] * c;
        }
        coefs[j] = s / a[j][j];
    }

    // Residual sum of squares is the norm of the bottom part of Q^T y.
    let mut ssr = F::zero();
    for &bi in b.iter().take(n).skip(k) {
        ssr = ssr + bi * bi;
    }

    // Covariance of coefficients: sigma^2 (R^T R)^-1; the diagonal comes
    // from the squared row norms of R^-1.
    let mut rinv = vec![vec![F::zero(); k]; k];
    for j in (0..k).rev() {
        rinv[j][j] = F::one() / a[j][j];
        for i in (0..j).rev() {
            let mut s = F::zero();
            for m in (i + 1)..=j {
                s = s + a[m][i] * rinv[j][m];
            }
            rinv[j][i] = -s / a[i][i];
        }
    }
    let sigma2 = ssr / F::of((n - k) as f64);
    let stderrs: Vec<F> = (0..k)
        .map(|i| {
            let mut row = F::zero();
            for rcol in rinv.iter().skip(i) {
                row = row + rcol[i] * rcol[i];
            }
            (sigma2 * row).sqrt()
        })
        .collect();

    Ok(Lstsq {
        coefs,
        stderrs,
        ssr,
        nobs: n,
        ncols: k,
    })
}
