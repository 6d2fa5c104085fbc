//! MacKinnon response-surface p-values for the Dickey-Fuller tau
//! statistic, constant-only case.
//!
//! The coefficient table ships as `data/mackinnon_tau_c.csv`; its header
//! documents provenance and the regeneration procedure. `n_vars = 1` is the
//! plain unit-root surface, `n_vars = 2` the residual-based two-variable
//! Engle-Granger surface (stricter, because the hedge ratio is estimated).

use once_cell::sync::Lazy;
use statrs::distribution::{ContinuousCDF, Normal};

static TABLE_CSV: &str = include_str!("../../data/mackinnon_tau_c.csv");

#[derive(Debug, Clone)]
struct TauRow {
    n_vars: usize,
    tau_min: f64,
    tau_max: f64,
    tau_star: f64,
    small: [f64; 3],
    large: [f64; 4],
}

static TABLE: Lazy<Vec<TauRow>> = Lazy::new(|| {
    let mut rows = Vec::new();
    for line in TABLE_CSV.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("n_vars") {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse().expect("numeric field in tau table"))
            .collect();
        assert_eq!(f.len(), 11, "tau table row needs 11 fields");
        rows.push(TauRow {
            n_vars: f[0] as usize,
            tau_min: f[1],
            tau_max: f[2],
            tau_star: f[3],
            small: [f[4], f[5], f[6]],
            large: [f[7], f[8], f[9], f[10]],
        });
    }
    assert!(!rows.is_empty(), "tau table is empty");
    rows
});

/// Largest `n_vars` the table covers.
pub fn max_n_vars() -> usize {
    TABLE.iter().map(|r| r.n_vars).max().unwrap_or(0)
}

/// Asymptotic p-value of a constant-case tau statistic. Clamped to 0 below
/// the surface's support and to 1 above it, so the result is always a
/// probability.
pub fn tau_pvalue(t_stat: f64, n_vars: usize) -> f64 {
    let row = TABLE
        .iter()
        .find(|r| r.n_vars == n_vars)
        .unwrap_or_else(|| panic!("no tau surface for n_vars = {n_vars}"));
    if t_stat.is_nan() {
        return f64::NAN;
    }
    if t_stat > row.tau_max {
        return 1.0;
    }
    if t_stat < row.tau_min {
        return 0.0;
    }
    let z = if t_stat <= row.tau_star {
        row.small[0] + row.small[1] * t_stat + row.small[2] * t_stat * t_stat
    } else {
        row.large[0]
            + row.large[1] * t_stat
            + row.large[2] * t_stat * t_stat
            + row.large[3] * t_stat * t_stat * t_stat
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.cdf(z).clamp(0.0, 1.0)
}

/// Inverse of [`tau_pvalue`] by bisection: the tau value whose p-value is
/// `p`. Used by the Monte-Carlo validation harness.
pub fn tau_quantile(p: f64, n_vars: usize) -> f64 {
    assert!((0.0..1.0).contains(&p) && p > 0.0);
    let (mut lo, mut hi) = (-20.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tau_pvalue(mid, n_vars) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
