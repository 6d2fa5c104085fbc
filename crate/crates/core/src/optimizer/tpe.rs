//! Sequential model-based threshold search with tree-structured Parzen
//! estimators.
//!
//! After `N_STARTUP` uniform trials over the feasible region, each step
//! splits the completed trials into the best GAMMA-quantile and the rest,
//! models both sets with product-Gaussian kernel densities (Scott's-rule
//! bandwidths, candidates clipped to the box), samples `N_CANDIDATES`
//! proposals from the good-set density and keeps the one with the highest
//! density ratio l(x)/g(x). The feasibility constraint theta_out <
//! theta_in is enforced by rejection. Fully reproducible from the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::num::{sample_std, Real};
use crate::signal_engine::Thresholds;

use super::{pick_best, SearchMethod, SearchResult, SearchSpace, Trial};

/// Uniform trials before the density model switches on.
pub const N_STARTUP: usize = 10;
/// Fraction of trials treated as the "good" set.
pub const GAMMA: f64 = 0.25;
/// Proposals scored per step.
pub const N_CANDIDATES: usize = 24;

const MAX_REJECTS: usize = 64;

/// Sequential Parzen-density search; `n_trials` must be at least
/// [`N_STARTUP`].
pub fn tpe_search<F, E>(
    space: &SearchSpace<F>,
    mut eval: E,
    n_trials: usize,
    seed: u64,
) -> Result<SearchResult<F>>
where
    F: Real,
    E: FnMut(&Thresholds<F>) -> Result<F>,
{
    if n_trials < N_STARTUP {
        return Err(Error::Config(format!(
            "need at least {N_STARTUP} trials, got {n_trials}"
        )));
    }
    let bounds = BoxBounds::from_space(space)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut history: Vec<Trial<F>> = Vec::with_capacity(n_trials);

    for index in 0..n_trials {
        let (ti, to) = if index < N_STARTUP {
            bounds.sample_uniform_feasible(&mut rng)?
        } else {
            propose(&history, &bounds, &mut rng)?
        };
        let thresholds = Thresholds::new(F::of(ti), F::of(to))?;
        let objective = eval(&thresholds)?;
        history.push(Trial {
            thresholds,
            objective,
            index,
        });
    }

    let best = pick_best(&history).expect("nonempty history");
    Ok(SearchResult {
        best: best.thresholds,
        best_objective: best.objective,
        history,
        method: SearchMethod::Tpe,
    })
}

/// The sampler works in f64 internally; thresholds convert at the edges.
struct BoxBounds {
    in_lo: f64,
    in_hi: f64,
    out_lo: f64,
    out_hi: f64,
}

impl BoxBounds {
    fn from_space<F: Real>(space: &SearchSpace<F>) -> Result<Self> {
        let b = Self {
            in_lo: space.theta_in.low.to64(),
            in_hi: space.theta_in.high.to64(),
            out_lo: space.theta_out.low.to64(),
            out_hi: space.theta_out.high.to64(),
        };
        if b.out_lo >= b.in_hi {
            return Err(Error::Config(
                "infeasible space: theta_out floor reaches theta_in ceiling".into(),
            ));
        }
        Ok(b)
    }

    fn feasible(&self, ti: f64, to: f64) -> bool {
        to < ti
    }

    fn sample_uniform_feasible(&self, rng: &mut ChaCha20Rng) -> Result<(f64, f64)> {
        for _ in 0..10_000 {
            let ti = rng.gen_range(self.in_lo..=self.in_hi);
            let to = rng.gen_range(self.out_lo..=self.out_hi);
            if self.feasible(ti, to) {
                return Ok((ti, to));
            }
        }
        Err(Error::Config(
            "feasible region too small to sample".into(),
        ))
    }
}

/// Spread estimate for the kernel bandwidth: min(sample std, IQR/1.349),
/// so a few scattered stragglers do not inflate the kernels around an
/// otherwise tight cluster.
fn robust_sigma(xs: &[f64]) -> f64 {
    let std = sample_std(xs);
    if xs.len() < 4 {
        return std;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let iqr = q(0.75) - q(0.25);
    std.min(iqr / 1.349)
}

/// Kernel-density model over observed (theta_in, theta_out) points:
/// truncated product-Gaussian kernels mixed with one uniform-over-the-box
/// component. The uniform component keeps unexplored regions alive; the
/// per-kernel truncation mass keeps boundary candidates competitive when
/// the optimum sits at a space edge.
struct Kde {
    points: Vec<(f64, f64)>,
    bw_in: f64,
    bw_out: f64,
    log_uniform: f64,
    /// ln of each kernel's in-box probability mass.
    log_mass: Vec<f64>,
}

impl Kde {
    fn fit(points: Vec<(f64, f64)>, bounds: &BoxBounds, bw_in: f64, bw_out: f64) -> Self {
        let range_in = bounds.in_hi - bounds.in_lo;
        let range_out = bounds.out_hi - bounds.out_lo;
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let box_mass = |c: f64, bw: f64, lo: f64, hi: f64| {
            (normal.cdf((hi - c) / bw) - normal.cdf((lo - c) / bw)).max(1e-300)
        };
        let log_mass = points
            .iter()
            .map(|&(ci, co)| {
                box_mass(ci, bw_in, bounds.in_lo, bounds.in_hi).ln()
                    + box_mass(co, bw_out, bounds.out_lo, bounds.out_hi).ln()
            })
            .collect();
        Self {
            points,
            bw_in,
            bw_out,
            log_uniform: -(range_in * range_out).ln(),
            log_mass,
        }
    }

    /// Sample one point: pick the uniform component or a kernel, add
    /// Gaussian noise, clip into the box.
    fn sample(&self, bounds: &BoxBounds, rng: &mut ChaCha20Rng) -> (f64, f64) {
        let idx = rng.gen_range(0..=self.points.len());
        if idx == self.points.len() {
            let ti = rng.gen_range(bounds.in_lo..=bounds.in_hi);
            let to = rng.gen_range(bounds.out_lo..=bounds.out_hi);
            return (ti, to);
        }
        let (ci, co) = self.points[idx];
        let ei: f64 = rng.sample(StandardNormal);
        let eo: f64 = rng.sample(StandardNormal);
        let ti = (ci + self.bw_in * ei).clamp(bounds.in_lo, bounds.in_hi);
        let to = (co + self.bw_out * eo).clamp(bounds.out_lo, bounds.out_hi);
        (ti, to)
    }

    fn log_pdf(&self, ti: f64, to: f64) -> f64 {
        // log-mean-exp over the kernels plus the uniform component.
        let norm = -(2.0 * std::f64::consts::PI * self.bw_in * self.bw_out).ln();
        let mut terms = Vec::with_capacity(self.points.len() + 1);
        for (k, &(ci, co)) in self.points.iter().enumerate() {
            let di = (ti - ci) / self.bw_in;
            let do_ = (to - co) / self.bw_out;
            terms.push(-0.5 * (di * di + do_ * do_) + norm - self.log_mass[k]);
        }
        terms.push(self.log_uniform);
        let max_term = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
        max_term + sum.ln() - (terms.len() as f64).ln()
    }
}

fn propose(
    history: &[Trial<impl Real>],
    bounds: &BoxBounds,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, f64)> {
    // Rank by objective descending (maximization); earlier trials win ties
    // so the split is deterministic.
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| {
        history[b]
            .objective
            .partial_cmp(&history[a].objective)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| history[a].index.cmp(&history[b].index))
    });
    let n_good = ((history.len() as f64 * GAMMA).ceil() as usize).clamp(1, history.len() - 1);

    let point = |i: usize| {
        (
            history[i].thresholds.theta_in().to64(),
            history[i].thresholds.theta_out().to64(),
        )
    };
    // Scott's rule in two dimensions over all observed trials, with the
    // robust spread estimate min(std, IQR/1.349), floored at 1% of the
    // axis range; both densities share the bandwidth pair.
    let all_in: Vec<f64> = (0..history.len()).map(|i| point(i).0).collect();
    let all_out: Vec<f64> = (0..history.len()).map(|i| point(i).1).collect();
    let factor = (history.len() as f64).powf(-1.0 / 6.0);
    let range_in = bounds.in_hi - bounds.in_lo;
    let range_out = bounds.out_hi - bounds.out_lo;
    let bw_in = (robust_sigma(&all_in) * factor)
        .max(0.01 * range_in)
        .min(range_in);
    let bw_out = (robust_sigma(&all_out) * factor)
        .max(0.01 * range_out)
        .min(range_out);
    let good = Kde::fit(
        order[..n_good].iter().map(|&i| point(i)).collect(),
        bounds,
        bw_in,
        bw_out,
    );
    let bad = Kde::fit(
        order[n_good..].iter().map(|&i| point(i)).collect(),
        bounds,
        bw_in,
        bw_out,
    );

    let mut best: Option<(f64, (f64, f64))> = None;
    for _ in 0..N_CANDIDATES {
        let mut candidate = None;
        for _ in 0..MAX_REJECTS {
            let (ti, to) = good.sample(bounds, rng);
            if bounds.feasible(ti, to) {
                candidate = Some((ti, to));
                break;
            }
        }
        let (ti, to) = match candidate {
            Some(c) => c,
            None => bounds.sample_uniform_feasible(rng)?,
        };
        let score = good.log_pdf(ti, to) - bad.log_pdf(ti, to);
        let replace = match best {
            None => true,
            Some((s, _)) => score > s,
        };
        if replace {
            best = Some((score, (ti, to)));
        }
    }
    Ok(best.expect("at least one candidate").1)
}
