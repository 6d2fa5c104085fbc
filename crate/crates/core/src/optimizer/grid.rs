//! Exhaustive grid search over the feasible threshold grid.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal_engine::Thresholds;

use super::{pick_best, SearchMethod, SearchResult, SearchSpace, Trial};

/// Evaluate every feasible grid point exactly once. The iteration order
/// (theta_in ascending, theta_out ascending) combined with
/// strictly-greater replacement yields the documented tie-break: smaller
/// theta_in, then smaller theta_out.
pub fn grid_search<F, E>(space: &SearchSpace<F>, mut eval: E) -> Result<SearchResult<F>>
where
    F: Real,
    E: FnMut(&Thresholds<F>) -> Result<F>,
{
    let ins = space.theta_in.grid_points()?;
    let outs = space.theta_out.grid_points()?;

    let mut history = Vec::new();
    for &theta_in in &ins {
        for &theta_out in &outs {
            if theta_out >= theta_in {
                continue;
            }
            let thresholds = Thresholds::new(theta_in, theta_out)?;
            let objective = eval(&thresholds)?;
            history.push(Trial {
                thresholds,
                objective,
                index: history.len(),
            });
        }
    }
    if history.is_empty() {
        return Err(Error::Config(
            "empty feasible grid: every point has theta_out >= theta_in".into(),
        ));
    }
    let best = pick_best(&history).expect("nonempty history");
    Ok(SearchResult {
        best: best.thresholds,
        best_objective: best.objective,
        history,
        method: SearchMethod::Grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::AxisSpec;

    #[test]
    fn default_grid_evaluates_175_points() {
        let space = SearchSpace::<f64>::default();
        let result = grid_search(&space, |_| Ok(0.0)).unwrap();
        assert_eq!(result.history.len(), 175);
        // All objectives equal: the tie-break picks the lowest corner.
        assert_eq!(result.best.theta_in(), 1.0);
        assert_eq!(result.best.theta_out(), 0.0);
    }

    #[test]
    fn single_point_space() {
        let space = SearchSpace::new(
            AxisSpec::new(1.9f64, 2.1, Some(0.5)).unwrap(),
            AxisSpec::new(0.4f64, 0.6, Some(0.5)).unwrap(),
        )
        .unwrap();
        let result = grid_search(&space, |th| Ok(th.theta_in())).unwrap();
        assert_eq!(result.history.len(), 1);
        assert_eq!(result.best.theta_in(), 1.9);
        assert_eq!(result.best.theta_out(), 0.4);
    }

    #[test]
    fn argmax_found_on_smooth_landscape() {
        let space = SearchSpace::<f64>::default();
        let result = grid_search(&space, |th| {
            let di = th.theta_in() - 1.7;
            let do_ = th.theta_out() - 0.4;
            Ok(-(di * di) - do_ * do_)
        })
        .unwrap();
        assert!((result.best.theta_in() - 1.7).abs() < 0.051);
        assert!((result.best.theta_out() - 0.4).abs() < 0.051);
        let max = result
            .history
            .iter()
            .map(|t| t.objective)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(result.best_objective, max);
    }

    #[test]
    fn empty_feasible_grid_errors() {
        // The continuous box is feasible (0.6 < 0.99) but the only
        // theta_in grid point is 0.5, below every theta_out point.
        let space = SearchSpace::new(
            AxisSpec::new(0.5f64, 0.99, Some(0.5)).unwrap(),
            AxisSpec::new(0.6f64, 2.0, Some(0.5)).unwrap(),
        )
        .unwrap();
        let err = grid_search(&space, |_| Ok(0.0));
        assert!(err.is_err());
    }

    #[test]
    fn grid_evaluates_each_point_once() {
        let space = SearchSpace::<f64>::default();
        let mut calls = 0usize;
        let _ = grid_search(&space, |_| {
            calls += 1;
            Ok(0.0)
        })
        .unwrap();
        assert_eq!(calls, 175);
    }
}
