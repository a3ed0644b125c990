//! Cost and prior thresholds separating equilibrium regimes.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::roots::{bisect_predicate, increasing_root};
use crate::verification::Verification;

use super::solver::{solve_problem, SolverOptions};
use super::Problem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Cost at and above which nobody verifies.
    pub c_bar: f64,
    /// Cost below which bias-confirming messages are verified too.
    /// `None` when they are never verified for any positive cost.
    pub c_under: Option<f64>,
    /// Prior above which keeping one's bias is optimal.
    /// `None` when the prior condition fails for every prior.
    pub y_bar: Option<f64>,
}

const COST_SCAN: usize = 64;
const GEOMETRIC_TAIL: i32 = 12;
const COST_TOL: f64 = 1e-13;

/// Opposing-message rate when bias-confirming messages are not verified.
///
/// Returns 0 for `c >= c_bar`.
pub fn h_when_l_zero(c: f64, y: f64, tech: &dyn Verification) -> Result<f64> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: format!("{c} must be finite and >= 0"),
        });
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidParameter {
            name: "y",
            reason: format!("{y} outside (0, 1)"),
        });
    }
    // A few ulps of slack so that a cost typed as exactly the threshold is
    // not pushed below it by the rounding of `1 - y`.
    if c >= tech.origin_slope() * (1.0 - y) * (1.0 - 1e-12) {
        return Ok(0.0);
    }
    let gap = |h: f64| h - tech.inverse_marginal(c * (1.0 + y * (1.0 - h) / (1.0 - y)));
    let top = tech.top();
    let (f0, f_top) = (gap(0.0), gap(top));
    if f0 >= 0.0 {
        return Ok(0.0);
    }
    if f_top <= 0.0 {
        return Ok(top);
    }
    Ok(increasing_root(gap, 0.0, top, f0, f_top, 1e-14))
}

/// Cost at which `l = 0` stops being a best response, given `h`.
pub fn c_under_formula(h: f64, y: f64, beta: f64, d_bar: f64) -> f64 {
    d_bar * beta * (1.0 - h) * (1.0 - y) / (beta + h * (y - (1.0 + y) * beta))
}

/// Candidate costs scanned downward from `c_bar`: a uniform grid followed by
/// a geometric tail towards zero.
fn downward_costs(c_bar: f64) -> impl Iterator<Item = f64> {
    let uniform = (1..COST_SCAN).map(move |i| c_bar * (1.0 - i as f64 / COST_SCAN as f64));
    let tail = (1..=GEOMETRIC_TAIL).map(move |j| c_bar / COST_SCAN as f64 * 0.5f64.powi(j));
    uniform.chain(tail)
}

/// Largest cost below `c_bar` at which `below(c)` holds, refined against the
/// neighbouring grid point above it. `below` must be true on `(0, t)` and
/// false on `[t, c_bar)`.
fn scan_down(c_bar: f64, mut below: impl FnMut(f64) -> Result<bool>) -> Result<Option<f64>> {
    let mut upper = c_bar;
    for c in downward_costs(c_bar) {
        if below(c)? {
            let mut err = None;
            let t = bisect_predicate(
                |x| match below(x) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        false
                    }
                },
                c,
                upper,
                COST_TOL,
            );
            return match err {
                Some(e) => Err(e),
                None => Ok(Some(t)),
            };
        }
        upper = c;
    }
    Ok(None)
}

fn with_cost(params: &ModelParams, c: f64) -> ModelParams {
    ModelParams { c, ..*params }
}

/// Threshold below which the solved equilibrium verifies bias-confirming
/// messages, found by bisection on the full solver.
///
/// The switch is detected through the multiplier `L < d_bar`, which is the
/// exact condition for a positive `l` and avoids a tolerance on `l` itself.
pub fn c_under_by_bisection(params: &ModelParams, tech: &dyn Verification) -> Result<Option<f64>> {
    let d_bar = tech.origin_slope();
    let c_bar = d_bar * (1.0 - params.y);
    let opts = SolverOptions::default();
    scan_down(c_bar, |c| {
        let p = with_cost(params, c);
        let problem = Problem::new(&p, tech)?;
        Ok(solve_problem(&problem, &opts)?.big_l < d_bar)
    })
}

/// The same threshold from the fixed-point equation `c = C(h_when_l_zero(c))`.
///
/// `c_bar` is always a root of this equation; the scan runs downward from it
/// so the root reported is the one bounding the region with `l = 0`.
pub fn c_under_closed_form(params: &ModelParams, tech: &dyn Verification) -> Result<Option<f64>> {
    let d_bar = tech.origin_slope();
    let (y, beta) = (params.y, params.beta);
    let c_bar = d_bar * (1.0 - y);
    scan_down(c_bar, |c| {
        let h = h_when_l_zero(c, y, tech)?;
        Ok(c < c_under_formula(h, y, beta, d_bar))
    })
}

/// Prior threshold for the prior condition, by bisection on `y`.
pub fn y_bar(params: &ModelParams, tech: &dyn Verification) -> Result<Option<f64>> {
    let opts = SolverOptions::default();
    let ok = |y: f64| -> Result<bool> {
        let p = ModelParams { y, ..*params };
        let problem = Problem::new(&p, tech)?;
        Ok(solve_problem(&problem, &opts)?.cond_y_ok)
    };
    let (lo, hi) = (0.5 + 1e-9, 1.0 - 1e-7);
    if !ok(hi)? {
        return Ok(None);
    }
    if ok(lo)? {
        return Ok(Some(0.5));
    }
    let mut err = None;
    let t = bisect_predicate(
        |y| match ok(y) {
            Ok(v) => !v,
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        },
        lo,
        hi,
        1e-11,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(Some(t)),
    }
}

/// All three thresholds. Fails with [`Error::OracleDisagreement`] when the two
/// routes to the cost threshold differ by more than `1e-8`.
pub fn thresholds(params: &ModelParams, tech: &dyn Verification) -> Result<Thresholds> {
    params.validate()?;
    let c_bar = tech.origin_slope() * (1.0 - params.y);
    let by_solver = c_under_by_bisection(params, tech)?;
    let by_formula = c_under_closed_form(params, tech)?;
    let c_under = match (by_solver, by_formula) {
        (Some(a), Some(b)) if (a - b).abs() <= 1e-8 => Some(0.5 * (a + b)),
        (None, None) => None,
        (a, b) => {
            return Err(Error::OracleDisagreement(format!(
                "cost threshold: solver bisection {a:?} vs fixed-point formula {b:?}"
            )))
        }
    };
    Ok(Thresholds {
        c_bar,
        c_under,
        y_bar: y_bar(params, tech)?,
    })
}

/// Truth-to-rumor ratio written through the bias-confirming multiplier `L`.
pub fn ttr_from_multiplier(big_l: f64, y: f64, c: f64, beta: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: "must be > 0".into(),
        });
    }
    Ok(1.0 + (2.0 / y) * (big_l * (1.0 - y) / c - 1.0) * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::Family;

    fn params(y: f64, c: f64, beta: f64) -> ModelParams {
        ModelParams {
            y,
            c,
            beta,
            ..Default::default()
        }
    }

    #[test]
    fn h_with_l_zero_examples() {
        let no_cap = Family::exp_no_cap();
        let h = h_when_l_zero(0.04, 0.94, &no_cap).unwrap();
        assert!((h - 0.892_857_142_857_143).abs() < 1e-12);
        assert_eq!(h_when_l_zero(0.2, 0.8, &no_cap).unwrap(), 0.0);
        assert_eq!(h_when_l_zero(0.3, 0.8, &no_cap).unwrap(), 0.0);
        let capped = Family::exp_capped(0.3).unwrap();
        assert_eq!(h_when_l_zero(0.05, 0.9, &capped).unwrap(), 0.3);
    }

    #[test]
    fn multiplier_ratio_examples() {
        for beta in [0.1, 0.5, 0.9] {
            let v = ttr_from_multiplier(0.04 / 0.06, 0.94, 0.04, beta).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        // L at the opposing-only point of (y, c, beta) = (0.94, 0.04, 0.7).
        let big_l = 0.04 * (1.0 + 0.94 * 0.342_857_142_857_143 / (0.06 * 0.7 * 0.107_142_857_142_857));
        assert!((ttr_from_multiplier(big_l, 0.94, 0.04, 0.7).unwrap() - 6.0).abs() < 1e-9);
        assert!(ttr_from_multiplier(1.0, 0.9, 0.0, 0.5).is_err());
    }

    #[test]
    fn cost_thresholds() {
        let no_cap = Family::exp_no_cap();
        let t = thresholds(&params(0.8, 0.1, 0.6), &no_cap).unwrap();
        assert!((t.c_bar - 0.2).abs() < 1e-15);
        // beta < y: l = 0 all the way down.
        let t = thresholds(&params(0.94, 0.04, 0.7), &no_cap).unwrap();
        assert!((t.c_bar - 0.06).abs() < 1e-15);
        assert_eq!(t.c_under, None);
        // beta > y without a cap: l > 0 right up to c_bar.
        let t = thresholds(&params(0.88, 0.1, 0.95), &no_cap).unwrap();
        assert!((t.c_under.unwrap() - t.c_bar).abs() < 1e-8);
    }

    #[test]
    fn capped_cost_threshold_matches_cap_formula() {
        let (y, beta, x_bar) = (0.9, 0.75, 0.3);
        let tech = Family::exp_capped(x_bar).unwrap();
        let t = thresholds(&params(y, 0.05, beta), &tech).unwrap();
        let c2 = beta * (1.0 - x_bar) * (1.0 - y) / (beta - x_bar * (beta - (1.0 - beta) * y));
        assert!((t.c_under.unwrap() - c2).abs() < 1e-8, "{t:?} vs {c2}");
    }

    #[test]
    fn prior_threshold_on_opposing_branch() {
        let t = y_bar(&params(0.9, 0.04, 0.7), &Family::exp_no_cap()).unwrap().unwrap();
        assert!((t - 1.0 / 1.08).abs() < 1e-9, "{t}");
    }
}
