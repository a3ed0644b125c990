//! Equilibrium with a fraction of partisans in each group.
//!
//! With partisans, steady-state prevalences depend on non-partisan rates only
//! through the effective rates `(1 - gamma) (l, h)`, and the posteriors take
//! the same form as without partisans in those effective rates. The effective
//! rates therefore solve the baseline fixed-point problem and non-partisans
//! verify at `effective / (1 - gamma)`, which is only feasible while that
//! stays under the technology's cap.

use crate::error::{Error, Result};
use crate::params::{ModelParams, Rates};
use crate::steady::{partisan_steady_prevalence, SteadyState};
use crate::verification::Verification;

use super::solver::{solve_equilibrium, EquilibriumSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct PartisanEquilibrium {
    /// Baseline solution in effective rates; its ratio and posteriors are
    /// those of the partisan economy.
    pub effective: EquilibriumSolution,
    /// Rates chosen by non-partisans.
    pub nonpartisan: Rates,
    /// Overall steady-state prevalences (requires `lambda k` from the parameters).
    pub steady: SteadyState,
}

impl PartisanEquilibrium {
    pub fn ttr(&self) -> f64 {
        self.steady.ttr.value()
    }
}

pub fn solve_partisan_equilibrium(
    params: &ModelParams,
    tech: &dyn Verification,
) -> Result<PartisanEquilibrium> {
    params.validate()?;
    let effective = solve_equilibrium(params, tech)?;
    let keep = 1.0 - params.gamma;
    let required = effective.rates.h / keep;
    let cap = tech.top();
    if required > cap + 1e-12 {
        return Err(Error::PartisanCapBinding { required, cap });
    }
    let nonpartisan = Rates::new((effective.rates.l / keep).min(cap), required.min(cap));
    let steady = partisan_steady_prevalence(nonpartisan, params)?;
    Ok(PartisanEquilibrium {
        effective,
        nonpartisan,
        steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::steady_prevalence;
    use crate::verification::Family;

    fn params(y: f64, c: f64, beta: f64, gamma: f64) -> ModelParams {
        ModelParams {
            y,
            c,
            beta,
            gamma,
            ..Default::default()
        }
    }

    #[test]
    fn no_partisans_reduces_to_baseline() {
        let p = params(0.88, 0.1, 0.95, 0.0);
        let tech = Family::exp_no_cap();
        let part = solve_partisan_equilibrium(&p, &tech).unwrap();
        let base = solve_equilibrium(&p, &tech).unwrap();
        assert_eq!(part.effective, base);
        assert_eq!(part.nonpartisan, base.rates);
        assert_eq!(part.steady, steady_prevalence(base.rates, &p).unwrap());
    }

    #[test]
    fn ratio_is_invariant() {
        let tech = Family::exp_no_cap();
        let part = solve_partisan_equilibrium(&params(0.94, 0.04, 0.7, 0.1), &tech).unwrap();
        assert!((part.ttr() - 6.0).abs() < 1e-8);
        for gamma in [0.25, 0.5] {
            let part = solve_partisan_equilibrium(&params(0.8, 0.18, 0.9, gamma), &tech).unwrap();
            let base = solve_partisan_equilibrium(&params(0.8, 0.18, 0.9, 0.0), &tech).unwrap();
            assert!((part.ttr() - base.ttr()).abs() < 1e-8);
        }
    }

    #[test]
    fn cap_binding_is_an_error() {
        let tech = Family::exp_no_cap();
        // h = 0.893 would need 1.79 once half the group never verifies.
        let err = solve_partisan_equilibrium(&params(0.94, 0.04, 0.7, 0.5), &tech).unwrap_err();
        assert!(matches!(err, Error::PartisanCapBinding { .. }));
        // h = 0.753 would need 1.076 with 30% partisans.
        let err = solve_partisan_equilibrium(&params(0.88, 0.1, 0.95, 0.3), &tech).unwrap_err();
        assert!(matches!(err, Error::PartisanCapBinding { .. }));
        let capped = Family::exp_capped(0.3).unwrap();
        let err = solve_partisan_equilibrium(&params(0.74, 0.05, 0.75, 0.2), &capped).unwrap_err();
        assert!(matches!(err, Error::PartisanCapBinding { .. }));
    }
}
