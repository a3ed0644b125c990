//! Bayesian beliefs, best responses and equilibrium verification rates.
//!
//! Agents verify a message when the expected gain from learning the truth
//! exceeds the marginal cost. In steady state the beliefs depend only on the
//! verification rates themselves, so an equilibrium is a fixed point of the
//! best-response map `(l, h) -> (l', h')` on `[0, cap]^2`.

mod partisan;
mod sensitivity;
mod solver;
mod thresholds;

use std::fmt;
use std::str::FromStr;

pub use partisan::{solve_partisan_equilibrium, PartisanEquilibrium};
pub use sensitivity::{homophily_sensitivity, HomophilySensitivity};
pub use solver::{solve_equilibrium, solve_equilibrium_with, EquilibriumSolution, SolverOptions};
pub use thresholds::{
    c_under_by_bisection, c_under_closed_form, c_under_formula, h_when_l_zero, thresholds,
    ttr_from_multiplier, y_bar, Thresholds,
};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Rates};
use crate::verification::{Verification, MAX_LEVEL};

/// Rates at or below this value count as "no verification".
pub const KIND_EPS: f64 = 1e-9;

/// Qualitative shape of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    NoVerification,
    /// Only messages against one's bias are verified.
    OpposingOnly,
    Both,
}

impl Kind {
    pub fn of(rates: Rates) -> Self {
        if rates.l > KIND_EPS {
            Kind::Both
        } else if rates.h > KIND_EPS {
            Kind::OpposingOnly
        } else {
            Kind::NoVerification
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::NoVerification => "NoVerification",
            Kind::OpposingOnly => "OpposingOnly",
            Kind::Both => "Both",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NoVerification" => Ok(Kind::NoVerification),
            "OpposingOnly" => Ok(Kind::OpposingOnly),
            "Both" => Ok(Kind::Both),
            other => Err(Error::Config(format!("unknown equilibrium kind `{other}`"))),
        }
    }
}

fn check_beliefs(rates: Rates, beta: f64, y: f64) -> Result<()> {
    rates.check_unit()?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("{beta} outside [0, 1]"),
        });
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidParameter {
            name: "y",
            reason: format!("{y} outside [0, 1]"),
        });
    }
    Ok(())
}

/// Weight of bias-confirming messages that carry the truth, relative to
/// the steady-state informed share.
fn confirming_truth_weight(rates: Rates, beta: f64) -> f64 {
    beta + (1.0 - 2.0 * beta) * rates.h + beta * rates.l
}

/// Belief that one's bias is the true state after an unverified message in line with it.
pub fn posterior_same(rates: Rates, beta: f64, y: f64) -> Result<f64> {
    check_beliefs(rates, beta, y)?;
    let truth = y * confirming_truth_weight(rates, beta);
    let rumor = (1.0 - y) * beta * (1.0 - rates.h);
    let total = truth + rumor;
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "no bias-confirming messages circulate".into(),
        ));
    }
    Ok(truth / total)
}

/// Belief that one's bias is the true state after an unverified message against it.
pub fn posterior_opposing(rates: Rates, beta: f64, y: f64) -> Result<f64> {
    check_beliefs(rates, beta, y)?;
    if beta >= 1.0 {
        return Err(Error::Degenerate(
            "beta = 1 leaves no cross-group meetings".into(),
        ));
    }
    let truth = y * (1.0 - beta) * (1.0 - rates.h);
    let rumor = (1.0 - y) * (1.0 - beta + beta * rates.l);
    Ok(truth / (truth + rumor))
}

/// Prior condition: an unverified agent optimally keeps their bias.
pub fn cond_y(rates: Rates, beta: f64, y: f64) -> bool {
    let h = rates.h.min(MAX_LEVEL);
    y / (1.0 - y) >= (1.0 - beta + beta * rates.l) / ((1.0 - beta) * (1.0 - h))
}

/// Scalar data of a best-response evaluation, shared by the solver and its
/// callers so the map is written down once.
#[derive(Clone, Copy)]
pub(crate) struct Problem<'a> {
    pub c: f64,
    pub y: f64,
    pub beta: f64,
    pub tech: &'a dyn Verification,
    pub top: f64,
}

impl<'a> Problem<'a> {
    pub fn new(params: &ModelParams, tech: &'a dyn Verification) -> Result<Self> {
        params.validate()?;
        if params.beta <= 0.0 || params.beta >= 1.0 {
            return Err(Error::Degenerate(format!(
                "beta = {} leaves one meeting type empty",
                params.beta
            )));
        }
        Ok(Self {
            c: params.c,
            y: params.y,
            beta: params.beta,
            tech,
            top: tech.top(),
        })
    }

    /// Marginal benefit ratio for bias-confirming messages, i.e. the
    /// multiplier `L` when evaluated at a fixed point.
    #[inline]
    pub fn arg_l(&self, l: f64, h: f64) -> f64 {
        let h = h.min(MAX_LEVEL);
        let b = self.beta;
        let num = self.y * (b + (1.0 - 2.0 * b) * h + b * l);
        let den = (1.0 - self.y) * b * (1.0 - h);
        self.c * (1.0 + num / den)
    }

    /// Marginal benefit ratio for opposing messages (the multiplier `H`).
    #[inline]
    pub fn arg_h(&self, l: f64, h: f64) -> f64 {
        let h = h.min(MAX_LEVEL);
        let b = self.beta;
        let num = self.y * (1.0 - b) * (1.0 - h);
        let den = (1.0 - self.y) * (1.0 - b + b * l);
        self.c * (1.0 + num / den)
    }

    #[inline]
    pub fn respond(&self, z: Rates) -> Rates {
        Rates {
            l: self.tech.inverse_marginal(self.arg_l(z.l, z.h)),
            h: self.tech.inverse_marginal(self.arg_h(z.l, z.h)),
        }
    }

    #[inline]
    pub fn residual(&self, z: Rates) -> f64 {
        self.respond(z).distance(&z)
    }
}

/// One application of the best-response map.
pub fn best_response(rates: Rates, params: &ModelParams, tech: &dyn Verification) -> Result<Rates> {
    rates.check_unit()?;
    let problem = Problem::new(params, tech)?;
    Ok(problem.respond(rates))
}

/// Multipliers `(L, H)` of the first-order conditions at `rates`.
pub fn multipliers(rates: Rates, params: &ModelParams, tech: &dyn Verification) -> Result<(f64, f64)> {
    let problem = Problem::new(params, tech)?;
    Ok((problem.arg_l(rates.l, rates.h), problem.arg_h(rates.l, rates.h)))
}
