//! Closed-form steady states, their stability, and the truth-to-rumor ratio.

use std::fmt;

use nalgebra::{Matrix3, SMatrix};

use crate::dynamics::{derivatives, PartisanState, PrevalenceState};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Rates};

/// Truth-to-rumor ratio, with an exact marker for an extinct rumor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        match self {
            Ratio::Finite(v) => *v,
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Ratio::Infinite)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{v}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub iota: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub ttr: Ratio,
    /// The reported state is locally stable.
    pub stable: bool,
    /// Information is endemic (`iota > 0`).
    pub positive: bool,
}

/// Informed share `1 - 1/(lambda k)` when `lambda k > 1`, else 0.
pub fn information_prevalence(params: &ModelParams) -> f64 {
    let lk = params.lambda_k();
    if lk > 1.0 {
        1.0 - 1.0 / lk
    } else {
        0.0
    }
}

/// `rho0 / rho1 = (1 + h)/(1 - h) - 2 beta (h - l)/(1 - h)`.
pub fn truth_to_rumor(rates: Rates, beta: f64) -> Ratio {
    if rates.h >= 1.0 {
        return Ratio::Infinite;
    }
    let (l, h) = (rates.l, rates.h);
    Ratio::Finite((1.0 + h - 2.0 * beta * (h - l)) / (1.0 - h))
}

fn shares(rates: Rates, weight: f64, beta: f64) -> Result<(f64, f64)> {
    let spread = beta * weight * (rates.h - rates.l);
    let denom = 1.0 - spread;
    if denom.abs() < 1e-15 {
        return Err(Error::Degenerate("beta * (h - l) = 1".into()));
    }
    let h = weight * rates.h;
    Ok((
        0.5 * (1.0 + h - 2.0 * spread) / denom,
        0.5 * (1.0 - h) / denom,
    ))
}

/// Steady prevalences of truth and rumor for exogenous rates.
pub fn steady_prevalence(rates: Rates, params: &ModelParams) -> Result<SteadyState> {
    params.validate()?;
    rates.check_unit()?;
    let iota = information_prevalence(params);
    let (s0, s1) = shares(rates, 1.0, params.beta)?;
    Ok(SteadyState {
        iota,
        rho0: s0 * iota,
        rho1: s1 * iota,
        ttr: truth_to_rumor(rates, params.beta),
        stable: true,
        positive: iota > 0.0,
    })
}

/// Full group-level steady state.
pub fn steady_point(rates: Rates, params: &ModelParams) -> Result<PrevalenceState> {
    let ss = steady_prevalence(rates, params)?;
    Ok(PrevalenceState {
        rho00: ss.iota,
        rho01: 2.0 * ss.rho0 - ss.iota,
        rho11: 2.0 * ss.rho1,
    })
}

/// Steady prevalences when a fraction `gamma` of each group are partisans;
/// `rates` are those of non-partisans.
pub fn partisan_steady_prevalence(rates: Rates, params: &ModelParams) -> Result<SteadyState> {
    params.validate()?;
    rates.check_unit()?;
    let iota = information_prevalence(params);
    let weight = 1.0 - params.gamma;
    let (s0, s1) = shares(rates, weight, params.beta)?;
    Ok(SteadyState {
        iota,
        rho0: s0 * iota,
        rho1: s1 * iota,
        ttr: truth_to_rumor(rates.scaled(weight), params.beta),
        stable: true,
        positive: iota > 0.0,
    })
}

/// Full partisan steady state: every informed share equals `iota`.
pub fn partisan_steady_point(rates: Rates, params: &ModelParams) -> Result<PartisanState> {
    let ss = partisan_steady_prevalence(rates, params)?;
    let rho_n0 = (2.0 * ss.rho0 - ss.iota) / (1.0 - params.gamma);
    Ok(PartisanState {
        rho00: ss.iota,
        rho_g1: ss.iota,
        rho_n0,
        rho_n1: ss.iota - rho_n0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    /// `lambda k <= 1`: only the zero state is stable.
    ZeroStable,
    /// `lambda k > 1`: the zero state is unstable and the endemic state stable.
    ZeroUnstablePositiveStable,
    /// Neither state has all eigenvalues in the left half plane.
    NoneStable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub class: StabilityClass,
    /// Class predicted by the `lambda k` threshold rule.
    pub analytic: StabilityClass,
    pub zero_max_real: f64,
    /// `None` when the endemic state coincides with the zero state.
    pub positive_max_real: Option<f64>,
}

impl StabilityReport {
    pub fn agrees(&self) -> bool {
        self.class == self.analytic
    }
}

const JACOBIAN_STEP: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-9;

/// Central-difference Jacobian of the laws of motion.
pub fn jacobian(state: &PrevalenceState, params: &ModelParams, rates: Rates) -> Result<Matrix3<f64>> {
    let base = state.to_array();
    let mut jac = SMatrix::<f64, 3, 3>::zeros();
    for j in 0..3 {
        let mut up = base;
        let mut down = base;
        up[j] += JACOBIAN_STEP;
        down[j] -= JACOBIAN_STEP;
        let fu = derivatives(&PrevalenceState::from_array(up), params, rates)?;
        let fd = derivatives(&PrevalenceState::from_array(down), params, rates)?;
        for i in 0..3 {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    Ok(jac)
}

fn max_real_part(m: Matrix3<f64>) -> Result<f64> {
    let eig = m.complex_eigenvalues();
    let mut best = f64::NEG_INFINITY;
    for z in eig.iter() {
        if !z.re.is_finite() {
            return Err(Error::Eigen(format!("non-finite eigenvalue {z}")));
        }
        best = best.max(z.re);
    }
    Ok(best)
}

/// Classifies the zero and endemic steady states by numerical Jacobian eigenvalues.
pub fn stability_classify(params: &ModelParams, rates: Rates) -> Result<StabilityReport> {
    params.validate()?;
    rates.check_unit()?;
    let zero = PrevalenceState::default();
    let zero_max_real = max_real_part(jacobian(&zero, params, rates)?)?;
    let positive_max_real = if params.lambda_k() > 1.0 {
        let point = steady_point(rates, params)?;
        Some(max_real_part(jacobian(&point, params, rates)?)?)
    } else {
        None
    };
    let zero_stable = zero_max_real < EIGEN_TOL;
    let class = match (zero_stable, positive_max_real) {
        (true, _) => StabilityClass::ZeroStable,
        (false, Some(re)) if re < -EIGEN_TOL => StabilityClass::ZeroUnstablePositiveStable,
        _ => StabilityClass::NoneStable,
    };
    let analytic = if params.lambda_k() > 1.0 {
        StabilityClass::ZeroUnstablePositiveStable
    } else {
        StabilityClass::ZeroStable
    };
    Ok(StabilityReport {
        class,
        analytic,
        zero_max_real,
        positive_max_real,
    })
}
