//! Mean-field laws of motion for opinion prevalences and their integration.
//!
//! Group 0 holds the true state as its bias, so its members can only ever
//! hold opinion 0. Group 1 members adopt opinion 0 only after a successful
//! verification: with probability `h` for a message against their bias and
//! `l` for one in line with it.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::params::{ModelParams, Rates};

/// Within-group prevalences of each opinion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrevalenceState {
    /// Opinion 0 in group 0.
    pub rho00: f64,
    /// Opinion 0 in group 1.
    pub rho01: f64,
    /// Opinion 1 in group 1.
    pub rho11: f64,
}

/// Population-wide opinion prevalences.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregate {
    pub rho0: f64,
    pub rho1: f64,
    pub iota: f64,
}

impl Aggregate {
    /// `rho0 / rho1`; infinite when the rumor is extinct.
    pub fn ratio(&self) -> f64 {
        self.rho0 / self.rho1
    }
}

impl PrevalenceState {
    /// Conventional transient seed: one percent informed in each group, split evenly in group 1.
    pub const SMALL_SEED: PrevalenceState = PrevalenceState {
        rho00: 0.01,
        rho01: 0.005,
        rho11: 0.005,
    };

    pub fn new(rho00: f64, rho01: f64, rho11: f64) -> Result<Self> {
        let state = Self {
            rho00,
            rho01,
            rho11,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.to_array() {
            ensure_finite(v, "prevalence state")?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidState(format!("component {v} outside [0, 1]")));
            }
        }
        if self.rho01 + self.rho11 > 1.0 + 1e-12 {
            return Err(Error::InvalidState("group-1 prevalences exceed 1".into()));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.rho00, self.rho01, self.rho11]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            rho00: a[0],
            rho01: a[1],
            rho11: a[2],
        }
    }

    pub fn aggregate(&self) -> Aggregate {
        let rho0 = 0.5 * (self.rho00 + self.rho01);
        let rho1 = 0.5 * self.rho11;
        Aggregate {
            rho0,
            rho1,
            iota: 0.5 * (self.rho00 + self.rho01 + self.rho11),
        }
    }
}

/// Prevalences when a fraction `gamma` of group 1 are partisans.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartisanState {
    pub rho00: f64,
    /// Opinion 1 among group-1 partisans.
    pub rho_g1: f64,
    /// Opinion 0 among group-1 non-partisans.
    pub rho_n0: f64,
    /// Opinion 1 among group-1 non-partisans.
    pub rho_n1: f64,
}

impl PartisanState {
    pub fn validate(&self) -> Result<()> {
        for v in self.to_array() {
            ensure_finite(v, "partisan state")?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidState(format!("component {v} outside [0, 1]")));
            }
        }
        if self.rho_n0 + self.rho_n1 > 1.0 + 1e-12 {
            return Err(Error::InvalidState("non-partisan prevalences exceed 1".into()));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.rho00, self.rho_g1, self.rho_n0, self.rho_n1]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            rho00: a[0],
            rho_g1: a[1],
            rho_n0: a[2],
            rho_n1: a[3],
        }
    }

    /// Embeds a baseline state: non-partisans take the group-1 prevalences,
    /// partisans hold their bias with the group's overall informed share.
    pub fn from_baseline(state: &PrevalenceState) -> Self {
        Self {
            rho00: state.rho00,
            rho_g1: state.rho01 + state.rho11,
            rho_n0: state.rho01,
            rho_n1: state.rho11,
        }
    }

    pub fn aggregate(&self, gamma: f64) -> Aggregate {
        let rho1 = 0.5 * ((1.0 - gamma) * self.rho_n1 + gamma * self.rho_g1);
        let rho0 = 0.5 * (self.rho00 + (1.0 - gamma) * self.rho_n0);
        Aggregate {
            rho0,
            rho1,
            iota: rho0 + rho1,
        }
    }
}

fn check_inputs(values: &[f64], rates: Rates) -> Result<()> {
    for &v in values {
        ensure_finite(v, "state")?;
    }
    ensure_finite(rates.l, "rate l")?;
    ensure_finite(rates.h, "rate h")?;
    Ok(())
}

#[inline]
fn rhs(s: &[f64; 3], p: &ModelParams, r: Rates) -> [f64; 3] {
    let [r00, r01, r11] = *s;
    let (b, l, h) = (p.beta, r.l, r.h);
    let nk = p.nu * f64::from(p.k);
    let free1 = 1.0 - r01 - r11;
    [
        0.5 * (1.0 - r00) * nk * (b * r00 + (1.0 - b) * (r01 + r11)) - 0.5 * r00 * p.delta,
        0.5 * free1 * nk * (b * (h * r01 + l * r11) + (1.0 - b) * h * r00) - 0.5 * r01 * p.delta,
        0.5 * free1 * nk * (b * ((1.0 - h) * r01 + (1.0 - l) * r11) + (1.0 - b) * (1.0 - h) * r00)
            - 0.5 * r11 * p.delta,
    ]
}

#[inline]
fn partisan_rhs(s: &[f64; 4], p: &ModelParams, r: Rates) -> [f64; 4] {
    let [r00, rg1, rn0, rn1] = *s;
    let (b, g, l, h) = (p.beta, p.gamma, r.l, r.h);
    let nk = p.nu * f64::from(p.k);
    let iota0 = r00;
    let iota1 = g * rg1 + (1.0 - g) * (rn0 + rn1);
    let holders1 = (1.0 - g) * rn1 + g * rg1;
    let free_n = 1.0 - rn0 - rn1;
    [
        0.5 * (1.0 - r00) * nk * (b * iota0 + (1.0 - b) * iota1) - 0.5 * r00 * p.delta,
        0.5 * g * (1.0 - rg1) * nk * (b * iota1 + (1.0 - b) * iota0) - 0.5 * g * rg1 * p.delta,
        0.5 * (1.0 - g) * free_n * nk * (b * l * holders1 + b * h * (1.0 - g) * rn0 + (1.0 - b) * h * r00)
            - 0.5 * (1.0 - g) * rn0 * p.delta,
        0.5 * (1.0 - g)
            * free_n
            * nk
            * (b * (1.0 - l) * holders1 + (1.0 - h) * (b * (1.0 - g) * rn0 + (1.0 - b) * r00))
            - 0.5 * (1.0 - g) * rn1 * p.delta,
    ]
}

/// Time derivatives of `(rho00, rho01, rho11)` for fixed verification rates.
pub fn derivatives(state: &PrevalenceState, params: &ModelParams, rates: Rates) -> Result<[f64; 3]> {
    check_inputs(&state.to_array(), rates)?;
    Ok(rhs(&state.to_array(), params, rates))
}

/// Time derivatives of `(rho00, rho_g1, rho_n0, rho_n1)`.
pub fn partisan_derivatives(
    state: &PartisanState,
    params: &ModelParams,
    rates: Rates,
) -> Result<[f64; 4]> {
    if !(0.0..1.0).contains(&params.gamma) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "must lie in [0, 1)".into(),
        });
    }
    check_inputs(&state.to_array(), rates)?;
    Ok(partisan_rhs(&state.to_array(), params, rates))
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Keep every `record_every`-th step in the trajectory (the terminal state is always kept).
    pub record_every: usize,
    /// Stop as soon as the largest absolute derivative falls below `tolerance`.
    pub stop_on_converge: bool,
    pub tolerance: f64,
}

impl IntegrateOptions {
    /// Step `0.01 / delta`, convergence at `1e-10`.
    pub fn for_params(params: &ModelParams, horizon: f64) -> Self {
        Self {
            horizon,
            dt: 0.01 / params.delta,
            record_every: 100,
            stop_on_converge: true,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub terminal: S,
    pub terminal_time: f64,
    pub converged: bool,
    pub max_derivative: f64,
    /// Number of components clipped back into the unit simplex.
    pub clip_events: usize,
}

const DIVERGENCE_MARGIN: f64 = 1e-6;

fn rk4_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let shift = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&shift(y, &k1, 0.5 * dt));
    let k3 = f(&shift(y, &k2, 0.5 * dt));
    let k4 = f(&shift(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Clips undershoots into `[0, 1]`, enforcing `sum(pairs) <= 1` on the listed pair.
fn project<const N: usize>(y: &mut [f64; N], pair: (usize, usize), time: f64) -> Result<usize> {
    let mut clips = 0;
    for (i, v) in y.iter_mut().enumerate() {
        if !v.is_finite() || *v < -DIVERGENCE_MARGIN || *v > 1.0 + DIVERGENCE_MARGIN {
            return Err(Error::Divergence {
                time,
                component: i,
                value: *v,
            });
        }
        if *v < 0.0 {
            if *v < -1e-12 {
                log::debug!("clipping component {i} = {v:e} at t = {time}");
            }
            *v = 0.0;
            clips += 1;
        } else if *v > 1.0 {
            *v = 1.0;
            clips += 1;
        }
    }
    let sum = y[pair.0] + y[pair.1];
    if sum > 1.0 {
        if sum > 1.0 + DIVERGENCE_MARGIN {
            return Err(Error::Divergence {
                time,
                component: pair.1,
                value: sum,
            });
        }
        y[pair.0] /= sum;
        y[pair.1] /= sum;
        clips += 1;
    }
    Ok(clips)
}

fn run<const N: usize, S: Copy>(
    start: [f64; N],
    f: impl Fn(&[f64; N]) -> [f64; N],
    pair: (usize, usize),
    opts: &IntegrateOptions,
    wrap: impl Fn([f64; N]) -> S,
) -> Result<Trajectory<S>> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) || !(opts.horizon >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "step and horizon must be positive".into(),
        });
    }
    let max_abs = |d: &[f64; N]| d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let every = opts.record_every.max(1);
    let steps = (opts.horizon / opts.dt).ceil() as usize;

    let mut y = start;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![wrap(y)];
    let mut clips = 0;
    let mut max_derivative = max_abs(&f(&y));
    let mut converged = max_derivative < opts.tolerance;

    for step in 1..=steps {
        if converged && opts.stop_on_converge {
            break;
        }
        let dt = opts.dt.min(opts.horizon - t);
        y = rk4_step(&f, &y, dt);
        t += dt;
        clips += project(&mut y, pair, t)?;
        max_derivative = max_abs(&f(&y));
        converged = max_derivative < opts.tolerance;
        if step % every == 0 {
            times.push(t);
            states.push(wrap(y));
        }
    }
    if times.last() != Some(&t) {
        times.push(t);
        states.push(wrap(y));
    }
    Ok(Trajectory {
        times,
        states,
        terminal: wrap(y),
        terminal_time: t,
        converged,
        max_derivative,
        clip_events: clips,
    })
}

/// Classical fixed-step RK4 integration of the baseline system.
pub fn integrate(
    start: &PrevalenceState,
    params: &ModelParams,
    rates: Rates,
    opts: &IntegrateOptions,
) -> Result<Trajectory<PrevalenceState>> {
    start.validate()?;
    params.validate()?;
    rates.check_unit()?;
    run(
        start.to_array(),
        |s| rhs(s, params, rates),
        (1, 2),
        opts,
        PrevalenceState::from_array,
    )
}

/// RK4 integration of the partisan system.
pub fn integrate_partisan(
    start: &PartisanState,
    params: &ModelParams,
    rates: Rates,
    opts: &IntegrateOptions,
) -> Result<Trajectory<PartisanState>> {
    start.validate()?;
    params.validate()?;
    rates.check_unit()?;
    run(
        start.to_array(),
        |s| partisan_rhs(s, params, rates),
        (2, 3),
        opts,
        PartisanState::from_array,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lk2() -> ModelParams {
        ModelParams {
            k: 1,
            nu: 0.2,
            delta: 0.1,
            beta: 0.6,
            ..Default::default()
        }
    }

    #[test]
    fn no_informed_no_flow() {
        let d = derivatives(&PrevalenceState::default(), &lk2(), Rates::new(0.3, 0.7)).unwrap();
        assert_eq!(d, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn endemic_point_without_verification_is_stationary() {
        let s = PrevalenceState::new(0.5, 0.0, 0.5).unwrap();
        let d = derivatives(&s, &lk2(), Rates::ZERO).unwrap();
        for v in d {
            assert!(v.abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let s = PrevalenceState {
            rho00: f64::NAN,
            ..Default::default()
        };
        assert!(derivatives(&s, &lk2(), Rates::ZERO).is_err());
        assert!(derivatives(&PrevalenceState::default(), &lk2(), Rates::new(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn aggregates() {
        let a = PrevalenceState::new(0.5, 0.0, 0.5).unwrap().aggregate();
        assert_eq!((a.rho0, a.rho1, a.iota), (0.25, 0.25, 0.5));
        let z = PrevalenceState::default().aggregate();
        assert_eq!((z.rho0, z.rho1, z.iota), (0.0, 0.0, 0.0));
        let p = PartisanState {
            rho00: 0.5,
            rho_g1: 0.5,
            rho_n0: 0.2,
            rho_n1: 0.3,
        };
        let a = p.aggregate(0.3);
        assert!((a.rho1 - 0.18).abs() < 1e-15);
        assert!((a.rho0 - 0.5 * (0.5 + 0.7 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn partisan_reduces_to_baseline_at_zero_gamma() {
        let p = ModelParams { gamma: 0.0, ..lk2() };
        let rates = Rates::new(0.2, 0.5);
        let base = PrevalenceState::new(0.3, 0.1, 0.25).unwrap();
        let part = PartisanState::from_baseline(&base);
        let d = derivatives(&base, &p, rates).unwrap();
        let dp = partisan_derivatives(&part, &p, rates).unwrap();
        assert_eq!(dp[1], 0.0);
        for (a, b) in [dp[0], dp[2], dp[3]].iter().zip(d) {
            assert!((a - b).abs() < 1e-16, "{dp:?} vs {d:?}");
        }
    }

    #[test]
    fn partisan_endemic_point_without_verification() {
        let p = ModelParams { gamma: 0.3, ..lk2() };
        let s = PartisanState {
            rho00: 0.5,
            rho_g1: 0.5,
            rho_n0: 0.0,
            rho_n1: 0.5,
        };
        let d = partisan_derivatives(&s, &p, Rates::ZERO).unwrap();
        for v in d {
            assert!(v.abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn divergence_is_reported() {
        let mut y = [0.5, -0.1, 0.2];
        assert!(matches!(project(&mut y, (1, 2), 1.0), Err(Error::Divergence { .. })));
        let mut y = [0.5, -1e-9, 0.2];
        assert_eq!(project(&mut y, (1, 2), 1.0).unwrap(), 1);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn records_and_terminates() {
        let p = lk2();
        let opts = IntegrateOptions {
            horizon: 10.0,
            dt: 0.1,
            record_every: 10,
            stop_on_converge: false,
            tolerance: 1e-10,
        };
        let tr = integrate(&PrevalenceState::SMALL_SEED, &p, Rates::ZERO, &opts).unwrap();
        assert_eq!(tr.times.len(), 11);
        assert!((tr.terminal_time - 10.0).abs() < 1e-9);
        assert!(!tr.converged);
    }
}
