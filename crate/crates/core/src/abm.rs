//! Finite-population Monte Carlo simulation of the diffusion process.
//!
//! Time advances in steps of `dt`. In each step, and based on the statuses at
//! the start of the step:
//!
//! * every informed agent dies with probability `delta * dt` and is replaced
//!   by a susceptible agent of the same type and partisan flag;
//! * every susceptible agent has `k` meetings. Each partner is of the same
//!   type with probability `beta` and is drawn uniformly from that type's
//!   pool, and an informed partner passes their opinion with probability
//!   `nu * dt`. At most one message is honored per step.
//!
//! Because meetings are independent, whether any message arrives depends
//! only on the per-meeting success probability
//! `nu dt (beta pi_same + (1 - beta) pi_other)`, where `pi` are informed
//! shares of the two pools, and the honored message is then drawn in
//! proportion to its weight among successful meetings. This samples the same
//! law as drawing partners one by one with two uniforms per susceptible agent.
//!
//! On receiving a message an agent of type 0 adopts opinion 0, a partisan
//! adopts their bias, and a type-1 non-partisan verifies with probability `h`
//! (opinion 0 message) or `l` (opinion 1 message): success yields opinion 0,
//! failure their bias.
//!
//! The generator is ChaCha with 8 rounds seeded through
//! `SeedableRng::seed_from_u64`, so a run is reproducible from
//! `(seed, params, rates, config)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::PrevalenceState;
use crate::error::{Error, Result};
use crate::params::{ModelParams, Rates};

/// Largest admissible `k nu dt`.
pub const MAX_STEP_LOAD: f64 = 0.1;

/// Populations smaller than this draw a warning.
pub const SMALL_POPULATION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbmConfig {
    pub population: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Record every this many steps (the terminal state is always recorded).
    pub record_every: usize,
    /// Expected initial prevalences; each agent is seeded independently.
    pub initial: PrevalenceState,
}

impl Default for AbmConfig {
    fn default() -> Self {
        Self {
            population: 20_000,
            dt: 0.25,
            horizon: 1000.0,
            record_every: 40,
            initial: PrevalenceState::SMALL_SEED,
        }
    }
}

impl AbmConfig {
    /// Validates against the model and returns soft warnings.
    pub fn check(&self, params: &ModelParams, rates: Rates) -> Result<Vec<String>> {
        // A zero transmission rate is meaningful here (pure decay), although
        // the mean-field model needs a positive one.
        let mut core = *params;
        if core.nu == 0.0 {
            core.nu = 1.0;
        }
        core.validate()?;
        rates.check_unit()?;
        self.initial.validate()?;
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "population",
                reason: format!("{} must be even and >= 2", self.population),
            });
        }
        let load = f64::from(params.k) * params.nu * self.dt;
        if !(self.dt > 0.0 && self.dt.is_finite()) || load >= MAX_STEP_LOAD {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("k*nu*dt = {load} must be below {MAX_STEP_LOAD}"),
            });
        }
        if params.delta * self.dt >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "delta*dt must be below 1".into(),
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be finite and >= 0".into(),
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                reason: "must be >= 1".into(),
            });
        }
        let mut warnings = Vec::new();
        if self.population < SMALL_POPULATION {
            warnings.push(format!(
                "population {} < {SMALL_POPULATION}: mean-field comparison unreliable",
                self.population
            ));
        }
        Ok(warnings)
    }
}

/// Empirical prevalences over the whole population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbmPoint {
    pub t: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub iota: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbmRun {
    pub seed: u64,
    pub points: Vec<AbmPoint>,
    /// Largest share of type-0 agents ever seen holding opinion 1.
    pub group0_rumor_max: f64,
    /// Number of agents that became informed during the run.
    pub infections: u64,
    pub warnings: Vec<String>,
}

impl AbmRun {
    pub fn terminal(&self) -> AbmPoint {
        *self.points.last().expect("a run records at least its initial state")
    }
}

const SUSCEPTIBLE: u8 = 0;
const OPINION_0: u8 = 1;
const OPINION_1: u8 = 2;

struct Population {
    /// Status per agent; agents `0..half` are type 0.
    status: Vec<u8>,
    partisan: Vec<bool>,
    half: usize,
    /// Informed counts by `[type][opinion]`.
    counts: [[usize; 2]; 2],
}

impl Population {
    fn seeded(cfg: &AbmConfig, gamma: f64, rng: &mut ChaCha8Rng) -> Self {
        let n = cfg.population;
        let half = n / 2;
        let partisans = (gamma * half as f64).round() as usize;
        let mut status = vec![SUSCEPTIBLE; n];
        let mut partisan = vec![false; n];
        let mut counts = [[0usize; 2]; 2];
        for (i, flag) in partisan.iter_mut().enumerate() {
            let within = if i < half { i } else { i - half };
            *flag = within < partisans;
        }
        let s = cfg.initial;
        for i in 0..n {
            let u: f64 = rng.random();
            let group = usize::from(i >= half);
            let opinion = if group == 0 {
                (u < s.rho00).then_some(0)
            } else if u < s.rho01 {
                Some(if partisan[i] { 1 } else { 0 })
            } else if u < s.rho01 + s.rho11 {
                Some(1)
            } else {
                None
            };
            if let Some(o) = opinion {
                status[i] = if o == 0 { OPINION_0 } else { OPINION_1 };
                counts[group][o] += 1;
            }
        }
        Self {
            status,
            partisan,
            half,
            counts,
        }
    }

    fn snapshot(&self, t: f64) -> AbmPoint {
        let n = (2 * self.half) as f64;
        let op0 = (self.counts[0][0] + self.counts[1][0]) as f64;
        let op1 = (self.counts[0][1] + self.counts[1][1]) as f64;
        AbmPoint {
            t,
            rho0: op0 / n,
            rho1: op1 / n,
            iota: (op0 + op1) / n,
        }
    }
}

/// Runs one replica.
pub fn run_abm(params: &ModelParams, rates: Rates, cfg: &AbmConfig, seed: u64) -> Result<AbmRun> {
    let warnings = cfg.check(params, rates)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop = Population::seeded(cfg, params.gamma, &mut rng);
    let half = pop.half;
    let pool = half as f64;
    let p_meet = params.nu * cfg.dt;
    let p_death = params.delta * cfg.dt;
    let beta = params.beta;
    let k = params.k as i32;
    let steps = (cfg.horizon / cfg.dt).round() as usize;

    let mut points = vec![pop.snapshot(0.0)];
    let mut group0_rumor_max = 0.0f64;
    let mut infections = 0u64;

    for step in 1..=steps {
        let start = pop.counts;
        // Per-type message weights: [same-type op0, same-type op1, other op0, other op1].
        let weights: [[f64; 4]; 2] = std::array::from_fn(|b| {
            let other = 1 - b;
            [
                beta * start[b][0] as f64 / pool,
                beta * start[b][1] as f64 / pool,
                (1.0 - beta) * start[other][0] as f64 / pool,
                (1.0 - beta) * start[other][1] as f64 / pool,
            ]
        });
        let reach: [f64; 2] = std::array::from_fn(|b| {
            let per_meeting = p_meet * weights[b].iter().sum::<f64>();
            1.0 - (1.0 - per_meeting).powi(k)
        });

        for i in 0..pop.status.len() {
            let b = usize::from(i >= half);
            let current = pop.status[i];
            if current != SUSCEPTIBLE {
                if rng.random::<f64>() < p_death {
                    pop.counts[b][usize::from(current == OPINION_1)] -= 1;
                    pop.status[i] = SUSCEPTIBLE;
                }
                continue;
            }
            let u: f64 = rng.random();
            if u >= reach[b] {
                continue;
            }
            // Reuse the uniform: conditional on a hit, u / reach is uniform on [0, 1).
            let w = &weights[b];
            let mut target = u / reach[b] * w.iter().sum::<f64>();
            let mut slot = 3;
            for (j, wj) in w.iter().enumerate() {
                if target < *wj {
                    slot = j;
                    break;
                }
                target -= wj;
            }
            let message = slot % 2;
            let opinion = if b == 0 {
                0
            } else if pop.partisan[i] {
                1
            } else {
                let verify = if message == 0 { rates.h } else { rates.l };
                if rng.random::<f64>() < verify {
                    0
                } else {
                    1
                }
            };
            pop.status[i] = if opinion == 0 { OPINION_0 } else { OPINION_1 };
            pop.counts[b][opinion] += 1;
            infections += 1;
        }

        group0_rumor_max = group0_rumor_max.max(pop.counts[0][1] as f64 / pool);
        if step % cfg.record_every == 0 || step == steps {
            points.push(pop.snapshot(step as f64 * cfg.dt));
        }
    }

    Ok(AbmRun {
        seed,
        points,
        group0_rumor_max,
        infections,
        warnings,
    })
}

/// Runs one replica per seed in parallel; results keep the order of `seeds`.
pub fn run_replicas(
    params: &ModelParams,
    rates: Rates,
    cfg: &AbmConfig,
    seeds: &[u64],
) -> Result<Vec<AbmRun>> {
    seeds
        .par_iter()
        .map(|&seed| run_abm(params, rates, cfg, seed))
        .collect()
}

/// Across-replica mean and standard deviation at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsemblePoint {
    pub t: f64,
    pub mean_rho0: f64,
    pub sd_rho0: f64,
    pub mean_rho1: f64,
    pub sd_rho1: f64,
    pub mean_iota: f64,
    pub sd_iota: f64,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pointwise summary of replicas that share a recording schedule.
pub fn summarize(runs: &[AbmRun]) -> Result<Vec<EnsemblePoint>> {
    let Some(first) = runs.first() else {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "no replicas to summarize".into(),
        });
    };
    let len = first.points.len();
    if runs.iter().any(|r| r.points.len() != len) {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "replicas have different recording schedules".into(),
        });
    }
    Ok((0..len)
        .map(|i| {
            let at = runs.iter().map(move |r| r.points[i]);
            let (mean_rho0, sd_rho0) = mean_sd(at.clone().map(|p| p.rho0));
            let (mean_rho1, sd_rho1) = mean_sd(at.clone().map(|p| p.rho1));
            let (mean_iota, sd_iota) = mean_sd(at.map(|p| p.iota));
            EnsemblePoint {
                t: first.points[i].t,
                mean_rho0,
                sd_rho0,
                mean_rho1,
                sd_rho1,
                mean_iota,
                sd_iota,
            }
        })
        .collect())
}

/// Average of a terminal statistic over replicas, e.g. `|p| p.iota`.
pub fn terminal_mean(runs: &[AbmRun], stat: impl Fn(&AbmPoint) -> f64) -> f64 {
    runs.iter().map(|r| stat(&r.terminal())).sum::<f64>() / runs.len() as f64
}

/// Average over replicas of the terminal-window mean of `stat`, using the
/// recorded points with `t >= from`. Averaging over time as well as seeds
/// reduces the variance of ratio estimates.
pub fn window_mean(runs: &[AbmRun], from: f64, stat: impl Fn(&AbmPoint) -> f64) -> f64 {
    let per_run = runs.iter().map(|r| {
        let tail: Vec<f64> = r.points.iter().filter(|p| p.t >= from).map(&stat).collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    });
    per_run.sum::<f64>() / runs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams {
            k: 4,
            nu: 0.05,
            delta: 0.1,
            beta: 0.6,
            ..Default::default()
        }
    }

    fn small() -> AbmConfig {
        AbmConfig {
            population: 2000,
            horizon: 50.0,
            record_every: 20,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let p = params();
        let odd = AbmConfig {
            population: 2001,
            ..small()
        };
        assert!(run_abm(&p, Rates::ZERO, &odd, 1).is_err());
        let coarse = AbmConfig { dt: 0.5, ..small() };
        assert!(run_abm(&p, Rates::ZERO, &coarse, 1).is_err());
        let tiny = AbmConfig {
            population: 100,
            ..small()
        };
        let run = run_abm(&p, Rates::ZERO, &tiny, 1).unwrap();
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn reproducible_per_seed() {
        let p = params();
        let a = run_abm(&p, Rates::new(0.2, 0.5), &small(), 7).unwrap();
        let b = run_abm(&p, Rates::new(0.2, 0.5), &small(), 7).unwrap();
        let c = run_abm(&p, Rates::new(0.2, 0.5), &small(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn no_transmission_means_no_new_information() {
        let p = ModelParams { nu: 0.0, ..params() };
        let run = run_abm(&p, Rates::ZERO, &small(), 3).unwrap();
        assert_eq!(run.infections, 0);
        let iotas: Vec<f64> = run.points.iter().map(|q| q.iota).collect();
        assert!(iotas.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn replicas_keep_seed_order() {
        let runs = run_replicas(&params(), Rates::ZERO, &small(), &[5, 6, 7]).unwrap();
        assert_eq!(runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![5, 6, 7]);
        let summary = summarize(&runs).unwrap();
        assert_eq!(summary.len(), runs[0].points.len());
        assert!(summary.iter().all(|s| s.sd_iota >= 0.0));
    }

    #[test]
    fn group0_never_holds_rumor() {
        let p = ModelParams { gamma: 0.3, ..params() };
        let run = run_abm(&p, Rates::new(0.1, 0.4), &small(), 11).unwrap();
        assert_eq!(run.group0_rumor_max, 0.0);
    }
}
