//! Fixed-point search for equilibrium verification rates.
//!
//! Two independent searches feed one candidate pool:
//!
//! * damped iteration `z <- (1 - w) z + w BR(z)` from a grid of starts;
//! * a one-dimensional reduction: for each `h` the bias-confirming rate
//!   `l*(h)` is the unique root of a monotone equation, and equilibria are
//!   the zeros of `h - BR_h(l*(h), h)`, which a scan brackets and a bracketed
//!   root finder refines.
//!
//! The reduction finds every equilibrium whose `h` is separated from the next
//! by more than the scan spacing; damped iteration catches anything it misses
//! and is an independent check on the rest.

use crate::error::{Error, Result};
use crate::params::{ModelParams, Rates};
use crate::roots::increasing_root;
use crate::steady::{truth_to_rumor, Ratio};
use crate::verification::Verification;

use super::{cond_y, posterior_opposing, posterior_same, Kind, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Weight on the best response in each damped step.
    pub damping: f64,
    /// Starts per axis for damped iteration.
    pub start_grid: usize,
    pub max_iterations: usize,
    /// A damped run whose residual has not halved within this many steps is abandoned.
    pub stall_window: usize,
    /// Scan resolution of the one-dimensional reduction.
    pub scan_points: usize,
    /// Fixed points closer than this (max norm) are merged.
    pub dedup_tol: f64,
    /// Acceptance threshold on `|BR(z) - z|`.
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            start_grid: 5,
            max_iterations: 100_000,
            stall_window: 200,
            scan_points: 96,
            dedup_tol: 1e-6,
            residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    /// Canonical equilibrium: the one with the smallest `h`.
    pub rates: Rates,
    pub kind: Kind,
    /// Multiplier of the bias-confirming first-order condition.
    pub big_l: f64,
    /// Multiplier of the opposing first-order condition.
    pub big_h: f64,
    pub posterior_same: f64,
    pub posterior_opposing: f64,
    pub ttr: Ratio,
    pub cond_y_ok: bool,
    pub residual: f64,
    /// Every distinct fixed point found, sorted by `h`.
    pub fixed_points: Vec<Rates>,
}

impl EquilibriumSolution {
    pub fn l(&self) -> f64 {
        self.rates.l
    }

    pub fn h(&self) -> f64 {
        self.rates.h
    }

    pub fn multiplicity(&self) -> usize {
        self.fixed_points.len()
    }

    pub(crate) fn build(
        problem: &Problem<'_>,
        rates: Rates,
        residual: f64,
        fixed_points: Vec<Rates>,
    ) -> Result<Self> {
        let (beta, y) = (problem.beta, problem.y);
        Ok(Self {
            rates,
            kind: Kind::of(rates),
            big_l: problem.arg_l(rates.l, rates.h),
            big_h: problem.arg_h(rates.l, rates.h),
            posterior_same: posterior_same(rates, beta, y)?,
            posterior_opposing: posterior_opposing(rates, beta, y)?,
            ttr: truth_to_rumor(rates, beta),
            cond_y_ok: cond_y(rates, beta, y),
            residual,
            fixed_points,
        })
    }
}

struct Candidate {
    rates: Rates,
    residual: f64,
}

/// Outcome of one damped run.
struct DampedRun {
    point: Rates,
    residual: f64,
}

fn damped(problem: &Problem<'_>, start: Rates, opts: &SolverOptions, budget: usize) -> DampedRun {
    let w = opts.damping;
    let target = 0.01 * opts.residual_tol;
    let mut z = start;
    let mut window_start = f64::INFINITY;
    let mut best = DampedRun {
        point: z,
        residual: f64::INFINITY,
    };
    for it in 0..budget {
        let next = problem.respond(z);
        let residual = next.distance(&z);
        if residual < best.residual {
            best = DampedRun { point: z, residual };
        }
        if residual <= target {
            break;
        }
        if it % opts.stall_window == 0 {
            if residual > 0.5 * window_start {
                break;
            }
            window_start = residual;
        }
        z = Rates {
            l: (1.0 - w) * z.l + w * next.l,
            h: (1.0 - w) * z.h + w * next.h,
        };
    }
    best
}

/// `l*(h)`: the bias-confirming rate that is a best response to itself at fixed `h`.
///
/// `l - g(arg_l(l, h))` is increasing in `l` because `arg_l` increases in `l`
/// and `g` is nonincreasing, so the root is unique.
pub(crate) fn best_l_given_h(problem: &Problem<'_>, h: f64) -> f64 {
    let g = |l: f64| problem.tech.inverse_marginal(problem.arg_l(l, h));
    let f0 = -g(0.0);
    if f0 >= 0.0 {
        return 0.0;
    }
    let top = problem.top;
    let f_top = top - g(top);
    if f_top <= 0.0 {
        return top;
    }
    increasing_root(|l| l - g(l), 0.0, top, f0, f_top, 1e-15)
}

fn reduced_gap(problem: &Problem<'_>, h: f64) -> f64 {
    let l = best_l_given_h(problem, h);
    h - problem.tech.inverse_marginal(problem.arg_h(l, h))
}

fn reduction_candidates(problem: &Problem<'_>, opts: &SolverOptions, out: &mut Vec<Candidate>) {
    let n = opts.scan_points.max(2);
    let top = problem.top;
    let mut push = |h: f64| {
        let rates = Rates::new(best_l_given_h(problem, h), h);
        out.push(Candidate {
            rates,
            residual: problem.residual(rates),
        });
    };
    let mut prev_h = 0.0;
    let mut prev_f = reduced_gap(problem, 0.0);
    if prev_f == 0.0 {
        push(0.0);
    }
    for i in 1..n {
        // The last point is exactly `top`, where the cap corner lives.
        let h = if i == n - 1 { top } else { top * i as f64 / (n - 1) as f64 };
        let f = reduced_gap(problem, h);
        if i == n - 1 && f <= 0.0 {
            // The response to `h = top` is at or above the cap.
            push(h);
        } else if f == 0.0 {
            push(h);
        } else if prev_f < 0.0 && f > 0.0 {
            push(increasing_root(
                |x| reduced_gap(problem, x),
                prev_h,
                h,
                prev_f,
                f,
                1e-15,
            ));
        } else if prev_f > 0.0 && f < 0.0 {
            push(increasing_root(
                |x| -reduced_gap(problem, x),
                prev_h,
                h,
                -prev_f,
                -f,
                1e-15,
            ));
        }
        prev_h = h;
        prev_f = f;
    }
}

fn start_grid(top: f64, n: usize) -> impl Iterator<Item = Rates> {
    let n = n.max(1);
    let step = if n == 1 { 0.0 } else { top / (n - 1) as f64 };
    (0..n).flat_map(move |i| (0..n).map(move |j| Rates::new(step * i as f64, step * j as f64)))
}

pub(crate) fn solve_problem(problem: &Problem<'_>, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    let mut pool = Vec::new();
    reduction_candidates(problem, opts, &mut pool);
    let mut best_residual = f64::INFINITY;
    for start in start_grid(problem.top, opts.start_grid) {
        let run = damped(problem, start, opts, opts.max_iterations);
        best_residual = best_residual.min(run.residual);
        pool.push(Candidate {
            rates: run.point,
            residual: run.residual,
        });
    }

    // Polish near-misses from the reduction, whose accuracy is limited by
    // kinks in the inverse marginal.
    for cand in pool.iter_mut() {
        if cand.residual > opts.residual_tol && cand.residual < 1e-6 {
            let run = damped(problem, cand.rates, opts, 10_000);
            if run.residual < cand.residual {
                cand.rates = run.point;
                cand.residual = run.residual;
            }
        }
        best_residual = best_residual.min(cand.residual);
    }

    let mut accepted: Vec<Candidate> = Vec::new();
    for cand in pool {
        if cand.residual > opts.residual_tol {
            continue;
        }
        match accepted
            .iter_mut()
            .find(|a| a.rates.distance(&cand.rates) <= opts.dedup_tol)
        {
            Some(existing) if existing.residual > cand.residual => *existing = cand,
            Some(_) => {}
            None => accepted.push(cand),
        }
    }
    if accepted.is_empty() {
        return if best_residual.is_finite() {
            Err(Error::NonConvergence { best_residual })
        } else {
            Err(Error::EmptySolutionSet)
        };
    }
    accepted.sort_by(|a, b| a.rates.h.total_cmp(&b.rates.h));
    if accepted.len() > 1 {
        log::debug!("{} equilibria found", accepted.len());
    }
    let fixed_points = accepted.iter().map(|a| a.rates).collect();
    let canonical = &accepted[0];
    EquilibriumSolution::build(problem, canonical.rates, canonical.residual, fixed_points)
}

/// Solves for all equilibria with the default options.
pub fn solve_equilibrium(params: &ModelParams, tech: &dyn Verification) -> Result<EquilibriumSolution> {
    solve_equilibrium_with(params, tech, &SolverOptions::default())
}

pub fn solve_equilibrium_with(
    params: &ModelParams,
    tech: &dyn Verification,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let problem = Problem::new(params, tech)?;
    solve_problem(&problem, opts)
}
