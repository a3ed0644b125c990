//! Subcommand implementations. Each reads its settings, runs the library
//! and writes CSV to the requested destination.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use rumorlab::abm::{run_replicas, summarize, AbmConfig};
use rumorlab::closed_forms::{classify_and_solve, Case};
use rumorlab::dynamics::{
    integrate, integrate_partisan, IntegrateOptions, PartisanState, PrevalenceState,
};
use rumorlab::equilibrium::{solve_equilibrium, solve_partisan_equilibrium, thresholds};
use rumorlab::records::{
    write_rows, AbmRow, AbmSummaryRow, RegionRow, SolutionRow, SweepRow, TrajectoryRow,
};
use rumorlab::steady::{partisan_steady_prevalence, stability_classify, steady_prevalence};
use rumorlab::{Error, Family, ModelParams, ModelSpec, Rates, Verification};

use crate::heatmap::write_ppm;
use crate::settings::{parse_range, parse_values, Settings};

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| {
                Error::Config(format!("cannot write output {}: {e}", p.display()))
            })?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(settings: &Settings, key: &str, rows: &[T]) -> anyhow::Result<()> {
    let path = settings.raw(key).map(Path::new);
    let out = open_output(path)?;
    write_rows(out, rows)?;
    Ok(())
}

/// Verification rates for runs driven by exogenous rates: `--l`/`--h` when
/// given, otherwise the (non-partisan) equilibrium rates.
fn run_rates(settings: &Settings, spec: &ModelSpec) -> anyhow::Result<Rates> {
    let l: Option<f64> = settings.get("l")?;
    let h: Option<f64> = settings.get("h")?;
    let rates = match (l, h) {
        (Some(l), Some(h)) => Rates::new(l, h),
        (None, None) => {
            let eq = solve_partisan_equilibrium(&spec.params, &spec.family)?;
            log::info!(
                "using equilibrium rates l = {}, h = {}",
                eq.nonpartisan.l,
                eq.nonpartisan.h
            );
            eq.nonpartisan
        }
        _ => {
            return Err(Error::Config("give both --l and --h, or neither".into()).into());
        }
    };
    rates.check_unit()?;
    Ok(rates)
}

fn warn_params(params: &ModelParams) {
    for w in params.warnings() {
        log::warn!("{w}");
    }
}

#[derive(Serialize)]
struct SteadyRow {
    l: f64,
    h: f64,
    beta: f64,
    gamma: f64,
    lambda: f64,
    k: u32,
    iota: f64,
    rho0: f64,
    rho1: f64,
    ttr: f64,
    stability: String,
}

pub fn steady(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let p = spec.params;
    warn_params(&p);
    let rates = run_rates(settings, &spec)?;
    let s = if p.gamma > 0.0 {
        partisan_steady_prevalence(rates, &p)?
    } else {
        steady_prevalence(rates, &p)?
    };
    let report = stability_classify(&p, rates)?;
    if !report.agrees() {
        return Err(Error::OracleDisagreement(format!(
            "numerical stability class {:?} differs from the threshold rule {:?}",
            report.class, report.analytic
        ))
        .into());
    }
    let row = SteadyRow {
        l: rates.l,
        h: rates.h,
        beta: p.beta,
        gamma: p.gamma,
        lambda: p.lambda(),
        k: p.k,
        iota: s.iota,
        rho0: s.rho0,
        rho1: s.rho1,
        ttr: s.ttr.value(),
        stability: format!("{:?}", report.class),
    };
    emit(settings, "out", &[row])
}

#[derive(Serialize)]
struct ThresholdRow {
    c_bar: f64,
    c_under: Option<f64>,
    y_bar: Option<f64>,
}

fn solution_row(spec: &ModelSpec) -> Result<SolutionRow, Error> {
    let p = &spec.params;
    let x_bar = spec.family.cap();
    if p.gamma > 0.0 {
        let eq = solve_partisan_equilibrium(p, &spec.family)?;
        let mut row = SolutionRow::new(p, x_bar, &eq.effective);
        row.l = eq.nonpartisan.l;
        row.h = eq.nonpartisan.h;
        row.ttr = eq.ttr();
        Ok(row)
    } else {
        Ok(SolutionRow::new(p, x_bar, &solve_equilibrium(p, &spec.family)?))
    }
}

pub fn equilibrium(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    warn_params(&spec.params);
    let row = solution_row(&spec)?;
    if !row.cond_y_ok {
        log::warn!("prior condition fails: unverified agents would not keep their bias");
    }
    if let Some(path) = settings.raw("thresholds") {
        let t = thresholds(&spec.params, &spec.family)?;
        let out = open_output(Some(Path::new(path)))?;
        write_rows(
            out,
            &[ThresholdRow {
                c_bar: t.c_bar,
                c_under: t.c_under,
                y_bar: t.y_bar,
            }],
        )?;
    }
    emit(settings, "out", &[row])
}

fn parse_state(text: &str) -> anyhow::Result<PrevalenceState> {
    let values = parse_values(text)?;
    let [a, b, c] = values.as_slice() else {
        return Err(Error::Config(format!("start state needs three values, got `{text}`")).into());
    };
    Ok(PrevalenceState::new(*a, *b, *c)?)
}

pub fn trajectory(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let p = spec.params;
    warn_params(&p);
    let rates = run_rates(settings, &spec)?;
    let start = match settings.raw("start") {
        Some(text) => parse_state(text)?,
        None => PrevalenceState::SMALL_SEED,
    };
    let defaults = IntegrateOptions::for_params(&p, 400.0 / p.delta);
    let opts = IntegrateOptions {
        horizon: settings.get_or("horizon", defaults.horizon)?,
        dt: settings.get_or("dt", defaults.dt)?,
        record_every: settings.get_or("record-every", defaults.record_every)?,
        stop_on_converge: settings.get_or("stop-on-converge", false)?,
        tolerance: defaults.tolerance,
    };
    p.check_step(opts.dt)?;
    let rows: Vec<TrajectoryRow> = if p.gamma > 0.0 {
        let traj = integrate_partisan(&PartisanState::from_baseline(&start), &p, rates, &opts)?;
        let g = p.gamma;
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| {
                // Group-level prevalences: partisans and non-partisans pooled.
                let pooled = PrevalenceState::from_array([
                    s.rho00,
                    (1.0 - g) * s.rho_n0,
                    (1.0 - g) * s.rho_n1 + g * s.rho_g1,
                ]);
                TrajectoryRow::new(t, &pooled)
            })
            .collect()
    } else {
        let traj = integrate(&start, &p, rates, &opts)?;
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| TrajectoryRow::new(t, s))
            .collect()
    };
    emit(settings, "out", &rows)
}

pub fn abm(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let p = spec.params;
    warn_params(&p);
    let rates = run_rates(settings, &spec)?;
    let defaults = AbmConfig::default();
    let cfg = AbmConfig {
        population: settings.get_or("population", defaults.population)?,
        dt: settings.get_or("dt", defaults.dt)?,
        horizon: settings.get_or("horizon", defaults.horizon)?,
        record_every: settings.get_or("record-every", defaults.record_every)?,
        initial: match settings.raw("start") {
            Some(text) => parse_state(text)?,
            None => defaults.initial,
        },
    };
    let first: u64 = settings.get_or("seed", 1)?;
    let replicas: u64 = settings.get_or("replicas", 10)?;
    if replicas == 0 {
        return Err(Error::Config("replicas must be at least 1".into()).into());
    }
    let seeds: Vec<u64> = (first..first + replicas).collect();
    let runs = run_replicas(&p, rates, &cfg, &seeds)?;

    let rows: Vec<AbmRow> = runs
        .iter()
        .flat_map(|r| r.points.iter().map(move |pt| AbmRow::new(pt, r.seed)))
        .collect();
    if let Some(path) = settings.raw("summary") {
        let summary: Vec<AbmSummaryRow> = summarize(&runs)?
            .iter()
            .map(|pt| AbmSummaryRow::new(pt, runs.len()))
            .collect();
        write_rows(open_output(Some(Path::new(path)))?, &summary)?;
    }
    emit(settings, "out", &rows)
}

pub fn region_map(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let Family::ExpCapped(_) = spec.family else {
        return Err(Error::Config("region maps need the exp_cap family".into()).into());
    };
    let x_bar = spec.family.cap();
    let beta = spec.params.beta;
    let nc: usize = settings.get_or("nc", 100)?;
    let ny: usize = settings.get_or("ny", 100)?;
    if nc < 2 || ny < 2 {
        return Err(Error::Config("grid resolutions must be at least 2".into()).into());
    }
    let (c_lo, c_hi) = parse_range(settings.raw("c-range").unwrap_or("0:0.5"))?;
    let (y_lo, y_hi) = parse_range(settings.raw("y-range").unwrap_or("0.5:0.995"))?;
    let band: f64 = settings.get_or("band", 1e-3)?;
    let tol: f64 = settings.get_or("tol", 1e-6)?;
    let max_disagreement: f64 = settings.get_or("max-disagreement", 0.01)?;

    // Cell centres, row-major with y as the slow index.
    let cells: Vec<(f64, f64)> = (0..ny)
        .flat_map(|j| {
            let y = y_lo + (y_hi - y_lo) * (j as f64 + 0.5) / ny as f64;
            (0..nc).map(move |i| (c_lo + (c_hi - c_lo) * (i as f64 + 0.5) / nc as f64, y))
        })
        .collect();
    let base = spec.params;
    let rows: Vec<Result<(RegionRow, Case), Error>> = cells
        .par_iter()
        .map(|&(c, y)| {
            let region = classify_and_solve(c, y, beta, x_bar)?;
            let p = ModelParams { c, y, ..base };
            let solved = solve_equilibrium(&p, &spec.family);
            if let Err(e) = &solved {
                log::warn!("solver failed at c = {c}, y = {y}: {e}");
            }
            let row = RegionRow::new(c, y, beta, x_bar, &region, solved.as_ref().ok(), band, tol);
            Ok((row, region.case))
        })
        .collect();
    let mut table = Vec::with_capacity(rows.len());
    let mut cases = Vec::with_capacity(rows.len());
    for r in rows {
        let (row, case) = r?;
        table.push(row);
        cases.push(case);
    }

    let compared: Vec<&RegionRow> = table
        .iter()
        .filter(|r| !r.boundary && r.case != Case::Invalid.as_str())
        .collect();
    let disagreeing = compared.iter().filter(|r| !r.agree).count();
    let share = if compared.is_empty() {
        0.0
    } else {
        disagreeing as f64 / compared.len() as f64
    };
    eprintln!(
        "region map: {} cells, {} compared outside the boundary band, {disagreeing} disagree ({:.3}%)",
        table.len(),
        compared.len(),
        100.0 * share
    );

    emit(settings, "out", &table)?;
    if let Some(path) = settings.raw("ppm") {
        let scale: usize = settings.get_or("ppm-scale", 4)?;
        let file = File::create(path)
            .map_err(|e| Error::Config(format!("cannot write {path}: {e}")))?;
        write_ppm(BufWriter::new(file), &cases, nc, ny, scale)
            .with_context(|| format!("writing {path}"))?;
    }
    if share > max_disagreement {
        return Err(Error::OracleDisagreement(format!(
            "closed forms and solver disagree on {:.3}% of non-boundary cells",
            100.0 * share
        ))
        .into());
    }
    Ok(())
}

const SWEPT: [&str; 9] = ["k", "nu", "delta", "beta", "y", "c", "gamma", "xbar", "lk"];

fn apply(spec: &ModelSpec, name: &str, value: f64) -> Result<ModelSpec, Error> {
    let mut s = *spec;
    let p = &mut s.params;
    match name {
        "k" => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!("k = {value} is not a positive integer")));
            }
            p.k = value as u32;
        }
        "nu" => p.nu = value,
        "delta" => p.delta = value,
        "beta" => p.beta = value,
        "y" => p.y = value,
        "c" => p.c = value,
        "gamma" => p.gamma = value,
        "xbar" => s.family = Family::from_name(s.family.name(), value)?,
        "lk" => *p = p.with_lambda_k(value),
        other => return Err(Error::Config(format!("cannot sweep `{other}`"))),
    }
    Ok(s)
}

fn parse_sweep(text: &str) -> Result<(String, Vec<f64>), Error> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep `{text}` should read name=values")))?;
    let name = name.trim().to_string();
    if !SWEPT.contains(&name.as_str()) {
        return Err(Error::Config(format!(
            "cannot sweep `{name}`; choose from {}",
            SWEPT.join(", ")
        )));
    }
    Ok((name, parse_values(values)?))
}

pub fn sweep(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let axes: Vec<(String, Vec<f64>)> = settings
        .raw("sweep")
        .unwrap_or_default()
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_sweep)
        .collect::<Result<_, _>>()?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config("sweep exactly one or two parameters".into()).into());
    }
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (name, values) in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push((name.clone(), v));
                    next
                })
            })
            .collect();
    }
    let rows: Vec<Result<SweepRow, Error>> = points
        .par_iter()
        .map(|assignment| {
            let mut s = spec;
            for (name, v) in assignment {
                s = apply(&s, name, *v)?;
            }
            s.params.validate()?;
            let outcome = solution_row(&s).map_err(|e| e.to_string());
            Ok(SweepRow::new(&s.params, s.family.cap(), outcome))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep rows failed; see the status column", rows.len());
    }
    emit(settings, "out", &rows)
}

#[derive(Serialize)]
struct PartisanRow {
    gamma: f64,
    l: Option<f64>,
    h: Option<f64>,
    effective_l: Option<f64>,
    effective_h: Option<f64>,
    ttr: Option<f64>,
    integrated_ttr: Option<f64>,
    status: String,
}

pub fn partisan_check(settings: &Settings) -> anyhow::Result<()> {
    let spec = settings.model()?;
    let gammas = parse_values(settings.raw("gammas").unwrap_or("0,0.25,0.5"))?;
    let tol: f64 = settings.get_or("tol", 1e-8)?;
    let integrated_tol: f64 = settings.get_or("integrated-tol", 1e-6)?;

    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let p = ModelParams { gamma, ..spec.params };
        let outcome = p
            .validate()
            .and_then(|_| solve_partisan_equilibrium(&p, &spec.family))
            .and_then(|eq| {
                let opts = IntegrateOptions {
                    record_every: usize::MAX,
                    tolerance: 1e-13,
                    ..IntegrateOptions::for_params(&p, 1e6)
                };
                let start = PartisanState::from_baseline(&PrevalenceState::SMALL_SEED);
                let traj = integrate_partisan(&start, &p, eq.nonpartisan, &opts)?;
                let agg = traj.terminal.aggregate(gamma);
                Ok((eq, agg.rho0 / agg.rho1))
            });
        rows.push(match outcome {
            Ok((eq, integrated)) => PartisanRow {
                gamma,
                l: Some(eq.nonpartisan.l),
                h: Some(eq.nonpartisan.h),
                effective_l: Some(eq.effective.l()),
                effective_h: Some(eq.effective.h()),
                ttr: Some(eq.ttr()),
                integrated_ttr: Some(integrated),
                status: "ok".into(),
            },
            Err(e) => {
                if matches!(e, Error::InvalidParameter { .. }) {
                    return Err(e.into());
                }
                log::warn!("gamma = {gamma}: {e}");
                PartisanRow {
                    gamma,
                    l: None,
                    h: None,
                    effective_l: None,
                    effective_h: None,
                    ttr: None,
                    integrated_ttr: None,
                    status: e.to_string(),
                }
            }
        });
    }
    emit(settings, "out", &rows)?;

    let ok: Vec<&PartisanRow> = rows.iter().filter(|r| r.status == "ok").collect();
    if ok.is_empty() {
        return Err(Error::Config("no partisan share admits an interior equilibrium".into()).into());
    }
    let ratios: Vec<f64> = ok.iter().filter_map(|r| r.ttr).collect();
    let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst_integration = ok
        .iter()
        .map(|r| (r.ttr.unwrap_or(0.0) - r.integrated_ttr.unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    eprintln!(
        "partisan check: {} of {} shares interior, ratio spread {spread:.3e}, integration gap {worst_integration:.3e}",
        ok.len(),
        rows.len()
    );
    if spread > tol || worst_integration > integrated_tol {
        return Err(Error::OracleDisagreement(format!(
            "ratio spread {spread:e} (tolerance {tol:e}), integration gap {worst_integration:e} (tolerance {integrated_tol:e})"
        ))
        .into());
    }
    Ok(())
}
