//! Row types for CSV export and re-import.
//!
//! Every table has a fixed header given by the field order of its row type.
//! Infinite ratios are written as `inf`, which parses back to `f64::INFINITY`.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::abm::{AbmPoint, EnsemblePoint};
use crate::closed_forms::RegionClassification;
use crate::dynamics::PrevalenceState;
use crate::equilibrium::EquilibriumSolution;
use crate::error::Result;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub rho00: f64,
    pub rho01: f64,
    pub rho11: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub iota: f64,
}

impl TrajectoryRow {
    pub fn new(t: f64, state: &PrevalenceState) -> Self {
        let agg = state.aggregate();
        Self {
            t,
            rho00: state.rho00,
            rho01: state.rho01,
            rho11: state.rho11,
            rho0: agg.rho0,
            rho1: agg.rho1,
            iota: agg.iota,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub y: f64,
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub xbar: f64,
    pub l: f64,
    pub h: f64,
    pub kind: String,
    pub ttr: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub cond_y_ok: bool,
    pub residual: f64,
    pub multiplicity: usize,
}

impl SolutionRow {
    pub fn new(params: &ModelParams, x_bar: f64, sol: &EquilibriumSolution) -> Self {
        Self {
            y: params.y,
            c: params.c,
            beta: params.beta,
            gamma: params.gamma,
            xbar: x_bar,
            l: sol.l(),
            h: sol.h(),
            kind: sol.kind.to_string(),
            ttr: sol.ttr.value(),
            big_l: sol.big_l,
            big_h: sol.big_h,
            cond_y_ok: sol.cond_y_ok,
            residual: sol.residual,
            multiplicity: sol.multiplicity(),
        }
    }
}

/// One sweep row: the solution columns (empty when the solve failed) plus
/// the diffusion scale and a status message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub y: f64,
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub xbar: f64,
    pub l: Option<f64>,
    pub h: Option<f64>,
    pub kind: Option<String>,
    pub ttr: Option<f64>,
    #[serde(rename = "L")]
    pub big_l: Option<f64>,
    #[serde(rename = "H")]
    pub big_h: Option<f64>,
    pub cond_y_ok: Option<bool>,
    pub residual: Option<f64>,
    pub multiplicity: Option<usize>,
    pub lambda: f64,
    pub k: u32,
    pub status: String,
}

impl SweepRow {
    pub fn new(params: &ModelParams, x_bar: f64, outcome: std::result::Result<SolutionRow, String>) -> Self {
        let mut row = Self {
            y: params.y,
            c: params.c,
            beta: params.beta,
            gamma: params.gamma,
            xbar: x_bar,
            l: None,
            h: None,
            kind: None,
            ttr: None,
            big_l: None,
            big_h: None,
            cond_y_ok: None,
            residual: None,
            multiplicity: None,
            lambda: params.lambda(),
            k: params.k,
            status: "ok".into(),
        };
        match outcome {
            Ok(s) => {
                row.l = Some(s.l);
                row.h = Some(s.h);
                row.kind = Some(s.kind);
                row.ttr = Some(s.ttr);
                row.big_l = Some(s.big_l);
                row.big_h = Some(s.big_h);
                row.cond_y_ok = Some(s.cond_y_ok);
                row.residual = Some(s.residual);
                row.multiplicity = Some(s.multiplicity);
            }
            Err(msg) => row.status = msg,
        }
        row
    }
}

/// Closed-form classification next to the generic solver's answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub c: f64,
    pub y: f64,
    pub beta: f64,
    pub xbar: f64,
    pub case: String,
    pub l: f64,
    pub h: f64,
    pub ttr: f64,
    pub solver_l: Option<f64>,
    pub solver_h: Option<f64>,
    pub solver_kind: Option<String>,
    /// Within the boundary band, where small threshold errors flip the case.
    pub boundary: bool,
    /// Rates agree within tolerance (always true for invalid cells, which are not compared).
    pub agree: bool,
}

impl RegionRow {
    pub fn new(
        c: f64,
        y: f64,
        beta: f64,
        x_bar: f64,
        region: &RegionClassification,
        solver: Option<&EquilibriumSolution>,
        band: f64,
        tol: f64,
    ) -> Self {
        let agree = !region.is_valid()
            || solver.is_some_and(|s| s.rates.distance(&region.rates) <= tol);
        Self {
            c,
            y,
            beta,
            xbar: x_bar,
            case: region.case.to_string(),
            l: region.rates.l,
            h: region.rates.h,
            ttr: region.ttr.value(),
            solver_l: solver.map(|s| s.l()),
            solver_h: solver.map(|s| s.h()),
            solver_kind: solver.map(|s| s.kind.to_string()),
            boundary: region.boundary_distance < band,
            agree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbmRow {
    pub t: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub iota: f64,
    pub seed: u64,
}

impl AbmRow {
    pub fn new(p: &AbmPoint, seed: u64) -> Self {
        Self {
            t: p.t,
            rho0: p.rho0,
            rho1: p.rho1,
            iota: p.iota,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbmSummaryRow {
    pub t: f64,
    pub mean_rho0: f64,
    pub sd_rho0: f64,
    pub mean_rho1: f64,
    pub sd_rho1: f64,
    pub mean_iota: f64,
    pub sd_iota: f64,
    pub seeds: usize,
}

impl AbmSummaryRow {
    pub fn new(p: &EnsemblePoint, seeds: usize) -> Self {
        Self {
            t: p.t,
            mean_rho0: p.mean_rho0,
            sd_rho0: p.sd_rho0,
            mean_rho1: p.mean_rho1,
            sd_rho1: p.sd_rho1,
            mean_iota: p.mean_iota,
            sd_iota: p.sd_iota,
            seeds,
        }
    }
}

/// Writes rows with a header line and LF terminators.
pub fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| crate::error::Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_rows<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut input = csv::Reader::from_reader(reader);
    input.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// Header line of a row type, without the terminator.
pub fn header_of<T: Serialize>(sample: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, std::slice::from_ref(sample))?;
    let text = String::from_utf8(buf).map_err(|e| crate::error::Error::Csv(e.to_string()))?;
    Ok(text.lines().next().unwrap_or_default().to_string())
}
