//! Closed-form equilibria for the capped exponential technology.
//!
//! With `x(a) = 1 - exp(-a)` capped at `x_bar`, the inverse marginal is
//! piecewise linear and every equilibrium falls in one of six cases,
//! according to which of `l` and `h` are zero, interior or at the cap:
//!
//! | case | `l`            | `h`            |
//! |------|----------------|----------------|
//! | I    | 0              | 0              |
//! | II   | 0              | interior       |
//! | III  | 0              | cap            |
//! | IV   | interior       | interior       |
//! | V    | interior       | cap            |
//! | VI   | cap            | cap            |
//!
//! Which case applies is decided by comparing the cost with thresholds that
//! depend on `(y, beta, x_bar)`:
//!
//! * `c >= c_bar`: case I;
//! * `y >= beta`: II above `c1`, III down to `c2`, V down to `c4`, VI below;
//! * `y < beta`: IV above `c3`, V down to `c4`, VI below.
//!
//! A case is only an equilibrium if the prior condition holds, which reduces
//! to `y` exceeding a case-specific threshold; otherwise the point is labelled
//! [`Case::Invalid`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::Rates;
use crate::steady::{truth_to_rumor, Ratio};
use crate::verification::MAX_LEVEL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
    /// The prior condition fails.
    Invalid,
}

impl Case {
    pub const ALL: [Case; 7] = [
        Case::I,
        Case::II,
        Case::III,
        Case::IV,
        Case::V,
        Case::VI,
        Case::Invalid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
            Case::V => "V",
            Case::VI => "VI",
            Case::Invalid => "Invalid",
        }
    }

    /// Position in [`Case::ALL`], used as a color index in raster output.
    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}`")))
    }
}

/// Cost and prior thresholds at one parameter point.
///
/// Thresholds defined by a square root are `None` when the radicand is
/// negative or a denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpThresholds {
    pub c_bar: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: f64,
    pub ybar2: f64,
    pub ybar3: f64,
    pub ybar4: Option<f64>,
    pub ybar5: Option<f64>,
    pub ybar6: f64,
}

fn validate_point(c: f64, y: f64, beta: f64, x_bar: f64) -> Result<()> {
    let bad = |name, reason: &str| {
        Err(Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        })
    };
    if !(c.is_finite() && c >= 0.0) {
        return bad("c", "must be finite and >= 0");
    }
    if !(y > 0.5 && y < 1.0) {
        return bad("y", "must lie in (0.5, 1)");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return bad("beta", "closed forms need beta in (0, 1)");
    }
    if !(x_bar > 0.0 && x_bar <= 1.0) {
        return bad("xbar", "must lie in (0, 1]");
    }
    Ok(())
}

fn sqrt_checked(v: f64, what: &'static str) -> Result<f64> {
    if v < 0.0 {
        Err(Error::ComplexRadicand(what))
    } else {
        Ok(v.sqrt())
    }
}

/// Boundary between cases IV and V, defined for `beta != y`.
pub fn c3(y: f64, beta: f64, x_bar: f64) -> Result<f64> {
    let x = x_bar.min(MAX_LEVEL);
    if beta == y {
        return Err(Error::Degenerate("c3 needs beta != y".into()));
    }
    let a = y + 1.0 - beta * (1.0 - x);
    let root = sqrt_checked(a * a - 4.0 * x * y, "c3")?;
    Ok((1.0 - y) / 2.0 + (1.0 - y) * (1.0 - x * beta - root) / (2.0 * (beta - y)))
}

/// Prior threshold of case IV.
pub fn ybar4(c: f64, beta: f64) -> Result<f64> {
    let inner = 4.0 + c - 4.0 * beta + 4.0 * beta * beta * c - 4.0 * beta * c;
    let root = sqrt_checked(c * inner, "ybar4")?;
    Ok(0.5 * (2.0 + c - root - 2.0 * beta * c))
}

/// Prior threshold of case V.
pub fn ybar5(c: f64, beta: f64, x_bar: f64) -> Result<f64> {
    let x = x_bar.min(MAX_LEVEL);
    let d = beta - 2.0 * beta * c + 2.0 * c - beta * x + x - 2.0;
    if d == 0.0 {
        return Err(Error::Degenerate("ybar5 denominator vanishes".into()));
    }
    let b = 3.0 - beta - c + beta * x - x;
    let root = sqrt_checked(b * b + 4.0 * (1.0 - beta * c) * d, "ybar5")?;
    Ok((c - beta * x + x - 3.0 + beta + root) / (2.0 * d))
}

pub fn exp_thresholds(c: f64, y: f64, beta: f64, x_bar: f64) -> Result<ExpThresholds> {
    validate_point(c, y, beta, x_bar)?;
    let x = x_bar.min(MAX_LEVEL);
    Ok(ExpThresholds {
        c_bar: 1.0 - y,
        c1: (1.0 - x) * (1.0 - y) / (1.0 - x * y),
        c2: beta * (1.0 - x) * (1.0 - y) / (beta - x * (beta - (1.0 - beta) * y)),
        c3: c3(y, beta, x).ok(),
        c4: beta * (1.0 - x).powi(2) * (1.0 - y) / (beta - beta * x + x * y),
        ybar2: 1.0 / (1.0 + 2.0 * c),
        ybar3: 1.0 / (2.0 - x),
        ybar4: ybar4(c, beta).ok(),
        ybar5: ybar5(c, beta, x).ok(),
        ybar6: (1.0 - beta + beta * x) / (2.0 * (1.0 - beta) * (1.0 - x) + x),
    })
}

fn case_rates(case: Case, c: f64, y: f64, beta: f64, x: f64) -> Rates {
    match case {
        Case::I | Case::Invalid => Rates::ZERO,
        Case::II => Rates::new(0.0, (1.0 - y - c) / (1.0 - y - c * y)),
        Case::III => Rates::new(0.0, x),
        Case::IV => {
            let scale = (1.0 - c - y) / (1.0 - y);
            Rates::new(
                scale * (beta - y) / beta,
                scale * (1.0 - (1.0 - c) * y - c * beta) / (1.0 - y - c * beta),
            )
        }
        Case::V => {
            let num = (1.0 - beta) * x * y + beta * (1.0 - x + y);
            let den = beta * (c * y + (1.0 - x) * (1.0 - y));
            Rates::new(1.0 - c * num / den, x)
        }
        Case::VI => Rates::new(x, x),
    }
}

/// Equilibrium case before the prior condition is checked, together with
/// the distance from `(c, y)` to the thresholds consulted on the way.
struct Decision {
    case: Case,
    prior_threshold: Option<f64>,
    distance: f64,
}

fn decide(c: f64, y: f64, beta: f64, t: &ExpThresholds) -> Result<Decision> {
    let mut distance = (c - t.c_bar).abs();
    let (case, prior) = if c >= t.c_bar {
        (Case::I, None)
    } else if y >= beta {
        distance = distance.min((y - beta).abs());
        let mut step = |threshold: f64| {
            distance = distance.min((c - threshold).abs());
            threshold
        };
        if c > step(t.c1) {
            (Case::II, Some(t.ybar2))
        } else if c >= step(t.c2) {
            (Case::III, Some(t.ybar3))
        } else if c > step(t.c4) {
            (Case::V, Some(t.ybar5.ok_or(Error::ComplexRadicand("ybar5"))?))
        } else {
            (Case::VI, Some(t.ybar6))
        }
    } else {
        distance = distance.min((y - beta).abs());
        let c3 = t.c3.ok_or(Error::ComplexRadicand("c3"))?;
        if c > c3 {
            distance = distance.min((c - c3).abs());
            (Case::IV, Some(t.ybar4.ok_or(Error::ComplexRadicand("ybar4"))?))
        } else if c > t.c4 {
            distance = distance.min((c - c3).abs()).min((c - t.c4).abs());
            (Case::V, Some(t.ybar5.ok_or(Error::ComplexRadicand("ybar5"))?))
        } else {
            distance = distance.min((c - c3).abs()).min((c - t.c4).abs());
            (Case::VI, Some(t.ybar6))
        }
    };
    if let Some(p) = prior {
        distance = distance.min((y - p).abs());
    }
    Ok(Decision {
        case,
        prior_threshold: prior,
        distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionClassification {
    /// Reported label: the equilibrium case, or `Invalid` when the prior condition fails.
    pub case: Case,
    /// Equilibrium case ignoring the prior condition.
    pub equilibrium_case: Case,
    pub rates: Rates,
    pub ttr: Ratio,
    pub thresholds: ExpThresholds,
    /// Prior threshold of the equilibrium case (`None` for case I, which is always valid).
    pub prior_threshold: Option<f64>,
    /// Distance in `c` or `y` to the nearest threshold consulted.
    pub boundary_distance: f64,
    /// Cases adjacent across a threshold the point lies on.
    pub ties: Vec<Case>,
}

impl RegionClassification {
    pub fn is_valid(&self) -> bool {
        self.case != Case::Invalid
    }
}

const TIE_TOL: f64 = 1e-12;
const TIE_PROBE: f64 = 1e-9;

fn label(c: f64, y: f64, beta: f64, x_bar: f64) -> Result<(Case, Decision, ExpThresholds)> {
    let t = exp_thresholds(c, y, beta, x_bar)?;
    let d = decide(c, y, beta, &t)?;
    let valid = d.prior_threshold.is_none_or(|p| y >= p);
    let case = if valid { d.case } else { Case::Invalid };
    Ok((case, d, t))
}

/// Classifies `(c, y, beta, x_bar)` and returns the closed-form equilibrium.
/// `x_bar = 1` is the no-cap limit.
pub fn classify_and_solve(c: f64, y: f64, beta: f64, x_bar: f64) -> Result<RegionClassification> {
    let (case, decision, thresholds) = label(c, y, beta, x_bar)?;
    let x = x_bar.min(MAX_LEVEL);
    let rates = case_rates(decision.case, c, y, beta, x);
    let mut ties = Vec::new();
    if decision.distance <= TIE_TOL {
        let probes = [
            (c - TIE_PROBE, y),
            (c + TIE_PROBE, y),
            (c, y - TIE_PROBE),
            (c, y + TIE_PROBE),
        ];
        for (pc, py) in probes {
            if let Ok((other, _, _)) = label(pc.max(0.0), py, beta, x_bar) {
                if other != case && !ties.contains(&other) {
                    ties.push(other);
                }
            }
        }
        ties.sort();
    }
    Ok(RegionClassification {
        case,
        equilibrium_case: decision.case,
        rates,
        ttr: truth_to_rumor(rates, beta),
        thresholds,
        prior_threshold: decision.prior_threshold,
        boundary_distance: decision.distance,
        ties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Ratio on case V and the sign of its (constant) slope in `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseVRatio {
    pub ratio: f64,
    /// Exact slope `d ratio / d beta`; the ratio is affine in `beta`.
    pub slope: f64,
    pub sign: Sign,
}

pub fn ttr_case_v(c: f64, y: f64, beta: f64, x_bar: f64) -> Result<CaseVRatio> {
    let region = classify_and_solve(c, y, beta, x_bar)?;
    if region.equilibrium_case != Case::V {
        return Err(Error::WrongCase {
            expected: Case::V.to_string(),
            found: region.equilibrium_case.to_string(),
        });
    }
    let x = x_bar.min(MAX_LEVEL);
    let den = (1.0 - x) * (1.0 - y) + c * y;
    let tilt = (1.0 - y) * (1.0 - x) - c;
    let ratio = ((1.0 + x) * (1.0 - y) + c * y + 2.0 * beta * tilt) / den;
    let sign = if tilt.abs() <= 1e-12 {
        Sign::Zero
    } else if tilt > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    };
    Ok(CaseVRatio {
        ratio,
        slope: 2.0 * tilt / den,
        sign,
    })
}

/// Prior at which the case-V slope in `beta` changes sign.
pub fn case_v_sign_boundary(c: f64, x_bar: f64) -> f64 {
    let x = x_bar.min(MAX_LEVEL);
    (1.0 - c - x) / (1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO_CAP: f64 = 1.0;

    #[test]
    fn threshold_examples() {
        let t = exp_thresholds(0.05, 0.9, 0.75, 0.3).unwrap();
        assert!((t.c1 - 0.07 / 0.73).abs() < 1e-14);
        let t = exp_thresholds(0.04, 0.9, 0.75, 0.3).unwrap();
        assert!((t.ybar2 - 1.0 / 1.08).abs() < 1e-14);
        let t = exp_thresholds(0.05, 0.74, 0.75, 0.3).unwrap();
        assert!((t.ybar6 - 0.475 / 0.65).abs() < 1e-14);
        assert!((t.ybar3 - 1.0 / 1.7).abs() < 1e-14);
    }

    #[test]
    fn no_cap_c3_vanishes() {
        let v = c3(0.8, 0.9, NO_CAP).unwrap();
        assert!(v.abs() < 1e-8, "{v}");
        assert!(matches!(c3(0.8, 0.8, 0.3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn case_two_point() {
        let r = classify_and_solve(0.04, 0.94, 0.7, NO_CAP).unwrap();
        assert_eq!(r.case, Case::II);
        assert_eq!(r.rates.l, 0.0);
        assert!((r.rates.h - 0.05 / 0.056).abs() < 1e-14);
    }

    #[test]
    fn case_four_point() {
        let r = classify_and_solve(0.1, 0.88, 0.95, NO_CAP).unwrap();
        assert_eq!(r.case, Case::IV);
        assert!((r.rates.l - 0.02 / 0.12 * 0.07 / 0.95).abs() < 1e-14);
        assert!((r.rates.h - 0.02 / 0.12 * 0.113 / 0.025).abs() < 1e-13);
        let y4 = r.prior_threshold.unwrap();
        assert!((y4 - 0.8712).abs() < 1e-4, "{y4}");
        assert!((r.ttr.value() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn case_six_point() {
        let r = classify_and_solve(0.05, 0.74, 0.75, 0.3).unwrap();
        assert_eq!(r.case, Case::VI);
        assert_eq!(r.rates, Rates::new(0.3, 0.3));
        assert!(r.thresholds.c4 > 0.05 && (r.thresholds.c4 - 0.1279).abs() < 1e-4);
    }

    #[test]
    fn case_one_always_valid() {
        let r = classify_and_solve(0.45, 0.6, 0.9, 0.3).unwrap();
        assert_eq!(r.case, Case::I);
        assert_eq!(r.prior_threshold, None);
    }

    #[test]
    fn prior_failure_is_invalid() {
        // Opposing-only branch with y below 1/(1 + 2c).
        let r = classify_and_solve(0.04, 0.91, 0.7, NO_CAP).unwrap();
        assert_eq!(r.equilibrium_case, Case::II);
        assert_eq!(r.case, Case::Invalid);
    }

    #[test]
    fn ties_name_both_sides() {
        let y = 0.9;
        let c_bar = 1.0 - y;
        let r = classify_and_solve(c_bar, y, 0.7, NO_CAP).unwrap();
        assert_eq!(r.case, Case::I);
        assert_eq!(r.ties, vec![Case::II]);
    }

    #[test]
    fn case_v_ratio_is_affine() {
        let (c, y, x) = (0.12, 0.8, 0.3);
        let a = ttr_case_v(c, y, 0.9, x).unwrap();
        let b = ttr_case_v(c, y, 0.91, x).unwrap();
        let den = (1.0 - x) * (1.0 - y) + c * y;
        let expected = 2.0 * 0.01 * ((1.0 - y) * (1.0 - x) - c) / den;
        assert!((b.ratio - a.ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn case_v_sign_zero_on_boundary() {
        let (c, x) = (0.1, 0.3);
        let y = case_v_sign_boundary(c, x);
        let r = ttr_case_v(c, y, 0.95, x).unwrap();
        assert_eq!(r.sign, Sign::Zero);
        assert_eq!(ttr_case_v(c, y - 0.01, 0.95, x).unwrap().sign, Sign::Positive);
        assert_eq!(ttr_case_v(c, y + 0.01, 0.95, x).unwrap().sign, Sign::Negative);
    }

    #[test]
    fn case_v_rejects_other_cases() {
        let err = ttr_case_v(0.04, 0.94, 0.7, NO_CAP).unwrap_err();
        assert!(matches!(err, Error::WrongCase { .. }));
    }

    #[test]
    fn case_labels_round_trip() {
        for case in Case::ALL {
            assert_eq!(case.as_str().parse::<Case>().unwrap(), case);
        }
    }
}
