//! Verification technologies `x(alpha)`: probability that effort `alpha`
//! reveals the true state.
//!
//! Every technology is continuous, starts at `x(0) = 0`, is strictly
//! increasing and strictly concave until it reaches its cap `x_bar`, and has
//! a finite right derivative `d_bar` at the origin. The equilibrium
//! conditions only ever need the inverse of the (sub)derivative, `g`, which
//! maps a marginal value `d` to the verification level whose marginal is `d`.
//! Kinks are handled by clamping: `g(d) = x_bar` for marginals below the
//! cap's left derivative, and `g(d) = 0` for `d >= d_bar`.

use crate::error::{Error, Result};

/// Largest verification level the solvers will use; keeps `1 - h` away from zero.
pub const MAX_LEVEL: f64 = 1.0 - 1e-9;

pub trait Verification: Send + Sync {
    /// Success probability for effort `alpha >= 0`.
    fn eval(&self, effort: f64) -> f64;

    /// Supremum of `x`, in `(0, 1]`.
    fn cap(&self) -> f64;

    /// Right derivative at the origin.
    fn origin_slope(&self) -> f64;

    /// Inverse of the subderivative.
    fn inverse_marginal(&self, marginal: f64) -> f64;

    /// Right derivative of `x` at `alpha`.
    fn marginal(&self, effort: f64) -> f64;

    /// Effort reaching `level`; `None` when the level is not attainable below the cap.
    fn effort_for(&self, level: f64) -> Option<f64>;

    /// Second derivative at `alpha`, when the technology is twice differentiable there.
    fn curvature(&self, _effort: f64) -> Option<f64> {
        None
    }

    /// Highest level usable by the equilibrium solvers.
    fn top(&self) -> f64 {
        self.cap().min(MAX_LEVEL)
    }
}

/// `x(alpha) = 1 - exp(-alpha)` up to the cap `x_bar`, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpCapped {
    x_bar: f64,
}

impl ExpCapped {
    pub fn new(x_bar: f64) -> Result<Self> {
        if !(x_bar > 0.0 && x_bar <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "xbar",
                reason: format!("{x_bar} outside (0, 1]"),
            });
        }
        Ok(Self { x_bar })
    }

    /// The no-cap limit `x_bar -> 1`.
    pub fn no_cap() -> Self {
        Self { x_bar: 1.0 }
    }

    /// Effort at which the cap is reached, `-ln(1 - x_bar)`.
    pub fn kink(&self) -> f64 {
        if self.x_bar >= 1.0 {
            f64::INFINITY
        } else {
            -(-self.x_bar).ln_1p()
        }
    }
}

impl Verification for ExpCapped {
    fn eval(&self, effort: f64) -> f64 {
        if effort < self.kink() {
            -(-effort).exp_m1()
        } else {
            self.x_bar
        }
    }

    fn cap(&self) -> f64 {
        self.x_bar
    }

    fn origin_slope(&self) -> f64 {
        1.0
    }

    fn inverse_marginal(&self, marginal: f64) -> f64 {
        if marginal >= 1.0 {
            0.0
        } else if marginal <= 1.0 - self.x_bar {
            self.x_bar
        } else {
            1.0 - marginal
        }
    }

    fn marginal(&self, effort: f64) -> f64 {
        if effort < self.kink() {
            (-effort).exp()
        } else {
            0.0
        }
    }

    fn effort_for(&self, level: f64) -> Option<f64> {
        if (0.0..self.x_bar).contains(&level) {
            Some(-(-level).ln_1p())
        } else {
            None
        }
    }

    fn curvature(&self, effort: f64) -> Option<f64> {
        (effort < self.kink()).then(|| -(-effort).exp())
    }
}

/// `x(alpha) = alpha / (1 + alpha)`: slope 1 at the origin, cap 1 approached
/// only asymptotically.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rational;

impl Verification for Rational {
    fn eval(&self, effort: f64) -> f64 {
        effort / (1.0 + effort)
    }

    fn cap(&self) -> f64 {
        1.0
    }

    fn origin_slope(&self) -> f64 {
        1.0
    }

    fn inverse_marginal(&self, marginal: f64) -> f64 {
        if marginal >= 1.0 {
            0.0
        } else if marginal <= 0.0 {
            1.0
        } else {
            1.0 - marginal.sqrt()
        }
    }

    fn marginal(&self, effort: f64) -> f64 {
        (1.0 + effort).powi(-2)
    }

    fn effort_for(&self, level: f64) -> Option<f64> {
        (0.0..1.0).contains(&level).then(|| level / (1.0 - level))
    }

    fn curvature(&self, effort: f64) -> Option<f64> {
        Some(-2.0 * (1.0 + effort).powi(-3))
    }
}

/// Closed set of technologies selectable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    ExpCapped(ExpCapped),
    Rational(Rational),
}

impl Family {
    pub fn exp_capped(x_bar: f64) -> Result<Self> {
        ExpCapped::new(x_bar).map(Family::ExpCapped)
    }

    pub fn exp_no_cap() -> Self {
        Family::ExpCapped(ExpCapped::no_cap())
    }

    pub fn from_name(name: &str, x_bar: f64) -> Result<Self> {
        match name {
            "exp_cap" | "exp" => Self::exp_capped(x_bar),
            "rational" => {
                if x_bar != 1.0 {
                    return Err(Error::Config("the rational family has cap 1".into()));
                }
                Ok(Family::Rational(Rational))
            }
            other => Err(Error::Config(format!("unknown verification family `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::ExpCapped(_) => "exp_cap",
            Family::Rational(_) => "rational",
        }
    }

    fn inner(&self) -> &dyn Verification {
        match self {
            Family::ExpCapped(f) => f,
            Family::Rational(f) => f,
        }
    }
}

impl Verification for Family {
    fn eval(&self, effort: f64) -> f64 {
        self.inner().eval(effort)
    }
    fn cap(&self) -> f64 {
        self.inner().cap()
    }
    fn origin_slope(&self) -> f64 {
        self.inner().origin_slope()
    }
    fn inverse_marginal(&self, marginal: f64) -> f64 {
        self.inner().inverse_marginal(marginal)
    }
    fn marginal(&self, effort: f64) -> f64 {
        self.inner().marginal(effort)
    }
    fn effort_for(&self, level: f64) -> Option<f64> {
        self.inner().effort_for(level)
    }
    fn curvature(&self, effort: f64) -> Option<f64> {
        self.inner().curvature(effort)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonzeroAtOrigin(f64),
    NotIncreasing { effort: f64 },
    Decreasing { effort: f64 },
    NotConcave { effort: f64 },
    AboveCap { effort: f64, value: f64 },
    CapNotApproached { value: f64 },
    InverseMarginal(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const EFFORT_MIN: f64 = 1e-6;
const EFFORT_MAX: f64 = 1e6;
const SAMPLE_TOL: f64 = 1e-12;

/// Sampled check of the regularity conditions on a geometric effort grid.
pub fn validate_h1(tech: &dyn Verification, grid_size: usize) -> Result<ValidationReport> {
    if grid_size < 3 {
        return Err(Error::InvalidParameter {
            name: "grid_size",
            reason: "must be at least 3".into(),
        });
    }
    let cap = tech.cap();
    let ratio = (EFFORT_MAX / EFFORT_MIN).powf(1.0 / (grid_size - 1) as f64);
    let mut efforts = Vec::with_capacity(grid_size + 1);
    efforts.push(0.0);
    let mut a = EFFORT_MIN;
    for _ in 0..grid_size {
        efforts.push(a);
        a *= ratio;
    }
    let values = efforts
        .iter()
        .map(|&a| {
            let v = tech.eval(a);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite("verification function value"))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ValidationReport::default();
    if values[0].abs() > SAMPLE_TOL {
        report.violations.push(Violation::NonzeroAtOrigin(values[0]));
    }
    for (i, pair) in values.windows(2).enumerate() {
        let (a0, a1) = (efforts[i], efforts[i + 1]);
        if pair[0] > cap + SAMPLE_TOL {
            report.violations.push(Violation::AboveCap {
                effort: a0,
                value: pair[0],
            });
        }
        if pair[1] < pair[0] - SAMPLE_TOL {
            report.violations.push(Violation::Decreasing { effort: a1 });
        } else if pair[0] < cap - SAMPLE_TOL && pair[1] <= pair[0] {
            report.violations.push(Violation::NotIncreasing { effort: a1 });
        }
        if i + 2 < values.len() {
            let a2 = efforts[i + 2];
            let s0 = (pair[1] - pair[0]) / (a1 - a0);
            let s1 = (values[i + 2] - pair[1]) / (a2 - a1);
            if s1 > s0 * (1.0 + 1e-9) + SAMPLE_TOL {
                report.violations.push(Violation::NotConcave { effort: a1 });
            }
        }
    }
    let last = *values.last().expect("grid is non-empty");
    if last > cap + SAMPLE_TOL {
        report.violations.push(Violation::AboveCap {
            effort: EFFORT_MAX,
            value: last,
        });
    }
    if last < cap - 1e-3 {
        report.violations.push(Violation::CapNotApproached { value: last });
    }

    let d_bar = tech.origin_slope();
    if tech.inverse_marginal(d_bar) != 0.0 {
        report.violations.push(Violation::InverseMarginal(format!(
            "g(d_bar) = {} != 0",
            tech.inverse_marginal(d_bar)
        )));
    }
    let near_zero = tech.inverse_marginal(1e-12);
    if (near_zero - cap).abs() > 1e-5 {
        report.violations.push(Violation::InverseMarginal(format!(
            "g(0+) = {near_zero} != cap {cap}"
        )));
    }
    Ok(report)
}
