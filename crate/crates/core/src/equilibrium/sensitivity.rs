use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::verification::Verification;

use super::solver::{solve_equilibrium, EquilibriumSolution};
use super::Kind;

/// Finite-difference response of the equilibrium to homophily.
#[derive(Debug, Clone, PartialEq)]
pub struct HomophilySensitivity {
    pub kind: Kind,
    pub dttr_dbeta: f64,
    pub dl_dbeta: f64,
    /// `L >= c/(1 - y) + beta |dL/dbeta|`, the sufficient condition for
    /// homophily to raise the ratio.
    pub condition: bool,
    /// On the opposing-only branch: whether `h` is unchanged across the
    /// stencil within `1e-8`. `None` on other branches.
    pub h_invariant: Option<bool>,
}

fn ratio(sol: &EquilibriumSolution) -> Result<f64> {
    if sol.ttr.is_infinite() {
        return Err(Error::Degenerate("rumor extinct, ratio infinite".into()));
    }
    Ok(sol.ttr.value())
}

/// Central differences of the ratio and of `L` in `beta`, step `db`.
pub fn homophily_sensitivity(
    params: &ModelParams,
    tech: &dyn Verification,
    db: f64,
) -> Result<HomophilySensitivity> {
    if !(db > 0.0) || params.beta - db <= 0.0 || params.beta + db >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "db",
            reason: format!("stencil beta +/- {db} must stay inside (0, 1)"),
        });
    }
    let at = |beta: f64| solve_equilibrium(&ModelParams { beta, ..*params }, tech);
    let centre = at(params.beta)?;
    let lo = at(params.beta - db)?;
    let hi = at(params.beta + db)?;
    if lo.kind != centre.kind || hi.kind != centre.kind {
        return Err(Error::RegimeBoundary(format!(
            "kind changes across beta = {} +/- {db}: {} / {} / {}",
            params.beta, lo.kind, centre.kind, hi.kind
        )));
    }
    let dttr_dbeta = (ratio(&hi)? - ratio(&lo)?) / (2.0 * db);
    let dl_dbeta = (hi.big_l - lo.big_l) / (2.0 * db);
    let condition = centre.big_l >= params.c / (1.0 - params.y) + params.beta * dl_dbeta.abs();
    let h_invariant = (centre.kind == Kind::OpposingOnly).then(|| (hi.h() - lo.h()).abs() <= 1e-8);
    Ok(HomophilySensitivity {
        kind: centre.kind,
        dttr_dbeta,
        dl_dbeta,
        condition,
        h_invariant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::Family;

    #[test]
    fn opposing_branch_slope() {
        let p = ModelParams {
            y: 0.94,
            c: 0.04,
            beta: 0.7,
            ..Default::default()
        };
        let s = homophily_sensitivity(&p, &Family::exp_no_cap(), 1e-4).unwrap();
        assert_eq!(s.kind, Kind::OpposingOnly);
        let h = 0.892_857_142_857_143;
        assert!((s.dttr_dbeta + 2.0 * h / (1.0 - h)).abs() < 1e-6, "{s:?}");
        assert_eq!(s.h_invariant, Some(true));
    }

    #[test]
    fn interior_branch_flat() {
        let p = ModelParams {
            y: 0.88,
            c: 0.1,
            beta: 0.95,
            ..Default::default()
        };
        let s = homophily_sensitivity(&p, &Family::exp_no_cap(), 1e-3).unwrap();
        assert_eq!(s.kind, Kind::Both);
        assert!(s.dttr_dbeta.abs() < 1e-6);
        assert_eq!(s.h_invariant, None);
    }

    #[test]
    fn regime_change_is_reported() {
        // y = 0.9 sits between the two homophily levels of the stencil.
        let p = ModelParams {
            y: 0.9,
            c: 0.05,
            beta: 0.9,
            ..Default::default()
        };
        let err = homophily_sensitivity(&p, &Family::exp_no_cap(), 0.01).unwrap_err();
        assert!(matches!(err, Error::RegimeBoundary(_)));
    }
}
