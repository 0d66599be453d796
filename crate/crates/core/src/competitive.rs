//! Competitive equilibrium for the heterogeneous effort-game family: free
//! supply of media strategies, each consumer type picking its favorite
//! while taking aggregate behavior as given.

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::Narrative;
use crate::typedist::TypeGrid;

/// The essentially unique competitive profile: types below the cutoff use
/// full information with the true narrative and play a = t; types above
/// adopt the state narrative and never act.
#[derive(Debug, Clone, Serialize)]
pub struct CompetitiveProfile {
    pub cutoff: f64,
    /// Residual of the cutoff equation 2c̄ + F(c̄) − 1.
    pub cutoff_residual: f64,
    /// Aggregate action share p(a=1 | t=1) = F(c̄).
    pub sigma: f64,
    pub low_type_narrative: Narrative,
    pub high_type_narrative: Narrative,
    /// (c, equilibrium utility) on the reporting grid.
    pub utilities: Vec<(f64, f64)>,
    /// ∫ U_c dF(c).
    pub aggregate_utility: f64,
}

/// Equilibrium utility of type c in the profile with cutoff c̄, σ = F(c̄).
fn equilibrium_utility(c: f64, cutoff: f64, sigma: f64) -> f64 {
    if c <= cutoff {
        0.25 - c / 2.0
    } else {
        sigma / 4.0
    }
}

/// Solves 2c + F(c) = 1 by bisection (the left side is strictly
/// increasing) and assembles the profile.
pub fn competitive_equilibrium(grid: &TypeGrid) -> Result<CompetitiveProfile> {
    let cdf = grid.cdf();
    let g = |c: f64| 2.0 * c + cdf.eval(c) - 1.0;
    if g(0.0) >= 0.0 || g(1.0) <= 0.0 {
        return Err(ModelError::InvalidProbability(
            "cutoff equation 2c + F(c) = 1 has no interior root".into(),
        ));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cutoff = (lo + hi) / 2.0;
    let residual = g(cutoff);
    if residual.abs() >= 1e-10 {
        return Err(ModelError::NonConvergence(format!(
            "cutoff equation residual {residual} at c = {cutoff}"
        )));
    }
    let sigma = cdf.eval(cutoff);
    let utilities: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .map(|&c| (c, equilibrium_utility(c, cutoff, sigma)))
        .collect();
    let aggregate_utility = grid.integrate(|c| equilibrium_utility(c, cutoff, sigma));
    Ok(CompetitiveProfile {
        cutoff,
        cutoff_residual: residual,
        sigma,
        low_type_narrative: Narrative::True,
        high_type_narrative: Narrative::Fatalistic,
        utilities,
        aggregate_utility,
    })
}

/// A profitable deviation found while verifying the profile.
#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub cost: f64,
    pub q0: f64,
    pub q1: f64,
    pub narrative: Narrative,
    /// Action after each signal realization (a(s=0), a(s=1)).
    pub actions: (bool, bool),
    pub gain: f64,
}

/// Narrative-based success belief p_N(y=1 | t=1, a) when aggregate
/// behavior is "types below the cutoff play a = t": p(a=1|t=1) = σ,
/// p(a=1|t=0) = 0.
fn believed_success(narrative: Narrative, sigma: f64, act: bool) -> f64 {
    match narrative {
        Narrative::True | Narrative::Empowering => {
            // Only informed t = 1 types act, so p(y=1 | a=1) = 1/2 exactly.
            if act {
                0.5
            } else {
                0.0
            }
        }
        Narrative::Fatalistic => sigma / 2.0,
        Narrative::Denial => sigma / 4.0,
    }
}

/// Ex-ante utility of type c from signal (q0, q1), narrative N and action
/// rule (a(0), a(1)), holding the aggregate fixed. Utility is t·y − c·a
/// with prior 1/2.
pub fn deviation_utility(
    c: f64,
    q0: f64,
    q1: f64,
    narrative: Narrative,
    actions: (bool, bool),
    sigma: f64,
) -> f64 {
    let mut total = 0.0;
    for (s, act) in [(0, actions.0), (1, actions.1)] {
        // p(s, t=1) and p(s) under the prior 1/2.
        let p_s_t1 = 0.5 * if s == 1 { q1 } else { 1.0 - q1 };
        let p_s_t0 = 0.5 * if s == 1 { q0 } else { 1.0 - q0 };
        let p_s = p_s_t1 + p_s_t0;
        if p_s <= 0.0 {
            continue;
        }
        let p = believed_success(narrative, sigma, act);
        total += p_s_t1 * p - p_s * c * if act { 1.0 } else { 0.0 };
    }
    total
}

/// Checks every sampled type against every deviation on the grid, plus the
/// dominance facts from the equilibrium construction. Empty output means
/// the profile survives.
pub fn verify_competitive(
    profile: &CompetitiveProfile,
    grid: &TypeGrid,
    deviation_step: f64,
) -> Result<Vec<Deviation>> {
    if !(deviation_step > 0.0 && deviation_step <= 0.5) {
        return Err(ModelError::InvalidParameter {
            name: "deviation_step".into(),
            value: deviation_step,
            expected: "within (0, 0.5]".into(),
        });
    }
    // The aggregate must be exactly the one the profile's cutoff implies.
    if (grid.cdf().eval(profile.cutoff) - profile.sigma).abs() > 0.0 {
        return Err(ModelError::InvalidProbability(format!(
            "profile sigma {} does not match F(cutoff) = {}",
            profile.sigma,
            grid.cdf().eval(profile.cutoff)
        )));
    }
    let sigma = profile.sigma;
    let steps = (1.0 / deviation_step).round() as usize;
    let qs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut violations = Vec::new();
    // Sample types at the deviation resolution.
    for i in 0..=steps {
        let c = i as f64 / steps as f64;
        let own = equilibrium_utility(c, profile.cutoff, sigma);
        for &q0 in &qs {
            for &q1 in &qs {
                for narrative in Narrative::ALL {
                    for actions in [(false, false), (false, true), (true, false), (true, true)] {
                        let u = deviation_utility(c, q0, q1, narrative, actions, sigma);
                        if u > own + 1e-9 {
                            violations.push(Deviation {
                                cost: c,
                                q0,
                                q1,
                                narrative,
                                actions,
                                gain: u - own,
                            });
                        }
                    }
                }
            }
        }
        // Dominance facts: full information is the best signal under the
        // true narrative, and the state narrative beats denial for idlers.
        let full_info = [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .map(|rule| deviation_utility(c, 0.0, 1.0, Narrative::True, rule, sigma))
            .fold(f64::NEG_INFINITY, f64::max);
        for &q0 in &qs {
            for &q1 in &qs {
                for actions in [(false, false), (false, true), (true, false), (true, true)] {
                    let u = deviation_utility(c, q0, q1, Narrative::True, actions, sigma);
                    if u > full_info + 1e-9 {
                        violations.push(Deviation {
                            cost: c,
                            q0,
                            q1,
                            narrative: Narrative::True,
                            actions,
                            gain: u - full_info,
                        });
                    }
                }
            }
        }
        let fatal = deviation_utility(c, 0.0, 1.0, Narrative::Fatalistic, (false, false), sigma);
        let denial = deviation_utility(c, 0.0, 1.0, Narrative::Denial, (false, false), sigma);
        if denial > fatal + 1e-9 {
            violations.push(Deviation {
                cost: c,
                q0: 0.0,
                q1: 1.0,
                narrative: Narrative::Denial,
                actions: (false, false),
                gain: denial - fatal,
            });
        }
    }
    Ok(violations)
}

/// Same checks with the cutoff overridden, used to show that perturbed
/// profiles fail.
pub fn verify_with_cutoff(
    grid: &TypeGrid,
    cutoff: f64,
    deviation_step: f64,
) -> Result<Vec<Deviation>> {
    let sigma = grid.cdf().eval(cutoff);
    let profile = CompetitiveProfile {
        cutoff,
        cutoff_residual: 2.0 * cutoff + sigma - 1.0,
        sigma,
        low_type_narrative: Narrative::True,
        high_type_narrative: Narrative::Fatalistic,
        utilities: Vec::new(),
        aggregate_utility: 0.0,
    };
    verify_competitive(&profile, grid, deviation_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typedist::Cdf;

    #[test]
    fn uniform_cutoff_is_one_third() {
        let grid = TypeGrid::uniform_default();
        let profile = competitive_equilibrium(&grid).unwrap();
        assert!((profile.cutoff - 1.0 / 3.0).abs() < 1e-10);
        assert!(profile.cutoff_residual.abs() < 1e-10);
        assert!((profile.sigma - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn square_cdf_cutoff() {
        let grid = TypeGrid::new(Cdf::power(2.0).unwrap(), 2001).unwrap();
        let profile = competitive_equilibrium(&grid).unwrap();
        assert!((profile.cutoff - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn uniform_profile_survives_deviations() {
        let grid = TypeGrid::uniform_default();
        let profile = competitive_equilibrium(&grid).unwrap();
        let violations = verify_competitive(&profile, &grid, 0.05).unwrap();
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn perturbed_cutoff_fails() {
        let grid = TypeGrid::uniform_default();
        let violations = verify_with_cutoff(&grid, 0.5, 0.05).unwrap();
        // Types between 1/3 and 1/2 would rather idle under the state
        // narrative than pay their cost.
        assert!(!violations.is_empty());
        assert!(violations.iter().any(|v| v.cost > 1.0 / 3.0 && v.cost < 0.5));
    }

    #[test]
    fn denial_is_half_of_fatalistic_for_idlers() {
        let grid = TypeGrid::uniform_default();
        let profile = competitive_equilibrium(&grid).unwrap();
        for c in [0.4, 0.6, 0.9] {
            let f = deviation_utility(c, 0.0, 1.0, Narrative::Fatalistic, (false, false), profile.sigma);
            let d = deviation_utility(c, 0.0, 1.0, Narrative::Denial, (false, false), profile.sigma);
            assert!((d - f / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn low_type_utilities_match_closed_form() {
        let grid = TypeGrid::uniform_default();
        let profile = competitive_equilibrium(&grid).unwrap();
        for &(c, u) in &profile.utilities {
            let want = if c <= profile.cutoff {
                0.25 - c / 2.0
            } else {
                profile.sigma / 4.0
            };
            assert!((u - want).abs() < 1e-12);
        }
        // Uniform aggregate: ∫₀^{1/3}(1/4 − c/2)dc + (2/3)(1/12) = 1/9.
        assert!((profile.aggregate_utility - 1.0 / 9.0).abs() < 1e-6);
    }
}
