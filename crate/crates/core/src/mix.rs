//! Media strategy for a population mixing a fraction λ of rational
//! consumers with 1−λ anticipatory-utility consumers, all sharing an
//! action cost c, within the restricted effort-game signal family
//! (Pr(s=1|t=1) = 1, Pr(s=1|t=0) = q).

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::{Narrative, OPT_TOL};

/// Solution of the mixed-population problem for one (λ, c).
#[derive(Debug, Clone, Serialize)]
pub struct MixSolution {
    pub lambda: f64,
    pub c: f64,
    pub q: f64,
    pub narrative: Narrative,
    /// Rational consumers' expected material utility.
    pub u_rational: f64,
    /// Non-rational consumers' anticipatory utility.
    pub u_narrative: f64,
    /// λ·U_r + (1−λ)·U_nr.
    pub aggregate: f64,
}

/// Aggregate utility of the action narrative when every consumer plays
/// a = s with the common signal parameter q:
/// λ/4 + (1−λ)·¼[2 − 1/(1+q)] − (1+q)c/2.
pub fn mixed_objective(q: f64, c: f64, lambda: f64) -> f64 {
    lambda / 4.0 + (1.0 - lambda) * 0.25 * (2.0 - 1.0 / (1.0 + q)) - (1.0 + q) * c / 2.0
}

/// d/dq of `mixed_objective`: (1−λ)/(4(1+q)²) − c/2.
pub fn mixed_objective_derivative(q: f64, c: f64, lambda: f64) -> f64 {
    (1.0 - lambda) / (4.0 * (1.0 + q) * (1.0 + q)) - c / 2.0
}

fn validate(c: f64, lambda: f64) -> Result<()> {
    if !(c > 0.0 && c < 0.5) {
        return Err(ModelError::InvalidParameter {
            name: "c".into(),
            value: c,
            expected: "within (0, 0.5)".into(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::InvalidParameter {
            name: "lambda".into(),
            value: lambda,
            expected: "within [0, 1]".into(),
        });
    }
    Ok(())
}

/// Population behavior: does each group play a = s (vs a ≡ 0)?
#[derive(Debug, Clone, Copy)]
struct Profile {
    rational_acts: bool,
    narrative_acts: bool,
}

/// Narrative-based success belief p_N(y=1 | t=1, a) given aggregate action
/// frequencies (σ1, σ0) conditional on the state; `q` resolves the
/// EMPOWERING zero-mass case by the self-generated belief.
fn believed_success(narrative: Narrative, q: f64, act: bool, s1: f64, s0: f64) -> f64 {
    match narrative {
        Narrative::True => {
            if act {
                0.5
            } else {
                0.0
            }
        }
        Narrative::Empowering => {
            if act {
                if s1 + s0 > 1e-300 {
                    (s1 / 2.0 + s0) / (s1 + s0)
                } else {
                    (0.5 + q) / (1.0 + q)
                }
            } else {
                0.0
            }
        }
        Narrative::Fatalistic => s1 / 2.0,
        Narrative::Denial => (s1 / 2.0 + s0) / 2.0,
    }
}

/// Candidate equilibrium outcome for a singleton strategy (q, N).
#[derive(Debug, Clone, Copy)]
struct Outcome {
    u_rational: f64,
    u_narrative: f64,
    aggregate: f64,
}

/// Checks one behavior profile for consistency under (q, N) and returns
/// the utilities when it is an equilibrium.
fn profile_outcome(q: f64, c: f64, lambda: f64, narrative: Narrative, p: Profile) -> Option<Outcome> {
    // Rational consumers see through the narrative: act after s = 1 iff
    // the posterior success value 1/(2(1+q)) covers the cost.
    let rational_optimal = 1.0 / (2.0 * (1.0 + q)) >= c - 1e-12;
    if p.rational_acts != rational_optimal {
        return None;
    }
    let acting = lambda * p.rational_acts as u8 as f64 + (1.0 - lambda) * p.narrative_acts as u8 as f64;
    let s1 = acting;
    let s0 = q * acting;
    let posterior = 1.0 / (1.0 + q); // p(t=1 | s=1)
    let act_value = posterior * believed_success(narrative, q, true, s1, s0) - c;
    let idle_value = posterior * believed_success(narrative, q, false, s1, s0);
    let consistent = if p.narrative_acts {
        act_value >= idle_value - 1e-12
    } else {
        act_value <= idle_value + 1e-12
    };
    if !consistent {
        return None;
    }
    let p_s1 = (1.0 + q) / 2.0;
    let u_narrative = p_s1 * act_value.max(idle_value).max(0.0);
    let u_rational = if p.rational_acts {
        0.25 - (1.0 + q) * c / 2.0
    } else {
        0.0
    };
    Some(Outcome {
        u_rational,
        u_narrative,
        aggregate: lambda * u_rational + (1.0 - lambda) * u_narrative,
    })
}

/// Media-optimal equilibrium outcome of the singleton strategy (q, N).
fn singleton_outcome(q: f64, c: f64, lambda: f64, narrative: Narrative) -> Option<Outcome> {
    let mut best: Option<Outcome> = None;
    for rational_acts in [true, false] {
        for narrative_acts in [true, false] {
            let p = Profile {
                rational_acts,
                narrative_acts,
            };
            if let Some(out) = profile_outcome(q, c, lambda, narrative, p) {
                let improves = best.map(|b| out.aggregate > b.aggregate + 1e-15).unwrap_or(true);
                if improves {
                    best = Some(out);
                }
            }
        }
    }
    best
}

const MIX_GRID_STEP: f64 = 0.01;

fn candidate_qs(c: f64, lambda: f64) -> Vec<f64> {
    let steps = (1.0 / MIX_GRID_STEP).round() as usize;
    let mut qs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    // Interior first-order-condition point of the action-narrative branch.
    let foc = (((1.0 - lambda) / (2.0 * c)).sqrt() - 1.0).clamp(0.0, 1.0);
    qs.push(foc);
    qs
}

/// Best singleton media strategy (q, N) for the mixed population.
pub fn optimize_mixed(c: f64, lambda: f64) -> Result<MixSolution> {
    validate(c, lambda)?;
    let mut best: Option<MixSolution> = None;
    for narrative in Narrative::ALL {
        for q in candidate_qs(c, lambda) {
            let Some(out) = singleton_outcome(q, c, lambda, narrative) else {
                continue;
            };
            let improves = best
                .as_ref()
                .map(|b| out.aggregate > b.aggregate + OPT_TOL)
                .unwrap_or(true);
            if improves {
                best = Some(MixSolution {
                    lambda,
                    c,
                    q,
                    narrative,
                    u_rational: out.u_rational,
                    u_narrative: out.u_narrative,
                    aggregate: out.aggregate,
                });
            }
        }
    }
    best.ok_or_else(|| ModelError::NonConvergence("no consistent singleton outcome".into()))
}

/// Best aggregate over two-item menus of the restricted family on the
/// same q grid, with each group self-selecting its item. Used to confirm
/// that singleton strategies are sufficient.
pub fn two_item_menu_best(c: f64, lambda: f64) -> Result<f64> {
    validate(c, lambda)?;
    let steps = (1.0 / MIX_GRID_STEP).round() as usize;
    let qs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut items: Vec<(f64, Narrative)> = Vec::new();
    for narrative in Narrative::ALL {
        for &q in &qs {
            items.push((q, narrative));
        }
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..items.len() {
        for j in i..items.len() {
            if let Some(value) = two_item_outcome(c, lambda, items[i], items[j]) {
                if value > best {
                    best = value;
                }
            }
        }
    }
    Ok(best)
}

/// Media-optimal consistent configuration of one two-item menu, if any.
fn two_item_outcome(
    c: f64,
    lambda: f64,
    a: (f64, Narrative),
    b: (f64, Narrative),
) -> Option<f64> {
    let items = [a, b];
    let mut best: Option<f64> = None;
    // Assignment of each group to an item, and each group's action.
    for r_item in 0..2 {
        for n_item in 0..2 {
            for r_acts in [true, false] {
                for n_acts in [true, false] {
                    let (rq, _) = items[r_item];
                    let (nq, nn) = items[n_item];
                    let s1 = lambda * r_acts as u8 as f64 + (1.0 - lambda) * n_acts as u8 as f64;
                    let s0 = lambda * r_acts as u8 as f64 * rq
                        + (1.0 - lambda) * n_acts as u8 as f64 * nq;
                    // Rational action optimality under the true kernel.
                    if r_acts != (1.0 / (2.0 * (1.0 + rq)) >= c - 1e-12) {
                        continue;
                    }
                    // Narrative-group action optimality under its item.
                    let post = 1.0 / (1.0 + nq);
                    let act_v = post * believed_success(nn, nq, true, s1, s0) - c;
                    let idle_v = post * believed_success(nn, nq, false, s1, s0);
                    let n_consistent = if n_acts {
                        act_v >= idle_v - 1e-12
                    } else {
                        act_v <= idle_v + 1e-12
                    };
                    if !n_consistent {
                        continue;
                    }
                    // Menu incentive compatibility for both groups.
                    let u_r = rational_item_value(items[r_item].0, c);
                    let u_r_alt = rational_item_value(items[1 - r_item].0, c);
                    if u_r_alt > u_r + 1e-12 {
                        continue;
                    }
                    let u_n = narrative_item_value(items[n_item], c, s1, s0);
                    let u_n_alt = narrative_item_value(items[1 - n_item], c, s1, s0);
                    if u_n_alt > u_n + 1e-12 {
                        continue;
                    }
                    let aggregate = lambda * u_r + (1.0 - lambda) * u_n;
                    if best.map(|v| aggregate > v).unwrap_or(true) {
                        best = Some(aggregate);
                    }
                }
            }
        }
    }
    best
}

/// Rational group's material value of an item (narrative-independent).
fn rational_item_value(q: f64, c: f64) -> f64 {
    (0.25 - (1.0 + q) * c / 2.0).max(0.0)
}

/// Narrative group's anticipatory value of an item under fixed aggregates.
fn narrative_item_value(item: (f64, Narrative), c: f64, s1: f64, s0: f64) -> f64 {
    let (q, narrative) = item;
    let post = 1.0 / (1.0 + q);
    let act_v = post * believed_success(narrative, q, true, s1, s0) - c;
    let idle_v = post * believed_success(narrative, q, false, s1, s0);
    (1.0 + q) / 2.0 * act_v.max(idle_v).max(0.0)
}

/// The λ above which a state-narrative strategy with full information
/// overtakes the best action-narrative strategy. This λ-path is a
/// numerical extension of the extreme-λ characterizations; reports label
/// it as such.
pub fn crossover_lambda(c: f64) -> Result<f64> {
    validate(c, 0.5)?;
    let gap = |lambda: f64| -> f64 {
        let empower = candidate_qs(c, lambda)
            .into_iter()
            .filter_map(|q| singleton_outcome(q, c, lambda, Narrative::Empowering))
            .map(|o| o.aggregate)
            .fold(f64::NEG_INFINITY, f64::max);
        let fatal = singleton_outcome(0.0, c, lambda, Narrative::Fatalistic)
            .map(|o| o.aggregate)
            .unwrap_or(f64::NEG_INFINITY);
        empower - fatal
    };
    if gap(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    if gap(hi) > 0.0 {
        return Ok(1.0);
    }
    for _ in 0..80 {
        let mid = (lo + hi) / 2.0;
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_value_example() {
        let v = mixed_objective(0.5, 0.2, 0.1);
        assert!((v - 0.175).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for q in [0.0, 0.3, 0.7, 1.0] {
            for c in [0.05, 0.2, 0.4] {
                for lambda in [0.0, 0.3, 0.9] {
                    let h = 1e-6;
                    let fd =
                        (mixed_objective(q + h, c, lambda) - mixed_objective(q - h, c, lambda))
                            / (2.0 * h);
                    let an = mixed_objective_derivative(q, c, lambda);
                    assert!((fd - an).abs() < 1e-6, "q={q} c={c} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn lambda_zero_reduces_to_homogeneous_payoff() {
        let c = 0.3;
        for i in 0..=20 {
            let q = i as f64 / 20.0;
            let homogeneous = 0.5 * (0.5 + 0.5 * q / (1.0 + q) - c * (1.0 + q));
            assert!((mixed_objective(q, c, 0.0) - homogeneous).abs() < 1e-12);
        }
    }

    #[test]
    fn small_lambda_prefers_action_narrative() {
        let sol = optimize_mixed(0.2, 0.1).unwrap();
        assert_eq!(sol.narrative, Narrative::Empowering);
        assert!((sol.q - 0.5).abs() < 1e-3);
        assert!((sol.aggregate - 0.175).abs() < 1e-6);
        assert!((sol.aggregate - (sol.lambda * sol.u_rational + (1.0 - sol.lambda) * sol.u_narrative))
            .abs()
            < 1e-12);
    }

    #[test]
    fn large_lambda_prefers_state_narrative() {
        let sol = optimize_mixed(0.2, 0.99).unwrap();
        assert_eq!(sol.narrative, Narrative::Fatalistic);
        assert!(sol.q.abs() < 1e-9);
        assert!((sol.u_narrative - 0.99 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn fully_rational_population_gets_the_benchmark() {
        let sol = optimize_mixed(0.2, 1.0).unwrap();
        assert!((sol.aggregate - (0.25 - 0.1)).abs() < 1e-9);
    }

    #[test]
    fn crossover_is_one_minus_two_c() {
        let c = 0.2;
        let lambda = crossover_lambda(c).unwrap();
        assert!((lambda - (1.0 - 2.0 * c)).abs() < 1e-3, "λ* = {lambda}");
    }

    #[test]
    fn foc_point_converges_to_homogeneous_solution() {
        let c: f64 = 0.3;
        let q_homogeneous = ((1.0 / (2.0 * c)).sqrt() - 1.0).min(1.0);
        for lambda in [0.1, 0.01, 0.001] {
            let sol = optimize_mixed(c, lambda).unwrap();
            let gap = (sol.q - q_homogeneous).abs();
            assert!(gap < 0.15 * lambda / 0.1 + 1e-6, "λ={lambda} gap={gap}");
        }
    }
}
