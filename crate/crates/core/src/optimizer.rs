//! Media-strategy optimization for a homogeneous consumer population: the
//! rational-expectations benchmark and grid-plus-refinement search over
//! signal functions for each narrative.

use crate::equilibrium::{
    best_equilibrium_value, find_equilibria, obedient_equilibrium_value, EquilibriumResult,
    EquilibriumSearch,
};
use crate::error::{ModelError, Result};
use crate::model::{
    ConsumerStrategy, Environment, Narrative, SignalFunction, OPT_TOL,
};

/// A pair the media commits to ex ante.
#[derive(Debug, Clone)]
pub struct MediaStrategy {
    pub signal: SignalFunction,
    pub narrative: Narrative,
}

/// The rational-expectations benchmark: true narrative, full information,
/// and the per-state materially optimal action.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub media: MediaStrategy,
    pub strategy: ConsumerStrategy,
    pub value: f64,
}

/// Per-state materially optimal actions, ties to the lowest index.
pub fn benchmark_actions(env: &Environment) -> Vec<usize> {
    (0..env.n_states())
        .map(|t| {
            let mut best = (0usize, env.material_value(t, 0));
            for a in 1..env.n_actions() {
                let v = env.material_value(t, a);
                if v > best.1 {
                    best = (a, v);
                }
            }
            best.0
        })
        .collect()
}

pub fn rational_benchmark(env: &Environment) -> Result<Benchmark> {
    let signal = SignalFunction::full_information(env.n_states(), env.n_signals())?;
    let actions = benchmark_actions(env);
    let mut choice = vec![0usize; env.n_signals()];
    for (t, &a) in actions.iter().enumerate() {
        choice[t] = a;
    }
    let strategy = ConsumerStrategy::pure(&choice, env.n_actions())?;
    let value = (0..env.n_states())
        .map(|t| env.prior()[t] * env.material_value(t, actions[t]))
        .sum();
    Ok(Benchmark {
        media: MediaStrategy {
            signal,
            narrative: Narrative::True,
        },
        strategy,
        value,
    })
}

/// A regular environment has a unique materially optimal action in every
/// state, and distinct states have distinct optimal actions.
pub fn is_regular(env: &Environment) -> bool {
    let actions = benchmark_actions(env);
    for (t, &a_star) in actions.iter().enumerate() {
        let best = env.material_value(t, a_star);
        for a in 0..env.n_actions() {
            if a != a_star && env.material_value(t, a) > best - OPT_TOL {
                return false;
            }
        }
    }
    let mut seen = vec![false; env.n_actions()];
    for &a in &actions {
        if seen[a] {
            return false;
        }
        seen[a] = true;
    }
    true
}

/// Ex-ante utility under the true narrative, which does not depend on the
/// consumer's strategy: the signal-weighted max of material values.
pub fn true_narrative_value(env: &Environment, signal: &SignalFunction) -> f64 {
    let mut total = 0.0;
    for s in 0..signal.n_signals() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..env.n_actions() {
            let mut v = 0.0;
            for t in 0..env.n_states() {
                v += env.prior()[t] * signal.prob(s, t) * env.material_value(t, a);
            }
            best = best.max(v);
        }
        if best > f64::NEG_INFINITY {
            total += best;
        }
    }
    total
}

/// Search domain for the signal function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchDomain {
    /// Any row-stochastic signal kernel; all equilibria considered.
    Unrestricted,
    /// Signals are action recommendations and the obedient strategy must be
    /// an equilibrium.
    DirectRecommendation,
}

/// Build the search domain where signals are direct action recommendations.
pub fn restrict_to_direct(env: &Environment) -> Result<(Environment, SearchDomain)> {
    Ok((env.with_action_signals(), SearchDomain::DirectRecommendation))
}

/// Best signal function found for one narrative.
#[derive(Debug, Clone)]
pub struct NarrativeSearch {
    pub narrative: Narrative,
    pub signal: SignalFunction,
    pub utility: f64,
    pub equilibrium: EquilibriumResult,
}

/// Full optimization output across all four narratives.
#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub best: MediaStrategy,
    pub equilibrium: EquilibriumResult,
    pub utility: f64,
    pub benchmark: f64,
    pub per_narrative: Vec<(Narrative, SignalFunction, f64)>,
    pub grid_step: f64,
    pub refine_iters: usize,
}

pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const DEFAULT_REFINE_ITERS: usize = 40;

/// All compositions of `steps` grid units into `parts` cells, scaled to the
/// simplex. The first row puts all mass on the first cell, so enumeration
/// starts from the least informative kernels.
fn simplex_rows(parts: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(remaining: usize, parts_left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts_left == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(remaining - first, parts_left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(steps, parts, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|counts| counts.iter().map(|&c| c as f64 / steps as f64).collect())
        .collect()
}

fn objective(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    domain: SearchDomain,
) -> Result<Option<f64>> {
    match domain {
        SearchDomain::Unrestricted => {
            if narrative == Narrative::True {
                Ok(Some(true_narrative_value(env, signal)))
            } else {
                best_equilibrium_value(env, signal, narrative)
            }
        }
        SearchDomain::DirectRecommendation => obedient_equilibrium_value(env, signal, narrative),
    }
}

/// Grid search plus coordinate refinement for one narrative in a domain.
pub fn optimize_signal_for_narrative_in(
    env: &Environment,
    narrative: Narrative,
    grid_step: f64,
    refine_iters: usize,
    domain: SearchDomain,
) -> Result<NarrativeSearch> {
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(ModelError::InvalidParameter {
            name: "grid_step".into(),
            value: grid_step,
            expected: "within (0, 0.25]".into(),
        });
    }
    let nt = env.n_states();
    let ns = env.n_signals();
    let steps = (1.0 / grid_step).round().max(1.0) as usize;
    let rows = simplex_rows(ns, steps);
    // Candidate enumeration order doubles as the tie-break: the first
    // optimum encountered is kept, later candidates must strictly improve.
    // For binary problems, enumerate less informative kernels first (the
    // media has no reason to reveal more than needed), and within an
    // informativeness class prefer a higher probability of the high signal.
    let candidate_choices: Vec<Vec<usize>> = if nt == 2 && ns == 2 {
        let mut pairs: Vec<(usize, usize)> = (0..=steps)
            .flat_map(|k0| (0..=steps).map(move |k1| (k0, k1)))
            .collect();
        pairs.sort_by_key(|&(k0, k1)| {
            (
                (k1 as i64 - k0 as i64).abs(),
                std::cmp::Reverse(k1),
                std::cmp::Reverse(k0),
            )
        });
        // simplex_rows(2, steps) lists q = 0, 1/steps, ..., 1 in order.
        pairs.into_iter().map(|(k0, k1)| vec![k0, k1]).collect()
    } else {
        let mut all = Vec::new();
        let mut choice = vec![0usize; nt];
        loop {
            all.push(choice.clone());
            let mut pos = nt;
            let mut done = false;
            loop {
                if pos == 0 {
                    done = true;
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < rows.len() {
                    break;
                }
                choice[pos] = 0;
            }
            if done {
                break;
            }
        }
        all
    };
    let grid_refine = |obj: &dyn Fn(&SignalFunction) -> Result<Option<f64>>|
     -> Result<Option<(Vec<Vec<f64>>, f64)>> {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for choice in &candidate_choices {
            let kernel_rows: Vec<Vec<f64>> = choice.iter().map(|&i| rows[i].clone()).collect();
            let signal = SignalFunction::from_rows(&kernel_rows)?;
            if let Some(u) = obj(&signal)? {
                let improves = best.as_ref().map(|(_, b)| u > b + OPT_TOL).unwrap_or(true);
                if improves {
                    best = Some((choice.clone(), u));
                }
            }
        }
        let Some((best_choice, mut best_u)) = best else {
            return Ok(None);
        };
        let mut best_rows: Vec<Vec<f64>> = best_choice.iter().map(|&i| rows[i].clone()).collect();

        // Coordinate refinement, binary signal spaces only: polish each
        // state's q_t = Pr(s=1|t) by golden-section search in a window
        // around the grid optimum.
        if ns == 2 && refine_iters > 0 {
            let mut qs: Vec<f64> = best_rows.iter().map(|r| r[1]).collect();
            let eval = |qs: &[f64]| -> Result<Option<f64>> {
                let rows: Vec<Vec<f64>> = qs.iter().map(|&q| vec![1.0 - q, q]).collect();
                let signal = SignalFunction::from_rows(&rows)?;
                obj(&signal)
            };
            // Axis directions plus, for two states, the two diagonals: the
            // feasible set can be a narrow band transverse to the axes, and
            // axis-only moves would step out of it.
            let mut directions: Vec<Vec<f64>> = (0..nt)
                .map(|t| (0..nt).map(|i| if i == t { 1.0 } else { 0.0 }).collect())
                .collect();
            if nt == 2 {
                directions.push(vec![1.0, 1.0]);
                directions.push(vec![1.0, -1.0]);
            }
            let clamp_point = |qs: &[f64], dir: &[f64], alpha: f64| -> Vec<f64> {
                qs.iter()
                    .zip(dir)
                    .map(|(&q, &d)| (q + alpha * d).clamp(0.0, 1.0))
                    .collect()
            };
            for _ in 0..4 {
                for dir in &directions {
                    let phi = (5f64.sqrt() - 1.0) / 2.0;
                    let mut a = -grid_step;
                    let mut b = grid_step;
                    let score = |alpha: f64, qs: &[f64]| -> Result<f64> {
                        let point = clamp_point(qs, dir, alpha);
                        Ok(eval(&point)?.unwrap_or(f64::NEG_INFINITY))
                    };
                    let mut x1 = b - phi * (b - a);
                    let mut x2 = a + phi * (b - a);
                    let mut f1 = score(x1, &qs)?;
                    let mut f2 = score(x2, &qs)?;
                    let mut local_best = (0.0, eval(&qs)?.unwrap_or(f64::NEG_INFINITY));
                    for _ in 0..refine_iters {
                        if f1 > f2 {
                            if f1 > local_best.1 {
                                local_best = (x1, f1);
                            }
                            b = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = b - phi * (b - a);
                            f1 = score(x1, &qs)?;
                        } else {
                            if f2 > local_best.1 {
                                local_best = (x2, f2);
                            }
                            a = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = a + phi * (b - a);
                            f2 = score(x2, &qs)?;
                        }
                    }
                    if local_best.1 > best_u + OPT_TOL {
                        qs = clamp_point(&qs, dir, local_best.0);
                        best_u = local_best.1;
                    }
                }
            }
            best_rows = qs.iter().map(|&q| vec![1.0 - q, q]).collect();
        }
        Ok(Some((best_rows, best_u)))
    };

    let main = grid_refine(&|signal| objective(env, signal, narrative, domain))?;
    let (mut best_rows, mut best_u) = main.ok_or_else(|| {
        ModelError::NonConvergence(format!(
            "no equilibrium found for any candidate signal under the {narrative} narrative"
        ))
    })?;

    // The unrestricted landscape can have near-optimal ridges of mixed
    // equilibria that trap local refinement. Direct action recommendations
    // with obedient play attain the optimum without loss, and that landscape
    // is better behaved, so run the search there too and keep it when it
    // strictly improves.
    if domain == SearchDomain::Unrestricted && ns == env.n_actions() {
        if let Some((rows_o, u_o)) =
            grid_refine(&|signal| obedient_equilibrium_value(env, signal, narrative))?
        {
            if u_o > best_u + OPT_TOL {
                let sig_o = SignalFunction::from_rows(&rows_o)?;
                let u_full = objective(env, &sig_o, narrative, domain)?
                    .map_or(u_o, |u| u.max(u_o));
                best_rows = rows_o;
                best_u = u_full;
            }
        }
    }

    let mut signal = SignalFunction::from_rows(&best_rows)?;
    let mut search = find_equilibria(env, &signal, narrative)?;
    if search.best().is_none() {
        // The inner loops score candidates without ladder certification, so
        // the refined optimum can land on a signal whose equilibria all fail
        // to certify. Fall back to the best grid candidate that certifies.
        let mut fallback: Option<(SignalFunction, EquilibriumSearch, f64)> = None;
        for choice in &candidate_choices {
            let kernel_rows: Vec<Vec<f64>> = choice.iter().map(|&i| rows[i].clone()).collect();
            let cand_signal = SignalFunction::from_rows(&kernel_rows)?;
            let cand_search = find_equilibria(env, &cand_signal, narrative)?;
            if let Some(eq) = cand_search.best() {
                let improves = fallback
                    .as_ref()
                    .map(|(_, _, u)| eq.utility > u + OPT_TOL)
                    .unwrap_or(true);
                if improves {
                    let utility = eq.utility;
                    fallback = Some((cand_signal, cand_search, utility));
                }
            }
        }
        if let Some((fb_signal, fb_search, fb_u)) = fallback {
            signal = fb_signal;
            search = fb_search;
            best_u = fb_u;
        }
    }
    let equilibrium = match domain {
        SearchDomain::Unrestricted => search.best().cloned(),
        SearchDomain::DirectRecommendation => search
            .equilibria
            .iter()
            .find(|eq| {
                (0..env.n_actions())
                    .all(|s| eq.support_profile[s].is_empty() || eq.support_profile[s] == vec![s])
            })
            .cloned()
            .or_else(|| search.best().cloned()),
    };
    let equilibrium = equilibrium.ok_or_else(|| {
        ModelError::NonConvergence(format!(
            "final signal for {narrative} has no certified equilibrium"
        ))
    })?;
    Ok(NarrativeSearch {
        narrative,
        signal,
        utility: best_u,
        equilibrium,
    })
}

pub fn optimize_signal_for_narrative(
    env: &Environment,
    narrative: Narrative,
    grid_step: f64,
    refine_iters: usize,
) -> Result<NarrativeSearch> {
    optimize_signal_for_narrative_in(env, narrative, grid_step, refine_iters, SearchDomain::Unrestricted)
}

pub fn optimize_media_strategy(env: &Environment) -> Result<OptimizationReport> {
    optimize_media_strategy_with(env, DEFAULT_GRID_STEP, DEFAULT_REFINE_ITERS)
}

pub fn optimize_media_strategy_with(
    env: &Environment,
    grid_step: f64,
    refine_iters: usize,
) -> Result<OptimizationReport> {
    let benchmark = rational_benchmark(env)?;
    let mut per_narrative = Vec::new();
    let mut best: Option<NarrativeSearch> = None;
    for narrative in Narrative::ALL {
        let search = optimize_signal_for_narrative(env, narrative, grid_step, refine_iters)?;
        per_narrative.push((narrative, search.signal.clone(), search.utility));
        let improves = best
            .as_ref()
            .map(|b| search.utility > b.utility + OPT_TOL)
            .unwrap_or(true);
        if improves {
            best = Some(search);
        }
    }
    let best = best.expect("at least one narrative search succeeded");
    Ok(OptimizationReport {
        best: MediaStrategy {
            signal: best.signal,
            narrative: best.narrative,
        },
        equilibrium: best.equilibrium,
        utility: best.utility,
        benchmark: benchmark.value,
        per_narrative,
        grid_step,
        refine_iters,
    })
}

/// The state-conditional action distribution p(a|t) induced by a signal
/// function and a consumer strategy.
pub fn induced_state_action(
    env: &Environment,
    signal: &SignalFunction,
    strategy: &ConsumerStrategy,
) -> Vec<Vec<f64>> {
    (0..env.n_states())
        .map(|t| {
            (0..env.n_actions())
                .map(|a| {
                    (0..signal.n_signals())
                        .map(|s| signal.prob(s, t) * strategy.prob(a, s))
                        .sum()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, ScenarioSpec};

    #[test]
    fn benchmark_closed_forms() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        assert!((rational_benchmark(&env).unwrap().value - 0.15).abs() < 1e-12);
        let env = scenarios::build(&ScenarioSpec::WhacAMole { beta: 0.6 }).unwrap();
        assert!((rational_benchmark(&env).unwrap().value - 0.4).abs() < 1e-12);
        let env = scenarios::build(&ScenarioSpec::DegenerateInaction).unwrap();
        assert!(rational_benchmark(&env).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn regularity_classification() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        assert!(is_regular(&env));
        // Outcome ignores the action: a=0 is optimal in both states.
        let env = scenarios::build(&ScenarioSpec::DegenerateInaction).unwrap();
        assert!(!is_regular(&env));
    }

    #[test]
    fn effort_game_empowering_search_matches_closed_form() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.3 }).unwrap();
        let search =
            optimize_signal_for_narrative(&env, Narrative::Empowering, 0.02, 40).unwrap();
        let q0 = search.signal.prob(1, 0);
        let q1 = search.signal.prob(1, 1);
        assert!((q0 - 0.290_994_448_735_805_6).abs() < 1e-3, "q0 = {q0}");
        assert!((q1 - 1.0).abs() < 1e-3, "q1 = {q1}");
        let expect = 0.5 - 0.15f64.sqrt();
        assert!((search.utility - expect).abs() < 1e-4, "u = {}", search.utility);
    }

    #[test]
    fn effort_game_low_cost_branch() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.05 }).unwrap();
        let search =
            optimize_signal_for_narrative(&env, Narrative::Empowering, 0.02, 40).unwrap();
        assert!((search.signal.prob(1, 0) - 1.0).abs() < 1e-3);
        assert!((search.utility - 0.325).abs() < 1e-4);
    }

    #[test]
    fn matching_game_fatalistic_search_matches_closed_form() {
        let env = scenarios::build(&ScenarioSpec::WhacAMole { beta: 0.5 }).unwrap();
        let search =
            optimize_signal_for_narrative(&env, Narrative::Fatalistic, 0.02, 40).unwrap();
        assert!((search.signal.prob(1, 1) - 0.75).abs() < 1e-3);
        assert!((search.signal.prob(1, 0) - 0.25).abs() < 1e-3);
        assert!((search.utility - 0.5625).abs() < 1e-4);
    }

    #[test]
    fn full_report_picks_the_winning_narrative() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        let report = optimize_media_strategy(&env).unwrap();
        assert_eq!(report.best.narrative, Narrative::Empowering);
        let expect = 0.5 - 0.1f64.sqrt();
        assert!((report.utility - expect).abs() < 1e-4);
        assert!((report.benchmark - 0.15).abs() < 1e-12);
        assert!(report.utility >= report.benchmark - 1e-9);
    }

    #[test]
    fn high_cost_effort_game_yields_zero() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.6 }).unwrap();
        let report = optimize_media_strategy_with(&env, 0.1, 20).unwrap();
        assert!(report.utility.abs() < 1e-6, "utility {}", report.utility);
    }

    #[test]
    fn direct_recommendation_domain_matches_unrestricted_optimum() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        let (direct_env, domain) = restrict_to_direct(&env).unwrap();
        let restricted = optimize_signal_for_narrative_in(
            &direct_env,
            Narrative::Empowering,
            0.02,
            40,
            domain,
        )
        .unwrap();
        let unrestricted =
            optimize_signal_for_narrative(&env, Narrative::Empowering, 0.02, 40).unwrap();
        assert!((restricted.utility - unrestricted.utility).abs() < 1e-3);
    }
}

