//! Cross-checks the equilibrium enumeration against a brute-force scan of
//! the strategy space: every certified equilibrium must re-certify, every
//! pure-strategy equilibrium must be enumerated, and no near-equilibrium on
//! a fine grid may beat the reported media-optimal utility.

use narrative_media::equilibrium::{find_equilibria, is_equilibrium};
use narrative_media::generator::{random_environment, rng_for_seed, EnvClass};
use narrative_media::model::{
    anticipatory_utility, factorize, fit_narrative, smooth, subjective_value, ConsumerStrategy,
    Environment, Narrative, SignalFunction,
};
use narrative_media::scenarios::{self, ScenarioSpec};

const CERT_TOL: f64 = 1e-8;
const SCAN_STEP: f64 = 1e-3;

/// Worst best-response violation of a binary strategy, with narrative
/// beliefs fitted to the strategy itself. `probs[s]` is Pr(a=1 | s).
fn violation(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    probs: (f64, f64),
) -> (f64, f64) {
    let strategy =
        ConsumerStrategy::from_rows(&[vec![1.0 - probs.0, probs.0], vec![1.0 - probs.1, probs.1]])
            .unwrap();
    // Fit beliefs to the lightly smoothed joint, matching the convention the
    // solver uses to avoid conditioning on null events.
    let smoothed = smooth(&strategy, 1e-9).unwrap();
    let joint = factorize(env, signal, &smoothed).unwrap();
    let mut worst = 0.0f64;
    for s in 0..2 {
        let vals: Vec<f64> = (0..2)
            .map(|a| subjective_value(env, signal, &fit_narrative(&joint, narrative).unwrap(), s, a).unwrap())
            .collect();
        let best = vals[0].max(vals[1]);
        for a in 0..2 {
            if strategy.prob(a, s) > 1e-9 {
                worst = worst.max(best - vals[a]);
            }
        }
    }
    let utility = anticipatory_utility(env, signal, narrative, &strategy).unwrap();
    (worst, utility)
}

fn check_case(env: &Environment, signal: &SignalFunction, narrative: Narrative) {
    let search = find_equilibria(env, signal, narrative).unwrap();

    // Every returned equilibrium re-certifies through the epsilon ladder.
    for eq in &search.equilibria {
        let report = is_equilibrium(env, signal, narrative, &eq.strategy, CERT_TOL).unwrap();
        assert!(report.passed, "returned equilibrium fails certification");
    }

    // Every pure strategy that certifies appears among the support profiles.
    for (p0, p1) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let strategy = ConsumerStrategy::from_rows(&[
            vec![1.0 - p0, p0],
            vec![1.0 - p1, p1],
        ])
        .unwrap();
        let report = is_equilibrium(env, signal, narrative, &strategy, CERT_TOL).unwrap();
        if report.passed {
            let profile: Vec<Vec<usize>> = [p0, p1]
                .iter()
                .map(|&p| vec![if p > 0.5 { 1 } else { 0 }])
                .collect();
            assert!(
                search.equilibria.iter().any(|eq| eq.support_profile == profile),
                "pure equilibrium {profile:?} missing for {narrative}"
            );
        }
    }

    // No near-equilibrium on a fine scan beats the reported optimum.
    let best = search
        .equilibria
        .first()
        .map(|eq| eq.utility)
        .unwrap_or(f64::NEG_INFINITY);
    let steps = (1.0 / SCAN_STEP).round() as usize;
    // Coarse pass finds candidate regions; a fine pass inspects them.
    let coarse = 50usize;
    for i in 0..=coarse {
        for j in 0..=coarse {
            let p0 = i as f64 / coarse as f64;
            let p1 = j as f64 / coarse as f64;
            let (v, _) = violation(env, signal, narrative, (p0, p1));
            if v > 1e-4 {
                continue;
            }
            // Fine scan of the surrounding cell at the target resolution.
            let cell = 1.0 / coarse as f64;
            let fine = (cell / SCAN_STEP).round() as usize;
            for fi in 0..=fine {
                for fj in 0..=fine {
                    let q0 = (p0 - cell / 2.0 + fi as f64 * SCAN_STEP).clamp(0.0, 1.0);
                    let q1 = (p1 - cell / 2.0 + fj as f64 * SCAN_STEP).clamp(0.0, 1.0);
                    let (v, u) = violation(env, signal, narrative, (q0, q1));
                    if v < 1e-9 {
                        assert!(
                            u <= best + 1e-3,
                            "near-equilibrium ({q0}, {q1}) with utility {u} beats \
                             reported optimum {best} for {narrative}"
                        );
                    }
                }
            }
        }
    }
    let _ = steps;
}

#[test]
fn investment_scenario_equilibria_agree_with_scan() {
    let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
    // Optimal empowering signal for c = 0.2: q1 = 1, q0 = sqrt(1/(2c)) - 1.
    let q0 = (1.0f64 / 0.4).sqrt() - 1.0;
    let signal = SignalFunction::binary(&[q0, 1.0]).unwrap();
    for narrative in Narrative::ALL {
        check_case(&env, &signal, narrative);
    }
}

#[test]
fn random_environments_agree_with_scan() {
    for seed in 0..6u64 {
        let mut rng = rng_for_seed(123_000 + seed);
        let env = random_environment(&mut rng, EnvClass::General).unwrap();
        let signal = SignalFunction::binary(&[0.3, 0.8]).unwrap();
        for narrative in Narrative::ALL {
            check_case(&env, &signal, narrative);
        }
    }
}

#[test]
fn obedient_play_is_enumerated_at_the_investment_optimum() {
    let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
    let q0 = (1.0f64 / 0.4).sqrt() - 1.0;
    let signal = SignalFunction::binary(&[q0, 1.0]).unwrap();
    let search = find_equilibria(&env, &signal, Narrative::Empowering).unwrap();
    assert!(search
        .equilibria
        .iter()
        .any(|eq| eq.support_profile == vec![vec![0], vec![1]]));
}
