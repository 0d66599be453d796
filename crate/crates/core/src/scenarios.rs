//! Built-in environments and their closed-form optima, used by tests and
//! the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{Environment, Narrative, Separability};

/// Specification of a built-in scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScenarioSpec {
    /// Effort game: y = success, only possible under a = 1, more likely for
    /// the "disadvantaged" state t = 0; u = t*y - c*a.
    AmericanDream { c: f64 },
    /// Matching game: u = 1[a = y], outcome kernel beta*(1-a) + (1-beta)*t.
    WhacAMole { beta: f64 },
    /// Outcome depends on the state only: p(y=1|t,a) = 1 - t.
    DegenerateInaction,
}

fn binary_labels(prefix: &str) -> Vec<String> {
    vec![format!("{prefix}0"), format!("{prefix}1")]
}

/// Construct the binary environment for a scenario.
pub fn build(spec: &ScenarioSpec) -> Result<Environment> {
    match *spec {
        ScenarioSpec::AmericanDream { c } => {
            if !(c > 0.0 && c < 1.0) {
                return Err(ModelError::InvalidParameter {
                    name: "c".into(),
                    value: c,
                    expected: "within (0, 1)".into(),
                });
            }
            // p(y=1 | t, a) = a*(2 - t)/2; u(t,a,y) = t*y - c*a.
            let mut kernel = vec![0.0; 8];
            let mut utility = vec![0.0; 8];
            for t in 0..2usize {
                for a in 0..2usize {
                    let p1 = a as f64 * (2.0 - t as f64) / 2.0;
                    kernel[(t * 2 + a) * 2] = 1.0 - p1;
                    kernel[(t * 2 + a) * 2 + 1] = p1;
                    for y in 0..2usize {
                        utility[(t * 2 + a) * 2 + y] = (t * y) as f64 - c * a as f64;
                    }
                }
            }
            let v = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
            Environment::new(
                binary_labels("t"),
                binary_labels("s"),
                binary_labels("a"),
                binary_labels("y"),
                vec![0.5, 0.5],
                kernel,
                utility,
                Separability::ActionSeparable {
                    v,
                    cost: vec![0.0, c],
                },
            )
        }
        ScenarioSpec::WhacAMole { beta } => {
            if !(beta > 1.0 / 3.0 && beta < 1.0) {
                return Err(ModelError::InvalidParameter {
                    name: "beta".into(),
                    value: beta,
                    expected: "within (1/3, 1)".into(),
                });
            }
            // p(y=1 | t, a) = beta*(1-a) + (1-beta)*t; u = 1[a = y].
            let mut kernel = vec![0.0; 8];
            let mut utility = vec![0.0; 8];
            for t in 0..2usize {
                for a in 0..2usize {
                    let p1 = beta * (1.0 - a as f64) + (1.0 - beta) * t as f64;
                    kernel[(t * 2 + a) * 2] = 1.0 - p1;
                    kernel[(t * 2 + a) * 2 + 1] = p1;
                    for y in 0..2usize {
                        utility[(t * 2 + a) * 2 + y] = if a == y { 1.0 } else { 0.0 };
                    }
                }
            }
            Environment::new(
                binary_labels("t"),
                binary_labels("s"),
                binary_labels("a"),
                binary_labels("y"),
                vec![0.5, 0.5],
                kernel,
                utility,
                Separability::None,
            )
        }
        ScenarioSpec::DegenerateInaction => {
            // p(y=1 | t, a) = 1 - t with the effort-game payoff t*y - c*a;
            // the cost level does not affect the optimum (a = 0 is played),
            // so it is fixed at 0.2.
            let c = 0.2;
            let mut kernel = vec![0.0; 8];
            let mut utility = vec![0.0; 8];
            for t in 0..2usize {
                for a in 0..2usize {
                    let p1 = 1.0 - t as f64;
                    kernel[(t * 2 + a) * 2] = 1.0 - p1;
                    kernel[(t * 2 + a) * 2 + 1] = p1;
                    for y in 0..2usize {
                        utility[(t * 2 + a) * 2 + y] = (t * y) as f64 - c * a as f64;
                    }
                }
            }
            let v = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
            Environment::new(
                binary_labels("t"),
                binary_labels("s"),
                binary_labels("a"),
                binary_labels("y"),
                vec![0.5, 0.5],
                kernel,
                utility,
                Separability::ActionSeparable {
                    v,
                    cost: vec![0.0, c],
                },
            )
        }
    }
}

/// Closed-form description of the media optimum for a built-in scenario.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub narrative: Narrative,
    /// Pr(s=1 | t=0).
    pub q0: f64,
    /// Pr(s=1 | t=1).
    pub q1: f64,
    pub utility: f64,
    pub benchmark: f64,
}

/// Closed-form optimum, against which the numerical optimizer is compared.
pub fn closed_form_oracle(spec: &ScenarioSpec) -> Result<OracleRecord> {
    build(spec)?; // validates parameters
    Ok(match *spec {
        ScenarioSpec::AmericanDream { c } => {
            let benchmark = 0.25 - c / 2.0;
            if c >= 0.5 {
                OracleRecord {
                    narrative: Narrative::True,
                    q0: 0.0,
                    q1: 1.0,
                    utility: 0.0,
                    benchmark: benchmark.max(0.0),
                }
            } else {
                let q0 = ((1.0 / (2.0 * c)).sqrt() - 1.0).min(1.0);
                let utility = if c < 0.125 {
                    0.375 - c
                } else {
                    0.5 - (c / 2.0).sqrt()
                };
                OracleRecord {
                    narrative: Narrative::Empowering,
                    q0,
                    q1: 1.0,
                    utility,
                    benchmark,
                }
            }
        }
        ScenarioSpec::WhacAMole { beta } => OracleRecord {
            narrative: Narrative::Fatalistic,
            q0: 0.75 - 1.0 / (4.0 * beta),
            q1: 0.25 + 1.0 / (4.0 * beta),
            utility: (1.0 + beta).powi(2) / (8.0 * beta),
            benchmark: 1.0 - beta,
        },
        ScenarioSpec::DegenerateInaction => OracleRecord {
            narrative: Narrative::Denial,
            q0: 0.0,
            q1: 0.0,
            utility: 0.25,
            benchmark: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn american_dream_kernel_and_utility() {
        let env = build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        assert!((env.kernel(1, 1, 1) - 0.5).abs() < 1e-15);
        assert!((env.kernel(0, 1, 1) - 1.0).abs() < 1e-15);
        assert!(env.kernel(0, 0, 1).abs() < 1e-15);
        assert!(env.kernel(1, 0, 1).abs() < 1e-15);
        assert!((env.utility(1, 1, 1) - 0.8).abs() < 1e-15);
        assert!((env.utility(1, 0, 1) - 1.0).abs() < 1e-15);
        assert!((env.utility(0, 1, 0) - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn whac_a_mole_kernel() {
        let env = build(&ScenarioSpec::WhacAMole { beta: 0.5 }).unwrap();
        assert!((env.kernel(1, 1, 1) - 0.5).abs() < 1e-15);
        assert!((env.kernel(0, 0, 1) - 0.5).abs() < 1e-15);
        assert!((env.kernel(1, 0, 1) - 1.0).abs() < 1e-15);
        assert!(env.kernel(0, 1, 1).abs() < 1e-15);
        assert!((env.utility(0, 1, 1) - 1.0).abs() < 1e-15);
        assert!(env.utility(0, 1, 0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_kernel_ignores_action() {
        let env = build(&ScenarioSpec::DegenerateInaction).unwrap();
        for a in 0..2 {
            assert!((env.kernel(0, a, 1) - 1.0).abs() < 1e-15);
            assert!(env.kernel(1, a, 1).abs() < 1e-15);
        }
    }

    #[test]
    fn parameter_ranges_enforced() {
        assert!(build(&ScenarioSpec::AmericanDream { c: 0.0 }).is_err());
        assert!(build(&ScenarioSpec::AmericanDream { c: 1.0 }).is_err());
        assert!(build(&ScenarioSpec::WhacAMole { beta: 0.2 }).is_err());
        assert!(build(&ScenarioSpec::WhacAMole { beta: 1.0 }).is_err());
    }

    #[test]
    fn oracle_values() {
        let r = closed_form_oracle(&ScenarioSpec::AmericanDream { c: 0.3 }).unwrap();
        assert_eq!(r.narrative, Narrative::Empowering);
        assert!((r.q0 - 0.290_994_448_735_805_6).abs() < 1e-12);
        assert!((r.utility - (0.5 - 0.15f64.sqrt())).abs() < 1e-12);
        assert!((r.benchmark - 0.1).abs() < 1e-12);

        let r = closed_form_oracle(&ScenarioSpec::AmericanDream { c: 0.05 }).unwrap();
        assert!((r.q0 - 1.0).abs() < 1e-12);
        assert!((r.utility - 0.325).abs() < 1e-12);

        let r = closed_form_oracle(&ScenarioSpec::AmericanDream { c: 0.6 }).unwrap();
        assert!(r.utility.abs() < 1e-12);
        assert!(r.benchmark.abs() < 1e-12);

        let r = closed_form_oracle(&ScenarioSpec::WhacAMole { beta: 0.5 }).unwrap();
        assert_eq!(r.narrative, Narrative::Fatalistic);
        assert!((r.q1 - 0.75).abs() < 1e-12);
        assert!((r.q0 - 0.25).abs() < 1e-12);
        assert!((r.utility - 0.5625).abs() < 1e-12);
        assert!((r.benchmark - 0.5).abs() < 1e-12);

        let r = closed_form_oracle(&ScenarioSpec::DegenerateInaction).unwrap();
        assert!((r.utility - 0.25).abs() < 1e-12);
        assert!(r.benchmark.abs() < 1e-12);
    }

    #[test]
    fn oracle_beats_benchmark_on_parameter_grids() {
        for i in 1..10 {
            let c = i as f64 * 0.05;
            let r = closed_form_oracle(&ScenarioSpec::AmericanDream { c }).unwrap();
            assert!(r.utility > r.benchmark + 1e-9, "c = {c}");
        }
        for i in 1..13 {
            let beta = 1.0 / 3.0 + i as f64 * 0.05;
            let r = closed_form_oracle(&ScenarioSpec::WhacAMole { beta }).unwrap();
            assert!(r.utility > r.benchmark + 1e-9, "beta = {beta}");
        }
    }
}
