//! JSON schema for environments: labeled spaces, prior, outcome kernel and
//! utility as nested arrays indexed [t][a][y], plus an optional
//! separability block. Parsing and emitting round-trip losslessly.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{Environment, Separability};

/// Serialized form of an `Environment`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub states: Vec<String>,
    pub signals: Vec<String>,
    pub actions: Vec<String>,
    pub outcomes: Vec<String>,
    pub prior: Vec<f64>,
    /// p(y | t, a), indexed [t][a][y].
    pub outcome_kernel: Vec<Vec<Vec<f64>>>,
    /// u(t, a, y), indexed [t][a][y].
    pub utility: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separability: Option<Separability>,
}

fn flatten(nested: &[Vec<Vec<f64>>], nt: usize, na: usize, ny: usize, name: &str) -> Result<Vec<f64>> {
    if nested.len() != nt {
        return Err(ModelError::DimensionMismatch(format!(
            "{name} has {} state slices, expected {nt}",
            nested.len()
        )));
    }
    let mut flat = Vec::with_capacity(nt * na * ny);
    for (t, slice) in nested.iter().enumerate() {
        if slice.len() != na {
            return Err(ModelError::DimensionMismatch(format!(
                "{name}[{t}] has {} action rows, expected {na}",
                slice.len()
            )));
        }
        for (a, row) in slice.iter().enumerate() {
            if row.len() != ny {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name}[{t}][{a}] has {} outcome entries, expected {ny}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok(flat)
}

fn nest(flat: &[f64], nt: usize, na: usize, ny: usize) -> Vec<Vec<Vec<f64>>> {
    (0..nt)
        .map(|t| {
            (0..na)
                .map(|a| flat[(t * na + a) * ny..(t * na + a + 1) * ny].to_vec())
                .collect()
        })
        .collect()
}

impl EnvironmentSpec {
    pub fn from_environment(env: &Environment) -> Self {
        let (nt, na, ny) = (env.n_states(), env.n_actions(), env.n_outcomes());
        let kernel_flat: Vec<f64> = (0..nt)
            .flat_map(|t| {
                (0..na).flat_map(move |a| (0..ny).map(move |y| (t, a, y)))
            })
            .map(|(t, a, y)| env.kernel(t, a, y))
            .collect();
        let utility_flat: Vec<f64> = (0..nt)
            .flat_map(|t| {
                (0..na).flat_map(move |a| (0..ny).map(move |y| (t, a, y)))
            })
            .map(|(t, a, y)| env.utility(t, a, y))
            .collect();
        EnvironmentSpec {
            states: env.states().to_vec(),
            signals: env.signals().to_vec(),
            actions: env.actions().to_vec(),
            outcomes: env.outcomes().to_vec(),
            prior: env.prior().to_vec(),
            outcome_kernel: nest(&kernel_flat, nt, na, ny),
            utility: nest(&utility_flat, nt, na, ny),
            separability: match env.separability() {
                Separability::None => None,
                other => Some(other.clone()),
            },
        }
    }

    pub fn into_environment(self) -> Result<Environment> {
        let (nt, na, ny) = (self.states.len(), self.actions.len(), self.outcomes.len());
        let kernel = flatten(&self.outcome_kernel, nt, na, ny, "outcome_kernel")?;
        let utility = flatten(&self.utility, nt, na, ny, "utility")?;
        Environment::new(
            self.states,
            self.signals,
            self.actions,
            self.outcomes,
            self.prior,
            kernel,
            utility,
            self.separability.unwrap_or(Separability::None),
        )
    }
}

/// Parse an environment from its JSON document.
pub fn environment_from_json(text: &str) -> Result<Environment> {
    let spec: EnvironmentSpec = serde_json::from_str(text)
        .map_err(|e| ModelError::InvalidProbability(format!("environment JSON: {e}")))?;
    spec.into_environment()
}

/// Emit the JSON document for an environment.
pub fn environment_to_json(env: &Environment) -> String {
    serde_json::to_string_pretty(&EnvironmentSpec::from_environment(env))
        .expect("environment spec serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, ScenarioSpec};

    #[test]
    fn round_trip_is_lossless() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        let text = environment_to_json(&env);
        let back = environment_from_json(&text).unwrap();
        assert_eq!(env, back);
        // Emitting again produces identical bytes.
        assert_eq!(text, environment_to_json(&back));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(environment_from_json("{}").is_err());
        let env = scenarios::build(&ScenarioSpec::WhacAMole { beta: 0.5 }).unwrap();
        let mut spec = EnvironmentSpec::from_environment(&env);
        spec.prior = vec![0.5];
        assert!(spec.into_environment().is_err());
    }

    #[test]
    fn separability_block_survives() {
        let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
        let text = environment_to_json(&env);
        assert!(text.contains("action_separable"));
        let back = environment_from_json(&text).unwrap();
        assert_eq!(back.separability(), env.separability());
    }
}
