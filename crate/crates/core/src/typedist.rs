//! Distributions over the consumer cost type c in [0, 1]: an evaluable cdf
//! plus a quadrature grid for aggregate-utility integrals.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::PROB_TOL;

/// A continuous, strictly increasing cdf on [0, 1] with F(0) = 0, F(1) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cdf {
    /// F(c) = c.
    Uniform,
    /// F(c) = c^k for k > 0.
    Power { k: f64 },
    /// Piecewise-linear interpolation of sampled (c, F(c)) points.
    Table { points: Vec<(f64, f64)> },
}

impl Cdf {
    /// Power-law cdf F(c) = c^k.
    pub fn power(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "k".into(),
                value: k,
                expected: "a positive finite exponent".into(),
            });
        }
        Ok(Cdf::Power { k })
    }

    /// Sampled cdf from ascending (c, F) pairs covering [0, 1].
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(ModelError::InvalidProbability(
                "cdf table needs at least two points".into(),
            ));
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if (first.0 - 0.0).abs() > PROB_TOL
            || (first.1 - 0.0).abs() > PROB_TOL
            || (last.0 - 1.0).abs() > PROB_TOL
            || (last.1 - 1.0).abs() > PROB_TOL
        {
            return Err(ModelError::InvalidProbability(
                "cdf table must run from (0, 0) to (1, 1)".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(ModelError::InvalidProbability(
                    "cdf table must be strictly increasing in both columns".into(),
                ));
            }
        }
        Ok(Cdf::Table { points })
    }

    /// Parse a CLI spec: "uniform", "power:k", or a CSV path with c,F rows.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if spec == "uniform" {
            return Ok(Cdf::Uniform);
        }
        if let Some(kstr) = spec.strip_prefix("power:") {
            let k: f64 = kstr.parse().map_err(|_| ModelError::InvalidParameter {
                name: "F".into(),
                value: f64::NAN,
                expected: format!("power:<k> with numeric k, got {spec:?}"),
            })?;
            return Cdf::power(k);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| {
            ModelError::InvalidProbability(format!("cannot read cdf table {spec:?}: {e}"))
        })?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("c,") {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| {
                        ModelError::InvalidProbability(format!(
                            "cdf table {spec:?} line {}: expected `c,F`",
                            lineno + 1
                        ))
                    })
            };
            let c = parse(cols.next())?;
            let f = parse(cols.next())?;
            points.push((c, f));
        }
        Cdf::from_table(points)
    }

    /// F(c), clamped to [0, 1] outside the support.
    pub fn eval(&self, c: f64) -> f64 {
        let c = c.clamp(0.0, 1.0);
        match self {
            Cdf::Uniform => c,
            Cdf::Power { k } => c.powf(*k),
            Cdf::Table { points } => {
                match points.binary_search_by(|p| p.0.partial_cmp(&c).unwrap()) {
                    Ok(i) => points[i].1,
                    Err(0) => 0.0,
                    Err(i) if i == points.len() => 1.0,
                    Err(i) => {
                        let (c0, f0) = points[i - 1];
                        let (c1, f1) = points[i];
                        f0 + (f1 - f0) * (c - c0) / (c1 - c0)
                    }
                }
            }
        }
    }

    /// Human-readable form for reports.
    pub fn describe(&self) -> String {
        match self {
            Cdf::Uniform => "uniform".into(),
            Cdf::Power { k } => format!("power:{k}"),
            Cdf::Table { points } => format!("table[{} points]", points.len()),
        }
    }
}

/// Default number of quadrature nodes for aggregate-utility integrals.
pub const DEFAULT_TYPE_NODES: usize = 2001;

/// Discretized type distribution: uniformly spaced nodes on [0, 1] with
/// trapezoid masses dF, plus the continuous cdf for cutoff equations.
#[derive(Debug, Clone)]
pub struct TypeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cdf: Cdf,
}

impl TypeGrid {
    pub fn new(cdf: Cdf, n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(ModelError::InvalidParameter {
                name: "n_nodes".into(),
                value: n_nodes as f64,
                expected: "at least 2 grid nodes".into(),
            });
        }
        let n = n_nodes;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        // Trapezoid masses for integrals against dF: each node carries half
        // of the F-increment of the cells adjacent to it.
        let fs: Vec<f64> = nodes.iter().map(|&c| cdf.eval(c)).collect();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let half = (fs[i + 1] - fs[i]) / 2.0;
            weights[i] += half;
            weights[i + 1] += half;
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidProbability(format!(
                "type-grid masses sum to {total}, expected 1"
            )));
        }
        // Remove the residual rounding error so the masses sum exactly.
        let mid = n / 2;
        weights[mid] += 1.0 - total;
        Ok(TypeGrid {
            nodes,
            weights,
            cdf,
        })
    }

    pub fn uniform_default() -> Self {
        TypeGrid::new(Cdf::Uniform, DEFAULT_TYPE_NODES).expect("valid default grid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cdf(&self) -> &Cdf {
        &self.cdf
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// ∫ g(c) dF(c) by the trapezoid masses.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w * g(c))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_cdf_is_identity() {
        let f = Cdf::Uniform;
        for c in [0.0, 0.25, 0.5, 1.0] {
            assert!((f.eval(c) - c).abs() < 1e-15);
        }
    }

    #[test]
    fn power_cdf_squares() {
        let f = Cdf::power(2.0).unwrap();
        assert!((f.eval(0.5) - 0.25).abs() < 1e-15);
        assert!((f.eval(1.0) - 1.0).abs() < 1e-15);
        assert!(Cdf::power(0.0).is_err());
    }

    #[test]
    fn table_cdf_interpolates() {
        let f = Cdf::from_table(vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]).unwrap();
        assert!((f.eval(0.25) - 0.125).abs() < 1e-15);
        assert!((f.eval(0.75) - 0.625).abs() < 1e-15);
        assert!(Cdf::from_table(vec![(0.0, 0.0), (1.0, 0.9)]).is_err());
        assert!(Cdf::from_table(vec![(0.0, 0.0), (0.4, 0.5), (0.3, 0.6), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(Cdf::parse_spec("uniform").unwrap(), Cdf::Uniform);
        assert_eq!(Cdf::parse_spec("power:2").unwrap(), Cdf::Power { k: 2.0 });
        assert!(Cdf::parse_spec("power:x").is_err());
        assert!(Cdf::parse_spec("/nonexistent/table.csv").is_err());
    }

    #[test]
    fn grid_masses_sum_to_one() {
        for cdf in [Cdf::Uniform, Cdf::power(2.0).unwrap()] {
            let grid = TypeGrid::new(cdf, 101).unwrap();
            let total: f64 = grid.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_integrates_linear_functions_exactly() {
        let grid = TypeGrid::new(Cdf::Uniform, 2001).unwrap();
        // ∫ c dc = 1/2 is exact for the trapezoid rule on a linear integrand.
        assert!((grid.integrate(|c| c) - 0.5).abs() < 1e-12);
        // ∫ c² dc = 1/3 with O(h²) error.
        assert!((grid.integrate(|c| c * c) - 1.0 / 3.0).abs() < 1e-6);
    }
}
