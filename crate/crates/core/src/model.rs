//! Model primitives: environments, signal functions, consumer strategies,
//! joint distributions, and narrative-induced belief kernels.
//!
//! A narrative is the subset of the outcome's two direct causes (state and
//! action) that the consumer retains when fitting a conditional outcome
//! distribution to the long-run joint distribution. Fitting a false
//! narrative marginalizes out the dropped cause and broadcasts the result
//! back over it, which is where belief distortion enters.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Tolerance for probability-mass invariants (row sums, total mass).
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for optimizer / best-response comparisons.
pub const OPT_TOL: f64 = 1e-9;
/// Default strategy smoothing used before fitting narratives.
pub const DEFAULT_SMOOTHING: f64 = 1e-9;

/// The subset of {state, action} retained as direct causes of the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Narrative {
    /// Both state and action cause the outcome (the objective model).
    True,
    /// Only the action causes the outcome.
    Empowering,
    /// Only the state causes the outcome.
    Fatalistic,
    /// Neither causes the outcome.
    Denial,
}

impl Narrative {
    /// Canonical order used for deterministic tie-breaking.
    pub const ALL: [Narrative; 4] = [
        Narrative::True,
        Narrative::Empowering,
        Narrative::Fatalistic,
        Narrative::Denial,
    ];

    pub fn retains_state(self) -> bool {
        matches!(self, Narrative::True | Narrative::Fatalistic)
    }

    pub fn retains_action(self) -> bool {
        matches!(self, Narrative::True | Narrative::Empowering)
    }

    pub fn label(self) -> &'static str {
        match self {
            Narrative::True => "true",
            Narrative::Empowering => "empowering",
            Narrative::Fatalistic => "fatalistic",
            Narrative::Denial => "denial",
        }
    }
}

impl std::fmt::Display for Narrative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Narrative {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(Narrative::True),
            "empowering" => Ok(Narrative::Empowering),
            "fatalistic" => Ok(Narrative::Fatalistic),
            "denial" => Ok(Narrative::Denial),
            other => Err(ModelError::InvalidParameter {
                name: "narrative".into(),
                value: f64::NAN,
                expected: format!(
                    "one of true|empowering|fatalistic|denial, got {other:?}"
                ),
            }),
        }
    }
}

/// Optional additive decomposition of the utility tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Separability {
    None,
    /// u(t,a,y) = v(t,y) - cost(a)
    ActionSeparable { v: Vec<Vec<f64>>, cost: Vec<f64> },
    /// u(t,a,y) = v(a,y) + w(t)
    StateSeparable { v: Vec<Vec<f64>>, w: Vec<f64> },
    /// u(t,a,y) = v(t,a) + w(y)
    OutcomeSeparable { v: Vec<Vec<f64>>, w: Vec<f64> },
}

/// Finite decision environment: spaces, prior, outcome kernel and utility.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    states: Vec<String>,
    signals: Vec<String>,
    actions: Vec<String>,
    outcomes: Vec<String>,
    prior: Vec<f64>,
    /// p(y | t, a), flattened [t][a][y].
    outcome_kernel: Vec<f64>,
    /// u(t, a, y), flattened [t][a][y].
    utility: Vec<f64>,
    separability: Separability,
}

impl Environment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        signals: Vec<String>,
        actions: Vec<String>,
        outcomes: Vec<String>,
        prior: Vec<f64>,
        outcome_kernel: Vec<f64>,
        utility: Vec<f64>,
        separability: Separability,
    ) -> Result<Self> {
        let (nt, na, ny) = (states.len(), actions.len(), outcomes.len());
        if nt == 0 || signals.is_empty() || na == 0 || ny == 0 {
            return Err(ModelError::DimensionMismatch("empty variable space".into()));
        }
        if prior.len() != nt {
            return Err(ModelError::DimensionMismatch(format!(
                "prior has {} entries, expected {nt}",
                prior.len()
            )));
        }
        if outcome_kernel.len() != nt * na * ny {
            return Err(ModelError::DimensionMismatch(format!(
                "outcome_kernel has {} entries, expected {}",
                outcome_kernel.len(),
                nt * na * ny
            )));
        }
        if utility.len() != nt * na * ny {
            return Err(ModelError::DimensionMismatch(format!(
                "utility has {} entries, expected {}",
                utility.len(),
                nt * na * ny
            )));
        }
        check_distribution(&prior, "prior")?;
        for t in 0..nt {
            for a in 0..na {
                let row = &outcome_kernel[(t * na + a) * ny..(t * na + a + 1) * ny];
                check_distribution(row, &format!("outcome_kernel[t={t}][a={a}]"))?;
            }
        }
        let env = Self {
            states,
            signals,
            actions,
            outcomes,
            prior,
            outcome_kernel,
            utility,
            separability,
        };
        env.check_separability()?;
        Ok(env)
    }

    fn check_separability(&self) -> Result<()> {
        let (nt, na, ny) = (self.n_states(), self.n_actions(), self.n_outcomes());
        let check = |expected: &dyn Fn(usize, usize, usize) -> f64, tag: &str| -> Result<()> {
            for t in 0..nt {
                for a in 0..na {
                    for y in 0..ny {
                        let u = self.utility(t, a, y);
                        let e = expected(t, a, y);
                        if (u - e).abs() > PROB_TOL {
                            return Err(ModelError::InvalidProbability(format!(
                                "{tag} decomposition does not match utility at (t={t},a={a},y={y}): {u} vs {e}"
                            )));
                        }
                    }
                }
            }
            Ok(())
        };
        match &self.separability {
            Separability::None => Ok(()),
            Separability::ActionSeparable { v, cost } => {
                if v.len() != nt || v.iter().any(|r| r.len() != ny) || cost.len() != na {
                    return Err(ModelError::DimensionMismatch(
                        "action-separable components".into(),
                    ));
                }
                check(&|t, a, y| v[t][y] - cost[a], "action_separable")
            }
            Separability::StateSeparable { v, w } => {
                if v.len() != na || v.iter().any(|r| r.len() != ny) || w.len() != nt {
                    return Err(ModelError::DimensionMismatch(
                        "state-separable components".into(),
                    ));
                }
                check(&|t, a, y| v[a][y] + w[t], "state_separable")
            }
            Separability::OutcomeSeparable { v, w } => {
                if v.len() != nt || v.iter().any(|r| r.len() != na) || w.len() != ny {
                    return Err(ModelError::DimensionMismatch(
                        "outcome-separable components".into(),
                    ));
                }
                check(&|t, a, y| v[t][a] + w[y], "outcome_separable")
            }
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }
    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn signals(&self) -> &[String] {
        &self.signals
    }
    pub fn actions(&self) -> &[String] {
        &self.actions
    }
    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
    pub fn separability(&self) -> &Separability {
        &self.separability
    }

    #[inline]
    pub fn kernel(&self, t: usize, a: usize, y: usize) -> f64 {
        self.outcome_kernel[(t * self.n_actions() + a) * self.n_outcomes() + y]
    }

    #[inline]
    pub fn utility(&self, t: usize, a: usize, y: usize) -> f64 {
        self.utility[(t * self.n_actions() + a) * self.n_outcomes() + y]
    }

    /// Expected utility of action `a` in state `t` under the objective kernel.
    pub fn material_value(&self, t: usize, a: usize) -> f64 {
        (0..self.n_outcomes())
            .map(|y| self.kernel(t, a, y) * self.utility(t, a, y))
            .sum()
    }

    /// Same environment with the signal space replaced by the action labels,
    /// the domain used for direct-recommendation searches.
    pub fn with_action_signals(&self) -> Environment {
        let mut env = self.clone();
        env.signals = self.actions.clone();
        env
    }
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || p > 1.0 + PROB_TOL) {
        return Err(ModelError::InvalidProbability(format!(
            "{what} has entries outside [0, 1]"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(ModelError::InvalidProbability(format!(
            "{what} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// A Blackwell experiment: row-stochastic state-to-signal kernel p(s|t).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFunction {
    n_states: usize,
    n_signals: usize,
    /// p(s | t), flattened [t][s].
    kernel: Vec<f64>,
}

impl SignalFunction {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_states = rows.len();
        if n_states == 0 {
            return Err(ModelError::DimensionMismatch("no signal rows".into()));
        }
        let n_signals = rows[0].len();
        let mut kernel = Vec::with_capacity(n_states * n_signals);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_signals {
                return Err(ModelError::DimensionMismatch(format!(
                    "signal row {t} has {} entries, expected {n_signals}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("signal row t={t}"))?;
            kernel.extend_from_slice(row);
        }
        Ok(Self {
            n_states,
            n_signals,
            kernel,
        })
    }

    /// The fully informative experiment s = t. Requires at least as many
    /// signals as states.
    pub fn full_information(n_states: usize, n_signals: usize) -> Result<Self> {
        if n_signals < n_states {
            return Err(ModelError::DimensionMismatch(format!(
                "full information needs n_signals >= n_states ({n_signals} < {n_states})"
            )));
        }
        let mut kernel = vec![0.0; n_states * n_signals];
        for t in 0..n_states {
            kernel[t * n_signals + t] = 1.0;
        }
        Ok(Self {
            n_states,
            n_signals,
            kernel,
        })
    }

    /// All states send signal 0: carries no information.
    pub fn uninformative(n_states: usize, n_signals: usize) -> Self {
        let mut kernel = vec![0.0; n_states * n_signals];
        for t in 0..n_states {
            kernel[t * n_signals] = 1.0;
        }
        Self {
            n_states,
            n_signals,
            kernel,
        }
    }

    /// Binary experiment parameterized by q_t = Pr(s=1 | t).
    /// `qs[t]` is the probability of the "high" signal in state t.
    pub fn binary(qs: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = qs.iter().map(|&q| vec![1.0 - q, q]).collect();
        for (t, &q) in qs.iter().enumerate() {
            if !(0.0..=1.0).contains(&q) {
                return Err(ModelError::InvalidParameter {
                    name: format!("q[{t}]"),
                    value: q,
                    expected: "within [0, 1]".into(),
                });
            }
        }
        Self::from_rows(&rows)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    #[inline]
    pub fn prob(&self, s: usize, t: usize) -> f64 {
        self.kernel[t * self.n_signals + s]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|t| self.kernel[t * self.n_signals..(t + 1) * self.n_signals].to_vec())
            .collect()
    }
}

/// Consumer strategy: row-stochastic signal-to-action kernel p(a|s).
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerStrategy {
    n_signals: usize,
    n_actions: usize,
    /// p(a | s), flattened [s][a].
    kernel: Vec<f64>,
}

impl ConsumerStrategy {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_signals = rows.len();
        if n_signals == 0 {
            return Err(ModelError::DimensionMismatch("no strategy rows".into()));
        }
        let n_actions = rows[0].len();
        let mut kernel = Vec::with_capacity(n_signals * n_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                return Err(ModelError::DimensionMismatch(format!(
                    "strategy row {s} has {} entries, expected {n_actions}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("strategy row s={s}"))?;
            kernel.extend_from_slice(row);
        }
        Ok(Self {
            n_signals,
            n_actions,
            kernel,
        })
    }

    /// Deterministic strategy: signal s plays `choice[s]`.
    pub fn pure(choice: &[usize], n_actions: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(choice.len());
        for (s, &a) in choice.iter().enumerate() {
            if a >= n_actions {
                return Err(ModelError::DimensionMismatch(format!(
                    "pure strategy action {a} at signal {s} out of range"
                )));
            }
            let mut row = vec![0.0; n_actions];
            row[a] = 1.0;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// The obedient direct strategy a = s (requires square dimensions).
    pub fn obedient(n: usize) -> Self {
        let choice: Vec<usize> = (0..n).collect();
        Self::pure(&choice, n).expect("identity strategy is valid")
    }

    /// Constant strategy playing `a` at every signal.
    pub fn constant(n_signals: usize, n_actions: usize, a: usize) -> Result<Self> {
        Self::pure(&vec![a; n_signals], n_actions)
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn prob(&self, a: usize, s: usize) -> f64 {
        self.kernel[s * self.n_actions + a]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_signals)
            .map(|s| self.kernel[s * self.n_actions..(s + 1) * self.n_actions].to_vec())
            .collect()
    }

    /// Entrywise lexicographic comparison, used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.kernel.iter().zip(&other.kernel) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

/// Replace each strategy row by (1-eps) * row + eps * uniform.
pub fn smooth(strategy: &ConsumerStrategy, eps: f64) -> Result<ConsumerStrategy> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ModelError::InvalidParameter {
            name: "eps".into(),
            value: eps,
            expected: "within (0, 1)".into(),
        });
    }
    let na = strategy.n_actions as f64;
    let kernel: Vec<f64> = strategy
        .kernel
        .iter()
        .map(|&p| (1.0 - eps) * p + eps / na)
        .collect();
    Ok(ConsumerStrategy {
        n_signals: strategy.n_signals,
        n_actions: strategy.n_actions,
        kernel,
    })
}

/// The long-run joint distribution p(t,s,a,y) built by the model's
/// factorization p(t) p(s|t) p(a|s) p(y|t,a).
#[derive(Debug, Clone)]
pub struct JointDistribution {
    nt: usize,
    ns: usize,
    na: usize,
    ny: usize,
    tensor: Vec<f64>,
}

impl JointDistribution {
    #[inline]
    fn idx(&self, t: usize, s: usize, a: usize, y: usize) -> usize {
        ((t * self.ns + s) * self.na + a) * self.ny + y
    }

    #[inline]
    pub fn prob(&self, t: usize, s: usize, a: usize, y: usize) -> f64 {
        self.tensor[self.idx(t, s, a, y)]
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.nt, self.ns, self.na, self.ny)
    }

    pub fn total_mass(&self) -> f64 {
        self.tensor.iter().sum()
    }

    /// Marginal p(t, a).
    pub fn mass_ta(&self, t: usize, a: usize) -> f64 {
        let mut m = 0.0;
        for s in 0..self.ns {
            for y in 0..self.ny {
                m += self.prob(t, s, a, y);
            }
        }
        m
    }

    /// Marginal p(t, a, y).
    pub fn mass_tay(&self, t: usize, a: usize, y: usize) -> f64 {
        let mut m = 0.0;
        for s in 0..self.ns {
            m += self.prob(t, s, a, y);
        }
        m
    }

    pub fn mass_a(&self, a: usize) -> f64 {
        (0..self.nt).map(|t| self.mass_ta(t, a)).sum()
    }

    pub fn mass_t(&self, t: usize) -> f64 {
        (0..self.na).map(|a| self.mass_ta(t, a)).sum()
    }

    pub fn mass_s(&self, s: usize) -> f64 {
        let mut m = 0.0;
        for t in 0..self.nt {
            for a in 0..self.na {
                for y in 0..self.ny {
                    m += self.prob(t, s, a, y);
                }
            }
        }
        m
    }

    pub fn mass_y(&self, y: usize) -> f64 {
        let mut m = 0.0;
        for t in 0..self.nt {
            for s in 0..self.ns {
                for a in 0..self.na {
                    m += self.prob(t, s, a, y);
                }
            }
        }
        m
    }

    pub fn mass_ay(&self, a: usize, y: usize) -> f64 {
        let mut m = 0.0;
        for t in 0..self.nt {
            for s in 0..self.ns {
                m += self.prob(t, s, a, y);
            }
        }
        m
    }

    pub fn mass_ty(&self, t: usize, y: usize) -> f64 {
        let mut m = 0.0;
        for s in 0..self.ns {
            for a in 0..self.na {
                m += self.prob(t, s, a, y);
            }
        }
        m
    }

    /// Marginal over (t, s, a), dropping the outcome.
    pub fn mass_tsa(&self, t: usize, s: usize, a: usize) -> f64 {
        (0..self.ny).map(|y| self.prob(t, s, a, y)).sum()
    }
}

/// Build the joint distribution p(t)p(s|t)p(a|s)p(y|t,a).
pub fn factorize(
    env: &Environment,
    signal: &SignalFunction,
    strategy: &ConsumerStrategy,
) -> Result<JointDistribution> {
    if signal.n_states() != env.n_states() {
        return Err(ModelError::DimensionMismatch(format!(
            "signal function has {} states, environment has {}",
            signal.n_states(),
            env.n_states()
        )));
    }
    if strategy.n_signals() != signal.n_signals() {
        return Err(ModelError::DimensionMismatch(format!(
            "strategy has {} signals, signal function has {}",
            strategy.n_signals(),
            signal.n_signals()
        )));
    }
    if strategy.n_actions() != env.n_actions() {
        return Err(ModelError::DimensionMismatch(format!(
            "strategy has {} actions, environment has {}",
            strategy.n_actions(),
            env.n_actions()
        )));
    }
    let (nt, ns, na, ny) = (
        env.n_states(),
        signal.n_signals(),
        env.n_actions(),
        env.n_outcomes(),
    );
    let mut tensor = vec![0.0; nt * ns * na * ny];
    let mut i = 0;
    for t in 0..nt {
        let pt = env.prior()[t];
        for s in 0..ns {
            let ps = signal.prob(s, t);
            for a in 0..na {
                let pa = strategy.prob(a, s);
                let base = pt * ps * pa;
                for y in 0..ny {
                    tensor[i] = base * env.kernel(t, a, y);
                    i += 1;
                }
            }
        }
    }
    Ok(JointDistribution {
        nt,
        ns,
        na,
        ny,
        tensor,
    })
}

/// Narrative-induced outcome kernel p_N(y|t,a), broadcast over dropped causes.
#[derive(Debug, Clone)]
pub struct BeliefKernel {
    narrative: Narrative,
    nt: usize,
    na: usize,
    ny: usize,
    /// p_N(y | t, a), flattened [t][a][y].
    kernel: Vec<f64>,
}

impl BeliefKernel {
    pub fn narrative(&self) -> Narrative {
        self.narrative
    }

    #[inline]
    pub fn prob(&self, y: usize, t: usize, a: usize) -> f64 {
        self.kernel[(t * self.na + a) * self.ny + y]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nt, self.na, self.ny)
    }
}

/// Fit a narrative to a joint distribution, producing the belief kernel.
pub fn fit_narrative(joint: &JointDistribution, narrative: Narrative) -> Result<BeliefKernel> {
    let (nt, _ns, na, ny) = joint.dims();
    let mut kernel = vec![0.0; nt * na * ny];
    match narrative {
        Narrative::True => {
            for t in 0..nt {
                for a in 0..na {
                    let mass = joint.mass_ta(t, a);
                    if mass <= 0.0 {
                        return Err(ModelError::NullConditioningCell {
                            cell: format!("(t={t}, a={a})"),
                        });
                    }
                    for y in 0..ny {
                        kernel[(t * na + a) * ny + y] = joint.mass_tay(t, a, y) / mass;
                    }
                }
            }
        }
        Narrative::Empowering => {
            for a in 0..na {
                let mass = joint.mass_a(a);
                if mass <= 0.0 {
                    return Err(ModelError::NullConditioningCell {
                        cell: format!("(a={a})"),
                    });
                }
                for y in 0..ny {
                    let p = joint.mass_ay(a, y) / mass;
                    for t in 0..nt {
                        kernel[(t * na + a) * ny + y] = p;
                    }
                }
            }
        }
        Narrative::Fatalistic => {
            for t in 0..nt {
                let mass = joint.mass_t(t);
                if mass <= 0.0 {
                    return Err(ModelError::NullConditioningCell {
                        cell: format!("(t={t})"),
                    });
                }
                for y in 0..ny {
                    let p = joint.mass_ty(t, y) / mass;
                    for a in 0..na {
                        kernel[(t * na + a) * ny + y] = p;
                    }
                }
            }
        }
        Narrative::Denial => {
            for y in 0..ny {
                let p = joint.mass_y(y);
                for t in 0..nt {
                    for a in 0..na {
                        kernel[(t * na + a) * ny + y] = p;
                    }
                }
            }
        }
    }
    Ok(BeliefKernel {
        narrative,
        nt,
        na,
        ny,
        kernel,
    })
}

/// Bayes posterior over states after observing signal `s`.
pub fn posterior_states(env: &Environment, signal: &SignalFunction, s: usize) -> Result<Vec<f64>> {
    let nt = env.n_states();
    let mut post: Vec<f64> = (0..nt).map(|t| env.prior()[t] * signal.prob(s, t)).collect();
    let mass: f64 = post.iter().sum();
    if mass <= 0.0 {
        return Err(ModelError::NullSignal {
            signal: s.to_string(),
        });
    }
    for p in &mut post {
        *p /= mass;
    }
    Ok(post)
}

/// Narrative-based subjective value of taking action `a` after signal `s`:
/// sum over (t, y) of p_I(t|s) p_N(y|t,a) u(t,a,y).
pub fn subjective_value(
    env: &Environment,
    signal: &SignalFunction,
    belief: &BeliefKernel,
    s: usize,
    a: usize,
) -> Result<f64> {
    let post = posterior_states(env, signal, s)?;
    Ok(subjective_value_with_posterior(env, belief, &post, a))
}

#[inline]
pub(crate) fn subjective_value_with_posterior(
    env: &Environment,
    belief: &BeliefKernel,
    posterior: &[f64],
    a: usize,
) -> f64 {
    let ny = env.n_outcomes();
    let mut v = 0.0;
    for (t, &pt) in posterior.iter().enumerate() {
        if pt == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for y in 0..ny {
            inner += belief.prob(y, t, a) * env.utility(t, a, y);
        }
        v += pt * inner;
    }
    v
}

/// Per-signal subjective value table V(s, a) for a given media strategy and
/// long-run consumer behavior.
///
/// Signals with zero objective probability are reported as `None`; they carry
/// no weight in the ex-ante objective and the model assigns no belief there.
pub struct ValueTable {
    pub signal_mass: Vec<f64>,
    /// values[s] is Some(per-action values) when p(s) > 0.
    pub values: Vec<Option<Vec<f64>>>,
}

impl ValueTable {
    /// Max value at signal s, with ties broken toward the lowest action index.
    pub fn best(&self, s: usize) -> Option<(usize, f64)> {
        self.values[s].as_ref().map(|vals| {
            let mut best = (0usize, vals[0]);
            for (a, &v) in vals.iter().enumerate().skip(1) {
                if v > best.1 {
                    best = (a, v);
                }
            }
            best
        })
    }

    /// Actions within `tol` of the max at signal s.
    pub fn argmax_set(&self, s: usize, tol: f64) -> Option<Vec<usize>> {
        self.values[s].as_ref().map(|vals| {
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            vals.iter()
                .enumerate()
                .filter(|(_, &v)| v >= max - tol)
                .map(|(a, _)| a)
                .collect()
        })
    }
}

/// Compute V(s, a) for every signal and action, with beliefs fit to the
/// joint distribution induced by the eps-smoothed strategy.
pub fn value_table(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
    eps: f64,
) -> Result<ValueTable> {
    let smoothed = smooth(strategy, eps)?;
    let joint = factorize(env, signal, &smoothed)?;
    let belief = fit_narrative(&joint, narrative)?;
    let ns = signal.n_signals();
    let na = env.n_actions();
    let mut signal_mass = vec![0.0; ns];
    let mut values: Vec<Option<Vec<f64>>> = vec![None; ns];
    for s in 0..ns {
        let mass: f64 = (0..env.n_states())
            .map(|t| env.prior()[t] * signal.prob(s, t))
            .sum();
        signal_mass[s] = mass;
        if mass <= 0.0 {
            continue;
        }
        let post: Vec<f64> = (0..env.n_states())
            .map(|t| env.prior()[t] * signal.prob(s, t) / mass)
            .collect();
        let vals: Vec<f64> = (0..na)
            .map(|a| subjective_value_with_posterior(env, &belief, &post, a))
            .collect();
        values[s] = Some(vals);
    }
    Ok(ValueTable {
        signal_mass,
        values,
    })
}

/// Allocation-free value table for binary environments, used by equilibrium
/// search inner loops. Matches `value_table` semantics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SmallTable {
    pub mass: [f64; 2],
    pub live: [bool; 2],
    /// vals[s][a]; only meaningful when live[s].
    pub vals: [[f64; 2]; 2],
}

/// Fast path of `value_table` when every space is binary; `None` when the
/// environment has other dimensions.
pub(crate) fn small_value_table(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
    eps: f64,
) -> Option<SmallTable> {
    if env.n_states() != 2
        || env.n_actions() != 2
        || env.n_outcomes() != 2
        || signal.n_signals() != 2
    {
        return None;
    }
    // Smoothed strategy rows.
    let mut sig = [[0.0f64; 2]; 2]; // sig[s][a]
    for s in 0..2 {
        for a in 0..2 {
            sig[s][a] = (1.0 - eps) * strategy.prob(a, s) + eps / 2.0;
        }
    }
    // Belief kernel p_N(y=1 | t, a); y=0 entry is the complement.
    let mut belief1 = [[0.0f64; 2]; 2]; // belief1[t][a]
    match narrative {
        Narrative::True => {
            for t in 0..2 {
                for a in 0..2 {
                    belief1[t][a] = env.kernel(t, a, 1);
                }
            }
        }
        Narrative::Empowering => {
            for a in 0..2 {
                let mut mass_a = 0.0;
                let mut mass_ay1 = 0.0;
                for t in 0..2 {
                    for s in 0..2 {
                        let m = env.prior()[t] * signal.prob(s, t) * sig[s][a];
                        mass_a += m;
                        mass_ay1 += m * env.kernel(t, a, 1);
                    }
                }
                let p = mass_ay1 / mass_a;
                belief1[0][a] = p;
                belief1[1][a] = p;
            }
        }
        Narrative::Fatalistic => {
            for t in 0..2 {
                let mut mass_ty1 = 0.0;
                for s in 0..2 {
                    for a in 0..2 {
                        mass_ty1 += signal.prob(s, t) * sig[s][a] * env.kernel(t, a, 1);
                    }
                }
                belief1[t][0] = mass_ty1;
                belief1[t][1] = mass_ty1;
            }
        }
        Narrative::Denial => {
            let mut mass_y1 = 0.0;
            for t in 0..2 {
                for s in 0..2 {
                    for a in 0..2 {
                        mass_y1 +=
                            env.prior()[t] * signal.prob(s, t) * sig[s][a] * env.kernel(t, a, 1);
                    }
                }
            }
            for t in 0..2 {
                for a in 0..2 {
                    belief1[t][a] = mass_y1;
                }
            }
        }
    }
    let mut out = SmallTable {
        mass: [0.0; 2],
        live: [false; 2],
        vals: [[0.0; 2]; 2],
    };
    for s in 0..2 {
        let w0 = env.prior()[0] * signal.prob(s, 0);
        let w1 = env.prior()[1] * signal.prob(s, 1);
        let mass = w0 + w1;
        out.mass[s] = mass;
        if mass <= 0.0 {
            continue;
        }
        out.live[s] = true;
        for a in 0..2 {
            let mut v = 0.0;
            for (t, w) in [(0usize, w0), (1usize, w1)] {
                let p1 = belief1[t][a];
                v += w * ((1.0 - p1) * env.utility(t, a, 0) + p1 * env.utility(t, a, 1));
            }
            out.vals[s][a] = v / mass;
        }
    }
    Some(out)
}

/// Ex-ante expected anticipatory utility: the signal-weighted expectation of
/// the per-signal maximum subjective value. The max runs over all actions,
/// not just the strategy's support; the strategy enters only through the
/// narrative-fitted belief kernel.
pub fn anticipatory_utility(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
) -> Result<f64> {
    anticipatory_utility_with(env, signal, narrative, strategy, DEFAULT_SMOOTHING)
}

pub fn anticipatory_utility_with(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
    eps: f64,
) -> Result<f64> {
    let table = value_table(env, signal, narrative, strategy, eps)?;
    let mut total = 0.0;
    for s in 0..signal.n_signals() {
        if let Some((_, best)) = table.best(s) {
            total += table.signal_mass[s] * best;
        }
    }
    Ok(total)
}
