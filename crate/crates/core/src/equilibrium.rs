//! Consumer-equilibrium checking and enumeration.
//!
//! A consumer strategy is an equilibrium when every action played with
//! positive probability maximizes the narrative-based subjective value,
//! with beliefs fit to the joint distribution the strategy itself induces.
//! The limit-of-trembles definition is operationalized by a decreasing
//! epsilon ladder: the strategy is certified when best-response violations
//! shrink along the ladder and vanish at the bottom.

use crate::error::{ModelError, Result};
use crate::model::{
    anticipatory_utility_with, small_value_table, smooth, value_table, ConsumerStrategy,
    Environment, Narrative, SignalFunction, SmallTable, ValueTable, DEFAULT_SMOOTHING, OPT_TOL,
};

/// Uniform view over the generic and the allocation-free value tables.
enum TableView {
    Small(SmallTable),
    Big(ValueTable),
}

impl TableView {
    fn compute(
        env: &Environment,
        signal: &SignalFunction,
        narrative: Narrative,
        strategy: &ConsumerStrategy,
        eps: f64,
    ) -> Result<TableView> {
        if let Some(t) = small_value_table(env, signal, narrative, strategy, eps) {
            return Ok(TableView::Small(t));
        }
        Ok(TableView::Big(value_table(
            env, signal, narrative, strategy, eps,
        )?))
    }

    fn vals(&self, s: usize) -> Option<&[f64]> {
        match self {
            TableView::Small(t) => t.live[s].then(|| &t.vals[s][..]),
            TableView::Big(t) => t.values[s].as_deref(),
        }
    }
}

/// Decreasing tremble sizes used to certify an equilibrium as a limit.
pub const EPSILON_LADDER: [f64; 3] = [1e-3, 1e-6, 1e-9];
/// Default certification tolerance on best-response violations.
pub const CERT_TOL: f64 = 1e-8;

/// Mixing weights closer than this to 0 or 1 are treated as pure; the pure
/// support profile covers them.
const MIX_MARGIN: f64 = 1e-4;

/// Outcome of the epsilon-ladder certification.
#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub passed: bool,
    /// (epsilon, max best-response violation among supported actions).
    pub epsilon_trace: Vec<(f64, f64)>,
    /// Signal with the worst violation, if any violation was positive.
    pub worst_signal: Option<usize>,
}

/// A certified equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub strategy: ConsumerStrategy,
    /// Ex-ante anticipatory utility of the strategy.
    pub utility: f64,
    /// Supported actions per signal (empty for zero-probability signals).
    pub support_profile: Vec<Vec<usize>>,
    pub epsilon_trace: Vec<(f64, f64)>,
}

/// All certified equilibria, best first, plus any support profiles whose
/// indifference system could not be resolved.
#[derive(Debug, Clone)]
pub struct EquilibriumSearch {
    pub equilibria: Vec<EquilibriumResult>,
    pub undetermined: Vec<Vec<Vec<usize>>>,
}

impl EquilibriumSearch {
    pub fn best(&self) -> Option<&EquilibriumResult> {
        self.equilibria.first()
    }
}

fn signal_masses(env: &Environment, signal: &SignalFunction) -> Vec<f64> {
    (0..signal.n_signals())
        .map(|s| {
            (0..env.n_states())
                .map(|t| env.prior()[t] * signal.prob(s, t))
                .sum()
        })
        .collect()
}

/// Per-signal argmax sets of the subjective value under the beliefs the
/// strategy itself generates; `None` for zero-probability signals.
pub fn best_responses(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
) -> Result<Vec<Option<Vec<usize>>>> {
    let table = value_table(env, signal, narrative, strategy, DEFAULT_SMOOTHING)?;
    Ok((0..signal.n_signals())
        .map(|s| table.argmax_set(s, OPT_TOL))
        .collect())
}

/// Certify (or refute) a strategy as an equilibrium via the epsilon ladder.
pub fn is_equilibrium(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
    strategy: &ConsumerStrategy,
    tol: f64,
) -> Result<ViolationReport> {
    let na = env.n_actions();
    let mut trace = Vec::with_capacity(EPSILON_LADDER.len());
    let mut worst_signal = None;
    for &eps in &EPSILON_LADDER {
        let table = TableView::compute(env, signal, narrative, strategy, eps)?;
        let smoothed = smooth(strategy, eps)?;
        let mut violation: f64 = 0.0;
        for s in 0..signal.n_signals() {
            let Some(vals) = table.vals(s) else {
                continue;
            };
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (a, &v) in vals.iter().enumerate().take(na) {
                if smoothed.prob(a, s) > eps {
                    let d = max - v;
                    if d > violation {
                        violation = d;
                        worst_signal = Some(s);
                    }
                }
            }
        }
        trace.push((eps, violation));
    }
    let final_ok = trace.last().map(|&(_, v)| v <= tol).unwrap_or(false);
    let shrinking = trace.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
    Ok(ViolationReport {
        passed: final_ok && shrinking,
        epsilon_trace: trace,
        worst_signal,
    })
}

/// A candidate strategy that satisfies the best-response conditions at the
/// bottom of the ladder; certification happens afterwards.
struct Candidate {
    strategy: ConsumerStrategy,
    profile: Vec<Vec<usize>>,
    utility: f64,
}

struct ProfileContext<'a> {
    env: &'a Environment,
    signal: &'a SignalFunction,
    narrative: Narrative,
    /// Signals with positive probability.
    live: Vec<usize>,
    masses: Vec<f64>,
}

impl<'a> ProfileContext<'a> {
    /// Build the full strategy for a support assignment over live signals.
    /// `theta` holds, per mixed live signal in order, the weights of all but
    /// the last supported action.
    fn build_strategy(&self, supports: &[Vec<usize>], theta: &[f64]) -> ConsumerStrategy {
        let ns = self.signal.n_signals();
        let na = self.env.n_actions();
        let mut rows = vec![vec![0.0; na]; ns];
        for row in rows.iter_mut() {
            row[0] = 1.0; // canonical play at zero-probability signals
        }
        let mut k = 0;
        for (i, &s) in self.live.iter().enumerate() {
            let supp = &supports[i];
            rows[s] = vec![0.0; na];
            if supp.len() == 1 {
                rows[s][supp[0]] = 1.0;
            } else {
                let mut rest = 1.0;
                for &a in &supp[..supp.len() - 1] {
                    let w = theta[k].clamp(0.0, 1.0);
                    rows[s][a] = w;
                    rest -= w;
                    k += 1;
                }
                rows[s][supp[supp.len() - 1]] = rest.max(0.0);
            }
        }
        ConsumerStrategy::from_rows(&rows).expect("constructed rows are stochastic")
    }

    fn table(&self, strategy: &ConsumerStrategy) -> Result<TableView> {
        TableView::compute(
            self.env,
            self.signal,
            self.narrative,
            strategy,
            DEFAULT_SMOOTHING,
        )
    }

    /// Indifference residuals: for each mixed live signal, the differences
    /// V(s, a_i) - V(s, a_last) over its supported actions.
    fn residual(&self, supports: &[Vec<usize>], theta: &[f64]) -> Result<Vec<f64>> {
        let strategy = self.build_strategy(supports, theta);
        let table = self.table(&strategy)?;
        let mut r = Vec::new();
        for (i, &s) in self.live.iter().enumerate() {
            let supp = &supports[i];
            if supp.len() < 2 {
                continue;
            }
            let vals = table.vals(s).expect("live signal has values");
            let last = vals[supp[supp.len() - 1]];
            for &a in &supp[..supp.len() - 1] {
                r.push(vals[a] - last);
            }
        }
        Ok(r)
    }

    /// Check that every supported action attains the per-signal max within
    /// `tol`, and compute the ex-ante utility if so.
    fn feasible_utility(
        &self,
        supports: &[Vec<usize>],
        strategy: &ConsumerStrategy,
        tol: f64,
    ) -> Result<Option<f64>> {
        let table = self.table(strategy)?;
        let mut utility = 0.0;
        for (i, &s) in self.live.iter().enumerate() {
            let vals = table.vals(s).expect("live signal has values");
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &a in &supports[i] {
                if vals[a] < max - tol {
                    return Ok(None);
                }
            }
            utility += self.masses[s] * max;
        }
        Ok(Some(utility))
    }
}

/// Enumerate nonempty action subsets in a canonical order.
fn nonempty_subsets(na: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << na) {
        let subset: Vec<usize> = (0..na).filter(|a| mask & (1 << a) != 0).collect();
        out.push(subset);
    }
    // Singletons first, then larger supports, each in index order.
    out.sort_by_key(|s| (s.len(), s.clone()));
    out
}

fn solve_one_dimensional(
    ctx: &ProfileContext,
    supports: &[Vec<usize>],
    candidates: &mut Vec<Candidate>,
) -> Result<()> {
    let lo = 1e-6;
    let hi = 1.0 - 1e-6;
    let n_scan = 17;
    let g = |x: f64| -> Result<f64> {
        let r = ctx.residual(supports, &[x])?;
        Ok(r[0])
    };
    let xs: Vec<f64> = (0..n_scan)
        .map(|i| lo + (hi - lo) * i as f64 / (n_scan - 1) as f64)
        .collect();
    let mut gs = Vec::with_capacity(n_scan);
    for &x in &xs {
        gs.push(g(x)?);
    }
    let mut roots = Vec::new();
    if gs.iter().all(|v| v.abs() < 1e-10) {
        // Indifference continuum: keep the utility-maximal point on the scan.
        let mut best: Option<(f64, f64)> = None;
        for &x in &xs {
            let strategy = ctx.build_strategy(supports, &[x]);
            if let Some(u) = ctx.feasible_utility(supports, &strategy, CERT_TOL)? {
                if best.map(|(_, bu)| u > bu + OPT_TOL).unwrap_or(true) {
                    best = Some((x, u));
                }
            }
        }
        if let Some((x, _)) = best {
            roots.push(x);
        }
    } else {
        for w in 0..n_scan - 1 {
            let (mut a, mut b) = (xs[w], xs[w + 1]);
            let (mut fa, fb) = (gs[w], gs[w + 1]);
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa * fb > 0.0 {
                continue;
            }
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = g(m)?;
                if fm == 0.0 || (b - a) < 1e-13 {
                    a = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    for x in roots {
        if !(MIX_MARGIN..=1.0 - MIX_MARGIN).contains(&x) {
            continue; // effectively pure; covered by the pure profile
        }
        let strategy = ctx.build_strategy(supports, &[x]);
        if let Some(utility) = ctx.feasible_utility(supports, &strategy, CERT_TOL)? {
            candidates.push(Candidate {
                strategy,
                profile: full_profile(ctx, supports),
                utility,
            });
        }
    }
    Ok(())
}

/// Damped Newton with a finite-difference Jacobian on the indifference
/// system. Returns converged roots; sets `stalled` if a run got close to a
/// root (residual below 1e-4) without converging.
fn solve_newton(
    ctx: &ProfileContext,
    supports: &[Vec<usize>],
    dim: usize,
    stalled: &mut bool,
    candidates: &mut Vec<Candidate>,
) -> Result<()> {
    let mut starts = vec![vec![0.5; dim]];
    if dim <= 3 {
        for mask in 0..(1u32 << dim) {
            let start: Vec<f64> = (0..dim)
                .map(|i| if mask & (1 << i) != 0 { 0.75 } else { 0.25 })
                .collect();
            starts.push(start);
        }
    }
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Rank starts by initial residual and keep the three most promising.
    let mut ranked: Vec<(f64, Vec<f64>)> = Vec::with_capacity(starts.len());
    for start in starts {
        let r = ctx.residual(supports, &start)?;
        ranked.push((norm(&r), start));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked.truncate(3);
    let starts: Vec<Vec<f64>> = ranked.into_iter().map(|(_, s)| s).collect();
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for start in starts {
        let mut theta = start;
        let mut r = ctx.residual(supports, &theta)?;
        let mut converged = false;
        for _ in 0..60 {
            if norm(&r) < 1e-11 {
                converged = true;
                break;
            }
            // Finite-difference Jacobian.
            let h = 1e-7;
            let mut jac = vec![vec![0.0; dim]; dim];
            for j in 0..dim {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] = (tp[j] + h).min(1.0 - 1e-9);
                tm[j] = (tm[j] - h).max(1e-9);
                let rp = ctx.residual(supports, &tp)?;
                let rm = ctx.residual(supports, &tm)?;
                let denom = tp[j] - tm[j];
                for i in 0..dim {
                    jac[i][j] = (rp[i] - rm[i]) / denom;
                }
            }
            let Some(step) = solve_linear(&jac, &r) else {
                break;
            };
            // Backtracking line search on the residual norm.
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..25 {
                let trial: Vec<f64> = theta
                    .iter()
                    .zip(&step)
                    .map(|(t, s)| (t - lambda * s).clamp(1e-9, 1.0 - 1e-9))
                    .collect();
                let rt = ctx.residual(supports, &trial)?;
                if norm(&rt) < norm(&r) {
                    theta = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if norm(&r) < 1e-11 {
            converged = true;
        }
        if converged {
            if !roots
                .iter()
                .any(|q| q.iter().zip(&theta).all(|(a, b)| (a - b).abs() < 1e-6))
            {
                roots.push(theta);
            }
        } else if norm(&r) < 1e-4 {
            *stalled = true;
        }
    }
    for theta in roots {
        if theta
            .iter()
            .any(|&x| !(MIX_MARGIN..=1.0 - MIX_MARGIN).contains(&x))
        {
            continue;
        }
        let strategy = ctx.build_strategy(supports, &theta);
        if let Some(utility) = ctx.feasible_utility(supports, &strategy, CERT_TOL)? {
            candidates.push(Candidate {
                strategy,
                profile: full_profile(ctx, supports),
                utility,
            });
        }
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting; None on (near-)singularity.
fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = m[col][n];
        for k in col + 1..n {
            v -= m[col][k] * x[k];
        }
        x[col] = v / m[col][col];
    }
    Some(x)
}

fn full_profile(ctx: &ProfileContext, supports: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut profile = vec![Vec::new(); ctx.signal.n_signals()];
    for (i, &s) in ctx.live.iter().enumerate() {
        profile[s] = supports[i].clone();
    }
    profile
}

/// Enumerate support profiles, solve each one's indifference system, and
/// return best-response-feasible candidates plus unresolved profiles.
fn candidate_strategies(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
) -> Result<(Vec<Candidate>, Vec<Vec<Vec<usize>>>)> {
    let masses = signal_masses(env, signal);
    let live: Vec<usize> = (0..signal.n_signals())
        .filter(|&s| masses[s] > 0.0)
        .collect();
    if live.is_empty() {
        return Err(ModelError::InvalidProbability(
            "signal function assigns zero probability to every signal".into(),
        ));
    }
    let ctx = ProfileContext {
        env,
        signal,
        narrative,
        live: live.clone(),
        masses,
    };
    let subsets = nonempty_subsets(env.n_actions());
    let mut candidates = Vec::new();
    let mut undetermined = Vec::new();
    let mut assignment = vec![0usize; live.len()];
    loop {
        let supports: Vec<Vec<usize>> = assignment.iter().map(|&i| subsets[i].clone()).collect();
        let dim: usize = supports.iter().map(|s| s.len() - 1).sum();
        if dim == 0 {
            let strategy = ctx.build_strategy(&supports, &[]);
            if let Some(utility) = ctx.feasible_utility(&supports, &strategy, CERT_TOL)? {
                candidates.push(Candidate {
                    strategy,
                    profile: full_profile(&ctx, &supports),
                    utility,
                });
            }
        } else if dim == 1 {
            solve_one_dimensional(&ctx, &supports, &mut candidates)?;
        } else {
            let mut stalled = false;
            solve_newton(&ctx, &supports, dim, &mut stalled, &mut candidates)?;
            if stalled {
                undetermined.push(full_profile(&ctx, &supports));
            }
        }
        // Advance the mixed-radix counter over support subsets.
        let mut pos = assignment.len();
        loop {
            if pos == 0 {
                return Ok((finalize_candidates(candidates), undetermined));
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < subsets.len() {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

fn finalize_candidates(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    // Deduplicate near-identical strategies found via different profiles.
    let mut kept: Vec<Candidate> = Vec::new();
    candidates.retain(|c| {
        let dup = kept.iter().any(|k| {
            k.strategy
                .rows()
                .iter()
                .flatten()
                .zip(c.strategy.rows().iter().flatten())
                .all(|(a, b)| (a - b).abs() < 1e-7)
        });
        if !dup {
            kept.push(Candidate {
                strategy: c.strategy.clone(),
                profile: c.profile.clone(),
                utility: c.utility,
            });
        }
        !dup
    });
    candidates
}

/// Enumerate and certify all equilibria; best (highest utility) first.
pub fn find_equilibria(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
) -> Result<EquilibriumSearch> {
    let (candidates, undetermined) = candidate_strategies(env, signal, narrative)?;
    let mut equilibria = Vec::new();
    for cand in candidates {
        let report = is_equilibrium(env, signal, narrative, &cand.strategy, CERT_TOL)?;
        if !report.passed {
            continue;
        }
        let utility =
            anticipatory_utility_with(env, signal, narrative, &cand.strategy, DEFAULT_SMOOTHING)?;
        equilibria.push(EquilibriumResult {
            strategy: cand.strategy,
            utility,
            support_profile: cand.profile,
            epsilon_trace: report.epsilon_trace,
        });
    }
    equilibria.sort_by(|a, b| {
        b.utility
            .total_cmp(&a.utility)
            .then_with(|| a.strategy.lex_cmp(&b.strategy))
    });
    Ok(EquilibriumSearch {
        equilibria,
        undetermined,
    })
}

/// Value of the obedient (a = s) equilibrium, or `None` when obedience is
/// not a best response somewhere. Requires the signal space to coincide with
/// the action space.
pub(crate) fn obedient_equilibrium_value(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
) -> Result<Option<f64>> {
    if signal.n_signals() != env.n_actions() {
        return Err(ModelError::DimensionMismatch(format!(
            "direct recommendations need |S| = |A| ({} vs {})",
            signal.n_signals(),
            env.n_actions()
        )));
    }
    let sigma = ConsumerStrategy::obedient(env.n_actions());
    let masses = signal_masses(env, signal);
    let table = TableView::compute(env, signal, narrative, &sigma, DEFAULT_SMOOTHING)?;
    let mut utility = 0.0;
    for s in 0..signal.n_signals() {
        let Some(vals) = table.vals(s) else {
            continue;
        };
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if vals[s] < max - CERT_TOL {
            return Ok(None);
        }
        utility += masses[s] * max;
    }
    Ok(Some(utility))
}

/// Fast path for optimizer inner loops: the utility of the media-optimal
/// equilibrium, skipping ladder certification.
pub(crate) fn best_equilibrium_value(
    env: &Environment,
    signal: &SignalFunction,
    narrative: Narrative,
) -> Result<Option<f64>> {
    let (candidates, _) = candidate_strategies(env, signal, narrative)?;
    Ok(candidates
        .into_iter()
        .map(|c| c.utility)
        .fold(None, |acc: Option<f64>, u| {
            Some(acc.map_or(u, |b| b.max(u)))
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, ScenarioSpec};

    fn american_dream(c: f64) -> Environment {
        scenarios::build(&ScenarioSpec::AmericanDream { c }).unwrap()
    }

    #[test]
    fn cost_minimizing_action_dominates_when_action_link_is_dropped() {
        let env = american_dream(0.2);
        let signals = [
            SignalFunction::binary(&[0.0, 1.0]).unwrap(),
            SignalFunction::binary(&[0.5, 0.5]).unwrap(),
        ];
        let strategies = [
            ConsumerStrategy::obedient(2),
            ConsumerStrategy::constant(2, 2, 1).unwrap(),
        ];
        for signal in &signals {
            for sigma in &strategies {
                let brs = best_responses(&env, signal, Narrative::Fatalistic, sigma).unwrap();
                for br in brs.into_iter().flatten() {
                    assert_eq!(br, vec![0]);
                }
            }
        }
    }

    #[test]
    fn empowering_obedience_is_an_equilibrium_at_the_tuned_signal() {
        let c: f64 = 0.2;
        let q0 = (1.0 / (2.0 * c)).sqrt() - 1.0;
        let env = american_dream(c);
        let signal = SignalFunction::binary(&[q0, 1.0]).unwrap();
        let sigma = ConsumerStrategy::obedient(2);
        let brs = best_responses(&env, &signal, Narrative::Empowering, &sigma).unwrap();
        assert!(brs[1].as_ref().unwrap().contains(&1));
        assert_eq!(brs[0].as_ref().unwrap(), &vec![0]);
        let report = is_equilibrium(&env, &signal, Narrative::Empowering, &sigma, CERT_TOL).unwrap();
        assert!(report.passed, "trace: {:?}", report.epsilon_trace);
    }

    #[test]
    fn always_acting_fails_under_dropped_action_link() {
        let env = american_dream(0.2);
        let signal = SignalFunction::binary(&[0.3, 0.9]).unwrap();
        let sigma = ConsumerStrategy::constant(2, 2, 1).unwrap();
        let report =
            is_equilibrium(&env, &signal, Narrative::Fatalistic, &sigma, CERT_TOL).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn matching_game_obedience_holds_at_the_tuned_signal() {
        let beta: f64 = 0.6;
        let env = scenarios::build(&ScenarioSpec::WhacAMole { beta }).unwrap();
        let q1 = 0.25 + 1.0 / (4.0 * beta);
        let q0 = 0.75 - 1.0 / (4.0 * beta);
        let signal = SignalFunction::binary(&[q0, q1]).unwrap();
        let sigma = ConsumerStrategy::obedient(2);
        let report =
            is_equilibrium(&env, &signal, Narrative::Fatalistic, &sigma, CERT_TOL).unwrap();
        assert!(report.passed, "trace: {:?}", report.epsilon_trace);
        // The supported action's value strictly exceeds 1/2 at each signal.
        let table = value_table(&env, &signal, Narrative::Fatalistic, &sigma, 1e-9).unwrap();
        for s in 0..2 {
            let vals = table.values[s].as_ref().unwrap();
            assert!(vals[s] > 0.5);
        }
    }

    #[test]
    fn true_narrative_best_responses_under_full_information() {
        let env = scenarios::build(&ScenarioSpec::WhacAMole { beta: 0.6 }).unwrap();
        let full = SignalFunction::full_information(2, 2).unwrap();
        let sigma = ConsumerStrategy::obedient(2);
        let brs = best_responses(&env, &full, Narrative::True, &sigma).unwrap();
        assert_eq!(brs[0].as_ref().unwrap(), &vec![0]);
        assert_eq!(brs[1].as_ref().unwrap(), &vec![1]);
    }

    #[test]
    fn unique_inactive_equilibrium_under_dropped_action_link() {
        let env = american_dream(0.2);
        for signal in [
            SignalFunction::binary(&[0.2, 0.8]).unwrap(),
            SignalFunction::full_information(2, 2).unwrap(),
        ] {
            let search = find_equilibria(&env, &signal, Narrative::Fatalistic).unwrap();
            assert_eq!(search.equilibria.len(), 1);
            assert!(search.undetermined.is_empty());
            let eq = &search.equilibria[0];
            assert!(eq.utility.abs() < 1e-9);
            for s in 0..2 {
                assert!((eq.strategy.prob(0, s) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_information_empowering_equilibrium_matches_benchmark() {
        let env = american_dream(0.2);
        let full = SignalFunction::full_information(2, 2).unwrap();
        let search = find_equilibria(&env, &full, Narrative::Empowering).unwrap();
        let best = search.best().unwrap();
        assert!((best.utility - 0.15).abs() < 1e-7, "utility {}", best.utility);
        assert!((best.strategy.prob(1, 1) - 1.0).abs() < 1e-9);
        assert!((best.strategy.prob(0, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_information_denial_sustains_inaction_at_a_quarter() {
        let env = scenarios::build(&ScenarioSpec::DegenerateInaction).unwrap();
        let signal = SignalFunction::uninformative(2, 2);
        let search = find_equilibria(&env, &signal, Narrative::Denial).unwrap();
        let best = search.best().unwrap();
        assert!((best.utility - 0.25).abs() < 1e-9, "utility {}", best.utility);
        assert!((best.strategy.prob(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn true_narrative_equilibria_share_the_strategy_free_value() {
        let env = american_dream(0.3);
        let signal = SignalFunction::binary(&[0.25, 0.9]).unwrap();
        let search = find_equilibria(&env, &signal, Narrative::True).unwrap();
        assert!(!search.equilibria.is_empty());
        let reference = anticipatory_utility_with(
            &env,
            &signal,
            Narrative::True,
            &ConsumerStrategy::obedient(2),
            DEFAULT_SMOOTHING,
        )
        .unwrap();
        for eq in &search.equilibria {
            assert!((eq.utility - reference).abs() < 1e-9);
        }
    }

    #[test]
    fn best_value_agrees_with_full_search() {
        let env = american_dream(0.2);
        let q0 = (1.0 / 0.4f64).sqrt() - 1.0;
        let signal = SignalFunction::binary(&[q0, 1.0]).unwrap();
        for narrative in Narrative::ALL {
            let fast = best_equilibrium_value(&env, &signal, narrative).unwrap();
            let full = find_equilibria(&env, &signal, narrative).unwrap();
            match (fast, full.best()) {
                (Some(f), Some(b)) => assert!((f - b.utility).abs() < 1e-8),
                (None, None) => {}
                other => panic!("fast/full mismatch for {narrative}: {other:?}"),
            }
        }
    }
}
