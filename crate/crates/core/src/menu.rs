//! Monopoly menu design for the heterogeneous effort-game family.
//!
//! Consumers differ in the action cost c ~ F on [0, 1]. Feasible signal
//! functions satisfy Pr(s=1|t=1) = 1 and Pr(s=1|t=0) = q; consumers play
//! a = 0 after s = 0, so a type's only action choice is a(1). Because all
//! narratives are fit to the population joint distribution, each type's
//! beliefs depend on aggregate behavior (the data externality).

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::{Narrative, OPT_TOL};
use crate::typedist::TypeGrid;

/// One entry of the platform's menu: a restricted signal function (its q)
/// paired with a narrative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MenuItem {
    /// Pr(s=1 | t=0); Pr(s=1 | t=1) is fixed at 1 in this family.
    pub q: f64,
    pub narrative: Narrative,
}

/// Population action frequencies conditional on the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateBehavior {
    /// p(a=1 | t=1).
    pub act_given_state1: f64,
    /// p(a=1 | t=0).
    pub act_given_state0: f64,
}

impl AggregateBehavior {
    pub fn zero() -> Self {
        AggregateBehavior {
            act_given_state1: 0.0,
            act_given_state0: 0.0,
        }
    }
}

/// Per-node menu choice: item index and the action taken after s = 1.
#[derive(Debug, Clone, Serialize)]
pub struct Assignment {
    pub choices: Vec<(usize, bool)>,
}

/// Mass of action takers under this aggregate: p(a=1) with prior 1/2.
fn action_mass(agg: &AggregateBehavior) -> f64 {
    (agg.act_given_state1 + agg.act_given_state0) / 2.0
}

/// Narrative-based success belief p_N(y=1 | t=1, a1) implied by the
/// aggregate, for the effort-game kernel p(y=1|t,a) = a(2-t)/2.
fn believed_success(narrative: Narrative, q: f64, a1: bool, agg: &AggregateBehavior) -> f64 {
    let s1 = agg.act_given_state1;
    let s0 = agg.act_given_state0;
    match narrative {
        Narrative::True => {
            if a1 {
                0.5
            } else {
                0.0
            }
        }
        Narrative::Empowering => {
            if a1 {
                if s1 + s0 > 1e-300 {
                    (s1 / 2.0 + s0) / (s1 + s0)
                } else {
                    // Zero-mass conditioning: the contemplating type's own
                    // (infinitesimal) a = s play generates the belief.
                    (0.5 + q) / (1.0 + q)
                }
            } else {
                // y = 1 requires a = 1, so p(y=1 | a=0) = 0.
                0.0
            }
        }
        Narrative::Fatalistic => s1 / 2.0,
        Narrative::Denial => (s1 / 2.0 + s0) / 2.0,
    }
}

/// Ex-ante utility of type c from (item, a(1)) given aggregate behavior:
/// p_N(y=1|t=1,a(1))/2 − c(1+q)/2·a(1).
///
/// EMPOWERING with a(1) = 1 and zero aggregate action mass is a
/// conditioning error; callers that tremble use `type_utility_trembled`.
pub fn type_utility(c: f64, item: &MenuItem, a1: bool, agg: &AggregateBehavior) -> Result<f64> {
    if item.narrative == Narrative::Empowering && a1 && action_mass(agg) <= 1e-300 {
        return Err(ModelError::NullConditioningCell {
            cell: "p(a=1) = 0 while fitting the action-only narrative".into(),
        });
    }
    Ok(type_utility_trembled(c, item, a1, agg))
}

/// `type_utility` with the zero-mass EMPOWERING case resolved by the
/// self-generated belief (0.5+q)/(1+q).
pub fn type_utility_trembled(c: f64, item: &MenuItem, a1: bool, agg: &AggregateBehavior) -> f64 {
    let p = believed_success(item.narrative, item.q, a1, agg);
    let cost = if a1 { c * (1.0 + item.q) / 2.0 } else { 0.0 };
    p / 2.0 - cost
}

/// Aggregate action frequencies generated by an assignment on the grid.
pub fn aggregate_behavior(
    menu: &[MenuItem],
    assignment: &Assignment,
    grid: &TypeGrid,
) -> Result<AggregateBehavior> {
    if assignment.choices.len() != grid.n_nodes() {
        return Err(ModelError::DimensionMismatch(format!(
            "assignment covers {} nodes, grid has {}",
            assignment.choices.len(),
            grid.n_nodes()
        )));
    }
    let mut s1 = 0.0;
    let mut s0 = 0.0;
    for (&(item, a1), &w) in assignment.choices.iter().zip(grid.weights()) {
        let item = menu.get(item).ok_or_else(|| {
            ModelError::DimensionMismatch(format!("assignment references missing item {item}"))
        })?;
        if a1 {
            // t=1 always produces s=1; t=0 produces s=1 with probability q.
            s1 += w;
            s0 += w * item.q;
        }
    }
    Ok(AggregateBehavior {
        act_given_state1: s1,
        act_given_state0: s0,
    })
}

/// An incentive-compatibility failure at one grid node.
#[derive(Debug, Clone, Serialize)]
pub struct IcViolation {
    pub node: usize,
    pub cost: f64,
    pub better_item: usize,
    pub better_action: bool,
    pub gain: f64,
}

/// Rank used for deterministic tie-breaks across items.
fn narrative_rank(n: Narrative) -> usize {
    Narrative::ALL.iter().position(|&m| m == n).unwrap()
}

/// Checks every grid node against every (item, action) alternative under
/// the aggregate the assignment itself generates. Gains above 1e-9 are
/// violations; this covers both menu choice and action optimality.
pub fn check_incentive_compatibility(
    menu: &[MenuItem],
    assignment: &Assignment,
    grid: &TypeGrid,
) -> Result<Vec<IcViolation>> {
    let agg = aggregate_behavior(menu, assignment, grid)?;
    let mut violations = Vec::new();
    for (node, &(chosen, a1)) in assignment.choices.iter().enumerate() {
        let c = grid.nodes()[node];
        let own = type_utility_trembled(c, &menu[chosen], a1, &agg);
        for (j, item) in menu.iter().enumerate() {
            for alt_a1 in [false, true] {
                let alt = type_utility_trembled(c, item, alt_a1, &agg);
                if alt > own + 1e-9 {
                    violations.push(IcViolation {
                        node,
                        cost: c,
                        better_item: j,
                        better_action: alt_a1,
                        gain: alt - own,
                    });
                }
            }
        }
    }
    Ok(violations)
}

/// Narrative sold to the inactive (a ≡ 0) segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PassiveNarrative {
    Fatalistic,
    Denial,
}

impl PassiveNarrative {
    pub fn narrative(self) -> Narrative {
        match self {
            PassiveNarrative::Fatalistic => Narrative::Fatalistic,
            PassiveNarrative::Denial => Narrative::Denial,
        }
    }
}

/// One family of the structured menu search: an action-narrative item for
/// low types, optionally a true-narrative item for middle types, and one
/// passive item for high types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MenuBranch {
    pub passive: PassiveNarrative,
    pub with_true_item: bool,
}

impl MenuBranch {
    pub const ALL: [MenuBranch; 4] = [
        MenuBranch {
            passive: PassiveNarrative::Denial,
            with_true_item: false,
        },
        MenuBranch {
            passive: PassiveNarrative::Fatalistic,
            with_true_item: false,
        },
        MenuBranch {
            passive: PassiveNarrative::Denial,
            with_true_item: true,
        },
        MenuBranch {
            passive: PassiveNarrative::Fatalistic,
            with_true_item: true,
        },
    ];
}

/// Solved branch candidate before reporting.
#[derive(Debug, Clone)]
struct BranchSolution {
    cutoff_low: f64,
    cutoff_high: f64,
    aggregate: AggregateBehavior,
    value: f64,
    iterations: usize,
}

/// Root of a strictly decreasing function on [0, 1], clamped to the ends
/// when there is no sign change.
fn bisect_decreasing(f: impl Fn(f64) -> f64) -> f64 {
    if f(0.0) <= 0.0 {
        return 0.0;
    }
    if f(1.0) >= 0.0 {
        return 1.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_MAX_ITERS: usize = 10_000;

/// Solves the externality fixed point for one branch at fixed (q_a, q_t):
/// given aggregate behavior, cutoffs come from the indifference equations
/// by bisection; the aggregate implied by the cutoffs is fed back with
/// damping until it settles.
fn solve_branch(grid: &TypeGrid, branch: MenuBranch, q_a: f64, q_t: f64) -> Result<BranchSolution> {
    let cdf = grid.cdf();
    let mut agg = AggregateBehavior {
        act_given_state1: 0.5,
        act_given_state0: 0.5 * q_a,
    };
    let empower = MenuItem {
        q: q_a,
        narrative: Narrative::Empowering,
    };
    let truth = MenuItem {
        q: q_t,
        narrative: Narrative::True,
    };
    let passive = MenuItem {
        q: q_a,
        narrative: branch.passive.narrative(),
    };
    let mut cutoff_low;
    let mut cutoff_high;
    let mut iterations = 0;
    for iter in 0..FIXED_POINT_MAX_ITERS {
        iterations = iter + 1;
        let u_empower = |c: f64| type_utility_trembled(c, &empower, true, &agg);
        let u_truth = |c: f64| type_utility_trembled(c, &truth, true, &agg);
        let u_passive = type_utility_trembled(0.0, &passive, false, &agg);
        let (low, high) = if branch.with_true_item && q_t < q_a {
            let c1 = bisect_decreasing(|c| u_empower(c) - u_truth(c));
            let c2 = bisect_decreasing(|c| u_truth(c) - u_passive);
            if c1 <= c2 {
                (c1, c2)
            } else {
                // The middle item is never on the utility envelope.
                let c = bisect_decreasing(|c| u_empower(c) - u_passive);
                (c, c)
            }
        } else {
            let c = bisect_decreasing(|c| u_empower(c) - u_passive);
            (c, c)
        };
        let s1 = cdf.eval(high);
        let s0 = q_a * cdf.eval(low) + q_t * (cdf.eval(high) - cdf.eval(low));
        let d1 = s1 - agg.act_given_state1;
        let d0 = s0 - agg.act_given_state0;
        agg.act_given_state1 += FIXED_POINT_DAMPING * d1;
        agg.act_given_state0 += FIXED_POINT_DAMPING * d0;
        cutoff_low = low;
        cutoff_high = high;
        if d1.abs() < FIXED_POINT_TOL && d0.abs() < FIXED_POINT_TOL {
            // Use the exactly consistent aggregate for reporting.
            agg.act_given_state1 = s1;
            agg.act_given_state0 = s0;
            let value = grid.integrate(|c| {
                if c <= cutoff_low {
                    type_utility_trembled(c, &empower, true, &agg)
                } else if c <= cutoff_high {
                    type_utility_trembled(c, &truth, true, &agg)
                } else {
                    type_utility_trembled(c, &passive, false, &agg)
                }
            });
            return Ok(BranchSolution {
                cutoff_low,
                cutoff_high,
                aggregate: agg,
                value,
                iterations,
            });
        }
    }
    Err(ModelError::NonConvergence(format!(
        "menu externality fixed point at q_a={q_a}, q_t={q_t} \
         ({branch:?}) after {iterations} iterations"
    )))
}

/// Solved menu: items, cutoffs, aggregate behavior and utility.
#[derive(Debug, Clone, Serialize)]
pub struct MenuReport {
    pub branch: MenuBranch,
    pub menu: Vec<MenuItem>,
    /// Types in [0, cutoff_low] take the action-narrative item with a = s.
    pub cutoff_low: f64,
    /// Types above cutoff_high play a ≡ 0 under the passive narrative.
    pub cutoff_high: f64,
    pub aggregate: AggregateBehavior,
    pub aggregate_utility: f64,
    pub assignment: Assignment,
    pub ic_violations: usize,
    pub fixed_point_iterations: usize,
    /// Best value of the structure-free brute-force search, when run.
    pub oracle_value: Option<f64>,
}

const MENU_GRID_STEP: f64 = 0.005;
const MENU_REFINE_ITERS: usize = 40;

fn golden_max(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
        let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Optimizes one branch of the structured family: grid step 0.005 over the
/// item parameters, then golden-section refinement around the grid argmax.
pub fn optimize_menu_in(grid: &TypeGrid, branch: MenuBranch) -> Result<MenuReport> {
    let steps = (1.0 / MENU_GRID_STEP).round() as usize;
    let mut best: Option<(f64, f64, f64)> = None; // (q_a, q_t, value)
    for i in 0..=steps {
        let q_a = i as f64 / steps as f64;
        let q_t_range: Vec<f64> = if branch.with_true_item {
            (0..i).map(|j| j as f64 / steps as f64).collect()
        } else {
            vec![0.0]
        };
        for q_t in q_t_range {
            let sol = solve_branch(grid, branch, q_a, q_t)?;
            let improves = best.map(|(_, _, v)| sol.value > v + OPT_TOL).unwrap_or(true);
            if improves {
                best = Some((q_a, q_t, sol.value));
            }
        }
    }
    let (mut q_a, mut q_t, mut value) =
        best.ok_or_else(|| ModelError::NonConvergence("empty menu search".into()))?;
    // Coordinate refinement around the grid argmax.
    for _ in 0..2 {
        let (x, v) = golden_max(
            (q_a - MENU_GRID_STEP).max(if branch.with_true_item { q_t } else { 0.0 }),
            (q_a + MENU_GRID_STEP).min(1.0),
            MENU_REFINE_ITERS,
            |x| {
                solve_branch(grid, branch, x, q_t)
                    .map(|s| s.value)
                    .unwrap_or(f64::NEG_INFINITY)
            },
        );
        if v > value + OPT_TOL {
            q_a = x;
            value = v;
        }
        if branch.with_true_item {
            let (x, v) = golden_max(
                (q_t - MENU_GRID_STEP).max(0.0),
                (q_t + MENU_GRID_STEP).min(q_a),
                MENU_REFINE_ITERS,
                |x| {
                    solve_branch(grid, branch, q_a, x)
                        .map(|s| s.value)
                        .unwrap_or(f64::NEG_INFINITY)
                },
            );
            if v > value + OPT_TOL {
                q_t = x;
                value = v;
            }
        }
    }
    let sol = solve_branch(grid, branch, q_a, q_t)?;
    build_report(grid, branch, q_a, q_t, sol)
}

fn build_report(
    grid: &TypeGrid,
    branch: MenuBranch,
    q_a: f64,
    q_t: f64,
    sol: BranchSolution,
) -> Result<MenuReport> {
    let mut menu = vec![MenuItem {
        q: q_a,
        narrative: Narrative::Empowering,
    }];
    let has_middle = branch.with_true_item && sol.cutoff_high > sol.cutoff_low;
    if has_middle {
        menu.push(MenuItem {
            q: q_t,
            narrative: Narrative::True,
        });
    }
    // The passive item's signal is payoff-irrelevant (its holder ignores
    // s); it is reported with the action item's q, matching the structure
    // of the two-strategy optimum.
    menu.push(MenuItem {
        q: q_a,
        narrative: branch.passive.narrative(),
    });
    let passive_idx = menu.len() - 1;
    let choices: Vec<(usize, bool)> = grid
        .nodes()
        .iter()
        .map(|&c| {
            if c <= sol.cutoff_low {
                (0, true)
            } else if has_middle && c <= sol.cutoff_high {
                (1, true)
            } else {
                (passive_idx, false)
            }
        })
        .collect();
    let assignment = Assignment { choices };
    let ic = check_incentive_compatibility(&menu, &assignment, grid)?;
    Ok(MenuReport {
        branch,
        menu,
        cutoff_low: sol.cutoff_low,
        cutoff_high: sol.cutoff_high,
        aggregate: sol.aggregate,
        aggregate_utility: sol.value,
        assignment,
        ic_violations: ic.len(),
        fixed_point_iterations: sol.iterations,
        oracle_value: None,
    })
}

/// Full menu optimization: searches every structured branch, keeps the
/// best, and cross-checks it against the structure-free brute-force search
/// at coarse resolution.
pub fn optimize_menu(grid: &TypeGrid) -> Result<MenuReport> {
    let mut best: Option<MenuReport> = None;
    for branch in MenuBranch::ALL {
        let report = optimize_menu_in(grid, branch)?;
        let improves = best
            .as_ref()
            .map(|b| report.aggregate_utility > b.aggregate_utility + OPT_TOL)
            .unwrap_or(true);
        if improves {
            best = Some(report);
        }
    }
    let mut best = best.expect("at least one branch solved");
    let oracle = brute_force_menu_value(grid.cdf().clone())?;
    if best.aggregate_utility < oracle - 1e-3 {
        return Err(ModelError::NonConvergence(format!(
            "structured menu optimum {} fell below the brute-force bound {}",
            best.aggregate_utility, oracle
        )));
    }
    best.oracle_value = Some(oracle);
    Ok(best)
}

/// Structure-free brute-force search: menus with at most one item per
/// narrative, q on a 0.1 grid, consumer choice resolved by a damped
/// fixed point on aggregate behavior over a 101-node type grid. Returns
/// the best aggregate utility over menus whose fixed point converges.
pub fn brute_force_menu_value(cdf: crate::typedist::Cdf) -> Result<f64> {
    let grid = TypeGrid::new(cdf, 101)?;
    let q_values: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    // Per narrative: None (absent) or an index into q_values.
    let mut best = f64::NEG_INFINITY;
    let options = q_values.len() + 1;
    let total = options.pow(4);
    for code in 1..total {
        let mut digits = [0usize; 4];
        let mut rest = code;
        for d in &mut digits {
            *d = rest % options;
            rest /= options;
        }
        let menu: Vec<MenuItem> = Narrative::ALL
            .iter()
            .zip(digits)
            .filter(|&(_, d)| d > 0)
            .map(|(&narrative, d)| MenuItem {
                q: q_values[d - 1],
                narrative,
            })
            .collect();
        if menu.is_empty() {
            continue;
        }
        if let Some(value) = brute_force_menu_fixed_point(&menu, &grid) {
            if value > best {
                best = value;
            }
        }
    }
    Ok(best)
}

/// Consumer-choice fixed point for one brute-force menu; None when the
/// damped iteration fails to settle.
fn brute_force_menu_fixed_point(menu: &[MenuItem], grid: &TypeGrid) -> Option<f64> {
    let mut agg = AggregateBehavior {
        act_given_state1: 0.5,
        act_given_state0: 0.25,
    };
    let mut choices = vec![(0usize, false); grid.n_nodes()];
    for _ in 0..300 {
        for (node, &c) in grid.nodes().iter().enumerate() {
            choices[node] = best_choice(c, menu, &agg);
        }
        let mut s1 = 0.0;
        let mut s0 = 0.0;
        for (&(item, a1), &w) in choices.iter().zip(grid.weights()) {
            if a1 {
                s1 += w;
                s0 += w * menu[item].q;
            }
        }
        let d1 = s1 - agg.act_given_state1;
        let d0 = s0 - agg.act_given_state0;
        agg.act_given_state1 += FIXED_POINT_DAMPING * d1;
        agg.act_given_state0 += FIXED_POINT_DAMPING * d0;
        if d1.abs() < 1e-9 && d0.abs() < 1e-9 {
            let value = grid.integrate(|c| {
                let (item, a1) = best_choice(c, menu, &agg);
                type_utility_trembled(c, &menu[item], a1, &agg)
            });
            return Some(value);
        }
    }
    None
}

/// Deterministic best (item, action) for a type: maximal utility, ties
/// toward lower q, then narrative order.
fn best_choice(c: f64, menu: &[MenuItem], agg: &AggregateBehavior) -> (usize, bool) {
    let mut ranked: Vec<usize> = (0..menu.len()).collect();
    ranked.sort_by(|&i, &j| {
        menu[i]
            .q
            .partial_cmp(&menu[j].q)
            .unwrap()
            .then(narrative_rank(menu[i].narrative).cmp(&narrative_rank(menu[j].narrative)))
    });
    let mut best = (ranked[0], false);
    let mut best_u = f64::NEG_INFINITY;
    for &i in &ranked {
        for a1 in [false, true] {
            let u = type_utility_trembled(c, &menu[i], a1, agg);
            if u > best_u + 1e-12 {
                best = (i, a1);
                best_u = u;
            }
        }
    }
    best
}
