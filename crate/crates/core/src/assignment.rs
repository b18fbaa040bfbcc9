//! Lower-level flow assignment: the expense-minimal solver and the two
//! general-cost rules (all-or-nothing with a switching margin, and the
//! binary logit split).
//!
//! The expense-minimal solver (`solve_lower`) and the general-cost rules are
//! distinct entry points and are never mixed: the former compares per-car
//! expenses, the latter compare gamma x time + expense.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::ServicePlan;
use crate::network::{effective_capacity, ArcId, Network};
use crate::pathgen::{DemandContext, Path};
use crate::scalar::{Scalar, TotalOrd};

/// A travel cost split into its time and money parts, with the combined
/// total = gamma x time + expense.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GeneralCost<F: Scalar = f64> {
    pub time: F,
    pub expense: F,
    pub total: F,
}

/// Combines a travel time and a monetary expense into a general cost.
pub fn general_cost<F: Scalar>(time: F, expense: F, gamma: F) -> GeneralCost<F> {
    debug_assert!(time >= F::zero() && expense >= F::zero());
    GeneralCost {
        time,
        expense,
        total: gamma * time + expense,
    }
}

fn path_general_cost<F: Scalar>(path: &Path<F>, gamma: F) -> GeneralCost<F> {
    general_cost(path.travel_time, path.unit_cost, gamma)
}

/// Minimum general cost over a demand's rail path set, with the index of
/// the achieving path. `None` when the set is empty (rail infeasible).
///
/// Ties resolve to the earliest path in the deterministic set order.
pub fn rail_general_cost<F: Scalar>(
    paths: &[Path<F>],
    gamma: F,
) -> Option<(usize, GeneralCost<F>)> {
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| (i, path_general_cost(p, gamma)))
        .min_by_key(|(i, g)| (TotalOrd(g.total), *i))
}

/// Mode outcome for one demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Rail,
    Highway,
    /// Logit only: the volume splits between the best rail path and highway.
    Split,
}

/// Assignment outcome for one demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DemandDecision<F: Scalar = f64> {
    pub demand_index: usize,
    pub mode: ModeChoice,
    /// Index into the demand's rail path set; present iff any rail volume
    /// flows.
    pub rail_path: Option<usize>,
    /// Per-car expense of the chosen rail path (`None` when no rail flow).
    pub rail_unit_cost: Option<F>,
    /// Cars per day moved by rail.
    pub rail_volume: F,
    /// Rail choice probability; set by the logit rule only.
    pub rail_probability: Option<F>,
}

/// A lower-level solution: one decision per demand, the daily loads it puts
/// on rail arcs, and the expense objective value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LMSolution<F: Scalar = f64> {
    pub decisions: Vec<DemandDecision<F>>,
    pub arc_loads: BTreeMap<ArcId, F>,
    /// Total transport expense (sum of chosen per-car expenses times
    /// volume; the expectation of that sum under a logit split).
    pub total_cost: F,
    /// True when capacity forced some demand off its unconstrained best
    /// option.
    pub heuristic: bool,
}

impl<F: Scalar> LMSolution<F> {
    /// Arcs whose load exceeds the capacity enforced under `plan`, with
    /// (load, capacity).
    pub fn capacity_violations(
        &self,
        network: &Network<F>,
        plan: &ServicePlan,
    ) -> Vec<(ArcId, F, F)> {
        let mut out = Vec::new();
        for (arc_id, &load) in &self.arc_loads {
            if let Some(arc) = network.arc(arc_id) {
                let cap = effective_capacity(arc, plan, network);
                if load > cap {
                    out.push((arc_id.clone(), load, cap));
                }
            }
        }
        out
    }
}

fn accumulate_loads<F: Scalar>(
    loads: &mut BTreeMap<ArcId, F>,
    path: &Path<F>,
    volume: F,
) {
    for arc in &path.arcs {
        let entry = loads.entry(arc.clone()).or_insert_with(F::zero);
        *entry = *entry + volume;
    }
}

/// All-or-nothing assignment: a demand moves entirely by rail iff its best
/// rail general cost is strictly below the highway general cost minus the
/// switching margin `delta`; ties and everything else go to highway.
pub fn assign_aon<F: Scalar>(
    contexts: &[DemandContext<F>],
    gamma: F,
    delta: F,
) -> LMSolution<F> {
    assert!(delta >= F::zero(), "delta must be >= 0");
    let mut decisions = Vec::with_capacity(contexts.len());
    let mut arc_loads = BTreeMap::new();
    let mut total_cost = F::zero();
    for ctx in contexts {
        let highway = path_general_cost(&ctx.highway, gamma);
        let rail = rail_general_cost(&ctx.rail_paths, gamma);
        let take_rail = match &rail {
            Some((_, g)) => g.total < highway.total - delta,
            None => false,
        };
        if take_rail {
            let (idx, g) = rail.unwrap();
            let path = &ctx.rail_paths[idx];
            accumulate_loads(&mut arc_loads, path, ctx.demand.volume);
            total_cost = total_cost + g.expense * ctx.demand.volume;
            decisions.push(DemandDecision {
                demand_index: ctx.demand_index,
                mode: ModeChoice::Rail,
                rail_path: Some(idx),
                rail_unit_cost: Some(g.expense),
                rail_volume: ctx.demand.volume,
                rail_probability: None,
            });
        } else {
            total_cost = total_cost + highway.expense * ctx.demand.volume;
            decisions.push(DemandDecision {
                demand_index: ctx.demand_index,
                mode: ModeChoice::Highway,
                rail_path: None,
                rail_unit_cost: None,
                rail_volume: F::zero(),
                rail_probability: None,
            });
        }
    }
    LMSolution {
        decisions,
        arc_loads,
        total_cost,
        heuristic: false,
    }
}

/// Binary logit probability that a demand chooses rail, from the two
/// general costs. Utilities are the negated totals scaled by `theta`;
/// the softmax is evaluated with max-subtraction so extreme costs neither
/// overflow nor underflow. An infeasible rail side yields probability 0.
pub fn logit_probability<F: Scalar>(
    rail: Option<&GeneralCost<F>>,
    highway: &GeneralCost<F>,
    theta: F,
) -> F {
    assert!(theta > F::zero(), "theta must be > 0");
    let Some(rail) = rail else {
        return F::zero();
    };
    let u_rail = -(theta * rail.total);
    let u_highway = -(theta * highway.total);
    let m = u_rail.max(u_highway);
    let e_rail = (u_rail - m).exp();
    let e_highway = (u_highway - m).exp();
    e_rail / (e_rail + e_highway)
}

/// Logit assignment: each demand splits between its best rail path (by
/// general cost) and highway in proportion to the binary logit choice
/// probability. Capacities are not consulted, matching the sufficiency
/// assumption behind the rule.
pub fn assign_logit<F: Scalar>(
    contexts: &[DemandContext<F>],
    gamma: F,
    theta: F,
) -> LMSolution<F> {
    let mut decisions = Vec::with_capacity(contexts.len());
    let mut arc_loads = BTreeMap::new();
    let mut total_cost = F::zero();
    for ctx in contexts {
        let highway = path_general_cost(&ctx.highway, gamma);
        let rail = rail_general_cost(&ctx.rail_paths, gamma);
        let p = logit_probability(rail.as_ref().map(|(_, g)| g), &highway, theta);
        match rail {
            Some((idx, g)) => {
                let rail_volume = ctx.demand.volume * p;
                let path = &ctx.rail_paths[idx];
                accumulate_loads(&mut arc_loads, path, rail_volume);
                total_cost = total_cost
                    + (g.expense * p + highway.expense * (F::one() - p)) * ctx.demand.volume;
                decisions.push(DemandDecision {
                    demand_index: ctx.demand_index,
                    mode: ModeChoice::Split,
                    rail_path: Some(idx),
                    rail_unit_cost: Some(g.expense),
                    rail_volume,
                    rail_probability: Some(p),
                });
            }
            None => {
                total_cost = total_cost + highway.expense * ctx.demand.volume;
                decisions.push(DemandDecision {
                    demand_index: ctx.demand_index,
                    mode: ModeChoice::Highway,
                    rail_path: None,
                    rail_unit_cost: None,
                    rail_volume: F::zero(),
                    rail_probability: Some(F::zero()),
                });
            }
        }
    }
    LMSolution {
        decisions,
        arc_loads,
        total_cost,
        heuristic: false,
    }
}

/// Per-demand option in the deterministic scan order: rail paths in path-set
/// order first, then highway. Rail therefore wins exact expense ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum DemandOption {
    RailPath(usize),
    Highway,
}

pub(crate) fn option_expense<F: Scalar>(ctx: &DemandContext<F>, opt: DemandOption) -> F {
    match opt {
        DemandOption::RailPath(i) => ctx.rail_paths[i].unit_cost,
        DemandOption::Highway => ctx.highway.unit_cost,
    }
}

/// The cheapest option of a demand by expense, scanning rail paths in set
/// order and highway last, keeping the first strict minimum.
fn unconstrained_best<F: Scalar>(ctx: &DemandContext<F>) -> DemandOption {
    let mut best = DemandOption::Highway;
    let mut best_expense = ctx.highway.unit_cost;
    for (i, path) in ctx.rail_paths.iter().enumerate().rev() {
        if path.unit_cost <= best_expense {
            best = DemandOption::RailPath(i);
            best_expense = path.unit_cost;
        }
    }
    best
}

fn decision_for<F: Scalar>(ctx: &DemandContext<F>, opt: DemandOption) -> DemandDecision<F> {
    match opt {
        DemandOption::RailPath(i) => DemandDecision {
            demand_index: ctx.demand_index,
            mode: ModeChoice::Rail,
            rail_path: Some(i),
            rail_unit_cost: Some(ctx.rail_paths[i].unit_cost),
            rail_volume: ctx.demand.volume,
            rail_probability: None,
        },
        DemandOption::Highway => DemandDecision {
            demand_index: ctx.demand_index,
            mode: ModeChoice::Highway,
            rail_path: None,
            rail_unit_cost: None,
            rail_volume: F::zero(),
            rail_probability: None,
        },
    }
}

/// Builds a solution from per-demand option choices.
fn solution_from_choices<F: Scalar>(
    contexts: &[DemandContext<F>],
    choices: &[DemandOption],
    heuristic: bool,
) -> LMSolution<F> {
    let mut decisions = Vec::with_capacity(contexts.len());
    let mut arc_loads = BTreeMap::new();
    let mut total_cost = F::zero();
    for (ctx, &opt) in contexts.iter().zip(choices) {
        total_cost = total_cost + option_expense(ctx, opt) * ctx.demand.volume;
        if let DemandOption::RailPath(i) = opt {
            accumulate_loads(&mut arc_loads, &ctx.rail_paths[i], ctx.demand.volume);
        }
        decisions.push(decision_for(ctx, opt));
    }
    LMSolution {
        decisions,
        arc_loads,
        total_cost,
        heuristic,
    }
}

/// Expense-minimal integral assignment.
///
/// Uncapacitated, the problem separates per demand and the result is exact.
/// When an arc capacity binds, demands are reassigned greedily in descending
/// order of (highway expense - best rail expense) x volume: each takes its
/// cheapest rail path that still fits, falling back to highway, and the
/// solution is flagged `heuristic`.
pub fn solve_lower<F: Scalar>(
    contexts: &[DemandContext<F>],
    network: &Network<F>,
    plan: &ServicePlan,
) -> LMSolution<F> {
    let best: Vec<DemandOption> = contexts.iter().map(unconstrained_best).collect();
    let unconstrained = solution_from_choices(contexts, &best, false);
    if unconstrained.capacity_violations(network, plan).is_empty() {
        return unconstrained;
    }

    // remaining capacity per arc
    let mut remaining: BTreeMap<ArcId, F> = BTreeMap::new();
    for arc in &network.arcs {
        remaining.insert(arc.id.clone(), effective_capacity(arc, plan, network));
    }
    let fits = |remaining: &BTreeMap<ArcId, F>, path: &Path<F>, volume: F| {
        path.arcs
            .iter()
            .all(|a| remaining.get(a).is_none_or(|&r| volume <= r))
    };
    // capacity pressure a path would add; separates equal-expense paths so
    // the greedy spends scarce arcs last
    let pressure = |remaining: &BTreeMap<ArcId, F>, path: &Path<F>, volume: F| {
        path.arcs.iter().fold(F::zero(), |acc, a| {
            match remaining.get(a) {
                Some(&r) if r > F::zero() => acc + volume / r,
                _ => acc,
            }
        })
    };
    // cheapest fitting rail option no dearer than highway, ties by pressure
    let best_fitting = |remaining: &BTreeMap<ArcId, F>, ctx: &DemandContext<F>| {
        (0..ctx.rail_paths.len())
            .filter(|&p| ctx.rail_paths[p].unit_cost <= ctx.highway.unit_cost)
            .filter(|&p| fits(remaining, &ctx.rail_paths[p], ctx.demand.volume))
            .min_by_key(|&p| {
                let path = &ctx.rail_paths[p];
                (
                    TotalOrd(path.unit_cost),
                    TotalOrd(pressure(remaining, path, ctx.demand.volume)),
                    p,
                )
            })
    };
    let claim = |remaining: &mut BTreeMap<ArcId, F>, path: &Path<F>, volume: F| {
        for arc in &path.arcs {
            if let Some(r) = remaining.get_mut(arc) {
                *r = *r - volume;
            }
        }
    };
    let release = |remaining: &mut BTreeMap<ArcId, F>, path: &Path<F>, volume: F| {
        for arc in &path.arcs {
            if let Some(r) = remaining.get_mut(arc) {
                *r = *r + volume;
            }
        }
    };

    // largest rail savings first
    let mut order: Vec<usize> = (0..contexts.len()).collect();
    order.sort_by_key(|&i| {
        let ctx = &contexts[i];
        let best_rail = ctx
            .rail_paths
            .iter()
            .map(|p| TotalOrd(p.unit_cost))
            .min()
            .unwrap_or(TotalOrd(F::infinity()));
        let savings = (ctx.highway.unit_cost - best_rail.0) * ctx.demand.volume;
        (std::cmp::Reverse(TotalOrd(savings)), i)
    });

    let mut choices = vec![DemandOption::Highway; contexts.len()];
    for &i in &order {
        let ctx = &contexts[i];
        if let Some(p) = best_fitting(&remaining, ctx) {
            claim(&mut remaining, &ctx.rail_paths[p], ctx.demand.volume);
            choices[i] = DemandOption::RailPath(p);
        }
    }

    // strict-improvement fixpoint: first re-seat single demands, then look
    // for a paying two-demand exchange (one demand steps onto a dearer path
    // to free capacity worth more to another)
    'improve: for _ in 0..contexts.len() * 4 {
        let mut improved = false;
        for &i in &order {
            let ctx = &contexts[i];
            if let DemandOption::RailPath(p) = choices[i] {
                release(&mut remaining, &ctx.rail_paths[p], ctx.demand.volume);
            }
            let current_expense = option_expense(ctx, choices[i]);
            let candidate = best_fitting(&remaining, ctx);
            let better = candidate
                .map(|p| ctx.rail_paths[p].unit_cost < current_expense)
                .unwrap_or(false);
            let next = if better {
                improved = true;
                DemandOption::RailPath(candidate.unwrap())
            } else {
                choices[i]
            };
            if let DemandOption::RailPath(p) = next {
                claim(&mut remaining, &ctx.rail_paths[p], ctx.demand.volume);
            }
            choices[i] = next;
        }
        if improved {
            continue;
        }

        for &i in &order {
            let ctx_i = &contexts[i];
            let expense_i = option_expense(ctx_i, choices[i]);
            if let DemandOption::RailPath(p) = choices[i] {
                release(&mut remaining, &ctx_i.rail_paths[p], ctx_i.demand.volume);
            }
            let mut alternatives: Vec<DemandOption> = (0..ctx_i.rail_paths.len())
                .filter(|&p| ctx_i.rail_paths[p].unit_cost <= ctx_i.highway.unit_cost)
                .filter(|&p| fits(&remaining, &ctx_i.rail_paths[p], ctx_i.demand.volume))
                .map(DemandOption::RailPath)
                .collect();
            alternatives.push(DemandOption::Highway);
            for alt in alternatives {
                if alt == choices[i] {
                    continue;
                }
                let delta_i = (option_expense(ctx_i, alt) - expense_i) * ctx_i.demand.volume;
                if let DemandOption::RailPath(p) = alt {
                    claim(&mut remaining, &ctx_i.rail_paths[p], ctx_i.demand.volume);
                }
                for &j in &order {
                    if j == i {
                        continue;
                    }
                    let ctx_j = &contexts[j];
                    let expense_j = option_expense(ctx_j, choices[j]);
                    if let DemandOption::RailPath(p) = choices[j] {
                        release(&mut remaining, &ctx_j.rail_paths[p], ctx_j.demand.volume);
                    }
                    let candidate = best_fitting(&remaining, ctx_j);
                    let delta_j = candidate
                        .map(|p| (ctx_j.rail_paths[p].unit_cost - expense_j) * ctx_j.demand.volume)
                        .unwrap_or(F::zero());
                    if let Some(p) = candidate {
                        if delta_i + delta_j < F::zero() {
                            claim(&mut remaining, &ctx_j.rail_paths[p], ctx_j.demand.volume);
                            choices[j] = DemandOption::RailPath(p);
                            choices[i] = alt;
                            continue 'improve;
                        }
                    }
                    if let DemandOption::RailPath(p) = choices[j] {
                        claim(&mut remaining, &ctx_j.rail_paths[p], ctx_j.demand.volume);
                    }
                }
                if let DemandOption::RailPath(p) = alt {
                    release(&mut remaining, &ctx_i.rail_paths[p], ctx_i.demand.volume);
                }
            }
            if let DemandOption::RailPath(p) = choices[i] {
                claim(&mut remaining, &ctx_i.rail_paths[p], ctx_i.demand.volume);
            }
        }
        break;
    }

    let diverted = choices.iter().zip(&best).any(|(c, b)| c != b);
    solution_from_choices(contexts, &choices, diverted)
}
