//! Independent brute-force references used by tests, acceptance checks and
//! the `--oracle` CLI flags. Deliberately simple and slow: these share the
//! path generator with the main solvers (the path set defines the problem)
//! but redo every choice, objective and dominance computation on their own.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assignment::{DemandDecision, GeneralCost, LMSolution, ModeChoice};
use crate::design::{
    AssignmentRule, DesignError, ObjectivePoint, SearchConfig, ServicePlan,
};
use crate::network::{effective_capacity, ArcId, Network};
use crate::pathgen::{build_demand_contexts, DemandContext};
use crate::scalar::{Scalar, TotalOrd};
use crate::scenario::TariffTable;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{combinations} assignment combinations exceed the oracle limit {limit}")]
    TooManyCombinations { combinations: f64, limit: f64 },
    #[error("{count} candidate services exceed the oracle limit {limit}")]
    TooManyCandidates { count: usize, limit: usize },
    #[error(transparent)]
    Design(#[from] DesignError),
}

const COMBINATION_LIMIT: f64 = 1e6;
const CANDIDATE_LIMIT: usize = 14;

/// Exhaustive expense-minimal assignment: tries every combination of
/// per-demand options (each rail path, then highway), discards the ones
/// violating arc capacities, and keeps the first minimum-cost combination
/// in scan order. Exact; refuses above one million combinations.
pub fn brute_force_lm<F: Scalar>(
    contexts: &[DemandContext<F>],
    network: &Network<F>,
    plan: &ServicePlan,
) -> Result<LMSolution<F>, OracleError> {
    let combinations = contexts
        .iter()
        .fold(1f64, |acc, c| acc * (c.rail_paths.len() + 1) as f64);
    if combinations > COMBINATION_LIMIT {
        return Err(OracleError::TooManyCombinations {
            combinations,
            limit: COMBINATION_LIMIT,
        });
    }

    let capacity: BTreeMap<&ArcId, F> = network
        .arcs
        .iter()
        .map(|a| (&a.id, effective_capacity(a, plan, network)))
        .collect();

    // per-demand options: rail paths in set order, highway encoded last
    let option_count: Vec<usize> = contexts.iter().map(|c| c.rail_paths.len() + 1).collect();
    let mut combo: Vec<usize> = vec![0; contexts.len()];
    let mut best: Option<(F, Vec<usize>)> = None;
    loop {
        let mut cost = F::zero();
        let mut loads: BTreeMap<&ArcId, F> = BTreeMap::new();
        for (i, ctx) in contexts.iter().enumerate() {
            if combo[i] < ctx.rail_paths.len() {
                let path = &ctx.rail_paths[combo[i]];
                cost = cost + path.unit_cost * ctx.demand.volume;
                for arc in &path.arcs {
                    let e = loads.entry(arc).or_insert_with(F::zero);
                    *e = *e + ctx.demand.volume;
                }
            } else {
                cost = cost + ctx.highway.unit_cost * ctx.demand.volume;
            }
        }
        let feasible = loads
            .iter()
            .all(|(arc, &load)| capacity.get(*arc).is_none_or(|&cap| load <= cap));
        if feasible && best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, combo.clone()));
        }

        let mut pos = 0;
        loop {
            if pos == combo.len() {
                let (_, choice) = best.expect("all-highway combination is always feasible");
                return Ok(solution_from_combo(contexts, &choice));
            }
            combo[pos] += 1;
            if combo[pos] < option_count[pos] {
                break;
            }
            combo[pos] = 0;
            pos += 1;
        }
    }
}

fn solution_from_combo<F: Scalar>(
    contexts: &[DemandContext<F>],
    combo: &[usize],
) -> LMSolution<F> {
    let mut decisions = Vec::with_capacity(contexts.len());
    let mut arc_loads: BTreeMap<ArcId, F> = BTreeMap::new();
    let mut total_cost = F::zero();
    for (ctx, &choice) in contexts.iter().zip(combo) {
        if choice < ctx.rail_paths.len() {
            let path = &ctx.rail_paths[choice];
            total_cost = total_cost + path.unit_cost * ctx.demand.volume;
            for arc in &path.arcs {
                let e = arc_loads.entry(arc.clone()).or_insert_with(F::zero);
                *e = *e + ctx.demand.volume;
            }
            decisions.push(DemandDecision {
                demand_index: ctx.demand_index,
                mode: ModeChoice::Rail,
                rail_path: Some(choice),
                rail_unit_cost: Some(path.unit_cost),
                rail_volume: ctx.demand.volume,
                rail_probability: None,
            });
        } else {
            total_cost = total_cost + ctx.highway.unit_cost * ctx.demand.volume;
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

/// Lower level of the upper-level oracle, written against the rule
/// definitions rather than the production assignment code.
fn oracle_lower<F: Scalar>(
    contexts: &[DemandContext<F>],
    network: &Network<F>,
    plan: &ServicePlan,
    rule: AssignmentRule,
) -> Result<LMSolution<F>, OracleError> {
    let params = &network.params;
    match rule {
        AssignmentRule::LmExact => brute_force_lm(contexts, network, plan),
        AssignmentRule::Aon | AssignmentRule::Logit => {
            let mut decisions = Vec::with_capacity(contexts.len());
            let mut arc_loads: BTreeMap<ArcId, F> = BTreeMap::new();
            let mut total_cost = F::zero();
            for ctx in contexts {
                let hw_total = params.gamma * ctx.highway.travel_time + ctx.highway.unit_cost;
                let mut best: Option<(usize, F, F)> = None; // (index, total, expense)
                for (i, p) in ctx.rail_paths.iter().enumerate() {
                    let total = params.gamma * p.travel_time + p.unit_cost;
                    if best.as_ref().is_none_or(|(_, t, _)| total < *t) {
                        best = Some((i, total, p.unit_cost));
                    }
                }
                match rule {
                    AssignmentRule::Aon => {
                        let rail_wins = best
                            .as_ref()
                            .is_some_and(|(_, t, _)| *t < hw_total - params.delta);
                        if rail_wins {
                            let (i, _, expense) = best.unwrap();
                            for arc in &ctx.rail_paths[i].arcs {
                                let e = arc_loads.entry(arc.clone()).or_insert_with(F::zero);
                                *e = *e + ctx.demand.volume;
                            }
                            total_cost = total_cost + expense * ctx.demand.volume;
                            decisions.push(DemandDecision {
                                demand_index: ctx.demand_index,
                                mode: ModeChoice::Rail,
                                rail_path: Some(i),
                                rail_unit_cost: Some(expense),
                                rail_volume: ctx.demand.volume,
                                rail_probability: None,
                            });
                        } else {
                            total_cost = total_cost + ctx.highway.unit_cost * ctx.demand.volume;
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
                    AssignmentRule::Logit => match best {
                        Some((i, total, expense)) => {
                            let p = crate::assignment::logit_probability(
                                Some(&GeneralCost {
                                    time: ctx.rail_paths[i].travel_time,
                                    expense,
                                    total,
                                }),
                                &GeneralCost {
                                    time: ctx.highway.travel_time,
                                    expense: ctx.highway.unit_cost,
                                    total: hw_total,
                                },
                                params.theta,
                            );
                            let rail_volume = ctx.demand.volume * p;
                            for arc in &ctx.rail_paths[i].arcs {
                                let e = arc_loads.entry(arc.clone()).or_insert_with(F::zero);
                                *e = *e + rail_volume;
                            }
                            total_cost = total_cost
                                + (expense * p + ctx.highway.unit_cost * (F::one() - p))
                                    * ctx.demand.volume;
                            decisions.push(DemandDecision {
                                demand_index: ctx.demand_index,
                                mode: ModeChoice::Split,
                                rail_path: Some(i),
                                rail_unit_cost: Some(expense),
                                rail_volume,
                                rail_probability: Some(p),
                            });
                        }
                        None => {
                            total_cost = total_cost + ctx.highway.unit_cost * ctx.demand.volume;
                            decisions.push(DemandDecision {
                                demand_index: ctx.demand_index,
                                mode: ModeChoice::Highway,
                                rail_path: None,
                                rail_unit_cost: None,
                                rail_volume: F::zero(),
                                rail_probability: Some(F::zero()),
                            });
                        }
                    },
                    AssignmentRule::LmExact => unreachable!(),
                }
            }
            Ok(LMSolution {
                decisions,
                arc_loads,
                total_cost,
                heuristic: false,
            })
        }
    }
}

/// Exhaustive upper-level reference: walks every subset of the candidate
/// services (bitmask order), skips the ones activating two plans of one
/// relation, recomputes both objectives from their definitions, and filters
/// dominance quadratically. Must agree with `enumerate_pareto_exact`.
pub fn brute_force_um<F: Scalar>(
    network: &Network<F>,
    tariffs: &TariffTable<F>,
    config: &SearchConfig<F>,
) -> Result<Vec<ObjectivePoint<F>>, OracleError> {
    let services = &network.candidate_services;
    if services.len() > CANDIDATE_LIMIT {
        return Err(OracleError::TooManyCandidates {
            count: services.len(),
            limit: CANDIDATE_LIMIT,
        });
    }
    let mut evaluated: Vec<ObjectivePoint<F>> = Vec::new();
    for mask in 0u32..(1u32 << services.len()) {
        let chosen: Vec<usize> = (0..services.len()).filter(|i| mask & (1 << i) != 0).collect();
        if !config.allow_parallel_plans {
            let mut relations: Vec<_> = chosen.iter().map(|&i| services[i].relation()).collect();
            relations.sort();
            let before = relations.len();
            relations.dedup();
            if relations.len() != before {
                continue;
            }
        }
        let plan = ServicePlan {
            active: chosen.iter().map(|&i| services[i].id.clone()).collect(),
        };

        // Z1 from its definition
        let mut z1 = F::zero();
        for &i in &chosen {
            let svc = &services[i];
            let class = network.class(&svc.class).expect("validated class");
            let mut route = F::zero();
            for arc_id in &svc.plan.arc_sequence {
                route = route + network.arc(arc_id).expect("validated arc").distance;
            }
            let mut swaps = F::zero();
            for k in &svc.plan.swap_stations {
                swaps = swaps + network.station(k).expect("validated station").block_swap_cost;
            }
            z1 = z1
                + F::from_config(crate::network::HOURS_PER_DAY) / svc.period
                    * (svc.fixed_cost + class.unit_km_cost * route + swaps);
        }

        let contexts = build_demand_contexts(network, &plan, tariffs).map_err(DesignError::from)?;
        let lm = oracle_lower(&contexts, network, &plan, config.assignment_rule)?;

        // Z2 from its definition
        let z2 = lm.decisions.iter().fold(F::zero(), |acc, d| {
            acc + d.rail_unit_cost.unwrap_or_else(F::zero) * d.rail_volume
        });
        evaluated.push(ObjectivePoint { z1, z2, plan, lm });
    }

    // quadratic dominance filter, independent of the production one
    let mut frontier: Vec<ObjectivePoint<F>> = Vec::new();
    for point in &evaluated {
        let dominated = evaluated.iter().any(|other| {
            other.z1 <= point.z1
                && other.z2 >= point.z2
                && (other.z1 < point.z1 || other.z2 > point.z2)
        });
        if !dominated {
            frontier.push(point.clone());
        }
    }
    frontier.sort_by(|a, b| {
        (TotalOrd(a.z1), TotalOrd(a.z2), &a.plan).cmp(&(TotalOrd(b.z1), TotalOrd(b.z2), &b.plan))
    });
    Ok(frontier)
}
