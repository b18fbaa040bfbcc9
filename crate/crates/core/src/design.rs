//! Upper-level service design: plan evaluation against the two objectives
//! (operating cost Z1, rail revenue Z2) and the search for nondominated
//! plans, exact on small instances and simulated-annealing based beyond.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{assign_aon, assign_logit, solve_lower, LMSolution};
use crate::network::{train_frequency, ArcId, ClassId, Network, ServiceId, StationId};
use crate::pathgen::{build_demand_contexts, PathError};
use crate::scalar::{Scalar, TotalOrd};
use crate::scenario::TariffTable;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown service `{0}`")]
    UnknownService(ServiceId),
    #[error("services `{first}` and `{second}` activate two plans of the same relation")]
    DuplicateRelation { first: ServiceId, second: ServiceId },
}

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("{count} candidate services exceed the exact enumeration threshold {limit}")]
    TooManyCandidates { count: usize, limit: usize },
}

/// An upper-level decision: the set of active express services.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ServicePlan {
    pub active: BTreeSet<ServiceId>,
}

impl ServicePlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ServiceId>,
    {
        Self {
            active: ids.into_iter().map(Into::into).collect(),
        }
    }

    /// Every candidate service of the network.
    pub fn all<F: Scalar>(network: &Network<F>) -> Self {
        Self {
            active: network
                .candidate_services
                .iter()
                .map(|s| s.id.clone())
                .collect(),
        }
    }

    pub fn is_active(&self, id: &ServiceId) -> bool {
        self.active.contains(id)
    }

    /// Arc ids traversed by any active service.
    pub fn active_arc_ids<F: Scalar>(&self, network: &Network<F>) -> HashSet<ArcId> {
        let mut arcs = HashSet::new();
        for service in &network.candidate_services {
            if self.is_active(&service.id) {
                arcs.extend(service.plan.arc_sequence.iter().cloned());
            }
        }
        arcs
    }

    /// Checks that every active id exists and, unless `allow_parallel_plans`,
    /// that no relation has two active block-swap plans.
    pub fn validate<F: Scalar>(
        &self,
        network: &Network<F>,
        allow_parallel_plans: bool,
    ) -> Result<(), PlanError> {
        let mut seen: HashMap<(StationId, StationId, ClassId), &ServiceId> = HashMap::new();
        for id in &self.active {
            let service = network
                .service(id)
                .ok_or_else(|| PlanError::UnknownService(id.clone()))?;
            if let Some(first) = seen.insert(service.relation(), id) {
                if !allow_parallel_plans {
                    return Err(PlanError::DuplicateRelation {
                        first: first.clone(),
                        second: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One evaluated plan: its objective pair and the lower-level solution it
/// induces. Z1 is minimized, Z2 maximized.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ObjectivePoint<F: Scalar = f64> {
    pub z1: F,
    pub z2: F,
    pub plan: ServicePlan,
    pub lm: LMSolution<F>,
}

impl<F: Scalar> ObjectivePoint<F> {
    /// Rail profit Z2 - Z1, a derived reporting column.
    pub fn net_value(&self) -> F {
        self.z2 - self.z1
    }

    /// True iff `self` is at least as good in both objectives and strictly
    /// better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.z1 <= other.z1
            && self.z2 >= other.z2
            && (self.z1 < other.z1 || self.z2 > other.z2)
    }
}

/// Which lower-level rule prices and routes the demands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    Aon,
    Logit,
    LmExact,
}

/// Scalarization of the two objectives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound = "")]
pub enum Scalarization<F: Scalar = f64> {
    /// Minimize w1 * Z1 - w2 * Z2.
    Weights(F, F),
    /// Sweep weights and keep the nondominated union.
    Pareto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    AddDrop,
    AddDropSwap,
}

fn default_rule() -> AssignmentRule {
    AssignmentRule::Aon
}
fn default_scalarization<F: Scalar>() -> Scalarization<F> {
    Scalarization::Pareto
}
fn default_max_iterations() -> usize {
    5000
}
fn default_neighborhood() -> Neighborhood {
    Neighborhood::AddDropSwap
}
fn default_exact_threshold() -> usize {
    14
}
fn default_weight_steps() -> usize {
    5
}

/// Configuration of plan evaluation and search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SearchConfig<F: Scalar = f64> {
    #[serde(default = "default_rule")]
    pub assignment_rule: AssignmentRule,
    #[serde(default = "default_scalarization")]
    pub scalarization: Scalarization<F>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_neighborhood")]
    pub neighborhood: Neighborhood,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_exact_threshold")]
    pub exact_threshold: usize,
    /// Relaxes the one-plan-per-relation invariant when set.
    #[serde(default)]
    pub allow_parallel_plans: bool,
    /// Number of weight vectors swept in Pareto mode.
    #[serde(default = "default_weight_steps")]
    pub weight_steps: usize,
}

impl<F: Scalar> Default for SearchConfig<F> {
    fn default() -> Self {
        Self {
            assignment_rule: default_rule(),
            scalarization: default_scalarization(),
            max_iterations: default_max_iterations(),
            neighborhood: default_neighborhood(),
            seed: 0,
            exact_threshold: default_exact_threshold(),
            allow_parallel_plans: false,
            weight_steps: default_weight_steps(),
        }
    }
}

/// Z1: daily operating cost of the active services. Each contributes its
/// frequency times (fixed cost + per-km running cost over its route + the
/// block-swap fees of its swap stations).
pub fn upper_cost<F: Scalar>(plan: &ServicePlan, network: &Network<F>) -> F {
    let mut total = F::zero();
    for service in &network.candidate_services {
        if !plan.is_active(&service.id) {
            continue;
        }
        let class = network
            .class(&service.class)
            .unwrap_or_else(|| panic!("service {} references unknown class", service.id));
        let mut route_cost = F::zero();
        for arc_id in &service.plan.arc_sequence {
            let arc = network
                .arc(arc_id)
                .unwrap_or_else(|| panic!("service {} references unknown arc", service.id));
            route_cost = route_cost + class.unit_km_cost * arc.distance;
        }
        let mut swap_cost = F::zero();
        for station_id in &service.plan.swap_stations {
            let station = network
                .station(station_id)
                .unwrap_or_else(|| panic!("service {} swaps at unknown station", service.id));
            swap_cost = swap_cost + station.block_swap_cost;
        }
        total = total + train_frequency(service) * (service.fixed_cost + route_cost + swap_cost);
    }
    total
}

/// Z2: daily rail revenue of a lower-level solution, the sum over demands
/// of the chosen rail unit price times the rail volume.
pub fn rail_revenue<F: Scalar>(lm: &LMSolution<F>) -> F {
    lm.decisions.iter().fold(F::zero(), |acc, d| {
        acc + d.rail_unit_cost.unwrap_or_else(F::zero) * d.rail_volume
    })
}

/// Evaluates one plan end to end: path generation under the plan, the
/// configured assignment rule, then both objectives.
pub fn evaluate_plan<F: Scalar>(
    plan: &ServicePlan,
    network: &Network<F>,
    tariffs: &TariffTable<F>,
    config: &SearchConfig<F>,
) -> Result<ObjectivePoint<F>, DesignError> {
    plan.validate(network, config.allow_parallel_plans)?;
    let contexts = build_demand_contexts(network, plan, tariffs)?;
    let params = &network.params;
    let lm = match config.assignment_rule {
        AssignmentRule::Aon => assign_aon(&contexts, params.gamma, params.delta),
        AssignmentRule::Logit => assign_logit(&contexts, params.gamma, params.theta),
        AssignmentRule::LmExact => solve_lower(&contexts, network, plan),
    };
    Ok(ObjectivePoint {
        z1: upper_cost(plan, network),
        z2: rail_revenue(&lm),
        plan: plan.clone(),
        lm,
    })
}

/// Keeps the nondominated points; points with identical objectives are all
/// kept. Output sorted by (z1, z2, plan).
pub fn pareto_filter<F: Scalar>(points: Vec<ObjectivePoint<F>>) -> Vec<ObjectivePoint<F>> {
    let mut kept: Vec<ObjectivePoint<F>> = Vec::new();
    for point in points {
        if kept.iter().any(|k| k.dominates(&point)) {
            continue;
        }
        kept.retain(|k| !point.dominates(k));
        kept.push(point);
    }
    kept.sort_by(|a, b| {
        (TotalOrd(a.z1), TotalOrd(a.z2), &a.plan).cmp(&(TotalOrd(b.z1), TotalOrd(b.z2), &b.plan))
    });
    kept
}

/// Per-relation grouping of candidate services, ordered deterministically.
fn relation_groups<F: Scalar>(network: &Network<F>) -> Vec<Vec<ServiceId>> {
    let mut groups: Vec<((StationId, StationId, ClassId), Vec<ServiceId>)> = Vec::new();
    for service in &network.candidate_services {
        let key = service.relation();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ids)) => ids.push(service.id.clone()),
            None => groups.push((key, vec![service.id.clone()])),
        }
    }
    let mut groups: Vec<Vec<ServiceId>> = groups.into_iter().map(|(_, ids)| ids).collect();
    for ids in &mut groups {
        ids.sort();
    }
    groups.sort();
    groups
}

fn plan_from_choices(groups: &[Vec<ServiceId>], choices: &[Option<usize>]) -> ServicePlan {
    ServicePlan {
        active: groups
            .iter()
            .zip(choices)
            .filter_map(|(g, c)| c.map(|i| g[i].clone()))
            .collect(),
    }
}

/// Exhaustively evaluates every plan with at most one active block-swap
/// plan per relation and returns the Pareto frontier. Refuses when the
/// candidate count exceeds `config.exact_threshold`.
pub fn enumerate_pareto_exact<F: Scalar>(
    network: &Network<F>,
    tariffs: &TariffTable<F>,
    config: &SearchConfig<F>,
) -> Result<Vec<ObjectivePoint<F>>, DesignError> {
    let count = network.candidate_services.len();
    if count > config.exact_threshold {
        return Err(DesignError::TooManyCandidates {
            count,
            limit: config.exact_threshold,
        });
    }
    let groups = relation_groups(network);
    let mut choices: Vec<Option<usize>> = vec![None; groups.len()];
    let mut points = Vec::new();
    loop {
        let plan = plan_from_choices(&groups, &choices);
        points.push(evaluate_plan(&plan, network, tariffs, config)?);
        // odometer over (None, Some(0), ..., Some(len-1)) per relation
        let mut pos = 0;
        loop {
            if pos == groups.len() {
                return Ok(pareto_filter(points));
            }
            choices[pos] = match choices[pos] {
                None => Some(0),
                Some(i) if i + 1 < groups[pos].len() => Some(i + 1),
                Some(_) => {
                    choices[pos] = None;
                    pos += 1;
                    continue;
                }
            };
            break;
        }
    }
}

/// State of one annealing chain: a per-relation choice vector.
struct Chain<'a, F: Scalar> {
    network: &'a Network<F>,
    tariffs: &'a TariffTable<F>,
    config: &'a SearchConfig<F>,
    groups: Vec<Vec<ServiceId>>,
    /// Memoized objective pairs of every plan evaluated so far.
    cache: HashMap<Vec<Option<usize>>, (F, F)>,
}

impl<'a, F: Scalar> Chain<'a, F> {
    fn objectives(&mut self, choices: &[Option<usize>]) -> Result<(F, F), DesignError> {
        if let Some(&pair) = self.cache.get(choices) {
            return Ok(pair);
        }
        let plan = plan_from_choices(&self.groups, choices);
        let point = evaluate_plan(&plan, self.network, self.tariffs, self.config)?;
        let pair = (point.z1, point.z2);
        self.cache.insert(choices.to_vec(), pair);
        Ok(pair)
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        self.groups
            .iter()
            .map(|g| {
                let pick = rng.gen_range(0..=g.len());
                if pick == 0 {
                    None
                } else {
                    Some(pick - 1)
                }
            })
            .collect()
    }

    /// One add/drop(/swap) move on a uniformly chosen relation.
    fn neighbor(&self, state: &[Option<usize>], rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let mut next = state.to_vec();
        let r = rng.gen_range(0..self.groups.len());
        let group = &self.groups[r];
        next[r] = match state[r] {
            None => Some(rng.gen_range(0..group.len())),
            Some(current) => {
                let can_swap =
                    self.config.neighborhood == Neighborhood::AddDropSwap && group.len() > 1;
                if can_swap && rng.gen_bool(0.5) {
                    let mut other = rng.gen_range(0..group.len() - 1);
                    if other >= current {
                        other += 1;
                    }
                    Some(other)
                } else {
                    None
                }
            }
        };
        next
    }
}

/// Simulated-annealing search over service plans.
///
/// Scalarized mode minimizes w1 * Z1 - w2 * Z2 with geometric cooling at
/// rate 0.995 per iteration; each chain's initial temperature is the
/// standard deviation of 50 random-neighbor energy deltas. Pareto mode
/// sweeps `weight_steps` weight vectors and returns the nondominated union
/// of everything the chains evaluated. Deterministic for a fixed seed.
pub fn search_services<F: Scalar>(
    network: &Network<F>,
    tariffs: &TariffTable<F>,
    config: &SearchConfig<F>,
) -> Result<Vec<ObjectivePoint<F>>, DesignError> {
    let groups = relation_groups(network);
    if groups.is_empty() {
        let point = evaluate_plan(&ServicePlan::empty(), network, tariffs, config)?;
        return Ok(vec![point]);
    }
    let mut chain = Chain {
        network,
        tariffs,
        config,
        groups,
        cache: HashMap::new(),
    };

    let weight_vectors: Vec<(F, F)> = match config.scalarization {
        Scalarization::Weights(w1, w2) => {
            assert!(
                w1 >= F::zero() && w2 >= F::zero() && w1 + w2 > F::zero(),
                "scalarization weights must be nonnegative with a positive sum"
            );
            vec![(w1, w2)]
        }
        Scalarization::Pareto => {
            let steps = config.weight_steps.max(2);
            (0..steps)
                .map(|i| {
                    let w2 = F::from_usize(i).unwrap() / F::from_usize(steps - 1).unwrap();
                    (F::one() - w2, w2)
                })
                .collect()
        }
    };

    let mut best_per_weight: Vec<Vec<Option<usize>>> = Vec::new();
    for (chain_idx, &(w1, w2)) in weight_vectors.iter().enumerate() {
        let energy = |pair: (F, F)| w1 * pair.0 - w2 * pair.1;
        let mut rng = ChaCha8Rng::seed_from_u64(
            config
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(chain_idx as u64),
        );

        // initial temperature: std deviation of 50 random-neighbor deltas
        let mut deltas: Vec<F> = Vec::new();
        for _ in 0..50 {
            let state = chain.random_state(&mut rng);
            let neighbor = chain.neighbor(&state, &mut rng);
            let a = energy(chain.objectives(&state)?);
            let b = energy(chain.objectives(&neighbor)?);
            deltas.push(b - a);
        }
        let n = F::from_usize(deltas.len()).unwrap();
        let mean = deltas.iter().fold(F::zero(), |acc, &d| acc + d) / n;
        let var = deltas
            .iter()
            .fold(F::zero(), |acc, &d| acc + (d - mean) * (d - mean))
            / n;
        let initial_temperature = var.sqrt().max(F::from_config(1e-6));

        let mut state = vec![None; chain.groups.len()];
        let mut state_energy = energy(chain.objectives(&state)?);
        let mut best_state = state.clone();
        let mut best_energy = state_energy;
        let mut temperature = initial_temperature;
        let cooling = F::from_config(0.995);
        for _ in 0..config.max_iterations {
            let proposal = chain.neighbor(&state, &mut rng);
            let proposal_energy = energy(chain.objectives(&proposal)?);
            let delta = proposal_energy - state_energy;
            let accept = delta < F::zero() || {
                let u: f64 = rng.gen();
                F::from_config(u) < (-delta / temperature).exp()
            };
            if accept {
                state = proposal;
                state_energy = proposal_energy;
                if state_energy < best_energy {
                    best_energy = state_energy;
                    best_state = state.clone();
                }
            }
            temperature = (temperature * cooling).max(F::from_config(1e-9));
        }
        best_per_weight.push(best_state);
    }

    let points = match config.scalarization {
        Scalarization::Weights(..) => {
            let plan = plan_from_choices(&chain.groups, &best_per_weight[0]);
            vec![evaluate_plan(&plan, network, tariffs, config)?]
        }
        Scalarization::Pareto => {
            // frontier of everything any chain evaluated; dominance is
            // settled on the cached pairs, then only survivors are
            // re-evaluated for their full solutions
            type Visited<F> = (Vec<Option<usize>>, (F, F));
            let mut visited: Vec<Visited<F>> =
                chain.cache.iter().map(|(k, &v)| (k.clone(), v)).collect();
            visited.sort_by(|a, b| a.0.cmp(&b.0));
            let nondominated = visited.iter().filter(|(_, (z1, z2))| {
                !visited.iter().any(|(_, (o1, o2))| {
                    o1 <= z1 && o2 >= z2 && (o1 < z1 || o2 > z2)
                })
            });
            let mut points = Vec::new();
            for (choices, _) in nondominated {
                let plan = plan_from_choices(&chain.groups, choices);
                points.push(evaluate_plan(&plan, network, tariffs, config)?);
            }
            points
        }
    };
    Ok(pareto_filter(points))
}
