//! Candidate routing options: highway direct-service timing, the per-demand
//! rail path set, and block-swap plan enumeration.
//!
//! Rail paths are enumerated best-first over the admissible arcs (regular
//! rail plus arcs of active express services), so they come out sorted by
//! general cost with the delivery deadline applied as a pruning bound.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::ServicePlan;
use crate::network::{
    ArcId, ArcMode, BlockSwapPlan, Demand, Network, ServiceArc, StationId,
};
use crate::scalar::{Scalar, TotalOrd};
use crate::scenario::TariffTable;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("unknown station `{0}`")]
    UnknownStation(StationId),
    #[error("unknown arc `{0}`")]
    UnknownArc(ArcId),
    #[error("no highway segment from `{from}` to `{to}`")]
    MissingHighwaySegment { from: StationId, to: StationId },
    #[error("no highway route from `{from}` to `{to}`")]
    NoHighwayRoute { from: StationId, to: StationId },
}

/// How a highway service treats an interior station of its route: running
/// through saves one hour versus making a stop there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Through,
    Transfer,
}

/// A station-level route with a per-interior-station stop pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteSpec {
    pub stations: Vec<StationId>,
    /// One entry per interior station.
    pub stops: Vec<StopKind>,
}

impl RouteSpec {
    pub fn new(stations: Vec<StationId>, stops: Vec<StopKind>) -> Self {
        assert!(stations.len() >= 2, "a route needs at least two stations");
        assert_eq!(
            stops.len(),
            stations.len() - 2,
            "one stop kind per interior station"
        );
        Self { stations, stops }
    }

    pub fn all_through(stations: Vec<StationId>) -> Self {
        let interior = stations.len().saturating_sub(2);
        Self::new(stations, vec![StopKind::Through; interior])
    }

    pub fn all_transfer(stations: Vec<StationId>) -> Self {
        let interior = stations.len().saturating_sub(2);
        Self::new(stations, vec![StopKind::Transfer; interior])
    }
}

/// Mode of a concrete routing option.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    Rail,
    Highway,
}

/// A concrete routing option for one demand: the `l`-th element of its path
/// set, with its travel time and per-car expense.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Path<F: Scalar = f64> {
    pub origin: StationId,
    pub destination: StationId,
    /// Position within the sorted per-demand path set.
    pub index: usize,
    pub mode: PathMode,
    pub arcs: Vec<ArcId>,
    pub stations: Vec<StationId>,
    pub travel_time: F,
    /// CNY per car over the whole path.
    pub unit_cost: F,
    /// Train-to-train transfers along a rail path.
    pub transfers: usize,
    /// Car handling events charged by the tariff: transfers plus block
    /// swaps performed while riding a single express service.
    pub handling_events: usize,
}

impl<F: Scalar> Path<F> {
    /// Arc incidence of the path: 1 iff the arc is traversed.
    pub fn uses_arc(&self, arc: &ArcId) -> bool {
        self.arcs.contains(arc)
    }
}

fn find_station<F: Scalar>(network: &Network<F>, id: &StationId) -> Result<(), PathError> {
    if network.station(id).is_some() {
        Ok(())
    } else {
        Err(PathError::UnknownStation(id.clone()))
    }
}

/// Cheapest explicit highway arc between two stations, if any.
fn highway_segment<'n, F: Scalar>(
    network: &'n Network<F>,
    from: &StationId,
    to: &StationId,
) -> Option<&'n ServiceArc<F>> {
    network
        .arcs
        .iter()
        .filter(|a| a.mode == ArcMode::Highway && &a.from == from && &a.to == to)
        .min_by(|a, b| {
            (TotalOrd(a.travel_time), TotalOrd(a.distance), &a.id)
                .cmp(&(TotalOrd(b.travel_time), TotalOrd(b.distance), &b.id))
        })
}

/// Travel time of a highway service along `route`: the sum of the segment
/// times minus one hour for every interior station the service runs
/// through (stations where it stops get no discount).
pub fn highway_travel_time<F: Scalar>(
    route: &RouteSpec,
    network: &Network<F>,
) -> Result<F, PathError> {
    Ok(highway_route_metrics(route, network)?.0)
}

fn highway_route_metrics<F: Scalar>(
    route: &RouteSpec,
    network: &Network<F>,
) -> Result<(F, F), PathError> {
    let mut time = F::zero();
    let mut distance = F::zero();
    for pair in route.stations.windows(2) {
        let segment = highway_segment(network, &pair[0], &pair[1]).ok_or_else(|| {
            PathError::MissingHighwaySegment {
                from: pair[0].clone(),
                to: pair[1].clone(),
            }
        })?;
        time = time + segment.travel_time;
        distance = distance + segment.distance;
    }
    let through = route
        .stops
        .iter()
        .filter(|s| **s == StopKind::Through)
        .count();
    Ok((time - F::from_usize(through).unwrap(), distance))
}

type SynthBest<F> = Option<(TotalOrd<F>, TotalOrd<F>, Vec<StationId>, Vec<usize>)>;

/// Best synthesized direct highway service between two stations: the
/// all-through route minimizing the discounted time (ties broken by
/// distance, then by station sequence).
fn synthesize_highway<F: Scalar>(
    network: &Network<F>,
    from: &StationId,
    to: &StationId,
) -> Result<(Vec<usize>, Vec<StationId>, F, F), PathError> {
    #[allow(clippy::too_many_arguments)]
    fn visit<F: Scalar>(
        network: &Network<F>,
        adjacency: &HashMap<&StationId, Vec<usize>>,
        target: &StationId,
        stations: &mut Vec<StationId>,
        arcs: &mut Vec<usize>,
        time: F,
        distance: F,
        best: &mut SynthBest<F>,
    ) {
        let here = stations.last().unwrap().clone();
        if &here == target {
            let through = F::from_usize(stations.len() - 2).unwrap();
            let key = (TotalOrd(time - through), TotalOrd(distance));
            let better = match best {
                None => true,
                Some((t, d, s, _)) => (key.0, key.1, &*stations) < (*t, *d, s),
            };
            if better {
                *best = Some((key.0, key.1, stations.clone(), arcs.clone()));
            }
            return;
        }
        let out = match adjacency.get(&here) {
            Some(v) => v.clone(),
            None => return,
        };
        for idx in out {
            let arc = &network.arcs[idx];
            if stations.contains(&arc.to) {
                continue;
            }
            stations.push(arc.to.clone());
            arcs.push(idx);
            visit(
                network,
                adjacency,
                target,
                stations,
                arcs,
                time + arc.travel_time,
                distance + arc.distance,
                best,
            );
            arcs.pop();
            stations.pop();
        }
    }

    let mut adjacency: HashMap<&StationId, Vec<usize>> = HashMap::new();
    for (idx, arc) in network.arcs.iter().enumerate() {
        if arc.mode == ArcMode::Highway {
            adjacency.entry(&arc.from).or_default().push(idx);
        }
    }
    let mut stations = vec![from.clone()];
    let mut arcs = Vec::new();
    let mut best: SynthBest<F> = None;
    visit(
        network,
        &adjacency,
        to,
        &mut stations,
        &mut arcs,
        F::zero(),
        F::zero(),
        &mut best,
    );
    match best {
        Some((time, distance, stations, arcs)) => Ok((arcs, stations, time.0, distance.0)),
        None => Err(PathError::NoHighwayRoute {
            from: from.clone(),
            to: to.clone(),
        }),
    }
}

/// The direct highway option for an O-D pair: an explicit direct arc when
/// the scenario provides one, otherwise a service synthesized from the best
/// all-through route over the highway segments.
pub fn highway_option<F: Scalar>(
    network: &Network<F>,
    origin: &StationId,
    destination: &StationId,
    tariffs: &TariffTable<F>,
) -> Result<Path<F>, PathError> {
    find_station(network, origin)?;
    find_station(network, destination)?;
    if let Some(direct) = highway_segment(network, origin, destination) {
        return Ok(Path {
            origin: origin.clone(),
            destination: destination.clone(),
            index: 0,
            mode: PathMode::Highway,
            arcs: vec![direct.id.clone()],
            stations: vec![origin.clone(), destination.clone()],
            travel_time: direct.travel_time,
            unit_cost: tariffs.highway_per_km * direct.distance,
            transfers: 0,
            handling_events: 0,
        });
    }
    let (arc_indices, stations, time, distance) = synthesize_highway(network, origin, destination)?;
    Ok(Path {
        origin: origin.clone(),
        destination: destination.clone(),
        index: 0,
        mode: PathMode::Highway,
        arcs: arc_indices
            .into_iter()
            .map(|i| network.arcs[i].id.clone())
            .collect(),
        stations,
        travel_time: time,
        unit_cost: tariffs.highway_per_km * distance,
        transfers: 0,
        handling_events: 0,
    })
}

/// Consecutive-arc ride table of the active express services: for an arc
/// pair ridden back to back on one service, whether staying aboard incurs a
/// block-swap handling charge at the joint station.
struct RideTable {
    /// (prev arc index, next arc index) -> swap charged when staying aboard.
    /// No entry means no single service covers the pair consecutively.
    continues: HashMap<(usize, usize), bool>,
}

impl RideTable {
    fn build<F: Scalar>(network: &Network<F>, plan: &ServicePlan) -> Self {
        let arc_index: HashMap<&ArcId, usize> = network
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| (&a.id, i))
            .collect();
        let mut continues: HashMap<(usize, usize), bool> = HashMap::new();
        for service in &network.candidate_services {
            if !plan.is_active(&service.id) {
                continue;
            }
            for pair in service.plan.arc_sequence.windows(2) {
                let (Some(&p), Some(&n)) = (arc_index.get(&pair[0]), arc_index.get(&pair[1]))
                else {
                    continue;
                };
                let joint = &network.arcs[n].from;
                let charged = service.plan.swap_stations.contains(joint);
                // a ride avoiding the charge wins over a charged one
                continues
                    .entry((p, n))
                    .and_modify(|c| *c = *c && charged)
                    .or_insert(charged);
            }
        }
        Self { continues }
    }
}

#[derive(Clone)]
struct Label<F: Scalar> {
    general_cost: TotalOrd<F>,
    time: TotalOrd<F>,
    arcs: Vec<ArcId>,
    expense: F,
    transfers: usize,
    handling_events: usize,
    station_idx_path: Vec<usize>,
    last_arc: Option<usize>,
}

impl<F: Scalar> PartialEq for Label<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F: Scalar> Eq for Label<F> {}
impl<F: Scalar> PartialOrd for Label<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Scalar> Ord for Label<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.general_cost, self.time, &self.arcs).cmp(&(
            other.general_cost,
            other.time,
            &other.arcs,
        ))
    }
}

/// Enumerates up to `k_max` loop-free rail paths for a demand over the
/// regular arcs plus the arcs of the plan's active express services.
///
/// Paths come out sorted ascending by general cost (gamma x time + expense,
/// ties by time, then by arc id sequence), and every one meets the demand's
/// delivery deadline. Empty when no admissible path exists.
pub fn enumerate_rail_paths<F: Scalar>(
    network: &Network<F>,
    demand: &Demand<F>,
    plan: &ServicePlan,
    tariffs: &TariffTable<F>,
    k_max: usize,
) -> Result<Vec<Path<F>>, PathError> {
    assert!(k_max >= 1, "k_max must be at least 1");
    assert!(
        demand.origin != demand.destination,
        "demand origin equals destination"
    );
    find_station(network, &demand.origin)?;
    find_station(network, &demand.destination)?;

    let station_index: HashMap<&StationId, usize> = network
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| (&s.id, i))
        .collect();
    let active_arcs = plan.active_arc_ids(network);
    let passable = |arc: &ServiceArc<F>| match arc.mode {
        ArcMode::RailRegular => true,
        ArcMode::RailExpress => active_arcs.contains(&arc.id),
        ArcMode::Highway => false,
    };
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); network.stations.len()];
    for (idx, arc) in network.arcs.iter().enumerate() {
        if passable(arc) {
            if let (Some(&f), Some(_)) = (station_index.get(&arc.from), station_index.get(&arc.to))
            {
                outgoing[f].push(idx);
            }
        }
    }
    let rides = RideTable::build(network, plan);
    let gamma = network.params.gamma;
    let dwell = network.params.dwell_hours;

    let origin_idx = station_index[&demand.origin];
    let target_idx = station_index[&demand.destination];

    let mut heap: BinaryHeap<Reverse<Label<F>>> = BinaryHeap::new();
    heap.push(Reverse(Label {
        general_cost: TotalOrd(tariffs.rail_handling),
        time: TotalOrd(F::zero()),
        arcs: Vec::new(),
        expense: tariffs.rail_handling,
        transfers: 0,
        handling_events: 0,
        station_idx_path: vec![origin_idx],
        last_arc: None,
    }));

    let mut found = Vec::new();
    while let Some(Reverse(label)) = heap.pop() {
        let here = *label.station_idx_path.last().unwrap();
        if here == target_idx {
            found.push(Path {
                origin: demand.origin.clone(),
                destination: demand.destination.clone(),
                index: found.len(),
                mode: PathMode::Rail,
                arcs: label.arcs,
                stations: label
                    .station_idx_path
                    .iter()
                    .map(|&i| network.stations[i].id.clone())
                    .collect(),
                travel_time: label.time.0,
                unit_cost: label.expense,
                transfers: label.transfers,
                handling_events: label.handling_events,
            });
            if found.len() == k_max {
                break;
            }
            continue;
        }
        for &arc_idx in &outgoing[here] {
            let arc = &network.arcs[arc_idx];
            let to_idx = station_index[&arc.to];
            if label.station_idx_path.contains(&to_idx) {
                continue;
            }
            let (transfer, charged) = match label.last_arc {
                None => (false, false),
                Some(prev) => match rides.continues.get(&(prev, arc_idx)) {
                    Some(&swap_charged) => (false, swap_charged),
                    None => (true, true),
                },
            };
            let mut time = label.time.0 + arc.travel_time;
            if transfer {
                time = time + dwell;
            }
            if time > demand.due_time {
                continue;
            }
            let mut expense = label.expense + tariffs.rail_per_km * arc.distance;
            if charged {
                expense = expense + tariffs.rail_swap_charge;
            }
            let mut arcs = label.arcs.clone();
            arcs.push(arc.id.clone());
            let mut station_idx_path = label.station_idx_path.clone();
            station_idx_path.push(to_idx);
            heap.push(Reverse(Label {
                general_cost: TotalOrd(gamma * time + expense),
                time: TotalOrd(time),
                arcs,
                expense,
                transfers: label.transfers + usize::from(transfer),
                handling_events: label.handling_events + usize::from(charged),
                station_idx_path,
                last_arc: Some(arc_idx),
            }));
        }
    }
    Ok(found)
}

/// Enumerates the block-swap plan set of a service relation: every loop-free
/// rail route from `origin` to `destination`, combined with every choice of
/// at most `max_swaps` interior stations as swap stations.
pub fn enumerate_block_swap_plans<F: Scalar>(
    origin: &StationId,
    destination: &StationId,
    network: &Network<F>,
    max_swaps: usize,
) -> Vec<BlockSwapPlan> {
    assert!(origin != destination, "relation endpoints must differ");
    let mut adjacency: HashMap<&StationId, Vec<usize>> = HashMap::new();
    for (idx, arc) in network.arcs.iter().enumerate() {
        if arc.mode.is_rail() {
            adjacency.entry(&arc.from).or_default().push(idx);
        }
    }

    let mut routes: Vec<Vec<usize>> = Vec::new();
    let mut stack_stations = vec![origin.clone()];
    let mut stack_arcs: Vec<usize> = Vec::new();
    fn dfs<F: Scalar>(
        network: &Network<F>,
        adjacency: &HashMap<&StationId, Vec<usize>>,
        destination: &StationId,
        stations: &mut Vec<StationId>,
        arcs: &mut Vec<usize>,
        routes: &mut Vec<Vec<usize>>,
    ) {
        let here = stations.last().unwrap().clone();
        if &here == destination {
            routes.push(arcs.clone());
            return;
        }
        let Some(out) = adjacency.get(&here) else {
            return;
        };
        for &idx in out {
            let arc = &network.arcs[idx];
            if stations.contains(&arc.to) {
                continue;
            }
            stations.push(arc.to.clone());
            arcs.push(idx);
            dfs(network, adjacency, destination, stations, arcs, routes);
            arcs.pop();
            stations.pop();
        }
    }
    dfs(
        network,
        &adjacency,
        destination,
        &mut stack_stations,
        &mut stack_arcs,
        &mut routes,
    );

    let mut plans = Vec::new();
    for route in &routes {
        let arc_sequence: Vec<ArcId> = route.iter().map(|&i| network.arcs[i].id.clone()).collect();
        let interior: Vec<StationId> = route
            .iter()
            .take(route.len().saturating_sub(1))
            .map(|&i| network.arcs[i].to.clone())
            .collect();
        let mut chosen: Vec<usize> = Vec::new();
        subsets_up_to(interior.len(), max_swaps, &mut chosen, &mut |subset| {
            plans.push(BlockSwapPlan {
                arc_sequence: arc_sequence.clone(),
                swap_stations: subset.iter().map(|&i| interior[i].clone()).collect(),
            });
        });
    }
    plans.sort();
    plans.dedup();
    plans
}

/// Calls `f` on every subset of `{0..n}` with at most `k` elements, in
/// ascending index order.
fn subsets_up_to(n: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    fn recurse(
        start: usize,
        n: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        f(chosen);
        if chosen.len() == k {
            return;
        }
        for next in start..n {
            chosen.push(next);
            recurse(next + 1, n, k, chosen, f);
            chosen.pop();
        }
    }
    recurse(0, n, k, chosen, f);
}

/// Travel time of a path: for rail, the sum of its arc times plus the dwell
/// per train-to-train transfer; for highway, the direct-service time under
/// the all-through discount rule.
pub fn path_time<F: Scalar>(path: &Path<F>, network: &Network<F>) -> Result<F, PathError> {
    let mut total = F::zero();
    for id in &path.arcs {
        let arc = network
            .arc(id)
            .ok_or_else(|| PathError::UnknownArc(id.clone()))?;
        total = total + arc.travel_time;
    }
    match path.mode {
        PathMode::Rail => {
            let dwell = network.params.dwell_hours;
            Ok(total + dwell * F::from_usize(path.transfers).unwrap())
        }
        PathMode::Highway => {
            let interior = path.stations.len().saturating_sub(2);
            Ok(total - F::from_usize(interior).unwrap())
        }
    }
}

/// Per-car expense of a path under the tariff table.
pub fn path_unit_cost<F: Scalar>(
    path: &Path<F>,
    network: &Network<F>,
    tariffs: &TariffTable<F>,
) -> Result<F, PathError> {
    let mut distance = F::zero();
    for id in &path.arcs {
        let arc = network
            .arc(id)
            .ok_or_else(|| PathError::UnknownArc(id.clone()))?;
        distance = distance + arc.distance;
    }
    match path.mode {
        PathMode::Rail => Ok(tariffs.rail_per_km * distance
            + tariffs.rail_handling
            + tariffs.rail_swap_charge * F::from_usize(path.handling_events).unwrap()),
        PathMode::Highway => Ok(tariffs.highway_per_km * distance),
    }
}

/// Everything the assignment rules need to know about one demand under a
/// given service plan: its admissible rail paths and its highway option.
#[derive(Clone, Debug)]
pub struct DemandContext<F: Scalar = f64> {
    pub demand_index: usize,
    pub demand: Demand<F>,
    /// Sorted ascending by general cost; possibly empty.
    pub rail_paths: Vec<Path<F>>,
    pub highway: Path<F>,
}

/// Builds the assignment input for every demand under a plan.
pub fn build_demand_contexts<F: Scalar>(
    network: &Network<F>,
    plan: &ServicePlan,
    tariffs: &TariffTable<F>,
) -> Result<Vec<DemandContext<F>>, PathError> {
    network
        .demands
        .iter()
        .enumerate()
        .map(|(demand_index, demand)| {
            Ok(DemandContext {
                demand_index,
                demand: demand.clone(),
                rail_paths: enumerate_rail_paths(
                    network,
                    demand,
                    plan,
                    tariffs,
                    network.params.k_max,
                )?,
                highway: highway_option(network, &demand.origin, &demand.destination, tariffs)?,
            })
        })
        .collect()
}
