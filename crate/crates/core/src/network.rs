//! Multimodal network data model, validation, and the service
//! frequency / arc capacity arithmetic.
//!
//! Fixed unit system throughout: money in CNY, time in hours, distance in
//! km, flow in cars. Stations and arcs are identified by opaque string ids;
//! arcs are directed (list both directions for a bidirectional link).

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::ServicePlan;
use crate::scalar::Scalar;

/// Hours in one operating day, the `24` of the train-frequency rate.
pub const HOURS_PER_DAY: f64 = 24.0;

/// Express train speed tiers (km/h) admitted by the model.
pub const SPEED_TIERS: [u32; 3] = [160, 120, 80];

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(
    /// Identifier of a station.
    StationId
);
id_type!(
    /// Identifier of a service arc.
    ArcId
);
id_type!(
    /// Identifier of an express train class.
    ClassId
);
id_type!(
    /// Identifier of a candidate express service.
    ServiceId
);

/// Transport mode of a service arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcMode {
    RailRegular,
    RailExpress,
    Highway,
}

impl ArcMode {
    pub fn is_rail(self) -> bool {
        matches!(self, ArcMode::RailRegular | ArcMode::RailExpress)
    }
}

/// A station of the rail network. `block_swap_cost` is the cost charged per
/// block-swap event performed here by an express train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Station<F: Scalar = f64> {
    pub id: StationId,
    #[serde(default)]
    pub name: String,
    pub block_swap_cost: F,
}

/// A directed service arc. `capacity` is in cars/day; `None` means
/// unbounded (big-M).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ServiceArc<F: Scalar = f64> {
    pub id: ArcId,
    pub from: StationId,
    pub to: StationId,
    pub mode: ArcMode,
    pub distance: F,
    pub travel_time: F,
    #[serde(default)]
    pub capacity: Option<F>,
}

/// An express train class: speed tier and per-km running cost of one train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainClass<F: Scalar = f64> {
    pub id: ClassId,
    pub speed_tier: u32,
    pub unit_km_cost: F,
}

/// Route and block-swap choice of an express service: the ordered arcs the
/// train runs over, and the interior stations where car blocks are swapped.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockSwapPlan {
    pub arc_sequence: Vec<ArcId>,
    #[serde(default)]
    pub swap_stations: Vec<StationId>,
}

/// A candidate express train service (one upper-level decision variable).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ExpressService<F: Scalar = f64> {
    pub id: ServiceId,
    pub origin: StationId,
    pub destination: StationId,
    pub class: ClassId,
    pub plan: BlockSwapPlan,
    /// Fixed cost per dispatched train.
    pub fixed_cost: F,
    /// Dispatch period in hours; frequency is 24 / period trains per day.
    pub period: F,
    /// Cars per train.
    pub train_size: F,
}

impl<F: Scalar> ExpressService<F> {
    /// Relation key: at most one block-swap plan may be active per relation.
    pub fn relation(&self) -> (StationId, StationId, ClassId) {
        (self.origin.clone(), self.destination.clone(), self.class.clone())
    }
}

/// An origin-destination freight demand with a delivery deadline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Demand<F: Scalar = f64> {
    pub origin: StationId,
    pub destination: StationId,
    /// Cars per day.
    pub volume: F,
    /// Delivery due time in hours; rail paths slower than this are unusable.
    pub due_time: F,
}

fn one<F: Scalar>() -> F {
    F::one()
}

fn default_k_max() -> usize {
    8
}

/// Model-wide parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GlobalParams<F: Scalar = f64> {
    /// CNY per hour used to convert time into money in general costs.
    #[serde(default)]
    pub gamma: F,
    /// All-or-nothing switching margin (CNY): rail wins a demand only if its
    /// general cost is below the highway one by strictly more than this.
    #[serde(default)]
    pub delta: F,
    /// Logit dispersion applied to utilities; 1 leaves them unscaled.
    #[serde(default = "one")]
    pub theta: F,
    /// Big-M capacity for arcs without an active express service; when
    /// absent, 10x the total demand volume is used.
    #[serde(default)]
    pub big_m: Option<F>,
    /// Dwell added per train-to-train transfer on a rail path.
    #[serde(default)]
    pub dwell_hours: F,
    /// Maximum number of rail paths kept per demand.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

impl<F: Scalar> Default for GlobalParams<F> {
    fn default() -> Self {
        Self {
            gamma: F::zero(),
            delta: F::zero(),
            theta: F::one(),
            big_m: None,
            dwell_hours: F::zero(),
            k_max: default_k_max(),
        }
    }
}

/// The multimodal network: stations, arcs, train classes, candidate express
/// services, demands and parameters. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Network<F: Scalar = f64> {
    pub stations: Vec<Station<F>>,
    pub arcs: Vec<ServiceArc<F>>,
    #[serde(default)]
    pub classes: Vec<TrainClass<F>>,
    #[serde(default)]
    pub candidate_services: Vec<ExpressService<F>>,
    #[serde(default)]
    pub demands: Vec<Demand<F>>,
    #[serde(default)]
    pub params: GlobalParams<F>,
}

impl<F: Scalar> Network<F> {
    pub fn station(&self, id: &StationId) -> Option<&Station<F>> {
        self.stations.iter().find(|s| &s.id == id)
    }

    pub fn arc(&self, id: &ArcId) -> Option<&ServiceArc<F>> {
        self.arcs.iter().find(|a| &a.id == id)
    }

    pub fn class(&self, id: &ClassId) -> Option<&TrainClass<F>> {
        self.classes.iter().find(|c| &c.id == id)
    }

    pub fn service(&self, id: &ServiceId) -> Option<&ExpressService<F>> {
        self.candidate_services.iter().find(|s| &s.id == id)
    }

    pub fn total_demand_volume(&self) -> F {
        self.demands
            .iter()
            .fold(F::zero(), |acc, d| acc + d.volume)
    }

    /// Effective big-M: the configured value, or 10x total demand volume
    /// (at least 1) when not configured.
    pub fn big_m(&self) -> F {
        self.params.big_m.unwrap_or_else(|| {
            let ten = F::from_config(10.0);
            (ten * self.total_demand_volume()).max(F::one())
        })
    }
}

/// Trains per day dispatched by a service: 24 / period. The rate is
/// real-valued; it is never rounded to whole trains.
pub fn train_frequency<F: Scalar>(service: &ExpressService<F>) -> F {
    assert!(
        service.period > F::zero(),
        "service {} has nonpositive period",
        service.id
    );
    F::from_config(HOURS_PER_DAY) / service.period
}

/// Daily capacity of an arc under a service plan.
///
/// An express arc traversed by active services carries the sum of their
/// frequency x train-size products; every other arc (inactive express,
/// regular rail, highway) is uncapacitated and reports big-M.
pub fn arc_capacity<F: Scalar>(
    arc: &ServiceArc<F>,
    plan: &ServicePlan,
    network: &Network<F>,
) -> F {
    if arc.mode != ArcMode::RailExpress {
        return network.big_m();
    }
    let mut served = false;
    let mut total = F::zero();
    for service in &network.candidate_services {
        if plan.is_active(&service.id) && service.plan.arc_sequence.contains(&arc.id) {
            served = true;
            total = total + train_frequency(service) * service.train_size;
        }
    }
    if served {
        total
    } else {
        network.big_m()
    }
}

/// Capacity actually enforced by the lower-level assignment: the tighter of
/// the arc's own bound and the service-derived capacity.
pub fn effective_capacity<F: Scalar>(
    arc: &ServiceArc<F>,
    plan: &ServicePlan,
    network: &Network<F>,
) -> F {
    let dynamic = arc_capacity(arc, plan, network);
    match arc.capacity {
        Some(bound) => bound.min(dynamic),
        None => dynamic,
    }
}

/// One violated data invariant. `path` locates the offending entity with a
/// JSON-pointer-style path into the scenario layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub path: String,
    pub rule: String,
    pub message: String,
}

impl ValidationIssue {
    fn new(path: impl Into<String>, rule: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            rule: rule.to_owned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.path, self.rule, self.message)
    }
}

/// Checks every data invariant and returns the violations found (empty iff
/// the network is valid). Pure and idempotent; violations are data, not
/// failures.
pub fn validate_network<F: Scalar>(network: &Network<F>) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let zero = F::zero();

    let mut station_ids: HashSet<&StationId> = HashSet::new();
    for (i, station) in network.stations.iter().enumerate() {
        let path = format!("/stations/{i}");
        if !station_ids.insert(&station.id) {
            issues.push(ValidationIssue::new(
                &path,
                "unique-station-id",
                format!("duplicate station id `{}`", station.id),
            ));
        }
        if station.block_swap_cost < zero {
            issues.push(ValidationIssue::new(
                &path,
                "nonnegative-swap-cost",
                format!("station `{}` has negative block_swap_cost", station.id),
            ));
        }
    }
    let known_station = |id: &StationId| network.stations.iter().any(|s| &s.id == id);

    let mut arc_ids: HashSet<&ArcId> = HashSet::new();
    for (i, arc) in network.arcs.iter().enumerate() {
        let path = format!("/arcs/{i}");
        if !arc_ids.insert(&arc.id) {
            issues.push(ValidationIssue::new(
                &path,
                "unique-arc-id",
                format!("duplicate arc id `{}`", arc.id),
            ));
        }
        for end in [&arc.from, &arc.to] {
            if !known_station(end) {
                issues.push(ValidationIssue::new(
                    &path,
                    "arc-endpoints-exist",
                    format!("arc `{}` references unknown station `{end}`", arc.id),
                ));
            }
        }
        if arc.from == arc.to {
            issues.push(ValidationIssue::new(
                &path,
                "arc-distinct-endpoints",
                format!("arc `{}` is a self-loop", arc.id),
            ));
        }
        if arc.distance <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-distance",
                format!("arc `{}` has nonpositive distance", arc.id),
            ));
        }
        if arc.travel_time <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-travel-time",
                format!("arc `{}` has nonpositive travel_time", arc.id),
            ));
        }
        if let Some(cap) = arc.capacity {
            if cap <= zero {
                issues.push(ValidationIssue::new(
                    &path,
                    "positive-capacity",
                    format!("arc `{}` has nonpositive bounded capacity", arc.id),
                ));
            }
        }
    }

    let mut class_ids: HashSet<&ClassId> = HashSet::new();
    for (i, class) in network.classes.iter().enumerate() {
        let path = format!("/classes/{i}");
        if !class_ids.insert(&class.id) {
            issues.push(ValidationIssue::new(
                &path,
                "unique-class-id",
                format!("duplicate class id `{}`", class.id),
            ));
        }
        if !SPEED_TIERS.contains(&class.speed_tier) {
            issues.push(ValidationIssue::new(
                &path,
                "known-speed-tier",
                format!(
                    "class `{}` has speed_tier {}; expected one of {:?}",
                    class.id, class.speed_tier, SPEED_TIERS
                ),
            ));
        }
        if class.unit_km_cost <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-unit-km-cost",
                format!("class `{}` has nonpositive unit_km_cost", class.id),
            ));
        }
    }

    let mut service_ids: HashSet<&ServiceId> = HashSet::new();
    for (i, service) in network.candidate_services.iter().enumerate() {
        let path = format!("/candidate_services/{i}");
        if !service_ids.insert(&service.id) {
            issues.push(ValidationIssue::new(
                &path,
                "unique-service-id",
                format!("duplicate service id `{}`", service.id),
            ));
        }
        if network.class(&service.class).is_none() {
            issues.push(ValidationIssue::new(
                &path,
                "service-class-exists",
                format!(
                    "service `{}` references unknown class `{}`",
                    service.id, service.class
                ),
            ));
        }
        if service.period <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-period",
                format!("service `{}` has nonpositive period", service.id),
            ));
        }
        if service.train_size <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-train-size",
                format!("service `{}` has nonpositive train_size", service.id),
            ));
        }
        issues.extend(validate_service_plan(network, service, &path));
    }

    for (i, demand) in network.demands.iter().enumerate() {
        let path = format!("/demands/{i}");
        for end in [&demand.origin, &demand.destination] {
            if !known_station(end) {
                issues.push(ValidationIssue::new(
                    &path,
                    "demand-endpoints-exist",
                    format!("demand references unknown station `{end}`"),
                ));
            }
        }
        if demand.origin == demand.destination {
            issues.push(ValidationIssue::new(
                &path,
                "demand-distinct-endpoints",
                "demand origin equals destination",
            ));
        }
        if demand.volume <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-volume",
                "demand volume must be positive",
            ));
        }
        if demand.due_time <= zero {
            issues.push(ValidationIssue::new(
                &path,
                "positive-due-time",
                "demand due_time must be positive",
            ));
        }
    }

    let params = &network.params;
    if params.gamma < zero {
        issues.push(ValidationIssue::new("/params/gamma", "nonnegative-gamma", "gamma must be >= 0"));
    }
    if params.delta < zero {
        issues.push(ValidationIssue::new("/params/delta", "nonnegative-delta", "delta must be >= 0"));
    }
    if params.theta <= zero {
        issues.push(ValidationIssue::new("/params/theta", "positive-theta", "theta must be > 0"));
    }
    if params.dwell_hours < zero {
        issues.push(ValidationIssue::new(
            "/params/dwell_hours",
            "nonnegative-dwell",
            "dwell_hours must be >= 0",
        ));
    }
    if params.k_max == 0 {
        issues.push(ValidationIssue::new("/params/k_max", "positive-k-max", "k_max must be >= 1"));
    }
    if let Some(m) = params.big_m {
        if m <= network.total_demand_volume() {
            issues.push(ValidationIssue::new(
                "/params/big_m",
                "big-m-exceeds-demand",
                "big_m must exceed the total demand volume",
            ));
        }
    }

    if let Some(issue) = check_highway_mesh(network) {
        issues.push(issue);
    }

    issues
}

fn validate_service_plan<F: Scalar>(
    network: &Network<F>,
    service: &ExpressService<F>,
    path: &str,
) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if service.plan.arc_sequence.is_empty() {
        issues.push(ValidationIssue::new(
            path,
            "plan-nonempty",
            format!("service `{}` has an empty arc sequence", service.id),
        ));
        return issues;
    }

    let mut current = service.origin.clone();
    let mut interior: Vec<StationId> = Vec::new();
    let mut broken = false;
    for arc_id in &service.plan.arc_sequence {
        match network.arc(arc_id) {
            Some(arc) => {
                if !arc.mode.is_rail() {
                    issues.push(ValidationIssue::new(
                        path,
                        "plan-rail-arcs",
                        format!(
                            "service `{}` plan uses non-rail arc `{}`",
                            service.id, arc_id
                        ),
                    ));
                }
                if arc.from != current {
                    broken = true;
                }
                interior.push(arc.to.clone());
                current = arc.to.clone();
            }
            None => {
                issues.push(ValidationIssue::new(
                    path,
                    "plan-arcs-exist",
                    format!(
                        "service `{}` plan references unknown arc `{}`",
                        service.id, arc_id
                    ),
                ));
                broken = true;
            }
        }
    }
    interior.pop(); // last reached station is the destination, not interior
    if broken {
        issues.push(ValidationIssue::new(
            path,
            "plan-edge-connected",
            format!(
                "service `{}` plan is not an edge-connected route from `{}`",
                service.id, service.origin
            ),
        ));
    } else if current != service.destination {
        issues.push(ValidationIssue::new(
            path,
            "plan-ends-at-destination",
            format!(
                "service `{}` plan ends at `{current}` instead of `{}`",
                service.id, service.destination
            ),
        ));
    }
    for station in &service.plan.swap_stations {
        if !interior.contains(station) {
            issues.push(ValidationIssue::new(
                path,
                "swap-stations-interior",
                format!(
                    "service `{}` swaps at `{station}`, which is not an interior station of its route",
                    service.id
                ),
            ));
        }
    }
    issues
}

/// The highway subgraph must let every station reach every other, so that
/// direct highway services between non-adjacent pairs can be synthesized.
fn check_highway_mesh<F: Scalar>(network: &Network<F>) -> Option<ValidationIssue> {
    if network.stations.len() < 2 {
        return None;
    }
    let mut forward: HashMap<&StationId, Vec<&StationId>> = HashMap::new();
    let mut backward: HashMap<&StationId, Vec<&StationId>> = HashMap::new();
    for arc in network.arcs.iter().filter(|a| a.mode == ArcMode::Highway) {
        forward.entry(&arc.from).or_default().push(&arc.to);
        backward.entry(&arc.to).or_default().push(&arc.from);
    }
    let root = &network.stations[0].id;
    for (adjacency, direction) in [(&forward, "reach"), (&backward, "be reached from")] {
        let mut seen: HashSet<&StationId> = HashSet::new();
        let mut stack = vec![root];
        seen.insert(root);
        while let Some(node) = stack.pop() {
            for next in adjacency.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        if let Some(missing) = network.stations.iter().find(|s| !seen.contains(&s.id)) {
            return Some(ValidationIssue::new(
                "/arcs",
                "highway-mesh-connected",
                format!(
                    "highway subgraph is not strongly connected: `{}` cannot {direction} `{}`",
                    missing.id, root
                ),
            ));
        }
    }
    None
}
