//! Service network design for express freight trains competing with road
//! haulage.
//!
//! The crate models a multimodal freight network — regular rail services
//! between adjacent stations, candidate express train services with
//! block-swap plans, and a direct highway service between every station
//! pair — and answers two questions:
//!
//! * given a set of active express services, how do deadline-bound,
//!   high-value demands split between rail paths and highway
//!   ([`assignment`]: expense-minimal, all-or-nothing, or logit), and
//! * which set of express services should run, trading daily operating
//!   cost against rail revenue ([`design`]: exact enumeration on small
//!   instances, annealing search beyond).
//!
//! Units are fixed throughout: money in CNY, time in hours, distance in
//! km, flow in cars. All quantities are generic over a [`Scalar`]
//! (`f32`/`f64`), with `f64` as the default everywhere.

pub mod assignment;
pub mod design;
pub mod network;
pub mod oracle;
pub mod pathgen;
pub mod scalar;
pub mod scenario;

pub use assignment::{
    assign_aon, assign_logit, general_cost, logit_probability, rail_general_cost, solve_lower,
    DemandDecision, GeneralCost, LMSolution, ModeChoice,
};
pub use design::{
    enumerate_pareto_exact, evaluate_plan, pareto_filter, rail_revenue, search_services,
    upper_cost, AssignmentRule, DesignError, Neighborhood, ObjectivePoint, PlanError,
    Scalarization, SearchConfig, ServicePlan,
};
pub use network::{
    arc_capacity, effective_capacity, train_frequency, validate_network, ArcId, ArcMode,
    BlockSwapPlan, ClassId, Demand, ExpressService, GlobalParams, Network, ServiceArc, ServiceId,
    Station, StationId, TrainClass, ValidationIssue, HOURS_PER_DAY,
};
pub use oracle::{brute_force_lm, brute_force_um, OracleError};
pub use pathgen::{
    build_demand_contexts, enumerate_block_swap_plans, enumerate_rail_paths, highway_option,
    highway_travel_time, path_time, path_unit_cost, DemandContext, Path, PathError, PathMode,
    RouteSpec, StopKind,
};
pub use scalar::Scalar;
pub use scenario::{
    load_plan, load_scenario, select_report_point, write_assignment_csv, write_frontier_csv,
    write_plan, write_report, PlanFile, ReportPaths, Scenario, ScenarioError, TariffTable,
    SCHEMA_VERSION,
};

/// Single-precision specializations of the default (`f64`) model types.
pub mod single {
    pub type GeneralCost = crate::assignment::GeneralCost<f32>;
    pub type LMSolution = crate::assignment::LMSolution<f32>;
    pub type Network = crate::network::Network<f32>;
    pub type ObjectivePoint = crate::design::ObjectivePoint<f32>;
    pub type Path = crate::pathgen::Path<f32>;
    pub type Scenario = crate::scenario::Scenario<f32>;
    pub type SearchConfig = crate::design::SearchConfig<f32>;
    pub type TariffTable = crate::scenario::TariffTable<f32>;
}
