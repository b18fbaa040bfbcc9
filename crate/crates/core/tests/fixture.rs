//! Golden checks on the bundled eleven-station scenario: exact frontier
//! values, byte-stable reports, round trips, and an `f32` smoke test.

mod common;

use common::{fixture, FIXTURE_JSON};
use sndet_core::*;

/// The exhaustively computed frontier of the bundled scenario under the
/// all-or-nothing rule, frozen from cross-checked enumeration.
const GOLDEN_FRONTIER: [(&str, f64, f64); 3] = [
    ("", 0.0, 19_200.0),
    ("x-n11-n03", 2_675.0, 88_800.0),
    ("x-n11-n03-swap", 2_855.0, 90_900.0),
];

fn golden_plan(ids: &str) -> ServicePlan {
    if ids.is_empty() {
        ServicePlan::empty()
    } else {
        ServicePlan::from_ids(ids.split('+'))
    }
}

#[test]
fn exact_frontier_matches_golden_values() {
    let scenario = fixture();
    let frontier =
        enumerate_pareto_exact(&scenario.network, &scenario.tariffs, &scenario.search).unwrap();
    assert_eq!(frontier.len(), GOLDEN_FRONTIER.len());
    for (point, (ids, z1, z2)) in frontier.iter().zip(GOLDEN_FRONTIER) {
        assert_eq!(point.plan, golden_plan(ids));
        assert!((point.z1 - z1).abs() < 1e-9, "z1 {} vs {z1}", point.z1);
        assert!((point.z2 - z2).abs() < 1e-9, "z2 {} vs {z2}", point.z2);
    }
}

#[test]
fn independent_reference_agrees_on_the_fixture() {
    let scenario = fixture();
    let exact =
        enumerate_pareto_exact(&scenario.network, &scenario.tariffs, &scenario.search).unwrap();
    let reference =
        brute_force_um(&scenario.network, &scenario.tariffs, &scenario.search).unwrap();
    assert_eq!(exact.len(), reference.len());
    for (a, b) in exact.iter().zip(&reference) {
        assert_eq!(a.plan, b.plan);
        assert!((a.z1 - b.z1).abs() < 1e-9);
        assert!((a.z2 - b.z2).abs() < 1e-9);
    }
}

#[test]
fn search_recovers_the_full_fixture_frontier() {
    let scenario = fixture();
    let config = SearchConfig {
        max_iterations: 300,
        ..scenario.search
    };
    let found = search_services(&scenario.network, &scenario.tariffs, &config).unwrap();
    assert_eq!(found.len(), GOLDEN_FRONTIER.len());
    for (point, (ids, z1, z2)) in found.iter().zip(GOLDEN_FRONTIER) {
        assert_eq!(point.plan, golden_plan(ids));
        assert!((point.z1 - z1).abs() < 1e-9);
        assert!((point.z2 - z2).abs() < 1e-9);
    }
}

#[test]
fn scalarized_search_finds_the_best_net_value_plan() {
    let scenario = fixture();
    let config = SearchConfig {
        scalarization: Scalarization::Weights(1.0, 1.0),
        max_iterations: 300,
        ..scenario.search
    };
    let found = search_services(&scenario.network, &scenario.tariffs, &config).unwrap();
    assert_eq!(found.len(), 1);
    // 90_900 - 2_855 is the best achievable net value over all nine plans
    assert_eq!(found[0].plan, golden_plan("x-n11-n03-swap"));
    assert!((found[0].net_value() - 88_045.0).abs() < 1e-9);
}

#[test]
fn report_files_are_byte_stable() {
    let scenario = fixture();
    let frontier =
        enumerate_pareto_exact(&scenario.network, &scenario.tariffs, &scenario.search).unwrap();
    let selected = select_report_point(&frontier).unwrap();
    assert_eq!(frontier[selected].plan, golden_plan("x-n11-n03-swap"));
    let contexts = build_demand_contexts(
        &scenario.network,
        &frontier[selected].plan,
        &scenario.tariffs,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_report(dir.path(), &frontier, Some((&frontier[selected], &contexts))).unwrap();

    let frontier_csv = std::fs::read_to_string(&paths.frontier).unwrap();
    assert_eq!(
        frontier_csv,
        "plan_id,z1,z2,z2_minus_z1\n\
         plan-000,0.000000,19200.000000,19200.000000\n\
         plan-001,2675.000000,88800.000000,86125.000000\n\
         plan-002,2855.000000,90900.000000,88045.000000\n"
    );

    let assignment_csv = std::fs::read_to_string(&paths.assignment).unwrap();
    assert_eq!(
        assignment_csv,
        "s,t,F,mode,path_stations,t_l,c_l,C_rail,f_rail,P_rail\n\
         N07,N03,60.000000,rail,N07-N06-N11-N10-N03,25.000000,760.000000,760.000000,60.000000,\n\
         N06,N03,45.000000,rail,N06-N11-N10-N03,17.000000,580.000000,580.000000,45.000000,\n\
         N01,N03,40.000000,rail,N01-N02-N03,18.000000,480.000000,480.000000,40.000000,\n"
    );

    // plan.json reloads to the same plan and re-evaluates to the same point
    let reloaded = load_plan(&paths.plan).unwrap();
    assert_eq!(reloaded, frontier[selected].plan);
    let again = evaluate_plan(&reloaded, &scenario.network, &scenario.tariffs, &scenario.search)
        .unwrap();
    assert_eq!(again.z1, frontier[selected].z1);
    assert_eq!(again.z2, frontier[selected].z2);
    assert_eq!(again.lm, frontier[selected].lm);
}

#[test]
fn expense_minimal_rule_also_captures_the_deadline_demand() {
    let scenario = fixture();
    let config = SearchConfig {
        assignment_rule: AssignmentRule::LmExact,
        ..scenario.search
    };
    let plan = ServicePlan::from_ids(["x-n01-n03", "x-n11-n03"]);
    let point = evaluate_plan(&plan, &scenario.network, &scenario.tariffs, &config).unwrap();
    let f73 = &point.lm.decisions[0];
    // rail at 680 CNY/car beats the 1200 CNY/car highway service
    assert_eq!(f73.mode, ModeChoice::Rail);
    assert_eq!(f73.rail_unit_cost, Some(680.0));
    assert!(!point.lm.heuristic);
}

#[test]
fn logit_rule_splits_fixture_flows() {
    let scenario = fixture();
    let config = SearchConfig {
        assignment_rule: AssignmentRule::Logit,
        ..scenario.search
    };
    let plan = ServicePlan::from_ids(["x-n01-n03", "x-n11-n03"]);
    let point = evaluate_plan(&plan, &scenario.network, &scenario.tariffs, &config).unwrap();
    for d in &point.lm.decisions {
        match d.mode {
            ModeChoice::Split => {
                let p = d.rail_probability.unwrap();
                assert!(p > 0.0 && p < 1.0, "interior split expected");
            }
            ModeChoice::Highway => assert_eq!(d.rail_probability, Some(0.0)),
            ModeChoice::Rail => panic!("logit never yields a pure rail decision"),
        }
    }
    // deadline demand: rail undercuts highway by 440 CNY of general cost,
    // so theta = 0.005 puts ~90% of it on rail
    let f73 = &point.lm.decisions[0];
    assert!((f73.rail_probability.unwrap() - 0.9002495108803148).abs() < 1e-12);
    assert!(point.z2 > 0.0);
}

#[test]
fn fixture_round_trips_through_canonical_json() {
    let scenario = fixture();
    let reloaded: Scenario = Scenario::from_json(&scenario.to_json()).unwrap();
    assert_eq!(reloaded, scenario);
}

#[test]
fn fixture_evaluates_identically_in_f32_for_exact_quantities() {
    let scenario: Scenario<f32> = Scenario::from_json(FIXTURE_JSON).unwrap();
    assert!(scenario.violations().is_empty());
    let plan = ServicePlan::from_ids(["x-n01-n03", "x-n11-n03"]);
    let paths = enumerate_rail_paths(
        &scenario.network,
        &scenario.network.demands[0],
        &plan,
        &scenario.tariffs,
        8,
    )
    .unwrap();
    assert_eq!(paths.len(), 2);
    for p in &paths {
        assert_eq!(p.travel_time, 25.0f32);
    }
    let point = evaluate_plan(&plan, &scenario.network, &scenario.tariffs, &scenario.search)
        .unwrap();
    assert_eq!(point.z1, 5925.0f32);
    assert_eq!(point.z2, 84_400.0f32);
}
