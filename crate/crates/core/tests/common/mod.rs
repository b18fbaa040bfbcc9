#![allow(dead_code)]

//! Shared test support: the bundled demo scenario and a seeded random
//! instance generator for the oracle-equivalence and property suites.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sndet_core::*;

pub const FIXTURE_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/sec3.json"));

pub fn fixture() -> Scenario {
    let scenario: Scenario = Scenario::from_json(FIXTURE_JSON).expect("bundled fixture parses");
    assert!(
        scenario.violations().is_empty(),
        "bundled fixture must validate: {:?}",
        scenario.violations()
    );
    scenario
}

/// Knobs of the random instance generator.
#[derive(Clone, Copy, Debug)]
pub struct InstanceOptions {
    pub max_stations: usize,
    pub max_demands: usize,
    /// Express relations to propose (each with 1..=plans_per_relation variants).
    pub relations: usize,
    pub plans_per_relation: usize,
    /// Hard cap on the total number of candidate services.
    pub max_candidates: usize,
    /// Small train sizes and short trains so express capacities bind.
    pub tight_capacity: bool,
    pub k_max: usize,
    pub gamma: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            max_stations: 6,
            max_demands: 5,
            relations: 2,
            plans_per_relation: 2,
            max_candidates: 10,
            tight_capacity: false,
            k_max: 4,
            gamma: 0.0,
        }
    }
}

pub struct Instance {
    pub network: Network,
    pub tariffs: TariffTable,
    /// A valid plan choosing at most one variant per relation.
    pub plan: ServicePlan,
}

/// Builds a random, always-valid instance. Deterministic per seed.
pub fn random_instance(seed: u64, opts: &InstanceOptions) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    let n = rng.gen_range(3..=opts.max_stations.max(3));
    let station_id = |i: usize| StationId::new(format!("s{i:02}"));

    let stations: Vec<Station> = (0..n)
        .map(|i| Station {
            id: station_id(i),
            name: String::new(),
            block_swap_cost: *[50.0, 100.0, 150.0, 200.0].choose(&mut rng).unwrap(),
        })
        .collect();

    // undirected adjacency: a chain for connectivity plus a few extras
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for _ in 0..rng.gen_range(0..=n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !pairs.contains(&(a.min(b), a.max(b))) {
            pairs.push((a.min(b), a.max(b)));
        }
    }

    let mut arcs: Vec<ServiceArc> = Vec::new();
    let mut rail_time = std::collections::HashMap::new();
    for &(a, b) in &pairs {
        let rt = rng.gen_range(2..=10) as f64;
        let ht = rng.gen_range(1..=8) as f64;
        rail_time.insert((a, b), rt);
        rail_time.insert((b, a), rt);
        for (u, v) in [(a, b), (b, a)] {
            arcs.push(ServiceArc {
                id: ArcId::new(format!("r-{u:02}-{v:02}")),
                from: station_id(u),
                to: station_id(v),
                mode: ArcMode::RailRegular,
                distance: rt * 50.0,
                travel_time: rt,
                capacity: None,
            });
            arcs.push(ServiceArc {
                id: ArcId::new(format!("h-{u:02}-{v:02}")),
                from: station_id(u),
                to: station_id(v),
                mode: ArcMode::Highway,
                distance: ht * 55.0,
                travel_time: ht,
                capacity: None,
            });
        }
    }

    let class = TrainClass {
        id: ClassId::new("d120"),
        speed_tier: 120,
        unit_km_cost: *[2.0, 2.5, 3.0].choose(&mut rng).unwrap(),
    };

    // candidate services: each relation rides fresh express arcs laid over a
    // short random simple rail route
    let mut candidate_services: Vec<ExpressService> = Vec::new();
    let neighbors = |u: usize| -> Vec<usize> {
        let mut out: Vec<usize> = pairs
            .iter()
            .filter_map(|&(a, b)| {
                if a == u {
                    Some(b)
                } else if b == u {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out
    };
    for rel in 0..opts.relations {
        if candidate_services.len() >= opts.max_candidates {
            break;
        }
        // random walk of 1..=3 hops without repeats
        let start = rng.gen_range(0..n);
        let hops = rng.gen_range(1..=3usize);
        let mut route = vec![start];
        for _ in 0..hops {
            let here = *route.last().unwrap();
            let options: Vec<usize> = neighbors(here)
                .into_iter()
                .filter(|v| !route.contains(v))
                .collect();
            match options.as_slice() {
                [] => break,
                opts_list => route.push(*opts_list.choose(&mut rng).unwrap()),
            }
        }
        if route.len() < 2 {
            continue;
        }
        let mut arc_sequence = Vec::new();
        for (leg, w) in route.windows(2).enumerate() {
            let (u, v) = (w[0], w[1]);
            let rt = rail_time[&(u, v)];
            let id = ArcId::new(format!("e{rel}-{leg}-{u:02}-{v:02}"));
            arcs.push(ServiceArc {
                id: id.clone(),
                from: station_id(u),
                to: station_id(v),
                mode: ArcMode::RailExpress,
                distance: rt * 50.0,
                travel_time: (rt - rng.gen_range(1..=2) as f64).max(1.0),
                capacity: None,
            });
            arc_sequence.push(id);
        }
        let interior: Vec<StationId> = route[1..route.len() - 1]
            .iter()
            .map(|&i| station_id(i))
            .collect();
        let period = *[12.0, 24.0, 48.0].choose(&mut rng).unwrap();
        let train_size = if opts.tight_capacity {
            rng.gen_range(5..=25) as f64
        } else {
            rng.gen_range(200..=400) as f64
        };
        let mut swap_variants: Vec<Vec<StationId>> = vec![vec![]];
        for _ in 1..opts.plans_per_relation {
            if interior.is_empty() {
                break;
            }
            let mut swaps: Vec<StationId> = interior
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            if swaps.is_empty() {
                swaps.push(interior[0].clone());
            }
            if !swap_variants.contains(&swaps) {
                swap_variants.push(swaps);
            }
        }
        for (v, swaps) in swap_variants.into_iter().enumerate() {
            if candidate_services.len() >= opts.max_candidates {
                break;
            }
            candidate_services.push(ExpressService {
                id: ServiceId::new(format!("x{rel}-{v}")),
                origin: station_id(route[0]),
                destination: station_id(*route.last().unwrap()),
                class: class.id.clone(),
                plan: BlockSwapPlan {
                    arc_sequence: arc_sequence.clone(),
                    swap_stations: swaps,
                },
                fixed_cost: rng.gen_range(5..=20) as f64 * 100.0,
                period,
                train_size,
            });
        }
    }

    // rail-time shortest paths, with and without the express layer, used to
    // pitch each demand's deadline into an interesting regime
    let shortest = |arcs: &[ServiceArc], express: bool, s: &StationId, t: &StationId| -> Option<f64> {
        let mut dist: std::collections::HashMap<&StationId, f64> = Default::default();
        dist.insert(s, 0.0);
        let mut heap = std::collections::BinaryHeap::new();
        heap.push((std::cmp::Reverse((0.0f64).to_bits()), s));
        while let Some((std::cmp::Reverse(bits), u)) = heap.pop() {
            let du = f64::from_bits(bits);
            if du > dist[u] {
                continue;
            }
            if u == t {
                return Some(du);
            }
            for arc in arcs.iter().filter(|a| &a.from == u) {
                let ok = match arc.mode {
                    ArcMode::RailRegular => true,
                    ArcMode::RailExpress => express,
                    ArcMode::Highway => false,
                };
                if !ok {
                    continue;
                }
                let alt = du + arc.travel_time;
                if dist.get(&arc.to).is_none_or(|&d| alt < d) {
                    dist.insert(&arc.to, alt);
                    heap.push((std::cmp::Reverse(alt.to_bits()), &arc.to));
                }
            }
        }
        None
    };

    let demands: Vec<Demand> = (0..rng.gen_range(1..=opts.max_demands))
        .map(|_| {
            // half the demands head for a candidate service's destination
            let (s, t) = if !candidate_services.is_empty() && rng.gen_bool(0.5) {
                let svc = candidate_services.choose(&mut rng).unwrap();
                let origin_idx = (0..n)
                    .find(|&i| station_id(i) == svc.origin)
                    .expect("service origin exists");
                let near: Vec<usize> = neighbors(origin_idx)
                    .into_iter()
                    .filter(|&v| station_id(v) != svc.destination)
                    .collect();
                let s = if near.is_empty() || rng.gen_bool(0.5) {
                    origin_idx
                } else {
                    *near.choose(&mut rng).unwrap()
                };
                (
                    s,
                    (0..n)
                        .find(|&i| station_id(i) == svc.destination)
                        .expect("service destination exists"),
                )
            } else {
                let s = rng.gen_range(0..n);
                let mut t = rng.gen_range(0..n);
                while t == s {
                    t = rng.gen_range(0..n);
                }
                (s, t)
            };
            let regular = shortest(&arcs, false, &station_id(s), &station_id(t));
            let boosted = shortest(&arcs, true, &station_id(s), &station_id(t));
            let due_time = match (boosted, regular, rng.gen_range(0..10)) {
                // tight: rail infeasible even with every express arc
                (Some(b), _, 0..=1) => (b - 1.0).max(1.0),
                // express regime: regular rail too slow, express fast enough
                (Some(b), Some(r), 2..=6) if r > b => (b + (r - b - 1.0).max(0.0)).max(b),
                // generous: regular rail qualifies
                (_, Some(r), _) => r + rng.gen_range(0..=6) as f64,
                _ => rng.gen_range(10..=45) as f64,
            };
            Demand {
                origin: station_id(s),
                destination: station_id(t),
                volume: rng.gen_range(5..=50) as f64,
                due_time,
            }
        })
        .collect();

    let network = Network {
        stations,
        arcs,
        classes: vec![class],
        candidate_services,
        demands,
        params: GlobalParams {
            gamma: opts.gamma,
            k_max: opts.k_max,
            ..GlobalParams::default()
        },
    };
    let issues = validate_network(&network);
    assert!(issues.is_empty(), "generator must produce valid networks: {issues:?}");

    // a random valid plan: at most one variant per relation
    let mut groups: Vec<((StationId, StationId, ClassId), Vec<ServiceId>)> = Vec::new();
    for svc in &network.candidate_services {
        let key = svc.relation();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ids)) => ids.push(svc.id.clone()),
            None => groups.push((key, vec![svc.id.clone()])),
        }
    }
    let mut active = std::collections::BTreeSet::new();
    for (_, group) in &groups {
        let pick = rng.gen_range(0..=group.len());
        if pick > 0 {
            active.insert(group[pick - 1].clone());
        }
    }
    let plan = ServicePlan { active };
    plan.validate(&network, false).expect("generated plan is valid");

    let tariffs = TariffTable {
        rail_per_km: rng.gen_range(6..=12) as f64 * 0.05,
        rail_handling: *[50.0, 100.0].choose(&mut rng).unwrap(),
        rail_swap_charge: *[0.0, 20.0, 40.0].choose(&mut rng).unwrap(),
        highway_per_km: rng.gen_range(16..=28) as f64 * 0.05,
    };

    Instance {
        network,
        tariffs,
        plan,
    }
}
