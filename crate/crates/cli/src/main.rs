//! `sndet`: design express train services against highway competition.
//!
//! Subcommands: `validate`, `assign`, `evaluate`, `solve`, `pareto-exact`.
//! Exit codes: 0 on success, 2 when the input fails validation, 1 on any
//! runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sndet_core::{
    assign_aon, assign_logit, brute_force_lm, brute_force_um, build_demand_contexts,
    enumerate_pareto_exact, evaluate_plan, load_plan, search_services, select_report_point,
    solve_lower, write_report, AssignmentRule, DemandContext, LMSolution,
    ObjectivePoint, Scalarization, Scenario, ScenarioError, SearchConfig, ServicePlan,
};

#[derive(Parser)]
#[command(name = "sndet", version, about = "Express train service network design under highway competition")]
struct Cli {
    /// Echo the fully resolved configuration before running.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every violated invariant.
    Validate { scenario: PathBuf },
    /// Assign the demands under a fixed service plan.
    Assign {
        scenario: PathBuf,
        /// Assignment rule.
        #[arg(long, value_enum, default_value_t = RuleArg::Aon)]
        rule: RuleArg,
        /// Plan to assign under: `none`, `all`, or a plan.json path.
        #[arg(long, default_value = "none")]
        plan: String,
        /// With `--rule lm`: use the exhaustive reference instead of the solver.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Evaluate both objectives for a fixed plan.
    Evaluate {
        scenario: PathBuf,
        /// plan.json path.
        #[arg(long)]
        plan: PathBuf,
        /// Override the scenario's assignment rule.
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        /// Also write the report files for this plan.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the plan space and report the result.
    Solve {
        scenario: PathBuf,
        /// Scalarize to `w1,w2` (minimizes w1*Z1 - w2*Z2).
        #[arg(long, conflicts_with = "pareto")]
        weights: Option<String>,
        /// Sweep weights and report the nondominated frontier.
        #[arg(long)]
        pareto: bool,
        /// Override the scenario's search seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's iteration budget.
        #[arg(long)]
        iterations: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Exhaustively enumerate the Pareto frontier of small instances.
    ParetoExact {
        scenario: PathBuf,
        /// Use the independent exhaustive reference implementation.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Args)]
struct OutDir {
    /// Directory for the report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Aon,
    Logit,
    Lm,
}

impl From<RuleArg> for AssignmentRule {
    fn from(rule: RuleArg) -> Self {
        match rule {
            RuleArg::Aon => AssignmentRule::Aon,
            RuleArg::Logit => AssignmentRule::Logit,
            RuleArg::Lm => AssignmentRule::LmExact,
        }
    }
}

fn main() -> ExitCode {
    // dying quietly on a closed pipe beats a panic backtrace under `| head`
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            // bad input data exits 2, anything else is a runtime error
            let input_error = match err.downcast_ref::<ScenarioError>() {
                Some(e) => e.is_input_error(),
                None => {
                    err.downcast_ref::<sndet_core::PlanError>().is_some()
                        || matches!(
                            err.downcast_ref::<sndet_core::DesignError>(),
                            Some(sndet_core::DesignError::Plan(_))
                        )
                }
            };
            eprintln!("error: {err:#}");
            ExitCode::from(if input_error { 2 } else { 1 })
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let scenario = sndet_core::load_scenario(path)
        .with_context(|| format!("loading scenario `{}`", path.display()))?;
    Ok(scenario)
}

fn print_config(scenario: &Scenario, config: &SearchConfig) {
    let echo = serde_json::json!({
        "metadata": scenario.metadata,
        "params": scenario.network.params,
        "tariffs": scenario.tariffs,
        "search": config,
    });
    println!("{}", serde_json::to_string_pretty(&echo).expect("config serializes"));
}

fn resolve_plan(scenario: &Scenario, spec: &str) -> Result<ServicePlan> {
    let plan = match spec {
        "none" => ServicePlan::empty(),
        "all" => ServicePlan::all(&scenario.network),
        path => load_plan(Path::new(path))
            .with_context(|| format!("loading plan `{path}`"))?,
    };
    plan.validate(&scenario.network, scenario.search.allow_parallel_plans)?;
    Ok(plan)
}

fn rail_share(lm: &LMSolution, contexts: &[DemandContext]) -> f64 {
    let total: f64 = contexts.iter().map(|c| c.demand.volume).sum();
    if total == 0.0 {
        return 0.0;
    }
    lm.decisions.iter().map(|d| d.rail_volume).sum::<f64>() / total
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { scenario } => {
            let scenario = Scenario::from_path(&scenario)?;
            if cli.print_config {
                print_config(&scenario, &scenario.search);
            }
            let issues = scenario.violations();
            if issues.is_empty() {
                println!(
                    "ok: {} stations, {} arcs, {} candidate services, {} demands",
                    scenario.network.stations.len(),
                    scenario.network.arcs.len(),
                    scenario.network.candidate_services.len(),
                    scenario.network.demands.len()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for issue in &issues {
                    println!("violation: {issue}");
                }
                Ok(ExitCode::from(2))
            }
        }

        Command::Assign {
            scenario,
            rule,
            plan,
            oracle,
            out,
        } => {
            if oracle && rule != RuleArg::Lm {
                bail!("--oracle applies to --rule lm only");
            }
            let scenario = load(&scenario)?;
            let config = SearchConfig {
                assignment_rule: rule.into(),
                ..scenario.search
            };
            if cli.print_config {
                print_config(&scenario, &config);
            }
            let plan = resolve_plan(&scenario, &plan)?;
            let contexts = build_demand_contexts(&scenario.network, &plan, &scenario.tariffs)?;
            let params = &scenario.network.params;
            let lm = match (rule, oracle) {
                (RuleArg::Aon, _) => assign_aon(&contexts, params.gamma, params.delta),
                (RuleArg::Logit, _) => assign_logit(&contexts, params.gamma, params.theta),
                (RuleArg::Lm, false) => solve_lower(&contexts, &scenario.network, &plan),
                (RuleArg::Lm, true) => brute_force_lm(&contexts, &scenario.network, &plan)?,
            };
            std::fs::create_dir_all(&out.out)?;
            let csv = out.out.join("assignment.csv");
            sndet_core::write_assignment_csv(&csv, &contexts, &lm)?;
            println!(
                "assigned {} demands: total expense {:.2}, rail share {:.1}%{}",
                contexts.len(),
                lm.total_cost,
                100.0 * rail_share(&lm, &contexts),
                if lm.heuristic { " (capacity-diverted)" } else { "" }
            );
            println!("wrote {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Evaluate {
            scenario,
            plan,
            rule,
            out,
        } => {
            let scenario = load(&scenario)?;
            let mut config = scenario.search;
            if let Some(rule) = rule {
                config.assignment_rule = rule.into();
            }
            if cli.print_config {
                print_config(&scenario, &config);
            }
            let plan = load_plan(&plan)?;
            let point = evaluate_plan(&plan, &scenario.network, &scenario.tariffs, &config)?;
            println!(
                "z1 (operating cost) = {:.6}\nz2 (rail revenue)   = {:.6}\nz2 - z1             = {:.6}",
                point.z1,
                point.z2,
                point.net_value()
            );
            if let Some(dir) = out {
                let contexts =
                    build_demand_contexts(&scenario.network, &point.plan, &scenario.tariffs)?;
                let points = vec![point];
                let paths = write_report(&dir, &points, Some((&points[0], &contexts)))?;
                println!("wrote {}", paths.frontier.display());
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Solve {
            scenario,
            weights,
            pareto,
            seed,
            iterations,
            out,
        } => {
            let scenario = load(&scenario)?;
            let mut config = scenario.search;
            if let Some(spec) = weights {
                let parts: Vec<&str> = spec.split(',').collect();
                let [w1, w2] = parts.as_slice() else {
                    bail!("--weights expects `w1,w2`");
                };
                config.scalarization =
                    Scalarization::Weights(w1.trim().parse()?, w2.trim().parse()?);
            } else if pareto {
                config.scalarization = Scalarization::Pareto;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(iterations) = iterations {
                config.max_iterations = iterations;
            }
            if cli.print_config {
                print_config(&scenario, &config);
            }
            let frontier = search_services(&scenario.network, &scenario.tariffs, &config)?;
            report_frontier(&scenario, &frontier, &out.out)
        }

        Command::ParetoExact {
            scenario,
            oracle,
            out,
        } => {
            let scenario = load(&scenario)?;
            if cli.print_config {
                print_config(&scenario, &scenario.search);
            }
            let frontier = if oracle {
                brute_force_um(&scenario.network, &scenario.tariffs, &scenario.search)?
            } else {
                enumerate_pareto_exact(&scenario.network, &scenario.tariffs, &scenario.search)?
            };
            report_frontier(&scenario, &frontier, &out.out)
        }
    }
}

fn report_frontier(
    scenario: &Scenario,
    frontier: &[ObjectivePoint],
    out: &Path,
) -> Result<ExitCode> {
    for (i, point) in frontier.iter().enumerate() {
        let services: Vec<&str> = point.plan.active.iter().map(|s| s.as_str()).collect();
        println!(
            "plan-{i:03}: z1 = {:.2}, z2 = {:.2}, z2 - z1 = {:.2}, services = [{}]",
            point.z1,
            point.z2,
            point.net_value(),
            services.join(", ")
        );
    }
    let selected = select_report_point(frontier);
    let paths = match selected {
        Some(idx) => {
            let contexts =
                build_demand_contexts(&scenario.network, &frontier[idx].plan, &scenario.tariffs)?;
            let rail = rail_share(&frontier[idx].lm, &contexts);
            println!(
                "selected plan-{idx:03} (best z2 - z1); rail share {:.1}%",
                100.0 * rail
            );
            write_report(out, frontier, Some((&frontier[idx], &contexts)))?
        }
        None => write_report(out, frontier, None)?,
    };
    println!(
        "wrote {}, {}, {}",
        paths.frontier.display(),
        paths.assignment.display(),
        paths.plan.display()
    );
    Ok(ExitCode::SUCCESS)
}
