use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use slicenc_core::analysis::{self, AnalysisError};
use slicenc_core::catalog::Catalog;
use slicenc_core::economics::{self, CashFlowInput};
use slicenc_core::scenario::{Decision, DecisionDoc, Scenario, ScenarioDoc};
use slicenc_opt::{demand_sweep, solve_bnb, Solution, SolveError, SolveOptions};
use slicenc_sim::{sweep_ue_count, BufferPolicy, SimConfig, SimError, TrafficModel};

use crate::table::{num, opt_num, text, Format, Table};
use crate::{Artifact, Buffers, Cli, CliError, Command, Model, Outcome};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let path = cli.scenario.as_ref().ok_or_else(|| CliError::Input("--scenario is required".into()))?;
    let doc = ScenarioDoc::parse(&read(path)?).map_err(input)?;
    Scenario::from_doc(doc).map_err(input)
}

fn decision(s: &Scenario, path: Option<&Path>) -> Result<Decision, CliError> {
    let doc = match path {
        Some(p) => DecisionDoc::parse(&read(p)?).map_err(input)?,
        None => s
            .doc
            .decision
            .clone()
            .ok_or_else(|| CliError::Input("no decision: pass --decision or embed [decision]".into()))?,
    };
    Decision::from_doc(s, &doc).map_err(input)
}

fn table(name: &str, t: &Table, format: Format) -> Artifact {
    Artifact { name: format!("{name}.{}", format.extension()), content: t.render(format) }
}

fn structured<T: Serialize>(name: &str, value: &T) -> Artifact {
    Artifact { name: format!("{name}.toml"), content: toml::to_string(value).expect("report serialises") }
}

fn done(artifacts: Vec<Artifact>, s: Option<&Scenario>) -> Outcome {
    Outcome { artifacts, digest: s.map(|s| s.doc.digest()), failure: None }
}

pub(crate) fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Catalog { overrides } => catalog(cli, overrides.as_deref()),
        Command::Analyze { decision } => analyze(cli, decision.as_deref()),
        Command::Optimize { max_nodes, sweep } => optimize(cli, *max_nodes, *sweep),
        Command::Simulate { decision, model, duration, buffers, sweep, counts, runs } => {
            let cfg = SimConfig {
                model: match model {
                    Model::TokenBucket => TrafficModel::TokenBucket,
                    Model::Poisson => TrafficModel::Poisson,
                },
                seed: cli.seed,
                duration_s: *duration,
                buffers: match buffers {
                    Buffers::Sized => BufferPolicy::Sized,
                    Buffers::Unlimited => BufferPolicy::Unlimited,
                },
            };
            simulate(cli, decision.as_deref(), cfg, *sweep, counts, *runs)
        }
        Command::Cashflow { input, vdus, vnfs } => cashflow(cli, input, *vdus, *vnfs),
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// The catalog with a partial document laid over it.
pub fn override_catalog(base: &Catalog, overrides: &str) -> Result<Catalog, CliError> {
    let over: toml::Table = toml::from_str(overrides).map_err(input)?;
    let mut merged = toml::Table::try_from(base).expect("catalog serialises");
    merge(&mut merged, over);
    let cat: Catalog = merged.try_into().map_err(input)?;
    cat.validate().map_err(input)?;
    Ok(cat)
}

fn catalog(cli: &Cli, overrides: Option<&Path>) -> Result<Outcome, CliError> {
    let s = cli.scenario.as_ref().map(|_| scenario(cli)).transpose()?;
    let (base, packet_bytes) = match &s {
        Some(s) => (s.catalog.clone(), s.doc.split_capacity_packet_bytes),
        None => (Catalog::default(), 1500.0),
    };
    let cat = match overrides {
        Some(p) => override_catalog(&base, &read(p)?)?,
        None => base,
    };
    let mut t = Table::new([
        "split",
        "label",
        "du_vnfs",
        "cu_vnfs",
        "du_processing_percent",
        "cu_processing_percent",
        "delay_requirement_s",
        "multiplier_urllc",
        "multiplier_embb",
        "required_capacity_bps",
    ]);
    for o in &cat.splits {
        let (du, cu) = cat.processing_fractions(o.id).map_err(input)?;
        t.push(vec![
            text(o.id.to_string()),
            text(o.id.label()),
            o.du_count().into(),
            o.cu_count().into(),
            num(du),
            num(cu),
            num(o.delay_requirement_s),
            num(o.multiplier_small),
            num(o.multiplier_large),
            num(cat.required_capacity(o.id, packet_bytes).map_err(input)?),
        ]);
    }
    Ok(done(vec![table("catalog", &t, cli.format)], s.as_ref()))
}

fn analysis_failure(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Catalog(_) | AnalysisError::MissingVdu(_) => CliError::Input(e.to_string()),
        AnalysisError::MissingPath { .. } | AnalysisError::Delay(_) => CliError::Infeasible(e.to_string()),
    }
}

fn analyze(cli: &Cli, decision_path: Option<&Path>) -> Result<Outcome, CliError> {
    let s = scenario(cli)?;
    let d = decision(&s, decision_path)?;
    let reports = analysis::analyze(&s, &d).map_err(analysis_failure)?;
    let mut flows = Table::new([
        "flow", "slice", "vdu", "path", "network_s", "ran_s", "propagation_s", "total_s", "sla_s", "margin_s",
    ]);
    let mut bursts = Table::new(["flow", "cross_flow", "node", "burst_bits"]);
    for r in &reports {
        let b = &r.breakdown;
        flows.push(vec![
            text(&r.id),
            text(&r.slice),
            r.vdu.into(),
            text(&r.path),
            num(b.queueing),
            num(b.processing_du + b.processing_cu),
            num(b.propagation),
            num(b.total),
            opt_num(r.sla_s),
            opt_num(r.margin_s),
        ]);
        for u in &r.bursts {
            bursts.push(vec![text(&r.id), text(&u.flow), text(&u.node), num(u.bits)]);
        }
    }
    let mut out = vec![table("analyze", &flows, cli.format)];
    if !bursts.rows.is_empty() {
        out.push(table("bursts", &bursts, cli.format));
    }
    Ok(done(out, Some(&s)))
}

/// Shares per node and slice, with each vDU's split and admission on its own
/// node's row.
pub fn allocation_table(s: &Scenario, sol: &Solution) -> Table {
    let ids: Vec<u32> = s.vdus.iter().map(|v| v.id).collect();
    let mut columns = vec!["node".to_string()];
    columns.extend(ids.iter().map(|u| format!("urllc/{u}")));
    columns.extend(ids.iter().map(|u| format!("embb/{u}")));
    columns.extend(["split", "admitted", "profit"].map(String::from));
    let mut t = Table { columns, rows: Vec::new() };
    let doc = sol.decision.to_doc(s);
    for (idx, node) in s.topology.nodes().iter().enumerate() {
        let shares = doc.shares.get(&node.id);
        let share = |key: String| num(shares.and_then(|m| m.get(&key)).copied().unwrap_or(0.0));
        let mut row = vec![text(&node.id)];
        row.extend(ids.iter().map(|u| share(format!("urllc/{u}"))));
        row.extend(ids.iter().map(|u| share(format!("embb/{u}"))));
        let hosted: Vec<_> = s
            .vdus
            .iter()
            .filter(|v| v.node == idx)
            .filter_map(|v| sol.decision.vdu(v.id))
            .collect();
        let join = |f: &dyn Fn(&slicenc_core::scenario::VduDecision) -> String| {
            if hosted.is_empty() {
                Value::Null
            } else {
                text(hosted.iter().map(|v| f(v)).collect::<Vec<_>>().join(" "))
            }
        };
        row.push(join(&|v| v.split.map_or("-".into(), |x| x.to_string())));
        row.push(join(&|v| v.admitted.to_string()));
        row.push(num(sol.profit));
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct Objective {
    profit: f64,
    revenue: f64,
    cost: f64,
    grid_step: f64,
    nodes_explored: u64,
    worst_urllc_delay_s: Option<f64>,
}

#[derive(Serialize)]
struct SolutionDoc {
    objective: Objective,
    decision: DecisionDoc,
}

fn solution_artifacts(cli: &Cli, s: &Scenario, sol: &Solution) -> Vec<Artifact> {
    let doc = SolutionDoc {
        objective: Objective {
            profit: sol.profit,
            revenue: sol.revenue,
            cost: sol.cost,
            grid_step: cli.grid_step,
            nodes_explored: sol.nodes_explored,
            worst_urllc_delay_s: sol.report.worst_urllc_delay(),
        },
        decision: sol.decision.to_doc(s),
    };
    vec![table("optimize", &allocation_table(s, sol), cli.format), structured("solution", &doc)]
}

fn solve_failure(e: SolveError) -> CliError {
    match e {
        SolveError::Infeasible => CliError::Infeasible(e.to_string()),
        SolveError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn optimize(cli: &Cli, max_nodes: Option<u64>, sweep: bool) -> Result<Outcome, CliError> {
    let s = scenario(cli)?;
    let opts = SolveOptions { grid_step: cli.grid_step, max_nodes };
    if sweep {
        let rows = demand_sweep(&s, opts).map_err(solve_failure)?;
        let mut t = Table::new(["embb_percent", "profit_ffs", "profit_o1", "profit_o9", "ffs_splits"]);
        for r in &rows {
            let pct: Vec<String> = r.embb_percent.iter().map(f64::to_string).collect();
            let hist: Vec<String> = r.comparison.split_histogram.iter().map(|(k, n)| format!("{k}:{n}")).collect();
            t.push(vec![
                text(pct.join(" ")),
                num(r.comparison.profit_ffs),
                num(r.comparison.profit_o1),
                num(r.comparison.profit_o9),
                text(hist.join(" ")),
            ]);
        }
        return Ok(done(vec![table("sweep", &t, cli.format)], Some(&s)));
    }
    match solve_bnb(&s, opts) {
        Ok(sol) => Ok(done(solution_artifacts(cli, &s, &sol), Some(&s))),
        Err(SolveError::BudgetExceeded { limit, best }) => {
            let failure = Some(CliError::Budget(format!("{limit} search nodes")));
            let artifacts = best.map(|b| solution_artifacts(cli, &s, &b)).unwrap_or_default();
            Ok(Outcome { artifacts, digest: Some(s.doc.digest()), failure })
        }
        Err(e) => Err(solve_failure(e)),
    }
}

fn sim_failure(e: SimError) -> CliError {
    match e {
        SimError::Analysis(a) => analysis_failure(a),
        SimError::Unstable { .. } => CliError::Infeasible(e.to_string()),
        SimError::Invalid(m) => CliError::Input(m),
    }
}

/// Up to ten admission counts spread evenly over `1..=admitted`.
pub fn default_counts(admitted: u32) -> Vec<u32> {
    let mut c: Vec<u32> = (1..=10u32).map(|i| (i * admitted).div_ceil(10).max(1)).collect();
    c.dedup();
    c
}

#[derive(Serialize)]
struct SimSummary {
    model: String,
    seed: u64,
    rng: String,
    duration_s: f64,
    emitted: u64,
    delivered: u64,
    dropped: u64,
    conformance_violations: u64,
    exceedances: u64,
    max_delay_s: f64,
    digest: String,
}

fn simulate(
    cli: &Cli,
    decision_path: Option<&Path>,
    cfg: SimConfig,
    sweep: Option<u32>,
    counts: &[u32],
    runs: u64,
) -> Result<Outcome, CliError> {
    let s = scenario(cli)?;
    let d = decision(&s, decision_path)?;
    if let Some(vdu) = sweep {
        let admitted = d.vdu(vdu).ok_or_else(|| CliError::Input(format!("vDU {vdu} is not in the decision")))?.admitted;
        let counts = if counts.is_empty() { default_counts(admitted) } else { counts.to_vec() };
        let seeds: Vec<u64> = (0..runs).map(|i| cfg.seed.wrapping_add(i)).collect();
        let points = sweep_ue_count(&s, &d, vdu, &counts, &seeds, &cfg).map_err(sim_failure)?;
        let mut t = Table::new(["ue_count", "sim_max_s", "bound_s", "wrr_bound_s", "dropped"]);
        for p in &points {
            t.push(vec![p.ue_count.into(), num(p.sim_max_s), opt_num(p.bound_s), opt_num(p.wrr_bound_s), p.dropped.into()]);
        }
        return Ok(done(vec![table("sweep", &t, cli.format)], Some(&s)));
    }
    let st = slicenc_sim::run(&s, &d, &cfg).map_err(sim_failure)?;
    let mut flows = Table::new([
        "flow", "slice", "vdu", "packets", "mean_s", "p50_s", "p90_s", "p99_s", "p999_s", "max_s", "bound_s",
        "exceeds_bound",
    ]);
    for f in &st.flows {
        flows.push(vec![
            text(&f.id),
            text(&f.slice),
            f.vdu.into(),
            f.packets.into(),
            num(f.mean_delay_s),
            num(f.p50_s),
            num(f.p90_s),
            num(f.p99_s),
            num(f.p999_s),
            num(f.max_delay_s),
            opt_num(f.bound_s),
            f.exceeds_bound.into(),
        ]);
    }
    let mut queues = Table::new(["node", "key", "weight", "buffer_bits", "max_backlog_bits", "drops"]);
    for q in &st.queues {
        queues.push(vec![
            text(&q.node),
            text(&q.key),
            q.weight.into(),
            opt_num(q.buffer_bits),
            num(q.max_backlog_bits),
            q.drops.into(),
        ]);
    }
    let summary = SimSummary {
        model: st.model.clone(),
        seed: st.seed,
        rng: st.rng.clone(),
        duration_s: st.duration_s,
        emitted: st.emitted,
        delivered: st.delivered,
        dropped: st.dropped,
        conformance_violations: st.conformance_violations,
        exceedances: st.exceedances,
        max_delay_s: st.max_delay(|_| true),
        digest: st.digest(),
    };
    let out = vec![
        table("simulate", &flows, cli.format),
        table("queues", &queues, cli.format),
        structured("summary", &summary),
    ];
    Ok(done(out, Some(&s)))
}

fn cashflow(cli: &Cli, path: &Path, vdus: Option<u32>, vnfs: Option<u32>) -> Result<Outcome, CliError> {
    let s = cli.scenario.as_ref().map(|_| scenario(cli)).transpose()?;
    let cf: CashFlowInput = toml::from_str(&read(path)?).map_err(input)?;
    cf.validate().map_err(CliError::Input)?;
    let (econ, catalog) = match &s {
        Some(s) => (s.econ, s.catalog.clone()),
        None => (Default::default(), Catalog::default()),
    };
    let vdus = vdus.unwrap_or_else(|| s.as_ref().map_or(4, |s| s.vdus.len() as u32));
    let vnfs = vnfs.unwrap_or(catalog.vnfs.len() as u32);
    let summary = economics::zeta_from_cashflow(&cf);
    let gamma = economics::gamma(vdus, vnfs, econ.eta, summary.zeta, econ.f_max);
    let mut t = Table::new(["break_even_connections", "zeta", "gamma"]);
    t.push(vec![num(summary.break_even_connections), num(summary.zeta), num(gamma)]);
    Ok(done(vec![table("cashflow", &t, cli.format)], s.as_ref()))
}
