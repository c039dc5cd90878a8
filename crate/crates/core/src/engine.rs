//! Experiment driver: one round per workload profile, strategy execution,
//! application of assignments against realized capacity, and metrics.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{place_cloud, place_first_fit};
use crate::config::{RunConfig, Strategy};
use crate::costmodel::{
    check_capacity, deployment_cost, empty_loads, metric_slice, processing_time,
    response_time_at_rate, utilization_vector, variance, Assignment, NodeLoadState,
    VarianceMetric,
};
use crate::epos::{build_tree, run_epos, EposOutcome};
use crate::error::{Error, Result};
use crate::plangen::{generate_plans, AgentView, PlacementPlan};
use crate::seed::{self, Stream};
use crate::topology::{generate_topology, Layer, NetworkGraph, NodeId};
use crate::workload::{
    distribute_to_ingress, load_profiles, materialize_requests, ServiceRequest, WorkloadProfile,
};

/// Metrics of one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub profile: usize,
    /// Requests handled this round, fresh and carried over.
    pub requests: usize,
    pub carried_in: usize,
    pub hosted: usize,
    pub cloud_hosted: usize,
    pub unhosted: usize,
    pub carried_out: usize,
    pub dropped: usize,
    /// Planned assignments refused at application time.
    pub rejected: usize,
    pub variance_cpu: f64,
    pub variance_mem: f64,
    pub variance_overall: f64,
    pub predicted_cpu: Option<f64>,
    pub predicted_mem: Option<f64>,
    pub predicted_overall: Option<f64>,
    pub variance_error: f64,
    pub avg_fog_utilization: f64,
    /// Mean of CPU and memory utilization, per fog node in id order.
    pub fog_utilization: Vec<f64>,
    pub deadline_violations: usize,
    pub deadline_violation_rate: f64,
    pub avg_execution_delay: f64,
    pub deployment_bytes: f64,
    pub capacity_violations: usize,
    pub epos_iterations: Option<usize>,
}

#[derive(Clone, Copy)]
enum Agg {
    Sum,
    Mean,
}

impl RoundMetrics {
    fn scalars(&self) -> Vec<(&'static str, f64, Agg)> {
        use Agg::*;
        let mut v = vec![
            ("requests", self.requests as f64, Sum),
            ("carried_in", self.carried_in as f64, Sum),
            ("hosted", self.hosted as f64, Sum),
            ("cloud_hosted", self.cloud_hosted as f64, Sum),
            ("unhosted", self.unhosted as f64, Sum),
            ("carried_out", self.carried_out as f64, Sum),
            ("dropped", self.dropped as f64, Sum),
            ("rejected", self.rejected as f64, Sum),
            ("variance_cpu", self.variance_cpu, Mean),
            ("variance_mem", self.variance_mem, Mean),
            ("variance_overall", self.variance_overall, Mean),
        ];
        if let (Some(c), Some(m), Some(o)) =
            (self.predicted_cpu, self.predicted_mem, self.predicted_overall)
        {
            v.push(("predicted_cpu", c, Mean));
            v.push(("predicted_mem", m, Mean));
            v.push(("predicted_overall", o, Mean));
        }
        v.extend([
            ("variance_error", self.variance_error, Mean),
            ("avg_fog_utilization", self.avg_fog_utilization, Mean),
            ("deadline_violations", self.deadline_violations as f64, Sum),
            ("deadline_violation_rate", self.deadline_violation_rate, Mean),
            ("avg_execution_delay", self.avg_execution_delay, Mean),
            ("deployment_bytes", self.deployment_bytes, Sum),
            ("capacity_violations", self.capacity_violations as f64, Sum),
        ]);
        if let Some(i) = self.epos_iterations {
            v.push(("epos_iterations", i as f64, Mean));
        }
        v
    }

    /// Scalar metrics in a fixed order.
    pub fn scalar_metrics(&self) -> Vec<(&'static str, f64)> {
        self.scalars().into_iter().map(|(k, v, _)| (k, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub bridges_added: usize,
    pub rounds: Vec<RoundMetrics>,
    /// Means of rates and variances, sums of counts, over all rounds.
    pub aggregate: Vec<(String, f64)>,
    /// Min-max normalized variance error, set when the report belongs to a
    /// lambda sweep.
    pub variance_error_normalized: Option<f64>,
    pub valid: bool,
    pub error: Option<String>,
}

impl MetricsReport {
    fn new(strategy: Strategy, seed: u64, bridges_added: usize) -> Self {
        Self {
            strategy,
            seed,
            bridges_added,
            rounds: Vec::new(),
            aggregate: Vec::new(),
            variance_error_normalized: None,
            valid: true,
            error: None,
        }
    }

    fn finish(&mut self) {
        let mut acc: Vec<(String, f64, Agg)> = Vec::new();
        for r in &self.rounds {
            for (k, v, agg) in r.scalars() {
                match acc.iter_mut().find(|(name, _, _)| name == k) {
                    Some(slot) => slot.1 += v,
                    None => acc.push((k.to_string(), v, agg)),
                }
            }
        }
        let n = self.rounds.len().max(1) as f64;
        self.aggregate = acc
            .into_iter()
            .map(|(k, v, agg)| match agg {
                Agg::Sum => (k, v),
                Agg::Mean => (k, v / n),
            })
            .collect();
    }

    pub fn aggregate_value(&self, name: &str) -> Option<f64> {
        self.aggregate.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn round_for_profile(&self, profile: usize) -> Option<&RoundMetrics> {
        self.rounds.iter().find(|r| r.profile == profile)
    }

    pub fn capacity_violations(&self) -> usize {
        self.rounds.iter().map(|r| r.capacity_violations).sum()
    }
}

/// Per-round EPOS state kept for plan export and learning curves.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub round: usize,
    pub profile: usize,
    /// Fog agents in tree order; `plans[i]` belongs to `agents[i]`.
    pub agents: Vec<NodeId>,
    /// Empty unless plans were requested.
    pub plans: Vec<Vec<PlacementPlan>>,
    pub outcome: EposOutcome,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub traces: Vec<RoundTrace>,
}

/// Topology with capacities, as every strategy of a run sees it.
pub fn build_network(cfg: &RunConfig) -> Result<NetworkGraph> {
    generate_topology(&cfg.topology, cfg.seed)?.assign_capacities(&cfg.capacity, cfg.seed)
}

/// Fresh requests of one profile with ingress nodes assigned.
pub fn profile_requests(
    cfg: &RunConfig,
    g: &NetworkGraph,
    profile: &WorkloadProfile,
) -> Result<Vec<ServiceRequest>> {
    let reqs = materialize_requests(profile, &cfg.workload.deadlines, cfg.seed);
    distribute_to_ingress(
        reqs,
        g,
        cfg.workload.distribution,
        seed::derive(cfg.seed, Stream::Ingress, profile.index as u64),
    )
}

/// Profiles selected by the config, in simulation order.
pub fn selected_profiles(cfg: &RunConfig) -> Result<Vec<WorkloadProfile>> {
    let all = load_profiles(&cfg.profile_source()?, cfg.workload.duration_ms)?;
    cfg.workload
        .profiles
        .iter()
        .map(|&p| {
            all.iter()
                .find(|w| w.index == p)
                .cloned()
                .ok_or_else(|| Error::Config(format!("profile {p} not found in workload")))
        })
        .collect()
}

pub fn run_experiment(cfg: &RunConfig) -> Result<MetricsReport> {
    run_experiment_traced(cfg, false).map(|o| o.report)
}

/// Runs every configured round. Configuration problems are returned as
/// errors; a failure after round 0 has started yields a report flagged
/// invalid that holds the completed rounds.
pub fn run_experiment_traced(cfg: &RunConfig, keep_plans: bool) -> Result<RunOutput> {
    cfg.validate()?;
    let g = build_network(cfg)?;
    let profiles = selected_profiles(cfg)?;
    let mut report = MetricsReport::new(cfg.strategy, cfg.seed, g.bridges_added());
    let mut traces = Vec::new();

    let mut carried: Vec<(ServiceRequest, usize)> = Vec::new();
    let mut deployed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.len()];
    for (round, profile) in profiles.iter().enumerate() {
        let step = run_round(cfg, &g, round, profile, &carried, &deployed, keep_plans);
        match step {
            Ok(s) => {
                report.rounds.push(s.metrics);
                carried = s.carried;
                deployed = s.deployed;
                traces.extend(s.trace);
            }
            Err(e) => {
                report.valid = false;
                report.error = Some(e.to_string());
                break;
            }
        }
    }
    report.finish();
    Ok(RunOutput { report, traces })
}

struct RoundStep {
    metrics: RoundMetrics,
    carried: Vec<(ServiceRequest, usize)>,
    deployed: Vec<BTreeSet<usize>>,
    trace: Option<RoundTrace>,
}

fn run_round(
    cfg: &RunConfig,
    g: &NetworkGraph,
    round: usize,
    profile: &WorkloadProfile,
    carried: &[(ServiceRequest, usize)],
    deployed: &[BTreeSet<usize>],
    keep_plans: bool,
) -> Result<RoundStep> {
    let fresh = profile_requests(cfg, g, profile)?;
    let mut deferrals: BTreeMap<u64, usize> = BTreeMap::new();
    let mut requests: Vec<ServiceRequest> = Vec::with_capacity(fresh.len() + carried.len());
    for (r, d) in carried {
        let mut r = r.clone();
        r.waiting_ms += cfg.workload.duration_ms;
        deferrals.insert(r.id, *d);
        requests.push(r);
    }
    requests.extend(fresh);
    let by_id: BTreeMap<u64, &ServiceRequest> = requests.iter().map(|r| (r.id, r)).collect();

    // previous round's load is released; deployed services stay for one round
    let mut prior = empty_loads(g);
    for (l, s) in prior.iter_mut().zip(deployed) {
        l.hosted_services = s.clone();
    }

    let mut trace = None;
    let mut predicted: Option<Vec<f64>> = None;
    let mut rejected = 0;
    let (loads, hosted, unhosted) = match cfg.strategy {
        Strategy::Cloud => {
            let mut loads = prior.clone();
            let placed = place_cloud(&requests, g)?;
            for a in &placed {
                loads[a.host].assigned += by_id[&a.request].demand;
            }
            (loads, placed, Vec::new())
        }
        Strategy::FirstFit => {
            let mut loads = prior.clone();
            let p = place_first_fit(
                &requests,
                g,
                &mut loads,
                cfg.cost.reserve,
                cfg.baselines.first_fit_self_host,
            );
            (loads, p.assignments, p.unhosted)
        }
        Strategy::Epos => {
            let (planned, plan_unhosted, t) = epos_select(cfg, g, round, profile, &requests, &prior)?;
            let mut ordered: Vec<Assignment> = planned;
            ordered.sort_by(|a, b| {
                let (ra, rb) = (by_id[&a.request], by_id[&b.request]);
                ra.arrival_ms.total_cmp(&rb.arrival_ms).then(ra.id.cmp(&rb.id))
            });
            let mut plan_loads = prior.clone();
            let mut loads = prior.clone();
            let mut hosted = Vec::with_capacity(ordered.len());
            let mut unhosted = plan_unhosted;
            for a in ordered {
                let d = by_id[&a.request].demand;
                plan_loads[a.host].assigned += d;
                if check_capacity(g.capacity(a.host), loads[a.host].assigned + d, cfg.cost.reserve) {
                    loads[a.host].assigned += d;
                    hosted.push(a);
                } else {
                    rejected += 1;
                    unhosted.push(a.request);
                }
            }
            predicted = Some(utilization_vector(&plan_loads, g));
            trace = Some(t);
            (loads, hosted, unhosted)
        }
    };

    let mut m = measure(cfg, g, &prior, &loads, &hosted, &by_id)?;
    m.round = round;
    m.profile = profile.index;
    m.requests = requests.len();
    m.carried_in = carried.len();
    m.rejected = rejected;
    if let Some(p) = &predicted {
        let pc = variance(metric_slice(p, VarianceMetric::Cpu));
        let pm = variance(metric_slice(p, VarianceMetric::Mem));
        let po = variance(p);
        m.predicted_cpu = Some(pc);
        m.predicted_mem = Some(pm);
        m.predicted_overall = Some(po);
        m.variance_error = (po - m.variance_overall).abs();
    }
    if let Some(t) = &trace {
        m.epos_iterations = Some(t.outcome.history.len().saturating_sub(1));
    }

    let mut next_carried = Vec::new();
    let mut unhosted_sorted = unhosted;
    unhosted_sorted.sort_unstable();
    for id in &unhosted_sorted {
        let d = deferrals.get(id).copied().unwrap_or(0) + 1;
        if d > cfg.engine.max_carry_rounds {
            m.dropped += 1;
        } else {
            next_carried.push((by_id[id].clone(), d));
        }
    }
    m.unhosted = unhosted_sorted.len();
    m.carried_out = next_carried.len();

    let mut next_deployed = vec![BTreeSet::new(); g.len()];
    for a in &hosted {
        next_deployed[a.host].insert(by_id[&a.request].service);
    }

    let trace = trace.map(|mut t| {
        if !keep_plans {
            t.plans.clear();
        }
        t
    });
    Ok(RoundStep {
        metrics: m,
        carried: next_carried,
        deployed: next_deployed,
        trace,
    })
}

/// Plans for every fog agent, then the collective selection. Returns the
/// planned assignments, the requests no plan could host, and the trace.
fn epos_select(
    cfg: &RunConfig,
    g: &NetworkGraph,
    round: usize,
    profile: &WorkloadProfile,
    requests: &[ServiceRequest],
    prior: &[NodeLoadState],
) -> Result<(Vec<Assignment>, Vec<u64>, RoundTrace)> {
    let agents = g.fog_nodes();
    let mut inbox: BTreeMap<NodeId, Vec<ServiceRequest>> = BTreeMap::new();
    for r in requests {
        inbox.entry(r.ingress).or_default().push(r.clone());
    }
    let params = cfg.plan_params();
    let plans: Vec<Vec<PlacementPlan>> = agents
        .par_iter()
        .map(|&a| {
            let view = AgentView::new(
                g,
                a,
                inbox.get(&a).cloned().unwrap_or_default(),
                cfg.epos.hop_limit,
                prior,
                seed::derive(cfg.seed, Stream::Plans, ((round as u64) << 32) | a as u64),
            );
            generate_plans(&view, cfg.epos.plan_count, &params)
        })
        .collect::<Result<_>>()?;
    let tree = build_tree(&agents, cfg.epos.fanout, cfg.seed)?;
    let outcome = run_epos(&plans, &tree, &cfg.epos_params(), None)?;

    let mut planned = Vec::new();
    let mut unhosted = Vec::new();
    for (i, &sel) in outcome.selections.iter().enumerate() {
        let plan = &plans[i][sel];
        planned.extend(
            plan.assignments
                .iter()
                .map(|(&request, &host)| Assignment { request, host }),
        );
        unhosted.extend(plan.unhosted.iter().copied());
    }
    let trace = RoundTrace {
        round,
        profile: profile.index,
        agents,
        plans,
        outcome,
    };
    Ok((planned, unhosted, trace))
}

/// Realized metrics of one round from final loads. Counters that depend on
/// the round bookkeeping are left at zero for the caller.
fn measure(
    cfg: &RunConfig,
    g: &NetworkGraph,
    prior: &[NodeLoadState],
    loads: &[NodeLoadState],
    hosted: &[Assignment],
    by_id: &BTreeMap<u64, &ServiceRequest>,
) -> Result<RoundMetrics> {
    // the unbounded cloud of the Cloud strategy executes on arrival
    let unbounded_cloud = cfg.strategy == Strategy::Cloud;
    let bounded = |n: NodeId| !(unbounded_cloud && g.node(n).is_cloud());

    let mut capacity_violations = 0;
    for l in loads {
        if !bounded(l.node) {
            continue;
        }
        let cap = g.capacity(l.node);
        let a = l.assigned;
        if !(a.cpu < cap.cpu && a.mem < cap.mem && a.storage < cap.storage) {
            capacity_violations += 1;
        }
    }

    let mut violations = 0;
    let mut delay_sum = 0.0;
    for a in hosted {
        let r = by_id[&a.request];
        let e = if bounded(a.host) {
            let rate = loads[a.host].assigned.cpu;
            if processing_time(g.capacity(a.host).cpu, rate, cfg.cost.time_unit_scale).is_err() {
                capacity_violations += 1;
            }
            response_time_at_rate(r, a.host, g, rate, &cfg.cost)?
        } else {
            r.waiting_ms
        };
        violations += usize::from(e >= r.deadline_ms);
        delay_sum += (r.deadline_ms - e).abs();
    }
    let n_hosted = hosted.len();
    let (rate, delay) = if n_hosted == 0 {
        (0.0, 0.0)
    } else {
        (violations as f64 / n_hosted as f64, delay_sum / n_hosted as f64)
    };

    let v = utilization_vector(loads, g);
    let n = g.len();
    let fog_utilization: Vec<f64> = g
        .nodes()
        .iter()
        .filter(|s| s.layer == Layer::Fog)
        .map(|s| 0.5 * (v[s.id] + v[n + s.id]))
        .collect();
    let avg_fog = if fog_utilization.is_empty() {
        0.0
    } else {
        fog_utilization.iter().sum::<f64>() / fog_utilization.len() as f64
    };

    let deployment_bytes =
        deployment_cost(hosted.iter().map(|a| (by_id[&a.request], a.host)), g, prior);

    Ok(RoundMetrics {
        round: 0,
        profile: 0,
        requests: 0,
        carried_in: 0,
        hosted: n_hosted,
        cloud_hosted: hosted.iter().filter(|a| g.node(a.host).is_cloud()).count(),
        unhosted: 0,
        carried_out: 0,
        dropped: 0,
        rejected: 0,
        variance_cpu: variance(metric_slice(&v, VarianceMetric::Cpu)),
        variance_mem: variance(metric_slice(&v, VarianceMetric::Mem)),
        variance_overall: variance(&v),
        predicted_cpu: None,
        predicted_mem: None,
        predicted_overall: None,
        variance_error: 0.0,
        avg_fog_utilization: avg_fog,
        fog_utilization,
        deadline_violations: violations,
        deadline_violation_rate: rate,
        avg_execution_delay: delay,
        deployment_bytes,
        capacity_violations,
        epos_iterations: None,
    })
}

/// Result of one strategy in one grid cell.
#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub config: RunConfig,
    pub results: Vec<StrategyResult>,
}

impl CellResult {
    pub fn report(&self, s: Strategy) -> Option<&MetricsReport> {
        self.results
            .iter()
            .find(|r| r.strategy == s)
            .and_then(|r| r.outcome.as_ref().ok())
    }

    /// EPOS minus First Fit for an aggregate metric.
    pub fn difference(&self, metric: &str) -> Option<f64> {
        let e = self.report(Strategy::Epos)?.aggregate_value(metric)?;
        let f = self.report(Strategy::FirstFit)?.aggregate_value(metric)?;
        Some(e - f)
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub cells: Vec<CellResult>,
}

/// Runs every strategy on every cell config. Strategies within a cell share
/// the seed and hence the network and request stream. A failing run marks
/// its cell entry failed without stopping the grid. Runs are spread over
/// the current rayon pool; results do not depend on its size.
pub fn compare_strategies(cells: &[RunConfig], strategies: &[Strategy]) -> Result<ComparisonTable> {
    if cells.is_empty() || strategies.is_empty() {
        return Err(Error::Config("comparison grid is empty".into()));
    }
    let jobs: Vec<(usize, Strategy)> = (0..cells.len())
        .flat_map(|c| strategies.iter().map(move |&s| (c, s)))
        .collect();
    let runs: Vec<StrategyResult> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let mut cfg = cells[c].clone();
            cfg.strategy = s;
            let outcome = match run_experiment(&cfg) {
                Ok(r) if r.valid => Ok(r),
                Ok(r) => Err(r.error.unwrap_or_else(|| "run failed".into())),
                Err(e) => Err(e.to_string()),
            };
            StrategyResult {
                strategy: s,
                outcome,
            }
        })
        .collect();
    let mut runs = runs.into_iter();
    let mut table = ComparisonTable {
        cells: cells
            .iter()
            .map(|c| CellResult {
                config: c.clone(),
                results: runs.by_ref().take(strategies.len()).collect(),
            })
            .collect(),
    };
    normalize_variance_error(&mut table);
    Ok(table)
}

fn family_key(c: &RunConfig) -> String {
    let mut c = c.clone();
    c.epos.lambda = 0.0;
    c.cell_key()
}

/// Min-max normalizes EPOS variance error over each lambda sweep, that is
/// over cells that differ only in lambda.
fn normalize_variance_error(table: &mut ComparisonTable) {
    let mut families: BTreeMap<String, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (ci, cell) in table.cells.iter().enumerate() {
        for (ri, r) in cell.results.iter().enumerate() {
            if let (Strategy::Epos, Ok(rep)) = (r.strategy, &r.outcome) {
                if let Some(e) = rep.aggregate_value("variance_error") {
                    families
                        .entry(family_key(&cell.config))
                        .or_default()
                        .push((ci, ri, e));
                }
            }
        }
    }
    for members in families.values() {
        let lo = members.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
        let hi = members.iter().map(|m| m.2).fold(f64::NEG_INFINITY, f64::max);
        for &(ci, ri, e) in members {
            let norm = if hi > lo { (e - lo) / (hi - lo) } else { 0.0 };
            if let Ok(rep) = &mut table.cells[ci].results[ri].outcome {
                rep.variance_error_normalized = Some(norm);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(strategy: Strategy) -> RunConfig {
        RunConfig::with_overrides(&[
            "topology.nodes=40".into(),
            "workload.profiles=[0, 1]".into(),
            "workload.synthetic.requests=[80, 120]".into(),
            "epos.plan_count=5".into(),
            "epos.iterations=10".into(),
            format!("strategy=\"{strategy}\""),
        ])
        .unwrap()
    }

    #[test]
    fn conservation_each_round() {
        for s in [Strategy::Cloud, Strategy::FirstFit, Strategy::Epos] {
            let r = run_experiment(&small(s)).unwrap();
            assert!(r.valid, "{s}: {:?}", r.error);
            assert_eq!(r.rounds.len(), 2);
            for m in &r.rounds {
                assert_eq!(m.requests, m.hosted + m.unhosted, "{s}");
                assert_eq!(m.unhosted, m.carried_out + m.dropped, "{s}");
                assert!((0.0..=1.0).contains(&m.deadline_violation_rate));
                assert_eq!(m.capacity_violations, 0);
            }
        }
    }

    #[test]
    fn cloud_leaves_fog_idle() {
        let r = run_experiment(&small(Strategy::Cloud)).unwrap();
        for m in &r.rounds {
            assert!(m.fog_utilization.iter().all(|&u| u == 0.0));
            assert_eq!(m.deadline_violations, 0);
            assert_eq!(m.variance_error, 0.0);
            assert_eq!(m.cloud_hosted, m.hosted);
        }
    }

    #[test]
    fn no_rejection_means_no_error() {
        let r = run_experiment(&small(Strategy::Epos)).unwrap();
        for m in &r.rounds {
            if m.rejected == 0 {
                assert_eq!(m.variance_error, 0.0);
            }
        }
    }

    #[test]
    fn empty_grid_is_error() {
        assert!(compare_strategies(&[], &[Strategy::Epos]).is_err());
        assert!(compare_strategies(&[RunConfig::default()], &[]).is_err());
    }

    #[test]
    fn strategies_share_requests() {
        let a = small(Strategy::Epos);
        let b = small(Strategy::FirstFit);
        let ga = build_network(&a).unwrap();
        let p = &selected_profiles(&a).unwrap()[1];
        let ra = profile_requests(&a, &ga, p).unwrap();
        let rb = profile_requests(&b, &build_network(&b).unwrap(), p).unwrap();
        assert_eq!(ra, rb);
    }
}
