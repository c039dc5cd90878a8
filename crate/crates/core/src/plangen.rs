//! Local generation of candidate placement plans.
//!
//! Each agent turns the requests it received into up to `plan_count`
//! alternative plans. A plan is built greedily: requests are ordered by
//! remaining slack, a random set of candidate hosts is drawn from the agent's
//! hop-bounded neighborhood and ordered by proximity, and requests are paired
//! one-to-one with hosts. A request whose host lacks capacity goes to the
//! nearest cloud node, or stays unhosted when the cloud is full too.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::costmodel::{
    check_capacity, deadline_violation, local_cost, response_time_at_rate, CostBreakdown,
    CostParams, NodeLoadState,
};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::topology::{HopLimit, Layer, NetworkGraph, NodeId, Resources};
use crate::workload::ServiceRequest;

/// Sparse view of a `2N` utilization vector: CPU ratios in `[0, N)`, memory
/// ratios in `[N, 2N)`. Absent entries are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UtilizationVector {
    len: usize,
    entries: Vec<(usize, f64)>,
}

impl UtilizationVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(v: &[f64]) -> Self {
        Self {
            len: v.len(),
            entries: v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (i, x))
                .collect(),
        }
    }

    fn from_map(len: usize, map: BTreeMap<usize, f64>) -> Self {
        Self {
            len,
            entries: map.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Non-zero entries, ascending by index.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries
            .binary_search_by_key(&i, |&(k, _)| k)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        self.add_to(&mut v);
        v
    }

    pub fn add_to(&self, dense: &mut [f64]) {
        for &(i, x) in &self.entries {
            dense[i] += x;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    /// Request id to host node.
    pub assignments: BTreeMap<u64, NodeId>,
    pub utilization: UtilizationVector,
    pub local_cost: f64,
    pub cost: CostBreakdown,
    pub unhosted: BTreeSet<u64>,
}

impl PlacementPlan {
    /// A plan with no assignments over a `2N` vector of the given length.
    pub fn empty(len: usize) -> Self {
        Self {
            assignments: BTreeMap::new(),
            utilization: UtilizationVector::zeros(len),
            local_cost: 0.0,
            cost: CostBreakdown::default(),
            unhosted: BTreeSet::new(),
        }
    }

    /// A bare plan carrying only a utilization vector and a cost, as used by
    /// the selection layer.
    pub fn from_vector(utilization: &[f64], local_cost: f64) -> Self {
        Self {
            utilization: UtilizationVector::from_dense(utilization),
            local_cost,
            ..Self::empty(utilization.len())
        }
    }
}

/// What one agent knows when it plans: the requests it received and the
/// capacity state of the hosts it may use.
#[derive(Debug, Clone)]
pub struct AgentView<'a> {
    pub agent: NodeId,
    pub requests: Vec<ServiceRequest>,
    /// Candidate fog hosts within the hop bound, ordered by (hops, id).
    pub neighborhood: Vec<NodeId>,
    pub cloud: Option<NodeId>,
    pub graph: &'a NetworkGraph,
    pub prior: &'a [NodeLoadState],
    pub seed: u64,
}

impl<'a> AgentView<'a> {
    pub fn new(
        graph: &'a NetworkGraph,
        agent: NodeId,
        requests: Vec<ServiceRequest>,
        hops: HopLimit,
        prior: &'a [NodeLoadState],
        seed: u64,
    ) -> Self {
        Self {
            agent,
            requests,
            neighborhood: graph.neighborhood(agent, hops),
            cloud: graph.nearest_cloud(agent),
            graph,
            prior,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanGenParams {
    pub cost: CostParams,
    /// On a capacity miss, try the remaining candidate hosts before the
    /// cloud. Off by default.
    pub retry_next_host: bool,
}

/// Draws `count` candidate hosts. Without replacement when the neighborhood
/// is large enough; otherwise repeated shuffled passes over it.
fn draw_hosts(neighborhood: &[NodeId], count: usize, rng: &mut impl rand::Rng) -> Vec<NodeId> {
    if neighborhood.is_empty() || count == 0 {
        return Vec::new();
    }
    if neighborhood.len() >= count {
        return rand::seq::index::sample(rng, neighborhood.len(), count)
            .into_iter()
            .map(|i| neighborhood[i])
            .collect();
    }
    let mut out = Vec::with_capacity(count);
    let mut pass = neighborhood.to_vec();
    while out.len() < count {
        pass.shuffle(rng);
        let take = (count - out.len()).min(pass.len());
        out.extend_from_slice(&pass[..take]);
    }
    out
}

fn build_plan(
    view: &AgentView<'_>,
    ordered: &[&ServiceRequest],
    hosts: &[NodeId],
    params: &PlanGenParams,
) -> Result<PlacementPlan> {
    let g = view.graph;
    let reserve = params.cost.reserve;
    let mut own: BTreeMap<NodeId, Resources> = BTreeMap::new();
    let mut assignments = BTreeMap::new();
    let mut unhosted = BTreeSet::new();

    let fits = |own: &BTreeMap<NodeId, Resources>, host: NodeId, demand: Resources| {
        let after = view.prior[host].assigned + own.get(&host).copied().unwrap_or_default() + demand;
        check_capacity(g.capacity(host), after, reserve)
    };

    for (i, req) in ordered.iter().enumerate() {
        let mut chosen = hosts.get(i).copied().filter(|&h| fits(&own, h, req.demand));
        if chosen.is_none() && params.retry_next_host {
            chosen = hosts
                .iter()
                .skip(i + 1)
                .copied()
                .find(|&h| fits(&own, h, req.demand));
        }
        if chosen.is_none() {
            chosen = view.cloud.filter(|&c| fits(&own, c, req.demand));
        }
        match chosen {
            Some(h) => {
                *own.entry(h).or_default() += req.demand;
                assignments.insert(req.id, h);
            }
            None => {
                unhosted.insert(req.id);
            }
        }
    }

    let n = g.len();
    let mut util = BTreeMap::new();
    for (&h, load) in &own {
        let cap = g.capacity(h);
        util.insert(h, load.cpu / cap.cpu);
        util.insert(n + h, load.mem / cap.mem);
    }

    let mut cost = CostBreakdown {
        requests: ordered.len(),
        unhosted: unhosted.len(),
        storage_demand: ordered.iter().map(|r| r.demand.storage).sum(),
        ..Default::default()
    };
    for req in ordered {
        let Some(&host) = assignments.get(&req.id) else {
            continue;
        };
        let rate = view.prior[host].assigned.cpu + own[&host].cpu;
        let e = response_time_at_rate(req, host, g, rate, &params.cost)?;
        cost.violations += deadline_violation(e, req.deadline_ms) as usize;
        if g.node(host).layer == Layer::Fog
            && !view.prior[host].hosted_services.contains(&req.service)
        {
            cost.deployment_bytes += req.demand.storage;
        }
    }

    Ok(PlacementPlan {
        assignments,
        utilization: UtilizationVector::from_map(2 * n, util),
        local_cost: local_cost(&cost),
        cost,
        unhosted,
    })
}

/// Generates up to `plan_count` distinct candidate plans, cheapest first.
pub fn generate_plans(
    view: &AgentView<'_>,
    plan_count: usize,
    params: &PlanGenParams,
) -> Result<Vec<PlacementPlan>> {
    if plan_count == 0 {
        return Err(Error::Parameter("plan_count must be at least 1".into()));
    }
    let mut ordered: Vec<&ServiceRequest> = view.requests.iter().collect();
    ordered.sort_by(|a, b| a.slack_ms().total_cmp(&b.slack_ms()).then(a.id.cmp(&b.id)));

    let g = view.graph;
    let mut plans = Vec::with_capacity(plan_count);
    for q in 0..plan_count {
        let mut rng = seed::stream_rng(view.seed, Stream::Plans, q as u64);
        let mut hosts = draw_hosts(&view.neighborhood, ordered.len(), &mut rng);
        hosts.sort_by_key(|&h| g.hop_distance(view.agent, h));
        plans.push(build_plan(view, &ordered, &hosts, params)?);
    }
    let mut plans = plan_distinctness(plans);
    plans.sort_by(|a, b| a.local_cost.total_cmp(&b.local_cost));
    Ok(plans)
}

/// Drops plans whose assignments repeat an earlier plan, keeping order.
pub fn plan_distinctness(plans: Vec<PlacementPlan>) -> Vec<PlacementPlan> {
    let mut seen: HashSet<Vec<(u64, NodeId)>> = HashSet::new();
    plans
        .into_iter()
        .filter(|p| {
            let key: Vec<_> = p.assignments.iter().map(|(&r, &h)| (r, h)).collect();
            seen.insert(key)
        })
        .collect()
}

/// Writes one agent's plan set: `plan_index,local_cost,assignments,` then
/// the dense utilization vector. Assignments are `request:host` pairs
/// joined by `;`.
pub fn write_plan_set(plans: &[PlacementPlan], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (i, p) in plans.iter().enumerate() {
        let assigned = p
            .assignments
            .iter()
            .map(|(r, h)| format!("{r}:{h}"))
            .collect::<Vec<_>>()
            .join(";");
        write!(w, "{i},{},{assigned}", p.local_cost).map_err(io)?;
        for x in p.utilization.to_dense() {
            write!(w, ",{x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
