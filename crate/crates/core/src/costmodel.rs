//! Delay, cost and constraint formulas for service placement.
//!
//! Processing delay follows an M/M/1 queue at the host: with capacity `P`
//! and aggregate arrival rate `z`, the mean sojourn time is `1 / (P - z)`,
//! scaled to milliseconds by [`CostParams::time_unit_scale`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Layer, NetworkGraph, NodeId, Resources};
use crate::workload::ServiceRequest;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostParams {
    /// Converts `1 / (capacity - rate)` into milliseconds.
    pub time_unit_scale: f64,
    /// Fraction of each node's capacity that may be allocated.
    pub reserve: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            time_unit_scale: 1000.0,
            reserve: 0.95,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_unit_scale > 0.0 && self.time_unit_scale.is_finite()) {
            return Err(Error::Config("time_unit_scale must be positive".into()));
        }
        if !(self.reserve > 0.0 && self.reserve < 1.0) {
            return Err(Error::Config(format!(
                "reserve must lie in (0,1), got {}",
                self.reserve
            )));
        }
        Ok(())
    }
}

/// Load currently assigned to one node plus the services it already hosts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeLoadState {
    pub node: NodeId,
    pub assigned: Resources,
    pub hosted_services: BTreeSet<usize>,
}

impl NodeLoadState {
    pub fn empty(node: NodeId) -> Self {
        Self {
            node,
            ..Default::default()
        }
    }
}

/// Fresh, empty load states for every node of `g`.
pub fn empty_loads(g: &NetworkGraph) -> Vec<NodeLoadState> {
    (0..g.len()).map(NodeLoadState::empty).collect()
}

/// Request `request` placed on node `host`. A request without an
/// assignment is unhosted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub request: u64,
    pub host: NodeId,
}

/// Mean M/M/1 sojourn time in milliseconds.
pub fn processing_time(capacity: f64, arrival_rate: f64, time_unit_scale: f64) -> Result<f64> {
    if arrival_rate < capacity {
        Ok(time_unit_scale / (capacity - arrival_rate))
    } else {
        Err(Error::Unstable {
            rate: arrival_rate,
            capacity,
        })
    }
}

/// Response time when the host's aggregate CPU arrival rate, including
/// `req` itself, is already known.
pub fn response_time_at_rate(
    req: &ServiceRequest,
    host: NodeId,
    g: &NetworkGraph,
    host_arrival_rate: f64,
    params: &CostParams,
) -> Result<f64> {
    let p = processing_time(g.capacity(host).cpu, host_arrival_rate, params.time_unit_scale)?;
    let transfer = if host == req.ingress {
        0.0
    } else {
        2.0 * g.path_delay(req.ingress, host)
    };
    Ok(p + transfer + req.waiting_ms)
}

/// Response time of `req` on `host`, counting its own demand on top of the
/// load already recorded in `loads`.
pub fn response_time(
    req: &ServiceRequest,
    host: NodeId,
    g: &NetworkGraph,
    loads: &[NodeLoadState],
    params: &CostParams,
) -> Result<f64> {
    let rate = loads[host].assigned.cpu + req.demand.cpu;
    response_time_at_rate(req, host, g, rate, params)
}

/// 1 when the deadline is missed; a response exactly at the deadline misses.
pub fn deadline_violation(response_ms: f64, deadline_ms: f64) -> u8 {
    u8::from(response_ms >= deadline_ms)
}

/// Bytes transferred to deploy services on fog hosts that do not hold them
/// yet. Cloud deployments are free.
pub fn deployment_cost<'a>(
    placed: impl IntoIterator<Item = (&'a ServiceRequest, NodeId)>,
    g: &NetworkGraph,
    loads: &[NodeLoadState],
) -> f64 {
    placed
        .into_iter()
        .filter(|&(req, host)| {
            g.node(host).layer == Layer::Fog && !loads[host].hosted_services.contains(&req.service)
        })
        .map(|(req, _)| req.demand.storage)
        .sum()
}

pub fn unhosted_cost(assignments: &[Assignment], requests: &[ServiceRequest]) -> usize {
    let hosted: BTreeSet<u64> = assignments.iter().map(|a| a.request).collect();
    requests.iter().filter(|r| !hosted.contains(&r.id)).count()
}

/// Raw terms of a plan's local cost.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub requests: usize,
    pub violations: usize,
    pub deployment_bytes: f64,
    /// Total storage demand of the plan's requests.
    pub storage_demand: f64,
    pub unhosted: usize,
}

impl CostBreakdown {
    pub fn violation_term(&self) -> f64 {
        ratio(self.violations as f64, self.requests as f64)
    }

    pub fn deployment_term(&self) -> f64 {
        ratio(self.deployment_bytes, self.storage_demand)
    }

    pub fn unhosted_term(&self) -> f64 {
        ratio(self.unhosted as f64, self.requests as f64)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// Sum of the three cost terms, each scaled to [0, 1].
pub fn local_cost(c: &CostBreakdown) -> f64 {
    c.violation_term() + c.deployment_term() + c.unhosted_term()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMetric {
    Cpu,
    Mem,
    #[default]
    Overall,
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Selects the part of a `2N` utilization vector the metric covers.
pub fn metric_slice(v: &[f64], metric: VarianceMetric) -> &[f64] {
    let n = v.len() / 2;
    match metric {
        VarianceMetric::Cpu => &v[..n],
        VarianceMetric::Mem => &v[n..],
        VarianceMetric::Overall => v,
    }
}

/// Utilization ratios laid out as `[cpu_0..cpu_{N-1}, mem_0..mem_{N-1}]`.
pub fn utilization_vector(loads: &[NodeLoadState], g: &NetworkGraph) -> Vec<f64> {
    let n = g.len();
    let mut v = vec![0.0; 2 * n];
    for l in loads {
        let cap = g.capacity(l.node);
        v[l.node] = l.assigned.cpu / cap.cpu;
        v[n + l.node] = l.assigned.mem / cap.mem;
    }
    v
}

pub fn utilization_variance(
    loads: &[NodeLoadState],
    g: &NetworkGraph,
    metric: VarianceMetric,
) -> f64 {
    variance(metric_slice(&utilization_vector(loads, g), metric))
}

/// True when the load after a hypothetical assignment stays strictly below
/// `reserve` times the capacity in CPU, memory and storage.
pub fn check_capacity(capacity: Resources, load_after: Resources, reserve: f64) -> bool {
    load_after.cpu < capacity.cpu * reserve
        && load_after.mem < capacity.mem * reserve
        && load_after.storage < capacity.storage * reserve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{graph_from_edges, NodeSpec};

    const SCALE: f64 = 1000.0;

    fn graph() -> NetworkGraph {
        // 0 - 1 (5 ms), 1 - 2 cloud (50 ms)
        let cap = Resources::new(10.0, 10.0, 10.0);
        let nodes = vec![
            NodeSpec { id: 0, layer: Layer::Fog, capacity: cap },
            NodeSpec { id: 1, layer: Layer::Fog, capacity: cap },
            NodeSpec { id: 2, layer: Layer::Cloud, capacity: cap },
        ];
        graph_from_edges(nodes, &[(0, 1, 5.0), (1, 2, 50.0)]).unwrap()
    }

    fn req(id: u64, cpu: f64, storage: f64, waiting: f64) -> ServiceRequest {
        ServiceRequest {
            id,
            service: id as usize,
            demand: Resources::new(cpu, 1.0, storage),
            deadline_ms: 100.0,
            arrival_ms: 0.0,
            ingress: 0,
            waiting_ms: waiting,
        }
    }

    #[test]
    fn processing_time_examples() {
        assert_eq!(processing_time(10.0, 0.0, SCALE).unwrap(), 100.0);
        assert_eq!(processing_time(10.0, 6.0, SCALE).unwrap(), 250.0);
        assert!(matches!(
            processing_time(10.0, 10.0, SCALE),
            Err(Error::Unstable { .. })
        ));
        assert!(processing_time(10.0, 11.0, SCALE).is_err());
    }

    #[test]
    fn response_time_examples() {
        let g = graph();
        let loads = empty_loads(&g);
        let p = CostParams::default();
        assert_eq!(response_time(&req(0, 6.0, 1.0, 0.0), 0, &g, &loads, &p).unwrap(), 250.0);
        assert_eq!(response_time(&req(0, 6.0, 1.0, 10.0), 1, &g, &loads, &p).unwrap(), 270.0);
        let tiny = response_time(&req(0, 1e-12, 1.0, 0.0), 0, &g, &loads, &p).unwrap();
        assert!((tiny - 100.0).abs() < 1e-9);
        // cloud: p + 2 * (5 + 50)
        assert_eq!(response_time(&req(0, 6.0, 1.0, 0.0), 2, &g, &loads, &p).unwrap(), 360.0);
        assert!(response_time(&req(0, 10.0, 1.0, 0.0), 0, &g, &loads, &p).is_err());
    }

    #[test]
    fn deadline_violation_examples() {
        assert_eq!(deadline_violation(50.0, 100.0), 0);
        assert_eq!(deadline_violation(100.0, 100.0), 1);
        assert_eq!(deadline_violation(270.0, 30.0), 1);
    }

    #[test]
    fn deployment_cost_examples() {
        let g = graph();
        let mut loads = empty_loads(&g);
        let a = req(0, 1.0, 3.0, 0.0);
        let b = req(1, 1.0, 4.0, 0.0);
        let c = req(7, 1.0, 7.0, 0.0);
        assert_eq!(deployment_cost([(&a, 2), (&b, 2)], &g, &loads), 0.0);
        assert_eq!(deployment_cost([(&a, 0), (&b, 1)], &g, &loads), 7.0);
        loads[1].hosted_services.insert(7);
        assert_eq!(deployment_cost([(&c, 1)], &g, &loads), 0.0);
    }

    #[test]
    fn unhosted_cost_examples() {
        let reqs: Vec<_> = (0..5).map(|i| req(i, 1.0, 1.0, 0.0)).collect();
        let all: Vec<_> = (0..5).map(|i| Assignment { request: i, host: 0 }).collect();
        assert_eq!(unhosted_cost(&all, &reqs), 0);
        assert_eq!(unhosted_cost(&all[..3], &reqs), 2);
        assert_eq!(unhosted_cost(&[], &[]), 0);
    }

    #[test]
    fn local_cost_examples() {
        assert_eq!(local_cost(&CostBreakdown::default()), 0.0);
        let c = CostBreakdown {
            requests: 4,
            violations: 1,
            deployment_bytes: 0.0,
            storage_demand: 10.0,
            unhosted: 2,
        };
        assert_eq!(local_cost(&c), 0.75);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[0.5, 0.5, 0.5]), 0.0);
        assert_eq!(variance(&[0.0, 1.0]), 0.25);
        let v = variance(&[0.2, 0.4, 0.6]);
        assert!((v - 0.08 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn utilization_variance_metrics() {
        let g = graph();
        let mut loads = empty_loads(&g);
        loads[0].assigned = Resources::new(10.0, 0.0, 0.0);
        assert_eq!(
            utilization_variance(&loads, &g, VarianceMetric::Cpu),
            variance(&[1.0, 0.0, 0.0])
        );
        assert_eq!(utilization_variance(&loads, &g, VarianceMetric::Mem), 0.0);
        assert_eq!(
            utilization_variance(&loads, &g, VarianceMetric::Overall),
            variance(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn check_capacity_examples() {
        let cap = Resources::new(10.0, 10.0, 10.0);
        assert!(check_capacity(cap, Resources::new(5.0, 5.0, 5.0), 0.95));
        assert!(!check_capacity(cap, Resources::new(9.5, 1.0, 1.0), 0.95));
        assert!(!check_capacity(cap, Resources::new(1.0, 9.6, 1.0), 0.95));
    }
}
