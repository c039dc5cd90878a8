//! Reference strategies: everything to the cloud, and First Fit over the
//! ingress node's direct neighbors.

use crate::costmodel::{check_capacity, Assignment, NodeLoadState};
use crate::error::{Error, Result};
use crate::topology::{NetworkGraph, NodeId};
use crate::workload::ServiceRequest;

/// Outcome of a sequential placement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placement {
    pub assignments: Vec<Assignment>,
    pub unhosted: Vec<u64>,
}

/// Sends every request to the cloud node nearest to its ingress. Cloud
/// capacity is treated as unbounded.
pub fn place_cloud(requests: &[ServiceRequest], g: &NetworkGraph) -> Result<Vec<Assignment>> {
    requests
        .iter()
        .map(|r| {
            g.nearest_cloud(r.ingress)
                .map(|host| Assignment {
                    request: r.id,
                    host,
                })
                .ok_or_else(|| Error::Config("network has no cloud node".into()))
        })
        .collect()
}

/// Direct neighbors of `ingress` ordered by link latency, with the ingress
/// itself first at latency 0 when `self_host` is set.
pub fn first_fit_candidates(g: &NetworkGraph, ingress: NodeId, self_host: bool) -> Vec<NodeId> {
    let mut out: Vec<(f64, NodeId)> = g
        .neighbors(ingress)
        .iter()
        .filter(|&&(v, _)| !g.node(v).is_cloud())
        .map(|&(v, d)| (d, v))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut ids: Vec<NodeId> = Vec::with_capacity(out.len() + 1);
    if self_host && !g.node(ingress).is_cloud() {
        ids.push(ingress);
    }
    ids.extend(out.into_iter().map(|(_, v)| v));
    ids
}

/// Places requests in arrival order (ties by id) on the first latency-sorted
/// direct neighbor with room, else on the nearest cloud node, else leaves
/// them unhosted. `loads` is updated as requests are placed.
pub fn place_first_fit(
    requests: &[ServiceRequest],
    g: &NetworkGraph,
    loads: &mut [NodeLoadState],
    reserve: f64,
    self_host: bool,
) -> Placement {
    let mut order: Vec<&ServiceRequest> = requests.iter().collect();
    order.sort_by(|a, b| a.arrival_ms.total_cmp(&b.arrival_ms).then(a.id.cmp(&b.id)));

    let mut out = Placement::default();
    for r in order {
        let fits = |h: NodeId, loads: &[NodeLoadState]| {
            check_capacity(g.capacity(h), loads[h].assigned + r.demand, reserve)
        };
        let host = first_fit_candidates(g, r.ingress, self_host)
            .into_iter()
            .find(|&h| fits(h, loads))
            .or_else(|| g.nearest_cloud(r.ingress).filter(|&c| fits(c, loads)));
        match host {
            Some(h) => {
                loads[h].assigned += r.demand;
                out.assignments.push(Assignment {
                    request: r.id,
                    host: h,
                });
            }
            None => out.unhosted.push(r.id),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::empty_loads;
    use crate::topology::{graph_from_edges, Layer, NodeSpec, Resources};

    fn star(caps: &[f64], delays: &[f64]) -> NetworkGraph {
        // fog 0 linked to fog 1..=k with the given delays; cloud linked to 0
        let k = caps.len();
        let mut nodes: Vec<NodeSpec> = caps
            .iter()
            .enumerate()
            .map(|(id, &c)| NodeSpec {
                id,
                layer: Layer::Fog,
                capacity: Resources::new(c, c, c),
            })
            .collect();
        nodes.push(NodeSpec {
            id: k,
            layer: Layer::Cloud,
            capacity: Resources::new(400.0, 500.0, 200.0),
        });
        let mut edges: Vec<_> = delays.iter().enumerate().map(|(i, &d)| (0, i + 1, d)).collect();
        edges.push((0, k, 50.0));
        graph_from_edges(nodes, &edges).unwrap()
    }

    fn req(id: u64, cpu: f64) -> ServiceRequest {
        ServiceRequest {
            id,
            service: 0,
            demand: Resources::new(cpu, cpu, cpu),
            deadline_ms: 100.0,
            arrival_ms: id as f64,
            ingress: 0,
            waiting_ms: 0.0,
        }
    }

    #[test]
    fn cloud_places_everything_on_cloud() {
        let g = star(&[10.0, 10.0], &[1.0]);
        let reqs: Vec<_> = (0..3).map(|i| req(i, 1.0)).collect();
        let a = place_cloud(&reqs, &g).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|x| x.host == 2));
        assert!(place_cloud(&[], &g).unwrap().is_empty());
    }

    #[test]
    fn ample_ingress_self_hosts() {
        let g = star(&[10.0, 10.0], &[1.0]);
        let mut loads = empty_loads(&g);
        let p = place_first_fit(&[req(0, 1.0)], &g, &mut loads, 0.95, true);
        assert_eq!(p.assignments, vec![Assignment { request: 0, host: 0 }]);
    }

    #[test]
    fn full_neighbors_go_to_cloud() {
        let g = star(&[1.0, 1.0], &[1.0]);
        let mut loads = empty_loads(&g);
        let p = place_first_fit(&[req(0, 2.0)], &g, &mut loads, 0.95, true);
        assert_eq!(p.assignments, vec![Assignment { request: 0, host: 2 }]);
    }

    #[test]
    fn picks_first_neighbor_with_room() {
        // neighbor 1 at 2 ms is too small, neighbor 2 at 5 ms fits
        let g = star(&[1.0, 1.0, 10.0], &[2.0, 5.0]);
        let mut loads = empty_loads(&g);
        let p = place_first_fit(&[req(0, 3.0)], &g, &mut loads, 0.95, true);
        assert_eq!(p.assignments, vec![Assignment { request: 0, host: 2 }]);
        assert_eq!(first_fit_candidates(&g, 0, true), vec![0, 1, 2]);
        assert_eq!(first_fit_candidates(&g, 0, false), vec![1, 2]);
    }

    #[test]
    fn cloud_full_leaves_unhosted() {
        let g = star(&[1.0], &[]);
        let mut loads = empty_loads(&g);
        let p = place_first_fit(&[req(0, 390.0)], &g, &mut loads, 0.95, true);
        assert!(p.assignments.is_empty());
        assert_eq!(p.unhosted, vec![0]);
    }
}
